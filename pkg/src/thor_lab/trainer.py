"""Decoupled multi-agent PPO on the planar humanoid.

Three actor-critic agents (lower body, waist, upper body) act in one shared
environment. Each agent keeps its own parameters, reward stream, advantages
and optimizer; the only coupling is the action-magnitude penalty that enters
the summed loss. A ``monolithic`` architecture (one agent over all six
joints, summed reward) is available for ablations.

Loss sign convention: every reported loss is to be *minimized*,
``loss_i = -clip_objective + c_v * value_mse - c_e * entropy`` and
``total = sum_i loss_i + lambda_c * C``.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from thor_lab import __version__
from thor_lab.config import RunConfig, load_resolved
from thor_lab.netcore import (AdamState, GaussianPolicy, LOG_STD_MAX, LOG_STD_MIN, Mlp,
                              NonFiniteGradientError, adam_step, clip_by_global_norm,
                              gaussian_entropy, log_prob_from_mean)
from thor_lab.sim import AGENT_NAMES, AGENT_SLICES, DQ_OBS_SCALE, N_JOINTS, OBS_DIM, PRIV_DIM, VecHumanoidEnv

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class RolloutError(RuntimeError):
    pass


class CheckpointError(Exception):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


# --------------------------------------------------------------------------- policy bundle

@dataclass
class Agent:
    name: str
    action_slice: slice
    actor: GaussianPolicy
    critic: Mlp
    actor_opt: AdamState
    critic_opt: AdamState

    def actor_params(self):
        return self.actor.mean.params + [self.actor.log_std]

    def copy(self) -> "Agent":
        return copy.deepcopy(self)


class PolicyBundle:
    """Independent actor-critic agents; actions concatenate as [lower | waist | upper]."""

    def __init__(self, agents: list[Agent], architecture: str = "decoupled"):
        self.agents = agents
        self.architecture = architecture

    @classmethod
    def create(cls, hidden, rng: np.random.Generator, lr: float = 5e-4,
               init_log_std: float = -1.0, architecture: str = "decoupled") -> "PolicyBundle":
        if architecture == "decoupled":
            layout = list(zip(AGENT_NAMES, AGENT_SLICES))
        else:
            layout = [("whole", slice(0, N_JOINTS))]
        agents = []
        for name, sl in layout:
            dim = sl.stop - sl.start
            actor = GaussianPolicy(Mlp([OBS_DIM, *hidden, dim], rng, out_gain=0.01),
                                   np.full(dim, init_log_std))
            critic = Mlp([OBS_DIM + PRIV_DIM, *hidden, 1], rng, out_gain=1.0)
            agents.append(Agent(name, sl, actor, critic,
                                AdamState.for_params(actor.mean.params + [actor.log_std], lr=lr),
                                AdamState.for_params(critic.params, lr=lr)))
        return cls(agents, architecture)

    @property
    def action_dim(self) -> int:
        return sum(a.action_slice.stop - a.action_slice.start for a in self.agents)

    def act(self, obs, deterministic: bool = True, rng: np.random.Generator | None = None):
        obs = np.atleast_2d(np.asarray(obs, dtype=float))
        out = np.zeros((obs.shape[0], N_JOINTS))
        for ag in self.agents:
            if deterministic:
                out[:, ag.action_slice] = ag.actor.mean(obs)
            else:
                out[:, ag.action_slice] = ag.actor.sample(obs, rng)[0]
        return out

    def __call__(self, obs, priv=None):
        return self.act(obs)

    def copy(self) -> "PolicyBundle":
        return PolicyBundle([a.copy() for a in self.agents], self.architecture)


def agent_rewards(rewards, bundle: PolicyBundle):
    """Reward stream per agent from the (…, 3) per-part rewards."""
    if bundle.architecture == "decoupled":
        return [rewards[..., i] for i in range(3)]
    return [rewards.sum(axis=-1)]


# --------------------------------------------------------------------------- rollouts & GAE

@dataclass
class AgentRollout:
    obs: np.ndarray            # (T, N, OBS_DIM), shared between agents
    priv: np.ndarray           # (T, N, PRIV_DIM)
    actions: np.ndarray        # (T, N, act_dim)
    log_probs: np.ndarray      # (T, N)
    values: np.ndarray         # (T, N)
    rewards: np.ndarray        # (T, N)
    dones: np.ndarray          # (T, N)
    last_values: np.ndarray    # (N,)
    advantages: np.ndarray = None
    returns: np.ndarray = None

    @property
    def length(self) -> int:
        return self.rewards.shape[0]


def compute_gae(rewards, values, dones, last_value, gamma: float, lam: float):
    """Backward recursion for GAE; arrays are (T, ...) and ``last_value`` bootstraps step T."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    notdone = 1.0 - np.asarray(dones, dtype=float)
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    running = np.zeros_like(rewards[0])
    next_value = np.asarray(last_value, dtype=float)
    for t in reversed(range(T)):
        delta = rewards[t] + gamma * next_value * notdone[t] - values[t]
        running = delta + gamma * lam * notdone[t] * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


def gae_bruteforce(rewards, values, dones, last_value, gamma: float, lam: float):
    """O(T^2) reference: explicit discounted sum of TD residuals, cut at episode ends."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    T = len(rewards)
    v_next = np.append(values[1:], last_value)
    deltas = [rewards[t] + (0.0 if dones[t] else gamma * v_next[t]) - values[t] for t in range(T)]
    adv = np.zeros(T)
    for t in range(T):
        total, w = 0.0, 1.0
        for l in range(t, T):
            total += w * deltas[l]
            if dones[l]:
                break
            w *= gamma * lam
        adv[t] = total
    return adv, adv + values


def torque_regularizer(actions_l, actions_w, actions_u):
    """Mean over the horizon of the summed squared action norms of the three agents."""
    parts = [np.asarray(a, dtype=float) for a in (actions_l, actions_w, actions_u)]
    T = parts[0].shape[0]
    return float(sum(np.sum(p * p) for p in parts) / T)


def curriculum_schedule(iteration: int, config) -> int:
    """Stage 1 (bounded forces) before the switch iteration, stage 2 from then on."""
    switch = config.train.curriculum_switch if hasattr(config, "train") else config.curriculum_switch
    return 1 if iteration < switch else 2


# --------------------------------------------------------------------------- losses

@dataclass
class LossTerms:
    loss: float
    surrogate: float
    value_loss: float
    entropy: float
    reg: float
    kl: float
    clip_frac: float


def clipped_surrogate(ratio, adv, clip: float):
    """Per-sample ``min(r*A, clip(r, 1-eps, 1+eps)*A)`` and its derivative in ``r``."""
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv
    surr = np.minimum(unclipped, clipped)
    d_ratio = np.where(unclipped <= clipped, adv, 0.0)
    return surr, d_ratio


class RegularizerSpec:
    """Maps mean actions to the per-sample quantity whose squared norm is penalized."""

    def __init__(self, mode: str = "action", config: RunConfig | None = None):
        self.mode = mode
        if mode == "pd_torque":
            s = config.sim
            self.nominal = np.asarray(s.nominal_pose)
            self.kp = np.asarray(s.kp)
            self.kd = np.asarray(s.kd)
            self.scale = np.asarray(s.action_scale)
            self.tau_lim = np.asarray(s.torque_limit)

    def value_and_grad(self, mu, obs, sl: slice):
        """Return (sum over batch of squared norms, d/d mu)."""
        if self.mode == "action":
            return float(np.sum(mu * mu)), 2.0 * mu
        q = obs[:, 0:6][:, sl] + self.nominal[sl]
        dq = obs[:, 6:12][:, sl] / DQ_OBS_SCALE
        tau = self.kp[sl] * (self.nominal[sl] + self.scale[sl] * mu - q) - self.kd[sl] * dq
        tn = tau / self.tau_lim[sl]
        return float(np.sum(tn * tn)), 2.0 * tn / self.tau_lim[sl] * self.kp[sl] * self.scale[sl]


def agent_loss(batch: dict, agent: Agent, clip: float, c_v: float, c_e: float, lambda_c: float = 0.0,
               reg: RegularizerSpec | None = None, adv_eps: float = 1e-8, normalize: bool = True):
    """Minimization loss of one agent on one minibatch plus gradients.

    ``batch`` holds ``obs``, ``critic_in``, ``actions``, ``old_log_probs``,
    ``advantages`` and ``returns``. The ``lambda_c`` term is this agent's
    share of the action penalty over the same minibatch. Returns
    ``(LossTerms, actor_grads, critic_grads)``; actor gradients are ordered
    like ``agent.actor_params()``.
    """
    reg = reg or RegularizerSpec()
    obs, actions = batch["obs"], batch["actions"]
    B = obs.shape[0]
    adv = batch["advantages"]
    if normalize:
        adv = (adv - adv.mean()) / (adv.std() + adv_eps)

    mu, a_cache = agent.actor.mean.forward(obs)
    ls_raw = agent.actor.log_std
    ls = np.clip(ls_raw, LOG_STD_MIN, LOG_STD_MAX)
    new_lp = log_prob_from_mean(mu, ls, actions)
    log_ratio = new_lp - batch["old_log_probs"]
    ratio = np.exp(log_ratio)
    if not np.all(np.isfinite(ratio)):
        raise FloatingPointError("non-finite probability ratio")
    surr, d_ratio = clipped_surrogate(ratio, adv, clip)
    entropy = gaussian_entropy(ls)

    v, c_cache = agent.critic.forward(batch["critic_in"])
    v = v[:, 0]
    err = v - batch["returns"]
    value_loss = float(np.mean(err * err))

    reg_sum, reg_grad = reg.value_and_grad(mu, obs, agent.action_slice)
    reg_val = reg_sum / B

    loss = -float(np.mean(surr)) + c_v * value_loss - c_e * entropy + lambda_c * reg_val

    # d loss / d log_prob per sample
    d_lp = -(d_ratio * ratio) / B
    inv_var = np.exp(-2.0 * ls)
    diff = actions - mu
    d_mu = d_lp[:, None] * diff * inv_var + lambda_c * reg_grad / B
    d_ls = (d_lp[:, None] * (diff * diff * inv_var - 1.0)).sum(axis=0) - c_e
    d_ls = np.where((ls_raw > LOG_STD_MIN) & (ls_raw < LOG_STD_MAX), d_ls, 0.0)
    actor_grads = agent.actor.mean.backward(a_cache, d_mu) + [d_ls]
    critic_grads = agent.critic.backward(c_cache, (c_v * 2.0 * err / B)[:, None])

    kl = float(np.mean((ratio - 1.0) - log_ratio))
    clip_frac = float(np.mean(np.abs(ratio - 1.0) > clip))
    terms = LossTerms(loss=loss, surrogate=float(np.mean(surr)), value_loss=value_loss,
                      entropy=entropy, reg=reg_val, kl=kl, clip_frac=clip_frac)
    return terms, actor_grads, critic_grads


def _apply_grads(agent: Agent, actor_grads, critic_grads, max_grad_norm: float):
    grads, _ = clip_by_global_norm(actor_grads + critic_grads, max_grad_norm)
    n_actor = len(actor_grads)
    adam_step(agent.actor_opt, agent.actor_params(), grads[:n_actor])
    adam_step(agent.critic_opt, agent.critic.params, grads[n_actor:])
    agent.actor.mean.version += 1
    agent.critic.version += 1


def flatten_rollout(ro: AgentRollout) -> dict:
    T, N = ro.rewards.shape
    obs = ro.obs.reshape(T * N, -1)
    return {
        "obs": obs,
        "critic_in": np.concatenate([obs, ro.priv.reshape(T * N, -1)], axis=-1),
        "actions": ro.actions.reshape(T * N, -1),
        "old_log_probs": ro.log_probs.reshape(-1),
        "advantages": ro.advantages.reshape(-1),
        "returns": ro.returns.reshape(-1),
    }


def minibatch_orders(rng: np.random.Generator, n_samples: int, epochs: int, num_minibatches: int):
    """Shared minibatch index sets, one permutation per epoch."""
    size = n_samples // num_minibatches
    out = []
    for _ in range(epochs):
        perm = rng.permutation(n_samples)
        out.extend(perm[k * size:(k + 1) * size] for k in range(num_minibatches))
    return out


def update_agent(agent: Agent, flat: dict, orders, tcfg, reg: RegularizerSpec, on_minibatch=None):
    """Run every minibatch for one agent; returns the per-minibatch LossTerms."""
    history = []
    for k, idx in enumerate(orders):
        mb = {key: val[idx] for key, val in flat.items()}
        try:
            terms, ga, gc = agent_loss(mb, agent, tcfg.clip, tcfg.c_v, tcfg.c_e, tcfg.lambda_c, reg,
                                       tcfg.adv_eps)
        except FloatingPointError as exc:
            log.warning("agent %s: skipping minibatch %d (%s)", agent.name, k, exc)
            continue
        if not math.isfinite(terms.loss):
            raise NonFiniteGradientError(f"agent {agent.name}: non-finite loss")
        _apply_grads(agent, ga, gc, tcfg.max_grad_norm)
        history.append(terms)
        if on_minibatch is not None:
            on_minibatch(agent, k, terms)
    return history


@dataclass
class UpdateStats:
    agent_loss: dict
    reg: float
    lambda_c: float
    total_loss: float
    kl: float
    clip_frac: float
    minibatch_totals: list = field(default_factory=list)
    aborted: bool = False


def total_update(bundle: PolicyBundle, rollouts: list[AgentRollout], config: RunConfig,
                 rng: np.random.Generator) -> UpdateStats:
    """One PPO update of every agent against ``sum_i loss_i + lambda_c * C``.

    The action penalty C is separable across agents, so each agent receives
    exactly its own share of the gradient. On a non-finite loss or gradient
    the whole bundle is restored and ``aborted`` is set.
    """
    tcfg = config.train
    reg = RegularizerSpec(tcfg.regularizer, config)
    n_samples = rollouts[0].rewards.size
    orders = minibatch_orders(rng, n_samples, tcfg.epochs, tcfg.num_minibatches)
    backup = [a.copy() for a in bundle.agents]
    histories = {}
    try:
        for agent, ro in zip(bundle.agents, rollouts):
            histories[agent.name] = update_agent(agent, flatten_rollout(ro), orders, tcfg, reg)
    except NonFiniteGradientError as exc:
        log.error("update aborted: %s; restoring parameters", exc)
        bundle.agents[:] = backup
        return UpdateStats({a.name: float("nan") for a in bundle.agents}, float("nan"),
                           tcfg.lambda_c, float("nan"), float("nan"), float("nan"), aborted=True)

    per_agent = {}
    mb_totals = []
    n_mb = min(len(h) for h in histories.values()) if histories else 0
    for k in range(n_mb):
        losses = [histories[a.name][k].loss - tcfg.lambda_c * histories[a.name][k].reg
                  for a in bundle.agents]
        c_k = sum(histories[a.name][k].reg for a in bundle.agents)
        mb_totals.append((losses, c_k, sum(losses) + tcfg.lambda_c * c_k))
    for a in bundle.agents:
        h = histories[a.name]
        per_agent[a.name] = float(np.mean([t.loss - tcfg.lambda_c * t.reg for t in h])) if h else float("nan")
    reg_mean = float(np.mean([m[1] for m in mb_totals])) if mb_totals else float("nan")
    total = sum(per_agent.values()) + tcfg.lambda_c * reg_mean
    kls = [t.kl for h in histories.values() for t in h]
    cfs = [t.clip_frac for h in histories.values() for t in h]
    return UpdateStats(per_agent, reg_mean, tcfg.lambda_c, total,
                       float(np.mean(kls)) if kls else float("nan"),
                       float(np.mean(cfs)) if cfs else float("nan"), mb_totals)


# --------------------------------------------------------------------------- training loop

LOG_FIELDS_HEAD = ["iteration", "stage"]


class Trainer:
    """Owns the environments, the bundle, the RNG and the iteration counter."""

    def __init__(self, config: RunConfig, bundle: PolicyBundle | None = None):
        self.config = config
        t = config.train
        self.rng = np.random.default_rng([config.seed, 7919])
        self.bundle = bundle or PolicyBundle.create(t.hidden, self.rng, t.lr, t.init_log_std, t.architecture)
        self.env = VecHumanoidEnv(config, t.num_envs, auto_reset=True)
        self.iteration = 0
        self.stage = curriculum_schedule(0, config)
        self.batch = self.env.reset(config.seed, self.stage)
        self.completed = deque(maxlen=100)
        self.termination_counts = np.zeros(5, dtype=np.int64)
        self.history: list[dict] = []

    # ----- rollouts
    def collect_rollouts(self, T: int | None = None) -> list[AgentRollout]:
        T = T or self.config.train.rollout_length
        n = self.env.n
        obs_buf = np.zeros((T, n, OBS_DIM))
        priv_buf = np.zeros((T, n, PRIV_DIM))
        rew_buf = np.zeros((T, n, 3))
        done_buf = np.zeros((T, n))
        per_agent = [dict(act=np.zeros((T, n, a.actor.act_dim)), lp=np.zeros((T, n)), val=np.zeros((T, n)))
                     for a in self.bundle.agents]
        b = self.batch
        for t in range(T):
            if not (np.all(np.isfinite(b.obs)) and np.all(np.isfinite(b.priv))):
                raise RolloutError(f"non-finite observation at rollout step {t}")
            obs_buf[t], priv_buf[t] = b.obs, b.priv
            critic_in = np.concatenate([b.obs, b.priv], axis=-1)
            actions = np.zeros((n, N_JOINTS))
            for ag, store in zip(self.bundle.agents, per_agent):
                a, lp = ag.actor.sample(b.obs, self.rng)
                store["act"][t], store["lp"][t] = a, lp
                store["val"][t] = ag.critic(critic_in)[:, 0]
                actions[:, ag.action_slice] = a
            b = self.env.step(actions)
            rew_buf[t] = b.rewards
            done_buf[t] = b.done
            for L in b.episode_length[b.done]:
                self.completed.append(int(L))
            self.termination_counts += np.bincount(b.reason[b.done], minlength=5)
        self.batch = b
        last_in = np.concatenate([b.obs, b.priv], axis=-1)
        streams = agent_rewards(rew_buf, self.bundle)
        out = []
        for ag, store, r in zip(self.bundle.agents, per_agent, streams):
            out.append(AgentRollout(obs_buf, priv_buf, store["act"], store["lp"], store["val"], r,
                                    done_buf, ag.critic(last_in)[:, 0]))
        self.last_part_rewards = rew_buf
        return out

    def mean_episode_length(self) -> float:
        if self.completed:
            return float(np.mean(self.completed))
        return float(np.mean(self.env.t))

    # ----- one iteration
    def train_iteration(self) -> dict:
        t0 = time.perf_counter()
        cfg = self.config
        stage = curriculum_schedule(self.iteration, cfg)
        if stage != self.stage:
            self.stage = stage
            self.env.set_stage(stage)
            self.batch = self.env.reset(cfg.seed + 1_000_003 * stage, stage)
        rollouts = self.collect_rollouts()
        for ro in rollouts:
            ro.advantages, ro.returns = compute_gae(ro.rewards, ro.values, ro.dones, ro.last_values,
                                                    cfg.train.gamma, cfg.train.lam)
        stats = total_update(self.bundle, rollouts, cfg, self.rng)
        self.iteration += 1
        part = self.last_part_rewards.mean(axis=(0, 1))
        row = {"iteration": self.iteration, "stage": stage,
               "reward_lower": float(part[0]), "reward_waist": float(part[1]),
               "reward_upper": float(part[2])}
        for name, val in stats.agent_loss.items():
            row[f"loss_{name}"] = val
        row.update(reg_C=stats.reg, total_loss=stats.total_loss, kl=stats.kl,
                   clip_frac=stats.clip_frac, mean_episode_length=self.mean_episode_length(),
                   wall_time=time.perf_counter() - t0)
        self.last_stats = stats
        self.history.append(row)
        return row

    def train(self, iterations: int, log_path: str | None = None, stamp: str = "",
              checkpoint_path: str | None = None, on_iteration=None):
        """Run ``iterations`` more iterations, appending one CSV row per iteration."""
        fh = writer = None
        if log_path:
            new = not _exists_nonempty(log_path)
            fh = open(log_path, "a", newline="")
            if new and stamp:
                fh.write(f"# {stamp}\n")
        try:
            for _ in range(iterations):
                row = self.train_iteration()
                if fh is not None:
                    if writer is None:
                        writer = csv.DictWriter(fh, fieldnames=list(row))
                        if new:
                            writer.writeheader()
                            new = False
                    writer.writerow({k: _fmt(v) for k, v in row.items()})
                    fh.flush()
                every = self.config.train.checkpoint_every
                if checkpoint_path and every and self.iteration % every == 0:
                    save_checkpoint(self, checkpoint_path)
                if on_iteration is not None:
                    on_iteration(self, row)
        finally:
            if fh is not None:
                fh.close()
        return self.history

    # ----- state for checkpoints
    def get_state(self) -> dict:
        return {"iteration": self.iteration, "stage": self.stage,
                "rng": self.rng.bit_generator.state, "env": self.env.get_state(),
                "batch": {"obs": self.batch.obs.tolist(), "priv": self.batch.priv.tolist()},
                "completed": list(self.completed)}

    def set_state(self, state: dict):
        self.iteration = int(state["iteration"])
        self.stage = int(state["stage"])
        self.rng.bit_generator.state = state["rng"]
        self.env.set_state(state["env"])
        self.batch.obs = np.asarray(state["batch"]["obs"], dtype=float)
        self.batch.priv = np.asarray(state["batch"]["priv"], dtype=float)
        self.completed = deque(state["completed"], maxlen=100)


def _exists_nonempty(path) -> bool:
    import os
    return os.path.exists(path) and os.path.getsize(path) > 0


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


# --------------------------------------------------------------------------- checkpoints

def _net_doc(net: Mlp) -> dict:
    return {"widths": net.widths, "params": [p.reshape(-1).tolist() for p in net.params]}


def _adam_doc(st: AdamState) -> dict:
    return {"t": st.t, "lr": st.lr, "beta1": st.beta1, "beta2": st.beta2, "eps": st.eps,
            "m": [x.reshape(-1).tolist() for x in st.m], "v": [x.reshape(-1).tolist() for x in st.v]}


def _unflatten(flat_lists, shapes, what):
    if len(flat_lists) != len(shapes):
        raise CheckpointShapeError(f"{what}: expected {len(shapes)} arrays, found {len(flat_lists)}")
    out = []
    for lst, shape in zip(flat_lists, shapes):
        arr = np.asarray(lst, dtype=np.float64)
        if arr.size != int(np.prod(shape)):
            raise CheckpointShapeError(f"{what}: array of {arr.size} values cannot take shape {shape}")
        out.append(arr.reshape(shape))
    return out


def _net_from_doc(doc, what) -> Mlp:
    widths = [int(w) for w in doc["widths"]]
    shell = Mlp.__new__(Mlp)
    shell.widths = widths
    params = _unflatten(doc["params"], Mlp.param_shapes(shell), what)
    return Mlp(widths, params=params)


def _adam_from_doc(doc, shapes, what) -> AdamState:
    return AdamState(shapes=shapes, lr=doc["lr"], beta1=doc["beta1"], beta2=doc["beta2"], eps=doc["eps"],
                     t=int(doc["t"]), m=_unflatten(doc["m"], shapes, what + ".m"),
                     v=_unflatten(doc["v"], shapes, what + ".v"))


def checkpoint_document(trainer: Trainer) -> dict:
    """Checkpoint layout (field order fixed): version, tool, config_hash, iteration,
    architecture, config, agents[name, action_slice, actor, log_std, critic,
    actor_opt, critic_opt], trainer_state."""
    cfg = trainer.config
    agents = []
    for a in trainer.bundle.agents:
        agents.append({
            "name": a.name,
            "action_slice": [a.action_slice.start, a.action_slice.stop],
            "actor": _net_doc(a.actor.mean),
            "log_std": a.actor.log_std.tolist(),
            "critic": _net_doc(a.critic),
            "actor_opt": _adam_doc(a.actor_opt),
            "critic_opt": _adam_doc(a.critic_opt),
        })
    return {
        "version": CHECKPOINT_VERSION,
        "tool": f"thor_lab {__version__}",
        "config_hash": cfg.config_hash(),
        "iteration": trainer.iteration,
        "architecture": trainer.bundle.architecture,
        "config": cfg.to_dict(),
        "agents": agents,
        "trainer_state": trainer.get_state(),
    }


def save_checkpoint(trainer: Trainer, path: str):
    doc = checkpoint_document(trainer)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
    import os
    os.replace(tmp, path)


def load_checkpoint(path: str, config: RunConfig | None = None) -> Trainer:
    """Rebuild a Trainer (bundle, optimizers, RNG and env state) from ``path``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointCorruptError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise CheckpointCorruptError(f"{path}: not a checkpoint document")
    if doc["version"] != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"{path}: version {doc['version']} != {CHECKPOINT_VERSION}")
    try:
        cfg = config or load_resolved(doc["config"])
        agents = []
        for ad in doc["agents"]:
            sl = slice(*ad["action_slice"])
            mean = _net_from_doc(ad["actor"], ad["name"] + ".actor")
            critic = _net_from_doc(ad["critic"], ad["name"] + ".critic")
            dim = sl.stop - sl.start
            if mean.widths[0] != OBS_DIM or mean.widths[-1] != dim or critic.widths[0] != OBS_DIM + PRIV_DIM:
                raise CheckpointShapeError(f"{ad['name']}: widths inconsistent with the observation layout")
            log_std = np.asarray(ad["log_std"], dtype=float)
            if log_std.shape != (dim,):
                raise CheckpointShapeError(f"{ad['name']}: log_std has shape {log_std.shape}")
            actor = GaussianPolicy(mean, log_std)
            a_shapes = [p.shape for p in mean.params] + [(dim,)]
            c_shapes = [p.shape for p in critic.params]
            agents.append(Agent(ad["name"], sl, actor, critic,
                                _adam_from_doc(ad["actor_opt"], a_shapes, ad["name"] + ".actor_opt"),
                                _adam_from_doc(ad["critic_opt"], c_shapes, ad["name"] + ".critic_opt")))
        bundle = PolicyBundle(agents, doc["architecture"])
        trainer = Trainer(cfg, bundle)
        trainer.set_state(doc["trainer_state"])
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointCorruptError(f"{path}: {exc}") from exc
    return trainer
