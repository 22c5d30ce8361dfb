"""Measurement protocols: peak sustainable force, force-vs-tilt sweeps and ablations.

A *policy* here is any callable ``policy(obs, priv) -> actions`` on batched
arrays; a :class:`~thor_lab.trainer.PolicyBundle` qualifies (it ignores
``priv`` and returns its mean action). Trials run in a vectorized env where
every instance replays a single-instance reset with its own seed, so a batch
of trials gives the same numbers as running them one at a time.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from thor_lab.config import RunConfig
from thor_lab.quasistatics import HandForce, expected_tilt, expected_tilt_array
from thor_lab.sim import DIRECTIONS, N_JOINTS, Termination, VecHumanoidEnv, beta_actual
from thor_lab.trainer import Trainer

VARIANTS = ("full", "fat2_only", "decoupled_only", "neither")


@dataclass(frozen=True)
class ForceTrial:
    direction: str
    seed: int
    ramp_rate: float
    hold_seconds: float
    peak: float
    reason: str
    min_tilt: float = math.pi / 2

    def __post_init__(self):
        if not self.peak >= 0:
            raise ValueError("peak must be non-negative")


@dataclass(frozen=True)
class SweepRecord:
    force: float
    tilt: float
    predicted_tilt: float
    survived: bool


@dataclass(frozen=True)
class TrialOutcome:
    sustained: np.ndarray
    reason: np.ndarray
    fail_force: np.ndarray
    min_tilt: np.ndarray


# --------------------------------------------------------------------------- scripted policies

class OraclePolicy:
    """Scripted balance: lean the ankle by the statically predicted tilt.

    Reads the hand force from the privileged vector, turns the ankle so the
    torso sits at the predicted tilt and pre-compensates every joint for the
    gravity and hand-force load at the current pose.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.env = VecHumanoidEnv(config, 1)

    def __call__(self, obs, priv):
        obs, priv = np.atleast_2d(obs), np.atleast_2d(priv)
        env, c = self.env, self.config.sim
        scale = c.force_obs_scale
        fx = priv[:, 3] / scale
        v = -priv[:, 4] / scale
        mag = np.hypot(fx, v)
        angle = np.arctan2(v, np.abs(fx))
        sign = np.where(fx < 0, -1.0, 1.0)
        beta = expected_tilt_array(self.config.geometry, mag, angle, c.beta_lim)
        q_target = np.tile(env.nominal, (len(obs), 1))
        q_target[:, 0] += -sign * (math.pi / 2 - beta)
        q = obs[:, :N_JOINTS] + env.nominal
        pts, coms, _ = env.body.forward(q)
        load = env.body.load_torques(pts, coms, fx, v)
        q_des = q_target - load / env.kp
        return (q_des - env.nominal) / env.action_scale


class ConstantPolicy:
    """Emits the same action everywhere (``ones`` tips the body over at once)."""

    def __init__(self, action):
        self.action = np.asarray(action, dtype=float).reshape(N_JOINTS)

    def __call__(self, obs, priv=None):
        return np.tile(self.action, (np.atleast_2d(obs).shape[0], 1))


# --------------------------------------------------------------------------- trials

def _eval_config(config: RunConfig, steps: int) -> RunConfig:
    """Copy of ``config`` whose episode limit cannot end a trial early."""
    sim = dataclasses.replace(config.sim, max_episode_steps=int(steps) + 10)
    return dataclasses.replace(config, sim=sim)


def run_trials(policy, config: RunConfig, direction: str, magnitudes, seeds,
               ramp_rate: float | None = None, hold_seconds: float | None = None,
               angle: float = 0.0) -> TrialOutcome:
    """Ramp each instance's force to its magnitude, then hold it.

    A trial is sustained when the episode survives the whole hold. For failed
    trials ``fail_force`` is the magnitude being applied when it ended.
    """
    e = config.eval
    ramp_rate = e.ramp_rate if ramp_rate is None else ramp_rate
    hold_seconds = e.hold_seconds if hold_seconds is None else hold_seconds
    sign = DIRECTIONS[direction]
    mags = np.asarray(magnitudes, dtype=float)
    n = len(mags)
    dt = config.sim.policy_dt
    per_step = ramp_rate * dt
    hold = int(round(hold_seconds / dt))
    ramp_steps = np.ceil(mags / per_step).astype(int)
    total = int(ramp_steps.max()) + hold
    env = VecHumanoidEnv(_eval_config(config, total), n, auto_reset=False)
    batch = env.reset(0, stage=1, instance_seeds=list(seeds))
    alive = np.ones(n, dtype=bool)
    reason = np.zeros(n, dtype=np.int64)
    fail_force = np.full(n, np.nan)
    min_tilt = np.full(n, math.pi / 2)
    end = ramp_steps + hold
    for k in range(1, total + 1):
        cur = np.minimum(mags, per_step * k)
        env.set_external_force(cur, angle, sign)
        actions = np.asarray(policy(batch.obs, batch.priv), dtype=float)
        # finished instances are frozen: they keep stepping with zero force and no effect on results
        env.done[:] = False
        batch = env.step(actions)
        tilt = beta_actual(batch.priv[:, 2], -sign)
        live_now = alive & (k <= end)
        min_tilt = np.where(live_now, np.minimum(min_tilt, tilt), min_tilt)
        failed = live_now & batch.done & (batch.reason != Termination.TIMEOUT)
        reason[failed] = batch.reason[failed]
        fail_force[failed] = cur[failed]
        alive &= ~failed
        if not alive.any():
            break
    return TrialOutcome(sustained=alive, reason=reason, fail_force=fail_force, min_tilt=min_tilt)


def measure_peak_forces(policy, config: RunConfig, direction: str, seeds=None,
                        ramp_rate: float | None = None, hold_seconds: float | None = None,
                        resolution: float | None = None, max_force: float | None = None):
    """Peak sustained force per seed: one open-ended ramp, then bisection.

    Each seed is bracketed by a sustained lower bound (zero at first) and the
    force at which the ramp failed, then bisected down to ``resolution``.
    Returns a list of :class:`ForceTrial`.
    """
    e = config.eval
    seeds = list(e.seeds if seeds is None else seeds)
    ramp_rate = e.ramp_rate if ramp_rate is None else ramp_rate
    hold_seconds = e.hold_seconds if hold_seconds is None else hold_seconds
    resolution = e.resolution if resolution is None else resolution
    max_force = e.max_force if max_force is None else max_force
    n = len(seeds)
    kw = dict(ramp_rate=ramp_rate, hold_seconds=hold_seconds)

    zero = run_trials(policy, config, direction, np.zeros(n), seeds, **kw)
    ramp = run_trials(policy, config, direction, np.full(n, max_force), seeds, **kw)
    lo = np.zeros(n)
    hi = np.where(ramp.sustained, max_force, ramp.fail_force)
    hi_reason = ramp.reason.copy()
    lo_tilt = zero.min_tilt.copy()
    active = zero.sustained & ~ramp.sustained
    while True:
        todo = active & (hi - lo > resolution)
        if not todo.any():
            break
        mid = np.where(todo, 0.5 * (lo + hi), lo)
        out = run_trials(policy, config, direction, mid, seeds, **kw)
        up = todo & out.sustained
        down = todo & ~out.sustained
        lo = np.where(up, mid, lo)
        lo_tilt = np.where(up, out.min_tilt, lo_tilt)
        hi = np.where(down, mid, hi)
        hi_reason = np.where(down, out.reason, hi_reason)

    trials = []
    for i, s in enumerate(seeds):
        if not zero.sustained[i]:
            peak, why, tilt = 0.0, f"falls_at_zero:{Termination(int(zero.reason[i])).name.lower()}", zero.min_tilt[i]
        elif ramp.sustained[i]:
            peak, why, tilt = max_force, "max_force", ramp.min_tilt[i]
        else:
            peak, why, tilt = float(lo[i]), Termination(int(hi_reason[i])).name.lower(), lo_tilt[i]
        trials.append(ForceTrial(direction, int(s), ramp_rate, hold_seconds, float(peak), why, float(tilt)))
    return trials


def mean_and_se(values):
    """Mean and standard error of the mean (zero spread for a single value)."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


# --------------------------------------------------------------------------- tilt sweep

def tilt_force_sweep(policy, config: RunConfig, forces=None, direction: str | None = None,
                     seed: int = 0, angle: float = 0.0):
    """Constant-force episodes, one per force, recording the settled torso tilt.

    Each force is ramped in at the configured rate, then held for
    ``sweep_steps``; the tilt is averaged over the steps after
    ``sweep_settle_steps``. Failed episodes keep the tilt averaged so far (or
    the last tilt seen) and are marked ``survived=False``.
    """
    e = config.eval
    forces = np.asarray(e.sweep_forces if forces is None else forces, dtype=float)
    if np.any(np.diff(forces) < 0):
        raise ValueError("forces must be ascending")
    direction = direction or e.sweep_direction
    sign = DIRECTIONS[direction]
    n = len(forces)
    dt = config.sim.policy_dt
    per_step = e.ramp_rate * dt
    ramp_steps = np.ceil(forces / per_step).astype(int)
    start = ramp_steps + e.sweep_settle_steps
    end = ramp_steps + e.sweep_steps
    total = int(end.max())
    env = VecHumanoidEnv(_eval_config(config, total), n, auto_reset=False)
    batch = env.reset(0, stage=1, instance_seeds=[seed] * n)
    alive = np.ones(n, dtype=bool)
    tilt_sum = np.zeros(n)
    tilt_cnt = np.zeros(n)
    last_tilt = np.full(n, math.pi / 2)
    for k in range(1, total + 1):
        env.set_external_force(np.minimum(forces, per_step * k), angle, sign)
        actions = np.asarray(policy(batch.obs, batch.priv), dtype=float)
        env.done[:] = False
        batch = env.step(actions)
        tilt = beta_actual(batch.priv[:, 2], -sign)
        rec = alive & (k <= end)
        last_tilt = np.where(rec, tilt, last_tilt)
        window = rec & (k > start)
        tilt_sum += np.where(window, tilt, 0.0)
        tilt_cnt += window
        alive &= ~(rec & batch.done & (batch.reason != Termination.TIMEOUT))
    records = []
    geom, lim = config.geometry, config.sim.beta_lim
    for i, f in enumerate(forces):
        tilt = tilt_sum[i] / tilt_cnt[i] if tilt_cnt[i] > 0 else last_tilt[i]
        pred = expected_tilt(geom, HandForce(float(f), angle, sign), lim).beta
        records.append(SweepRecord(float(f), float(tilt), float(pred), bool(alive[i])))
    return records


def sweep_statistics(records):
    """Spearman rank correlation (tilt vs force) and mean |tilt - prediction| over survivors."""
    kept = [r for r in records if r.survived]
    if len(kept) < 2:
        return float("nan"), float("nan")
    f = [r.force for r in kept]
    t = [r.tilt for r in kept]
    rho = spearmanr(f, t).statistic
    mae = float(np.mean([abs(r.tilt - r.predicted_tilt) for r in kept]))
    return float(rho), mae


# --------------------------------------------------------------------------- ablation

def ablation_config(config: RunConfig, variant: str) -> RunConfig:
    """Map an ablation variant onto config switches; ``full`` returns the config unchanged."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "full":
        return config
    train, sim = config.train, config.sim
    if variant in ("fat2_only", "neither"):
        train = dataclasses.replace(train, architecture="monolithic")
    if variant in ("decoupled_only", "neither"):
        sim = dataclasses.replace(sim, w_fat2_lower=0.0, w_fat2_waist=0.0)
    return dataclasses.replace(config, train=train, sim=sim)


@dataclass
class AblationResult:
    variant: str
    config_hash: str
    trials: list

    def peaks(self, direction: str | None = None):
        return [t.peak for t in self.trials if direction is None or t.direction == direction]


def ablation_run(config: RunConfig, variant: str, iterations: int | None = None,
                 directions=None, on_iteration=None) -> AblationResult:
    """Train one variant from the shared seed and budget, then measure its peak forces."""
    cfg = ablation_config(config, variant)
    iterations = config.eval.ablation_iterations if iterations is None else iterations
    trainer = Trainer(cfg)
    trainer.train(iterations, on_iteration=on_iteration)
    trials = []
    for d in directions or config.eval.directions:
        trials += measure_peak_forces(trainer.bundle, cfg, d)
    return AblationResult(variant, cfg.config_hash(), trials)


# --------------------------------------------------------------------------- CSV output

def _num(x: float) -> str:
    return repr(float(x))


def write_peak_csv(path, rows, stamp: str):
    """``rows`` are ``(variant, ForceTrial)`` pairs."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {stamp}\n")
        w = csv.writer(fh)
        w.writerow(["variant", "direction", "seed", "peak_N", "reason"])
        for variant, t in rows:
            w.writerow([variant, t.direction, t.seed, _num(t.peak), t.reason])


def write_sweep_csv(path, records, stamp: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {stamp}\n")
        w = csv.writer(fh)
        w.writerow(["force_N", "tilt_rad", "predicted_tilt_rad", "survived"])
        for r in records:
            w.writerow([_num(r.force), _num(r.tilt), _num(r.predicted_tilt), int(r.survived)])
