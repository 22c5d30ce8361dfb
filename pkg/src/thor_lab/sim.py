"""Planar quasi-static humanoid with a pinned foot and servo-driven joints.

Joint order is ``[ankle, knee, hip | waist | shoulder, elbow]``; the first
three belong to the lower-body agent, the fourth to the waist agent and the
last two to the upper-body agent. Joint angles are relative; link ``k`` has
absolute angle ``sum(q[:k+1])`` measured from vertical, positive toward +x.
The hand force is applied at the distal end of the forearm.

Each policy step runs ``substeps`` servo updates. Servo joints feel the PD
torque, gravity and the hand-force load, so the actor (which never sees the
force) can sense it through joint deflection. Balance is the quasi-static
zero-moment-point test against the foot's support interval.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from thor_lab.config import RunConfig, SimConfig
from thor_lab.quasistatics import BodyGeometry, expected_tilt_array, fat2_reward

N_JOINTS = 6
LOWER = slice(0, 3)
WAIST = slice(3, 4)
UPPER = slice(4, 6)
AGENT_SLICES = (LOWER, WAIST, UPPER)
AGENT_NAMES = ("lower", "waist", "upper")

OBS_DIM = 26
PRIV_DIM = 6
DQ_OBS_SCALE = 0.1

FORWARD, BACKWARD = 1, -1
DIRECTIONS = {"forward": FORWARD, "backward": BACKWARD}


class Termination(IntEnum):
    NONE = 0
    ZMP_EXIT = 1
    PITCH_LIMIT = 2
    SLIP = 3
    TIMEOUT = 4


class EpisodeDoneError(RuntimeError):
    pass


@dataclass(frozen=True)
class Command:
    v_lin_x: float
    mode: int
    root_height: float


@dataclass(frozen=True)
class Observation:
    q: np.ndarray
    dq: np.ndarray
    base_pitch_rate: float
    gravity_projection: np.ndarray
    prev_action: np.ndarray
    command: Command
    upper_targets: np.ndarray

    @classmethod
    def from_array(cls, obs, nominal):
        obs = np.asarray(obs, dtype=float)
        return cls(q=obs[0:6] + nominal, dq=obs[6:12] / DQ_OBS_SCALE,
                   base_pitch_rate=float(obs[12]), gravity_projection=obs[13:15].copy(),
                   prev_action=obs[15:21].copy(),
                   command=Command(float(obs[21]), int(round(obs[22])), float(obs[23])),
                   upper_targets=obs[24:26] + nominal[UPPER])


@dataclass(frozen=True)
class PrivilegedObs:
    base_lin_vel: np.ndarray
    torso_pitch: float
    hand_force: np.ndarray
    application_height: float

    @classmethod
    def from_array(cls, priv, force_scale):
        priv = np.asarray(priv, dtype=float)
        return cls(base_lin_vel=priv[0:2].copy(), torso_pitch=float(priv[2]),
                   hand_force=priv[3:5] / force_scale, application_height=float(priv[5]))


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    privileged: PrivilegedObs
    rewards: tuple
    done: bool
    termination_reason: Termination
    obs_array: np.ndarray
    priv_array: np.ndarray
    zmp_x: float


@dataclass
class StepBatch:
    """Vectorized step output; rows are environment instances."""

    obs: np.ndarray
    priv: np.ndarray
    rewards: np.ndarray
    done: np.ndarray
    reason: np.ndarray
    zmp_x: np.ndarray
    episode_length: np.ndarray


def pd_torque(q_des, q, dq, kp, kd, torque_limit=None):
    """PD servo law, clamped to the joint torque limit."""
    tau = np.asarray(kp) * (np.asarray(q_des) - np.asarray(q)) - np.asarray(kd) * np.asarray(dq)
    if torque_limit is not None:
        lim = np.asarray(torque_limit)
        tau = np.clip(tau, -lim, lim)
    return tau


def upper_target_params(rng: np.random.Generator, cfg: SimConfig):
    """Random sum-of-sinusoids parameters for the two arm joints (3 components each)."""
    weights = rng.dirichlet(np.ones(3), size=2)
    amps = cfg.upper_amplitude * weights
    freqs = rng.uniform(cfg.upper_freq_min, cfg.upper_freq_max, size=(2, 3))
    phases = rng.uniform(0.0, 2 * math.pi, size=(2, 3))
    return amps, freqs, phases


def _eval_upper(t, amps, freqs, phases, cfg: SimConfig):
    t = np.asarray(t, dtype=float)[..., None, None] * cfg.policy_dt
    wave = (amps * np.sin(2 * math.pi * freqs * t + phases)).sum(axis=-1)
    nominal = np.asarray(cfg.nominal_pose)[UPPER]
    lo, hi = np.asarray(cfg.joint_min)[UPPER], np.asarray(cfg.joint_max)[UPPER]
    return np.clip(nominal + wave, lo, hi)


def upper_targets(t, seed: int, cfg: SimConfig | None = None):
    """Procedural arm reference at step(s) ``t``, deterministic per seed."""
    cfg = cfg or SimConfig()
    amps, freqs, phases = upper_target_params(np.random.default_rng(seed), cfg)
    return _eval_upper(t, amps, freqs, phases, cfg)


# --------------------------------------------------------------------------- kinematics

class Body:
    """Chain geometry and mass distribution; all methods are batched over rows of ``q``."""

    def __init__(self, sim: SimConfig, geom: BodyGeometry):
        self.lengths = np.asarray(sim.link_lengths, dtype=float)
        self.masses = np.asarray(sim.link_masses, dtype=float)
        self.g = geom.gravity_accel
        self.weight = geom.weight
        self.foot_mass = geom.total_mass - self.masses.sum()
        self.suffix_mass = np.cumsum(self.masses[::-1])[::-1]

    def forward(self, q):
        """Joint points (N, 7, 2) from ankle to hand, link CoMs (N, 6, 2), absolute angles (N, 6)."""
        theta = np.cumsum(q, axis=-1)
        seg = np.stack([self.lengths * np.sin(theta), self.lengths * np.cos(theta)], axis=-1)
        pts = np.concatenate([np.zeros(q.shape[:-1] + (1, 2)), np.cumsum(seg, axis=-2)], axis=-2)
        coms = pts[..., :-1, :] + 0.5 * seg
        return pts, coms, theta

    def com_x(self, coms):
        return (coms[..., 0] * self.masses).sum(axis=-1) / (self.masses.sum() + self.foot_mass)

    def zmp_x(self, coms, hand, fx, v_load):
        """Multi-body ZMP: per-link gravity moments plus the hand force, over total vertical load."""
        moment = self.g * (coms[..., 0] * self.masses).sum(axis=-1) + fx * hand[..., 1] + v_load * hand[..., 0]
        return moment / (self.weight + v_load)

    def load_torques(self, pts, coms, fx, v_load):
        """Gravity plus hand-force torque on each joint, positive toward +x rotation."""
        mx = coms[..., 0] * self.masses
        suffix_mx = np.cumsum(mx[..., ::-1], axis=-1)[..., ::-1]
        joints = pts[..., :-1, :]
        tau_g = self.g * (suffix_mx - self.suffix_mass * joints[..., 0])
        hand = pts[..., -1:, :]
        tau_f = fx[..., None] * (hand[..., 1] - joints[..., 1]) + v_load[..., None] * (hand[..., 0] - joints[..., 0])
        return tau_g + tau_f

    def point_jacobian_rows(self, theta, upto):
        """d(point ``upto``)/dq as (N, 2, 6): only joints below the point contribute."""
        seg = self.lengths[:upto] * np.stack([np.cos(theta[..., :upto]), -np.sin(theta[..., :upto])], axis=-2)
        # joint j moves every segment k >= j below the point
        acc = np.cumsum(seg[..., ::-1], axis=-1)[..., ::-1]
        pad = np.zeros(theta.shape[:-1] + (2, N_JOINTS - upto))
        return np.concatenate([acc, pad], axis=-1)


# --------------------------------------------------------------------------- rewards

@dataclass
class RewardState:
    torso_pitch: np.ndarray
    base_vx: np.ndarray
    root_height: np.ndarray
    q: np.ndarray
    upper_ref: np.ndarray
    action: np.ndarray
    prev_action: np.ndarray
    cmd_vx: np.ndarray
    cmd_height: np.ndarray
    lean_sign: np.ndarray


@dataclass
class ForceState:
    magnitude: np.ndarray
    angle: np.ndarray
    sign: np.ndarray


def beta_actual(torso_pitch, lean_sign):
    """Tilt from the ground of a torso leaning away from the pull."""
    return math.pi / 2 - lean_sign * torso_pitch


def compute_rewards(state: RewardState, geom: BodyGeometry, f: ForceState, cfg: SimConfig,
                    terms: dict | None = None):
    """Per-agent rewards (lower, waist, upper), each an (N,) array.

    Every positive kernel lies in [0, weight]. Penalties are bounded because
    actions are clamped to [-1, 1] and joints to their limits.
    """
    beta_t = expected_tilt_array(geom, f.magnitude, f.angle, cfg.beta_lim)
    fat2 = np.asarray(fat2_reward(beta_t, beta_actual(state.torso_pitch, state.lean_sign), cfg.sigma_tilt))
    vel = np.exp(-(state.base_vx - state.cmd_vx) ** 2 / cfg.sigma_vel)
    height = np.exp(-(state.root_height - state.cmd_height) ** 2 / cfg.sigma_height)
    waist_nom = cfg.nominal_pose[3]
    waist = np.exp(-(state.q[:, 3] - waist_nom) ** 2 / cfg.sigma_waist)
    upper_err = ((state.q[:, UPPER] - state.upper_ref) ** 2).sum(axis=-1)
    upper = np.exp(-upper_err / cfg.sigma_upper)

    rate = (state.action - state.prev_action) ** 2
    lo = np.asarray(cfg.joint_min) + 0.05
    hi = np.asarray(cfg.joint_max) - 0.05
    near = np.maximum(lo - state.q, 0.0) + np.maximum(state.q - hi, 0.0)

    def penalty(sl):
        return cfg.w_action_rate * rate[:, sl].sum(axis=-1) + cfg.w_joint_limit * near[:, sl].sum(axis=-1)

    r_l = (cfg.w_vel * vel + cfg.w_fat2_lower * fat2 + cfg.w_height * height + cfg.w_survival
           - penalty(LOWER))
    r_w = cfg.w_fat2_waist * fat2 + cfg.w_waist_posture * waist - penalty(WAIST)
    r_u = cfg.w_upper * upper - penalty(UPPER)
    if terms is not None:
        terms.update(fat2=fat2, beta_target=beta_t, vel=vel, height=height, waist=waist, upper=upper)
    return r_l, r_w, r_u


# --------------------------------------------------------------------------- environment

class VecHumanoidEnv:
    """``num_envs`` independent planar humanoids stepped in lockstep.

    Each instance owns an RNG seeded from ``[seed, index]``. Terminated
    instances are reset from their own stream when ``auto_reset`` is on;
    otherwise stepping a finished instance raises.
    """

    def __init__(self, config: RunConfig, num_envs: int = 1, auto_reset: bool = True,
                 record_trace: bool = False):
        self.config = config
        self.cfg = config.sim
        self.geom = config.geometry
        self.n = int(num_envs)
        self.auto_reset = auto_reset
        self.body = Body(self.cfg, self.geom)
        c = self.cfg
        self.nominal = np.asarray(c.nominal_pose, dtype=float)
        self.qmin = np.asarray(c.joint_min, dtype=float)
        self.qmax = np.asarray(c.joint_max, dtype=float)
        self.kp = np.asarray(c.kp, dtype=float)
        self.kd = np.asarray(c.kd, dtype=float)
        self.tau_lim = np.asarray(c.torque_limit, dtype=float)
        self.inertia = np.asarray(c.inertia, dtype=float)
        self.action_scale = np.asarray(c.action_scale, dtype=float)
        self.dt = c.policy_dt / c.substeps
        self.stage = 1
        self.record_trace = record_trace
        self.trace: list[list] = []
        self.rngs = [np.random.default_rng([0, i]) for i in range(self.n)]
        self._alloc()
        self.force_override = None

    def _alloc(self):
        n = self.n
        self.q = np.tile(self.nominal, (n, 1))
        self.dq = np.zeros((n, N_JOINTS))
        self.prev_action = np.zeros((n, N_JOINTS))
        self.t = np.zeros(n, dtype=np.int64)
        self.done = np.zeros(n, dtype=bool)
        self.zmp_out = np.zeros(n, dtype=np.int64)
        self.cmd = np.zeros((n, 3))
        self.f_sign = np.ones(n)
        self.f_start = np.zeros(n)
        self.f_target = np.zeros(n)
        self.f_angle = np.zeros(n)
        self.f_seg_t = np.zeros(n, dtype=np.int64)
        self.up_amps = np.zeros((n, 2, 3))
        self.up_freqs = np.zeros((n, 2, 3))
        self.up_phases = np.zeros((n, 2, 3))
        self.last_zmp = np.zeros(n)

    # ----- state (de)serialization for checkpoints
    _STATE_FIELDS = ("q", "dq", "prev_action", "t", "done", "zmp_out", "cmd", "f_sign", "f_start",
                     "f_target", "f_angle", "f_seg_t", "up_amps", "up_freqs", "up_phases", "last_zmp")

    def get_state(self) -> dict:
        out = {k: getattr(self, k).tolist() for k in self._STATE_FIELDS}
        out["stage"] = self.stage
        out["rngs"] = [r.bit_generator.state for r in self.rngs]
        return out

    def set_state(self, state: dict):
        for k in self._STATE_FIELDS:
            cur = getattr(self, k)
            setattr(self, k, np.asarray(state[k], dtype=cur.dtype).reshape(cur.shape))
        self.stage = int(state["stage"])
        for r, s in zip(self.rngs, state["rngs"]):
            r.bit_generator.state = s

    # ----- sampling
    def _sample_magnitude(self, rng):
        c = self.cfg
        # stage 2 keeps rehearsing low forces so the upright response is not forgotten
        if self.stage == 1 or rng.random() < c.stage2_low_prob:
            return float(np.clip(rng.normal(c.stage1_mean, c.stage1_std), 0.0, c.stage1_cap))
        return float(max(rng.normal(c.stage2_mean, c.stage2_std), 0.0))

    def _sample_angle(self, rng):
        c = self.cfg
        return float(min(abs(rng.normal(c.force_angle_mean, c.force_angle_std)), math.pi / 2 - 0.1))

    def _reset_one(self, i):
        rng, c = self.rngs[i], self.cfg
        q = self.nominal + rng.uniform(-c.reset_jitter, c.reset_jitter, N_JOINTS)
        self.q[i] = np.clip(q, self.qmin, self.qmax)
        self.dq[i] = 0.0
        self.prev_action[i] = 0.0
        self.t[i] = 0
        self.done[i] = False
        self.zmp_out[i] = 0
        mode = float(rng.random() < c.locomote_prob)
        vx = rng.uniform(-c.cmd_vx_range, c.cmd_vx_range) if mode else 0.0
        self.cmd[i] = (vx, mode, rng.uniform(c.root_height_min, c.root_height_max))
        self.f_sign[i] = FORWARD if rng.random() < c.forward_prob else BACKWARD
        self.f_start[i] = 0.0
        self.f_target[i] = self._sample_magnitude(rng)
        self.f_angle[i] = self._sample_angle(rng)
        self.f_seg_t[i] = 0
        self.up_amps[i], self.up_freqs[i], self.up_phases[i] = upper_target_params(rng, c)

    def reset(self, seed: int, stage: int = 1, instance_seeds=None) -> StepBatch:
        """Reset every instance; instance ``i`` draws from ``[seed, i]``.

        ``instance_seeds`` gives each instance its own seed instead, drawn as
        ``[instance_seeds[i], 0]`` so that it replays a single-instance env
        reset with that seed.
        """
        if stage not in (1, 2):
            raise ValueError("stage must be 1 or 2")
        self.stage = stage
        if instance_seeds is None:
            self.rngs = [np.random.default_rng([int(seed), i]) for i in range(self.n)]
        else:
            if len(instance_seeds) != self.n:
                raise ValueError("need one seed per instance")
            self.rngs = [np.random.default_rng([int(s), 0]) for s in instance_seeds]
        self._alloc()
        for i in range(self.n):
            self._reset_one(i)
        self.trace = []
        pts, coms, theta = self.body.forward(self.q)
        fx, v = self._force_components()
        self.last_zmp = self.body.zmp_x(coms, pts[:, -1], fx, v)
        return self._batch(np.zeros((self.n, 3)), self.done.copy(),
                           np.zeros(self.n, dtype=np.int64), self.t.copy())

    def set_stage(self, stage: int):
        if stage not in (1, 2):
            raise ValueError("stage must be 1 or 2")
        self.stage = stage

    # ----- forces
    def current_force(self) -> ForceState:
        if self.force_override is not None:
            mag, ang, sign = self.force_override
            return ForceState(np.broadcast_to(np.asarray(mag, float), (self.n,)).copy(),
                              np.broadcast_to(np.asarray(ang, float), (self.n,)).copy(),
                              np.broadcast_to(np.asarray(sign, float), (self.n,)).copy())
        frac = np.minimum(self.f_seg_t / max(self.cfg.force_ramp_steps, 1), 1.0)
        mag = self.f_start + frac * (self.f_target - self.f_start)
        return ForceState(mag, self.f_angle.copy(), self.f_sign.copy())

    def set_external_force(self, magnitude, angle=0.0, sign=FORWARD):
        """Pin the hand force (bypasses the random schedule); ``None`` restores it."""
        self.force_override = None if magnitude is None else (magnitude, angle, sign)

    def _force_components(self):
        f = self.current_force()
        fx = f.sign * f.magnitude * np.cos(f.angle)
        v = f.magnitude * np.sin(f.angle)
        return fx, v

    def _advance_schedule(self, live):
        c = self.cfg
        self.f_seg_t[live] += 1
        for i in np.flatnonzero(live & (self.f_seg_t >= c.force_resample_steps)):
            rng = self.rngs[i]
            frac = min(self.f_seg_t[i] / max(c.force_ramp_steps, 1), 1.0)
            self.f_start[i] = self.f_start[i] + frac * (self.f_target[i] - self.f_start[i])
            self.f_target[i] = self._sample_magnitude(rng)
            self.f_angle[i] = self._sample_angle(rng)
            self.f_seg_t[i] = 0

    # ----- observations
    def upper_reference(self, t=None):
        t = self.t if t is None else t
        return _eval_upper(t, self.up_amps, self.up_freqs, self.up_phases, self.cfg)

    def _observe(self):
        pts, coms, theta = self.body.forward(self.q)
        pitch = theta[:, 3]
        pitch_rate = self.dq[:, :4].sum(axis=-1)
        obs = np.concatenate([
            self.q - self.nominal,
            self.dq * DQ_OBS_SCALE,
            pitch_rate[:, None],
            np.stack([np.sin(pitch), np.cos(pitch)], axis=-1),
            self.prev_action,
            self.cmd,
            self.upper_reference() - self.nominal[UPPER],
        ], axis=-1)
        jac = self.body.point_jacobian_rows(theta, 2)
        vel = np.einsum("nij,nj->ni", jac, self.dq)
        fx, v = self._force_components()
        s = self.cfg.force_obs_scale
        priv = np.stack([vel[:, 0], vel[:, 1], pitch, fx * s, -v * s, pts[:, -1, 1]], axis=-1)
        return obs, priv, pts, theta, vel

    def _batch(self, rewards, done, reason, ep_len):
        obs, priv, *_ = self._observe()
        return StepBatch(obs=obs, priv=priv, rewards=rewards, done=done, reason=reason,
                         zmp_x=self.last_zmp.copy(), episode_length=ep_len)

    def desired_angles(self, actions):
        a = np.clip(actions, -1.0, 1.0)
        return np.clip(self.nominal + self.action_scale * a, self.qmin, self.qmax)

    # ----- dynamics
    def step(self, actions) -> StepBatch:
        actions = np.asarray(actions, dtype=float).reshape(self.n, N_JOINTS)
        if not np.all(np.isfinite(actions)):
            raise ValueError("non-finite action")
        if self.done.any() and not self.auto_reset:
            raise EpisodeDoneError("step() called on a finished episode; call reset()")
        a = np.clip(actions, -1.0, 1.0)
        q_des = self.desired_angles(a)
        c, g = self.cfg, self.geom
        fx, v = self._force_components()
        force = self.current_force()
        support = g.weight + v
        slip_now = np.abs(fx) > g.friction_coeff * support
        live = np.ones(self.n, dtype=bool)
        reason = np.zeros(self.n, dtype=np.int64)
        for _ in range(c.substeps):
            tau = pd_torque(q_des, self.q, self.dq, self.kp, self.kd, self.tau_lim)
            pts, coms, _ = self.body.forward(self.q)
            tau = tau + self.body.load_torques(pts, coms, fx, v)
            acc = tau / self.inertia
            dq = self.dq + self.dt * acc
            q = self.q + self.dt * dq
            hit_lo, hit_hi = q < self.qmin, q > self.qmax
            q = np.clip(q, self.qmin, self.qmax)
            dq = np.where((hit_lo & (dq < 0)) | (hit_hi & (dq > 0)), 0.0, dq)
            self.q = np.where(live[:, None], q, self.q)
            self.dq = np.where(live[:, None], dq, self.dq)
            pts, coms, theta = self.body.forward(self.q)
            zmp = self.body.zmp_x(coms, pts[:, -1], fx, v)
            self.last_zmp = np.where(live, zmp, self.last_zmp)
            outside = (zmp < g.support_min) | (zmp > g.support_max)
            self.zmp_out = np.where(live, np.where(outside, self.zmp_out + 1, 0), self.zmp_out)
            new = np.zeros(self.n, dtype=np.int64)
            new[live & slip_now] = Termination.SLIP
            new[live & (new == 0) & (self.zmp_out > c.zmp_grace_substeps)] = Termination.ZMP_EXIT
            new[live & (new == 0) & (np.abs(theta[:, 3]) > c.pitch_limit)] = Termination.PITCH_LIMIT
            reason = np.where(live & (new > 0), new, reason)
            live = live & (new == 0)
        # the last substep must end inside the support interval
        end_out = live & (self.zmp_out > 0)
        reason[end_out] = Termination.ZMP_EXIT
        live &= ~end_out
        self.t += 1
        timeout = live & (self.t >= c.max_episode_steps)
        reason[timeout] = Termination.TIMEOUT

        obs_pts, obs_coms, theta = self.body.forward(self.q)
        jac = self.body.point_jacobian_rows(theta, 2)
        vel = np.einsum("nij,nj->ni", jac, self.dq)
        state = RewardState(torso_pitch=theta[:, 3], base_vx=vel[:, 0], root_height=obs_pts[:, 2, 1],
                            q=self.q, upper_ref=self.upper_reference(self.t - 1), action=a,
                            prev_action=self.prev_action, cmd_vx=self.cmd[:, 0],
                            cmd_height=self.cmd[:, 2], lean_sign=-force.sign)
        r_l, r_w, r_u = compute_rewards(state, g, force, c)
        rewards = np.stack([r_l, r_w, r_u], axis=-1)
        self.prev_action = a
        done = reason > 0
        ep_len = self.t.copy()
        if self.record_trace:
            for i in range(self.n):
                self.trace.append([int(self.t[i]), *self.q[i].tolist(), float(theta[i, 3]),
                                   float(force.sign[i] * force.magnitude[i]), float(self.last_zmp[i]),
                                   *rewards[i].tolist(), int(done[i])])
        if self.force_override is None:
            self._advance_schedule(~done)
        self.done = done.copy()
        if self.auto_reset and done.any():
            for i in np.flatnonzero(done):
                self._reset_one(i)
            self.done = np.zeros(self.n, dtype=bool)
        return self._batch(rewards, done, reason, ep_len)

    def write_trace(self, path, stamp: str = ""):
        header = (["t"] + [f"q{i}" for i in range(N_JOINTS)]
                  + ["torso_pitch", "force_x", "zmp_x", "r_lower", "r_waist", "r_upper", "done"])
        with open(path, "w", newline="") as fh:
            if stamp:
                fh.write(f"# {stamp}\n")
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(self.trace)


class PlanarHumanoidEnv:
    """Single-instance view over :class:`VecHumanoidEnv` with typed step results."""

    def __init__(self, config: RunConfig, record_trace: bool = False):
        self.vec = VecHumanoidEnv(config, 1, auto_reset=False, record_trace=record_trace)

    def _wrap(self, b: StepBatch) -> StepResult:
        v = self.vec
        return StepResult(
            observation=Observation.from_array(b.obs[0], v.nominal),
            privileged=PrivilegedObs.from_array(b.priv[0], v.cfg.force_obs_scale),
            rewards=tuple(float(r) for r in b.rewards[0]),
            done=bool(b.done[0]), termination_reason=Termination(int(b.reason[0])),
            obs_array=b.obs[0], priv_array=b.priv[0], zmp_x=float(b.zmp_x[0]))

    def reset(self, seed: int, stage: int = 1) -> StepResult:
        return self._wrap(self.vec.reset(seed, stage))

    def step(self, actions) -> StepResult:
        return self._wrap(self.vec.step(np.asarray(actions, dtype=float)[None, :]))

    def set_external_force(self, magnitude, angle=0.0, sign=FORWARD):
        self.vec.set_external_force(magnitude, angle, sign)

    @property
    def done(self) -> bool:
        return bool(self.vec.done[0])
