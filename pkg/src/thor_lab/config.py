"""Resolved run configuration: defaults <- JSON file <- ``key=value`` overrides.

The JSON document has four sections (``geometry``, ``sim``, ``train``,
``eval``) plus top-level ``seed``, ``out_dir`` and ``checkpoint``. Override
keys may be dotted (``train.gamma``) or bare when the field name is unique
across sections (``gamma``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Any

from thor_lab import __version__
from thor_lab.quasistatics import BodyGeometry, StaticsError


class ConfigError(Exception):
    exit_code = 10


class ConfigFileMissing(ConfigError):
    exit_code = 2


class ConfigParseError(ConfigError):
    exit_code = 3


class UnknownConfigKey(ConfigError):
    exit_code = 4


class ConfigInvariantError(ConfigError):
    exit_code = 5


def _six(*vals):
    return field(default_factory=lambda: list(vals))


@dataclass
class SimConfig:
    # timing: 50 Hz policy, 500 Hz servo
    policy_dt: float = 0.02
    substeps: int = 10
    # joint order: ankle, knee, hip | waist | shoulder, elbow
    link_lengths: list = _six(0.30, 0.30, 0.10, 0.45, 0.22, 0.22)
    link_masses: list = _six(4.0, 6.0, 5.0, 7.2, 1.5, 1.0)
    nominal_pose: list = _six(0.10, -0.20, 0.10, 0.0, 2.30, -0.729)
    joint_min: list = _six(-0.9, -2.0, -1.5, -1.0, 0.3, -2.3)
    joint_max: list = _six(0.9, 0.0, 1.5, 1.0, 3.5, 0.3)
    torque_limit: list = _six(200.0, 200.0, 200.0, 120.0, 60.0, 40.0)
    kp: list = _six(600.0, 500.0, 400.0, 300.0, 120.0, 60.0)
    kd: list = _six(84.0, 63.0, 45.0, 32.0, 6.0, 2.4)
    inertia: list = _six(8.0, 5.0, 3.0, 2.0, 0.15, 0.05)
    action_scale: list = _six(0.8, 0.5, 0.8, 0.8, 0.8, 0.8)
    reset_jitter: float = 0.05
    upper_amplitude: float = 0.15
    upper_freq_min: float = 0.05
    upper_freq_max: float = 0.3
    max_episode_steps: int = 1000
    pitch_limit: float = 1.2
    zmp_grace_substeps: int = 3
    # force schedules
    stage1_mean: float = 10.0
    stage1_std: float = 10.0
    stage1_cap: float = 30.0
    stage2_mean: float = 80.0
    stage2_std: float = 25.0
    stage2_low_prob: float = 0.3
    force_angle_mean: float = 0.0
    force_angle_std: float = 0.15
    force_ramp_steps: int = 50
    force_resample_steps: int = 250
    forward_prob: float = 0.5
    # commands
    locomote_prob: float = 0.0
    cmd_vx_range: float = 0.6
    root_height_min: float = 0.52
    root_height_max: float = 0.60
    # observation scaling for critic-only inputs
    force_obs_scale: float = 0.01
    # FAT2
    beta_lim: float = 0.9
    sigma_tilt: float = 0.05
    # reward weights
    w_vel: float = 0.5
    sigma_vel: float = 0.1
    w_fat2_lower: float = 1.0
    w_height: float = 0.5
    sigma_height: float = 0.005
    w_survival: float = 0.5
    w_fat2_waist: float = 1.0
    w_waist_posture: float = 0.2
    sigma_waist: float = 0.25
    w_upper: float = 1.0
    sigma_upper: float = 0.1
    w_action_rate: float = 0.05
    w_joint_limit: float = 0.5


@dataclass
class TrainConfig:
    iterations: int = 10_000
    lr: float = 5e-4
    gamma: float = 0.98
    clip: float = 0.15
    c_e: float = 0.02
    c_v: float = 0.9
    lam: float = 0.95
    lambda_c: float = 1e-3
    regularizer: str = "action"
    rollout_length: int = 64
    num_minibatches: int = 4
    epochs: int = 4
    curriculum_switch: int = 5000
    num_envs: int = 64
    hidden: list = field(default_factory=lambda: [128, 64, 32])
    init_log_std: float = -1.0
    max_grad_norm: float = 1.0
    adv_eps: float = 1e-8
    architecture: str = "decoupled"
    checkpoint_every: int = 0


@dataclass
class EvalConfig:
    hold_seconds: float = 2.0
    ramp_rate: float = 50.0
    resolution: float = 1.0
    max_force: float = 400.0
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    directions: list = field(default_factory=lambda: ["forward", "backward"])
    sweep_forces: list = field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0, 40.0, 50.0,
                                                        60.0, 70.0, 80.0, 90.0])
    sweep_steps: int = 150
    sweep_settle_steps: int = 75
    sweep_direction: str = "forward"
    ablation_iterations: int = 200


@dataclass
class RunConfig:
    geometry: BodyGeometry = field(default_factory=BodyGeometry)
    sim: SimConfig = field(default_factory=SimConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    out_dir: str = "runs"
    checkpoint: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Content hash of the resolved configuration, stamped into every artifact."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def stamp(self) -> str:
        return f"thor_lab {__version__} config={self.config_hash()}"


_SECTIONS = {"geometry": BodyGeometry, "sim": SimConfig, "train": TrainConfig, "eval": EvalConfig}
_TOP_LEVEL = ("seed", "out_dir", "checkpoint")


def _coerce(value: Any, template: Any, key: str):
    if isinstance(template, bool):
        if isinstance(value, str):
            if value.lower() in ("1", "true", "yes"):
                return True
            if value.lower() in ("0", "false", "no"):
                return False
            raise ConfigInvariantError(f"{key}: expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(template, list):
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ConfigParseError(f"{key}: cannot parse list {value!r}") from exc
        if not isinstance(value, list):
            raise ConfigInvariantError(f"{key}: expected a list")
        return list(value)
    try:
        if isinstance(template, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(float(value)) if isinstance(value, str) else int(value)
        if isinstance(template, float):
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigInvariantError(f"{key}: cannot convert {value!r}") from exc
    return str(value)


def _field_owner(key: str) -> tuple[str | None, str]:
    if key in _TOP_LEVEL:
        return None, key
    if "." in key:
        section, name = key.split(".", 1)
        if section not in _SECTIONS or name not in {f.name for f in fields(_SECTIONS[section])}:
            raise UnknownConfigKey(key)
        return section, name
    owners = [s for s, cls in _SECTIONS.items() if key in {f.name for f in fields(cls)}]
    if len(owners) != 1:
        raise UnknownConfigKey(key if not owners else f"{key} (ambiguous: {owners})")
    return owners[0], key


def _defaults_dict() -> dict:
    return RunConfig().to_dict()


def _apply(raw: dict, key: str, value: Any):
    section, name = _field_owner(key)
    target = raw if section is None else raw[section]
    target[name] = _coerce(value, target[name], key)


def _validate(cfg: RunConfig):
    t, s, e = cfg.train, cfg.sim, cfg.eval
    checks = [
        (0 < t.gamma <= 1, "gamma must lie in (0, 1]"),
        (0 < t.lam <= 1, "lam must lie in (0, 1]"),
        (t.clip > 0, "clip must be positive"),
        (t.lambda_c >= 0, "lambda_c must be non-negative"),
        (t.lr > 0, "lr must be positive"),
        (t.iterations >= 0 and t.curriculum_switch >= 0, "iteration counts must be >= 0"),
        (t.rollout_length > 0 and t.num_envs > 0, "rollout_length and num_envs must be > 0"),
        (t.num_minibatches > 0 and t.epochs > 0, "num_minibatches and epochs must be > 0"),
        ((t.rollout_length * t.num_envs) % t.num_minibatches == 0,
         "rollout_length * num_envs must be divisible by num_minibatches"),
        (all(int(h) > 0 for h in t.hidden), "hidden widths must be positive"),
        (t.regularizer in ("action", "pd_torque"), "regularizer must be 'action' or 'pd_torque'"),
        (t.architecture in ("decoupled", "monolithic"),
         "architecture must be 'decoupled' or 'monolithic'"),
        (0 < s.beta_lim < math.pi / 2, "beta_lim must lie in (0, pi/2)"),
        (s.sigma_tilt > 0, "sigma_tilt must be positive"),
        (s.substeps > 0 and s.policy_dt > 0, "substeps and policy_dt must be positive"),
        (all(len(getattr(s, n)) == 6 for n in (
            "link_lengths", "link_masses", "nominal_pose", "joint_min", "joint_max",
            "torque_limit", "kp", "kd", "inertia", "action_scale")), "joint arrays need 6 entries"),
        (all(a < b for a, b in zip(s.joint_min, s.joint_max)), "joint_min must be < joint_max"),
        (all(lo <= q <= hi for lo, q, hi in zip(s.joint_min, s.nominal_pose, s.joint_max)),
         "nominal_pose must lie within joint limits"),
        (all(v > 0 for v in s.kp + s.kd + s.inertia + s.torque_limit + s.link_lengths),
         "gains, inertias, torque limits and link lengths must be positive"),
        (all(v >= 0 for v in s.link_masses), "link masses must be non-negative"),
        (sum(s.link_masses) < cfg.geometry.total_mass, "link masses must leave mass for the feet"),
        (s.stage1_cap >= 0 and s.stage1_std >= 0 and s.stage2_std >= 0, "force spreads must be >= 0"),
        (0.0 <= s.stage2_low_prob < 1.0, "stage2_low_prob must be in [0, 1)"),
        (0 <= s.forward_prob <= 1 and 0 <= s.locomote_prob <= 1, "probabilities must lie in [0, 1]"),
        (s.root_height_min <= s.root_height_max, "root height range is empty"),
        (e.hold_seconds > 0 and e.ramp_rate > 0 and e.resolution > 0, "eval timing must be positive"),
        (all(d in ("forward", "backward") for d in e.directions), "unknown eval direction"),
        (e.sweep_direction in ("forward", "backward"), "unknown sweep direction"),
        (list(e.sweep_forces) == sorted(e.sweep_forces), "sweep_forces must be ascending"),
        (len(e.seeds) > 0, "eval needs at least one seed"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigInvariantError(msg)


def from_dict(raw: dict) -> RunConfig:
    try:
        geom = BodyGeometry(**raw["geometry"])
    except StaticsError as exc:
        raise ConfigInvariantError(str(exc)) from exc
    cfg = RunConfig(
        geometry=geom,
        sim=SimConfig(**raw["sim"]),
        train=TrainConfig(**raw["train"]),
        eval=EvalConfig(**raw["eval"]),
        seed=raw["seed"], out_dir=raw["out_dir"], checkpoint=raw["checkpoint"],
    )
    _validate(cfg)
    return cfg


def _flatten(doc: dict, prefix: str = "") -> list[tuple[str, Any]]:
    items = []
    for k, v in doc.items():
        if prefix == "" and k in _SECTIONS:
            if not isinstance(v, dict):
                raise ConfigParseError(f"section {k!r} must be an object")
            items.extend((f"{k}.{kk}", vv) for kk, vv in v.items())
        else:
            items.append((prefix + k, v))
    return items


def parse_config(path: str | None = None, overrides: list[str] | tuple = ()) -> RunConfig:
    """Resolve a RunConfig; raises a ConfigError subclass carrying the CLI exit code."""
    raw = _defaults_dict()
    if path:
        if not os.path.isfile(path):
            raise ConfigFileMissing(path)
        with open(path) as fh:
            text = fh.read()
        if text.strip():
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigParseError(f"{path}: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigParseError(f"{path}: top level must be an object")
            for key, value in _flatten(doc):
                _apply(raw, key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigParseError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        _apply(raw, key.strip(), value.strip())
    return from_dict(raw)


def load_resolved(raw: dict) -> RunConfig:
    """Rebuild a config from a resolved dict (as stored in checkpoints)."""
    base = _defaults_dict()
    for key, value in _flatten(raw):
        _apply(base, key, value)
    return from_dict(base)
