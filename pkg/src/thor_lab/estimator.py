"""Scikit-learn style front end for the decoupled PPO trainer.

Reinforcement learning has no training matrix, so ``fit`` ignores ``X`` and
trains against the simulator described by the configuration. ``predict``
maps observation rows to deterministic joint actions, which lets a fitted
estimator be swept or evaluated like any other policy.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from thor_lab.config import RunConfig, _apply, load_resolved, parse_config
from thor_lab.sim import OBS_DIM
from thor_lab.trainer import Trainer

# estimator parameter -> dotted config key
_PARAM_KEYS = {
    "iterations": "train.iterations",
    "lr": "train.lr",
    "gamma": "train.gamma",
    "lam": "train.lam",
    "clip": "train.clip",
    "lambda_c": "train.lambda_c",
    "num_envs": "train.num_envs",
    "rollout_length": "train.rollout_length",
    "hidden": "train.hidden",
    "architecture": "train.architecture",
    "curriculum_switch": "train.curriculum_switch",
    "seed": "seed",
}


def check_observations(X) -> np.ndarray:
    """2-D float64 array of finite observation rows with the env's width."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != OBS_DIM:
        raise ValueError(f"expected {OBS_DIM} observation features, got {X.shape[1]}")
    return X


def check_privileged(P, n_rows: int) -> np.ndarray | None:
    if P is None:
        return None
    P = check_array(P, dtype=np.float64, ensure_2d=True)
    if P.shape[0] != n_rows:
        raise ValueError("privileged rows must match observation rows")
    return P


class DecoupledPPO(BaseEstimator):
    """Three-agent (or monolithic) PPO on the planar humanoid.

    Parameters left at ``None`` keep the value from ``config`` (a path to a
    JSON config file, a :class:`RunConfig`, or ``None`` for defaults).
    """

    def __init__(self, config=None, iterations=None, lr=None, gamma=None, lam=None, clip=None,
                 lambda_c=None, num_envs=None, rollout_length=None, hidden=None, architecture=None,
                 curriculum_switch=None, seed=None):
        self.config = config
        self.iterations = iterations
        self.lr = lr
        self.gamma = gamma
        self.lam = lam
        self.clip = clip
        self.lambda_c = lambda_c
        self.num_envs = num_envs
        self.rollout_length = rollout_length
        self.hidden = hidden
        self.architecture = architecture
        self.curriculum_switch = curriculum_switch
        self.seed = seed

    def resolved_config(self) -> RunConfig:
        """Config with every non-``None`` estimator parameter applied as an override."""
        overrides = []
        for name, key in _PARAM_KEYS.items():
            val = getattr(self, name)
            if val is not None:
                overrides.append(f"{key}={list(val) if name == 'hidden' else val}")
        if isinstance(self.config, RunConfig):
            return load_resolved(_apply_overrides(self.config.to_dict(), overrides))
        return parse_config(self.config, overrides)

    def fit(self, X=None, y=None):
        """Train from scratch for the configured number of iterations."""
        cfg = self.resolved_config()
        self.config_ = cfg
        self.trainer_ = Trainer(cfg)
        self.trainer_.train(cfg.train.iterations)
        self.n_iter_ = self.trainer_.iteration
        return self

    def partial_fit(self, X=None, y=None, iterations: int = 1):
        """Continue training; starts a fresh trainer on the first call."""
        if not hasattr(self, "trainer_"):
            self.config_ = self.resolved_config()
            self.trainer_ = Trainer(self.config_)
        self.trainer_.train(int(iterations))
        self.n_iter_ = self.trainer_.iteration
        return self

    def predict(self, X, P=None):
        """Deterministic actions for observation rows ``X``; ``P`` is accepted and ignored."""
        check_is_fitted(self, "trainer_")
        X = check_observations(X)
        check_privileged(P, X.shape[0])
        return self.trainer_.bundle.act(X)

    def __call__(self, obs, priv=None):
        return self.predict(np.atleast_2d(obs), None if priv is None else np.atleast_2d(priv))

    @property
    def history_(self):
        check_is_fitted(self, "trainer_")
        return self.trainer_.history


def _apply_overrides(raw: dict, overrides) -> dict:
    for item in overrides:
        key, value = item.split("=", 1)
        _apply(raw, key, value)
    return raw
