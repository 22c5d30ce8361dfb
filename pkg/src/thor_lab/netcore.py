"""Dense tanh MLPs with hand-written backprop, a diagonal Gaussian head and Adam.

Everything is float64 numpy. Parameters of an :class:`Mlp` are kept as a flat
list ``[W0, b0, W1, b1, ...]`` with ``W_k`` shaped ``(fan_in, fan_out)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG_STD_MIN, LOG_STD_MAX = -4.0, 1.0
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
_HALF_LOG_2PIE = 0.5 * math.log(2 * math.pi * math.e)


class StaleCacheError(RuntimeError):
    pass


class NonFiniteGradientError(FloatingPointError):
    pass


def _orthogonal(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float):
    a = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if fan_in < fan_out:
        q = q.T
    return np.ascontiguousarray(gain * q[:fan_in, :fan_out])


class Mlp:
    """Affine layers with tanh between them and an identity output."""

    def __init__(self, widths, rng: np.random.Generator | None = None, out_gain: float = 1.0,
                 hidden_gain: float = math.sqrt(2), params=None):
        self.widths = [int(w) for w in widths]
        if len(self.widths) < 2:
            raise ValueError("an Mlp needs at least input and output widths")
        if params is not None:
            self.params = [np.array(p, dtype=np.float64) for p in params]
            self._check_shapes()
        else:
            rng = rng if rng is not None else np.random.default_rng(0)
            self.params = []
            n_layers = len(self.widths) - 1
            for k in range(n_layers):
                gain = out_gain if k == n_layers - 1 else hidden_gain
                self.params.append(_orthogonal(rng, self.widths[k], self.widths[k + 1], gain))
                self.params.append(np.zeros(self.widths[k + 1]))
        self.version = 0

    def _check_shapes(self):
        expected = self.param_shapes()
        if len(self.params) != len(expected) or any(p.shape != s for p, s in zip(self.params, expected)):
            raise ValueError("parameter shapes do not match widths")

    def param_shapes(self):
        shapes = []
        for a, b in zip(self.widths[:-1], self.widths[1:]):
            shapes += [(a, b), (b,)]
        return shapes

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def forward(self, x):
        """Return ``(y, cache)``; ``x`` may be a vector or a (batch, in) array."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.widths[0]:
            raise ValueError(f"expected input width {self.widths[0]}, got {x.shape[-1]}")
        acts = [x]
        h = x
        for k in range(self.n_layers):
            z = h @ self.params[2 * k] + self.params[2 * k + 1]
            h = np.tanh(z) if k < self.n_layers - 1 else z
            acts.append(h)
        return h, (self.version, acts)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, upstream):
        """Parameter gradients of ``sum(upstream * y)`` for the cached forward pass."""
        version, acts = cache
        if version != self.version:
            raise StaleCacheError("parameters changed since this forward pass")
        g = np.asarray(upstream, dtype=np.float64)
        batched = g.ndim == 2
        grads = [None] * len(self.params)
        for k in reversed(range(self.n_layers)):
            if k < self.n_layers - 1:
                g = g * (1.0 - acts[k + 1] ** 2)
            inp = acts[k]
            if batched:
                grads[2 * k] = inp.T @ g
                grads[2 * k + 1] = g.sum(axis=0)
            else:
                grads[2 * k] = np.outer(inp, g)
                grads[2 * k + 1] = g.copy()
            if k > 0:
                g = g @ self.params[2 * k].T
        return grads

    def copy(self) -> "Mlp":
        return Mlp(self.widths, params=[p.copy() for p in self.params])


class GaussianPolicy:
    """Diagonal Gaussian whose mean is an Mlp and whose log-std is state independent."""

    def __init__(self, mean: Mlp, log_std):
        self.mean = mean
        self.log_std = np.array(log_std, dtype=np.float64).reshape(mean.widths[-1])

    @property
    def act_dim(self) -> int:
        return self.mean.widths[-1]

    def clamped_log_std(self):
        return np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)

    def std(self):
        return np.exp(self.clamped_log_std())

    def sample(self, obs, rng: np.random.Generator):
        mu = self.mean(obs)
        eps = rng.standard_normal(mu.shape)
        action = mu + self.std() * eps
        return action, log_prob_from_mean(mu, self.clamped_log_std(), action)

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.mean.copy(), self.log_std.copy())


def log_prob_from_mean(mu, log_std, action):
    z = (np.asarray(action) - mu) * np.exp(-log_std)
    return (-0.5 * z * z - log_std - _HALF_LOG_2PI).sum(axis=-1)


def gaussian_entropy(log_std):
    return float(np.sum(_HALF_LOG_2PIE + np.asarray(log_std)))


def log_prob_and_entropy(policy: GaussianPolicy, obs, action):
    """Diagonal-Gaussian log-density of ``action`` and the (state independent) entropy."""
    mu = policy.mean(obs)
    ls = policy.clamped_log_std()
    return log_prob_from_mean(mu, ls, action), gaussian_entropy(ls)


@dataclass
class AdamState:
    shapes: list
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default=None)
    v: list = field(default=None)

    def __post_init__(self):
        if self.m is None:
            self.m = [np.zeros(s) for s in self.shapes]
        if self.v is None:
            self.v = [np.zeros(s) for s in self.shapes]

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        return cls(shapes=[p.shape for p in params], **kw)


def adam_step(state: AdamState, params, grads):
    """Bias-corrected Adam, applied in place; returns ``params``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter, gradient and moment lists differ in length")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("non-finite gradient")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError("shape mismatch between parameter and gradient")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def global_norm(grads) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads))


def clip_by_global_norm(grads, max_norm: float):
    norm = global_norm(grads)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        return [g * scale for g in grads], norm
    return grads, norm


def finite_difference_grads(net: Mlp, x, upstream, h: float = 1e-5):
    """Central differences of ``sum(upstream * net(x))`` for every parameter entry."""
    out = []
    for p in net.params:
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            fp = float(np.sum(upstream * net(x)))
            p[i] = old - h
            fm = float(np.sum(upstream * net(x)))
            p[i] = old
            g[i] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def max_relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """Largest elementwise ``|a - n| / max(|a|, |n|, floor)`` across gradient lists.

    The floor keeps entries that are zero up to round-off from dominating.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
