"""Closed-form statics of a humanoid pulling on something with its hands.

The body is lumped into a rigid link pivoting at the ankle (origin). Angles:

* ``beta`` is the angle of the pivot-to-CoM line measured from the ground, so
  an upright body has ``beta = pi/2`` and leaning lowers it.
* ``direction_sign`` is the x-direction of the force acting *on the hand*.
  A force toward -x drags the zero-moment point toward -x; the body has to
  lean toward +x to bring it back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_COS_TOL = 1e-9


class StaticsError(ValueError):
    """Raised for non-physical inputs (degenerate loads or lever arms)."""


@dataclass(frozen=True)
class BodyGeometry:
    total_mass: float = 35.0
    gravity_accel: float = 9.81
    com_distance: float = 0.45
    ee_distance: float = 1.0
    ee_offset_angle: float = 0.0
    support_min: float = -0.10
    support_max: float = 0.15
    friction_coeff: float = 0.7

    def __post_init__(self):
        if not (self.total_mass > 0 and self.gravity_accel > 0):
            raise StaticsError("total_mass and gravity_accel must be positive")
        if not (self.com_distance > 0 and self.ee_distance > 0):
            raise StaticsError("com_distance and ee_distance must be positive")
        if not (self.support_min < 0.0 < self.support_max):
            raise StaticsError("support interval must contain the pivot")
        if not (0.0 <= self.ee_offset_angle < math.pi / 2):
            raise StaticsError("ee_offset_angle must lie in [0, pi/2)")
        if not self.friction_coeff > 0:
            raise StaticsError("friction_coeff must be positive")

    @property
    def weight(self) -> float:
        return self.total_mass * self.gravity_accel


@dataclass(frozen=True)
class HandForce:
    magnitude: float = 0.0
    ground_angle: float = 0.0
    direction_sign: int = 1

    def __post_init__(self):
        if not self.magnitude >= 0:
            raise StaticsError("force magnitude must be non-negative")
        if not (0.0 <= self.ground_angle < math.pi / 2):
            raise StaticsError("ground_angle must lie in [0, pi/2)")
        if self.direction_sign not in (-1, 1):
            raise StaticsError("direction_sign must be -1 or +1")

    @property
    def horizontal(self) -> float:
        """Signed x-component acting on the hand."""
        return self.direction_sign * self.magnitude * math.cos(self.ground_angle)

    @property
    def vertical_load(self) -> float:
        """Downward component; it adds to the weight carried by the feet."""
        return self.magnitude * math.sin(self.ground_angle)


@dataclass(frozen=True)
class EquilibriumSolution:
    support_force: float
    friction_force: float
    slip: bool


@dataclass(frozen=True)
class TiltTarget:
    beta: float
    clamped: bool


def solve_support_reactions(geom: BodyGeometry, f: HandForce) -> EquilibriumSolution:
    """Force balance: vertical load on the feet and the friction that cancels the pull."""
    support = geom.weight + f.vertical_load
    friction = -f.horizontal
    slip = abs(friction) > geom.friction_coeff * support
    return EquilibriumSolution(support_force=support, friction_force=friction, slip=slip)


def zmp_location(geom: BodyGeometry, f: HandForce, com_x: float, ee_height: float,
                 ee_x: float = 0.0) -> float:
    """x-coordinate of the zero-moment point under quasi-static loading.

    ``ee_x`` and ``ee_height`` locate the hand relative to the pivot. The hand
    force moment about the ground is ``Fx * height``; its downward part acts
    like an extra point weight at ``ee_x``.
    """
    if not ee_height > 0:
        raise StaticsError("ee_height must be positive")
    w = geom.weight
    v = f.vertical_load
    denom = w + v
    if denom <= 0:
        raise StaticsError("total vertical load must be positive")
    return (w * com_x + f.horizontal * ee_height + ee_x * v) / denom


def is_balanced(geom: BodyGeometry, x_zmp: float) -> bool:
    return geom.support_min <= x_zmp <= geom.support_max


def _tilt_ratio(geom: BodyGeometry, magnitude, ground_angle):
    lever = geom.ee_distance * math.cos(geom.ee_offset_angle)
    return magnitude * lever * np.cos(ground_angle) / (geom.weight * geom.com_distance)


def expected_tilt(geom: BodyGeometry, f: HandForce, beta_lim: float) -> TiltTarget:
    """Torso tilt that keeps the ZMP on the pivot for the given pull, limited to ``beta_lim``."""
    if not (0.0 < beta_lim < math.pi / 2):
        raise StaticsError("beta_lim must lie in (0, pi/2)")
    ratio = float(_tilt_ratio(geom, f.magnitude, f.ground_angle))
    clamped = False
    if ratio > 1.0:
        ratio, clamped = 1.0, True
    beta = math.acos(max(ratio, 0.0))
    if beta < beta_lim:
        beta, clamped = beta_lim, True
    return TiltTarget(beta=beta, clamped=clamped)


def expected_tilt_array(geom: BodyGeometry, magnitude, ground_angle, beta_lim: float):
    """Vectorized ``expected_tilt`` returning only the tilt angles."""
    ratio = np.clip(_tilt_ratio(geom, np.asarray(magnitude, dtype=float),
                                np.asarray(ground_angle, dtype=float)), 0.0, 1.0)
    return np.maximum(np.arccos(ratio), beta_lim)


def fat2_reward(beta_target, beta_actual, sigma: float):
    """Gaussian kernel on the tilt gap; 1 when the tilt matches the target."""
    if not sigma > 0:
        raise StaticsError("sigma must be positive")
    gap = np.asarray(beta_target, dtype=float) - np.asarray(beta_actual, dtype=float)
    out = np.exp(-gap * gap / sigma)
    return float(out) if out.ndim == 0 else out


def max_interactive_force(geom: BodyGeometry, f_angle: float, beta_lim: float) -> float:
    """Largest pull the body can balance with its CoM line at ``beta_lim``."""
    if not (0.0 < beta_lim < math.pi / 2):
        raise StaticsError("beta_lim must lie in (0, pi/2)")
    c = math.cos(geom.ee_offset_angle) * math.cos(f_angle)
    if c <= _COS_TOL:
        raise StaticsError("force line is (nearly) vertical; the bound is undefined")
    return geom.weight * geom.com_distance * math.cos(beta_lim) / (geom.ee_distance * c)


def support_limited_force(geom: BodyGeometry, f_angle: float, beta_lim: float,
                          direction_sign: int = 1) -> float:
    """Envelope when the ZMP may also travel to the edge of the support area.

    ``max_interactive_force`` keeps the ZMP on the pivot. A real foot lets it
    move to the support edge on the side the force drags it toward, which buys
    an extra ``W * edge`` of moment. The vertical load is neglected, as in the
    pivot-only bound.
    """
    if direction_sign not in (-1, 1):
        raise StaticsError("direction_sign must be -1 or +1")
    base = max_interactive_force(geom, f_angle, beta_lim)
    edge = geom.support_max if direction_sign > 0 else -geom.support_min
    lever = geom.ee_distance * math.cos(geom.ee_offset_angle) * math.cos(f_angle)
    return base + geom.weight * edge / lever


def torque_residual_full(geom: BodyGeometry, f: HandForce, beta: float,
                         ee_height: float, ee_horizontal: float) -> float:
    """Moment imbalance about the pivot, zero at equilibrium.

    With ``ee_horizontal = 0`` and ``ee_height = ee_distance * cos(phi)`` this
    is the simplified balance that ``expected_tilt`` inverts.
    """
    a = f.ground_angle
    return (f.magnitude * ee_height * math.cos(a) + f.magnitude * ee_horizontal * math.sin(a)
            - geom.weight * geom.com_distance * math.cos(beta))


def solve_tilt_full(geom: BodyGeometry, f: HandForce, ee_height: float,
                    ee_horizontal: float, tol: float = 1e-12) -> float:
    """Root of ``torque_residual_full`` in beta on [0, pi/2] by bisection.

    The residual is increasing in beta there, so the root is unique when the
    moment lies inside the achievable range; out-of-range moments return the
    nearest end.
    """
    lo, hi = 0.0, math.pi / 2
    r_lo = torque_residual_full(geom, f, lo, ee_height, ee_horizontal)
    r_hi = torque_residual_full(geom, f, hi, ee_height, ee_horizontal)
    if r_lo >= 0:
        return lo
    if r_hi <= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if torque_residual_full(geom, f, mid, ee_height, ee_horizontal) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
