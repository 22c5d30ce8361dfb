"""Fast cross-module invariant suite behind ``thor-lab check``.

Each check returns ``(name, ok, detail)``. The suite is a smoke gate, not a
replacement for the test-suite: sample sizes are small enough to finish in a
few seconds.
"""

from __future__ import annotations

import math

import numpy as np

from thor_lab.config import RunConfig, parse_config
from thor_lab.netcore import Mlp, finite_difference_grads, max_relative_error
from thor_lab.quasistatics import (BodyGeometry, HandForce, expected_tilt, max_interactive_force,
                                   solve_tilt_full, zmp_location)
from thor_lab.sim import FORWARD, VecHumanoidEnv
from thor_lab.trainer import Trainer, compute_gae, gae_bruteforce


def check_statics(cfg: RunConfig):
    g = cfg.geometry
    worst = 0.0
    for alpha in np.linspace(0.0, 1.2, 7):
        for lim in np.linspace(0.2, 1.4, 7):
            f = HandForce(max_interactive_force(g, alpha, lim), alpha)
            worst = max(worst, abs(expected_tilt(g, f, lim).beta - lim))
    gap = 0.0
    for alpha in np.linspace(0.0, math.pi / 4, 5):
        for mag in np.linspace(0.0, max_interactive_force(g, alpha, cfg.sim.beta_lim), 9):
            f = HandForce(mag, alpha)
            for d3 in (-0.05 * g.ee_distance, 0.05 * g.ee_distance):
                gap = max(gap, abs(solve_tilt_full(g, f, g.ee_distance, d3)
                                   - expected_tilt(g, f, cfg.sim.beta_lim).beta))
    ok = worst < 1e-9 and gap <= 0.05
    return "statics", ok, f"round-trip {worst:.1e} rad, full-vs-simplified {gap:.3f} rad"


def check_worked_values(_cfg: RunConfig):
    g = BodyGeometry()
    half = g.weight * g.com_distance / (2 * g.ee_distance)
    b = expected_tilt(g, HandForce(half), 0.9).beta
    f = max_interactive_force(g, 0.0, 0.9)
    ok = abs(b - math.pi / 3) < 1e-9 and abs(f - 96.05) <= 0.01
    return "worked_values", ok, f"beta {b:.12f}, envelope {f:.4f} N"


def check_gradients(_cfg: RunConfig):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10):
        widths = [int(w) for w in rng.integers(1, 9, size=3)]
        net = Mlp(widths, rng)
        x = rng.normal(size=(2, widths[0]))
        up = rng.normal(size=(2, widths[-1]))
        _, cache = net.forward(x)
        worst = max(worst, max_relative_error(net.backward(cache, up), finite_difference_grads(net, x, up)))
    return "gradients", worst < 1e-4, f"max relative error {worst:.1e}"


def check_gae(_cfg: RunConfig):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        T = int(rng.integers(1, 65))
        args = (rng.normal(size=T), rng.normal(size=T), (rng.random(T) < 0.1).astype(float), rng.normal())
        worst = max(worst, np.abs(compute_gae(*args, 0.98, 0.95)[0] - gae_bruteforce(*args, 0.98, 0.95)[0]).max())
    return "gae", worst < 1e-10, f"max abs diff {worst:.1e}"


def check_sim_statics(cfg: RunConfig):
    frozen = parse_config(None, ["inertia=[1e18,1e18,1e18,1e18,1e18,1e18]", "friction_coeff=5.0"])
    env = VecHumanoidEnv(frozen, 10, auto_reset=False)
    env.reset(0)
    mags = np.linspace(0.0, 150.0, 10)
    env.set_external_force(mags, 0.1, FORWARD)
    q = env.q.copy()
    b = env.step(np.zeros((10, 6)))
    pts, coms, _ = env.body.forward(q)
    worst = 0.0
    for i in range(10):
        ref = zmp_location(frozen.geometry, HandForce(mags[i], 0.1, FORWARD), env.body.com_x(coms[i]),
                           pts[i, -1, 1], pts[i, -1, 0])
        worst = max(worst, abs(b.zmp_x[i] - ref))
    return "sim_statics", worst < 1e-9, f"max ZMP gap {worst:.1e} m"


def check_loss_identity(cfg: RunConfig):
    small = parse_config(None, ["num_envs=2", "rollout_length=8", "hidden=[8]", "num_minibatches=2",
                                "epochs=1", "lambda_c=0.01"])
    tr = Trainer(small)
    worst = 0.0
    for _ in range(2):
        row = tr.train_iteration()
        parts = sum(v for k, v in row.items() if k.startswith("loss_"))
        worst = max(worst, abs(row["total_loss"] - parts - 0.01 * row["reg_C"]))
    return "loss_identity", worst < 1e-12, f"max gap {worst:.1e}"


CHECKS = (check_statics, check_worked_values, check_gradients, check_gae, check_sim_statics,
          check_loss_identity)


def run_checks(cfg: RunConfig):
    return [chk(cfg) for chk in CHECKS]
