"""Command line: ``thor-lab {train,eval,sweep,ablate,check}``.

Exit codes: 0 ok, 2 missing config file, 3 parse error, 4 unknown key,
5 invariant violation, 10 runtime abort (including checkpoint errors and
interrupted training, which still leaves a resumable checkpoint).
"""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys

from thor_lab.checks import run_checks
from thor_lab.config import ConfigError, RunConfig, parse_config
from thor_lab.evaluation import (VARIANTS, ablation_run, mean_and_se, measure_peak_forces,
                                 sweep_statistics, tilt_force_sweep, write_peak_csv, write_sweep_csv)
from thor_lab.trainer import CheckpointError, Trainer, load_checkpoint, save_checkpoint

log = logging.getLogger("thor_lab")

EXIT_OK, EXIT_RUNTIME, EXIT_CHECK_FAILED = 0, 10, 1


class Interrupted(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value (repeatable)")
    common.add_argument("--out", help="output directory (default: $THOR_LAB_OUT or out_dir)")
    common.add_argument("--checkpoint", help="checkpoint to resume from or evaluate")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    p = argparse.ArgumentParser(prog="thor-lab", description="Decoupled PPO force-interaction lab")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train a policy and write log + checkpoint")
    sub.add_parser("eval", parents=[common], help="peak sustainable force per direction")
    sub.add_parser("sweep", parents=[common], help="realized tilt over a constant-force sweep")
    abl = sub.add_parser("ablate", parents=[common], help="train and measure every ablation variant")
    abl.add_argument("--variants", nargs="+", choices=VARIANTS, default=list(VARIANTS))
    sub.add_parser("check", parents=[common], help="run the invariant suite")
    return p


def resolve(args) -> tuple[RunConfig, str]:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = parse_config(args.config, overrides)
    out = args.out or os.environ.get("THOR_LAB_OUT") or cfg.out_dir
    return cfg, out


def _policy_trainer(cfg: RunConfig, args) -> Trainer:
    path = args.checkpoint or cfg.checkpoint
    if not path:
        raise CheckpointError("this command needs --checkpoint (or checkpoint in the config)")
    return load_checkpoint(path, cfg if args.set or args.config else None)


def cmd_train(cfg: RunConfig, out: str, args) -> int:
    ckpt = os.path.join(out, "checkpoint.json")
    log_path = os.path.join(out, "train_log.csv")
    resume = args.checkpoint or cfg.checkpoint
    trainer = load_checkpoint(resume, cfg) if resume else Trainer(cfg)
    remaining = max(cfg.train.iterations - trainer.iteration, 0)
    stop = {"flag": False}

    def on_signal(signum, _frame):
        stop["flag"] = True
        log.warning("signal %d received; stopping after this iteration", signum)

    def on_iteration(tr, row):
        log.info("iter %d stage %d len %.1f total_loss %.4f", row["iteration"], row["stage"],
                 row["mean_episode_length"], row["total_loss"])
        if stop["flag"]:
            raise Interrupted

    old = {s: signal.signal(s, on_signal) for s in (signal.SIGINT, signal.SIGTERM)}
    try:
        trainer.train(remaining, log_path=log_path, stamp=cfg.stamp(), checkpoint_path=ckpt,
                      on_iteration=on_iteration)
    except Interrupted:
        save_checkpoint(trainer, ckpt)
        log.error("interrupted at iteration %d; checkpoint written to %s", trainer.iteration, ckpt)
        return EXIT_RUNTIME
    finally:
        for s, h in old.items():
            signal.signal(s, h)
    save_checkpoint(trainer, ckpt)
    log.info("trained %d iterations; checkpoint %s", trainer.iteration, ckpt)
    return EXIT_OK


def cmd_eval(cfg: RunConfig, out: str, args) -> int:
    trainer = _policy_trainer(cfg, args)
    rows = []
    for d in cfg.eval.directions:
        trials = measure_peak_forces(trainer.bundle, cfg, d)
        m, se = mean_and_se([t.peak for t in trials])
        log.info("%s: peak %.2f +- %.2f N over %d seeds", d, m, se, len(trials))
        rows += [(trainer.bundle.architecture, t) for t in trials]
    write_peak_csv(os.path.join(out, "peak_force.csv"), rows, cfg.stamp())
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: str, args) -> int:
    trainer = _policy_trainer(cfg, args)
    records = tilt_force_sweep(trainer.bundle, cfg, seed=cfg.seed)
    write_sweep_csv(os.path.join(out, "tilt_sweep.csv"), records, cfg.stamp())
    rho, mae = sweep_statistics(records)
    log.info("spearman %.3f, mean |tilt - predicted| %.3f rad over survivors", rho, mae)
    return EXIT_OK


def cmd_ablate(cfg: RunConfig, out: str, args) -> int:
    rows = []
    for variant in args.variants:
        res = ablation_run(cfg, variant)
        m, se = mean_and_se(res.peaks())
        log.info("%-15s peak %.2f +- %.2f N (config %s)", variant, m, se, res.config_hash)
        rows += [(variant, t) for t in res.trials]
    write_peak_csv(os.path.join(out, "peak_force.csv"), rows, cfg.stamp())
    return EXIT_OK


def cmd_check(cfg: RunConfig, out: str, args) -> int:
    failed = 0
    for name, ok, detail in run_checks(cfg):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep, "ablate": cmd_ablate,
            "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg, out = resolve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.command != "check":
        os.makedirs(out, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, out, args)
    except CheckpointError as exc:
        print(f"checkpoint error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (RuntimeError, FloatingPointError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
