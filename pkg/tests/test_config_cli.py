import csv
import json
import os
import signal

import pytest

from thor_lab import cli
from thor_lab.config import (ConfigFileMissing, ConfigInvariantError, ConfigParseError, RunConfig,
                             UnknownConfigKey, load_resolved, parse_config)
from thor_lab.trainer import Trainer

TINY = ["num_envs=2", "rollout_length=8", "hidden=[8]", "num_minibatches=2", "epochs=1",
        "seeds=[0,1]", "max_force=40.0", "hold_seconds=0.2", "sweep_forces=[0.0,20.0]",
        "sweep_steps=20", "sweep_settle_steps=10"]


def tiny_args(*extra):
    out = []
    for item in TINY + list(extra):
        out += ["--set", item]
    return out


# --------------------------------------------------------------------------- config

class TestConfig:
    def test_defaults(self, tmp_path):
        empty = tmp_path / "empty.json"
        empty.write_text("")
        cfg = parse_config(str(empty))
        t = cfg.train
        assert (t.iterations, t.lr, t.gamma, t.clip, t.c_e, t.c_v, t.lam) == (10_000, 5e-4, 0.98, 0.15, 0.02, 0.9, 0.95)
        assert cfg.config_hash() == RunConfig().config_hash()

    def test_precedence(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"train": {"gamma": 0.7, "lam": 0.8}, "seed": 3}))
        cfg = parse_config(str(f), ["gamma=0.5"])
        assert cfg.train.gamma == 0.5 and cfg.train.lam == 0.8 and cfg.seed == 3

    def test_dotted_and_list_keys(self):
        cfg = parse_config(None, ["train.hidden=[4,4]", "sim.beta_lim=0.8", "geometry.total_mass=40"])
        assert cfg.train.hidden == [4, 4] and cfg.sim.beta_lim == 0.8 and cfg.geometry.total_mass == 40.0

    def test_errors_have_distinct_codes(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        cases = [
            (lambda: parse_config(str(tmp_path / "nope.json")), ConfigFileMissing, 2),
            (lambda: parse_config(str(bad)), ConfigParseError, 3),
            (lambda: parse_config(None, ["no_such_key=1"]), UnknownConfigKey, 4),
            (lambda: parse_config(None, ["gamma=1.5"]), ConfigInvariantError, 5),
        ]
        for fn, exc, code in cases:
            with pytest.raises(exc) as info:
                fn()
            assert info.value.exit_code == code

    def test_invariants(self):
        for bad in (["lam=0"], ["clip=0"], ["lambda_c=-1"], ["beta_lim=2.0"], ["regularizer=foo"],
                    ["support_min=0.1"], ["sweep_forces=[3,1]"], ["rollout_length=7", "num_envs=1"]):
            with pytest.raises(ConfigInvariantError):
                parse_config(None, bad)

    def test_resolved_round_trip(self):
        cfg = parse_config(None, ["gamma=0.9", "hidden=[5]"])
        assert load_resolved(cfg.to_dict()).config_hash() == cfg.config_hash()

    def test_stamp(self):
        cfg = RunConfig()
        assert cfg.stamp() == f"thor_lab 0.1.0 config={cfg.config_hash()}"
        assert len(cfg.config_hash()) == 16


# --------------------------------------------------------------------------- cli

def run(argv):
    return cli.main(argv)


class TestCli:
    def test_config_exit_codes(self, tmp_path):
        assert run(["check", "--config", str(tmp_path / "missing.json")]) == 2
        (tmp_path / "bad.json").write_text("[")
        assert run(["check", "--config", str(tmp_path / "bad.json")]) == 3
        assert run(["check", "--set", "bogus=1"]) == 4
        assert run(["check", "--set", "gamma=1.5"]) == 5

    def test_train_smoke(self, tmp_path):
        out = tmp_path / "run"
        assert run(["train", "--out", str(out), "--quiet", "--set", "iterations=2"] + tiny_args()) == 0
        lines = (out / "train_log.csv").read_text().splitlines()
        assert lines[0].startswith("# thor_lab 0.1.0 config=")
        assert len(list(csv.DictReader(lines[1:]))) == 2
        assert json.loads((out / "checkpoint.json").read_text())["iteration"] == 2
        assert sorted(os.listdir(out)) == ["checkpoint.json", "train_log.csv"]

    def test_resume_to_target(self, tmp_path):
        out = tmp_path / "run"
        run(["train", "--out", str(out), "--quiet", "--set", "iterations=1"] + tiny_args())
        ck = str(out / "checkpoint.json")
        assert run(["train", "--out", str(out), "--quiet", "--checkpoint", ck, "--set", "iterations=3"]
                   + tiny_args()) == 0
        assert json.loads((out / "checkpoint.json").read_text())["iteration"] == 3

    def test_eval_and_sweep_on_fresh_checkpoint(self, tmp_path):
        out = tmp_path / "run"
        run(["train", "--out", str(out), "--quiet", "--set", "iterations=1"] + tiny_args())
        ck = str(out / "checkpoint.json")
        for k in range(2):
            assert run(["eval", "--out", str(out / f"e{k}"), "--checkpoint", ck, "--quiet"] + tiny_args()) == 0
            assert run(["sweep", "--out", str(out / f"e{k}"), "--checkpoint", ck, "--quiet"] + tiny_args()) == 0
        rows = list(csv.DictReader((out / "e0" / "peak_force.csv").read_text().splitlines()[1:]))
        assert len(rows) == 4 and all(float(r["peak_N"]) >= 0 for r in rows)
        for name in ("peak_force.csv", "tilt_sweep.csv"):
            assert (out / "e0" / name).read_bytes() == (out / "e1" / name).read_bytes()

    def test_eval_needs_checkpoint(self, tmp_path):
        assert run(["eval", "--out", str(tmp_path), "--quiet"]) == 10
        (tmp_path / "junk.json").write_text("{}")
        assert run(["eval", "--out", str(tmp_path), "--checkpoint", str(tmp_path / "junk.json"), "--quiet"]) == 10

    def test_out_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("THOR_LAB_OUT", str(tmp_path / "envout"))
        assert run(["train", "--quiet", "--set", "iterations=1"] + tiny_args()) == 0
        assert (tmp_path / "envout" / "checkpoint.json").exists()

    def test_seed_flag(self, tmp_path):
        run(["train", "--out", str(tmp_path), "--quiet", "--seed", "9", "--set", "iterations=1"] + tiny_args())
        assert json.loads((tmp_path / "checkpoint.json").read_text())["config"]["seed"] == 9

    def test_check_passes(self, capsys):
        assert run(["check"]) == 0
        assert capsys.readouterr().out.count("PASS") == 6

    def test_check_gate_fails(self, monkeypatch):
        monkeypatch.setattr(cli, "run_checks", lambda cfg: [("x", False, "broken")])
        assert run(["check"]) == 1

    def test_ablate_smoke(self, tmp_path):
        argv = ["ablate", "--out", str(tmp_path), "--quiet", "--variants", "full", "neither",
                "--set", "ablation_iterations=1", "--set", "directions=[\"forward\"]"] + tiny_args()
        assert run(argv) == 0
        rows = list(csv.DictReader((tmp_path / "peak_force.csv").read_text().splitlines()[1:]))
        assert {r["variant"] for r in rows} == {"full", "neither"}

    def test_interrupt_leaves_checkpoint(self, tmp_path, monkeypatch):
        real = Trainer.train_iteration

        def interrupted(self):
            row = real(self)
            if self.iteration == 2:
                os.kill(os.getpid(), signal.SIGINT)
            return row

        monkeypatch.setattr(Trainer, "train_iteration", interrupted)
        assert run(["train", "--out", str(tmp_path), "--quiet", "--set", "iterations=50"] + tiny_args()) == 10
        assert json.loads((tmp_path / "checkpoint.json").read_text())["iteration"] == 2
