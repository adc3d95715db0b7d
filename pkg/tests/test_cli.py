"""CLI surface: files, exit codes, fault reporting, byte-level determinism."""

import hashlib
import json
import os

import numpy as np
import pytest

import asaukit.activations as act
from asaukit.activations import AsauGrad
from asaukit.cli import main
from asaukit.curves import read_curve_csv


def sha_tree(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as f:
            out[name] = hashlib.sha256(f.read()).hexdigest()
    return out


class TestCurvesCommand:
    def test_default_emits_three_families(self, tmp_path):
        code = main(["curves", "--out", str(tmp_path),
                     "--override", "curves.grid=[-2.0,2.0,0.1]"])
        assert code == 0
        for family in ("max", "leaky", "relu"):
            assert (tmp_path / f"curves_{family}.csv").exists()
            assert (tmp_path / f"curves_{family}.png").exists()
        header, values = read_curve_csv(tmp_path / "curves_relu.csv")
        assert header[:2] == ["x", "target"]
        assert len(header) == 2 + 9  # three alphas x three betas

    def test_sharp_beta_override_tracks_target(self, tmp_path):
        code = main(["curves", "--out", str(tmp_path),
                     "--override", "curves.betas=[10000.0]",
                     "--override", "curves.alphas=[1.0]",
                     "--override", 'curves.families=[{"label":"relu","a":0.0,"b":1.0}]',
                     "--override", "curves.grid=[-5.0,5.0,0.001]"])
        assert code == 0
        _, values = read_curve_csv(tmp_path / "curves_relu.csv")
        assert np.max(np.abs(values[:, 2] - values[:, 1])) < 1e-3

    def test_bad_grid_is_usage_error(self, tmp_path, capsys):
        code = main(["curves", "--out", str(tmp_path),
                     "--override", "curves.grid=[5.0,-5.0,0.1]"])
        assert code == 2
        assert "error" in capsys.readouterr().err


class TestSweepCommand:
    def test_default_monotone(self, tmp_path):
        code = main(["sweep", "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
        errors = [float(line.split(",")[1]) for line in lines[1:]]
        assert len(errors) == 5
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-3
        assert (tmp_path / "sweep.png").exists()

    def test_single_beta_anchor(self, tmp_path):
        code = main(["sweep", "--out", str(tmp_path),
                     "--override", "sweep.betas=[10.0]"])
        assert code == 0
        line = (tmp_path / "sweep.csv").read_text().strip().splitlines()[1]
        assert float(line.split(",")[1]) == pytest.approx(3.1e-2, rel=0.2)

    def test_non_increasing_betas_usage_error(self, tmp_path):
        code = main(["sweep", "--out", str(tmp_path),
                     "--override", "sweep.betas=[10.0,1.0]"])
        assert code == 2


class TestGradcheckCommand:
    def test_default_passes(self, tmp_path):
        code = main(["gradcheck", "--out", str(tmp_path),
                     "--override", "gradcheck.samples=200"])
        assert code == 0
        report = json.loads((tmp_path / "gradcheck_report.json").read_text())
        assert report["passed"] is True
        assert report["scalar_suite"]["samples"] == 200
        assert report["network_suite"]["passed"] is True

    def test_injected_sign_error_detected(self, tmp_path, monkeypatch, capsys):
        original = act.asau_partials

        def flipped(x, p):
            g = original(x, p)
            return AsauGrad(g.d_x, g.d_a, g.d_b, -g.d_alpha, g.d_beta)

        monkeypatch.setattr(act, "asau_partials", flipped)
        code = main(["gradcheck", "--out", str(tmp_path),
                     "--override", "gradcheck.samples=50"])
        assert code == 1
        assert "d_alpha" in capsys.readouterr().err
        report = json.loads((tmp_path / "gradcheck_report.json").read_text())
        assert any(f["partial"] == "d_alpha" for f in report["scalar_suite"]["failures"])
        assert all(f["partial"] == "d_alpha" for f in report["scalar_suite"]["failures"])

    def test_zero_samples_usage_error(self, tmp_path):
        code = main(["gradcheck", "--out", str(tmp_path),
                     "--override", "gradcheck.samples=0"])
        assert code == 2


TINY_COMPARE = ["--override", 'compare.dataset={"n":120,"noise":0.1}',
                "--override", 'compare.train={"max_epochs":8}']


class TestCompareCommand:
    def test_empty_roster_usage_error(self, tmp_path):
        code = main(["compare", "--out", str(tmp_path),
                     "--override", "compare.roster=[]"])
        assert code == 2

    def test_single_entry_roster_usage_error(self, tmp_path):
        code = main(["compare", "--out", str(tmp_path),
                     "--override", 'compare.roster=[{"name":"relu"}]'])
        assert code == 2

    def test_diverged_row_is_flagged_and_run_continues(self, tmp_path, monkeypatch):
        import asaukit.experiments as experiments
        from asaukit.train import TrainingDiverged

        def exploding_train_loop(*args, **kwargs):
            raise TrainingDiverged("loss became nan at epoch 1")

        monkeypatch.setattr(experiments, "train_loop", exploding_train_loop)
        code = main(["compare", "--out", str(tmp_path)] + TINY_COMPARE)
        assert code == 0  # the run completes; rows are flagged instead
        table = (tmp_path / "compare_classification.csv").read_text().splitlines()
        assert table[1].startswith("ReLU,nan")
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert all(row["diverged"] for row in manifest["rows"])
        assert all(row["metrics"] is None for row in manifest["rows"])

    def test_unknown_task_usage_error(self, tmp_path):
        code = main(["compare", "--out", str(tmp_path),
                     "--override", "compare.task=regression"])
        assert code == 2

    def test_tiny_classification_run(self, tmp_path):
        code = main(["compare", "--out", str(tmp_path)] + TINY_COMPARE)
        assert code == 0
        table = (tmp_path / "compare_classification.csv").read_text().splitlines()
        assert table[0] == ("activation,precision_macro,recall_macro,f1_macro,"
                            "precision_micro,recall_micro,f1_micro,accuracy,mcc")
        assert [line.split(",")[0] for line in table[1:]] == ["ReLU", "ASAU"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        labels = [row["activation"] for row in manifest["rows"]]
        assert labels == ["ReLU", "ASAU"]  # every roster entry exactly once
        assert manifest["seed"] == 12345
        for row in manifest["rows"]:
            assert row["diverged"] is False
            assert (tmp_path / row["files"]["history"]).exists()
            assert (tmp_path / row["files"]["checkpoint"]).exists()
        assert (tmp_path / "compare_classification.png").exists()

    def test_seed_flag_overrides_config(self, tmp_path):
        code = main(["compare", "--out", str(tmp_path), "--seed", "777"] + TINY_COMPARE)
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 777

    def test_tiny_segmentation_run(self, tmp_path):
        code = main(["compare", "--out", str(tmp_path),
                     "--override", "compare.task=segmentation",
                     "--override", 'compare.dataset={"n":12,"h":16,"w":16}',
                     "--override", 'compare.train={"max_epochs":2}',
                     "--override", 'compare.arch={"base":4}',
                     "--override", 'compare.roster=[{"name":"relu"},{"name":"asau"}]'])
        assert code == 0
        table = (tmp_path / "compare_segmentation.csv").read_text().splitlines()
        assert table[0] == "activation,mdsc,miou,recall,precision"
        assert [line.split(",")[0] for line in table[1:]] == ["ReLU", "ASAU"]

    def test_thread_cap_does_not_change_outputs(self, tmp_path, monkeypatch):
        assert main(["compare", "--out", str(tmp_path / "serial")] + TINY_COMPARE) == 0
        monkeypatch.setenv("ASAUKIT_THREADS", "4")
        assert main(["compare", "--out", str(tmp_path / "threaded")] + TINY_COMPARE) == 0
        assert sha_tree(tmp_path / "serial") == sha_tree(tmp_path / "threaded")


class TestDeterminism:
    def test_rerun_is_byte_identical(self, tmp_path):
        args_by_command = {
            "curves": ["--override", "curves.grid=[-3.0,3.0,0.05]"],
            "sweep": ["--override", "sweep.grid=[-5.0,5.0,0.01]"],
            "gradcheck": ["--override", "gradcheck.samples=100"],
            "compare": TINY_COMPARE,
        }
        for command, extra in args_by_command.items():
            d1 = tmp_path / f"{command}_1"
            d2 = tmp_path / f"{command}_2"
            assert main([command, "--out", str(d1)] + extra) == 0
            assert main([command, "--out", str(d2)] + extra) == 0
            assert sha_tree(d1) == sha_tree(d2), f"{command} outputs differ between runs"


class TestConfigPlumbing:
    def test_config_file_merges(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sweep": {"betas": [2.0, 20.0]},
                                   "out_dir": str(tmp_path / "out")}))
        code = main(["sweep", "--config", str(cfg)])
        assert code == 0
        lines = (tmp_path / "out" / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 3

    def test_missing_config_usage_error(self, tmp_path, capsys):
        code = main(["sweep", "--config", str(tmp_path / "nope.json")])
        assert code == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_malformed_override(self, tmp_path, capsys):
        code = main(["sweep", "--out", str(tmp_path), "--override", "novalue"])
        assert code == 2
