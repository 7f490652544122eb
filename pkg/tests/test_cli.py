"""CLI subcommands: exit codes, artifacts, and determinism."""
import json

import numpy as np
import pytest

from labelaudit.cli import main

from conftest import gaussian_mixture


@pytest.fixture
def workspace(tmp_path):
    """Raw feature file + clean/noisy label files for a small 3-cluster set."""
    features, clean = gaussian_mixture(50, 3, 6, 8.0, 0)
    (tmp_path / "feat.f32").write_bytes(features.astype("<f4").tobytes())
    (tmp_path / "feat.json").write_text(
        json.dumps({"rows": features.shape[0], "cols": features.shape[1], "dtype": "f32"})
    )
    (tmp_path / "clean.txt").write_text("".join(f"{v}\n" for v in clean))
    rng = np.random.default_rng(1)
    noisy = clean.copy()
    flip = rng.random(clean.size) < 0.2
    noisy[flip] = (clean[flip] + 1) % 3
    (tmp_path / "noisy.txt").write_text("".join(f"{v}\n" for v in noisy))
    return tmp_path


def detect_args(ws, out, *extra):
    return [
        "detect",
        "--features", str(ws / "feat.f32"),
        "--labels", str(ws / "noisy.txt"),
        "--out", str(out),
        "--k", "5",
        "--epochs", "3",
        "--seed", "0",
        *extra,
    ]


class TestDetect:
    def test_writes_report_and_summary(self, workspace, capsys):
        out = workspace / "report.json"
        assert main(detect_args(workspace, out)) == 0
        assert "N=150 K=3" in capsys.readouterr().out
        raw = json.loads(out.read_text())
        assert len(raw["flags"]) == 150
        assert raw["config"]["seed"] == 0

    def test_byte_identical_reruns(self, workspace):
        a, b = workspace / "a.json", workspace / "b.json"
        assert main(detect_args(workspace, a)) == 0
        assert main(detect_args(workspace, b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_byte_identical_across_threads(self, workspace):
        a, b = workspace / "t1.json", workspace / "t8.json"
        assert main(detect_args(workspace, a, "--threads", "1")) == 0
        assert main(detect_args(workspace, b, "--threads", "8")) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rank_mode_summary_lists_heads(self, workspace, capsys):
        out = workspace / "rank.json"
        assert main(detect_args(workspace, out, "--method", "rank")) == 0
        assert "per-class-head=" in capsys.readouterr().out

    def test_clean_labels_embed_evaluation(self, workspace):
        out = workspace / "with_eval.json"
        args = detect_args(workspace, out, "--clean", str(workspace / "clean.txt"))
        assert main(args) == 0
        raw = json.loads(out.read_text())
        assert "evaluation" in raw
        assert raw["evaluation"]["f1"] is not None

    def test_missing_sidecar_is_data_error(self, workspace, capsys):
        (workspace / "feat.json").unlink()
        code = main(detect_args(workspace, workspace / "r.json"))
        assert code == 2
        assert "sidecar" in capsys.readouterr().err

    def test_even_epochs_is_config_error(self, workspace):
        args = detect_args(workspace, workspace / "r.json")
        args[args.index("--epochs") + 1] = "4"
        assert main(args) == 1

    def test_unknown_flag_exits_one(self, workspace):
        with pytest.raises(SystemExit) as exc:
            main(detect_args(workspace, workspace / "r.json", "--definitely-not-a-flag"))
        assert exc.value.code == 1

    def test_noise_model_file_round(self, workspace):
        model_path = workspace / "nm.json"
        model_path.write_text(
            json.dumps(
                {
                    "prior": [1 / 3, 1 / 3, 1 / 3],
                    "transition": np.eye(3).tolist(),
                    "noisy_marginal": [1 / 3, 1 / 3, 1 / 3],
                }
            )
        )
        out = workspace / "given.json"
        args = detect_args(
            workspace, out, "--method", "rank", "--noise-source", "file", "--noise-model",
            str(model_path),
        )
        assert main(args) == 0
        raw = json.loads(out.read_text())
        assert raw["thresholds"] == [0, 0, 0]
        assert sum(raw["flags"]) == 0

    def test_noise_source_file_requires_model(self, workspace):
        args = detect_args(workspace, workspace / "r.json", "--noise-source", "file")
        assert main(args) == 1


class TestInject:
    def test_writes_labels_and_manifest(self, workspace, capsys):
        out = workspace / "injected.txt"
        code = main(
            [
                "inject",
                "--labels", str(workspace / "clean.txt"),
                "--kind", "symmetric",
                "--eta", "0.3",
                "--seed", "4",
                "--out", str(out),
            ]
        )
        assert code == 0
        labels = [int(v) for v in out.read_text().split()]
        assert len(labels) == 150
        manifest = json.loads((workspace / "injected.txt.manifest.json").read_text())
        assert manifest["kind"] == "symmetric"
        assert 0.1 < manifest["realized_fraction"] < 0.5
        assert "realized_fraction=" in capsys.readouterr().out

    def test_instance_kind_requires_features(self, workspace):
        code = main(
            [
                "inject",
                "--labels", str(workspace / "clean.txt"),
                "--kind", "instance",
                "--eta", "0.3",
                "--out", str(workspace / "x.txt"),
            ]
        )
        assert code == 1

    def test_eta_out_of_range(self, workspace):
        code = main(
            [
                "inject",
                "--labels", str(workspace / "clean.txt"),
                "--kind", "symmetric",
                "--eta", "1.0",
                "--out", str(workspace / "x.txt"),
            ]
        )
        assert code == 1


class TestEval:
    def test_metrics_json(self, workspace, capsys):
        report = workspace / "report.json"
        assert main(detect_args(workspace, report)) == 0
        capsys.readouterr()
        code = main(
            ["eval", "--report", str(report), "--clean", str(workspace / "clean.txt")]
        )
        assert code == 0
        metrics = json.loads(capsys.readouterr().out)
        assert set(metrics) >= {"precision", "recall", "f1", "tp", "fp", "fn"}

    def test_mismatched_lengths(self, workspace):
        report = workspace / "report.json"
        assert main(detect_args(workspace, report)) == 0
        (workspace / "short.txt").write_text("0\n1\n")
        assert main(["eval", "--report", str(report), "--clean", str(workspace / "short.txt")]) == 2


class TestProfileK:
    def test_tsv_table(self, workspace, capsys):
        code = main(
            [
                "profile-k",
                "--features", str(workspace / "feat.f32"),
                "--clean", str(workspace / "clean.txt"),
                "--k-max", "4",
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "k\tmismatch_rate"
        assert len(lines) == 5


class TestBound:
    def test_prop41_json(self, capsys):
        assert main(["bound", "--prop41", "--k", "10", "--e", "0.4", "--delta", "0.2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert 0.0 < payload["bound"] < 1.0

    def test_breakeven_json(self, capsys):
        code = main(
            ["bound", "--breakeven", "--k1", "5", "--k2", "20", "--e", "0.4", "--delta", "0.2"]
        )
        assert code == 0
        assert json.loads(capsys.readouterr().out)["breakeven_delta"] == pytest.approx(0.47, abs=0.01)

    def test_rank_f1_json(self, capsys):
        code = main(
            [
                "bound", "--rank-f1",
                "--n-corrupted", "50",
                "--n-clean", "150",
                "--alpha", "5",
                "--mu-gap", "0.99",
                "--band-width", "0.05",
                "--tail-decay", "2.0",
                "--mc-samples", "20000",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert {"f1_lower", "prob", "prob_ci_halfwidth"} <= set(payload)

    def test_requires_exactly_one_mode(self):
        assert main(["bound", "--k", "10"]) == 1
        assert main(["bound", "--prop41", "--breakeven", "--k", "1", "--e", "0.1", "--delta", "0"]) == 1

    def test_missing_mode_arguments(self):
        assert main(["bound", "--prop41", "--k", "10"]) == 1
