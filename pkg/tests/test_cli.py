import json

import numpy as np
import pytest

from pd36c import load_weights, read_history
from pd36c.cli import EXIT_INPUT, EXIT_OK, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTrainCommand:
    def test_two_epoch_smoke(self, fixture_dataset, tmp_path, capsys):
        weights = tmp_path / "w.pd36"
        history = tmp_path / "h.csv"
        code, out, _ = run_cli(
            capsys,
            "train", "--data", str(fixture_dataset),
            "--out-weights", str(weights), "--out-history", str(history),
            "--epochs", "2", "--extent", "32", "--seed", "5",
        )
        assert code == EXIT_OK
        assert len(read_history(history).records) == 2
        loaded = load_weights(weights)  # loads back cleanly
        assert loaded.spec.num_classes == 4
        # per-epoch lines carry the six history columns in order
        epoch_lines = [l for l in out.splitlines() if l.strip().startswith(("1 ", "2 "))]
        assert len(epoch_lines) == 2

    def test_seed_determinism_byte_identical(self, fixture_dataset, tmp_path, capsys):
        paths = []
        for tag in ("a", "b"):
            weights = tmp_path / f"w_{tag}.pd36"
            history = tmp_path / f"h_{tag}.csv"
            code, _, _ = run_cli(
                capsys,
                "train", "--data", str(fixture_dataset),
                "--out-weights", str(weights), "--out-history", str(history),
                "--epochs", "2", "--extent", "32", "--seed", "9",
            )
            assert code == EXIT_OK
            paths.append((weights, history))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


class TestInspectCommand:
    def test_canonical_totals_printed(self, capsys):
        code, out, _ = run_cli(capsys, "inspect")
        assert code == EXIT_OK
        assert "TOTAL: 1,250,694" in out
        assert "Trainable params: 1,248,774" in out
        assert "conv2d_7" in out and "589,824" in out

    def test_two_class_head_differs_only_in_head(self, capsys):
        code, out, _ = run_cli(capsys, "inspect", "--num-classes", "2")
        assert code == EXIT_OK
        assert "514" in out
        assert "65,792" in out  # hidden dense unchanged


class TestPredictCommand:
    def test_text_output(self, trained_fixture, capsys):
        image = next(iter((trained_fixture["root"] / "valid").rglob("*.png")))
        code, out, _ = run_cli(
            capsys, "predict", "--weights", str(trained_fixture["weights"]),
            "--image", str(image),
        )
        assert code == EXIT_OK
        assert "prediction:" in out and "confidence:" in out
        assert "latency:" in out and "ms" in out

    def test_json_output_matches_contract(self, trained_fixture, capsys):
        image = next(iter((trained_fixture["root"] / "valid").rglob("*.png")))
        code, out, _ = run_cli(
            capsys, "predict", "--weights", str(trained_fixture["weights"]),
            "--image", str(image), "--json", "--bench", "3",
        )
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["class_name"] in trained_fixture["classes"]
        assert 0.0 <= payload["confidence"] <= 1.0
        assert payload["latency_ms"] > 0
        top = [e["probability"] for e in payload["top_k"]]
        assert all(a >= b for a, b in zip(top, top[1:]))
        assert payload["bench"]["runs"] == 3
        assert payload["bench"]["p95_ms"] >= 0

    def test_missing_weights_is_input_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "predict", "--weights", str(tmp_path / "none.pd36"),
            "--image", str(tmp_path / "none.png"),
        )
        assert code == EXIT_INPUT
        assert "error" in err.lower()


class TestEvalCommand:
    def test_memorizing_model_on_its_training_split(self, trained_fixture, tmp_path, capsys):
        outdir = tmp_path / "eval"
        code, out, _ = run_cli(
            capsys, "eval", "--weights", str(trained_fixture["weights"]),
            "--data", str(trained_fixture["root"]), "--split", "train",
            "--outdir", str(outdir),
        )
        assert code == EXIT_OK
        report = json.loads((outdir / "report.json").read_text())
        assert report["accuracy"] == 1.0
        for row in report["per_class"]:
            assert row["precision"] == 1.0
            assert row["recall"] == 1.0
            assert row["f1_score"] == 1.0
        assert report["weighted_avg"]["recall"] == pytest.approx(report["accuracy"], abs=1e-12)
        margins_lines = (outdir / "margins.csv").read_text().strip().splitlines()
        assert margins_lines[0] == "c_true,c_best,c_second,margin,correct"
        assert len(margins_lines) == 25  # 24 images + header
        confusion_lines = (outdir / "confusion.csv").read_text().strip().splitlines()
        assert len(confusion_lines) == 5
        # the text table renders the accuracy row in the trailing block
        assert "accuracy" in out

    def test_class_count_mismatch_is_input_error(self, trained_fixture, tmp_path, capsys):
        import numpy as np
        from PIL import Image

        other = tmp_path / "other"
        for cls in ("OnlyOne",):
            d = other / "valid" / cls
            d.mkdir(parents=True)
            Image.fromarray(np.zeros((32, 32, 3), np.uint8)).save(d / "x.png")
        code, _, err = run_cli(
            capsys, "eval", "--weights", str(trained_fixture["weights"]),
            "--data", str(other), "--split", "valid", "--outdir", str(tmp_path / "o"),
        )
        assert code == EXIT_INPUT


class TestGradcamCommand:
    def test_writes_all_artifacts(self, trained_fixture, tmp_path, capsys):
        image = next(iter((trained_fixture["root"] / "valid").rglob("*.png")))
        out_png = tmp_path / "heat.png"
        out_overlay = tmp_path / "overlay.png"
        out_csv = tmp_path / "grid.csv"
        code, out, _ = run_cli(
            capsys, "gradcam", "--weights", str(trained_fixture["weights"]),
            "--image", str(image), "--out", str(out_png),
            "--out-overlay", str(out_overlay), "--out-csv", str(out_csv),
        )
        assert code == EXIT_OK
        assert out_png.exists() and out_overlay.exists() and out_csv.exists()
        assert "conv2d_7" in out

    def test_unknown_class_name_is_input_error(self, trained_fixture, tmp_path, capsys):
        image = next(iter((trained_fixture["root"] / "valid").rglob("*.png")))
        code, _, _ = run_cli(
            capsys, "gradcam", "--weights", str(trained_fixture["weights"]),
            "--image", str(image), "--class-name", "NotAClass",
            "--out", str(tmp_path / "h.png"),
        )
        assert code == EXIT_INPUT


class TestStatsCommand:
    def test_balanced_fixture(self, fixture_dataset, capsys):
        code, out, _ = run_cli(capsys, "stats", "--data", str(fixture_dataset), "--split", "train")
        assert code == EXIT_OK
        assert "Unique categories    4" in out
        assert "Balance indicator    0.000" in out
