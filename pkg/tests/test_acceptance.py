"""Acceptance suite: one test per required criterion, at pinned tolerances.

Each test prints a PASS/FAIL line (run with ``pytest -s`` to see them all
even on success).
"""

import hashlib
import json
import os
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from pd36c import (
    ExecMode,
    TrainConfig,
    build_pd36c,
    evaluate,
    forward,
    grad_cam,
    lr_schedule,
    param_audit,
    shape_trace,
    train,
)
from pd36c import aggregate, confusion, macro_auc, per_class
from pd36c.data_io import load_weights, payload_nbytes, save_weights, stats_from_counts
from pd36c.errors import WeightFormatError

import oracles
from conftest import synthetic_arrays
from reference import (
    CANONICAL_AUDIT,
    GRAND_TOTAL,
    NON_TRAINABLE_TOTAL,
    PAYLOAD_BYTES,
    TRAINABLE_TOTAL,
)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL", flush=True)
        raise
    print(f"[ACCEPTANCE] {name}: PASS", flush=True)


def test_parameter_audit_exact():
    with criterion("parameter audit (Table rows + totals, zero tolerance, <1s)"):
        start = time.perf_counter()
        spec, store = build_pd36c(num_classes=38, init_seed=0)
        report = param_audit(spec, store)
        elapsed = time.perf_counter() - start
        rows = [(r.name, r.type_name, r.output_shape, r.params) for r in report.rows]
        assert rows == CANONICAL_AUDIT
        by_name = {r.name: r.params for r in report.rows}
        assert by_name["conv2d"] == 864
        assert by_name["conv2d_7"] == 589_824
        assert by_name["dense"] == 65_792
        assert by_name["predictions"] == 9_766
        assert report.trainable == TRAINABLE_TOTAL
        assert report.non_trainable == NON_TRAINABLE_TOTAL
        assert report.total == GRAND_TOTAL
        assert elapsed < 1.0, f"audit took {elapsed:.2f}s"


def test_shape_audit_exact():
    with criterion("shape audit (224 trace equals the reference column)"):
        spec, _ = build_pd36c(num_classes=38, init_seed=0)
        trace = shape_trace(spec, 224)
        expected = [(name, shape) for name, _, shape, _ in CANONICAL_AUDIT]
        assert trace == expected


def test_gradient_verification():
    with criterion("gradient verification (5 seeds, f32<1e-3, f64<1e-6, <60s)"):
        from test_gradients import run_gradient_suite

        start = time.perf_counter()
        run_gradient_suite()  # asserts every case internally
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"gradient suite took {elapsed:.1f}s"


def test_overfit_memorization():
    with criterion("overfit test (>=9/10 seeds reach 1.0 in <=60 epochs, lr 1e-3)"):
        start = time.perf_counter()
        wins = 0
        for seed in range(10):
            images, labels = synthetic_arrays(1000 + seed, n_classes=4, per_class=8, extent=32)
            spec, store = build_pd36c(num_classes=4, init_seed=seed, input_extent=32)

            initial_acc, initial_loss, _ = evaluate(spec, store, (images, labels))
            target = np.log(4)
            assert abs(initial_loss - target) <= 0.1 * target, (
                f"seed {seed}: initial loss {initial_loss:.4f} outside "
                f"ln(4)={target:.4f} +-10%"
            )

            cfg = TrainConfig(
                epochs=60, batch_size=8, lr_phase1=1e-3, lr_phase2=1e-3,
                phase2_start_epoch=61, seed=seed, stop_at_train_accuracy=1.0,
            )
            history = train(spec, store, (images, labels), (images, labels), cfg)
            if any(r.train_accuracy == 1.0 for r in history):
                wins += 1
        elapsed = time.perf_counter() - start
        assert wins >= 9, f"only {wins}/10 seeds memorized"
        assert elapsed < 600.0, f"overfit suite took {elapsed:.0f}s"


def test_metrics_oracle_equivalence():
    with criterion("metrics vs brute force (200 instances, 1e-9; identity 1e-12)"):
        rng = np.random.default_rng(77)
        for _ in range(200):
            c = int(rng.integers(2, 6))
            n = int(rng.integers(1, 51))
            y_true = rng.integers(0, c, n)
            y_pred = rng.integers(0, c, n)
            rows = rng.dirichlet(np.ones(c), size=n)

            cm = confusion(y_true, y_pred, c)
            assert cm.counts.tolist() == oracles.brute_confusion(y_true, y_pred, c)
            pc = per_class(cm)
            bp, br, bf, _ = oracles.brute_per_class(y_true, y_pred, c)
            assert np.abs(pc.precision - bp).max() < 1e-9
            assert np.abs(pc.recall - br).max() < 1e-9
            assert np.abs(pc.f1 - bf).max() < 1e-9
            agg = aggregate(cm, pc)
            assert abs(agg.accuracy - oracles.brute_accuracy(y_true, y_pred)) < 1e-9
            assert (
                abs(agg.balanced_accuracy - oracles.brute_balanced_accuracy(y_true, y_pred, c))
                < 1e-9
            )
            assert abs(agg.mcc - oracles.brute_mcc(y_true, y_pred, c)) < 1e-9
            assert abs(agg.kappa - oracles.brute_kappa(y_true, y_pred, c)) < 1e-9
            assert abs(agg.weighted_recall - agg.accuracy) < 1e-12
            if len(set(y_true.tolist())) >= 2:
                auc, _ = macro_auc(rows, y_true)
                assert abs(auc - oracles.brute_macro_auc(rows.tolist(), y_true.tolist(), c)) < 1e-9


def test_lr_schedule_fidelity():
    with criterion("LR schedule (1e-4 epochs 1-15, 5e-5 epochs 16-30, exact)"):
        cfg = TrainConfig()
        column = [lr_schedule(epoch, cfg) for epoch in range(1, 31)]
        assert column == [1e-4] * 15 + [5e-5] * 15


def test_balance_indicator_reproduction():
    with criterion("balance indicator (std/mean of reference counts = 0.056 +-0.001)"):
        stats = stats_from_counts([1849.87 - 104.32, 1849.87 + 104.32])
        assert stats.mean == pytest.approx(1849.87, abs=1e-9)
        assert stats.std == pytest.approx(104.32, abs=1e-9)
        assert abs(stats.balance - 0.056) <= 0.001


def test_serialization_round_trip(tmp_path):
    with criterion("serialization (bit-identical round trip, corruption detected)"):
        spec, store = build_pd36c(num_classes=4, init_seed=11, input_extent=32)
        path = tmp_path / "model.pd36"
        save_weights(spec, store, path)
        loaded = load_weights(path)
        for layer, name, arr, _ in store.flat():
            assert np.array_equal(loaded.store[layer][name], arr)
        x = np.random.default_rng(0).uniform(0, 255, (1, 32, 32, 3)).astype(np.float32)
        assert np.array_equal(
            forward(spec, store, x, ExecMode.INFER),
            forward(loaded.spec, loaded.store, x, ExecMode.INFER),
        )
        raw = bytearray(path.read_bytes())
        raw[len(raw) - 10] ^= 0x01  # inside the payload
        bad = tmp_path / "bad.pd36"
        bad.write_bytes(bytes(raw))
        with pytest.raises(WeightFormatError):
            load_weights(bad)


_THREAD_PROBE = """
import hashlib
import numpy as np
from pd36c import ExecMode, build_pd36c, forward
spec, store = build_pd36c(num_classes=38, init_seed=123, input_extent=32)
x = np.random.default_rng(9).uniform(0, 255, (2, 32, 32, 3)).astype(np.float32)
probs = forward(spec, store, x, ExecMode.INFER)
print(hashlib.sha256(probs.tobytes()).hexdigest())
"""


def test_inference_determinism_and_bypass():
    with criterion("inference determinism and stochastic-layer bypass"):
        spec, store = build_pd36c(num_classes=4, init_seed=3, input_extent=32)
        x = np.random.default_rng(1).uniform(0, 255, (3, 32, 32, 3)).astype(np.float32)
        runs = [forward(spec, store, x, ExecMode.INFER) for _ in range(3)]
        assert np.array_equal(runs[0], runs[1]) and np.array_equal(runs[1], runs[2])

        stripped = spec.without({"dropout", "augment"})
        assert np.array_equal(runs[0], forward(stripped, store, x, ExecMode.INFER))

        hashes = set()
        for threads in ("1", "2", "4"):
            env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads)
            out = subprocess.run(
                [sys.executable, "-c", _THREAD_PROBE],
                capture_output=True, text=True, env=env, check=True,
            )
            hashes.add(out.stdout.strip())
        assert len(hashes) == 1, f"thread-count-dependent results: {hashes}"


def test_grad_cam_properties():
    with criterion("class-evidence heatmaps (range, 224 extent, determinism)"):
        spec, store = build_pd36c(num_classes=38, init_seed=5)
        image = np.random.default_rng(2).uniform(0, 255, (1, 224, 224, 3)).astype(np.float32)
        heat = grad_cam(spec, store, image, class_index=7)
        assert heat.values.shape == (224, 224)  # upsampled from the 28x28 map
        assert heat.source_layer == "conv2d_7"
        assert heat.values.min() >= 0.0 and heat.values.max() <= 1.0
        again = grad_cam(spec, store, image, class_index=7)
        assert np.array_equal(heat.values, again.values)

        # single positive channel: heatmap == min-max normalized activation
        from test_explain import single_channel_model

        tiny_spec, tiny_store = single_channel_model([1.0, -1.0])
        small = np.random.default_rng(3).uniform(10, 245, (1, 16, 16, 3)).astype(np.float32)
        probs, captured = forward(tiny_spec, tiny_store, small, ExecMode.INFER, capture=["conv2d"])
        activation = captured["conv2d"][0, :, :, 0]
        expected = (activation - activation.min()) / (activation.max() - activation.min())
        single = grad_cam(tiny_spec, tiny_store, small, class_index=0, target_layer="conv2d")
        assert np.allclose(single.values, expected, atol=1e-6)


def test_raw_weight_payload_size(tmp_path):
    with criterion("raw weight payload (exactly 5,002,776 bytes for 38 classes)"):
        spec, store = build_pd36c(num_classes=38, init_seed=0)
        assert store.count() * 4 == PAYLOAD_BYTES
        path = tmp_path / "canonical.pd36"
        save_weights(spec, store, path)
        assert payload_nbytes(path) == PAYLOAD_BYTES
        # consistent with the reported ~4.77 MB raw footprint
        assert PAYLOAD_BYTES / (1024 * 1024) == pytest.approx(4.77, abs=0.01)


def test_latency_reporting(tmp_path, capsys):
    with criterion("latency benchmark (mean/p95 over >=20 runs, single run <5s)"):
        from pd36c.cli import main
        from PIL import Image

        spec, store = build_pd36c(num_classes=38, init_seed=0)
        weights = tmp_path / "canonical.pd36"
        save_weights(spec, store, weights)
        image_path = tmp_path / "probe.png"
        rng = np.random.default_rng(4)
        Image.fromarray(rng.integers(0, 256, (256, 256, 3), dtype=np.uint8)).save(image_path)

        assert main([
            "predict", "--weights", str(weights), "--image", str(image_path),
            "--json", "--bench", "20",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        bench = payload["bench"]
        assert bench["runs"] == 20
        assert bench["mean_ms"] > 0 and bench["p95_ms"] >= bench["mean_ms"] * 0.5
        assert bench["mean_ms"] < 5000.0, f"mean inference {bench['mean_ms']:.0f} ms"
        assert payload["latency_ms"] < 5000.0
