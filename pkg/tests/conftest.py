import json

import numpy as np
import pytest
from PIL import Image

from pd36c import TrainConfig, build_pd36c, save_weights, train

FIXTURE_CLASSES = ("Apple Black rot", "Apple healthy", "Grape healthy", "Tomato Leaf Mold")
FIXTURE_BASE_COLORS = ((70, 200, 80), (120, 160, 110), (170, 120, 140), (220, 80, 170))


def class_image(rng: np.random.Generator, class_index: int, extent: int = 64) -> np.ndarray:
    """Synthetic leaf stand-in: a class color signature plus pixel noise."""
    base = np.array(FIXTURE_BASE_COLORS[class_index], dtype=np.float64)
    img = base + rng.normal(0.0, 25.0, size=(extent, extent, 3))
    return np.clip(img, 0, 255).astype(np.uint8)


def synthetic_arrays(seed: int, n_classes: int = 4, per_class: int = 8, extent: int = 32):
    """In-memory dataset of separable class-colored noise images."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for c in range(n_classes):
        base = rng.uniform(40, 215, size=3)
        for _ in range(per_class):
            img = np.clip(base + rng.normal(0, 30, size=(extent, extent, 3)), 0, 255)
            images.append(img.astype(np.float32))
            labels.append(c)
    return np.stack(images), np.asarray(labels, dtype=np.intp)


@pytest.fixture(scope="session")
def fixture_dataset(tmp_path_factory):
    """Directory-per-class image tree: 4 classes, 6 train + 3 valid each."""
    root = tmp_path_factory.mktemp("dataset")
    rng = np.random.default_rng(42)
    for split, per in (("train", 6), ("valid", 3)):
        for ci, cls in enumerate(FIXTURE_CLASSES):
            d = root / split / cls
            d.mkdir(parents=True)
            for j in range(per):
                Image.fromarray(class_image(rng, ci)).save(d / f"img_{j}.png")
    return root


@pytest.fixture(scope="session")
def trained_fixture(fixture_dataset, tmp_path_factory):
    """A model trained to memorize the fixture, saved with a knowledge base.

    Batch-norm momentum is lowered so the moving statistics settle within
    the few dozen steps a fixture-scale run takes.
    """
    from pd36c.data_io import load_dataset, scan_dataset

    out = tmp_path_factory.mktemp("trained")
    train_manifest = scan_dataset(fixture_dataset, "train")
    val_manifest = scan_dataset(fixture_dataset, "valid")
    train_set = load_dataset(train_manifest, model_extent=32)
    val_set = load_dataset(val_manifest, model_extent=32)
    spec, store = build_pd36c(
        num_classes=4, init_seed=7, input_extent=32, bn_momentum=0.7
    )
    cfg = TrainConfig(
        epochs=40,
        batch_size=8,
        lr_phase1=1e-3,
        lr_phase2=1e-3,
        phase2_start_epoch=41,
        seed=7,
    )
    history = train(spec, store, train_set, val_set, cfg)
    weights = out / "fixture.pd36"
    save_weights(spec, store, weights, class_names=train_manifest.classes)
    kb = out / "kb.json"
    kb.write_text(
        json.dumps(
            {
                "Apple Black rot": {
                    "description": "Dark circular lesions on fruit and foliage.",
                    "treatment": "Prune infected wood and apply fungicide at bud break.",
                }
            }
        ),
        encoding="utf-8",
    )
    return {
        "weights": weights,
        "kb": kb,
        "spec": spec,
        "store": store,
        "history": history,
        "classes": train_manifest.classes,
        "root": fixture_dataset,
    }


@pytest.fixture()
def tiny_model():
    """Fresh 4-class model at 32x32; function-scoped because stores mutate."""
    return build_pd36c(num_classes=4, init_seed=0, input_extent=32)
