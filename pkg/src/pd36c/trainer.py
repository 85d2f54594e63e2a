"""Categorical cross-entropy training with Adam and a two-phase LR schedule.

Datasets are in-memory pairs ``(images, labels)``: images (N, H, W, 3)
float32 in [0, 255] (the graph's rescale layer divides by 255), labels
(N,) integer class indices. Epochs are 1-based; the learning rate is a
step function that drops once at ``phase2_start_epoch``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentConfig, augment_batch
from .errors import ConfigError, DataError, ShapeError
from .model import ModelSpec, ParamStore, run_backward, run_forward
from .tensor import ExecMode

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    lr_phase1: float = 1e-4
    lr_phase2: float = 5e-5
    phase2_start_epoch: int = 16
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-7
    label_smoothing: float = 0.0
    seed: int = 0
    #: optional early exit once training accuracy reaches this level
    stop_at_train_accuracy: float | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 1 <= self.phase2_start_epoch <= self.epochs + 1:
            raise ConfigError(
                f"phase2_start_epoch must be in [1, epochs + 1], got {self.phase2_start_epoch}"
            )
        if not 0.0 <= self.label_smoothing < 0.5:
            raise ConfigError(
                f"label_smoothing must be in [0, 0.5), got {self.label_smoothing}"
            )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    learning_rate: float
    train_accuracy: float
    train_loss: float
    val_accuracy: float
    val_loss: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def best_val_accuracy_epoch(self) -> int:
        best = max(self.records, key=lambda r: (r.val_accuracy, -r.epoch))
        return best.epoch

    @property
    def best_val_loss_epoch(self) -> int:
        best = min(self.records, key=lambda r: (r.val_loss, r.epoch))
        return best.epoch


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Learning rate for a 1-based epoch: phase 1 before
    ``phase2_start_epoch``, phase 2 from it onward."""
    if not 1 <= epoch <= cfg.epochs:
        raise ConfigError(f"epoch must be in [1, {cfg.epochs}], got {epoch}")
    return cfg.lr_phase1 if epoch < cfg.phase2_start_epoch else cfg.lr_phase2


def smoothed_targets(targets: np.ndarray, num_classes: int, smoothing: float) -> np.ndarray:
    """One-hot rows with mass ``smoothing`` spread uniformly over classes."""
    q = np.full((targets.shape[0], num_classes), smoothing / num_classes, dtype=np.float64)
    q[np.arange(targets.shape[0]), targets] += 1.0 - smoothing
    return q


def cross_entropy(probs: np.ndarray, target, smoothing: float = 0.0):
    """Loss and logits-gradient for softmax outputs.

    For a single (C,) row and integer target, returns ``(loss, p - q)``.
    For an (N, C) batch and an (N,) target array, returns the mean loss and
    ``(p - q) / N`` so the gradient matches the mean. The log is clamped
    below at 1e-12.
    """
    single = probs.ndim == 1
    p = probs[None, :] if single else probs
    targets = np.atleast_1d(np.asarray(target, dtype=np.intp))
    n, c = p.shape
    if targets.shape != (n,):
        raise ShapeError(f"targets shape {targets.shape} does not match probs {p.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= c):
        raise DataError(f"target class out of range [0, {c})")
    q = smoothed_targets(targets, c, smoothing)
    logp = np.log(np.maximum(p, 1e-12))
    loss = float(-(q * logp).sum() / n)
    dlogits = (p - q).astype(probs.dtype)
    if single:
        return loss, dlogits[0]
    return loss, dlogits / probs.dtype.type(n)


class AdamState:
    """First/second-moment accumulators per buffer plus the step counter."""

    def __init__(self):
        self.m: dict[str, dict[str, np.ndarray]] = {}
        self.v: dict[str, dict[str, np.ndarray]] = {}
        self.step = 0


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> None:
    """One bias-corrected Adam update, in place on ``param``, ``m``, ``v``."""
    if grad.shape != param.shape:
        raise ShapeError(f"gradient shape {grad.shape} does not match parameter {param.shape}")
    dt = param.dtype.type
    m *= dt(beta1)
    m += dt(1 - beta1) * grad
    v *= dt(beta2)
    v += dt(1 - beta2) * grad * grad
    m_hat = m / dt(1 - beta1**step)
    v_hat = v / dt(1 - beta2**step)
    param -= dt(lr) * m_hat / (np.sqrt(v_hat) + dt(eps))


def adam_step(
    store: ParamStore,
    grads: dict[str, dict[str, np.ndarray]],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-7,
) -> None:
    """Apply one Adam step to every buffer that has a gradient."""
    state.step += 1
    for layer, layer_grads in grads.items():
        ms = state.m.setdefault(layer, {})
        vs = state.v.setdefault(layer, {})
        for name, grad in layer_grads.items():
            param = store[layer][name]
            if name not in ms:
                ms[name] = np.zeros_like(param)
                vs[name] = np.zeros_like(param)
            adam_update(param, grad, ms[name], vs[name], state.step, lr, beta1, beta2, eps)


def _check_dataset(dataset, num_classes: int, what: str):
    images, labels = dataset
    if len(images) == 0:
        raise DataError(f"{what} dataset is empty")
    if len(images) != len(labels):
        raise ShapeError(
            f"{what} dataset has {len(images)} images but {len(labels)} labels"
        )
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ConfigError(
            f"{what} labels span [{labels.min()}, {labels.max()}] but the model "
            f"head has {num_classes} classes"
        )
    return np.asarray(images), labels


def evaluate(
    spec: ModelSpec,
    store: ParamStore,
    dataset,
    batch_size: int = 32,
    smoothing: float = 0.0,
):
    """Infer-mode accuracy, mean loss, and per-image probability rows."""
    images, labels = _check_dataset(dataset, spec.num_classes, "eval")
    rows = []
    loss_sum = 0.0
    for start in range(0, len(images), batch_size):
        xb = images[start : start + batch_size]
        yb = labels[start : start + batch_size]
        probs, _, _ = run_forward(spec, store, xb, ExecMode.INFER)
        batch_loss, _ = cross_entropy(probs, yb, smoothing)
        loss_sum += batch_loss * len(xb)
        rows.append(probs)
    prob_rows = np.concatenate(rows, axis=0)
    accuracy = float(np.mean(prob_rows.argmax(axis=1) == labels))
    return accuracy, loss_sum / len(images), prob_rows


def train(
    spec: ModelSpec,
    store: ParamStore,
    train_set,
    val_set,
    cfg: TrainConfig,
    augment_cfg: AugmentConfig | None = None,
    on_epoch=None,
) -> TrainHistory:
    """Run the full loop and return one record per epoch.

    Per epoch: seeded shuffle, then per batch augment (when ``augment_cfg``
    is given and the graph's own augmentation hook is idle) -> Train-mode
    forward -> cross-entropy -> backward -> Adam with the scheduled rate;
    afterwards an Infer-mode pass over the validation set. Training
    accuracy/loss are running batch averages, so they reflect the weights
    as they moved through the epoch. ``on_epoch``, when given, receives
    each record as soon as it is complete.
    """
    train_images, train_labels = _check_dataset(train_set, spec.num_classes, "train")
    _check_dataset(val_set, spec.num_classes, "validation")
    rng = np.random.default_rng(cfg.seed)
    state = AdamState()
    history = TrainHistory()

    for epoch in range(1, cfg.epochs + 1):
        lr = lr_schedule(epoch, cfg)
        perm = rng.permutation(len(train_images))
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(perm), cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            xb = train_images[idx]
            yb = train_labels[idx]
            if augment_cfg is not None:
                xb = augment_batch(xb, augment_cfg, ExecMode.TRAIN, rng)
            probs, tape, _ = run_forward(
                spec, store, xb, ExecMode.TRAIN, rng, with_tape=True
            )
            batch_loss, dlogits = cross_entropy(probs, yb, cfg.label_smoothing)
            grads, _ = run_backward(spec, store, tape, dlogits)
            adam_step(
                store, grads, state, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
            )
            loss_sum += batch_loss * len(xb)
            correct += int((probs.argmax(axis=1) == yb).sum())
        train_loss = loss_sum / len(train_images)
        train_acc = correct / len(train_images)
        val_acc, val_loss, _ = evaluate(
            spec, store, val_set, batch_size=cfg.batch_size, smoothing=cfg.label_smoothing
        )
        record = EpochRecord(epoch, lr, train_acc, train_loss, val_acc, val_loss)
        history.records.append(record)
        if on_epoch is not None:
            on_epoch(record)
        log.info(
            "epoch %d: lr=%g train_acc=%.5f train_loss=%.5f val_acc=%.5f val_loss=%.5f",
            epoch, lr, train_acc, train_loss, val_acc, val_loss,
        )
        if (
            cfg.stop_at_train_accuracy is not None
            and train_acc >= cfg.stop_at_train_accuracy
        ):
            break
    log.info(
        "best validation accuracy at epoch %d, best validation loss at epoch %d",
        history.best_val_accuracy_epoch,
        history.best_val_loss_epoch,
    )
    return history
