"""PD36-C graph construction, parameter audit, and execution.

PD36-C is a compact 1,250,694-parameter classifier: four conv blocks
(two 3x3 convolutions each, filters 32-32-64-64-128-128-256-256, every
convolution followed by batch norm and ReLU, every block closed by a 2x2
max pool), then dropout 0.25, global average pooling, a 256-unit ReLU
dense layer, dropout 0.40, and a softmax output head.

Convolutions carry no bias: the 864 = 3*3*3*32 kernel count of the first
layer leaves no room for one, and the batch-norm shift beta supplies the
per-channel offset.

The graph is interpreted, not compiled: ``run_forward`` walks the node
list and records a tape of per-node caches, ``run_backward`` walks the
tape in reverse. ModelSpec and ParamStore are immutable during inference;
only the trainer mutates parameters (and batch-norm moving statistics,
which Train-mode forward updates in place).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import ops
from .augment import AugmentConfig, augment_batch, rescale
from .errors import ConfigError, ShapeError, StateError
from .tensor import COMPUTE_DTYPE, ExecMode, require_rank4

BN_EPS = 1e-3
BN_MOMENTUM = 0.99
CONV_FILTERS = (32, 32, 64, 64, 128, 128, 256, 256)
DROPOUT_RATE_1 = 0.25
DROPOUT_RATE_2 = 0.40
HIDDEN_UNITS = 256
CANONICAL_INPUT_EXTENT = 224
CANONICAL_NUM_CLASSES = 38
MIN_INPUT_EXTENT = 16

#: buffer names that hold running statistics rather than trained weights
NON_TRAINABLE_BUFFERS = frozenset({"moving_mean", "moving_var"})

_TYPE_NAMES = {
    "augment": "Sequential",
    "rescale": "Rescaling",
    "conv2d": "Conv2D",
    "batchnorm": "BatchNormalization",
    "relu": "Activation",
    "maxpool2x2": "MaxPooling2D",
    "dropout": "Dropout",
    "globalavgpool": "GlobalAveragePooling2D",
    "dense": "Dense",
    "softmax": "Softmax",
}

_BUFFER_ORDER = {
    "conv2d": ("kernel",),
    "batchnorm": ("gamma", "beta", "moving_mean", "moving_var"),
    "dense": ("w", "b"),
}


@dataclass(frozen=True)
class OpNode:
    """One layer of the graph; unused hyperparameter fields stay None."""

    name: str
    kind: str
    filters: int | None = None  # conv2d (kernel extent is fixed at 3)
    units: int | None = None  # dense
    activation: str | None = None  # dense: None | "relu" | "softmax"
    rate: float | None = None  # dropout
    eps: float | None = None  # batchnorm
    momentum: float | None = None  # batchnorm
    cfg: AugmentConfig | None = None  # augment hook; None means bypass


@dataclass(frozen=True)
class ModelSpec:
    """Ordered node list plus the head size and canonical input extent."""

    layers: tuple[OpNode, ...]
    num_classes: int
    input_extent: int = CANONICAL_INPUT_EXTENT

    def node(self, name: str) -> OpNode:
        for n in self.layers:
            if n.name == name:
                return n
        raise KeyError(name)

    def without(self, kinds: frozenset[str] | set[str]) -> "ModelSpec":
        """Copy of this graph with all nodes of the given kinds removed."""
        return dataclasses.replace(
            self, layers=tuple(n for n in self.layers if n.kind not in kinds)
        )


class ParamStore:
    """Named weight buffers keyed by layer name, in graph order.

    ``moving_mean`` / ``moving_var`` buffers are non-trainable; everything
    else is trainable.
    """

    def __init__(self, buffers: dict[str, dict[str, np.ndarray]]):
        self.buffers = buffers

    def __getitem__(self, layer: str) -> dict[str, np.ndarray]:
        return self.buffers[layer]

    def __contains__(self, layer: str) -> bool:
        return layer in self.buffers

    def flat(self):
        """Yield (layer_name, buffer_name, array, trainable) in fixed order."""
        for layer, bufs in self.buffers.items():
            for name, arr in bufs.items():
                yield layer, name, arr, name not in NON_TRAINABLE_BUFFERS

    def count(self, trainable: bool | None = None) -> int:
        total = 0
        for _, _, arr, is_trainable in self.flat():
            if trainable is None or trainable == is_trainable:
                total += arr.size
        return total

    def copy(self) -> "ParamStore":
        return ParamStore(
            {
                layer: {name: arr.copy() for name, arr in bufs.items()}
                for layer, bufs in self.buffers.items()
            }
        )


@dataclass(frozen=True)
class Prediction:
    """Argmax decision plus the ranked top-k tail."""

    class_index: int
    class_name: str
    confidence: float
    top_k: tuple[tuple[int, str, float], ...]


# ---------------------------------------------------------------------------
# construction


def _he_uniform(rng: np.random.Generator, fan_in: int, shape, scale: float = 1.0) -> np.ndarray:
    limit = scale * np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(COMPUTE_DTYPE)

#: the softmax head starts at 10% of He scale: global-average-pooled ReLU
#: features have large positive means, and a full-scale head would push a
#: fresh model far from the uniform-prediction point (initial loss must sit
#: near ln(num_classes)). Nonzero so every buffer still gets gradient from
#: the first backward pass.
OUTPUT_INIT_SCALE = 0.1


def build_pd36c(
    num_classes: int = CANONICAL_NUM_CLASSES,
    init_seed: int = 0,
    input_extent: int = CANONICAL_INPUT_EXTENT,
    bn_eps: float = BN_EPS,
    bn_momentum: float = BN_MOMENTUM,
    augment_cfg: AugmentConfig | None = None,
) -> tuple[ModelSpec, ParamStore]:
    """Build the PD36-C graph and a freshly initialized parameter store.

    Conv and hidden-dense weights are He-uniform, the softmax head is
    He-uniform at ``OUTPUT_INIT_SCALE``, and batch norm starts at identity
    (gamma=1, beta=0, moving mean 0, moving variance 1). Deterministic
    given ``init_seed``.
    """
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    rng = np.random.default_rng(init_seed)

    def suffixed(base: str, i: int) -> str:
        return base if i == 0 else f"{base}_{i}"

    nodes: list[OpNode] = [
        OpNode("plant_augmentation", "augment", cfg=augment_cfg),
        OpNode("rescale_0_1", "rescale"),
    ]
    buffers: dict[str, dict[str, np.ndarray]] = {}
    in_channels = 3
    pool_index = 0
    for i, filters in enumerate(CONV_FILTERS):
        conv_name = suffixed("conv2d", i)
        nodes.append(OpNode(conv_name, "conv2d", filters=filters))
        buffers[conv_name] = {
            "kernel": _he_uniform(rng, 9 * in_channels, (3, 3, in_channels, filters))
        }
        bn_name = suffixed("batch_normalization", i)
        nodes.append(OpNode(bn_name, "batchnorm", eps=bn_eps, momentum=bn_momentum))
        buffers[bn_name] = {
            "gamma": np.ones(filters, dtype=COMPUTE_DTYPE),
            "beta": np.zeros(filters, dtype=COMPUTE_DTYPE),
            "moving_mean": np.zeros(filters, dtype=COMPUTE_DTYPE),
            "moving_var": np.ones(filters, dtype=COMPUTE_DTYPE),
        }
        nodes.append(OpNode(suffixed("activation", i), "relu"))
        if i % 2 == 1:
            nodes.append(OpNode(suffixed("max_pooling2d", pool_index), "maxpool2x2"))
            pool_index += 1
        in_channels = filters

    nodes.append(OpNode("dropout", "dropout", rate=DROPOUT_RATE_1))
    nodes.append(OpNode("global_average_pooling2d", "globalavgpool"))
    nodes.append(OpNode("dense", "dense", units=HIDDEN_UNITS, activation="relu"))
    buffers["dense"] = {
        "w": _he_uniform(rng, in_channels, (in_channels, HIDDEN_UNITS)),
        "b": np.zeros(HIDDEN_UNITS, dtype=COMPUTE_DTYPE),
    }
    nodes.append(OpNode("dropout_1", "dropout", rate=DROPOUT_RATE_2))
    nodes.append(OpNode("predictions", "dense", units=num_classes, activation="softmax"))
    buffers["predictions"] = {
        "w": _he_uniform(rng, HIDDEN_UNITS, (HIDDEN_UNITS, num_classes), OUTPUT_INIT_SCALE),
        "b": np.zeros(num_classes, dtype=COMPUTE_DTYPE),
    }

    spec = ModelSpec(tuple(nodes), num_classes=num_classes, input_extent=input_extent)
    return spec, ParamStore(buffers)


# ---------------------------------------------------------------------------
# shape propagation and parameter audit


def _walk(spec: ModelSpec, input_hw: tuple[int, int]):
    """Propagate shapes symbolically, yielding per-node audit facts.

    Yields (node, out_shape, trainable_params, non_trainable_params) where
    ``out_shape`` is (H, W, C) before global pooling and (units,) after.
    """
    h, w = input_hw
    shape: tuple[int, ...] = (h, w, 3)
    for node in spec.layers:
        trainable = 0
        non_trainable = 0
        if node.kind in ("augment", "rescale", "relu", "softmax"):
            pass
        elif node.kind == "conv2d":
            if len(shape) != 3:
                raise ShapeError(f"{node.name}: conv2d after flattening, shape {shape}")
            trainable = 9 * shape[2] * node.filters
            shape = (shape[0], shape[1], node.filters)
        elif node.kind == "batchnorm":
            c = shape[-1]
            trainable = 2 * c
            non_trainable = 2 * c
        elif node.kind == "maxpool2x2":
            if len(shape) != 3:
                raise ShapeError(f"{node.name}: pooling after flattening, shape {shape}")
            if shape[0] % 2 or shape[1] % 2:
                raise ShapeError(
                    f"{node.name}: odd spatial extent {shape[0]}x{shape[1]}"
                )
            shape = (shape[0] // 2, shape[1] // 2, shape[2])
        elif node.kind == "dropout":
            pass
        elif node.kind == "globalavgpool":
            if len(shape) != 3:
                raise ShapeError(f"{node.name}: pooling after flattening, shape {shape}")
            shape = (shape[2],)
        elif node.kind == "dense":
            if len(shape) != 1:
                raise ShapeError(f"{node.name}: dense needs a flat input, shape {shape}")
            trainable = shape[0] * node.units + node.units
            shape = (node.units,)
        else:
            raise ConfigError(f"{node.name}: unknown node kind {node.kind!r}")
        yield node, shape, trainable, non_trainable


def shape_trace(spec: ModelSpec, input_hw: int | tuple[int, int]) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (layer name, output shape) pairs, no activations allocated."""
    hw = (input_hw, input_hw) if isinstance(input_hw, int) else tuple(input_hw)
    return [(node.name, shape) for node, shape, _, _ in _walk(spec, hw)]


@dataclass(frozen=True)
class AuditRow:
    name: str
    type_name: str
    output_shape: tuple[int, ...]
    params: int


@dataclass(frozen=True)
class AuditReport:
    rows: tuple[AuditRow, ...]
    trainable: int
    non_trainable: int

    @property
    def total(self) -> int:
        return self.trainable + self.non_trainable

    @property
    def payload_bytes(self) -> int:
        """Raw size of all parameters as 32-bit floats."""
        return self.total * 4


def param_audit(
    spec: ModelSpec, store: ParamStore, input_hw: int | tuple[int, int] | None = None
) -> AuditReport:
    """Per-layer (name, type, output shape, parameter count) plus totals.

    Counts are derived from the graph walk and cross-checked against the
    actual buffer sizes in ``store``; a mismatch raises ShapeError.
    """
    if input_hw is None:
        input_hw = spec.input_extent
    hw = (input_hw, input_hw) if isinstance(input_hw, int) else tuple(input_hw)
    rows = []
    trainable_total = 0
    non_trainable_total = 0
    for node, shape, trainable, non_trainable in _walk(spec, hw):
        declared = trainable + non_trainable
        stored = sum(arr.size for arr in store[node.name].values()) if node.name in store else 0
        if stored != declared:
            raise ShapeError(
                f"{node.name}: store holds {stored} parameters, spec implies {declared}"
            )
        rows.append(AuditRow(node.name, _TYPE_NAMES[node.kind], shape, declared))
        trainable_total += trainable
        non_trainable_total += non_trainable
    return AuditReport(tuple(rows), trainable_total, non_trainable_total)


def format_audit(report: AuditReport) -> str:
    """Render the audit as an aligned text table with totals."""

    def fmt_shape(shape: tuple[int, ...]) -> str:
        return str(shape[0]) if len(shape) == 1 else str(tuple(shape))

    lines = [f"{'Layer':<26}{'Type':<24}{'Output Shape':<18}{'Param #':>12}"]
    for row in report.rows:
        lines.append(
            f"{row.name:<26}{row.type_name:<24}{fmt_shape(row.output_shape):<18}"
            f"{row.params:>12,}"
        )
    lines.append(f"Trainable params: {report.trainable:,}")
    lines.append(f"Non-trainable params: {report.non_trainable:,}")
    lines.append(f"TOTAL: {report.total:,}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# execution


class Tape:
    """Saved forward state, consumed (in reverse) by ``run_backward``."""

    def __init__(self, mode: ExecMode):
        self.mode = mode
        self.entries: list[tuple[OpNode, object]] = []

    def append(self, node: OpNode, cache) -> None:
        self.entries.append((node, cache))


def _validate_input(spec: ModelSpec, x: np.ndarray) -> None:
    require_rank4(x, "batch")
    _, h, w, c = x.shape
    if c != 3:
        raise ShapeError(f"expected 3 input channels, got {c} (shape {x.shape})")
    for extent in (h, w):
        if extent < MIN_INPUT_EXTENT or extent % MIN_INPUT_EXTENT:
            raise ShapeError(
                f"spatial extent must be >= {MIN_INPUT_EXTENT} and divisible by "
                f"{MIN_INPUT_EXTENT} so four pooling halvings stay integral, "
                f"got {h}x{w}"
            )


def run_forward(
    spec: ModelSpec,
    store: ParamStore,
    x: np.ndarray,
    mode: ExecMode,
    rng: np.random.Generator | None = None,
    capture=None,
    with_tape: bool = False,
):
    """Execute the graph; returns (probabilities, tape, captured activations).

    ``capture`` may be "all" or an iterable of node names; captured values
    are the node outputs. Train mode updates batch-norm moving statistics
    in place (the one sanctioned mutation of ``store``).
    """
    _validate_input(spec, x)
    if mode is ExecMode.INFER:
        rng = None
    capture_names = None
    if capture is not None and capture != "all":
        capture_names = set(capture)
    captured: dict[str, np.ndarray] = {}
    tape = Tape(mode) if with_tape else None

    out = x
    for node in spec.layers:
        cache = None
        if node.kind == "augment":
            if mode is ExecMode.TRAIN and node.cfg is not None:
                out = augment_batch(out, node.cfg, mode, rng)
        elif node.kind == "rescale":
            out = rescale(out)
        elif node.kind == "conv2d":
            out, cache = ops.conv2d_forward(out, store[node.name]["kernel"])
        elif node.kind == "batchnorm":
            bufs = store[node.name]
            if mode is ExecMode.TRAIN:
                out, cache, mean, var = ops.batchnorm_forward_train(
                    out, bufs["gamma"], bufs["beta"], node.eps
                )
                mom = np.asarray(node.momentum, dtype=bufs["moving_mean"].dtype)
                bufs["moving_mean"] *= mom
                bufs["moving_mean"] += (1 - mom) * mean.astype(bufs["moving_mean"].dtype)
                bufs["moving_var"] *= mom
                bufs["moving_var"] += (1 - mom) * var.astype(bufs["moving_var"].dtype)
            else:
                out, cache = ops.batchnorm_forward_infer(
                    out,
                    bufs["gamma"],
                    bufs["beta"],
                    bufs["moving_mean"],
                    bufs["moving_var"],
                    node.eps,
                )
        elif node.kind == "relu":
            out, cache = ops.relu_forward(out)
        elif node.kind == "maxpool2x2":
            out, cache = ops.maxpool2x2_forward(out)
        elif node.kind == "dropout":
            out, cache = ops.dropout_forward(out, node.rate, mode, rng)
        elif node.kind == "globalavgpool":
            out, cache = ops.global_avg_pool_forward(out)
        elif node.kind == "dense":
            bufs = store[node.name]
            out, cache = ops.dense_forward(out, bufs["w"], bufs["b"])
            if node.activation == "relu":
                out, rmask = ops.relu_forward(out)
                cache = (cache, rmask)
            elif node.activation == "softmax":
                out = ops.softmax(out)
                cache = (cache, None)
            else:
                cache = (cache, None)
        elif node.kind == "softmax":
            out = ops.softmax(out)
        else:
            raise ConfigError(f"{node.name}: unknown node kind {node.kind!r}")

        if tape is not None:
            tape.append(node, cache)
        if capture == "all" or (capture_names and node.name in capture_names):
            captured[node.name] = out
    return out, tape, captured


def run_backward(
    spec: ModelSpec,
    store: ParamStore,
    tape: Tape,
    dlogits: np.ndarray,
    stop_layer: str | None = None,
):
    """Walk the tape in reverse from the output head.

    ``dlogits`` is the gradient with respect to the final dense layer's
    pre-softmax output (softmax and loss gradients are fused by callers:
    cross-entropy supplies probs - targets, class-evidence maps supply a
    one-hot row). Returns ``(grads, d_stop)`` where ``grads`` maps layer
    name -> buffer name -> gradient, and ``d_stop`` is the gradient with
    respect to ``stop_layer``'s output (None unless requested). Descent
    ends once no parametric layers remain below.
    """
    if tape is None or not tape.entries:
        raise StateError("backward requires the tape of a prior forward pass")
    entries = tape.entries
    lowest_param = min(
        (i for i, (node, _) in enumerate(entries) if node.name in store),
        default=0,
    )
    grads: dict[str, dict[str, np.ndarray]] = {}
    g = dlogits
    for i in range(len(entries) - 1, -1, -1):
        node, cache = entries[i]
        if stop_layer is not None and node.name == stop_layer:
            return grads, g
        if node.kind == "conv2d":
            need_dx = i > lowest_param
            g, dk = ops.conv2d_backward(cache, g, need_dx=need_dx)
            grads[node.name] = {"kernel": dk}
            if not need_dx:
                break
        elif node.kind == "batchnorm":
            if tape.mode is ExecMode.TRAIN:
                g, dgamma, dbeta = ops.batchnorm_backward_train(cache, g)
            else:
                g, dgamma, dbeta = ops.batchnorm_backward_infer(cache, g)
            grads[node.name] = {"gamma": dgamma, "beta": dbeta}
        elif node.kind == "relu":
            g = ops.relu_backward(cache, g)
        elif node.kind == "maxpool2x2":
            g = ops.maxpool2x2_backward(cache, g)
        elif node.kind == "dropout":
            g = ops.dropout_backward(cache, g)
        elif node.kind == "globalavgpool":
            g = ops.global_avg_pool_backward(cache, g)
        elif node.kind == "dense":
            dense_cache, rmask = cache
            if node.activation == "relu":
                g = ops.relu_backward(rmask, g)
            # softmax activation is fused: g is already pre-activation
            g, dw, db = ops.dense_backward(dense_cache, g)
            grads[node.name] = {"w": dw, "b": db}
        elif node.kind == "rescale":
            g = g * g.dtype.type(1.0 / 255.0)
        elif node.kind in ("augment", "softmax"):
            pass
    if stop_layer is not None:
        raise StateError(f"stop layer {stop_layer!r} was never reached on the tape")
    return grads, None


def forward(
    spec: ModelSpec,
    store: ParamStore,
    batch: np.ndarray,
    mode: ExecMode,
    rng: np.random.Generator | None = None,
    capture=None,
):
    """Probability rows for a batch; with ``capture``, also activations.

    Returns the (N, num_classes) probability array, or a tuple of it and
    the captured-activation dict when ``capture`` is given.
    """
    probs, _, captured = run_forward(spec, store, batch, mode, rng, capture=capture)
    if capture is None:
        return probs
    return probs, captured


def rank_prediction(probs: np.ndarray, labels, k: int) -> Prediction:
    """Turn one probability row into a Prediction.

    The argmax breaks ties toward the lowest class index; the top-k list is
    sorted by descending probability with ties ordered by ascending index.
    """
    if len(labels) != len(probs):
        raise ConfigError(f"got {len(labels)} labels for {len(probs)} probabilities")
    if not 1 <= k <= len(probs):
        raise ConfigError(f"k must be in [1, {len(probs)}], got {k}")
    order = np.argsort(-probs, kind="stable")  # descending, ties by index
    top = tuple((int(i), labels[int(i)], float(probs[int(i)])) for i in order[:k])
    best = int(order[0])
    return Prediction(best, labels[best], float(probs[best]), top)


def predict(
    spec: ModelSpec,
    store: ParamStore,
    image: np.ndarray,
    labels: list[str],
    k: int = 5,
) -> Prediction:
    """Classify one image; ties break toward the lowest class index."""
    if len(labels) != spec.num_classes:
        raise ConfigError(
            f"got {len(labels)} labels for a {spec.num_classes}-class head"
        )
    probs = forward(spec, store, image, ExecMode.INFER)[0]
    return rank_prediction(probs, labels, k)
