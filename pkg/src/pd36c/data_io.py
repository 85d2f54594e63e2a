"""Dataset ingestion, image standardization, and on-disk formats.

Layouts and formats owned here:
  * dataset tree ``root/<split>/<ClassName>/*.jpg|png`` with class indices
    assigned by lexicographic directory order
  * the "PD36" weight container: magic, version, JSON header describing
    ordered buffer records, raw little-endian float32 payload, trailing
    CRC-32 of the payload bytes
  * training-history CSV with the six columns epoch, learning rate,
    training accuracy/loss, validation accuracy/loss
  * knowledge-base JSON mapping class names to description/treatment text
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError, WeightFormatError
from .model import ModelSpec, ParamStore, build_pd36c
from .trainer import EpochRecord, TrainHistory

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png"}

WEIGHT_MAGIC = b"PD36"
WEIGHT_VERSION = 1


# ---------------------------------------------------------------------------
# dataset tree


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    split: str
    classes: tuple[str, ...]
    files: dict[str, tuple[Path, ...]]

    @property
    def counts(self) -> list[int]:
        return [len(self.files[c]) for c in self.classes]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def class_index(self, name: str) -> int:
        return self.classes.index(name)


def scan_dataset(root, split: str) -> DatasetManifest:
    """Build a deterministic manifest of ``root/<split>``.

    Class order is the lexicographic order of the directory names; file
    lists are sorted, so two scans of the same tree are identical no matter
    how the filesystem enumerates entries. Hidden and non-image files are
    skipped with a warning; empty class directories are kept with count 0.
    """
    split_dir = Path(root) / split
    if not split_dir.is_dir():
        raise DataError(f"dataset split directory not found: {split_dir}")
    classes = sorted(d.name for d in split_dir.iterdir() if d.is_dir() and not d.name.startswith("."))
    files: dict[str, tuple[Path, ...]] = {}
    for cls in classes:
        kept = []
        for path in sorted((split_dir / cls).iterdir()):
            if path.name.startswith("."):
                log.warning("ignoring hidden entry %s", path)
                continue
            if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
                log.warning("ignoring non-image entry %s", path)
                continue
            kept.append(path)
        if not kept:
            log.warning("class directory %s/%s contains no images", split, cls)
        files[cls] = tuple(kept)
    return DatasetManifest(Path(root), split, tuple(classes), files)


@dataclass(frozen=True)
class SplitStats:
    class_count: int
    total_images: int
    mean: float
    std: float
    min: int
    max: int
    balance: float  # coefficient of variation std/mean; 0 iff all equal


def stats_from_counts(counts) -> SplitStats:
    """Population statistics over per-class image counts."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size == 0:
        raise DataError("cannot compute split statistics over zero classes")
    mean = float(counts.mean())
    std = float(counts.std())  # population std
    balance = std / mean if mean > 0 else 0.0
    return SplitStats(
        class_count=int(counts.size),
        total_images=int(counts.sum()),
        mean=mean,
        std=std,
        min=int(counts.min()),
        max=int(counts.max()),
        balance=balance,
    )


def split_stats(manifest: DatasetManifest) -> SplitStats:
    return stats_from_counts(manifest.counts)


def format_split_stats(stats: SplitStats) -> str:
    return "\n".join(
        [
            f"Unique categories    {stats.class_count}",
            f"Total Images         {stats.total_images:,}",
            f"Average              {stats.mean:,.2f}",
            f"Standard Deviation   {stats.std:,.2f}",
            f"Min                  {stats.min:,}",
            f"Max                  {stats.max:,}",
            f"Balance indicator    {stats.balance:.3f}",
        ]
    )


def carve_holdout(
    manifest: DatasetManifest, count: int, seed: int = 0
) -> tuple[DatasetManifest, DatasetManifest]:
    """Deterministically move ``count`` seeded-sampled images to a holdout.

    Returns (remaining, holdout) manifests over the same class list.
    """
    pairs = [(cls, path) for cls in manifest.classes for path in manifest.files[cls]]
    if count > len(pairs):
        raise DataError(f"cannot hold out {count} of {len(pairs)} images")
    rng = np.random.default_rng(seed)
    chosen = set(map(int, rng.choice(len(pairs), size=count, replace=False)))
    held: dict[str, list[Path]] = {c: [] for c in manifest.classes}
    kept: dict[str, list[Path]] = {c: [] for c in manifest.classes}
    for i, (cls, path) in enumerate(pairs):
        (held if i in chosen else kept)[cls].append(path)
    mk = lambda files: DatasetManifest(
        manifest.root, manifest.split, manifest.classes,
        {c: tuple(v) for c, v in files.items()},
    )
    return mk(kept), mk(held)


# ---------------------------------------------------------------------------
# image loading


def _standardize(img: Image.Image, source: str, store_extent: int, model_extent: int) -> np.ndarray:
    if img.mode != "RGB":
        log.info("converting %s from mode %s to RGB", source, img.mode)
        img = img.convert("RGB")
    img = img.resize((store_extent, store_extent), Image.BILINEAR)
    img = img.resize((model_extent, model_extent), Image.BILINEAR)
    return np.asarray(img, dtype=np.float32)[None, :, :, :]


def load_image(path, store_extent: int = 256, model_extent: int = 224) -> np.ndarray:
    """Decode and standardize one image to (1, model_extent, model_extent, 3).

    The pipeline is decode -> bilinear resize to the storage extent ->
    bilinear resize to the model extent; values stay in [0, 255] (the
    model graph's rescale layer divides by 255). Non-RGB images are
    converted with a log note.
    """
    try:
        with Image.open(path) as img:
            return _standardize(img, str(path), store_extent, model_extent)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from exc


def decode_image_bytes(
    data: bytes, store_extent: int = 256, model_extent: int = 224
) -> np.ndarray:
    """Same standardization pipeline as ``load_image`` for in-memory bytes."""
    import io

    try:
        with Image.open(io.BytesIO(data)) as img:
            return _standardize(img, "<bytes>", store_extent, model_extent)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise DataError(f"cannot decode uploaded image: {exc}") from exc


def load_dataset(
    manifest: DatasetManifest, model_extent: int = 224, store_extent: int = 256
) -> tuple[np.ndarray, np.ndarray]:
    """Decode every manifest image into one (N, E, E, 3) array plus labels."""
    images = []
    labels = []
    for index, cls in enumerate(manifest.classes):
        for path in manifest.files[cls]:
            images.append(load_image(path, store_extent, model_extent)[0])
            labels.append(index)
    if not images:
        raise DataError(f"manifest for {manifest.split!r} holds no images")
    return np.stack(images), np.asarray(labels, dtype=np.intp)


# ---------------------------------------------------------------------------
# weight container


@dataclass(frozen=True)
class LoadedModel:
    spec: ModelSpec
    store: ParamStore
    class_names: tuple[str, ...]
    model_id: str
    metadata: dict


def save_weights(
    spec: ModelSpec, store: ParamStore, path, class_names=None
) -> None:
    """Write the container; the payload is every buffer as raw LE float32."""
    if class_names is None:
        class_names = [f"class_{i}" for i in range(spec.num_classes)]
    if len(class_names) != spec.num_classes:
        raise DataError(
            f"{len(class_names)} class names for a {spec.num_classes}-class head"
        )
    records = []
    payload = bytearray()
    for layer, buffer_name, arr, trainable in store.flat():
        role = spec.node(layer).kind
        records.append(
            {
                "layer": layer,
                "buffer": buffer_name,
                "role": role,
                "shape": list(arr.shape),
                "trainable": trainable,
            }
        )
        payload += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    header = {
        "metadata": {
            "model": "pd36c",
            "num_classes": spec.num_classes,
            "input_extent": spec.input_extent,
            "class_names": list(class_names),
        },
        "records": records,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        fh.write(struct.pack("<I", WEIGHT_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(bytes(payload))
        fh.write(struct.pack("<I", crc))


def payload_nbytes(path) -> int:
    """Size in bytes of the parameter payload section of a container."""
    with open(path, "rb") as fh:
        raw = fh.read(12)
        if len(raw) < 12 or raw[:4] != WEIGHT_MAGIC:
            raise WeightFormatError(f"{path} is not a PD36 weight container")
        header_len = struct.unpack("<I", raw[8:12])[0]
        fh.seek(0, 2)
        return fh.tell() - 12 - header_len - 4


def load_weights(path) -> LoadedModel:
    """Read and verify a container; round-trips are bit-exact."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:4] != WEIGHT_MAGIC:
        raise WeightFormatError(f"{path} is not a PD36 weight container")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != WEIGHT_VERSION:
        raise WeightFormatError(
            f"{path}: container version {version} is not supported (expected {WEIGHT_VERSION})"
        )
    header_len = struct.unpack("<I", raw[8:12])[0]
    header_end = 12 + header_len
    if len(raw) < header_end + 4:
        raise WeightFormatError(f"{path}: truncated container header")
    try:
        header = json.loads(raw[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightFormatError(f"{path}: unreadable container header: {exc}") from exc
    records = header["records"]
    meta = header["metadata"]
    expected_payload = sum(int(np.prod(r["shape"])) * 4 for r in records)
    payload_end = header_end + expected_payload
    if len(raw) != payload_end + 4:
        raise WeightFormatError(
            f"{path}: payload is {len(raw) - header_end - 4} bytes, "
            f"records require {expected_payload}"
        )
    payload = raw[header_end:payload_end]
    stored_crc = struct.unpack("<I", raw[payload_end:])[0]
    actual_crc = zlib.crc32(payload) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise WeightFormatError(
            f"{path}: payload checksum mismatch "
            f"(stored {stored_crc:08x}, computed {actual_crc:08x})"
        )

    spec, store = build_pd36c(
        num_classes=meta["num_classes"], input_extent=meta["input_extent"]
    )
    expected_keys = [(layer, name) for layer, name, _, _ in store.flat()]
    record_keys = [(r["layer"], r["buffer"]) for r in records]
    if record_keys != expected_keys:
        raise WeightFormatError(f"{path}: record list does not match the model graph")
    offset = 0
    for record in records:
        shape = tuple(record["shape"])
        nbytes = int(np.prod(shape)) * 4
        arr = np.frombuffer(payload[offset : offset + nbytes], dtype="<f4").reshape(shape)
        store[record["layer"]][record["buffer"]] = arr.astype(np.float32)
        offset += nbytes
    model_id = f"pd36c-{meta['num_classes']}c-{actual_crc:08x}"
    return LoadedModel(spec, store, tuple(meta["class_names"]), model_id, meta)


# ---------------------------------------------------------------------------
# training-history CSV

HISTORY_COLUMNS = (
    "epoch",
    "learning_rate",
    "training_accuracy",
    "training_loss",
    "validation_accuracy",
    "validation_loss",
)


def write_history(history: TrainHistory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(HISTORY_COLUMNS) + "\n")
        for r in history:
            fh.write(
                f"{r.epoch},{r.learning_rate!r},{r.train_accuracy!r},"
                f"{r.train_loss!r},{r.val_accuracy!r},{r.val_loss!r}\n"
            )


def read_history(path) -> TrainHistory:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != ",".join(HISTORY_COLUMNS):
        raise DataError(f"{path}: missing or wrong history header")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(HISTORY_COLUMNS):
            raise DataError(f"{path}: malformed history row {line!r}")
        try:
            records.append(
                EpochRecord(
                    epoch=int(parts[0]),
                    learning_rate=float(parts[1]),
                    train_accuracy=float(parts[2]),
                    train_loss=float(parts[3]),
                    val_accuracy=float(parts[4]),
                    val_loss=float(parts[5]),
                )
            )
        except ValueError as exc:
            raise DataError(f"{path}: malformed history row {line!r}") from exc
    return TrainHistory(records)


# ---------------------------------------------------------------------------
# disease knowledge base


@dataclass(frozen=True)
class DiseaseInfo:
    class_name: str
    description: str
    treatment: str


PLACEHOLDER_DESCRIPTION = "No description available for this class yet."
PLACEHOLDER_TREATMENT = "No treatment recommendation available for this class yet."


def load_knowledge_base(path, class_names) -> dict[str, DiseaseInfo]:
    """Read the JSON knowledge base and fill gaps with placeholder entries."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read knowledge base {path}: {exc}") from exc
    if not text.strip():
        entries = {}
    else:
        try:
            entries = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"unparseable knowledge base {path}: {exc}") from exc
        if not isinstance(entries, dict):
            raise DataError(f"knowledge base {path} must be a JSON object")
    info: dict[str, DiseaseInfo] = {}
    for name in class_names:
        entry = entries.get(name)
        if entry is None:
            log.warning("knowledge base has no entry for class %r; using placeholder", name)
            info[name] = DiseaseInfo(name, PLACEHOLDER_DESCRIPTION, PLACEHOLDER_TREATMENT)
        else:
            info[name] = DiseaseInfo(
                name,
                entry.get("description", PLACEHOLDER_DESCRIPTION),
                entry.get("treatment", PLACEHOLDER_TREATMENT),
            )
    return info
