"""Embedding universe: binary on-disk format, synthetic generation, splits.

The store is the simulation's ground truth. Features are frozen-encoder
embeddings ingested from disk (or generated synthetically); labels are the
hidden truth behind the simulated oracle. Stores are immutable after
construction and safe to share across workers.

FASTEMB1 file layout (little-endian, no padding, no trailing bytes):

    bytes 0..7   ASCII magic "FASTEMB1"
    u32          n   (sample count)
    u32          d   (embedding dimension)
    u32          c   (class count)
    n records of [u32 label][d x f32 feature]

The sample id of a record is its index in the file.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptionError,
    FormatError,
    GenerationError,
    StoreValidationError,
)

MAGIC = b"FASTEMB1"
_HEADER = struct.Struct("<III")

# Synthetic cluster centers are re-drawn until all pairwise cosines fall
# below this bound, so cosine-based prototype math stays well conditioned.
CENTER_COS_MAX = 0.5
_CENTER_RETRIES = 1000


@dataclass(frozen=True, eq=False)
class EmbeddingStore:
    """n samples of d-dim float32 features with hidden ground-truth labels."""

    features: np.ndarray  # (n, d) float32
    labels: np.ndarray  # (n,) int64, values in [0, c)
    class_count: int

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise StoreValidationError(
                f"features must be a non-empty 2-D array, got shape {feats.shape}"
            )
        if labels.shape != (feats.shape[0],):
            raise StoreValidationError(
                f"labels shape {labels.shape} does not match n={feats.shape[0]}"
            )
        if self.class_count < 2:
            raise StoreValidationError("class count must be at least 2")
        if labels.min() < 0 or labels.max() >= self.class_count:
            raise StoreValidationError(
                f"labels must lie in [0, {self.class_count})"
            )
        if not np.all(np.isfinite(feats)):
            raise StoreValidationError("features contain NaN or infinite values")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        return self.class_count

    @property
    def ids(self) -> np.ndarray:
        """Sample ids, dense 0..n-1 in record order."""
        return np.arange(self.n, dtype=np.int64)

    def class_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        return (
            self.class_count == other.class_count
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/test id sets drawn from one store."""

    train_ids: np.ndarray
    test_ids: np.ndarray
    seed: int
    stratified: bool = True

    def __post_init__(self):
        train = np.asarray(self.train_ids, dtype=np.int64)
        test = np.asarray(self.test_ids, dtype=np.int64)
        if np.intersect1d(train, test).size:
            raise StoreValidationError("train and test ids overlap")
        train.setflags(write=False)
        test.setflags(write=False)
        object.__setattr__(self, "train_ids", train)
        object.__setattr__(self, "test_ids", test)


def save_store(store: EmbeddingStore, path) -> None:
    """Write a store in FASTEMB1 layout; load_store(path) round-trips it."""
    record = np.dtype([("label", "<u4"), ("feat", "<f4", (store.d,))])
    body = np.empty(store.n, dtype=record)
    body["label"] = store.labels.astype(np.uint32)
    body["feat"] = store.features
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(store.n, store.d, store.class_count))
        fh.write(body.tobytes())


def load_store(path) -> EmbeddingStore:
    """Parse a FASTEMB1 file and validate every store invariant."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + _HEADER.size:
        raise FormatError(f"{path}: file too short for a FASTEMB1 header")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:8]!r}")
    n, d, c = _HEADER.unpack_from(blob, len(MAGIC))
    if n < 1 or d < 1 or c < 2:
        raise FormatError(f"{path}: invalid header n={n} d={d} c={c}")
    offset = len(MAGIC) + _HEADER.size
    expected = offset + n * (4 + 4 * d)
    if len(blob) < expected:
        raise CorruptionError(
            f"{path}: payload truncated, expected {expected} bytes got {len(blob)}"
        )
    if len(blob) > expected:
        raise FormatError(f"{path}: {len(blob) - expected} trailing bytes")
    record = np.dtype([("label", "<u4"), ("feat", "<f4", (d,))])
    body = np.frombuffer(blob, dtype=record, count=n, offset=offset)
    labels = body["label"].astype(np.int64)
    if labels.max() >= c:
        raise StoreValidationError(
            f"{path}: label {int(labels.max())} out of range for c={c}"
        )
    return EmbeddingStore(
        features=body["feat"].astype(np.float32),
        labels=labels,
        class_count=c,
    )


def gen_synthetic(
    c: int, per_class: int, d: int, sigma: float, seed: int
) -> EmbeddingStore:
    """Isotropic Gaussian clusters around separated unit-norm centers.

    Centers are drawn uniformly on the sphere and re-drawn (bounded retries)
    until every pairwise cosine is below CENTER_COS_MAX. Pure function of
    its arguments.
    """
    if c < 2:
        raise GenerationError("need at least 2 classes")
    if per_class < 1:
        raise GenerationError("need at least 1 sample per class")
    if sigma < 0:
        raise GenerationError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    centers = np.empty((c, d), dtype=np.float64)
    for i in range(c):
        for attempt in range(_CENTER_RETRIES + 1):
            v = rng.normal(size=d)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            v /= norm
            if i == 0 or np.max(centers[:i] @ v) < CENTER_COS_MAX:
                centers[i] = v
                break
        else:
            raise GenerationError(
                f"could not separate {c} centers in {d} dimensions "
                f"(pairwise cosine < {CENTER_COS_MAX}) after {_CENTER_RETRIES} retries"
            )
    feats = np.empty((c * per_class, d), dtype=np.float64)
    labels = np.empty(c * per_class, dtype=np.int64)
    for i in range(c):
        lo = i * per_class
        noise = rng.normal(scale=sigma, size=(per_class, d)) if sigma > 0 else 0.0
        feats[lo : lo + per_class] = centers[i] + noise
        labels[lo : lo + per_class] = i
    return EmbeddingStore(
        features=feats.astype(np.float32), labels=labels, class_count=c
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(store: EmbeddingStore, test_fraction: float, seed: int) -> SplitSpec:
    """Stratified train/test split, deterministic in seed.

    Per-class test counts are round(per-class n * fraction). If some class
    is too small to appear on both sides, falls back to an unstratified
    split and records that in SplitSpec.stratified.
    """
    if not 0 <= test_fraction < 1:
        raise StoreValidationError("test_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    if test_fraction == 0:
        return SplitSpec(
            train_ids=store.ids, test_ids=np.empty(0, dtype=np.int64), seed=seed
        )

    stratifiable = True
    for cls in range(store.class_count):
        n_cls = int(np.sum(store.labels == cls))
        want = _round_half_up(n_cls * test_fraction)
        if n_cls == 0:
            continue
        if want < 1 or n_cls - want < 1:
            stratifiable = False
            break

    test_parts = []
    if stratifiable:
        for cls in range(store.class_count):
            cls_ids = store.ids[store.labels == cls]
            if cls_ids.size == 0:
                continue
            want = _round_half_up(cls_ids.size * test_fraction)
            test_parts.append(rng.permutation(cls_ids)[:want])
    else:
        want = _round_half_up(store.n * test_fraction)
        test_parts.append(rng.permutation(store.ids)[:want])

    test_ids = np.sort(np.concatenate(test_parts)) if test_parts else np.empty(0, np.int64)
    train_ids = np.setdiff1d(store.ids, test_ids, assume_unique=True)
    return SplitSpec(
        train_ids=train_ids, test_ids=test_ids, seed=seed, stratified=stratifiable
    )
