"""Preliminary pass: kNN weak labeling and prototype-similarity uncertainty.

Weak labels come from a majority vote of the k nearest labeled neighbors in
L2 distance. Uncertainty comes from a separate signal: the per-class mean
cosine similarity between a sample and the labeled samples of that class,
softmax-normalized and scored by one of five metrics. Both computations are
deterministic functions of the embeddings, with fully specified tie breaks,
so per-client passes can run in parallel with sequential-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .datastore import EmbeddingStore
from .errors import DegenerateInputError, PropagationError, ScoringError

UNCERTAINTY_METRICS = (
    "entropy",
    "least_confidence",
    "smallest_margin",
    "largest_margin",
    "norm",
)

# Similarity assigned to classes with no labeled samples: maximally
# dissimilar, keeps the vector length fixed at c for the softmax.
EMPTY_CLASS_SIMILARITY = -1.0

PROV_INITIAL = "initial-random"
PROV_WEAK = "weak"
PROV_ORACLE = "oracle"


@dataclass
class LabelRecord:
    label: int
    provenance: str  # "initial-random" | "weak" | "oracle"
    score: float | None = None


@dataclass
class ClientPool:
    """One client's labeled/unlabeled state.

    `labeled` holds budget-consuming records (initial-random and oracle).
    `weak` holds free machine-assigned records for ids still in `unlabeled`;
    they participate in training but never count against the budget.
    """

    client_id: int
    class_count: int
    labeled: dict[int, LabelRecord] = field(default_factory=dict)
    unlabeled: set[int] = field(default_factory=set)
    weak: dict[int, LabelRecord] = field(default_factory=dict)

    def member_ids(self) -> np.ndarray:
        return np.sort(np.asarray(list(self.labeled) + list(self.unlabeled), dtype=np.int64))

    def training_items(self) -> tuple[np.ndarray, np.ndarray]:
        """(ids, labels) of everything trainable: labeled plus weak records."""
        pairs = [(sid, rec.label) for sid, rec in self.labeled.items()]
        pairs += [(sid, rec.label) for sid, rec in self.weak.items()]
        pairs.sort()
        if not pairs:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        ids, labels = zip(*pairs)
        return np.asarray(ids, dtype=np.int64), np.asarray(labels, dtype=np.int64)

    def copy(self) -> "ClientPool":
        return ClientPool(
            client_id=self.client_id,
            class_count=self.class_count,
            labeled={sid: replace(rec) for sid, rec in self.labeled.items()},
            unlabeled=set(self.unlabeled),
            weak={sid: replace(rec) for sid, rec in self.weak.items()},
        )

    def check_invariants(self) -> None:
        overlap = set(self.labeled) & self.unlabeled
        if overlap:
            raise AssertionError(f"ids both labeled and unlabeled: {sorted(overlap)[:5]}")
        if not set(self.weak) <= self.unlabeled:
            raise AssertionError("weak records exist for ids outside the unlabeled set")
        for rec in list(self.labeled.values()) + list(self.weak.values()):
            if not 0 <= rec.label < self.class_count:
                raise AssertionError(f"label {rec.label} out of range")


@dataclass(frozen=True)
class PrototypeScores:
    sample_id: int
    s: np.ndarray  # length-c mean cosine similarity per class
    u: float  # uncertainty, larger = more uncertain


def _pairwise_sq_dists(queries: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Exact squared L2 distances in float64, chunked over query rows."""
    n_q = queries.shape[0]
    out = np.empty((n_q, anchors.shape[0]), dtype=np.float64)
    chunk = max(1, (1 << 22) // max(1, anchors.shape[0] * anchors.shape[1]))
    for lo in range(0, n_q, chunk):
        hi = min(lo + chunk, n_q)
        diff = queries[lo:hi, None, :] - anchors[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def knn_propagate(
    store: EmbeddingStore, pool: ClientPool, k_nn: int
) -> dict[int, int]:
    """Weak label for each unlabeled id by majority vote of labeled neighbors.

    Effective k is min(k_nn, |labeled|). Vote ties go to the label of the
    nearest neighbor among the tied classes; distance ties are broken toward
    the smaller sample id.
    """
    if k_nn < 1:
        raise PropagationError("k_nn must be at least 1")
    if not pool.labeled:
        raise PropagationError(f"client {pool.client_id} has no labeled seeds")
    labeled_ids = np.sort(np.asarray(list(pool.labeled), dtype=np.int64))
    labeled_cls = np.asarray([pool.labeled[int(s)].label for s in labeled_ids])
    unlabeled_ids = np.sort(np.asarray(list(pool.unlabeled), dtype=np.int64))
    if unlabeled_ids.size == 0:
        return {}

    anchors = store.features[labeled_ids].astype(np.float64)
    queries = store.features[unlabeled_ids].astype(np.float64)
    sq = _pairwise_sq_dists(queries, anchors)
    k_eff = min(k_nn, labeled_ids.size)

    out: dict[int, int] = {}
    for row, sid in enumerate(unlabeled_ids):
        order = np.lexsort((labeled_ids, sq[row]))[:k_eff]
        votes = labeled_cls[order]
        counts = np.bincount(votes, minlength=store.class_count)
        best = counts.max()
        tied = np.flatnonzero(counts == best)
        if tied.size == 1:
            winner = int(tied[0])
        else:
            tied_set = set(int(t) for t in tied)
            winner = next(int(v) for v in votes if int(v) in tied_set)
        out[int(sid)] = winner
    return out


def _unit_rows(mat: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError(f"zero-norm embedding among {what}")
    return mat / norms[:, None]


def _prototype_matrix(
    store: EmbeddingStore, pool: ClientPool, sample_ids: np.ndarray
) -> np.ndarray:
    """Rows of per-class mean cosine similarity for the given samples."""
    if not pool.labeled:
        raise PropagationError(f"client {pool.client_id} has no labeled seeds")
    queries = _unit_rows(store.features[sample_ids].astype(np.float64), "queries")
    s = np.full((sample_ids.size, store.class_count), EMPTY_CLASS_SIMILARITY)
    by_class: dict[int, list[int]] = {}
    for sid, rec in pool.labeled.items():
        by_class.setdefault(rec.label, []).append(sid)
    for cls, members in by_class.items():
        anchors = store.features[np.sort(np.asarray(members, dtype=np.int64))]
        anchors = _unit_rows(anchors.astype(np.float64), "labeled samples")
        s[:, cls] = (queries @ anchors.T).mean(axis=1)
    return s


def uncertainty(s: np.ndarray, metric: str = "entropy") -> float:
    """Score a per-class similarity vector; larger means more uncertain.

    All metrics except `norm` act on softmax(s); `norm` is minus the L2
    norm of the raw vector.
    """
    s = np.asarray(s, dtype=np.float64)
    if np.any(np.isnan(s)):
        raise ScoringError("similarity vector contains NaN")
    if metric not in UNCERTAINTY_METRICS:
        raise ScoringError(f"unknown uncertainty metric {metric!r}")
    if metric == "norm":
        if s.size < 1:
            raise ScoringError("norm metric needs at least one component")
        return float(-np.linalg.norm(s))
    if s.size < 2:
        raise ScoringError(f"{metric} needs at least two classes")

    z = s - s.max()
    p = np.exp(z)
    p /= p.sum()
    if metric == "entropy":
        nz = p[p > 0]
        return float(-(nz * np.log(nz)).sum())
    if metric == "least_confidence":
        return float(1.0 - p.max())
    top = np.sort(p)[::-1]
    if metric == "smallest_margin":
        return float(-(top[0] - top[1]))
    return float(-(top[0] - top[-1]))  # largest_margin


def prototype_scores(
    store: EmbeddingStore,
    pool: ClientPool,
    weak_labels: dict[int, int],
    sample_id: int,
    metric: str = "entropy",
) -> PrototypeScores:
    """Similarity profile and uncertainty for one weakly labeled sample."""
    if sample_id not in weak_labels:
        raise ScoringError(f"sample {sample_id} has no weak label")
    s = _prototype_matrix(store, pool, np.asarray([sample_id], dtype=np.int64))[0]
    return PrototypeScores(sample_id=sample_id, s=s, u=uncertainty(s, metric))


def export_scores_csv(pool: ClientPool, scores: list[PrototypeScores], path) -> None:
    """Audit dump: one `sample_id,weak_label,uncertainty` row per score."""
    with open(path, "w", newline="") as fh:
        fh.write("sample_id,weak_label,uncertainty\n")
        for sc in sorted(scores, key=lambda s: s.sample_id):
            rec = pool.weak.get(sc.sample_id)
            label = rec.label if rec is not None else ""
            fh.write(f"{sc.sample_id},{label},{sc.u!r}\n")


def preliminary_pass(
    store: EmbeddingStore,
    pool: ClientPool,
    k_nn: int = 5,
    metric: str = "entropy",
) -> tuple[ClientPool, list[PrototypeScores]]:
    """Weak-label every unlabeled sample and attach an uncertainty score.

    Returns a new pool; the unlabeled set is unchanged because weak labels
    are free. Scores come back sorted by sample id.
    """
    weak = knn_propagate(store, pool, k_nn)
    new_pool = pool.copy()
    if not weak:
        return new_pool, []
    ids = np.sort(np.asarray(list(weak), dtype=np.int64))
    s_matrix = _prototype_matrix(store, pool, ids)
    scores = []
    for row, sid in enumerate(ids):
        u = uncertainty(s_matrix[row], metric)
        scores.append(PrototypeScores(sample_id=int(sid), s=s_matrix[row], u=u))
        new_pool.weak[int(sid)] = LabelRecord(
            label=weak[int(sid)], provenance=PROV_WEAK, score=u
        )
    return new_pool, scores
