"""Query selection for the iterative active learning baselines.

Every strategy returns sample ids ranked most-wanted first, with exact-score
ties broken toward the smaller id, so selection is deterministic given the
model and pools.
"""

from __future__ import annotations

import numpy as np

from .datastore import EmbeddingStore
from .seeds import rng_for
from .trainer import ModelParams, forward
from .weaklabel import ClientPool, PrototypeScores, _pairwise_sq_dists, uncertainty
from .refine import select_top_b


def random_query(pool: ClientPool, b: int, seed: int, round_index: int) -> list[int]:
    """Uniform draw without replacement from the unlabeled set."""
    ids = np.sort(np.asarray(list(pool.unlabeled), dtype=np.int64))
    if ids.size == 0 or b <= 0:
        return []
    rng = rng_for(seed, "random_query", pool.client_id, round_index)
    return [int(s) for s in rng.permutation(ids)[:b]]


def entropy_query(
    store: EmbeddingStore, pool: ClientPool, params: ModelParams, b: int
) -> list[int]:
    """Most-uncertain samples under the current global model's softmax."""
    ids = np.sort(np.asarray(list(pool.unlabeled), dtype=np.int64))
    if ids.size == 0 or b <= 0:
        return []
    logits = forward(params, store.features[ids])
    scores = [
        PrototypeScores(sample_id=int(sid), s=logits[row], u=uncertainty(logits[row], "entropy"))
        for row, sid in enumerate(ids)
    ]
    return select_top_b(scores, b)


def coreset_query(store: EmbeddingStore, pool: ClientPool, b: int) -> list[int]:
    """Greedy k-center picks: repeatedly take the unlabeled point farthest
    from the labeled set plus everything selected so far."""
    ids = np.sort(np.asarray(list(pool.unlabeled), dtype=np.int64))
    if ids.size == 0 or b <= 0:
        return []
    labeled_ids = np.sort(np.asarray(list(pool.labeled), dtype=np.int64))
    points = store.features[ids].astype(np.float64)

    if labeled_ids.size:
        anchors = store.features[labeled_ids].astype(np.float64)
        min_sq = _pairwise_sq_dists(points, anchors).min(axis=1)
    else:
        min_sq = np.full(ids.size, np.inf)

    chosen: list[int] = []
    active = np.ones(ids.size, dtype=bool)
    for _ in range(min(b, ids.size)):
        masked = np.where(active, min_sq, -np.inf)
        pick = int(np.argmax(masked))  # argmax takes the first max: smaller id wins ties
        chosen.append(int(ids[pick]))
        active[pick] = False
        d_new = _pairwise_sq_dists(points, points[pick : pick + 1])[:, 0]
        min_sq = np.minimum(min_sq, d_new)
    return chosen
