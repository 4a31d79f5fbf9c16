"""Sample-to-client assignment under IID and heterogeneous regimes.

Three modes:

- iid: shuffled round-robin, client sizes differ by at most one.
- dirichlet: per class, proportions drawn from Dirichlet(alpha * 1_k) route
  that class's samples to clients; smaller alpha means more skew.
- diversity: dirichlet with guaranteed full class coverage, enforced by
  first dealing one sample of every class to every client.

All plans are total (every id assigned exactly once), leave no client
empty, and are pure functions of their arguments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError
from .seeds import rng_for


@dataclass(frozen=True)
class PartitionPlan:
    k: int
    assignment: dict[int, int]  # sample id -> client id in [0, k)
    mode: str  # "iid" | "dirichlet" | "diversity"
    alpha: float | None
    seed: int

    def members(self, client_id: int) -> np.ndarray:
        """Ids held by one client, sorted ascending."""
        ids = [s for s, cl in self.assignment.items() if cl == client_id]
        return np.sort(np.asarray(ids, dtype=np.int64))

    def sizes(self) -> np.ndarray:
        counts = np.zeros(self.k, dtype=np.int64)
        for cl in self.assignment.values():
            counts[cl] += 1
        return counts

    def validate(self, ids) -> None:
        ids = np.asarray(ids, dtype=np.int64)
        if set(self.assignment) != set(ids.tolist()):
            raise InfeasibleError("assignment is not a total function on the ids")
        sizes = self.sizes()
        if sizes.min() < 1:
            raise InfeasibleError("a client received no samples")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "client_id"])
            for sid in sorted(self.assignment):
                writer.writerow([sid, self.assignment[sid]])


def partition_iid(ids, k: int, seed: int) -> PartitionPlan:
    """Uniform split: shuffle once, deal round-robin."""
    ids = np.sort(np.asarray(ids, dtype=np.int64))
    if k < 1:
        raise InfeasibleError("need at least one client")
    if k > ids.size:
        raise InfeasibleError(f"cannot spread {ids.size} samples over {k} clients")
    order = rng_for(seed, "iid").permutation(ids)
    assignment = {int(sid): pos % k for pos, sid in enumerate(order)}
    return PartitionPlan(k=k, assignment=assignment, mode="iid", alpha=None, seed=seed)


def _dirichlet_route(ids, labels, k, alpha, rng) -> list[list[int]]:
    """Route each class's ids by class-specific Dirichlet proportions."""
    ids = np.asarray(ids, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    per_client: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        cls_ids = rng.permutation(ids[labels == cls])
        proportions = rng.dirichlet(np.full(k, alpha))
        counts = rng.multinomial(cls_ids.size, proportions)
        start = 0
        for client, cnt in enumerate(counts):
            per_client[client].extend(int(s) for s in cls_ids[start : start + cnt])
            start += cnt
    return per_client


def _repair_empty(per_client: list[list[int]]) -> None:
    """Donate one sample from the largest client to each empty one."""
    while True:
        sizes = [len(members) for members in per_client]
        if min(sizes) >= 1:
            return
        empty = sizes.index(0)
        donor = max(range(len(sizes)), key=lambda i: (sizes[i], -i))
        per_client[empty].append(per_client[donor].pop())


def partition_dirichlet(ids, labels, k: int, alpha: float, seed: int) -> PartitionPlan:
    """Non-IID split with class proportions ~ Dirichlet(alpha * 1_k)."""
    ids = np.asarray(ids, dtype=np.int64)
    if k < 1:
        raise InfeasibleError("need at least one client")
    if k > ids.size:
        raise InfeasibleError(f"cannot spread {ids.size} samples over {k} clients")
    if alpha <= 0:
        raise InfeasibleError("alpha must be positive")
    rng = rng_for(seed, "dirichlet")
    per_client = _dirichlet_route(ids, labels, k, alpha, rng)
    _repair_empty(per_client)
    assignment = {
        sid: client for client, members in enumerate(per_client) for sid in members
    }
    return PartitionPlan(
        k=k, assignment=assignment, mode="dirichlet", alpha=float(alpha), seed=seed
    )


def partition_diversity(ids, labels, k: int, alpha: float, seed: int) -> PartitionPlan:
    """Dirichlet skew, but every client holds at least one of every class."""
    ids = np.asarray(ids, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if k < 1:
        raise InfeasibleError("need at least one client")
    if alpha <= 0:
        raise InfeasibleError("alpha must be positive")
    rng = rng_for(seed, "diversity")

    per_client: list[list[int]] = [[] for _ in range(k)]
    dealt: list[int] = []
    for cls in np.unique(labels):
        cls_ids = ids[labels == cls]
        if cls_ids.size < k:
            raise InfeasibleError(
                f"class {int(cls)} has {cls_ids.size} samples, need >= {k} for coverage"
            )
        picks = rng.permutation(cls_ids)[:k]
        for client, sid in enumerate(picks):
            per_client[client].append(int(sid))
        dealt.extend(int(s) for s in picks)

    rest_mask = ~np.isin(ids, np.asarray(dealt, dtype=np.int64))
    routed = _dirichlet_route(ids[rest_mask], labels[rest_mask], k, alpha, rng)
    for client, members in enumerate(routed):
        per_client[client].extend(members)

    assignment = {
        sid: client for client, members in enumerate(per_client) for sid in members
    }
    return PartitionPlan(
        k=k, assignment=assignment, mode="diversity", alpha=float(alpha), seed=seed
    )
