"""Refinement pass: budgeted oracle annotation of the most uncertain samples.

The oracle serves hidden ground-truth labels. A global budget caps how many
samples may ever carry a human (simulated) label; weak labels are free.
Budget increments are the single serialization point, and per-client
allocations are computed up front so client execution order cannot change
the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .datastore import EmbeddingStore
from .errors import BudgetError, ConfigError
from .partition import PartitionPlan
from .seeds import rng_for
from .weaklabel import (
    ClientPool,
    LabelRecord,
    PROV_INITIAL,
    PROV_ORACLE,
    PrototypeScores,
)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class Budget:
    """Global labeling budget with a per-client per-round quota.

    `counts_initial` controls whether the initial random pool consumes the
    budget (the default) or rides on top of it.
    """

    total_b: int
    per_client_b: int
    consumed: int = 0
    counts_initial: bool = True
    events: list[str] = field(default_factory=list)

    @property
    def remaining(self) -> int:
        return self.total_b - self.consumed

    def consume(self, n: int) -> None:
        if n < 0:
            raise BudgetError("cannot consume a negative amount")
        if self.consumed + n > self.total_b:
            raise BudgetError(
                f"consuming {n} would exceed budget ({self.consumed}/{self.total_b})"
            )
        self.consumed += n


class Oracle:
    """Ground-truth annotator. query_count counts refinement annotations
    only; initial-random labels are stamped directly from the store."""

    def __init__(self, store: EmbeddingStore):
        self._labels = store.labels
        self.query_count = 0

    def annotate(self, sample_id: int) -> int:
        self.query_count += 1
        return int(self._labels[sample_id])

    def peek(self, sample_id: int) -> int:
        """Read truth without counting a query (initialization only)."""
        return int(self._labels[sample_id])


def allocate_shares(total: int, k: int, capacities: list[int] | None = None) -> list[int]:
    """Split `total` evenly over k clients, leftovers to the lowest ids.

    With per-client capacities, surplus from saturated clients is re-split
    evenly among the clients that can still take samples (waterfilling), so
    the budget is never stranded on a client with nothing left to label.
    Reduces to the plain even split when no capacity binds.
    """
    if capacities is None:
        base, extra = divmod(total, k)
        return [base + (1 if i < extra else 0) for i in range(k)]
    if len(capacities) != k:
        raise ConfigError("need one capacity per client")
    shares = [0] * k
    left = total
    while left > 0:
        open_clients = [i for i in range(k) if shares[i] < capacities[i]]
        if not open_clients:
            break
        base, extra = divmod(left, len(open_clients))
        for rank, i in enumerate(open_clients):
            want = base + (1 if rank < extra else 0)
            take = min(want, capacities[i] - shares[i])
            shares[i] += take
            left -= take
    return shares


def initial_pool(
    plan: PartitionPlan,
    store: EmbeddingStore,
    initial_fraction: float,
    seed: int,
    budget: Budget,
    oracle: Oracle,
) -> dict[int, ClientPool]:
    """Seed every client with a uniform random labeled set.

    Each client labels round(initial_fraction * client size) samples, at
    least one. Counts against the budget when budget.counts_initial.
    """
    if not 0 < initial_fraction <= 1:
        raise ConfigError("initial_fraction must lie in (0, 1]")
    pools: dict[int, ClientPool] = {}
    total_drawn = 0
    for client_id in range(plan.k):
        members = plan.members(client_id)
        n_init = max(1, round_half_up(initial_fraction * members.size))
        n_init = min(n_init, members.size)
        chosen = rng_for(seed, "initial", client_id).permutation(members)[:n_init]
        labeled = {
            int(sid): LabelRecord(label=oracle.peek(int(sid)), provenance=PROV_INITIAL)
            for sid in chosen
        }
        pools[client_id] = ClientPool(
            client_id=client_id,
            class_count=store.class_count,
            labeled=labeled,
            unlabeled=set(int(s) for s in members) - set(labeled),
        )
        total_drawn += n_init
    if budget.counts_initial:
        if total_drawn > budget.total_b:
            raise ConfigError(
                f"initial pool of {total_drawn} already exceeds budget {budget.total_b}"
            )
        budget.consume(total_drawn)
    return pools


def select_top_b(scores: list[PrototypeScores], b: int) -> list[int]:
    """Ids of the b most uncertain samples, (u desc, id asc), ties to the
    smaller id. Permutation-invariant in the input order."""
    if b < 0:
        raise ConfigError("selection size must be non-negative")
    ranked = sorted(scores, key=lambda sc: (-sc.u, sc.sample_id))
    return [sc.sample_id for sc in ranked[:b]]


def refinement_pass(
    pool: ClientPool,
    scores: list[PrototypeScores],
    budget: Budget,
    oracle: Oracle,
    allocation: int | None = None,
) -> tuple[ClientPool, list[int]]:
    """Oracle-label this client's most uncertain samples.

    Labels b' = min(per-client quota, allocation, |unlabeled|) samples,
    replacing their weak records and moving them to the labeled set. The
    returned pool is new; the input pool is untouched. When the budget
    leaves no room, returns the pool unchanged and records a skip event.
    """
    cap = budget.per_client_b
    if allocation is not None:
        cap = min(cap, allocation)
    usable = [sc for sc in scores if sc.sample_id in pool.unlabeled]
    b_eff = min(cap, budget.remaining, len(usable))
    if b_eff <= 0:
        budget.events.append(f"skip client={pool.client_id}: no budget room")
        return pool, []
    chosen = select_top_b(usable, b_eff)
    u_by_id = {sc.sample_id: sc.u for sc in usable}
    budget.consume(len(chosen))
    new_pool = pool.copy()
    for sid in chosen:
        new_pool.weak.pop(sid, None)
        new_pool.unlabeled.discard(sid)
        new_pool.labeled[sid] = LabelRecord(
            label=oracle.annotate(sid), provenance=PROV_ORACLE, score=u_by_id[sid]
        )
    return new_pool, chosen


def budget_check(pools, budget: Budget) -> bool:
    """True iff consuming-label records and the running counter both respect
    the global cap. Weak labels are free and never counted."""
    counted = 0
    for pool in pools.values() if isinstance(pools, dict) else pools:
        for rec in pool.labeled.values():
            if rec.provenance == PROV_ORACLE:
                counted += 1
            elif rec.provenance == PROV_INITIAL and budget.counts_initial:
                counted += 1
    return counted <= budget.total_b and budget.consumed <= budget.total_b
