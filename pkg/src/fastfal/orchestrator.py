"""End-to-end experiment runs, metrics emission, and parameter sweeps.

Two protocols share all machinery:

- run_fast: one two-pass labeling round (weak labels via kNN propagation,
  uncertainty-ranked oracle refinement) followed by T federated rounds
  trained on oracle plus surviving weak labels.
- run_baseline: R iterative rounds of query -> oracle label -> T federated
  rounds, trained on oracle labels only. Round 1 queries at random; later
  rounds use the configured strategy with the global model as selector.

run_ablation disassembles the two-pass pipeline into its component
variants. Everything is a pure function of the config: identical configs
produce identical traces, ledgers, and CSV bytes, and runs with equal seeds
share the same store, split, and partition regardless of method.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import baselines
from .config import ExperimentConfig
from .datastore import EmbeddingStore, SplitSpec, gen_synthetic, load_store, split
from .errors import ConfigError
from .ledger import (
    CommLedger,
    MetricsTrace,
    embedding_share_bytes,
    round_payload_bytes,
)
from .partition import (
    PartitionPlan,
    partition_dirichlet,
    partition_diversity,
    partition_iid,
)
from .refine import (
    Budget,
    Oracle,
    allocate_shares,
    budget_check,
    initial_pool,
    refinement_pass,
    round_half_up,
)
from .seeds import derive_seed, rng_for
from .trainer import (
    ModelParams,
    aggregate,
    evaluate,
    init_params,
    local_update,
)
from .weaklabel import (
    ClientPool,
    LabelRecord,
    PROV_INITIAL,
    PROV_ORACLE,
    PrototypeScores,
    preliminary_pass,
)

ABLATION_COMPONENTS = ("probe", "weak", "refine", "random_refine")

_VALID_ABLATIONS = (
    frozenset({"probe"}),
    frozenset({"probe", "weak"}),
    frozenset({"probe", "weak", "refine"}),
    frozenset({"probe", "weak", "random_refine"}),
    frozenset({"probe", "random_refine"}),
)


@dataclass
class RunContext:
    cfg: ExperimentConfig
    store: EmbeddingStore
    split: SplitSpec
    plan: PartitionPlan
    oracle: Oracle
    budget: Budget


def _load_data(cfg: ExperimentConfig) -> EmbeddingStore:
    if cfg.data_path is not None:
        return load_store(cfg.data_path)
    spec = cfg.synthetic
    return gen_synthetic(
        c=spec.classes,
        per_class=spec.per_class,
        d=spec.dim,
        sigma=spec.sigma,
        seed=derive_seed(cfg.seed, "data"),
    )


def prepare(cfg: ExperimentConfig) -> RunContext:
    """Shared setup: store, split, partition, oracle, budget.

    Derivations depend only on the master seed, never on the AL method, so
    method comparisons at equal seeds see identical data.
    """
    cfg.validate()
    store = _load_data(cfg)
    split_spec = split(store, cfg.test_fraction, derive_seed(cfg.seed, "split"))
    if split_spec.test_ids.size == 0:
        raise ConfigError("evaluation requires a non-empty test split")
    train_ids = split_spec.train_ids
    part_seed = derive_seed(cfg.seed, "partition")
    if cfg.partition_mode == "iid":
        plan = partition_iid(train_ids, cfg.clients, part_seed)
    elif cfg.partition_mode == "dirichlet":
        plan = partition_dirichlet(
            train_ids, store.labels[train_ids], cfg.clients, cfg.partition_alpha, part_seed
        )
    else:
        plan = partition_diversity(
            train_ids, store.labels[train_ids], cfg.clients, cfg.partition_alpha, part_seed
        )
    plan.validate(train_ids)

    total_b = round_half_up(cfg.budget_fraction * train_ids.size)
    if cfg.al_method == "fast":
        # One refinement round: only the global budget caps a client's take.
        per_client_b = total_b
    else:
        quota = round_half_up(cfg.per_round_fraction * train_ids.size)
        per_client_b = max(1, quota // cfg.clients) if quota else 0
    budget = Budget(
        total_b=total_b,
        per_client_b=per_client_b,
        counts_initial=cfg.budget_includes_initial,
    )
    return RunContext(
        cfg=cfg,
        store=store,
        split=split_spec,
        plan=plan,
        oracle=Oracle(store),
        budget=budget,
    )


def _training_label_accuracy(store: EmbeddingStore, pools: dict[int, ClientPool]) -> float:
    hits = 0
    total = 0
    for pool in pools.values():
        ids, labels = pool.training_items()
        if ids.size:
            hits += int((store.labels[ids] == labels).sum())
            total += ids.size
    return hits / total if total else 0.0


def _train_block(
    ctx: RunContext,
    pools: dict[int, ClientPool],
    params: ModelParams,
    ledger: CommLedger,
    trace: MetricsTrace,
    phase: str,
    round_offset: int,
) -> ModelParams:
    """T federated rounds on the pools' current training labels."""
    cfg = ctx.cfg
    tcfg = cfg.train_config()
    store = ctx.store
    test_x = store.features[ctx.split.test_ids]
    test_y = store.labels[ctx.split.test_ids]

    client_data = []
    for client_id in range(ctx.plan.k):
        ids, labels = pools[client_id].training_items()
        client_data.append((client_id, store.features[ids], labels))

    start = time.monotonic()
    for t in range(1, cfg.fl_rounds + 1):
        global_round = round_offset + t
        local_results = []
        for client_id, feats, labels in client_data:
            local_params, steps = local_update(
                params, feats, labels, tcfg, client_id, global_round
            )
            local_results.append((local_params, steps, labels.size))
        params = aggregate(local_results, params, cfg.strategy, cfg.sample_weighted)
        acc = evaluate(params, test_x, test_y)
        payload = round_payload_bytes(params.theta.size, ctx.plan.k)
        ledger.record_round(global_round, payload // 2, payload // 2)
        trace.add_row(global_round, acc, ledger.total_mb, phase)
        if not budget_check(pools, ctx.budget):
            raise ConfigError("labeling budget violated during training")
    ledger.add_walltime("train", time.monotonic() - start)
    return params


def _phase_label(components: frozenset[str]) -> str:
    if components == frozenset({"probe", "weak", "refine"}):
        return "fast"
    return "+".join(sorted(components))


def _two_pass(
    ctx: RunContext, components: frozenset[str]
) -> tuple[MetricsTrace, CommLedger, dict[int, ClientPool]]:
    """Core of the two-pass pipeline with switchable components."""
    cfg = ctx.cfg
    ledger = CommLedger()
    trace = MetricsTrace()

    t0 = time.monotonic()
    pools = initial_pool(
        ctx.plan, ctx.store, cfg.initial_fraction, derive_seed(cfg.seed, "pool"),
        ctx.budget, ctx.oracle,
    )

    scores_by_client: dict[int, list] = {cid: [] for cid in pools}
    if "weak" in components:
        for client_id in sorted(pools):
            pools[client_id], scores = preliminary_pass(
                ctx.store, pools[client_id], cfg.k_nn, cfg.metric
            )
            scores_by_client[client_id] = scores
        if cfg.share_initial_embeddings:
            counts = [len(pools[cid].labeled) for cid in sorted(pools)]
            ledger.preliminary_bytes = embedding_share_bytes(counts, ctx.store.d)
        trace.weak_acc_before = _training_label_accuracy(ctx.store, pools)
    ledger.add_walltime("prelim", time.monotonic() - t0)

    t0 = time.monotonic()
    refine_mode = (
        "uncertainty" if "refine" in components
        else "random" if "random_refine" in components
        else None
    )
    if refine_mode is not None:
        capacities = [
            min(len(pools[cid].unlabeled), ctx.budget.per_client_b)
            for cid in range(ctx.plan.k)
        ]
        shares = allocate_shares(ctx.budget.remaining, ctx.plan.k, capacities)
        for client_id in sorted(pools):
            pool = pools[client_id]
            if refine_mode == "uncertainty":
                scores = scores_by_client[client_id]
            else:
                ids = np.sort(np.asarray(list(pool.unlabeled), dtype=np.int64))
                order = rng_for(cfg.seed, "random_refine", client_id).permutation(ids)
                zeros = np.zeros(ctx.store.class_count)
                scores = [
                    PrototypeScores(sample_id=int(sid), s=zeros, u=float(-rank))
                    for rank, sid in enumerate(order)
                ]
            pools[client_id], chosen = refinement_pass(
                pool, scores, ctx.budget, ctx.oracle, allocation=shares[client_id]
            )
            for sid in chosen:
                weak_rec = pool.weak.get(sid)
                trace.audit_rows.append((
                    1, client_id, sid,
                    weak_rec.label if weak_rec else "",
                    pools[client_id].labeled[sid].label,
                    pools[client_id].labeled[sid].score,
                    PROV_ORACLE,
                ))
    if "weak" in components:
        trace.weak_acc_after = _training_label_accuracy(ctx.store, pools)
    ledger.add_walltime("refine", time.monotonic() - t0)

    dims = cfg.model_dims(ctx.store.d, ctx.store.class_count)
    params = init_params(dims, derive_seed(cfg.seed, "model"))
    _train_block(
        ctx, pools, params, ledger, trace,
        phase=_phase_label(components), round_offset=0,
    )
    trace.budget_consumed = ctx.budget.consumed
    return trace, ledger, pools


def run_fast(cfg: ExperimentConfig) -> tuple[MetricsTrace, CommLedger]:
    """Full two-pass run: weak labeling, uncertainty refinement, training."""
    if cfg.al_method != "fast":
        raise ConfigError("run_fast requires al.method = fast")
    ctx = prepare(cfg)
    trace, ledger, _ = _two_pass(ctx, frozenset({"probe", "weak", "refine"}))
    return trace, ledger


def run_ablation(
    cfg: ExperimentConfig, components: set[str] | frozenset[str]
) -> MetricsTrace:
    """Run one pipeline variant from the component-ablation family."""
    comps = frozenset(components)
    unknown = comps - set(ABLATION_COMPONENTS)
    if unknown:
        raise ConfigError(f"unknown ablation components {sorted(unknown)}")
    if comps not in _VALID_ABLATIONS:
        raise ConfigError(f"invalid component combination {sorted(comps)}")
    ctx = prepare(cfg)
    trace, _, _ = _two_pass(ctx, comps)
    return trace


def run_baseline(cfg: ExperimentConfig) -> tuple[MetricsTrace, CommLedger]:
    """Iterative query/label/train loop for random, entropy, and coreset."""
    if cfg.al_method not in ("random", "entropy", "coreset"):
        raise ConfigError("run_baseline requires al.method in {random, entropy, coreset}")
    ctx = prepare(cfg)
    cfg = ctx.cfg
    store = ctx.store
    ledger = CommLedger()
    trace = MetricsTrace()

    pools = {
        client_id: ClientPool(
            client_id=client_id,
            class_count=store.class_count,
            unlabeled=set(int(s) for s in ctx.plan.members(client_id)),
        )
        for client_id in range(ctx.plan.k)
    }

    dims = cfg.model_dims(store.d, store.class_count)
    params = init_params(dims, derive_seed(cfg.seed, "model"))
    quota = round_half_up(cfg.per_round_fraction * ctx.split.train_ids.size)

    for al_round in range(1, cfg.al_rounds + 1):
        t0 = time.monotonic()
        capacities = [
            min(len(pools[cid].unlabeled), ctx.budget.per_client_b)
            for cid in range(ctx.plan.k)
        ]
        shares = allocate_shares(
            min(quota, ctx.budget.remaining), ctx.plan.k, capacities
        )
        for client_id in sorted(pools):
            pool = pools[client_id]
            b_share = min(shares[client_id], len(pool.unlabeled))
            if b_share <= 0:
                continue
            if al_round == 1:
                chosen = baselines.random_query(pool, b_share, cfg.seed, al_round)
                pools[client_id] = _label_initial(pool, chosen, ctx)
            else:
                if cfg.al_method == "random":
                    chosen = baselines.random_query(pool, b_share, cfg.seed, al_round)
                elif cfg.al_method == "entropy":
                    chosen = baselines.entropy_query(store, pool, params, b_share)
                else:
                    chosen = baselines.coreset_query(store, pool, b_share)
                pools[client_id] = _label_oracle(pool, chosen, ctx)
            for sid in chosen:
                trace.audit_rows.append((
                    al_round, client_id, sid, "",
                    pools[client_id].labeled[sid].label, "",
                    pools[client_id].labeled[sid].provenance,
                ))
        ledger.add_walltime("query", time.monotonic() - t0)

        if not cfg.warm_start and al_round > 1:
            params = init_params(dims, derive_seed(cfg.seed, "model", al_round))
        params = _train_block(
            ctx, pools, params, ledger, trace,
            phase=f"al{al_round}", round_offset=(al_round - 1) * cfg.fl_rounds,
        )
    trace.budget_consumed = ctx.budget.consumed
    return trace, ledger


def _label_initial(pool, chosen, ctx):
    """Round-1 random picks: ground truth stamped directly, like the
    two-pass initial pool."""
    new_pool = pool.copy()
    ctx.budget.consume(len(chosen))
    for sid in chosen:
        new_pool.unlabeled.discard(sid)
        new_pool.labeled[sid] = LabelRecord(
            label=ctx.oracle.peek(sid), provenance=PROV_INITIAL
        )
    return new_pool


def _label_oracle(pool, chosen, ctx):
    new_pool = pool.copy()
    ctx.budget.consume(len(chosen))
    for sid in chosen:
        new_pool.unlabeled.discard(sid)
        new_pool.labeled[sid] = LabelRecord(
            label=ctx.oracle.annotate(sid), provenance=PROV_ORACLE
        )
    return new_pool


def run_experiment(cfg: ExperimentConfig) -> tuple[MetricsTrace, CommLedger]:
    """Dispatch on the configured AL method."""
    if cfg.al_method == "fast":
        return run_fast(cfg)
    return run_baseline(cfg)


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_metrics(trace: MetricsTrace, ledger: CommLedger, out_dir) -> dict[str, str]:
    """Write round-level metrics.csv, summary.json, and the refinement
    audit log. Identical traces produce byte-identical CSV files."""
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w", newline="") as fh:
        fh.write("round,test_acc,cum_mb,phase\n")
        for row in trace.rows:
            fh.write(f"{row.round_index},{_fmt(row.test_acc)},{_fmt(row.cum_mb)},{row.phase}\n")

    summary = {
        "final_acc": float(trace.final_acc),
        "total_mb": float(ledger.total_mb),
        "walltime_s": float(ledger.walltime_s),
        "rounds": trace.round_count,
        "budget_consumed": trace.budget_consumed,
    }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    paths = {"metrics": metrics_path, "summary": summary_path}
    if trace.audit_rows:
        audit_path = os.path.join(out_dir, "refine_audit.csv")
        with open(audit_path, "w", newline="") as fh:
            fh.write("round,client_id,sample_id,weak_label,oracle_label,u,provenance\n")
            for row in trace.audit_rows:
                fh.write(",".join("" if v == "" else str(v) for v in row) + "\n")
        paths["audit"] = audit_path
    return paths


def run_sweep(
    base_pairs: dict[str, str], param: str, values: list[str], out_dir
) -> list[dict[str, object]]:
    """Run one experiment per value of `param`, returning summary records."""
    from .config import config_from_pairs, override

    os.makedirs(out_dir, exist_ok=True)
    results = []
    for value in values:
        cfg = config_from_pairs(override(base_pairs, param, value))
        run_dir = os.path.join(out_dir, f"{param.replace('.', '_')}={value}")
        cfg.out_dir = run_dir
        trace, ledger = run_experiment(cfg)
        emit_metrics(trace, ledger, run_dir)
        results.append({
            "value": value,
            "final_acc": trace.final_acc,
            "total_mb": ledger.total_mb,
            "rounds": trace.round_count,
            "budget_consumed": trace.budget_consumed,
        })
    table = os.path.join(out_dir, "sweep_summary.csv")
    with open(table, "w", newline="") as fh:
        fh.write(f"{param},final_acc,total_mb,rounds,budget_consumed\n")
        for rec in results:
            fh.write(
                f"{rec['value']},{_fmt(rec['final_acc'])},{_fmt(rec['total_mb'])},"
                f"{rec['rounds']},{rec['budget_consumed']}\n"
            )
    return results
