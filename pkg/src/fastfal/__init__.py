"""Deterministic simulator for two-pass federated active learning.

Frozen-encoder embeddings are weak-labeled by kNN propagation, the most
uncertain samples are refined by a simulated oracle under a global budget,
and a classifier head is trained federatedly, with full communication-cost
accounting against iterative active learning baselines.
"""

from .config import ExperimentConfig, load_config, parse_config_text
from .datastore import EmbeddingStore, SplitSpec, gen_synthetic, load_store, save_store, split
from .ledger import CommLedger, MetricsTrace
from .orchestrator import (
    emit_metrics,
    run_ablation,
    run_baseline,
    run_experiment,
    run_fast,
    run_sweep,
)
from .partition import PartitionPlan, partition_dirichlet, partition_diversity, partition_iid
from .refine import Budget, Oracle, budget_check, initial_pool, refinement_pass, select_top_b
from .trainer import (
    ModelParams,
    TrainConfig,
    aggregate,
    evaluate,
    forward,
    init_params,
    load_params,
    local_update,
    loss_and_grad,
    save_params,
)
from .weaklabel import (
    ClientPool,
    LabelRecord,
    PrototypeScores,
    knn_propagate,
    preliminary_pass,
    prototype_scores,
    uncertainty,
)

__version__ = "0.1.0"
