"""
SBRO-FL Tools - the capabilities the round agent orchestrates
"""
from .model_tool import (
    Dataset, Metric, ModelParams, TrainConfig,
    aggregate, evaluate, init_model, local_train, loss_and_gradient, predict,
)
from .partition_tool import (
    BidMode, BidSpec, ClientDataset, PartitionSpec,
    flip_labels, generate_bids, generate_synthetic, load_idx, partition, split_holdout,
)
from .reputation_tool import (
    LossSign, ProspectParams, ReputationState, UpdateParams,
    compute_threshold, error_count, reputation_score, reputation_scores, update_reputations,
)
from .selection_tool import (
    SelectionProblem, SelectionResult,
    baseline_all, baseline_hq_random, baseline_random,
    brute_force_selection, selection_weights, solve_selection,
)
from .shapley_tool import (
    CoalitionContext, ShapleyResult, TableGame,
    coalition_value, exact_shapley, mc_shapley,
)

__all__ = [
    'Dataset', 'Metric', 'ModelParams', 'TrainConfig',
    'aggregate', 'evaluate', 'init_model', 'local_train', 'loss_and_gradient', 'predict',
    'BidMode', 'BidSpec', 'ClientDataset', 'PartitionSpec',
    'flip_labels', 'generate_bids', 'generate_synthetic', 'load_idx', 'partition', 'split_holdout',
    'LossSign', 'ProspectParams', 'ReputationState', 'UpdateParams',
    'compute_threshold', 'error_count', 'reputation_score', 'reputation_scores', 'update_reputations',
    'SelectionProblem', 'SelectionResult',
    'baseline_all', 'baseline_hq_random', 'baseline_random',
    'brute_force_selection', 'selection_weights', 'solve_selection',
    'CoalitionContext', 'ShapleyResult', 'TableGame',
    'coalition_value', 'exact_shapley', 'mc_shapley',
]
