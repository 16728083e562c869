"""Training-free visual token compression for GUI agent screenshots."""
from ._backend import BACKEND
from .core import (
    CompressionConfig,
    CostModelParams,
    ImportanceMap,
    PartitionMask,
    PruneSelection,
    Stratum,
    TokenGrid,
    token_count,
)
from .errors import (
    BudgetTooSmall,
    ConfigError,
    EmptyBudget,
    GridMismatch,
    GuiPruneError,
    KTooLarge,
    ParseError,
    QuotaExceedsOriginal,
)
from .ssp import prune, stratum_budgets, top_k, uniform_grid_sample
from .tar import HistoryBudgetPlan, allocate_quotas, compute_global_budget, decay_weights, plan_history

__version__ = "0.1.0"
