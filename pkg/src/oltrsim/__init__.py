"""Online learning to rank simulation toolkit.

Implements multileave gradient descent over linear and reference-document
similarity models, a cascading variant that switches model spaces on
convergence, cascade click-model user simulation, NDCG-based online and
offline evaluation, and a seeded experiment runner with CSV/JSON outputs.
"""

from .backends import BACKEND
from .clicks import CLICK_MODELS, INFORMATIONAL, NAVIGATIONAL, PERFECT, ClickModelParams
from .data import (
    Dataset,
    Document,
    FoldSplit,
    QueryGroup,
    generate_synthetic,
    load_fold_dirs,
    normalize_per_query,
    parse_letor,
    serialize_letor,
    split_single_fold,
)
from .engine import (
    EngineConfig,
    EngineState,
    RunTrace,
    cascade_switch,
    detect_convergence,
    mgd_step,
    run_cmgd,
    run_mgd,
    run_sim_mgd,
    sample_unit_vector,
)
from .experiment import (
    ConditionConfig,
    ConfigError,
    ExperimentConfig,
    ExperimentSummary,
    load_config,
    run_experiment,
    save_config,
)
from .metrics import (
    ComparisonReport,
    MetricConfig,
    ndcg_at_k,
    online_performance,
    p_value_from_t,
    t_test_two_tailed,
)
from .models import (
    LinearModel,
    RankerModel,
    ReferenceSet,
    SimilarityModel,
    convert_sim_to_linear,
    rank,
    score,
    select_references_kmeans,
    select_references_uniform,
)
from .multileaving import (
    MultileaveOutcome,
    RankingSlate,
    probabilistic_infer,
    probabilistic_multileave,
    team_draft_infer,
    team_draft_multileave,
)

__version__ = "0.1.0"
