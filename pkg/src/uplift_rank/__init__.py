"""Uplift ranking models selected by a generalization lower bound on the
area under the uplift curve."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bound import (
    BoundReport,
    FunctionClassSpec,
    auuc_lower_bound,
    c_delta,
    function_class_for,
    rademacher_mc_oracle,
    rademacher_upper,
)
from .data import (
    ColumnRule,
    DataError,
    EncodingSchema,
    GroupView,
    RawTrialTable,
    SplitSpec,
    UpliftDataset,
    fit_encode,
    generate_synthetic,
    group_view,
    hillstrom_default_rules,
    load_canonical_csv,
    load_hillstrom,
    make_email_campaign_raw,
    split,
    true_ite,
    write_canonical_csv,
)
from .metrics import (
    GroupStats,
    PolicyRiskPoint,
    UpliftCurve,
    auuc,
    auuc_decomposed,
    group_stats,
    policy_risk,
    policy_risk_table,
    ranking_risk,
    uplift_curve,
)
from .models import (
    CvtScorer,
    LinearScorer,
    TwoModelScorer,
    fit_cvt,
    fit_logistic,
    fit_two_model,
    load_model,
    predict_cvt,
    predict_tm,
    save_model,
    score,
)
from .optimizer import (
    AdamState,
    TrainConfig,
    pairwise_grad,
    pairwise_loss,
    project_max_norm,
    train_ranker,
)
from .selection import (
    GridSpec,
    SelectionResult,
    binomial_sign_test,
    empirical_bernstein_upper,
    run_auuc_max,
    select_by_cv,
)
from .surrogates import SurrogateSpec, surrogate_eval, surrogate_grad

__version__ = "0.1.0"
