"""fairbin: fairness-constrained optimal binning scorecards.

Pipeline: depth-1 boosted stumps propose prebins per feature; an exact
dynamic program merges them to maximize accuracy information value subject to
a fairness-IV bound; a monotone-constrained binning logistic regression on
the merged superbins yields an additive, directly interpretable model with
AUC and adverse-impact audits.
"""

from .binlogit import (
    BinAssignment,
    BinLogisticModel,
    fit_bin_logistic,
    isotonic_projection,
    one_hot_encode,
    predict_proba,
)
from .binning import (
    EVENT_CONDITIONED,
    GROUP,
    BinTable,
    MergeSolution,
    Partition,
    SuperbinValues,
    accuracy_iv,
    build_bin_table,
    classify_iv_strength,
    enumerate_partitions,
    fairness_bound_range,
    fairness_iv,
    linear_accuracy_objective,
    linear_fairness_objective,
    merged_edges,
    partition_iv,
    solve_merge,
    superbin_values,
)
from .data import (
    BINARY,
    NUMERIC,
    DataSchema,
    Dataset,
    SplitSpec,
    load_csv,
    split_train_test,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateSplitError,
    FairbinError,
    FairnessUndefinedError,
    InfeasiblePartitionError,
    ModelFormatError,
    VerificationFailure,
)
from .interpret import (
    FeatureImportance,
    MainEffect,
    export_report,
    feature_importance,
    load_report,
    main_effects,
)
from .metrics import (
    ACCEPTABLE_AIR_BAND,
    ConfusionByGroup,
    air,
    auc,
    confusion_by_group,
    within_acceptable_band,
)
from .pipeline import (
    FitOutcome,
    ParetoPoint,
    RunConfig,
    VerificationReport,
    fit_for_epsilon,
    load_model,
    prepare_stages,
    run_pipeline,
    save_model,
    sweep_epsilon,
    verify_linear_iv,
    write_sweep_csv,
)
from .stumps import (
    PrebinSpec,
    Stump,
    StumpEnsemble,
    StumpParams,
    extract_prebins,
    fit_stumps,
    predict_logit,
)

__version__ = "0.1.0"
