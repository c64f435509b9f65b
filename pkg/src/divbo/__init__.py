"""Diversity-aware Bayesian optimisation for post-hoc ensembles.

The package searches a conditional algorithm/hyperparameter space for
learners that both perform well and disagree with the ensemble built so
far.  Subpackage :mod:`divbo.harness` adds datasets, experiments and the
``divbo`` command line.
"""

from .configspace import (
    CandidateBatch,
    ConfigSpace,
    Configuration,
    HyperparameterDef,
    categorical,
    continuous,
    integer,
    load_space,
    sample_local,
    sample_uniform,
    save_space,
    uniform_batch,
)
from .ensembles import (
    EnsemblePool,
    classification_error,
    diversity,
    ensemble_predict,
    ensemble_selection,
    min_diversity_to_pool,
    pairwise_disagreement,
)
from .errors import DatasetError, ValidationError
from .history import PENALTY_ERROR, Observation, RunHistory
from .learners import LEARNERS, builtin_space, fit_learner, train_and_predict
from .optimizer import (
    ENSEMBLE_METHODS,
    METHODS,
    DivBOConfig,
    RunResult,
    Suggestion,
    combined_acquisition,
    effective_pool_updates,
    rank_values,
    run,
    suggest,
    weight_schedule,
)
from .surrogates import (
    DivSurrogate,
    PerfSurrogate,
    build_pair_training_set,
    diversity_acquisition,
    expected_improvement,
    fit_div,
    fit_perf,
)
from .synthetic import Evaluation, SyntheticProblem
from .treereg import (
    BoostedTreeEnsembleBag,
    BoostingParams,
    ForestParams,
    ProbabilisticForest,
    RegressionTree,
    fit_boosted_bag,
    fit_forest,
    load_model,
    predict_boosted_bag,
    predict_forest,
    sample_boosted_bag,
    save_model,
)

__version__ = "0.1.0"
