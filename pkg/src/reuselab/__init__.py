"""reuselab: active-learning sample selection and reusability experiments.

The package has four layers: ``datasets`` (synthetic generators, CSV
ingestion, splits), ``learners`` (an online linear selector and
importance-weighted batch consumers), ``selection`` (random, uncertainty,
and biased-coin IWAL strategies with replayable traces), and
``experiments`` (the repetition engine, learning-curve aggregation, and
reusability verdicts). ``cli`` wraps it all for the command line.
"""

__version__ = "0.1.0"

from .datasets import (
    Dataset,
    DatasetSpec,
    Instance,
    SplitPair,
    gen_circle,
    gen_four_cluster_line,
    gen_uniform_line,
    load_csv,
    make_dataset,
    split,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    DegenerateGridError,
    EmptyCellError,
    InvalidArgumentError,
    MissingClassError,
    ReuselabError,
    SingleClassDataError,
    SingularDataError,
    TraceFormatError,
    UnknownCategoryError,
)
from .experiments import (
    ConsumerSpec,
    CurvePoint,
    ExperimentConfig,
    ExperimentResult,
    ReusabilityCell,
    ReusabilityReport,
    density_histogram,
    replay_trace,
    run_experiment,
    welch_t,
)
from .learners import (
    Kernel,
    WeightedInstance,
    dataset_as_weighted,
    fit_lda,
    fit_least_squares,
    fit_online_linear,
    fit_qda,
    fit_svm,
    linear_kernel,
    make_online_model,
    model_from_text,
    model_to_text,
    online_linear_update,
    poly3_kernel,
    rbf_kernel,
    weighted,
    weighted_error,
    zero_one_error,
)
from .selection import (
    IwalConfig,
    SelectionResult,
    build_linear_grid,
    exact_error_difference,
    grid_for_dataset,
    load_trace,
    save_trace,
    select_iwal,
    select_random,
    select_uncertainty,
    selection_probability,
    surrogate_error_difference,
    without_weights,
)
