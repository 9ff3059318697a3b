"""Explainable ensemble engine for fire resistance and spalling of RC columns."""

__version__ = "0.1.0"

from .dataset import (  # noqa: F401
    ColumnRecord,
    Dataset,
    FeatureSchema,
    DEFAULT_SCHEMA,
    Provenance,
    Restraint,
    Task,
    load_csv,
    split_train_test,
    summarize,
    validate_record,
    write_csv,
)
from .ensemble import (  # noqa: F401
    EnsembleConfig,
    EnsembleModel,
    Policy,
    RatingClass,
    fit_ensemble,
    predict,
    predict_batch,
    rating_class,
    vote_classify,
)
from .benchmark import BenchmarkSpec, gen_benchmark  # noqa: F401
