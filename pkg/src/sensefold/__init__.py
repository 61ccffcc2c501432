"""sensefold: multi-country smartphone-sensing pipeline at desk scale.

Synthetic corpus generation, windowed multimodal featurization, missing-data
handling, 12-class daily-activity inference, and the country-specific /
country-agnostic / multi-country generalization experiment matrix.
"""

__version__ = "0.1.0"

from .core import (
    ACTIVITY_CLASSES,
    ActivityClass,
    DayPeriod,
    Participant,
    SelfReport,
    Taxonomy,
    day_period,
    default_taxonomy,
    is_weekend,
    map_raw_activity,
)
from .featurize import Dataset, Example, extract_features, featurize_corpus, window_for
from .impute import drop_high_missing, knn_impute, modality_missingness
from .ingestion import Corpus, build_corpus, parse_event_log, parse_self_reports
from .metrics import weighted_auroc, weighted_f1
from .registry import FeatureRegistry, default_registry
from .splits import downsample_equal, split_hybrid, split_population_level
from .synthgen import GeneratorConfig, default_config, generate_corpus, shift_profile

__all__ = [
    "ACTIVITY_CLASSES",
    "ActivityClass",
    "Corpus",
    "Dataset",
    "DayPeriod",
    "Example",
    "FeatureRegistry",
    "GeneratorConfig",
    "Participant",
    "SelfReport",
    "Taxonomy",
    "build_corpus",
    "day_period",
    "default_config",
    "default_registry",
    "default_taxonomy",
    "downsample_equal",
    "drop_high_missing",
    "extract_features",
    "featurize_corpus",
    "generate_corpus",
    "is_weekend",
    "knn_impute",
    "map_raw_activity",
    "modality_missingness",
    "parse_event_log",
    "parse_self_reports",
    "shift_profile",
    "split_hybrid",
    "split_population_level",
    "weighted_auroc",
    "weighted_f1",
    "window_for",
]
