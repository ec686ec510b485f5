"""Chance-adjusted dependency measures."""

from .adjust import (
    AdjustedScore,
    adjust_quantification,
    adjust_ranking,
    agini_alpha,
    amic,
    amic_alpha,
    ar2,
    ar2_alpha,
    score,
    sgini,
    smic,
    sr2,
    standardize,
)
from .errors import EstimationError
from .measures import (
    ContingencyTable,
    PairedSample,
    build_contingency,
    gini_gain,
    mutual_information,
    pearson_r2,
)
from .mic import Grid, MicConfig, mic, normalized_mi
from .nulls import NullModel, cantelli_quantile, gini_null_moments, permutation_null, r2_null

__version__ = "0.1.0"
