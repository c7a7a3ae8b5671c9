"""Random projection ensemble clustering (RPEClu).

Gaussian mixtures are fitted on many random low-dimensional projections,
projections are ranked by a composite BIC, and the best partitions are
merged into a consensus clustering.
"""

__version__ = "0.1.0"

from .errors import (
    FitFailureError,
    InfeasibleError,
    InvalidDimensionError,
    PartialEnsembleError,
    RpecluError,
    ScoreInvalidError,
)
from .rproj import ProjectionPair, generate_haar, project
from .gmm import EmConfig, GmmModel, HardPartition, bic_gmm, fit_gmm, map_partition
from .condreg import RegressionFit, bic_reg, composite_bic, fit_regression
from .consensus import ConsensusState, aggregate, dissimilarity, optimal_permutation
from .evaluation import adjusted_rand_index, ari, jl_distortion, kmeans_baseline, pairwise_diversity
from .pipeline import RpecluConfig, RunResult, ScoredPartition, default_d, run, select_top
from .simgen import LabeledDataset, ScenarioConfig, generate, scenario_table
