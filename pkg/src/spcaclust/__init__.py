"""Sparse-PCA clustering for high-dimensional Gaussian mixtures."""

from .core import DataMatrix, LabelVector, NormalizedMatrix, SubspaceBasis, decompose_signal, normalize
from .errors import (
    CsvParseError,
    DegenerateSignal,
    InitFailure,
    InitRankDeficient,
    InvalidArgument,
    InvalidConfig,
    InvalidCovariance,
    InvalidData,
    PipelineError,
    RankDeficientProjection,
    RankDeficientSelection,
    SpcaClustError,
)
from .kmeans import KMeansResult, kmeans
from .metrics import ErrorReport, hamming_star, sin_theta
from .spca import (
    InitializerSpec,
    PenaltyParams,
    SpcaFit,
    SpcaParams,
    pca_cluster_baseline,
    spca_cluster,
    spca_fit,
)
from .synth import GridPoint, SynthConfig, generate, sparsity_count

__version__ = "0.1.0"
