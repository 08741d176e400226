"""Deterministic sparse coresets for k-means, with streaming and sampling
baselines. See README for the construction outline and CLI usage."""

from ._kernels import backend_name, set_backend
from .baselines import SamplingConfig, sensitivity_coreset, uniform_coreset
from .coreset import (
    Coreset,
    CoresetConfig,
    FrankWolfeResult,
    MSelection,
    frank_wolfe_mean,
    kmean_coreset,
    one_mean_coreset_exact,
    one_mean_coreset_sparse,
    select_m,
)
from .io import (
    ParseError,
    StreamFormat,
    read_coreset,
    read_points,
    read_weighted_set,
    write_coreset,
    write_points,
)
from .kmeans import (
    CenterSet,
    Partition,
    SolverConfig,
    cost,
    exact_kmeans,
    exact_opt_curve,
    kmeanspp_seed,
    lloyd_step,
    partition,
    solve_kmeans,
)
from .sparse_core import (
    SparseVector,
    WeightedSet,
    dist_sq,
    point_dist_sq,
    sparse_combine,
    sparse_dot,
    weighted_mean,
    weighted_variance,
)
from .streaming import (
    CoresetTree,
    DistributedResult,
    combine_shard_coresets,
    distributed_run,
    merge,
    split_round_robin,
)

__version__ = "0.1.0"

__all__ = [
    "CenterSet",
    "Coreset",
    "CoresetConfig",
    "CoresetTree",
    "DistributedResult",
    "FrankWolfeResult",
    "MSelection",
    "ParseError",
    "Partition",
    "SamplingConfig",
    "SolverConfig",
    "SparseVector",
    "StreamFormat",
    "WeightedSet",
    "backend_name",
    "cost",
    "dist_sq",
    "combine_shard_coresets",
    "distributed_run",
    "exact_kmeans",
    "exact_opt_curve",
    "frank_wolfe_mean",
    "kmean_coreset",
    "kmeanspp_seed",
    "lloyd_step",
    "merge",
    "one_mean_coreset_exact",
    "one_mean_coreset_sparse",
    "partition",
    "point_dist_sq",
    "read_coreset",
    "read_points",
    "read_weighted_set",
    "select_m",
    "sensitivity_coreset",
    "set_backend",
    "solve_kmeans",
    "sparse_combine",
    "sparse_dot",
    "split_round_robin",
    "uniform_coreset",
    "weighted_mean",
    "weighted_variance",
    "write_coreset",
    "write_points",
    "__version__",
]
