"""Top-level package for uomkit.

uomkit verifies the union-of-manifolds hypothesis on point clouds
(per-group intrinsic dimension estimates) and fits clustered pushforward
generative models: one two-step model per cluster, each with its own
latent dimension, mixed by cluster size. Importing from this module
brings into scope the data types, the estimator, the clustering and
model entry points and the evaluation helpers.
"""

__version__ = "0.1.0"

from .cluster import kmeanspp, label_agreement, ward_agglomerative
from .clustered import ClusteredModel, load_bundle, sample_clustered, save_bundle, train_clustered
from .config import ClusteredConfig, GmmConfig, MlpConfig, RunConfig, SoftmaxConfig, TwoStepConfig
from .data import DataMatrix, GroupIndex, load_dataset, save_dataset
from .errors import UomError
from .evaluation import bridge_mass, mmd2_unbiased, pearson_r_and_pvalue
from .idest import IdEstimate, IdReport, mle_id, per_group_id
from .knn import NeighborTable, knn_distances, nn_distance_to_set
from .synth import compose_union, gen_affine_manifold, gen_pushforward_manifold
from .twostep import PushforwardModel, fit_two_step, sample
from .weights import id_weights, train_softmax_weighted

__all__ = [
    "__version__",
    "ClusteredConfig",
    "ClusteredModel",
    "DataMatrix",
    "GmmConfig",
    "GroupIndex",
    "IdEstimate",
    "IdReport",
    "MlpConfig",
    "NeighborTable",
    "PushforwardModel",
    "RunConfig",
    "SoftmaxConfig",
    "TwoStepConfig",
    "UomError",
    "bridge_mass",
    "compose_union",
    "fit_two_step",
    "gen_affine_manifold",
    "gen_pushforward_manifold",
    "id_weights",
    "kmeanspp",
    "knn_distances",
    "label_agreement",
    "load_bundle",
    "load_dataset",
    "mle_id",
    "mmd2_unbiased",
    "nn_distance_to_set",
    "pearson_r_and_pvalue",
    "per_group_id",
    "sample",
    "sample_clustered",
    "save_bundle",
    "save_dataset",
    "train_clustered",
    "train_softmax_weighted",
    "ward_agglomerative",
]
