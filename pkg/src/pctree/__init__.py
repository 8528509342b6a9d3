"""Hierarchical conceptual clustering over nominal data.

Trees are grown by hierarchical sorting, improved by iterative optimization,
simplified with holdout-validated per-variable frontiers, and scored on
pattern completion and classification cost.
"""

from .construct import build, dissimilarity_ordering, similarity_ordering, sort_observation
from .dataset import Dataset, load_builtin, load_csv, load_dataset, random_ordering, split, subsample
from .evaluate import MetricsReport, accuracy, predict, structure_metrics
from .frontier import accumulate, prune, select_frontiers
from .objective import ObjectiveId, partition_utility
from .optimize import hierarchical_redistribution, layered_build, redistribute_single, reorder_resort
from .tree import ClusterNode, Tree

__version__ = "0.1.0"
