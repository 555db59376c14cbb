"""homconv: clique-structured convolutional classifiers for tabular data."""

from .data import (SplitIndices, StandardizationParams, TabularDataset,
                   fetch_openml, load_csv, split, standardize_apply, standardize_fit)
from .harness import ExperimentConfig, RunResult, aggregate, run_experiment
from .homology import (SimplicialFamilies, build_families, families_from_graph,
                       maximal_cliques)
from .metrics import ConfusionMatrix, accuracy, macro_f1, mcc
from .net import (HcnnConfig, HcnnModel, TrainConfig, compile, forward,
                  loss_and_gradients, param_count, predict, train)
from .similarity import (BootstrapSpec, SimilarityMatrix, bootstrap_replica,
                         mean_similarity, squared_correlation)
from .tmfg import (EdgeFrequencyTable, FilteredGraph, bootstrap_net, build_tmfg,
                   count_edges, verify_structure)

__version__ = "0.1.0"
