from pmlaplacian.experiments import ExperimentRunner
from pmlaplacian.lib.clustering import spectral_cluster
from pmlaplacian.lib.graphs import MultilayerGraph
from pmlaplacian.lib.powermean import PowerMeanOp, PowerMeanSolveSpec, power_mean_eigs
from pmlaplacian.version import __version__

PACKAGE = __package__
VERSION = __version__

__all__ = [
    "VERSION",
    "PACKAGE",
    ExperimentRunner.__name__,
    MultilayerGraph.__name__,
    PowerMeanOp.__name__,
    PowerMeanSolveSpec.__name__,
    power_mean_eigs.__name__,
    spectral_cluster.__name__,
]
