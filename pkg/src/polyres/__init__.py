"""Echo state networks with polynomial readouts.

Reservoir computing toolkit for chaotic time-series prediction and
closed-loop attractor reconstruction, with linear, quadratic and cubic
readouts trained by ridge regression.
"""

from .dynamics import FlowMap, Trajectory, generate_trajectory, lorenz, max_lyapunov, rossler
from .estimator import MonomialFeatures, PolyESN, ReservoirStates
from .metrics import histogram_pdf, kl_divergence, mce, rmse, valid_prediction_time
from .numerics import Rng, ridge_solve, scale_to_radius, spectral_radius
from .readout import AutonomousEsn, PolyReadout, closed_loop_run, feature_dim, features, predict, train
from .reservoir import Esn, EsnConfig, build_esn, drive, update

__version__ = "0.1.0"

__all__ = [
    "AutonomousEsn",
    "Esn",
    "EsnConfig",
    "FlowMap",
    "MonomialFeatures",
    "PolyESN",
    "PolyReadout",
    "ReservoirStates",
    "Rng",
    "Trajectory",
    "build_esn",
    "closed_loop_run",
    "drive",
    "feature_dim",
    "features",
    "generate_trajectory",
    "histogram_pdf",
    "kl_divergence",
    "lorenz",
    "max_lyapunov",
    "mce",
    "predict",
    "ridge_solve",
    "rmse",
    "rossler",
    "scale_to_radius",
    "spectral_radius",
    "train",
    "update",
    "valid_prediction_time",
]
