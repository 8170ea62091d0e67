"""Monte Carlo bilateral collateralized CVA for interest-rate swaps."""

from .cirpp import Cirpp, CirppParams, fit_psi
from .collateral import MarginingRule, simulate_collateral
from .config import RunConfig, SimulationSettings, SweepSpec
from .errors import ConfigError, NumericalError
from .g2pp import G2pp, G2ppParams, fit_phi
from .irs import SwapSpec, fair_rate, swap_exposure
from .market_data import DiscountCurve, HazardCurve
from .path_engine import CorrelationParams
from .pricer import AdjustmentReport, RecoveryParams, estimate, exposure_profiles
from .runner import GridResult, RunResult, run, run_grid
from .simulation import Model, PathSet, build_grid, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "AdjustmentReport",
    "Cirpp",
    "CirppParams",
    "ConfigError",
    "CorrelationParams",
    "DiscountCurve",
    "G2pp",
    "G2ppParams",
    "GridResult",
    "HazardCurve",
    "MarginingRule",
    "Model",
    "NumericalError",
    "PathSet",
    "RecoveryParams",
    "RunResult",
    "RunConfig",
    "SimulationSettings",
    "SwapSpec",
    "SweepSpec",
    "build_grid",
    "estimate",
    "exposure_profiles",
    "fair_rate",
    "fit_phi",
    "fit_psi",
    "run",
    "run_grid",
    "simulate_collateral",
    "simulate_paths",
    "swap_exposure",
]
