"""Max-min weighted uplink SINR for IRS-assisted massive MIMO with HIs.

Library layout:

- `config`        scenario parameters and YAML parsing
- `scenario`      geometry, path losses, correlations, LoS matrix
- `impairments`   phase-noise statistics and distortion covariances
- `sampler`       correlated Rayleigh / phase-error realizations
- `instantaneous` LMMSE combining, instantaneous SINR, Monte Carlo rates
- `deterministic` DE SINR fixed point
- `power`         max-min power-allocation fixed point
- `rbm`           phase-shift gradient ascent and the alternating driver
- `harness`       experiment runner behind the CLI
"""

from .config import SystemConfig, load_config, config_from_dict
from .scenario import ChannelStatistics, build_statistics
from .impairments import PhaseNoiseModel
from .deterministic import DEState, solve_de, de_rate
from .power import PowerSolution, solve_power
from .rbm import SolveResult, alternating_solve
from .instantaneous import mc_rate, lmmse_receiver, optimal_sinr, instantaneous_sinr

__version__ = "0.1.0"

__all__ = [
    "SystemConfig", "load_config", "config_from_dict",
    "ChannelStatistics", "build_statistics", "PhaseNoiseModel",
    "DEState", "solve_de", "de_rate",
    "PowerSolution", "solve_power",
    "SolveResult", "alternating_solve",
    "mc_rate", "lmmse_receiver", "optimal_sinr", "instantaneous_sinr",
    "__version__",
]
