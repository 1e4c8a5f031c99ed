"""System configuration: scalar parameters, geometry, and solver knobs.

A configuration is a plain dataclass.  The YAML front-end (`load_config`)
is strict: unknown keys are rejected so that a run is always fully
described by its file plus CLI overrides.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .errors import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CARRIER_HZ = 2.5e9
DEFAULT_WAVELENGTH = SPEED_OF_LIGHT / DEFAULT_CARRIER_HZ


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def _ue_circle(center, radius, K):
    """K UE positions evenly spaced on a horizontal circle."""
    center = np.asarray(center, dtype=float)
    angles = 2.0 * np.pi * np.arange(K) / max(K, 1)
    pos = np.tile(center, (K, 1))
    pos[:, 0] += radius * np.cos(angles)
    pos[:, 1] += radius * np.sin(angles)
    return pos


@dataclass
class SystemConfig:
    """All scalar parameters of one scenario.

    Powers are linear (mW if you think of the defaults as dBm-derived);
    `sigma2` is the linear noise power.  `kappa_theta = inf` means
    error-free IRS phases (characteristic function 1).
    """

    M: int = 64               # BS antennas (ULA)
    N: int = 32               # IRS elements (UPA)
    K: int = 4                # single-antenna UEs

    p_max: float = db_to_linear(20.0)       # weighted sum-power budget
    sigma2: float = db_to_linear(-80.0)      # noise power

    kappa_bs: float = 0.0     # receive-distortion severity
    kappa_ue: float = 0.0     # transmit-distortion severity
    phase_noise: str = "von_mises"           # "von_mises" | "uniform"
    kappa_theta: float = math.inf            # Von Mises concentration
    alpha: float = 1.0        # IRS amplitude reflection coefficient

    eta: np.ndarray | None = None            # UE priorities (default ones)
    beta_w: np.ndarray | None = None         # power weights (default 1/K)

    wavelength: float = DEFAULT_WAVELENGTH
    d_bs: float | None = None                # BS antenna spacing (default λ/2)
    d_irs: float | None = None               # IRS element spacing (default λ/2)
    irs_element_dim: float | None = None     # IRS correlation grid pitch (default λ/4)
    bs_corr_rho: float = 0.5                 # exponential BS correlation coefficient
    irs_correlated: bool = True              # False -> R_IRS = I (uncorrelated)

    bs_position: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 10.0]))
    irs_position: np.ndarray = field(default_factory=lambda: np.array([40.0, 0.0, 10.0]))
    ue_positions: np.ndarray | None = None   # (K, 3); default circle near the IRS
    ue_center: np.ndarray = field(default_factory=lambda: np.array([45.0, 12.0, 1.5]))
    ue_radius: float = 4.0

    pathloss_c1_db: float = 26.0             # BS-IRS constant
    pathloss_c2_db: float = 28.0             # IRS-UE / BS-UE constant
    pathloss_nu1: float = 2.2
    pathloss_nu2: float = 3.67
    penetration_loss_db: float = 15.0        # extra loss on the direct link

    # solver controls
    de_tol: float = 1e-10
    de_max_iter: int = 500
    power_tol: float = 1e-8
    power_max_iter: int = 1000
    pga_mu0: float = 1.0
    pga_shrink: float = 0.5
    pga_armijo_c: float = 1e-4
    pga_mu_min: float = 1e-12
    pga_tol: float = 1e-9
    pga_max_steps: int = 200
    outer_tol: float = 1e-5
    outer_max_iter: int = 50
    grad_ue_rule: str = "min"                # "min" | "mean"
    polish: bool = True                      # joint quasi-Newton refinement
    polish_max_iter: int = 200
    polish_power_tol: float = 1e-12
    polish_gtol: float = 1e-10

    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 0:
            raise ConfigurationError("need M >= 1, K >= 1, N >= 0")
        if self.p_max <= 0 or self.sigma2 <= 0:
            raise ConfigurationError("p_max and sigma2 must be positive")
        if self.kappa_bs < 0 or self.kappa_ue < 0:
            raise ConfigurationError("distortion severities must be >= 0")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError("alpha must lie in (0, 1]")
        if self.phase_noise not in ("von_mises", "uniform"):
            raise ConfigurationError(f"unknown phase_noise kind {self.phase_noise!r}")
        if self.kappa_theta < 0:
            raise ConfigurationError("kappa_theta must be >= 0")
        if self.wavelength <= 0:
            raise ConfigurationError("wavelength must be positive")
        if abs(self.bs_corr_rho) >= 1.0:
            raise ConfigurationError("bs_corr_rho must satisfy |rho| < 1")

        if self.d_bs is None:
            self.d_bs = 0.5 * self.wavelength
        if self.d_irs is None:
            self.d_irs = 0.5 * self.wavelength
        if self.irs_element_dim is None:
            self.irs_element_dim = 0.25 * self.wavelength

        self.eta = np.ones(self.K) if self.eta is None else np.asarray(self.eta, dtype=float)
        self.beta_w = (np.full(self.K, 1.0 / self.K) if self.beta_w is None
                       else np.asarray(self.beta_w, dtype=float))
        if self.eta.shape != (self.K,) or np.any(self.eta <= 0):
            raise ConfigurationError("eta must be K positive priorities")
        if self.beta_w.shape != (self.K,) or np.any(self.beta_w <= 0):
            raise ConfigurationError("beta_w must be K positive weights")

        self.bs_position = np.asarray(self.bs_position, dtype=float).reshape(3)
        self.irs_position = np.asarray(self.irs_position, dtype=float).reshape(3)
        self.ue_center = np.asarray(self.ue_center, dtype=float).reshape(3)
        if self.ue_positions is None:
            self.ue_positions = _ue_circle(self.ue_center, self.ue_radius, self.K)
        else:
            self.ue_positions = np.asarray(self.ue_positions, dtype=float)
        if self.ue_positions.shape != (self.K, 3):
            raise ConfigurationError(f"ue_positions must have shape ({self.K}, 3)")

    def replace(self, **changes) -> "SystemConfig":
        """Copy with fields replaced (UE positions re-derived if K changes)."""
        if "K" in changes and changes["K"] != self.K:
            changes.setdefault("ue_positions", None)
            changes.setdefault("eta", None)
            changes.setdefault("beta_w", None)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for name, value in self.__dict__.items():
            if isinstance(value, np.ndarray):
                out[name] = value.tolist()
            elif isinstance(value, float) and math.isinf(value):
                out[name] = "inf"
            else:
                out[name] = value
        return out

    def digest(self) -> str:
        """Stable hash of the full configuration (provenance headers)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# YAML schema: top-level scalars plus these nested sections.
_GEOMETRY_KEYS = {"bs", "irs", "ues", "ue_circle"}
_SOLVER_KEYS = {
    "de_tol", "de_max_iter", "power_tol", "power_max_iter",
    "pga_mu0", "pga_shrink", "pga_armijo_c", "pga_mu_min", "pga_tol",
    "pga_max_steps", "outer_tol", "outer_max_iter", "grad_ue_rule",
    "polish", "polish_max_iter", "polish_power_tol", "polish_gtol",
}
_TOP_KEYS = {
    "M", "N", "K", "p_max_db", "noise_dbm", "kappa_bs", "kappa_ue",
    "phase_noise", "kappa_theta", "alpha", "eta", "beta_w",
    "carrier_hz", "d_bs", "d_irs", "irs_element_dim", "bs_corr_rho",
    "irs_correlated", "pathloss_c1_db", "pathloss_c2_db", "pathloss_nu1",
    "pathloss_nu2", "penetration_loss_db", "seed", "geometry", "solver",
}


def _parse_float(value, key):
    if isinstance(value, str):
        if value.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return float(value)      # YAML 1.1 reads "2.5e9" as a string
        except ValueError:
            raise ConfigurationError(f"{key}: expected a number, got {value!r}") from None
    return float(value)


def config_from_dict(doc: dict) -> SystemConfig:
    """Build a SystemConfig from a parsed YAML document (strict keys)."""
    if not isinstance(doc, dict):
        raise ConfigurationError("config document must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")

    kw = {}
    for key in ("M", "N", "K", "seed"):
        if key in doc:
            kw[key] = int(doc[key])
    if "p_max_db" in doc:
        kw["p_max"] = db_to_linear(_parse_float(doc["p_max_db"], "p_max_db"))
    if "noise_dbm" in doc:
        kw["sigma2"] = db_to_linear(_parse_float(doc["noise_dbm"], "noise_dbm"))
    if "carrier_hz" in doc:
        kw["wavelength"] = SPEED_OF_LIGHT / _parse_float(doc["carrier_hz"], "carrier_hz")
    for key in ("kappa_bs", "kappa_ue", "kappa_theta", "alpha", "d_bs", "d_irs",
                "irs_element_dim", "bs_corr_rho", "pathloss_c1_db", "pathloss_c2_db",
                "pathloss_nu1", "pathloss_nu2", "penetration_loss_db"):
        if key in doc:
            kw[key] = _parse_float(doc[key], key)
    if "phase_noise" in doc:
        kw["phase_noise"] = str(doc["phase_noise"])
    if "irs_correlated" in doc:
        kw["irs_correlated"] = bool(doc["irs_correlated"])
    for key in ("eta", "beta_w"):
        if key in doc:
            kw[key] = np.asarray(doc[key], dtype=float)

    geom = doc.get("geometry", {})
    if geom:
        unknown = set(geom) - _GEOMETRY_KEYS
        if unknown:
            raise ConfigurationError(f"unknown geometry keys: {sorted(unknown)}")
        if "bs" in geom:
            kw["bs_position"] = np.asarray(geom["bs"], dtype=float)
        if "irs" in geom:
            kw["irs_position"] = np.asarray(geom["irs"], dtype=float)
        if "ues" in geom and "ue_circle" in geom:
            raise ConfigurationError("give either geometry.ues or geometry.ue_circle")
        if "ues" in geom:
            kw["ue_positions"] = np.asarray(geom["ues"], dtype=float)
        if "ue_circle" in geom:
            circle = geom["ue_circle"]
            unknown = set(circle) - {"center", "radius"}
            if unknown:
                raise ConfigurationError(f"unknown ue_circle keys: {sorted(unknown)}")
            kw["ue_center"] = np.asarray(circle["center"], dtype=float)
            kw["ue_radius"] = float(circle["radius"])

    solver = doc.get("solver", {})
    if solver:
        unknown = set(solver) - _SOLVER_KEYS
        if unknown:
            raise ConfigurationError(f"unknown solver keys: {sorted(unknown)}")
        for key, value in solver.items():
            if key in ("de_max_iter", "power_max_iter", "pga_max_steps",
                       "outer_max_iter", "polish_max_iter"):
                kw[key] = int(value)
            elif key == "grad_ue_rule":
                kw[key] = str(value)
            elif key == "polish":
                kw[key] = bool(value)
            else:
                kw[key] = _parse_float(value, key)

    return SystemConfig(**kw)


def load_config(path) -> SystemConfig:
    """Parse a YAML config file into a validated SystemConfig."""
    with open(path, "r") as fh:
        doc = yaml.safe_load(fh)
    if doc is None:
        doc = {}
    return config_from_dict(doc)
