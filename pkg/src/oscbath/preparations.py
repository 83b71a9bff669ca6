"""Gaussian bath preparations: per-mode covariances, means, and energies.

A preparation assigns to every bath frequency omega the first and (centered)
second moments of that mode, in units with unit mass:

    covariance(omega) -> (sigma_qq, sigma_pp, sigma_qp)
    mean(omega)       -> (qbar, pbar)

The mode energy used by the stationary formulas is the covariance energy
E(omega) = (sigma_pp + omega^2 sigma_qq) / 2; mean displacements enter the
dynamics only through the deterministic drift.  Physical states satisfy
sigma_qq > 0, sigma_pp > 0 and the uncertainty bound
sigma_qq sigma_pp - sigma_qp^2 >= 1/4.

An optional cross-frequency kernel sigma2(w1, w2) -> (..., 2, 2) describes
correlations between modes at different frequencies.  It never affects
long-time observables (its contributions dephase) and defaults to None.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreparationError

__all__ = [
    "thermal_energy",
    "Thermal",
    "SqueezedThermal",
    "DisplacedThermal",
    "Custom",
    "make_preparation",
    "energy_distribution",
    "excess_energy",
    "validate",
]


def thermal_energy(omega, temperature):
    """Mean energy (omega/2) coth(omega / 2 T) of a thermal mode.

    omega = 0 returns the classical limit T.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise DomainError("omega must be non-negative")
    if temperature <= 0.0:
        raise DomainError("temperature must be positive")
    x = omega / (2.0 * temperature)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(x > 1e-8, 0.5 * omega / np.tanh(np.maximum(x, 1e-300)), temperature)
    return e if e.ndim else float(e)


def _occupancy_excess(omega, temperature):
    """2 E_th - omega = 2 omega / (exp(omega/T) - 1), stable for omega >> T."""
    omega = np.asarray(omega, dtype=float)
    return 2.0 * omega / np.expm1(omega / temperature)


@dataclass(frozen=True)
class Thermal:
    """Every mode in equilibrium at one temperature."""

    temperature: float

    label = "thermal"
    sigma2 = None

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise DomainError("temperature must be positive")

    def covariance(self, omega):
        omega = np.asarray(omega, dtype=float)
        e = thermal_energy(omega, self.temperature)
        return e / omega**2, e * np.ones_like(omega), np.zeros_like(omega)

    def mean(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.zeros_like(omega), np.zeros_like(omega)

    def energy(self, omega):
        return thermal_energy(omega, self.temperature)

    def excess_energy(self, omega):
        return _occupancy_excess(omega, self.temperature)

    def inverse_temperature(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.full_like(omega, 1.0 / self.temperature)


@dataclass(frozen=True)
class SqueezedThermal:
    """Thermal state squeezed along the position quadrature by e^{r}.

    sigma_qq = e^{2r} E_th / omega^2, sigma_pp = e^{-2r} E_th, so the mode
    energy is cosh(2r) E_th >= E_th with equality only at r = 0.  squeeze
    may be a number or a callable r(omega) for frequency-dependent squeezing.
    """

    temperature: float
    squeeze: object

    label = "squeezed"
    sigma2 = None

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise DomainError("temperature must be positive")

    def _r(self, omega):
        if callable(self.squeeze):
            return np.broadcast_to(np.asarray(self.squeeze(omega), float), np.shape(omega))
        return np.broadcast_to(float(self.squeeze), np.shape(omega))

    def covariance(self, omega):
        omega = np.asarray(omega, dtype=float)
        e = thermal_energy(omega, self.temperature)
        r = self._r(omega)
        return (
            np.exp(2.0 * r) * e / omega**2,
            np.exp(-2.0 * r) * e * np.ones_like(omega),
            np.zeros_like(omega),
        )

    def mean(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.zeros_like(omega), np.zeros_like(omega)

    def energy(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.cosh(2.0 * self._r(omega)) * thermal_energy(omega, self.temperature)

    def excess_energy(self, omega):
        # 2 cosh(2r) E_th - omega without cancellation at omega >> T
        omega = np.asarray(omega, dtype=float)
        c = np.cosh(2.0 * self._r(omega))
        return omega * (c - 1.0) + c * _occupancy_excess(omega, self.temperature)

    def inverse_temperature(self, omega):
        """Frequency-resolved effective inverse temperature of the mode."""
        omega = np.asarray(omega, dtype=float)
        ex = self.excess_energy(omega)
        with np.errstate(divide="ignore"):
            return np.where(
                ex > 0.0, np.log1p(2.0 * omega / np.maximum(ex, 1e-300)) / omega, np.inf
            )


@dataclass(frozen=True)
class DisplacedThermal:
    """Thermal covariances with a coherent displacement profile.

    displacement_q / displacement_p are callables omega -> mean quadrature;
    they shift first moments only and leave the covariance thermal.
    """

    temperature: float
    displacement_q: object = None
    displacement_p: object = None

    label = "displaced"
    sigma2 = None

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise DomainError("temperature must be positive")

    def covariance(self, omega):
        return Thermal(self.temperature).covariance(omega)

    def mean(self, omega):
        omega = np.asarray(omega, dtype=float)
        q = self.displacement_q(omega) if self.displacement_q else np.zeros_like(omega)
        p = self.displacement_p(omega) if self.displacement_p else np.zeros_like(omega)
        return np.broadcast_to(np.asarray(q, float), omega.shape).copy(), np.broadcast_to(
            np.asarray(p, float), omega.shape
        ).copy()

    def energy(self, omega):
        return thermal_energy(omega, self.temperature)

    def excess_energy(self, omega):
        return _occupancy_excess(omega, self.temperature)

    def inverse_temperature(self, omega):
        return Thermal(self.temperature).inverse_temperature(omega)


class Custom:
    """Arbitrary Gaussian preparation from covariance / mean profiles.

    Parameters are callables of omega (vectorized).  Missing sigma_qp and
    means default to zero.  sigma2, when given, is a callable
    (w1, w2) -> (..., 2, 2) cross-frequency covariance kernel;
    sigma2_support = (lo, hi) restricts its tensor quadrature to that
    frequency box (the kernel is treated as zero outside).
    """

    label = "custom"

    def __init__(
        self,
        sigma_qq,
        sigma_pp,
        sigma_qp=None,
        mean_q=None,
        mean_p=None,
        sigma2=None,
        sigma2_support=None,
    ):
        self._sqq = sigma_qq
        self._spp = sigma_pp
        self._sqp = sigma_qp
        self._mq = mean_q
        self._mp = mean_p
        self.sigma2 = sigma2
        self.sigma2_support = None if sigma2_support is None else (
            float(sigma2_support[0]),
            float(sigma2_support[1]),
        )

    def covariance(self, omega):
        omega = np.asarray(omega, dtype=float)
        sqq = np.broadcast_to(np.asarray(self._sqq(omega), float), omega.shape).copy()
        spp = np.broadcast_to(np.asarray(self._spp(omega), float), omega.shape).copy()
        if self._sqp is None:
            sqp = np.zeros_like(omega)
        else:
            sqp = np.broadcast_to(np.asarray(self._sqp(omega), float), omega.shape).copy()
        return sqq, spp, sqp

    def mean(self, omega):
        omega = np.asarray(omega, dtype=float)
        q = self._mq(omega) if self._mq else np.zeros_like(omega)
        p = self._mp(omega) if self._mp else np.zeros_like(omega)
        return np.broadcast_to(np.asarray(q, float), omega.shape).copy(), np.broadcast_to(
            np.asarray(p, float), omega.shape
        ).copy()

    def energy(self, omega):
        sqq, spp, _ = self.covariance(omega)
        omega = np.asarray(omega, dtype=float)
        return 0.5 * (spp + omega**2 * sqq)

    def excess_energy(self, omega):
        omega = np.asarray(omega, dtype=float)
        return 2.0 * self.energy(omega) - omega

    def inverse_temperature(self, omega):
        omega = np.asarray(omega, dtype=float)
        ex = self.excess_energy(omega)
        with np.errstate(divide="ignore"):
            return np.where(
                ex > 0.0, np.log1p(2.0 * omega / np.maximum(ex, 1e-300)) / omega, np.inf
            )


def _table_callable(table):
    """(grid, values) table -> linear interpolant, zero outside the grid."""
    grid = np.asarray(table[0], dtype=float)
    vals = np.asarray(table[1], dtype=float)
    if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 2:
        raise PreparationError("kernel table needs matching 1-d grid and values")
    if np.any(np.diff(grid) <= 0.0):
        raise PreparationError("kernel table grid must be strictly increasing")

    def f(omega):
        return np.interp(np.asarray(omega, dtype=float), grid, vals, left=0.0, right=0.0)

    return f, grid


def make_preparation(kind, params):
    """Build a preparation by name and validate it.

    kind: 'thermal' | 'squeezed' | 'displaced' | 'custom'.  params is a dict;
    custom kernels may be callables or (grid, values) tables (linearly
    interpolated, zero outside).
    """
    kind = str(kind).lower()
    params = dict(params)
    check_grid = None
    if kind == "thermal":
        prep = Thermal(float(params.pop("temperature")))
    elif kind == "squeezed":
        prep = SqueezedThermal(float(params.pop("temperature")), params.pop("squeeze"))
    elif kind == "displaced":
        shifts = {}
        for key in ("displacement_q", "displacement_p"):
            val = params.pop(key, None)
            if val is None or callable(val):
                shifts[key] = val
            else:
                shifts[key], grid = _table_callable(val)
                check_grid = grid if check_grid is None else check_grid
        prep = DisplacedThermal(float(params.pop("temperature")), **shifts)
    elif kind == "custom":
        kernels = {}
        for key in ("sigma_qq", "sigma_pp", "sigma_qp", "mean_q", "mean_p"):
            val = params.pop(key, None)
            if val is None or callable(val):
                kernels[key] = val
            else:
                kernels[key], grid = _table_callable(val)
                check_grid = grid if check_grid is None else check_grid
        if kernels["sigma_qq"] is None or kernels["sigma_pp"] is None:
            raise PreparationError("custom preparation needs sigma_qq and sigma_pp")
        prep = Custom(
            **kernels,
            sigma2=params.pop("sigma2", None),
            sigma2_support=params.pop("sigma2_support", None),
        )
    else:
        raise PreparationError(f"unknown preparation kind '{kind}'")
    if params:
        raise PreparationError(f"unused preparation parameters: {sorted(params)}")
    if check_grid is None:
        check_grid = np.geomspace(1e-3, 1e3, 241)
    else:
        check_grid = check_grid[check_grid > 0.0]
    validate(prep, check_grid)
    return prep


def energy_distribution(preparation, omega):
    """Covariance energy E(omega) = (sigma_pp + omega^2 sigma_qq) / 2.

    Raises PreparationError when the second moments at omega violate
    positivity or the uncertainty bound.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise DomainError("omega must be non-negative")
    pos = omega[omega > 0.0]
    if pos.size:
        validate(preparation, pos)
    e = preparation.energy(omega)
    return e if np.ndim(e) else float(e)


def excess_energy(preparation, omega):
    """2 E(omega) - omega, evaluated without subtractive cancellation."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("omega must be positive")
    return preparation.excess_energy(omega)


def validate(preparation, omega_grid):
    """Check positivity and the uncertainty bound on a frequency sample.

    Raises PreparationError at the first violating frequency.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("omega_grid must be positive")
    sqq, spp, sqp = preparation.covariance(omega)
    bad = (sqq <= 0.0) | (spp <= 0.0)
    if np.any(bad):
        raise PreparationError(
            f"non-positive quadrature variance at omega = {omega[bad][0]:.6g}"
        )
    det = sqq * spp - sqp**2
    bad = det < 0.25 * (1.0 - 1e-12)
    if np.any(bad):
        raise PreparationError(
            f"uncertainty bound violated at omega = {omega[bad][0]:.6g} "
            f"(det = {det[bad][0]:.6g} < 1/4)"
        )
    return True
