"""Scenario container: central oscillator + baths, with a cached engine.

A Scenario owns everything the closed-form machinery needs: the bare
frequency, one (density, preparation) pair per bath, and the Gaussian state
of the central oscillator at t = 0 (the global initial state factorizes).
The susceptibility and response function are built lazily and cached, so all
higher modules share one spectral pipeline per scenario.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, PreparationError
from .spectral import ClassicalResponse, Susceptibility

__all__ = ["CentralState", "Bath", "Scenario"]


@dataclass(frozen=True)
class CentralState:
    """Gaussian state of the central oscillator: means and covariances."""

    var_q: float
    var_p: float
    cov_qp: float = 0.0
    mean_q: float = 0.0
    mean_p: float = 0.0

    def __post_init__(self):
        if self.var_q <= 0.0 or self.var_p <= 0.0:
            raise PreparationError("central variances must be positive")
        if self.var_q * self.var_p - self.cov_qp**2 < 0.25 * (1.0 - 1e-12):
            raise PreparationError("central state violates the uncertainty bound")

    @classmethod
    def ground(cls, omega0: float) -> "CentralState":
        return cls(var_q=0.5 / omega0, var_p=0.5 * omega0)

    @classmethod
    def thermal(cls, omega0: float, temperature: float) -> "CentralState":
        from .preparations import thermal_energy

        e = thermal_energy(omega0, temperature)
        return cls(var_q=e / omega0**2, var_p=e)

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.mean_q, self.mean_p])

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.var_q, self.cov_qp], [self.cov_qp, self.var_p]])


@dataclass(frozen=True)
class Bath:
    """One bath: spectral density + Gaussian preparation."""

    density: object
    preparation: object
    label: str = ""


@dataclass(frozen=True)
class Scenario:
    omega0: float
    baths: tuple
    central: CentralState = field(default=None)
    omega_max: float = None
    n_freq: int = 2**18

    def __post_init__(self):
        if self.omega0 <= 0.0:
            raise DomainError("omega0 must be positive")
        if not self.baths:
            raise DomainError("at least one bath is required")
        object.__setattr__(self, "baths", tuple(self.baths))
        if self.central is None:
            object.__setattr__(self, "central", CentralState.ground(self.omega0))

    @cached_property
    def susceptibility(self) -> Susceptibility:
        return Susceptibility(
            self.omega0,
            [b.density for b in self.baths],
            omega_max=self.omega_max,
        )

    @cached_property
    def response(self) -> ClassicalResponse:
        return ClassicalResponse(self.susceptibility, n_freq=self.n_freq)

    def densities(self):
        return [b.density for b in self.baths]

    def preparations(self):
        return [b.preparation for b in self.baths]

    def gamma_weighted_energy(self, omega):
        """sum_a gamma_a(omega) E_a(omega) over the baths."""
        omega = np.asarray(omega, dtype=float)
        tot = np.zeros_like(omega)
        for b in self.baths:
            tot = tot + b.density.gamma(omega) * b.preparation.energy(omega)
        return tot

    def support_max(self) -> float:
        return max(b.density.support_max for b in self.baths)
