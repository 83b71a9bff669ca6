"""Two-time position correlations, their spectra, and fluctuation-dissipation.

The symmetric and antisymmetric correlation functions of the oscillator are

    psi(t, t') = <{Q(t), Q(t')}> / 2        (includes the mean product)
    phi(t, t') = (1/i) [Q(t), Q(t')]        (c-number, state independent)

After the initial state has decayed both depend on s = t' - t only, with
spectra (gamma_S = sum_a gamma_a, E_a the preparation energy density)

    psi_hat(omega) = pi sum_a gamma_a(omega) E_a(omega) |u(omega)|^2 / omega
    phi_hat(omega) = i pi gamma_S(omega) |u(omega)|^2

and the generalized fluctuation-dissipation relation

    psi_hat(omega) = [E_eff(omega) / omega] * [phi_hat(omega) / i],
    E_eff = sum_a gamma_a E_a / gamma_S,

which reduces to the coth(omega / 2T) form exactly when every bath is
thermal at the same temperature.  phi_hat is purely imaginary and is stored
throughout as the real coefficient of i (pi gamma_S |u|^2 >= 0); the i is
re-inserted only at reporting boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import genfunc
from .errors import DomainError
from .genfunc import integration_grid, mode_rows
from .scenario import Scenario

__all__ = [
    "CorrelationResult",
    "psi_spectrum",
    "phi_spectrum",
    "effective_energy",
    "effective_temperature",
    "thermalization_check",
    "fdt_check",
    "equilibrium_fdt_residual",
    "coth_family_deviation",
    "stationary_correlations",
    "stationary_covariance",
    "finite_time_correlations",
]


@dataclass(frozen=True)
class CorrelationResult:
    """Stationary correlations on a lag grid together with their spectra.

    psi_lag / phi_lag are even / odd in the lag by construction; phi_freq
    holds the real coefficient of i.  The *_baths arrays carry one row per
    bath (scenario order, see labels) for reporting; phi_lag_baths sums to
    phi_lag the same way the damping kernels sum to gamma_S.
    """

    lags: np.ndarray
    psi_lag: np.ndarray
    phi_lag: np.ndarray
    omega: np.ndarray
    psi_freq: np.ndarray
    phi_freq: np.ndarray
    psi_lag_baths: np.ndarray
    phi_lag_baths: np.ndarray
    psi_freq_baths: np.ndarray
    phi_freq_baths: np.ndarray
    labels: tuple


def _abs_u_sq(scenario: Scenario, omega):
    f = scenario.susceptibility.eval(omega)
    return np.abs(f) ** 2


def psi_spectrum(scenario: Scenario, omega):
    """Symmetric correlation spectrum psi_hat(omega) >= 0, omega >= 0.

    Assembled through gamma(omega)/omega so the omega = 0 endpoint is the
    finite Ohmic limit.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise DomainError("omega must be non-negative")
    acc = np.zeros_like(omega)
    for b in scenario.baths:
        acc = acc + b.density.gamma_over_omega(omega) * b.preparation.energy(omega)
    out = np.pi * acc * _abs_u_sq(scenario, omega)
    return out if out.ndim else float(out)


def phi_spectrum(scenario: Scenario, omega):
    """Commutator spectrum coefficient: phi_hat(omega) / i = pi gamma_S |u|^2."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise DomainError("omega must be non-negative")
    out = np.pi * scenario.susceptibility.gamma_total(omega) * _abs_u_sq(scenario, omega)
    return out if out.ndim else float(out)


def effective_energy(scenario: Scenario, omega):
    """Damping-weighted mean mode energy E_eff = sum gamma_a E_a / gamma_S."""
    omega = np.asarray(omega, dtype=float)
    return scenario.gamma_weighted_energy(omega) / scenario.susceptibility.gamma_total(omega)


def _effective_excess(scenario: Scenario, omega):
    """2 E_eff - omega assembled from per-bath excesses (no cancellation)."""
    omega = np.asarray(omega, dtype=float)
    num = np.zeros_like(omega)
    for b in scenario.baths:
        num = num + b.density.gamma(omega) * b.preparation.excess_energy(omega)
    return num / scenario.susceptibility.gamma_total(omega)


def effective_temperature(scenario: Scenario, omega):
    """T_eff(omega) solving 2 E_eff = omega coth(omega / 2 T_eff).

    Returns NaN where the excess energy is non-positive (zero-point
    dominated modes admit no temperature assignment).
    """
    omega = np.asarray(omega, dtype=float)
    ex = _effective_excess(scenario, omega)
    with np.errstate(divide="ignore"):
        t = omega / np.log1p(2.0 * omega / np.where(ex > 0.0, ex, np.inf))
    return np.where(ex > 0.0, t, np.nan)


def thermalization_check(scenario: Scenario, omega_grid, tol: float = 1e-8) -> dict:
    """Does the scenario thermalize the oscillator?  T_eff constancy test.

    passed iff max - min of T_eff over the grid is below tol; NaN entries
    (zero-point dominated) are counted in 'flagged' and fail the check.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("omega grid must be positive")
    t_eff = effective_temperature(scenario, omega)
    spread = float(np.max(t_eff) - np.min(t_eff))
    return {
        "temperature": t_eff,
        "spread": spread,
        "tolerance": float(tol),
        "flagged": int(np.isnan(t_eff).sum()),
        "passed": bool(spread < tol),
    }


def fdt_check(scenario: Scenario, omega_grid) -> dict:
    """Generalized fluctuation-dissipation report on a frequency grid.

    lhs is psi_spectrum, rhs is (E_eff/omega) [phi_hat/i]; both sides are
    assembled independently (per-bath energy route vs total damping route)
    and the residual max |lhs - rhs| / |lhs| should sit at rounding level
    for any preparation.
    """
    omega = np.asarray(omega_grid, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("fdt grid must be positive")
    lhs = psi_spectrum(scenario, omega)
    rhs = (effective_energy(scenario, omega) / omega) * phi_spectrum(scenario, omega)
    residual = float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))
    return {"omega": omega, "lhs": lhs, "rhs": rhs, "residual": residual}


def equilibrium_fdt_residual(scenario: Scenario, omega, temperature: float):
    """Relative residual of psi_hat = (1/2) coth(omega/2T) [phi_hat/i] at fixed T."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0):
        raise DomainError("omega must be positive")
    if temperature <= 0.0:
        raise DomainError("temperature must be positive")
    lhs = psi_spectrum(scenario, omega)
    rhs = 0.5 / np.tanh(omega / (2.0 * temperature)) * phi_spectrum(scenario, omega)
    return np.abs(lhs - rhs) / np.abs(lhs)


def coth_family_deviation(scenario: Scenario, omega_grid):
    """min over T of max_omega |2 E_eff tanh(omega/2T) / omega - 1|.

    Zero (to rounding) iff the effective energy density is thermal; squeezed
    or mixed-temperature preparations give an irreducible deviation.
    """
    omega = np.asarray(omega_grid, dtype=float)
    ratio = 2.0 * effective_energy(scenario, omega) / omega

    def dev(log_t):
        t = np.exp(log_t)
        return float(np.max(np.abs(ratio * np.tanh(omega / (2.0 * t)) - 1.0)))

    t_grid = np.log(np.geomspace(1e-3, 1e3, 121))
    coarse = min(t_grid, key=dev)
    from scipy.optimize import minimize_scalar

    r = minimize_scalar(dev, bounds=(coarse - 0.12, coarse + 0.12), method="bounded")
    return float(r.fun)


def _stationary_cut(scenario: Scenario) -> float:
    susc = scenario.susceptibility
    scale = max([scenario.omega0] + [d.frequency_scale for d in scenario.densities()])
    return min(60.0 * scale, scenario.support_max(), susc.omega_max)


def _default_omega_grid(scenario: Scenario) -> np.ndarray:
    scale = max([scenario.omega0] + [d.frequency_scale for d in scenario.densities()])
    hi = min(6.0 * scale, _stationary_cut(scenario))
    w_hat, hw = scenario.susceptibility.resonance()
    base = np.linspace(0.0, hi, 481)
    lo_w, hi_w = max(w_hat - 8.0 * hw, 0.0), min(w_hat + 8.0 * hw, hi)
    window = np.linspace(lo_w, hi_w, 97)
    return np.unique(np.concatenate([base, window]))


def stationary_correlations(scenario: Scenario, lags, omega_grid=None) -> CorrelationResult:
    """Late-time correlations psi(s), phi(s) and their spectra.

    psi(s) = sum_a int gamma_a (E_a/omega) |u|^2 cos(omega s) domega,
    phi(s) = sum_a int gamma_a |u|^2 sin(omega s) domega,

    evaluated per bath and per lag with oscillatory-weight adaptive
    quadrature; the spectra are sampled on omega_grid (default: a grid over
    [0, 6 scale] refined across the resonance peak).
    """
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    omega = (
        _default_omega_grid(scenario)
        if omega_grid is None
        else np.asarray(omega_grid, dtype=float)
    )
    if np.any(omega < 0.0):
        raise DomainError("omega grid must be non-negative")
    cut = _stationary_cut(scenario)
    nb = len(scenario.baths)
    psi_s = np.zeros((nb, lags.size))
    phi_s = np.zeros((nb, lags.size))
    for a, b in enumerate(scenario.baths):

        def psi_f(w, bath=b):
            return float(
                bath.density.gamma_over_omega(w) * bath.preparation.energy(w)
            ) * float(_abs_u_sq(scenario, w))

        def phi_f(w, bath=b):
            return float(bath.density.gamma(w)) * float(_abs_u_sq(scenario, w))

        for i, s in enumerate(lags):
            psi_s[a, i] = quad(psi_f, 0.0, cut, weight="cos", wvar=float(s), limit=400)[0]
            phi_s[a, i] = quad(phi_f, 0.0, cut, weight="sin", wvar=float(s), limit=400)[0]

    u_sq = _abs_u_sq(scenario, omega)
    psi_w = np.zeros((nb, omega.size))
    phi_w = np.zeros((nb, omega.size))
    for a, b in enumerate(scenario.baths):
        psi_w[a] = np.pi * b.density.gamma_over_omega(omega) * b.preparation.energy(omega) * u_sq
        phi_w[a] = np.pi * b.density.gamma(omega) * u_sq
    return CorrelationResult(
        lags=lags,
        psi_lag=psi_s.sum(axis=0),
        phi_lag=phi_s.sum(axis=0),
        omega=omega,
        psi_freq=psi_w.sum(axis=0),
        phi_freq=phi_w.sum(axis=0),
        psi_lag_baths=psi_s,
        phi_lag_baths=phi_s,
        psi_freq_baths=psi_w,
        phi_freq_baths=phi_w,
        labels=tuple(b.label for b in scenario.baths),
    )


def stationary_covariance(scenario: Scenario) -> np.ndarray:
    """Late-time covariance [[psi(0), 0], [0, sum int gamma E omega |u|^2]].

    Direct frequency-domain route, independent of the time-domain moment
    propagation (which must agree with it after the transient decays).
    """
    cut = _stationary_cut(scenario)
    w_hat, _ = scenario.susceptibility.resonance()

    def qq(w):
        acc = 0.0
        for b in scenario.baths:
            acc += float(b.density.gamma_over_omega(w)) * float(b.preparation.energy(w))
        return acc * _abs_u_sq(scenario, w)

    def pp(w):
        return float(scenario.gamma_weighted_energy(w) * w * _abs_u_sq(scenario, w))

    pts = [w_hat] if w_hat < cut else None
    sqq = quad(qq, 0.0, cut, points=pts, limit=400)[0]
    spp = quad(pp, 0.0, cut, points=pts, limit=400)[0]
    # zero-point tails beyond the cut: gamma -> c/omega, E -> omega/2,
    # |u|^2 -> 1/omega^4 give c/(8 cut^4) and c/(4 cut^2)
    c_tail = float(sum(d.tail_coefficient for d in scenario.densities()))
    if c_tail > 0.0:
        sqq += c_tail / (8.0 * cut**4)
        spp += c_tail / (4.0 * cut**2)
    return np.array([[sqq, 0.0], [0.0, spp]])


def finite_time_correlations(scenario: Scenario, initial, t: float, s):
    """(psi(t, t+s), phi(t, t+s)) at finite t, including the mean product.

    initial may be a MomentState, a CentralState, or None for the
    scenario's own central state.  The transient carries the initial
    central covariance through u(t), the bath preparation covariances
    through the partial transforms u(t, omega) (plus the cross-frequency
    sigma2 double integral when a preparation declares one, under the
    genfunc.SIGMA2_BUDGET guard), and the mean product <Q(t)><Q(t+s)>.
    phi is preparation and state independent.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    t = float(t)
    if t < 0.0 or np.any(t + s_arr < 0.0):
        raise DomainError("need t >= 0 and t + s >= 0")
    m0, s0 = genfunc._initial_moments(scenario, initial)
    t_all = np.concatenate([[t], t + s_arr])
    order = np.argsort(t_all, kind="stable")
    inv = np.argsort(order)
    nodes, wts = integration_grid(scenario, max(float(t_all.max()), 1.0))
    uR_s, uIw_s, _ = mode_rows(scenario, t_all[order], nodes)
    uR, uIw = uR_s[inv], uIw_s[inv]
    resp = scenario.response
    u_t = resp.u(t_all)
    du_t = resp.udot(t_all)
    mean_q = du_t * m0[0] + u_t * m0[1] + genfunc.injected_mean(scenario, t_all[order])[inv, 0]

    row = np.stack([du_t, u_t])
    psi = row[:, 0] @ s0 @ row + mean_q[0] * mean_q
    phi = du_t[0] * u_t - u_t[0] * du_t
    gam_tot = scenario.susceptibility.gamma_total(nodes)
    phi = phi + ((uR[0] * uIw - uIw[0] * uR) * nodes[None, :] * gam_tot) @ wts
    for b in scenario.baths:
        g = b.density.gamma(nodes)
        sqq, spp, sqp = b.preparation.covariance(nodes)
        wg = wts * g * nodes
        psi = psi + (uR[0] * uR) @ (wg * sqq)
        psi = psi + (uIw[0] * uIw) @ (wg * spp)
        psi = psi + (uR[0] * uIw + uIw[0] * uR) @ (wg * sqp)
        kernel = getattr(b.preparation, "sigma2", None)
        if kernel is not None:
            k = genfunc._sigma2_window(b.preparation, nodes)
            srow = wts[k] * np.sqrt(nodes[k] * g[k])
            psi = psi + genfunc._sigma2_cross_qq(
                kernel, nodes[k], srow, uR[:1, k], uIw[:1, k], uR[:, k], uIw[:, k]
            )[0]
    if np.ndim(s) == 0:
        return float(psi[1]), float(phi[1])
    return psi[1:], phi[1:]
