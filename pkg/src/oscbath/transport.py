"""Steady-state energy transport between two baths through the oscillator.

All quantities refer to the long-time state of a two-bath scenario (baths[0]
= left/source, baths[1] = right/drain).  With E_a(omega) the preparation
energy densities and u(omega) the transmission response,

    current  I = (pi/2) int gamma_l gamma_r |u|^2 (E_l - E_r) domega
    c2 rate    = (pi^3/2) int gamma_l^2 gamma_r^2 |u|^4 (E_l - E_r)^2 domega
               + (pi/2)  int gamma_l gamma_r |u|^2 (2 E_l E_r - omega^2/2) domega

and the scaled cumulant generating function of the transferred energy is

    G(xi) = -(1/2 pi) int_0^inf ln(1 + c(omega) B(omega, xi)) domega,
    c = pi^2 gamma_l gamma_r |u|^2 / omega^2.

B is assembled from the cancellation-free combinations P, P -/+ D built out
of the excess energies 2 E_a - omega, so that the integrand vanishes
identically at xi = 0 and the detailed-balance reflection
G(xi) = G(-xi + i A) with A = beta_r - beta_l is exact for thermal baths.
For real xi the bracket satisfies |1 + cB| >= 1 pointwise (c >= 0 and
Re B = P(1 - cos xi omega) >= 0), hence Re G <= 0.
"""
from __future__ import annotations

from math import factorial

import numpy as np
from scipy.integrate import quad

from ._panels import oscillatory_grid
from .errors import BranchTrackingError, DomainError, ToleranceError
from .preparations import Thermal
from .scenario import Scenario

__all__ = [
    "TransportModel",
    "steady_current",
    "first_cumulant_rate",
    "linear_response_coefficient",
    "linear_response_current",
    "second_cumulant_rate",
    "affinity",
    "cgf",
    "gc_residual",
    "cgf_cumulants",
]


def _two_baths(scenario: Scenario):
    if len(scenario.baths) != 2:
        raise DomainError("transport quantities need exactly two baths")
    return scenario.baths


def _abs_u_sq(scenario, w):
    return float(np.abs(scenario.susceptibility.eval(w)) ** 2)


def _quad_points(scenario):
    w_hat, _ = scenario.susceptibility.resonance()
    return [w_hat]


def _cut(scenario) -> float:
    scale = max([scenario.omega0] + [d.frequency_scale for d in scenario.densities()])
    return min(60.0 * scale, scenario.support_max(), scenario.susceptibility.omega_max)


def _cgf_grid(scenario: Scenario, xi_scale: float):
    w_hat, hw = scenario.susceptibility.resonance()
    return oscillatory_grid(
        _cut(scenario),
        max(xi_scale, 1.0),
        refine_center=w_hat,
        refine_halfwidth=8.0 * hw,
        refine_cell=0.4 * hw,
    )


class TransportModel:
    """Two-bath transport scenario with cached spectral rows.

    baths[0] is the left/source bath, baths[1] the right/drain.  The
    constructor validates the bath count, touches the susceptibility (so a
    failed pole scan surfaces here), and caches gamma_l, gamma_r, |u|^2 and
    the preparation energies on the transport frequency grid.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.left, self.right = _two_baths(scenario)
        scenario.susceptibility  # pole scan runs on first access
        self.w, self.wts = _cgf_grid(scenario, 1.0)
        self.gamma_l = self.left.density.gamma(self.w)
        self.gamma_r = self.right.density.gamma(self.w)
        self.u_sq = np.abs(scenario.susceptibility.eval(self.w)) ** 2
        self.e_l = self.left.preparation.energy(self.w)
        self.e_r = self.right.preparation.energy(self.w)
        self._rows = _bracket_rows(self, self.w)


def _model(m) -> TransportModel:
    return m if isinstance(m, TransportModel) else TransportModel(m)


def steady_current(m) -> float:
    """Long-time energy current from baths[0] into baths[1]; zero at equal
    preparation energies or when either coupling vanishes."""
    m = _model(m)
    scenario = m.scenario

    def f(w):
        g = float(m.left.density.gamma(w)) * float(m.right.density.gamma(w))
        if g == 0.0:
            return 0.0
        de = float(m.left.preparation.energy(w)) - float(m.right.preparation.energy(w))
        return 0.5 * np.pi * g * _abs_u_sq(scenario, w) * de

    return quad(f, 0.0, _cut(scenario), points=_quad_points(scenario), limit=400)[0]


def first_cumulant_rate(m) -> float:
    """lim <W>/t from the counting statistics route, on the cached grid.

    Same integrand as steady_current but assembled from the excess energies
    and summed over the graded panel grid rather than adaptive quadrature —
    an independent numerical path that must agree to ~1e-10.
    """
    m = _model(m)
    xl = m.left.preparation.excess_energy(m.w)
    xr = m.right.preparation.excess_energy(m.w)
    vals = 0.5 * np.pi * m.gamma_l * m.gamma_r * m.u_sq * 0.5 * (xl - xr)
    return float(np.sum(m.wts * vals))


def _csch_sq(x):
    """csch^2(x) for x > 0 without overflow."""
    x = np.asarray(x, dtype=float)
    small = x < 20.0
    out = np.empty_like(x)
    out[small] = 1.0 / np.sinh(x[small]) ** 2
    e = np.exp(-2.0 * x[~small])
    out[~small] = 4.0 * e / (1.0 - e) ** 2
    return out


def linear_response_coefficient(m, temperature: float) -> float:
    """Thermal conductance dI/dT at common temperature T:

    L(T) = (pi/2) int gamma_l gamma_r |u|^2 (omega^2 / 4 T^2) csch^2(omega/2T).
    """
    m = _model(m)
    if temperature <= 0.0:
        raise DomainError("temperature must be positive")
    scenario = m.scenario

    def f(w):
        g = float(m.left.density.gamma(w)) * float(m.right.density.gamma(w))
        if g == 0.0 or w == 0.0:
            return 0.0
        kern = (w**2 / (4.0 * temperature**2)) * float(_csch_sq(w / (2.0 * temperature)))
        return 0.5 * np.pi * g * _abs_u_sq(scenario, w) * kern

    return quad(f, 0.0, _cut(scenario), points=_quad_points(scenario), limit=400)[0]


def linear_response_current(m, t_right: float, delta_t: float) -> float:
    """Small-bias current delta_t * L(t_right) for thermal baths.

    Valid to first order around the common temperature t_right; nonthermal
    preparations have no single-temperature expansion point and are
    rejected.
    """
    m = _model(m)
    for bath in (m.left, m.right):
        if not isinstance(bath.preparation, Thermal):
            raise DomainError("linear response needs thermal baths on both sides")
    if delta_t == 0.0:
        return 0.0
    return float(delta_t) * linear_response_coefficient(m, t_right)


def second_cumulant_rate(m) -> float:
    """Long-time growth rate of the transferred-energy variance.

    The thermal-symmetric part uses 2 E_l E_r - omega^2/2 =
    (x_l x_r + omega (x_l + x_r)) / 2 with x_a = 2 E_a - omega, which is
    exact and free of large-omega cancellation.  The result is a variance
    rate and must come out non-negative.
    """
    m = _model(m)
    scenario = m.scenario

    def shot(w):
        g = float(m.left.density.gamma(w)) * float(m.right.density.gamma(w))
        if g == 0.0:
            return 0.0
        de = float(m.left.preparation.energy(w)) - float(m.right.preparation.energy(w))
        return 0.5 * np.pi**3 * g**2 * _abs_u_sq(scenario, w) ** 2 * de**2

    def sym(w):
        g = float(m.left.density.gamma(w)) * float(m.right.density.gamma(w))
        if g == 0.0:
            return 0.0
        xl = float(m.left.preparation.excess_energy(w))
        xr = float(m.right.preparation.excess_energy(w))
        return 0.5 * np.pi * g * _abs_u_sq(scenario, w) * 0.5 * (xl * xr + w * (xl + xr))

    pts = _quad_points(scenario)
    cut = _cut(scenario)
    tot = (
        quad(shot, 0.0, cut, points=pts, limit=400)[0]
        + quad(sym, 0.0, cut, points=pts, limit=400)[0]
    )
    if tot < -1e-12:
        raise ToleranceError(f"negative variance rate {tot:.3e}")
    return tot


def affinity(m, tol: float = 1e-10):
    """Constant affinity A = beta_r - beta_l, or a frequency-dependence report.

    beta_a(omega) = (2/omega) arccoth(2 E_a(omega)/omega).  When both
    profiles are constant over the grid within tol (thermal baths are,
    exactly) the scalar A is returned; otherwise a report dict with the
    profiles, their spreads, and the count of modes where the arccoth
    argument left its domain (zero-point dominated, beta undefined).
    """
    m = _model(m)
    w = m.w
    bl = m.left.preparation.inverse_temperature(w)
    br = m.right.preparation.inverse_temperature(w)
    flagged = int(np.sum(~np.isfinite(bl)) + np.sum(~np.isfinite(br)))
    with np.errstate(invalid="ignore"):
        spread_l = float(np.max(bl) - np.min(bl))
        spread_r = float(np.max(br) - np.min(br))
    if flagged == 0 and spread_l <= tol and spread_r <= tol:
        return float(br[0] - bl[0])
    return {
        "omega": w,
        "beta_left": bl,
        "beta_right": br,
        "spread_left": spread_l,
        "spread_right": spread_r,
        "flagged": flagged,
    }


def _affinity_at(m, omega: float) -> float:
    """beta_r - beta_l at a single frequency (resonance default for reports)."""
    w = np.array([omega])
    return float(
        m.right.preparation.inverse_temperature(w)[0]
        - m.left.preparation.inverse_temperature(w)[0]
    )


def _bracket_rows(m, w):
    """xi-independent pieces of the log argument: (c, P, P-D, P+D)."""
    gl = m.left.density.gamma_over_omega(w)
    gr = m.right.density.gamma_over_omega(w)
    fsq = np.abs(m.scenario.susceptibility.eval(w)) ** 2
    c = np.pi**2 * gl * gr * fsq
    el = m.left.preparation.energy(w)
    er = m.right.preparation.energy(w)
    xl = m.left.preparation.excess_energy(w)
    xr = m.right.preparation.excess_energy(w)
    p = 0.5 * (xl * 2.0 * er + w * xr)
    p_minus = 0.5 * (2.0 * el + w) * xr
    p_plus = 0.5 * xl * (2.0 * er + w)
    return c, p, p_minus, p_plus


def _cgf_on_rows(w, wts, rows, xi: complex) -> complex:
    c, p, p_minus, p_plus = rows
    x, y = xi.real, xi.imag
    eplus = np.exp(y * w) * p_minus
    eminus = np.exp(-y * w) * p_plus
    re_b = p - 0.5 * np.cos(x * w) * (eplus + eminus)
    im_b = 0.5 * np.sin(x * w) * (eplus - eminus)
    z = 1.0 + c * (re_b + 1j * im_b)
    if y == 0.0:
        bad = np.abs(z) < 1.0 - 1e-12
        if np.any(bad):
            i = int(np.argmin(np.abs(z)))
            raise ToleranceError(
                f"|1 + cB| = {np.abs(z[i]):.6g} < 1 at omega = {w[i]:.6g} "
                f"for real xi = {x:.6g}; bracket assembly inconsistent"
            )
    phase = np.unwrap(np.angle(z))
    if np.any(np.abs(np.diff(phase)) > 0.5 * np.pi):
        j = int(np.argmax(np.abs(np.diff(phase))))
        raise BranchTrackingError(
            f"phase step > pi/2 near omega = {w[j]:.6g} for xi = {complex(x, y):.6g}; "
            f"the log branch cannot be tracked on this grid"
        )
    val = np.log(np.abs(z)) + 1j * phase
    return complex(-np.sum(wts * val) / (2.0 * np.pi))


def cgf(m, xi, grid=None):
    """Scaled cumulant generating function G(xi) of the transferred energy.

    xi may be complex; the imaginary part must stay inside the strip where
    the defining integral converges (|Im xi| below the smaller inverse
    temperature).  The complex logarithm is branch-tracked along the
    frequency grid; under-resolved phase jumps raise BranchTrackingError
    rather than silently crossing the cut.
    """
    m = _model(m)
    xi = complex(xi)
    if grid is None:
        # exp(y*w) varies on the scale 1/y, so the panel width must resolve
        # it just like the cos(x*w) oscillation; 4|y| keeps width*y < 2*pi.
        scale = max(abs(xi.real), 4.0 * abs(xi.imag))
        if scale <= 1.0:
            return _cgf_on_rows(m.w, m.wts, m._rows, xi)
        grid = _cgf_grid(m.scenario, scale)
    w, wts = grid
    return _cgf_on_rows(w, wts, _bracket_rows(m, w), xi)


def _strip_trim(w, est, w_peak: float) -> int:
    """Index cutting off the divergent tail of a shifted-bracket envelope.

    Scans beyond the resonance peak for the envelope minimum; if the tail
    afterwards grows by more than one decade the integral has left its
    convergence strip and the grid is truncated at the minimum.  Decaying
    envelopes (thermal pairs at detailed balance) keep the full grid.
    """
    start = int(np.searchsorted(w, w_peak))
    if start >= w.size - 1:
        return w.size
    tail = est[start:]
    jmin = int(np.argmin(tail))
    if np.max(tail[jmin:]) > 10.0 * tail[jmin]:
        return start + jmin + 1
    return w.size


def gc_residual(m, xi_values, shift: float | None = None) -> float:
    """max |G(xi) - G(-xi + i shift)| over a grid of real xi.

    shift defaults to the constant affinity when there is one, else to the
    frequency-resolved affinity at the resonance peak.  Both sides are
    integrated over one common frequency grid; when the shifted integrand
    leaves its convergence strip (nonthermal preparations with growing
    excess energy) the common grid is truncated at the divergence onset, so
    a finite symmetry defect is reported instead of a blow-up.
    """
    m = _model(m)
    w_hat, _ = m.scenario.susceptibility.resonance()
    if shift is None:
        a = affinity(m)
        shift = a if isinstance(a, float) else _affinity_at(m, w_hat)
    xi_arr = np.atleast_1d(np.asarray(xi_values, dtype=float))
    scale = max(float(np.max(np.abs(xi_arr))), 4.0 * abs(shift))
    w, wts = _cgf_grid(m.scenario, scale)
    rows = _bracket_rows(m, w)
    c, p, p_minus, p_plus = rows
    est = c * (p + 0.5 * (np.exp(shift * w) * p_minus + np.exp(-shift * w) * p_plus))
    n = _strip_trim(w, est, w_hat)
    w, wts = w[:n], wts[:n]
    rows = (c[:n], p[:n], p_minus[:n], p_plus[:n])
    res = 0.0
    for x in xi_arr:
        g1 = _cgf_on_rows(w, wts, rows, complex(x))
        g2 = _cgf_on_rows(w, wts, rows, complex(-x, shift))
        res = max(res, abs(g1 - g2))
    return res


def cgf_cumulants(m, order: int = 2, radius: float = 0.4, m_nodes: int = 64):
    """First `order` cumulant rates from G via a Cauchy ring at |xi| = radius.

    cum[n-1] = n! [xi^n] G / i^n; with G analytic in the strip the ring
    estimate converges spectrally in m_nodes.
    """
    m = _model(m)
    beta_min = min(
        float(np.min(m.left.preparation.inverse_temperature(np.array([m.scenario.omega0])))),
        float(np.min(m.right.preparation.inverse_temperature(np.array([m.scenario.omega0])))),
    )
    r = min(radius, 0.5 * beta_min)
    theta = 2.0 * np.pi * np.arange(m_nodes) / m_nodes
    w, wts = _cgf_grid(m.scenario, 4.0 * r)
    rows = _bracket_rows(m, w)
    vals = np.array([_cgf_on_rows(w, wts, rows, r * np.exp(1j * th)) for th in theta])
    out = []
    for n in range(1, order + 1):
        a_n = np.sum(vals * np.exp(-1j * n * theta)) / (m_nodes * r**n)
        out.append(float((factorial(n) * a_n / 1j**n).real))
    return np.array(out)
