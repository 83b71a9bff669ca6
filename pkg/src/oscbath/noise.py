"""Fluctuating-force statistics behind the reduced oscillator dynamics.

Each bath acts on the oscillator through a memory (friction) kernel and a
fluctuating force eta(t) whose statistics are fixed by the bath preparation.
In the thermodynamic limit

    K(t)     = int_0^inf dw (gamma(w)/w) cos(wt)
    <eta(t)> = int_0^inf dw sqrt(w gamma(w)) (X_Q(w) cos wt + X_P(w) sin(wt)/w)
    S(t, s)  = int dw (gamma/w) E(w) cos(w (t-s))
             + (1/2) int dw (gamma/w) (w^2 s_QQ(w) - s_PP(w)) cos(w (t+s))
             + int dw gamma(w) s_QP(w) sin(w (t+s))
             + two-frequency double integral over the sigma2 kernel,

where E = (w^2 s_QQ + s_PP)/2 and S is the symmetrized covariance of the
force (first moments are carried by noise_mean, not folded into S).

Thermal preparations kill every t+s term identically, so S depends on t - s
alone (time homogeneity); for any other preparation the t+s terms decay by
Riemann-Lebesgue and stationarity emerges once both times are late.

Equal-time values are cutoff-regularized: a density with a c1/omega friction
tail has a logarithmically divergent zero-point force variance, so S(t, t)
depends on the documented frequency cut while unequal-time values do not.

When the initial oscillator position is not absorbed into the bath
displacement, the force picks up the slip term -K(t) Q(0); for factorized
preparations its covariance is S(t, s) + Sigma_QQ(0) K(t) K(s)
(slip_correlation).  Cross-bath force covariances vanish identically —
the preparation factorizes over baths — and cross_bath_correlation makes
that structural zero assertable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.integrate import quad
from scipy.special import sici

from . import genfunc
from ._panels import oscillatory_grid
from .errors import DomainError
from .scenario import Scenario
from .spectral import DrudeOhmic

__all__ = [
    "NoiseKernel",
    "noise_kernels",
    "friction_kernel",
    "noise_mean",
    "noise_correlation",
    "stationary_noise_correlation",
    "cross_bath_correlation",
    "slip_correlation",
]

_QUAD_LIMIT = 400
_CUT_WAVES = 60.0  # sigma1 cut = _CUT_WAVES * frequency scale (fat-tail pieces)
_CUT_SIGMA2 = 6.0  # sigma2 cut factor (declared kernels, no zero-point tail)


@dataclass(frozen=True)
class NoiseKernel:
    """Force statistics of one bath: its density plus its preparation.

    Cross-bath correlations are identically zero (the preparation
    factorizes), so one kernel per bath is the whole story.
    """

    index: int
    density: Any
    preparation: Any

    def __post_init__(self):
        if self.index < 0:
            raise DomainError("bath index must be non-negative")


def noise_kernels(scenario: Scenario) -> list[NoiseKernel]:
    """One NoiseKernel per bath, in scenario order."""
    return [
        NoiseKernel(i, b.density, b.preparation) for i, b in enumerate(scenario.baths)
    ]


def _sigma1_cut(density) -> float:
    return float(min(_CUT_WAVES * max(1.0, density.frequency_scale), density.support_max))


def _weighted_quad(f, cut: float, kind: str, wvar: float) -> float:
    if wvar == 0.0:
        if kind == "sin":
            return 0.0
        return float(quad(f, 0.0, cut, limit=_QUAD_LIMIT)[0])
    return float(quad(f, 0.0, cut, weight=kind, wvar=wvar, limit=_QUAD_LIMIT)[0])


def _octave_edges(cut: float, scale: float) -> np.ndarray:
    """[0, scale/32, scale/16, ..., cut]: octave panels down to scale/32.

    Preparation kernels can be localized anywhere in the band; splitting the
    adaptive quadrature per octave keeps a bump of relative width >~ 1/20
    from slipping between the nodes of a single long interval.
    """
    edges = [0.0]
    e = min(scale / 32.0, cut)
    while e < cut:
        edges.append(e)
        e *= 2.0
    edges.append(cut)
    return np.asarray(edges)


def _panel_weighted_quad(f, edges: np.ndarray, kind: str, wvar: float) -> float:
    if kind == "sin" and wvar == 0.0:
        return 0.0
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if wvar == 0.0:
            total += quad(f, a, b, limit=_QUAD_LIMIT)[0]
        else:
            total += quad(f, a, b, weight=kind, wvar=wvar, limit=_QUAD_LIMIT)[0]
    return float(total)


def friction_kernel(density, t):
    """Memory kernel K(t) = int_0^inf dw (gamma(w)/w) cos(wt).

    Drude-Ohmic damping has the closed exponential form
    coupling * cutoff * exp(-cutoff * t); other densities are integrated by
    oscillatory-weight quadrature over their support, plus the analytic
    c1/w^2 tail when the support is unbounded.  The overall normalization is
    pinned by the memory Langevin equation reproducing the response function
    u(t) (module tests integrate that ODE directly).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be non-negative")
    if isinstance(density, DrudeOhmic):
        out = density.coupling * density.cutoff * np.exp(-density.cutoff * t)
        return out if out.ndim else float(out)

    cut = _sigma1_cut(density)

    def f(w):
        return float(density.gamma_over_omega(w))

    flat = np.atleast_1d(t)
    out = np.empty(flat.shape)
    c1 = float(density.tail_coefficient)
    for i, ti in enumerate(flat):
        val = _weighted_quad(f, cut, "cos", float(ti))
        if c1 > 0.0 and not np.isfinite(density.support_max):
            # int_cut^inf (c1/w^2) cos(wt) dw by parts; Si from scipy
            if ti == 0.0:
                val += c1 / cut
            else:
                si = sici(cut * ti)[0]
                val += c1 * (np.cos(cut * ti) / cut - ti * (0.5 * np.pi - si))
        out[i] = val
    return out.reshape(t.shape) if t.ndim else float(out[0])


def noise_mean(k: NoiseKernel, t):
    """<eta(t)>: the force bias injected by displaced bath modes.

    int_0^inf dw sqrt(w gamma(w)) (X_Q(w) cos wt + X_P(w) sin(wt)/w); zero
    for every zero-mean preparation, decaying in t by Riemann-Lebesgue
    otherwise.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be non-negative")
    dens, prep = k.density, k.preparation
    edges = _octave_edges(_sigma1_cut(dens), max(1.0, dens.frequency_scale))

    def f_q(w):
        xq, _ = prep.mean(w)
        return np.sqrt(w * float(dens.gamma(w))) * float(xq)

    def f_p(w):
        # sqrt(w gamma) / w == sqrt(gamma/w), finite down to w = 0
        _, xp = prep.mean(w)
        return np.sqrt(float(dens.gamma_over_omega(w))) * float(xp)

    flat = np.atleast_1d(t)
    out = np.empty(flat.shape)
    for i, ti in enumerate(flat):
        out[i] = _panel_weighted_quad(f_q, edges, "cos", float(ti)) + _panel_weighted_quad(
            f_p, edges, "sin", float(ti)
        )
    return out.reshape(t.shape) if t.ndim else float(out[0])


def _sigma1_correlation(k: NoiseKernel, t: float, s: float, edges: np.ndarray) -> float:
    dens, prep = k.density, k.preparation
    d = abs(t - s)
    u = t + s

    def f_even(w):
        return float(dens.gamma_over_omega(w)) * float(prep.energy(w))

    def f_skew(w):
        # w^2 s_QQ - s_PP == 2 E - 2 s_PP, finite at w = 0 where s_QQ is not
        with np.errstate(divide="ignore", invalid="ignore"):
            _, spp, _ = prep.covariance(w)
        return float(dens.gamma_over_omega(w)) * (float(prep.energy(w)) - float(spp))

    def f_cross(w):
        with np.errstate(divide="ignore", invalid="ignore"):
            _, _, sqp = prep.covariance(w)
        return float(dens.gamma(w)) * float(sqp)

    val = _panel_weighted_quad(f_even, edges, "cos", d)
    val += _panel_weighted_quad(f_skew, edges, "cos", u)
    val += _panel_weighted_quad(f_cross, edges, "sin", u)
    return val


def _sigma2_correlation(k: NoiseKernel, t_flat: np.ndarray, s_flat: np.ndarray):
    kernel = getattr(k.preparation, "sigma2", None)
    if kernel is None:
        return 0.0
    cut = _CUT_SIGMA2 * max(1.0, k.density.frequency_scale)
    box = getattr(k.preparation, "sigma2_support", None)
    windows = []
    if box is not None:
        cut = max(cut, float(box[1]))
        windows.append((float(box[0]), float(box[1]), (float(box[1]) - float(box[0])) / 12.0))
    cut = float(min(cut, k.density.support_max))
    t_scale = max(float(np.max(t_flat)), float(np.max(s_flat)), 1.0)
    nodes, wts = oscillatory_grid(cut, t_scale, windows=windows)
    win = genfunc._sigma2_window(k.preparation, nodes)
    nodes, wts = nodes[win], wts[win]
    if nodes.size == 0:
        return 0.0
    srow = wts * np.sqrt(nodes * np.asarray(k.density.gamma(nodes), dtype=float))
    ct = np.cos(t_flat[:, None] * nodes[None, :])
    st = np.sin(t_flat[:, None] * nodes[None, :]) / nodes[None, :]
    cs = np.cos(s_flat[:, None] * nodes[None, :])
    ss = np.sin(s_flat[:, None] * nodes[None, :]) / nodes[None, :]
    full = genfunc._sigma2_cross_qq(kernel, nodes, srow, ct, st, cs, ss)
    return np.diagonal(full).copy()


def noise_correlation(k: NoiseKernel, t, s):
    """Symmetrized force covariance S(t, s) of one bath (means subtracted).

    Assembles the single-frequency pieces (adaptive oscillatory-weight
    quadrature with a deterministic frequency cut) and, when the preparation
    declares a two-frequency sigma2 kernel, the double integral on a panel
    grid restricted to the kernel's support box (genfunc budget guard
    applies).  Scalars or equal-shape arrays of times; elementwise result.
    """
    t_arr, s_arr = np.broadcast_arrays(
        np.asarray(t, dtype=float), np.asarray(s, dtype=float)
    )
    if np.any(t_arr < 0.0) or np.any(s_arr < 0.0):
        raise DomainError("times must be non-negative")
    edges = _octave_edges(_sigma1_cut(k.density), max(1.0, k.density.frequency_scale))
    t_flat = t_arr.ravel()
    s_flat = s_arr.ravel()
    out = np.empty(t_flat.shape)
    for i in range(t_flat.size):
        out[i] = _sigma1_correlation(k, float(t_flat[i]), float(s_flat[i]), edges)
    out = out + _sigma2_correlation(k, t_flat, s_flat)
    out = out.reshape(t_arr.shape)
    return out if out.ndim else float(out)


def stationary_noise_correlation(k: NoiseKernel, lag):
    """Late-time limit of S(t, t + lag): int (gamma/w) E(w) cos(w lag) dw.

    Every t+s piece of the covariance has decayed here, so only the
    energy-weighted cosine transform survives; for thermal preparations this
    IS the correlation at all times.
    """
    lag = np.asarray(lag, dtype=float)
    dens, prep = k.density, k.preparation
    edges = _octave_edges(_sigma1_cut(dens), max(1.0, dens.frequency_scale))

    def f_even(w):
        return float(dens.gamma_over_omega(w)) * float(prep.energy(w))

    flat = np.atleast_1d(lag)
    out = np.empty(flat.shape)
    for i, si in enumerate(flat):
        out[i] = _panel_weighted_quad(f_even, edges, "cos", abs(float(si)))
    return out.reshape(lag.shape) if lag.ndim else float(out[0])


def cross_bath_correlation(k_left: NoiseKernel, k_right: NoiseKernel, t, s):
    """Force covariance between two baths.

    Exactly zero for distinct baths — the preparation factorizes, so the
    zero is structural, not a small number — and the same-bath case defers
    to noise_correlation.
    """
    if k_left.index != k_right.index:
        t_arr, s_arr = np.broadcast_arrays(
            np.asarray(t, dtype=float), np.asarray(s, dtype=float)
        )
        out = np.zeros(t_arr.shape)
        return out if out.ndim else float(out)
    return noise_correlation(k_left, t, s)


def slip_correlation(k: NoiseKernel, sigma_qq0: float, t, s):
    """Covariance of the slipped force xi(t) = eta(t) - K(t) Q(0).

    For a factorized preparation the oscillator's initial position is
    uncorrelated with the bath force, so the slip only adds
    Sigma_QQ(0) K(t) K(s); the addition dies off with the memory kernel
    (exponentially for Drude-Ohmic damping).
    """
    sigma_qq0 = float(sigma_qq0)
    if sigma_qq0 < 0.0:
        raise DomainError("initial position variance must be non-negative")
    base = noise_correlation(k, t, s)
    if sigma_qq0 == 0.0:
        return base
    kt = friction_kernel(k.density, t)
    ks = friction_kernel(k.density, s)
    return base + sigma_qq0 * kt * ks
