"""Exact Gaussian moment propagation and the position generating function.

The central moments at time t follow from the response function u(t) and its
partial Fourier transforms u(t, omega):

    mean(t) = U0(t) mean(0) + drift(t)
    cov(t)  = U0(t) cov(0) U0(t)^T + C(t)

with U0(t) = [[du, u], [ddu, du]] and the injected covariance

    C(t) = sum_a int domega omega gamma_a(omega)
               U(t, omega) M_a(omega) U(t, omega)^T   (+ cross-mode terms),

    U(t, omega) = [[Re u(t,.), Im u(t,.)/omega],
                   [u(t) - omega Im u(t,.), Re u(t,.)]],

where M_a = [[s_qq, s_qp], [s_qp, s_pp]] is the preparation covariance of
the mode at omega.  A cross-frequency kernel sigma2(w1, w2), when a
preparation carries one, adds the double integral

    C2(t) = int int dw1 dw2 sqrt(w1 g(w1) w2 g(w2))
            U(t, w1) sigma2(w1, w2) U(t, w2)^T

evaluated by tensor-product quadrature under an evaluation budget.
Frequency integrals run on composite Gauss-Legendre panels sized to the
oscillation scale of u(t, omega) (~ 2 pi / t) with extra resolution across
the resonance peak of |F|^2.

The position generating function is the Gaussian closed form

    Z_Q(xi, t) = exp(i xi <Q(t)> - xi^2 cov_QQ(t) / 2),   xi complex,

which obeys the reflection identity Z_Q(-xi + i A, t) = Z_Q(xi, t) with
A(t) = 2 <Q(t)> / cov_QQ(t).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._panels import oscillatory_grid
from .errors import BudgetError, DomainError, ToleranceError
from .scenario import CentralState, Scenario

__all__ = [
    "MomentState",
    "Propagator",
    "integration_grid",
    "mode_rows",
    "injected_covariance",
    "injected_mean",
    "propagator",
    "propagate",
    "propagate_trajectory",
    "zq",
    "gc_shift",
]

_CUT_FACTOR = 6.0
_REFINE_WIDTHS = 8.0
_REFINE_CELL = 0.4
# configurable guard for sigma2 tensor-product quadratures (kernel
# evaluations on the support box); raise it for long-time runs with
# full-support kernels
SIGMA2_BUDGET = 10**7
_SIGMA2_CHUNK_ENTRIES = 2 * 10**6


@dataclass(frozen=True)
class MomentState:
    """First and second central moments of the oscillator at one time."""

    time: float
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def var_q(self) -> float:
        return float(self.covariance[0, 0])

    @property
    def var_p(self) -> float:
        return float(self.covariance[1, 1])


@dataclass(frozen=True)
class Propagator:
    """Affine moment map at one time: U(t), drift I(t), injected C(t)."""

    time: float
    u_matrix: np.ndarray
    drift: np.ndarray
    injected: np.ndarray

    def apply(self, mean, covariance) -> tuple[np.ndarray, np.ndarray]:
        u = self.u_matrix
        return u @ mean + self.drift, u @ covariance @ u.T + self.injected


def integration_grid(scenario: Scenario, time_scale: float, cut: float | None = None):
    """Panel nodes/weights resolving u(t, omega)-products up to time_scale.

    The default cut keeps the position-sector tail below ~1e-7; momentum
    variances carry a c_gamma / (4 cut^2) truncation tail (the zero-point
    gamma E / omega^3 decay), so pass a larger cut when that matters.
    """
    susc = scenario.susceptibility
    scale = max([scenario.omega0] + [d.frequency_scale for d in scenario.densities()])
    if cut is None:
        cut = _CUT_FACTOR * scale
    cut = min(cut, scenario.support_max(), susc.omega_max)
    w_hat, hw = susc.resonance()
    windows = []
    for b in scenario.baths:
        box = getattr(b.preparation, "sigma2_support", None)
        if box is not None and getattr(b.preparation, "sigma2", None) is not None:
            lo, hi = float(box[0]), float(box[1])
            windows.append((lo, hi, (hi - lo) / 12.0))
    return oscillatory_grid(
        cut,
        time_scale,
        refine_center=w_hat,
        refine_halfwidth=_REFINE_WIDTHS * hw,
        refine_cell=_REFINE_CELL * hw,
        windows=windows,
    )


def mode_rows(scenario: Scenario, times, nodes):
    """U(t_i, omega_j) entries: (uR, uI_over_w, vR) each (nt, nw).

    times must be sorted ascending; the fourth matrix element equals uR.
    """
    times = np.asarray(times, dtype=float)
    resp = scenario.response
    upart = resp.partial_ft_batch(times, nodes)
    u_t = resp.u(times)
    uR = upart.real
    uI = upart.imag
    return uR, uI / nodes[None, :], u_t[:, None] - nodes[None, :] * uI


def _mode_covariances(scenario: Scenario, nodes):
    out = []
    for b in scenario.baths:
        sqq, spp, sqp = b.preparation.covariance(nodes)
        out.append((b.density.gamma(nodes), sqq, spp, sqp))
    return out


def _sigma2_window(preparation, nodes) -> slice:
    """Index slice of nodes inside the kernel's declared support box."""
    box = getattr(preparation, "sigma2_support", None)
    if box is None:
        return slice(None)
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise DomainError("sigma2_support must be an increasing (lo, hi) pair")
    i0 = int(np.searchsorted(nodes, lo, side="left"))
    i1 = int(np.searchsorted(nodes, hi, side="right"))
    return slice(i0, i1)


def _sigma2_guard(nw: int) -> None:
    if nw * nw > SIGMA2_BUDGET:
        raise BudgetError(
            f"sigma2 tensor quadrature needs {nw * nw:.3g} kernel evaluations "
            f"(budget {SIGMA2_BUDGET:.3g}); reduce the time span, declare a "
            f"sigma2_support box, or raise genfunc.SIGMA2_BUDGET"
        )


def _sigma2_cross_qq(kernel, nodes, s_row, qL, pL, qR, pR):
    """Bilinear form sum_ij s_i s_j [qL,pL]_i K(i,j) [qR,pR]_j; (ntL, ntR).

    Rows are caller-weighted mode amplitudes (e.g. Re u(t, w) and
    Im u(t, w)/w, or cos(wt) and sin(wt)/w); s_row carries the quadrature
    weight times sqrt(omega gamma).  One kernel pass, chunked over rows.
    """
    nw = nodes.size
    _sigma2_guard(nw)
    xL = qL * s_row[None, :]
    yL = pL * s_row[None, :]
    xR = qR * s_row[None, :]
    yR = pR * s_row[None, :]
    aq = np.zeros((xL.shape[0], nw))
    ap = np.zeros((xL.shape[0], nw))
    chunk = max(1, min(nw, _SIGMA2_CHUNK_ENTRIES // nw))
    for j0 in range(0, nw, chunk):
        j1 = min(j0 + chunk, nw)
        k = np.asarray(kernel(nodes[j0:j1, None], nodes[None, :]), dtype=float)
        if k.shape != (j1 - j0, nw, 2, 2):
            raise DomainError("sigma2 kernel must broadcast to (..., 2, 2)")
        aq += xL[:, j0:j1] @ k[:, :, 0, 0] + yL[:, j0:j1] @ k[:, :, 1, 0]
        ap += xL[:, j0:j1] @ k[:, :, 0, 1] + yL[:, j0:j1] @ k[:, :, 1, 1]
    return aq @ xR.T + ap @ yR.T


def _sigma2_terms(kernel, nodes, wts, gamma, uR, uIw, vR):
    """Double-quadrature cross-frequency covariance; (nt,) per entry."""
    nw = nodes.size
    _sigma2_guard(nw)
    s = wts * np.sqrt(nodes * gamma)
    x = uR * s[None, :]
    y = uIw * s[None, :]
    z = vR * s[None, :]
    nt = x.shape[0]
    wq = [np.zeros((nt, nw)), np.zeros((nt, nw))]
    wp = [np.zeros((nt, nw)), np.zeros((nt, nw))]
    chunk = max(1, min(nw, _SIGMA2_CHUNK_ENTRIES // nw))
    for j0 in range(0, nw, chunk):
        j1 = min(j0 + chunk, nw)
        k = np.asarray(kernel(nodes[j0:j1, None], nodes[None, :]), dtype=float)
        if k.shape != (j1 - j0, nw, 2, 2):
            raise DomainError("sigma2 kernel must broadcast to (..., 2, 2)")
        for d in (0, 1):
            wq[d] += x[:, j0:j1] @ k[:, :, 0, d] + y[:, j0:j1] @ k[:, :, 1, d]
            wp[d] += z[:, j0:j1] @ k[:, :, 0, d] + x[:, j0:j1] @ k[:, :, 1, d]
    cqq = np.sum(wq[0] * x + wq[1] * y, axis=1)
    cqp = np.sum(wq[0] * z + wq[1] * x, axis=1)
    cpp = np.sum(wp[0] * z + wp[1] * x, axis=1)
    return cqq, cqp, cpp


def injected_covariance(scenario: Scenario, times) -> np.ndarray:
    """C(t_i) for sorted times; shape (nt, 2, 2)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros((0, 2, 2))
    if np.any(np.diff(times) < 0.0):
        raise DomainError("times must be sorted ascending")
    nodes, wts = integration_grid(scenario, max(float(times[-1]), 1.0))
    uR, uIw, vR = mode_rows(scenario, times, nodes)
    out = np.zeros((times.size, 2, 2))
    for (g, sqq, spp, sqp), bath in zip(_mode_covariances(scenario, nodes), scenario.baths):
        wg = wts * g * nodes
        a = wg * sqq
        bb = wg * (spp / nodes**2)
        c = wg * (sqp / nodes)
        cqq = (uR * uR) @ a + (uIw * uIw * nodes**2) @ bb + 2.0 * (uR * uIw * nodes) @ c
        cqp = (uR * vR) @ a + (uIw * uR * nodes**2) @ bb + ((vR * uIw + uR * uR) * nodes) @ c
        cpp = (vR * vR) @ a + (uR * uR * nodes**2) @ bb + 2.0 * (vR * uR * nodes) @ c
        kernel = getattr(bath.preparation, "sigma2", None)
        if kernel is not None:
            k = _sigma2_window(bath.preparation, nodes)
            c2qq, c2qp, c2pp = _sigma2_terms(
                kernel, nodes[k], wts[k], g[k], uR[:, k], uIw[:, k], vR[:, k]
            )
            cqq = cqq + c2qq
            cqp = cqp + c2qp
            cpp = cpp + c2pp
        out[:, 0, 0] += cqq
        out[:, 0, 1] += cqp
        out[:, 1, 0] += cqp
        out[:, 1, 1] += cpp
    return out


def injected_mean(scenario: Scenario, times) -> np.ndarray:
    """Deterministic drift from displaced bath modes; shape (nt, 2)."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros((0, 2))
    if np.any(np.diff(times) < 0.0):
        raise DomainError("times must be sorted ascending")
    nodes, wts = integration_grid(scenario, max(float(times[-1]), 1.0))
    out = np.zeros((times.size, 2))
    rows = None
    for b in scenario.baths:
        xq, xp = b.preparation.mean(nodes)
        if not (np.any(xq) or np.any(xp)):
            continue
        if rows is None:
            rows = mode_rows(scenario, times, nodes)
        uR, uIw, vR = rows
        s = wts * np.sqrt(nodes * b.density.gamma(nodes))
        out[:, 0] -= uR @ (s * xq) + uIw @ (s * xp)
        out[:, 1] -= vR @ (s * xq) + uR @ (s * xp)
    return out


def _initial_moments(scenario: Scenario, initial):
    if initial is None:
        initial = scenario.central
    if isinstance(initial, (MomentState, CentralState)):
        return np.asarray(initial.mean, float), np.asarray(initial.covariance, float)
    raise DomainError("initial must be a MomentState, CentralState, or None")


def _check_state(cov: np.ndarray, t: float) -> None:
    tr = cov[0, 0] + cov[1, 1]
    if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(tr, 1.0):
        raise ToleranceError(f"covariance asymmetric at t = {t:.6g}")
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    if det < 0.25 * (1.0 - 1e-9) or cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0:
        raise ToleranceError(
            f"covariance positivity violated at t = {t:.6g} "
            f"(det = {det:.6g} < 1/4); refusing repair"
        )


def propagator(scenario: Scenario, t: float) -> Propagator:
    """Affine moment map (U(t), I(t), C(t)) of the scenario at time t."""
    t = float(t)
    if t < 0.0:
        raise DomainError("t must be non-negative")
    times = np.array([t])
    resp = scenario.response
    u0 = np.array([[resp.udot(t), resp.u(t)], [resp.uddot(t), resp.udot(t)]])
    return Propagator(
        time=t,
        u_matrix=u0,
        drift=injected_mean(scenario, times)[0],
        injected=injected_covariance(scenario, times)[0],
    )


def propagate(scenario: Scenario, initial, t: float) -> MomentState:
    """Exact Gaussian moments at time t from the given initial state.

    initial may be a MomentState, a CentralState, or None for the
    scenario's own central state.  The propagated covariance is checked
    against the uncertainty bound; violations raise rather than repair.
    """
    return propagate_trajectory(scenario, [float(t)], initial)[0]


def propagate_trajectory(scenario: Scenario, times, initial=None) -> list[MomentState]:
    """Moments at the given sorted times (shared frequency grid)."""
    times = np.asarray(times, dtype=float)
    m0, s0 = _initial_moments(scenario, initial)
    cov_in = injected_covariance(scenario, times)
    mean_in = injected_mean(scenario, times)
    resp = scenario.response
    states = []
    for i, t in enumerate(times):
        u0 = np.array([[resp.udot(t), resp.u(t)], [resp.uddot(t), resp.udot(t)]])
        mean = u0 @ m0 + mean_in[i]
        cov = u0 @ s0 @ u0.T + cov_in[i]
        _check_state(cov, float(t))
        states.append(MomentState(time=float(t), mean=mean, covariance=cov))
    return states


def zq(scenario: Scenario, initial, xi, t, state: MomentState | None = None):
    """Characteristic function Z_Q(xi, t) = <exp(i xi Q(t))>, xi complex."""
    if state is None:
        state = propagate(scenario, initial, float(t))
    xi = np.asarray(xi, dtype=complex)
    val = np.exp(1j * xi * state.mean[0] - 0.5 * xi**2 * state.covariance[0, 0])
    return val if val.ndim else complex(val)


def gc_shift(scenario: Scenario, initial, t, state: MomentState | None = None) -> float:
    """Reflection shift A(t) = 2 <Q(t)> / cov_QQ(t) of Z_Q at time t."""
    if state is None:
        state = propagate(scenario, initial, float(t))
    var = float(state.covariance[0, 0])
    if var <= 0.0:
        raise DomainError("degenerate position variance")
    return 2.0 * float(state.mean[0]) / var
