"""Finite-mode brute-force oracle: exact Gaussian dynamics at desk scale.

Every thermodynamic-limit formula in this package has a finite cousin: put
N quadrature modes per bath on a frequency grid, couple them to the central
oscillator (counter term included), diagonalize the full potential once, and
evolve means/covariances exactly.  Agreement between this path and the
analytic machinery — response function, covariances, two-time correlations,
steady currents — is the package's ground truth.

Conventions mirror the continuum modules: a mode at node omega_nu with
quadrature weight w_nu couples with lambda_nu = sqrt(gamma(omega_nu) *
omega_nu * w_nu), carries the sigma1 covariance of the preparation evaluated
at omega_nu, first moments sqrt(w_nu) * X(omega_nu), and cross-mode blocks
sqrt(w_nu * w_mu) * sigma2(omega_nu, omega_mu).

A closed finite system has no steady state: comparisons are only meaningful
before the modes dephase (t_deph ~ 2 pi / local level spacing at the
resonance) and certainly before the recurrence (2 pi / minimal spacing).
steady_current_estimate averages the current over a Hann window inside that
horizon, which is the robust protocol (clustering modes near the resonance
makes the plateau worse, not better: the off-resonant band dephases early
and its revivals pollute the window).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, ToleranceError
from .scenario import CentralState, Scenario

__all__ = [
    "MODE_GUARD",
    "DiscreteBath",
    "NormalModeSystem",
    "OracleState",
    "discretize",
    "discrete_friction",
    "build_normal_modes",
    "from_scenario",
    "initial_state",
    "prepare_state",
    "evolve_moments",
    "u_response",
    "symplectic_defect",
    "central_moments",
    "two_time_position_corr",
    "bath_energy_and_current",
    "w_first_moment",
    "dephasing_time",
    "recurrence_time",
    "steady_current_estimate",
]

MODE_GUARD = 5000
_OMEGA_MAX_FACTOR = 6.0
_DENSE_FRACTION = 0.9  # fraction of modes below the split frequency
_SPLIT_FACTOR = 2.5


@dataclass(frozen=True)
class DiscreteBath:
    """One bath as N discrete modes: frequencies, couplings, moments.

    cross, when present, is the (N, N, 2, 2) cross-mode covariance from a
    two-frequency preparation kernel; per-mode sigma1 covariances live in
    the diagonal cov_* arrays.
    """

    frequencies: np.ndarray
    couplings: np.ndarray
    weights: np.ndarray
    mean_q: np.ndarray
    mean_p: np.ndarray
    cov_qq: np.ndarray
    cov_pp: np.ndarray
    cov_qp: np.ndarray
    cross: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        n = f.size
        if n < 1:
            raise DomainError("a discrete bath needs at least one mode")
        if np.any(f <= 0.0):
            raise DomainError("mode frequencies must be positive")
        if np.unique(f).size != n:
            raise DomainError("mode frequencies must be distinct")
        for name in ("couplings", "weights", "mean_q", "mean_p", "cov_qq", "cov_pp", "cov_qp"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DomainError(f"{name} must have shape ({n},)")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} must be finite")
        if self.cross is not None and np.shape(self.cross) != (n, n, 2, 2):
            raise DomainError("cross block must have shape (N, N, 2, 2)")

    @property
    def n_modes(self) -> int:
        return int(np.asarray(self.frequencies).size)


def _bath_grid(n: int, omega_max: float, split: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-segment Gauss-Legendre grid: dense below split, sparse above."""
    if split <= 0.0:
        x, w = leggauss(int(n))
        return 0.5 * omega_max * (x + 1.0), 0.5 * omega_max * w
    x, w = leggauss(max(int(round(_DENSE_FRACTION * n)), 1))
    lo_n = 0.5 * split * (x + 1.0)
    lo_w = 0.5 * split * w
    n_hi = n - lo_n.size
    if n_hi > 0 and omega_max > split:
        x2, w2 = leggauss(n_hi)
        hi_n = 0.5 * (omega_max - split) * (x2 + 1.0) + split
        hi_w = 0.5 * (omega_max - split) * w2
        return np.concatenate([lo_n, hi_n]), np.concatenate([lo_w, hi_w])
    return lo_n, lo_w


def discretize(density, preparation, n: int, omega_max: float | None = None,
               split: float | None = None) -> DiscreteBath:
    """Quadrature-mode realization of a continuum bath.

    Gauss-Legendre nodes on [0, omega_max] (dense segment below
    2.5 * frequency scale, sparse tail above — the current plateau cares
    about resolution near the resonance, the friction sum about coverage)
    with lambda_nu = sqrt(gamma w omega), sigma1 moments sampled at the
    nodes, and sigma2 cross blocks scaled by sqrt(w_nu w_mu).  Pass
    split=0 for a single rule over the whole band (uniform coverage for
    kernel-reconstruction studies) or a positive split to move the dense
    segment's edge; the default suits current plateaus near resonance.
    """
    if n < 2:
        raise DomainError("discretize needs at least two modes")
    scale = max(1.0, float(density.frequency_scale))
    if omega_max is None:
        omega_max = _OMEGA_MAX_FACTOR * scale
    omega_max = float(min(omega_max, density.support_max))
    if not omega_max > 0.0:
        raise DomainError("omega_max must be positive")
    if split is None:
        split = min(_SPLIT_FACTOR * scale, 0.5 * omega_max)
    split = float(split)
    if split >= omega_max:
        raise DomainError("split must lie below omega_max")
    nodes, wts = _bath_grid(int(n), omega_max, split)
    lam = np.sqrt(np.asarray(density.gamma(nodes), dtype=float) * nodes * wts)
    sqq, spp, sqp = preparation.covariance(nodes)
    xq, xp = preparation.mean(nodes)
    kernel = getattr(preparation, "sigma2", None)
    cross = None
    if kernel is not None:
        k = np.asarray(kernel(nodes[:, None], nodes[None, :]), dtype=float)
        if k.shape != (nodes.size, nodes.size, 2, 2):
            raise DomainError("sigma2 kernel must broadcast to (N, N, 2, 2)")
        box = getattr(preparation, "sigma2_support", None)
        if box is not None:
            inside = (nodes >= float(box[0])) & (nodes <= float(box[1]))
            k = k * (inside[:, None, None, None] & inside[None, :, None, None])
        cross = k * np.sqrt(wts[:, None] * wts[None, :])[:, :, None, None]
    return DiscreteBath(
        frequencies=nodes,
        couplings=lam,
        weights=wts,
        mean_q=np.sqrt(wts) * np.asarray(xq, dtype=float),
        mean_p=np.sqrt(wts) * np.asarray(xp, dtype=float),
        cov_qq=np.asarray(sqq, dtype=float) * np.ones_like(nodes),
        cov_pp=np.asarray(spp, dtype=float) * np.ones_like(nodes),
        cov_qp=np.asarray(sqp, dtype=float) * np.ones_like(nodes),
        cross=cross,
    )


def discrete_friction(bath: DiscreteBath, t):
    """Finite-mode friction kernel sum (lambda/omega)^2 cos(omega t)."""
    t = np.asarray(t, dtype=float)
    c = (bath.couplings / bath.frequencies) ** 2
    out = np.cos(np.multiply.outer(t, bath.frequencies)) @ c
    return out if out.ndim else float(out)


class NormalModeSystem:
    """Eigendecomposition of the full coupled quadratic potential.

    Coordinates are ordered (Q_central, Q_modes...) with momenta alike; the
    potential carries the counter term sum (lambda/omega)^2 on the central
    diagonal, which is what keeps it positive definite.
    """

    def __init__(self, omega0: float, baths):
        if omega0 <= 0.0:
            raise DomainError("central frequency must be positive")
        baths = list(baths)
        if not baths:
            raise DomainError("at least one discrete bath is required")
        m = 1 + sum(b.n_modes for b in baths)
        if m > MODE_GUARD:
            raise DomainError(f"{m} modes exceed the guard ({MODE_GUARD})")
        self.omega0 = float(omega0)
        self.baths = tuple(baths)
        self.slices = []
        v = np.zeros((m, m))
        pos = 1
        counter = 0.0
        for b in baths:
            nn = b.n_modes
            sl = slice(pos, pos + nn)
            self.slices.append(sl)
            v[sl, sl] = np.diag(b.frequencies**2)
            v[0, sl] = b.couplings
            v[sl, 0] = b.couplings
            counter += float(np.sum((b.couplings / b.frequencies) ** 2))
            pos += nn
        v[0, 0] = omega0**2 + counter
        evals, vecs = np.linalg.eigh(v)
        if evals[0] <= 0.0:
            raise ToleranceError(
                "coupled potential is not positive definite "
                f"(lowest eigenvalue {evals[0]:.3e}); the counter term should forbid this"
            )
        self.n_total = m
        self.potential = v
        self.eigenfreqs = np.sqrt(evals)
        self.modes = vecs  # columns are normal modes

    def rotation(self, t: float):
        """cos/sin factors of the eigenbasis propagator at time t."""
        wt = self.eigenfreqs * float(t)
        c = np.cos(wt)
        s = np.sin(wt) / self.eigenfreqs
        d = -self.eigenfreqs * np.sin(wt)
        return c, s, d

    def propagator(self, t: float) -> np.ndarray:
        """R(t) in the physical (Q..., P...) basis; shape (2M, 2M)."""
        c, s, d = self.rotation(t)
        o = self.modes
        top = np.hstack([(o * c) @ o.T, (o * s) @ o.T])
        bot = np.hstack([(o * d) @ o.T, (o * c) @ o.T])
        return np.vstack([top, bot])


def build_normal_modes(omega0: float, baths) -> NormalModeSystem:
    """Couple discrete baths to the central oscillator and diagonalize."""
    return NormalModeSystem(omega0, baths)


@dataclass(frozen=True)
class OracleState:
    """Initial Gaussian moments rotated to the eigenbasis (one-time cost)."""

    mean_q: np.ndarray
    mean_p: np.ndarray
    cov_qq: np.ndarray
    cov_qp: np.ndarray
    cov_pp: np.ndarray


def initial_state(sys: NormalModeSystem, central=None):
    """Physical-basis global moments: mean (2M,), covariance (2M, 2M)."""
    m = sys.n_total
    mean = np.zeros(2 * m)
    cov = np.zeros((2 * m, 2 * m))
    if central is None:
        central = CentralState.ground(sys.omega0)
    cmean = np.asarray(central.mean, dtype=float)
    ccov = np.asarray(central.covariance, dtype=float)
    mean[0], mean[m] = cmean
    cov[0, 0] = ccov[0, 0]
    cov[0, m] = cov[m, 0] = ccov[0, 1]
    cov[m, m] = ccov[1, 1]
    for b, sl in zip(sys.baths, sys.slices):
        qi = np.arange(sl.start, sl.stop)
        pi = qi + m
        mean[qi] = b.mean_q
        mean[pi] = b.mean_p
        cov[qi, qi] += b.cov_qq
        cov[pi, pi] += b.cov_pp
        cov[qi, pi] += b.cov_qp
        cov[pi, qi] += b.cov_qp
        if b.cross is not None:
            cov[np.ix_(qi, qi)] += b.cross[:, :, 0, 0]
            cov[np.ix_(qi, pi)] += b.cross[:, :, 0, 1]
            cov[np.ix_(pi, qi)] += b.cross[:, :, 1, 0]
            cov[np.ix_(pi, pi)] += b.cross[:, :, 1, 1]
    return mean, cov


def prepare_state(sys: NormalModeSystem, central=None) -> OracleState:
    """Rotate the initial moments to the eigenbasis once; reuse everywhere."""
    mean, cov = initial_state(sys, central)
    m = sys.n_total
    o = sys.modes
    mq = o.T @ mean[:m]
    mp = o.T @ mean[m:]
    cqq = o.T @ cov[:m, :m] @ o
    cqp = o.T @ cov[:m, m:] @ o
    cpp = o.T @ cov[m:, m:] @ o
    return OracleState(mean_q=mq, mean_p=mp, cov_qq=cqq, cov_qp=cqp, cov_pp=cpp)


def _evolved_blocks(sys: NormalModeSystem, state: OracleState, t: float):
    c, s, d = sys.rotation(t)
    a, b, cc = state.cov_qq, state.cov_qp, state.cov_pp
    qq = (
        np.outer(c, c) * a
        + np.outer(c, s) * b
        + np.outer(s, c) * b.T
        + np.outer(s, s) * cc
    )
    qp = (
        np.outer(c, d) * a
        + np.outer(c, c) * b
        + np.outer(s, d) * b.T
        + np.outer(s, c) * cc
    )
    pp = (
        np.outer(d, d) * a
        + np.outer(d, c) * b
        + np.outer(c, d) * b.T
        + np.outer(c, c) * cc
    )
    mq = c * state.mean_q + s * state.mean_p
    mp = d * state.mean_q + c * state.mean_p
    return mq, mp, qq, qp, pp


def evolve_moments(sys: NormalModeSystem, mean, cov, t: float):
    """Exact pushforward of global physical-basis moments to time t."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    m = sys.n_total
    if mean.shape != (2 * m,) or cov.shape != (2 * m, 2 * m):
        raise DomainError("global moments must have shape (2M,) and (2M, 2M)")
    r = sys.propagator(t)
    return r @ mean, r @ cov @ r.T


def u_response(sys: NormalModeSystem, t):
    """Finite-mode response: R(t) element mapping central P(0) to Q(t)."""
    t = np.asarray(t, dtype=float)
    o0 = sys.modes[0, :]
    wt = np.multiply.outer(t, sys.eigenfreqs)
    out = np.sin(wt) @ (o0**2 / sys.eigenfreqs)
    return out if out.ndim else float(out)


def symplectic_defect(sys: NormalModeSystem, t: float) -> float:
    """max |R(t)^T J R(t) - J|; exact propagators keep it at rounding."""
    m = sys.n_total
    r = sys.propagator(t)
    j = np.zeros((2 * m, 2 * m))
    j[:m, m:] = np.eye(m)
    j[m:, :m] = -np.eye(m)
    return float(np.max(np.abs(r.T @ j @ r - j)))


def central_moments(sys: NormalModeSystem, state: OracleState, times):
    """Central-oscillator marginal along a trajectory: (nt, 2), (nt, 2, 2)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    o0 = sys.modes[0, :]
    means = np.zeros((times.size, 2))
    covs = np.zeros((times.size, 2, 2))
    for i, t in enumerate(times):
        mq, mp, qq, qp, pp = _evolved_blocks(sys, state, float(t))
        means[i] = o0 @ mq, o0 @ mp
        covs[i, 0, 0] = o0 @ qq @ o0
        covs[i, 0, 1] = covs[i, 1, 0] = o0 @ qp @ o0
        covs[i, 1, 1] = o0 @ pp @ o0
    return means, covs


def two_time_position_corr(sys: NormalModeSystem, state: OracleState, t: float, lags):
    """(Psi, Phi) between times t and t + lag, exact at finite N.

    Psi is the symmetrized second moment of the central position (mean
    product included); Phi is the commutator part over i, a c-number
    independent of the state.
    """
    lags = np.asarray(lags, dtype=float)
    lag_arr = np.atleast_1d(lags)
    o0 = sys.modes[0, :]
    w = sys.eigenfreqs

    def rows(tt):
        wt = w * tt
        return o0 * np.cos(wt), o0 * np.sin(wt) / w

    rq, rp = rows(float(t))
    a, b, cc = state.cov_qq, state.cov_qp, state.cov_pp
    left_q = rq @ a + rp @ b.T
    left_p = rq @ b + rp @ cc
    mean_t = rq @ state.mean_q + rp @ state.mean_p
    psi = np.zeros(lag_arr.size)
    phi = np.zeros(lag_arr.size)
    for i, s in enumerate(lag_arr):
        uq, up = rows(float(t) + float(s))
        psi[i] = left_q @ uq + left_p @ up
        psi[i] += mean_t * (uq @ state.mean_q + up @ state.mean_p)
        phi[i] = rq @ up - rp @ uq
    if lags.ndim:
        return psi, phi
    return float(psi[0]), float(phi[0])


def _bath_projectors(sys: NormalModeSystem, bath_index: int):
    sl = sys.slices[bath_index]
    b = sys.baths[bath_index]
    o_b = sys.modes[sl, :]
    a_one = o_b.T @ o_b
    a_w2 = (o_b * b.frequencies[:, None] ** 2).T @ o_b
    c_hat = b.couplings @ o_b
    return o_b, a_one, a_w2, c_hat


def bath_energy_and_current(sys: NormalModeSystem, state: OracleState, times, bath_index: int = 0):
    """(<H_B(t)>, I(t)) for the designated bath (default: first = left).

    The bath energy is the bare sum (P^2 + w^2 Q^2)/2 over its modes; the
    current I(t) = sum lambda_nu <{P_nu(t), Q(t)}>/2 equals -d<H_B>/dt for
    the coupled dynamics (the module tests difference one against the
    other).
    """
    t_in = np.asarray(times, dtype=float)
    times = np.atleast_1d(t_in)
    o_b, a_one, a_w2, c_hat = _bath_projectors(sys, bath_index)
    o0 = sys.modes[0, :]
    hb = np.zeros(times.size)
    cur = np.zeros(times.size)
    for i, t in enumerate(times):
        mq, mp, qq, qp, pp = _evolved_blocks(sys, state, float(t))
        mean_qb = o_b @ mq
        mean_pb = o_b @ mp
        hb[i] = 0.5 * (
            np.sum(a_one * pp)
            + np.sum(a_w2 * qq)
            + mean_pb @ mean_pb
            + (sys.baths[bath_index].frequencies * mean_qb) @ (
                sys.baths[bath_index].frequencies * mean_qb
            )
        )
        cur[i] = o0 @ qp @ c_hat + (o0 @ mq) * (c_hat @ mp)
    if t_in.ndim:
        return hb, cur
    return float(hb[0]), float(cur[0])


def w_first_moment(sys: NormalModeSystem, state: OracleState, t: float, bath_index: int = 0) -> float:
    """Injected-work rate (<H_B(0)> - <H_B(t)>) / t; zero at t = 0."""
    t = float(t)
    if t < 0.0:
        raise DomainError("t must be non-negative")
    if t == 0.0:
        return 0.0
    h0, _ = bath_energy_and_current(sys, state, 0.0, bath_index)
    ht, _ = bath_energy_and_current(sys, state, t, bath_index)
    return (h0 - ht) / t


def _local_spacing(freqs: np.ndarray, omega: float, k: int = 9) -> float:
    w = np.sort(np.asarray(freqs, dtype=float))
    j = int(np.searchsorted(w, omega))
    lo = max(j - k // 2, 0)
    hi = min(lo + k, w.size)
    d = np.diff(w[lo:hi])
    if d.size == 0:
        raise DomainError("not enough modes to estimate a level spacing")
    return float(np.median(d))


def dephasing_time(sys: NormalModeSystem) -> float:
    """2 pi / (coarsest per-bath node spacing at the central resonance).

    Each bath's own frequency comb sets how long its exchange with the
    oscillator stays coherent; interleaving several baths doubles the union
    density of states without extending that horizon, so the limit is the
    worst single bath.
    """
    spacing = max(_local_spacing(b.frequencies, sys.omega0) for b in sys.baths)
    return 2.0 * np.pi / spacing


def recurrence_time(sys: NormalModeSystem) -> float:
    """2 pi / minimal level spacing: revivals beyond this are expected."""
    return 2.0 * np.pi / float(np.min(np.diff(np.sort(sys.eigenfreqs))))


def steady_current_estimate(
    sys: NormalModeSystem,
    state: OracleState,
    t_lo: float = 40.0,
    t_hi: float | None = None,
    n_samples: int = 257,
    bath_index: int = 0,
) -> float:
    """Hann-weighted average of I(t) over the pre-dephasing plateau window.

    The default window [40, 0.8 * t_deph] skips the transient and stops
    before finite-N dephasing erodes the plateau.
    """
    if t_hi is None:
        t_hi = 0.8 * dephasing_time(sys)
    if not t_hi > t_lo:
        raise DomainError("plateau window is empty; increase N or lower t_lo")
    times = np.linspace(t_lo, t_hi, int(n_samples))
    _, cur = bath_energy_and_current(sys, state, times, bath_index)
    win = np.hanning(times.size)
    return float(np.sum(win * cur) / np.sum(win))


def from_scenario(scenario: Scenario, n: int, omega_max: float | None = None,
                  split: float | None = None):
    """Discretize every bath of a continuum scenario and diagonalize.

    Returns (system, state); omega_max defaults per bath to the module rule.
    """
    baths = [discretize(b.density, b.preparation, n, omega_max, split)
             for b in scenario.baths]
    sys = build_normal_modes(scenario.omega0, baths)
    return sys, prepare_state(sys, scenario.central)
