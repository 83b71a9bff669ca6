"""Bath spectral densities, the retarded susceptibility, and the response function.

Conventions (hbar = k_B = 1, unit mass):

* gamma(omega) >= 0 is the damping spectral function of one bath; the
  coupling weight at frequency omega is sqrt(omega * gamma(omega)).
* Gamma(z) = int_0^inf domega' omega' gamma(omega') / (z^2 - omega'^2) for
  Im z > 0 is its upper-half-plane continuation (Cauchy form).  Closed forms
  may differ from the Cauchy form by the constant Gamma(i0+); the
  susceptibility below is invariant under that choice.
* F(z) = 1 / (omega0^2 - sum_a Gamma_a(i0+) - z^2 + sum_a Gamma_a(z)).
* u(t) = (2/pi) int_0^inf sin(omega t) Im F(omega + i0+) domega is the
  response function: u(0) = 0, du/dt(0+) = 1, and the moments of any
  Gaussian initial condition evolve through u and its partial transforms
  u(t, omega) = e^{i omega t} int_0^t u(tau) e^{-i omega tau} dtau.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from ._filon import SplineOscillator
from ._tails import sin_cos_tails
from .errors import DomainError, PoleError, PoleScanError

__all__ = [
    "DrudeOhmic",
    "Tabulated",
    "Susceptibility",
    "ClassicalResponse",
    "PoleScanReport",
    "gamma_eval",
    "gamma_continuation",
    "susceptibility_eval",
    "pole_scan",
    "classical_u",
    "partial_ft",
    "full_ft",
]


@dataclass(frozen=True)
class DrudeOhmic:
    """Ohmic damping with a Lorentz-Drude cutoff.

    gamma(omega) = (2/pi) * coupling * omega * cutoff^2 / (omega^2 + cutoff^2)

    The continuation has the closed form

        Gamma(z) = coupling * cutoff * z / (z + i * cutoff),   Im z > 0,

    which satisfies Gamma(i0+) = 0.
    """

    coupling: float
    cutoff: float

    def __post_init__(self):
        if self.coupling < 0.0:
            raise DomainError("coupling must be non-negative")
        if self.cutoff <= 0.0:
            raise DomainError("cutoff must be positive")

    def gamma(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (2.0 / np.pi) * self.coupling * omega * self.cutoff**2 / (
            omega**2 + self.cutoff**2
        )

    def gamma_over_omega(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (2.0 / np.pi) * self.coupling * self.cutoff**2 / (omega**2 + self.cutoff**2)

    def continuation(self, z):
        z = np.asarray(z, dtype=complex)
        return self.coupling * self.cutoff * z / (z + 1j * self.cutoff)

    def boundary(self, omega):
        """Gamma(omega + i0+) on the real axis, omega >= 0."""
        omega = np.asarray(omega, dtype=float)
        return self.coupling * self.cutoff * omega / (omega + 1j * self.cutoff)

    @property
    def static_shift(self) -> float:
        """Gamma(i0+) of this parametrization (zero for the closed form)."""
        return 0.0

    @property
    def tail_coefficient(self) -> float:
        """lim omega->inf of omega * gamma(omega)."""
        return (2.0 / np.pi) * self.coupling * self.cutoff**2

    @property
    def frequency_scale(self) -> float:
        return self.cutoff

    @property
    def support_max(self) -> float:
        return np.inf


class Tabulated:
    """Spectral function given by samples on [0, grid[-1]], zero outside.

    Samples are interpolated linearly (zero extension beyond the grid).  The
    continuation uses the Cauchy form, so static_shift =
    -int gamma/omega < 0; the susceptibility is invariant under this offset.
    Real-axis boundary values are principal-value integrals evaluated with a
    subtracted kernel on a fixed composite Gauss-Legendre grid (vectorized
    over targets), plus the exact -i pi gamma(omega)/2 imaginary part.
    """

    def __init__(self, grid, values, pv_nodes: int = 4096):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 4 or grid.shape != values.shape:
            raise DomainError("grid and values must be matching 1-d arrays, >= 4 points")
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
            raise DomainError("grid must start at 0 and increase strictly")
        if values[0] != 0.0:
            raise DomainError("gamma(0) must vanish")
        if np.any(values < 0.0):
            raise DomainError("gamma must be non-negative")
        self.grid = grid
        self.values = values
        # gamma/omega with the omega -> 0 limit gamma'(0) = first-segment slope
        ratio = np.empty_like(values)
        ratio[1:] = values[1:] / grid[1:]
        ratio[0] = values[1] / grid[1]
        self._ratio = ratio
        self._ratio_slope = np.gradient(ratio, grid)
        self._pv_nodes = int(pv_nodes)
        self._pv_cache: tuple[np.ndarray, np.ndarray] | None = None
        self._static: float | None = None

    def gamma(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.interp(omega, self.grid, self.values, left=0.0, right=0.0)

    def gamma_over_omega(self, omega):
        omega = np.asarray(omega, dtype=float)
        return np.interp(omega, self.grid, self._ratio, left=self._ratio[0], right=0.0)

    def _pv_rule(self):
        if self._pv_cache is None:
            from ._panels import panel_nodes

            edges = np.linspace(0.0, self.grid[-1], self._pv_nodes // 24 + 1)
            self._pv_cache = panel_nodes(edges)
        return self._pv_cache

    @property
    def static_shift(self) -> float:
        if self._static is None:
            x, w = self._pv_rule()
            self._static = -float(np.sum(w * self.gamma_over_omega(x)))
        return self._static

    def continuation(self, z):
        z = complex(z)
        wm = self.grid[-1]

        def f_re(x):
            return np.real(x * self.gamma(x) / (z * z - x * x))

        def f_im(x):
            return np.imag(x * self.gamma(x) / (z * z - x * x))

        re = im = 0.0
        for a, b in zip(self.grid[:-1:8], np.r_[self.grid[8::8], wm]):
            re += quad(f_re, a, b, limit=200)[0]
            im += quad(f_im, a, b, limit=200)[0]
        return complex(re, im)

    def boundary(self, omega):
        """Gamma(omega + i0+) for real omega >= 0, vectorized."""
        shape = np.shape(omega)
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        x, w = self._pv_rule()
        hx = self.gamma_over_omega(x)
        wm = self.grid[-1]
        h_t = self.gamma_over_omega(omega) * (omega <= wm)
        dh_t = np.interp(omega, self.grid, self._ratio_slope, right=0.0) * (omega <= wm)
        re = np.empty_like(omega)
        chunk = 512
        for i0 in range(0, omega.size, chunk):
            om = omega[i0 : i0 + chunk, None]
            diff = om - x[None, :]
            near = np.abs(diff) < 1e-9 * wm
            ker = np.where(near, 0.0, (hx[None, :] - h_t[i0 : i0 + chunk, None]) / np.where(near, 1.0, diff))
            ker = np.where(near, -dh_t[i0 : i0 + chunk, None], ker)
            pv = ker @ w
            pv += h_t[i0 : i0 + chunk] * (
                np.log(np.maximum(omega[i0 : i0 + chunk], 1e-300))
                - np.log(np.maximum(np.abs(wm - omega[i0 : i0 + chunk]), 1e-300))
            )
            plus = ((hx[None, :] / (om + x[None, :])) @ w)
            re[i0 : i0 + chunk] = 0.5 * omega[i0 : i0 + chunk] * (pv + plus)
        re += self.static_shift
        out = re - 0.5j * np.pi * self.gamma(omega)
        return out.reshape(shape)

    @property
    def tail_coefficient(self) -> float:
        return 0.0

    @property
    def frequency_scale(self) -> float:
        # friction-weighted mean frequency int gamma / int gamma/omega;
        # robust against slowly decaying tails that would skew a plain
        # gamma-weighted mean
        x, w = self._pv_rule()
        g = self.gamma(x)
        denom = np.sum(w * self.gamma_over_omega(x))
        if denom <= 0.0:
            return self.grid[-1]
        return float(np.sum(w * g) / denom)

    @property
    def support_max(self) -> float:
        return float(self.grid[-1])


def gamma_eval(density, omega):
    """gamma(omega) for omega >= 0 (vectorized)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise DomainError("omega must be non-negative")
    return density.gamma(omega)


def gamma_continuation(density, z):
    """Gamma(z) in the upper half plane; raises DomainError for Im z <= 0."""
    z = complex(z)
    if z.imag <= 0.0:
        raise DomainError("continuation requires Im z > 0")
    return complex(np.asarray(density.continuation(z)).item())


@dataclass
class PoleScanReport:
    passed: bool
    min_abs_denominator: float
    omega_at_min: float
    threshold: float
    real_zeros: list[float] = field(default_factory=list)

    def __str__(self):
        if self.passed:
            return (
                f"pole scan passed: min |denominator| = {self.min_abs_denominator:.3e} "
                f"at omega = {self.omega_at_min:.6g}"
            )
        locs = ", ".join(f"{w:.6g}" for w in self.real_zeros) or f"{self.omega_at_min:.6g}"
        return f"pole scan FAILED near omega = {locs} (min |den| = {self.min_abs_denominator:.3e})"


class Susceptibility:
    """F(z) = 1 / (omega0^2 - shift - z^2 + sum_a Gamma_a(z)).

    shift = sum_a Gamma_a(i0+) removes the dependence on the constant offset
    between equivalent continuation conventions.
    """

    def __init__(
        self,
        omega0: float,
        densities,
        omega_max: float | None = None,
        scan_points: int = 10_000,
        pole_threshold: float = 1e-6,
    ):
        if omega0 <= 0.0:
            raise DomainError("omega0 must be positive")
        self.omega0 = float(omega0)
        self.densities = tuple(densities)
        scale = max([self.omega0] + [d.frequency_scale for d in self.densities])
        self.omega_max = float(omega_max) if omega_max else 100.0 * scale
        self.scan_points = int(scan_points)
        self.pole_threshold = float(pole_threshold)
        self.static_shift = float(sum(d.static_shift for d in self.densities))
        self._scan: PoleScanReport | None = None
        self._resonance: tuple[float, float] | None = None

    def gamma_total(self, omega):
        omega = np.asarray(omega, dtype=float)
        tot = np.zeros_like(omega)
        for d in self.densities:
            tot = tot + d.gamma(omega)
        return tot

    def denominator(self, omega):
        """omega0^2 - shift - omega^2 + sum Gamma_a(omega + i0+), omega >= 0."""
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0.0):
            raise DomainError("omega must be non-negative")
        den = (self.omega0**2 - self.static_shift - omega**2).astype(complex)
        for d in self.densities:
            den = den + d.boundary(omega)
        return den

    def denominator_z(self, z):
        z = complex(z)
        den = self.omega0**2 - self.static_shift - z * z
        for d in self.densities:
            den += complex(np.asarray(d.continuation(z)).item())
        return den

    def eval(self, omega):
        """F(omega + i0+); raises PoleError if the denominator is resolved zero."""
        den = self.denominator(omega)
        bad = np.abs(den) < self.pole_threshold
        if np.any(bad):
            w = np.atleast_1d(np.asarray(omega, dtype=float))[np.atleast_1d(bad)][0]
            raise PoleError(f"susceptibility pole at omega = {w:.6g}")
        return 1.0 / den

    def pole_scan(self) -> PoleScanReport:
        """Grid scan of |denominator| plus sign-change refinement of Re."""
        if self._scan is not None:
            return self._scan
        grid = np.linspace(self.omega_max / self.scan_points, self.omega_max, self.scan_points)
        den = self.denominator(grid)
        absd = np.abs(den)
        imin = int(absd.argmin())
        zeros: list[float] = []
        # a true real-axis pole needs Re to cross zero where Im is negligible
        im_floor = 1e-10 * max(1.0, float(np.abs(den).max()))
        re, im = den.real, den.imag
        sgn = np.signbit(re)
        for i in np.nonzero(sgn[1:] != sgn[:-1])[0]:
            if abs(im[i]) < im_floor and abs(im[i + 1]) < im_floor:
                a, b = grid[i], grid[i + 1]
                fa = re[i]
                for _ in range(60):
                    m = 0.5 * (a + b)
                    fm = self.denominator(m).real
                    if np.signbit(fm) == np.signbit(fa):
                        a, fa = m, fm
                    else:
                        b = m
                zeros.append(0.5 * (a + b))
        passed = absd[imin] > self.pole_threshold and not zeros
        self._scan = PoleScanReport(
            passed=bool(passed),
            min_abs_denominator=float(absd[imin]),
            omega_at_min=float(grid[imin]),
            threshold=self.pole_threshold,
            real_zeros=zeros,
        )
        return self._scan

    def resonance(self) -> tuple[float, float]:
        """(peak frequency, half width) of |F|^2, for grid refinement."""
        if self._resonance is None:
            grid = np.linspace(self.omega_max / 4000, 4.0 * self.omega0, 4000)
            den = self.denominator(grid)
            i = int(np.abs(den).argmin())
            lo, hi = grid[max(i - 2, 0)], grid[min(i + 2, grid.size - 1)]
            from scipy.optimize import minimize_scalar

            r = minimize_scalar(
                lambda w: float(np.abs(self.denominator(float(w)))), bounds=(lo, hi), method="bounded"
            )
            w_hat = float(r.x)
            hw = abs(self.denominator(w_hat).imag) / (2.0 * w_hat) if w_hat > 0 else 0.0
            self._resonance = (w_hat, max(hw, 1e-6 * self.omega0))
        return self._resonance


def susceptibility_eval(susc: Susceptibility, omega):
    """F(omega + i0+) on the real axis (omega >= 0)."""
    return susc.eval(omega)


def pole_scan(susc: Susceptibility) -> PoleScanReport:
    return susc.pole_scan()


class ClassicalResponse:
    """u(t), its first two derivatives, and its (partial) Fourier transforms.

    Built by sine/cosine transforms of Im F on a uniform frequency grid
    (spectrally accurate: F is analytic in a strip of width = the resonance
    decay rate), with analytic corrections for the truncated high-frequency
    tail Im F ~ (pi/2) c_gamma / omega^5, c_gamma = lim omega gamma_total.
    """

    def __init__(self, susc: Susceptibility, n_freq: int = 2**18):
        report = susc.pole_scan()
        if not report.passed:
            raise PoleScanError(str(report))
        self.susceptibility = susc
        self.n_freq = int(n_freq)
        W = susc.omega_max
        dw = W / self.n_freq
        w = np.arange(1, self.n_freq) * dw
        den = susc.denominator(w)
        g = np.imag(1.0 / den)
        self._im_f = g
        self._w = w
        dt = np.pi / W
        t_in = np.arange(1, self.n_freq) * dt
        t_full = np.arange(0, self.n_freq + 1) * dt
        c_tail = (np.pi / 2.0) * float(sum(d.tail_coefficient for d in susc.densities))

        u = (2.0 / np.pi) * dw * _fft.dst(g, type=1) / 2.0
        du_in = np.concatenate([[0.0], w * g, [W * np.imag(1.0 / susc.denominator(W))]])
        du = (2.0 / np.pi) * dw * _fft.dct(du_in, type=1) / 2.0
        ddu = -(2.0 / np.pi) * dw * _fft.dst(w * w * g, type=1) / 2.0
        if c_tail > 0.0:
            a = W * t_in
            i5s, _ = sin_cos_tails(5, a)
            u += (2.0 / np.pi) * c_tail * t_in**4 * i5s
            i3s, _ = sin_cos_tails(3, a)
            ddu -= (2.0 / np.pi) * c_tail * t_in**2 * i3s
            _, i4c = sin_cos_tails(4, np.maximum(W * t_full, 1e-12))
            corr = (2.0 / np.pi) * c_tail * t_full**3 * i4c
            corr[0] = (2.0 / np.pi) * c_tail / (3.0 * W**3)
            du += corr

        self.dt = dt
        self.t_max = float(t_in[-1])
        tu = np.concatenate([[0.0], t_in])
        self._u_spline = CubicSpline(tu, np.concatenate([[0.0], u]))
        self._du_spline = CubicSpline(t_full, du)
        self._ddu_spline = CubicSpline(tu, np.concatenate([[0.0], ddu]))
        self.initial_slope = float(du[0])

        # decimated spline for the oscillatory product integration
        scale = max(susc.omega0, max(d.frequency_scale for d in susc.densities))
        stride = max(1, int(round(0.22 / (scale * dt))))
        tg = np.concatenate([[0.0], t_in[stride - 1 :: stride]])
        ug = np.concatenate([[0.0], u[stride - 1 :: stride]])
        fspl = CubicSpline(tg, ug)
        self._oscillator = SplineOscillator(fspl.c, float(tg[1] - tg[0]))

    def u(self, t):
        return self._eval(self._u_spline, t)

    def udot(self, t):
        return self._eval(self._du_spline, t)

    def uddot(self, t):
        return self._eval(self._ddu_spline, t)

    def _eval(self, spl, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.t_max):
            raise DomainError(f"t must lie in [0, {self.t_max:.6g}]")
        return spl(t)

    def propagator(self, t):
        """2x2 matrix [[udot, u], [uddot, udot]] mapping (Q, P) moments."""
        return np.array([[self.udot(t), self.u(t)], [self.uddot(t), self.udot(t)]])

    def full_ft(self, omega):
        """u(omega) = int_0^inf u(t) e^{-i omega t} dt = conj F(omega + i0+)."""
        return np.conjugate(self.susceptibility.eval(omega))

    def partial_ft(self, t, omega):
        """Partial transforms (u(t, omega), v(t, omega)) with

        u(t, omega) = e^{i omega t} int_0^t u(tau) e^{-i omega tau} dtau,
        v(t, omega) = u(t) + i omega u(t, omega) = d/dt u(t, omega).

        Im v = omega Re u exactly; both tend to full_ft-derived limits.
        """
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        up = self.partial_ft_batch(np.array([float(t)]), omega)[0]
        v = self.u(float(t)) + 1j * omega * up
        if up.size > 1:
            return up, v
        return complex(up[0]), complex(v[0])

    def partial_ft_batch(self, times, omega):
        """u(t_i, omega_j) for ascending times; one cumulative pass."""
        times = np.asarray(times, dtype=float)
        omega = np.asarray(omega, dtype=float)
        J = self._oscillator.transforms(times, omega)
        return np.exp(1j * np.outer(times, omega)) * J


def classical_u(susc: Susceptibility, times=None, n_freq: int = 2**18) -> ClassicalResponse:
    """Build the response function for a scanned susceptibility.

    When a time grid is given, u and its first two derivatives are sampled
    on it and stored on the returned object (times, u_values, udot_values,
    uddot_values) for direct serialization.
    """
    resp = ClassicalResponse(susc, n_freq=n_freq)
    if times is not None:
        times = np.asarray(times, dtype=float)
        resp.times = times
        resp.u_values = resp.u(times)
        resp.udot_values = resp.udot(times)
        resp.uddot_values = resp.uddot(times)
    return resp


def partial_ft(response: ClassicalResponse, t, omega):
    return response.partial_ft(t, omega)


def full_ft(response: ClassicalResponse, omega):
    return response.full_ft(omega)
