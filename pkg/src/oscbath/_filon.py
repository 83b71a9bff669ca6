"""Product integration of a cubic-spline interpolant against e^{-i omega t}.

Given the piecewise-cubic representation of a smooth real function f on a
uniform grid, computes

    J(t, omega) = int_0^t f(tau) e^{-i omega tau} d tau

for batches of (sorted) times and frequency vectors in a single cumulative
pass over the spline cells.  Per cell the monomial moments

    m_k(omega, h) = int_0^h s^k e^{-i omega s} ds,   k = 0..3

are exact, so the quadrature error is the spline interpolation error alone
(~ h^4 max|f''''| / 384 per unit time), independent of omega.
"""
from __future__ import annotations

import numpy as np

_SERIES_CUT = 0.5
_SERIES_TERMS = 19


def cell_moments(omega: np.ndarray, h: float) -> np.ndarray:
    """Moments m_k(omega, h), k = 0..3, shape (4, len(omega)).

    Upward recursion m_k = (k m_{k-1} - h^k e^{-i omega h}) / (i omega) for
    |omega h| >= 0.5, Taylor series below (the recursion divides by omega).
    """
    omega = np.asarray(omega, dtype=float)
    m = np.empty((4, omega.size), dtype=complex)
    z = np.abs(omega * h)
    big = z >= _SERIES_CUT
    if big.any():
        o = omega[big]
        e = np.exp(-1j * o * h)
        mk = (1.0 - e) / (1j * o)
        m[0, big] = mk
        hk = 1.0
        for k in range(1, 4):
            hk *= h
            mk = (k * mk - hk * e) / (1j * o)
            m[k, big] = mk
    small = ~big
    if small.any():
        o = omega[small]
        for k in range(4):
            acc = np.zeros(o.size, dtype=complex)
            term = np.ones(o.size, dtype=complex)
            for j in range(_SERIES_TERMS):
                acc += term / (k + j + 1)
                term = term * (-1j * o * h) / (j + 1)
            m[k, small] = acc * h ** (k + 1)
    return m


class SplineOscillator:
    """Cumulative evaluator of J(t, omega) over a fixed cell decomposition.

    Parameters
    ----------
    coeffs : (4, ncells) array
        Local cubic coefficients, highest power first (scipy CubicSpline
        layout): f(x_j + s) = c0 s^3 + c1 s^2 + c2 s + c3.
    h : float
        Uniform cell width.
    """

    def __init__(self, coeffs: np.ndarray, h: float):
        self.c = np.ascontiguousarray(coeffs)
        self.h = float(h)
        self.t_max = self.c.shape[1] * self.h

    def transforms(self, times: np.ndarray, omega: np.ndarray) -> np.ndarray:
        """J(t_i, omega_j) for sorted times; shape (len(times), len(omega))."""
        times = np.asarray(times, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if times.size and (times[0] < 0.0 or times[-1] > self.t_max + 1e-9):
            raise ValueError(f"time outside spline support [0, {self.t_max:g}]")
        if np.any(np.diff(times) < 0.0):
            raise ValueError("times must be sorted ascending")
        m = cell_moments(omega, self.h)
        c = self.c
        out = np.empty((times.size, omega.size), dtype=complex)
        S = np.zeros(omega.size, dtype=complex)
        eh = np.exp(-1j * omega * self.h)
        ph = np.ones(omega.size, dtype=complex)
        jprev = 0
        for i, t in enumerate(times):
            J = min(int(np.floor(t / self.h + 1e-12)), c.shape[1])
            for j in range(jprev, J):
                S += ph * (c[3, j] * m[0] + c[2, j] * m[1] + c[1, j] * m[2] + c[0, j] * m[3])
                ph = ph * eh
            jprev = J
            delta = t - J * self.h
            if delta > 1e-12 and J < c.shape[1]:
                mp = cell_moments(omega, delta)
                out[i] = S + ph * (
                    c[3, J] * mp[0] + c[2, J] * mp[1] + c[1, J] * mp[2] + c[0, J] * mp[3]
                )
            else:
                out[i] = S
        return out
