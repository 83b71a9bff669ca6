"""Oscillatory tail integrals I_n(a) = int_a^inf trig(x)/x^n dx.

Used to correct the finite-band truncation of the response-function
transforms.  Two regimes:

* a < 30: downward use of Si/Ci plus the stable two-term recursion
      I_n^sin = (sin a / a^{n-1} + I_{n-1}^cos) / (n-1)
      I_n^cos = (cos a / a^{n-1} - I_{n-1}^sin) / (n-1)
* a >= 30: integration-by-parts asymptotic series.  The recursion is
  catastrophically ill-conditioned there (pi/2 - Si(a) loses all digits),
  and the callers multiply by powers of t that amplify the noise.
"""
from __future__ import annotations

import numpy as np
from scipy.special import sici

_SPLIT = 30.0


def sin_cos_tails(n: int, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (int_a^inf sin(x)/x^n dx, int_a^inf cos(x)/x^n dx) elementwise.

    Requires a > 0.
    """
    a = np.asarray(a, dtype=float)
    Is = np.empty_like(a)
    Ic = np.empty_like(a)
    small = a < _SPLIT
    if small.any():
        s = a[small]
        si, ci = sici(s)
        js, jc = np.pi / 2.0 - si, -ci
        for m in range(2, n + 1):
            js, jc = (
                (np.sin(s) / s ** (m - 1) + jc) / (m - 1),
                (np.cos(s) / s ** (m - 1) - js) / (m - 1),
            )
        Is[small], Ic[small] = js, jc
    big = ~small
    if big.any():
        b = a[big]
        cb, sb = np.cos(b), np.sin(b)
        n1, n2, n3 = n * (n + 1), n * (n + 1) * (n + 2), n * (n + 1) * (n + 2) * (n + 3)
        Is[big] = (
            cb / b**n + n * sb / b ** (n + 1) - n1 * cb / b ** (n + 2)
            - n2 * sb / b ** (n + 3) + n3 * cb / b ** (n + 4)
        )
        Ic[big] = (
            -sb / b**n + n * cb / b ** (n + 1) + n1 * sb / b ** (n + 2)
            - n2 * cb / b ** (n + 3) - n3 * sb / b ** (n + 4)
        )
    return Is, Ic
