"""Exact Gaussian dynamics of a damped oscillator coupled to structured baths.

Submodules
----------
spectral      damping kernels, analytic continuation, susceptibility, response
preparations  Gaussian bath preparations (thermal / squeezed / displaced / custom)
correlations  stationary and finite-time position correlations, FDT reports
genfunc       moment propagation and the position generating function
transport     steady currents and full counting statistics (two baths)
noise         induced-noise kernels, means, and two-time correlations
oracle        finite-mode normal-mode oracle for brute-force cross checks
cli           configuration-driven runs (`oscbath run/validate`)

Submodules are imported on first attribute access so that the command line
front end can configure threading before numpy is loaded.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "spectral",
    "preparations",
    "correlations",
    "genfunc",
    "transport",
    "noise",
    "oracle",
    "cli",
    "scenario",
    "errors",
)


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
