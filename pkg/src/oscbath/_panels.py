"""Composite Gauss-Legendre frequency grids.

Deterministic fixed grids for spectral integrals whose integrands oscillate
like e^{i omega t} (panel width tied to the oscillation period) and carry a
narrow resonance peak (locally refined panels).
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

_GL_ORDER = 24
# a 24-node rule resolves ~48/(2 pi) wavelengths; stay at 4 per panel
_WAVES_PER_PANEL = 4.0


def panel_nodes(edges: np.ndarray, order: int = _GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on each [edges[i], edges[i+1]] panel."""
    x, w = leggauss(order)
    nodes, wts = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        if half <= 0.0:
            continue
        nodes.append(half * x + 0.5 * (a + b))
        wts.append(half * w)
    return np.concatenate(nodes), np.concatenate(wts)


def oscillatory_grid(
    omega_max: float,
    time_scale: float,
    refine_center: float | None = None,
    refine_halfwidth: float = 0.0,
    refine_cell: float = 0.0,
    windows: list[tuple[float, float, float]] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, omega_max] resolving oscillation e^{i omega t}.

    Panel width = _WAVES_PER_PANEL full periods of the fastest phase
    (time_scale), clamped to a fraction of the band.  Optional refinement
    carves [center - hw, center + hw] into cells of width refine_cell;
    windows = [(lo, hi, cell), ...] add plain cell subdivisions (used for
    declared kernel-support boxes, which need resolution even when the
    oscillation panels are wide).
    """
    width = 2.0 * np.pi * _WAVES_PER_PANEL / max(abs(time_scale), 1e-9)
    width = min(width, omega_max / 4.0)
    edges = set(np.arange(0.0, omega_max, width).tolist())
    edges.add(omega_max)
    for lo, hi, cell in windows or ():
        lo = max(float(lo), 0.0)
        hi = min(float(hi), omega_max)
        if hi > lo and cell > 0.0:
            edges |= set(np.arange(lo, hi, min(cell, width)).tolist())
            edges.add(hi)
    if refine_center is not None and refine_halfwidth > 0.0 and refine_cell > 0.0:
        lo = max(refine_center - refine_halfwidth, 0.0)
        hi = min(refine_center + refine_halfwidth, omega_max)
        cell = min(refine_cell, width)
        edges |= set(np.arange(lo, hi, cell).tolist())
        edges.add(hi)
        # geometric grading away from the refined window, so the transition
        # back to oscillation-limited panels never jumps straight from
        # `cell` to `width` across the resonance shoulders
        step, x = cell, hi
        while x < omega_max:
            step = min(2.0 * step, width)
            x = min(x + step, omega_max)
            edges.add(x)
        step, x = cell, lo
        while x > 0.0:
            step = min(2.0 * step, width)
            x = max(x - step, 0.0)
            edges.add(x)
    e = np.array(sorted(edges))
    e = e[(e >= 0.0) & (e <= omega_max + 1e-12)]
    nodes, wts = panel_nodes(e)
    order = np.argsort(nodes)
    return nodes[order], wts[order]
