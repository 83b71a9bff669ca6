"""Command line front end: configuration-driven runs with tabular output.

Two subcommands::

    oscbath run      <config.json>   execute one task, write CSV + manifest
    oscbath validate <config.json>   schema + physics checks, no task run

Configuration is JSON with a versioned schema::

    {
      "schema_version": 1,
      "scenario": {
        "omega0": 1.0,
        "baths": [
          {"density": {"kind": "drude", "coupling": 0.05, "cutoff": 10.0},
           "preparation": {"kind": "thermal", "temperature": 2.0},
           "label": "left"},
          {"density": {"kind": "drude", "coupling": 0.05, "cutoff": 10.0},
           "preparation": {"kind": "thermal", "temperature": 1.0},
           "label": "right"}
        ],
        "central": {"var_q": 0.5, "var_p": 0.5},      // optional
        "omega_max": null,                             // optional override
        "n_freq": 262144                               // optional override
      },
      "task": {"name": "fdt"},       // exactly one task per run
      "grids": {"frequency": {"start": 0.1, "stop": 5.0, "points": 200}},
      "tolerances": {"fdt_identity": 1e-10},
      "output": "s0_fdt"             // artifact stem, default = task name
    }

Tasks: fdt | correlations | zq | current | cgf | noise | oracle-compare.
current and cgf are transport tasks and require exactly two baths.

Density kinds: "drude" {coupling, cutoff} and "tabulated" {grid, values}.
Preparation kinds: "thermal" {temperature}, "squeezed" {temperature,
squeeze}, "displaced" {temperature, displacement_q?, displacement_p?} where
displacements are [grid, values] tables, and "custom" {sigma_qq, sigma_pp,
sigma_qp?, mean_q?, mean_p?} as tables.  Two-frequency sigma2 kernels are
API-only (callables cannot ride in JSON).

Defaults (every entry can be overridden per run; grid units are set by
omega0 = 1 in the configuration's own unit system):

    grid       default                        used by
    ---------  -----------------------------  --------------------------
    frequency  [0.1, 5.0] x omega0, 200 pts   fdt
    time       [0.0, 50.0], 201 pts           zq, noise, oracle-compare
    lag        [0.0, 8.0], 81 pts             correlations, noise, oracle-compare
    xi         [-2.0, 2.0], 81 pts            zq, cgf

    tolerance            default   checked by
    -------------------  --------  -----------------------------------
    fdt_identity         1e-10     fdt: shared-factor identity residual
    equilibrium_fdt      1e-8      fdt: thermal equal-T reduction
    identity             1e-10     correlations/current zero identities
    two_path             1e-6      correlations: Psi(0) vs covariance
    reflection           1e-12     zq: Z_Q(-xi + iA) = Z_Q(xi)
    cumulant_match       1e-6      cgf: ring cumulants vs closed forms
    stationarity         1e-3      noise: S(t, t+s) vs stationary limit
    oracle_rel           1e-3      oracle-compare: u / Sigma / Psi sup-norm
    oracle_current_rel   2e-2      oracle-compare: current plateau

    task knob      default  meaning
    -------------  -------  ----------------------------------------
    bath_index     0        noise: which bath's kernel set
    surface_times  8        noise: t-slices in the (t, s, S) surface
    n_modes        300      oracle-compare: modes per bath
    t_ref          60.0     oracle-compare: two-time comparison time
    temperature    (right)  current: expansion point for the linear
                            response coefficient (thermal pairs)

Exit codes: 0 success, 2 configuration error (message names the offending
field or frequency), 3 numerical tolerance failure, 4 pole-scan failure.

Outputs land in --output-dir as <stem>.<artifact>.csv plus
<stem>.manifest.json.  The manifest echoes the configuration, the library
version, the resolved defaults, and the ACHIEVED residual of every built-in
identity next to its requested tolerance.  Runs are deterministic: fixed
quadrature orders, no randomness (--seed is accepted, recorded, and unused),
no wall-clock anywhere in the artifacts, CSV floats at 17 significant
digits.  --threads caps BLAS/OpenMP pools and must act before numpy loads,
which is why this module defers all numerical imports into main().
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["main", "load_config", "RunConfig"]

SCHEMA_VERSION = 1

TASKS = ("fdt", "correlations", "zq", "current", "cgf", "noise", "oracle-compare")
TRANSPORT_TASKS = ("current", "cgf")

GRID_DEFAULTS = {
    "frequency": {"start": 0.1, "stop": 5.0, "points": 200},
    "time": {"start": 0.0, "stop": 50.0, "points": 201},
    "lag": {"start": 0.0, "stop": 8.0, "points": 81},
    "xi": {"start": -2.0, "stop": 2.0, "points": 81},
}

TOLERANCE_DEFAULTS = {
    "fdt_identity": 1e-10,
    "equilibrium_fdt": 1e-8,
    "identity": 1e-10,
    "two_path": 1e-6,
    "reflection": 1e-12,
    "cumulant_match": 1e-6,
    "stationarity": 1e-3,
    "oracle_rel": 1e-3,
    "oracle_current_rel": 2e-2,
}

TASK_KNOBS = {
    "fdt": (),
    "correlations": (),
    "zq": (),
    "current": ("temperature",),
    "cgf": (),
    "noise": ("bath_index", "surface_times"),
    "oracle-compare": ("n_modes", "t_ref", "omega_max", "split"),
}


class _ConfigProblem(Exception):
    """Internal marker: configuration rejected before numerics started."""


@dataclass(frozen=True)
class RunConfig:
    scenario: dict
    task: str
    task_params: dict
    grids: dict
    tolerances: dict
    output: str
    raw: dict = field(repr=False, default_factory=dict)


def _fail(fieldpath: str, message: str) -> "_ConfigProblem":
    return _ConfigProblem(f"{fieldpath}: {message}")


def _require(mapping, key, fieldpath, kind=None):
    if not isinstance(mapping, dict) or key not in mapping:
        raise _fail(fieldpath, f"missing required field '{key}'")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise _fail(f"{fieldpath}.{key}", f"expected {kind.__name__}")
    return value


def _number(value, fieldpath, positive=False, nonnegative=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(fieldpath, "expected a number")
    v = float(value)
    if positive and not v > 0.0:
        raise _fail(fieldpath, f"must be positive (got {v!r})")
    if nonnegative and v < 0.0:
        raise _fail(fieldpath, f"must be non-negative (got {v!r})")
    return v


def _check_keys(block: dict, allowed, fieldpath: str) -> None:
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise _fail(fieldpath, f"unknown field(s) {extra}; allowed: {sorted(allowed)}")


def load_config(path) -> RunConfig:
    """Parse and schema-check a config file (no numerics touched)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _fail(str(path), f"cannot read config: {exc}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(str(path), f"invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise _fail("<config>", "top level must be a JSON object")
    _check_keys(raw, {"schema_version", "scenario", "task", "grids",
                      "tolerances", "output"}, "<config>")
    version = _require(raw, "schema_version", "<config>")
    if version != SCHEMA_VERSION:
        raise _fail("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")

    scen = _require(raw, "scenario", "<config>", dict)
    _check_keys(scen, {"omega0", "baths", "central", "omega_max", "n_freq"},
                "scenario")
    _number(_require(scen, "omega0", "scenario"), "scenario.omega0", positive=True)
    baths = _require(scen, "baths", "scenario", list)
    if not baths:
        raise _fail("scenario.baths", "at least one bath is required")
    for i, bath in enumerate(baths):
        where = f"scenario.baths[{i}]"
        if not isinstance(bath, dict):
            raise _fail(where, "each bath must be an object")
        _check_keys(bath, {"density", "preparation", "label"}, where)
        _check_density(_require(bath, "density", where, dict), f"{where}.density")
        _check_preparation(_require(bath, "preparation", where, dict),
                           f"{where}.preparation")
    if "central" in scen and scen["central"] is not None:
        central = scen["central"]
        if not isinstance(central, dict):
            raise _fail("scenario.central", "must be an object")
        _check_keys(central, {"var_q", "var_p", "cov_qp", "mean_q", "mean_p"},
                    "scenario.central")
        _number(_require(central, "var_q", "scenario.central"),
                "scenario.central.var_q", positive=True)
        _number(_require(central, "var_p", "scenario.central"),
                "scenario.central.var_p", positive=True)
    if scen.get("omega_max") is not None:
        _number(scen["omega_max"], "scenario.omega_max", positive=True)
    if scen.get("n_freq") is not None:
        n_freq = scen["n_freq"]
        if not isinstance(n_freq, int) or n_freq < 2**10:
            raise _fail("scenario.n_freq", "expected an integer >= 1024")

    task_block = _require(raw, "task", "<config>", dict)
    name = _require(task_block, "name", "task")
    if name not in TASKS:
        raise _fail("task.name", f"unknown task {name!r}; one of {list(TASKS)}")
    params = {k: v for k, v in task_block.items() if k != "name"}
    _check_keys(params, TASK_KNOBS[name], "task")
    if name in TRANSPORT_TASKS and len(baths) != 2:
        raise _fail("task.name", "transport requires exactly two baths")

    grids = raw.get("grids", {})
    if not isinstance(grids, dict):
        raise _fail("grids", "must be an object")
    _check_keys(grids, GRID_DEFAULTS, "grids")
    resolved_grids = {}
    for gname, default in GRID_DEFAULTS.items():
        block = grids.get(gname, {})
        if not isinstance(block, dict):
            raise _fail(f"grids.{gname}", "must be an object")
        _check_keys(block, {"start", "stop", "points"}, f"grids.{gname}")
        spec = dict(default, **block)
        start = _number(spec["start"], f"grids.{gname}.start")
        stop = _number(spec["stop"], f"grids.{gname}.stop")
        points = spec["points"]
        if not isinstance(points, int) or points < 2:
            raise _fail(f"grids.{gname}.points", "expected an integer >= 2")
        if not stop > start:
            raise _fail(f"grids.{gname}", "stop must exceed start")
        resolved_grids[gname] = {"start": start, "stop": stop, "points": points}
    if name == "fdt" and resolved_grids["frequency"]["start"] <= 0.0:
        raise _fail("grids.frequency.start", "fdt needs strictly positive frequencies")

    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict):
        raise _fail("tolerances", "must be an object")
    _check_keys(tols, TOLERANCE_DEFAULTS, "tolerances")
    resolved_tols = dict(TOLERANCE_DEFAULTS)
    for key, value in tols.items():
        resolved_tols[key] = _number(value, f"tolerances.{key}", positive=True)

    output = raw.get("output", name.replace("-", "_"))
    if not isinstance(output, str) or not output or "/" in output or "\\" in output:
        raise _fail("output", "expected a plain file stem (no path separators)")

    return RunConfig(scenario=scen, task=name, task_params=params,
                     grids=resolved_grids, tolerances=resolved_tols,
                     output=output, raw=raw)


def _check_density(block: dict, where: str) -> None:
    kind = _require(block, "kind", where)
    if kind == "drude":
        _check_keys(block, {"kind", "coupling", "cutoff"}, where)
        _number(_require(block, "coupling", where), f"{where}.coupling",
                nonnegative=True)
        _number(_require(block, "cutoff", where), f"{where}.cutoff", positive=True)
    elif kind == "tabulated":
        _check_keys(block, {"kind", "grid", "values"}, where)
        grid = _require(block, "grid", where, list)
        values = _require(block, "values", where, list)
        if len(grid) != len(values) or len(grid) < 4:
            raise _fail(where, "grid and values must match, length >= 4")
    else:
        raise _fail(f"{where}.kind", f"unknown density kind {kind!r}")


_PREP_FIELDS = {
    "thermal": {"temperature"},
    "squeezed": {"temperature", "squeeze"},
    "displaced": {"temperature", "displacement_q", "displacement_p"},
    "custom": {"sigma_qq", "sigma_pp", "sigma_qp", "mean_q", "mean_p"},
}


def _check_preparation(block: dict, where: str) -> None:
    kind = _require(block, "kind", where)
    if kind not in _PREP_FIELDS:
        raise _fail(f"{where}.kind", f"unknown preparation kind {kind!r}")
    _check_keys(block, _PREP_FIELDS[kind] | {"kind"}, where)
    if kind in ("thermal", "squeezed", "displaced"):
        _number(_require(block, "temperature", where), f"{where}.temperature",
                nonnegative=True)


# ---------------------------------------------------------------------------
# Everything below touches numpy and runs only after main() fixed the env.
# ---------------------------------------------------------------------------


def _build_scenario(cfg: RunConfig):
    from .preparations import make_preparation
    from .scenario import Bath, CentralState, Scenario
    from .spectral import DrudeOhmic, Tabulated

    baths = []
    for i, block in enumerate(cfg.scenario["baths"]):
        dblock = dict(block["density"])
        kind = dblock.pop("kind")
        if kind == "drude":
            density = DrudeOhmic(dblock["coupling"], dblock["cutoff"])
        else:
            density = Tabulated(dblock["grid"], dblock["values"])
        pblock = dict(block["preparation"])
        prep = make_preparation(pblock.pop("kind"), pblock)
        baths.append(Bath(density, prep, label=block.get("label", f"bath{i}")))
    central = None
    if cfg.scenario.get("central") is not None:
        central = CentralState(**cfg.scenario["central"])
    return Scenario(
        omega0=cfg.scenario["omega0"],
        baths=baths,
        central=central,
        omega_max=cfg.scenario.get("omega_max"),
        n_freq=cfg.scenario.get("n_freq", 2**18),
    )


def _grid(cfg: RunConfig, name: str):
    import numpy as np

    g = cfg.grids[name]
    return np.linspace(g["start"], g["stop"], g["points"])


def _fmt(value) -> str:
    # 17 significant digits, scientific, RFC-4180-friendly '.' separator
    return f"{float(value):.16e}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


class _Identities:
    """Collects named residuals and their requested tolerances."""

    def __init__(self, tolerances: dict):
        self.tolerances = tolerances
        self.entries: dict[str, dict] = {}

    def check(self, name: str, achieved: float, tol_key: str) -> None:
        tol = float(self.tolerances[tol_key])
        self.entries[name] = {
            "achieved": float(achieved),
            "tolerance": tol,
            "passed": bool(achieved <= tol),
        }

    def report(self, name: str, value) -> None:
        self.entries[name] = {"achieved": float(value), "tolerance": None,
                              "passed": None}

    def all_passed(self) -> bool:
        return all(e["passed"] is not False for e in self.entries.values())


def _task_fdt(cfg, scen, outdir, ident):
    import numpy as np

    from . import correlations as corr

    omega = _grid(cfg, "frequency")
    report = corr.fdt_check(scen, omega)
    t_eff = corr.effective_temperature(scen, omega)
    ident.check("generalized_fdt_residual", report["residual"], "fdt_identity")

    from .preparations import Thermal

    preps = scen.preparations()
    temps = {p.temperature for p in preps if isinstance(p, Thermal)}
    if len(temps) == 1 and len(preps) == len(scen.baths) and all(
            isinstance(p, Thermal) for p in preps):
        t_equal = temps.pop()
        eq = corr.equilibrium_fdt_residual(scen, omega, t_equal)
        ident.check("equilibrium_fdt_residual", float(np.max(eq)),
                    "equilibrium_fdt")
    dev = corr.coth_family_deviation(scen, omega)
    ident.report("coth_family_deviation", dev)

    path = outdir / f"{cfg.output}.fdt.csv"
    _write_csv(
        path,
        ["omega [omega0]", "psi_spectrum [1/omega0^2]",
         "phi_spectrum_over_i [1/omega0^2]", "effective_energy [omega0]",
         "effective_temperature [omega0]", "fdt_rhs [1/omega0^2]"],
        zip(omega, report["lhs"],
            np.asarray(corr.phi_spectrum(scen, omega)),
            np.asarray(corr.effective_energy(scen, omega)),
            t_eff, report["rhs"]),
    )
    return [path]


def _task_correlations(cfg, scen, outdir, ident):
    import numpy as np

    from . import correlations as corr

    lags = _grid(cfg, "lag")
    res = corr.stationary_correlations(scen, lags)
    cov = corr.stationary_covariance(scen)
    i0 = int(np.argmin(np.abs(lags)))
    if lags[i0] == 0.0:
        ident.check("psi0_vs_covariance_two_path",
                    abs(res.psi_lag[i0] - cov[0, 0]), "two_path")
        ident.check("phi_vanishes_at_zero_lag", abs(res.phi_lag[i0]), "identity")

    labels = [b.label or f"bath{i}" for i, b in enumerate(scen.baths)]
    header = (["lag [1/omega0]", "psi [1/omega0]", "phi [1/omega0]"]
              + [f"psi_{lb} [1/omega0]" for lb in labels]
              + [f"phi_{lb} [1/omega0]" for lb in labels])
    rows = zip(lags, res.psi_lag, res.phi_lag,
               *res.psi_lag_baths, *res.phi_lag_baths)
    lag_path = outdir / f"{cfg.output}.correlations.csv"
    _write_csv(lag_path, header, rows)

    spec_path = outdir / f"{cfg.output}.spectra.csv"
    _write_csv(
        spec_path,
        ["omega [omega0]", "psi_spectrum [1/omega0^2]",
         "phi_spectrum_over_i [1/omega0^2]"],
        zip(res.omega, res.psi_freq, res.phi_freq),
    )
    return [lag_path, spec_path]


def _task_zq(cfg, scen, outdir, ident):
    import numpy as np

    from . import genfunc

    times = _grid(cfg, "time")
    xi = _grid(cfg, "xi")
    states = genfunc.propagate_trajectory(scen, times)
    shifts, residual = [], 0.0
    for state in states:
        shift = genfunc.gc_shift(scen, None, state.time, state=state)
        shifts.append(shift)
        z1 = genfunc.zq(scen, None, xi, state.time, state=state)
        z2 = genfunc.zq(scen, None, -xi + 1j * shift, state.time, state=state)
        residual = max(residual, float(np.max(np.abs(z1 - z2))))
    ident.check("zq_reflection_residual", residual, "reflection")

    path = outdir / f"{cfg.output}.zq.csv"
    _write_csv(
        path,
        ["t [1/omega0]", "mean_q [1/omega0^0.5]", "mean_p [omega0^0.5]",
         "cov_qq [1/omega0]", "cov_qp [1]", "cov_pp [omega0]",
         "reflection_shift [omega0^0.5]"],
        ((s.time, s.mean[0], s.mean[1], s.covariance[0, 0], s.covariance[0, 1],
          s.covariance[1, 1], a) for s, a in zip(states, shifts)),
    )
    return [path]


def _task_current(cfg, scen, outdir, ident):
    from . import transport
    from .preparations import Thermal

    model = transport.TransportModel(scen)
    current = transport.steady_current(model)
    c1 = transport.first_cumulant_rate(model)
    c2 = transport.second_cumulant_rate(model)
    ident.check("current_vs_first_cumulant", abs(current - c1), "identity")
    rows = [
        ("steady_current", current, "omega0^2"),
        ("first_cumulant_rate", c1, "omega0^2"),
        ("second_cumulant_rate", c2, "omega0^3"),
    ]
    aff = transport.affinity(model)
    if isinstance(aff, float):
        rows.append(("affinity", aff, "1/omega0"))
        ident.report("constant_affinity", aff)
    else:
        ident.report("affinity_spread_left", aff["spread_left"])
        ident.report("affinity_spread_right", aff["spread_right"])
    preps = scen.preparations()
    if all(isinstance(p, Thermal) for p in preps):
        t_ref = float(cfg.task_params.get("temperature", preps[1].temperature))
        lrc = transport.linear_response_coefficient(model, t_ref)
        rows.append(("linear_response_coefficient", lrc, "omega0^2"))
        rows.append(("linear_response_temperature", t_ref, "omega0"))

    path = outdir / f"{cfg.output}.current.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "value", "unit"])
        for name, value, unit in rows:
            writer.writerow([name, _fmt(value), unit])
    return [path]


def _task_cgf(cfg, scen, outdir, ident):
    import numpy as np

    from . import transport

    model = transport.TransportModel(scen)
    xi = _grid(cfg, "xi")
    values = np.asarray([transport.cgf(model, complex(x)) for x in xi])
    current = transport.steady_current(model)
    c2 = transport.second_cumulant_rate(model)
    cums = transport.cgf_cumulants(model, order=2)
    ident.check("first_cumulant_vs_current",
                abs(cums[0] - current) / max(abs(current), 1e-300),
                "cumulant_match")
    ident.check("second_cumulant_vs_closed_form",
                abs(cums[1] - c2) / max(abs(c2), 1e-300), "cumulant_match")
    ident.report("gc_symmetry_defect", transport.gc_residual(model, xi))

    path = outdir / f"{cfg.output}.cgf.csv"
    _write_csv(
        path,
        ["xi [1/omega0]", "re_G [omega0]", "im_G [omega0]"],
        zip(xi, values.real, values.imag),
    )
    return [path]


def _task_noise(cfg, scen, outdir, ident):
    import numpy as np

    from . import noise
    from .preparations import Thermal

    index = cfg.task_params.get("bath_index", 0)
    if not isinstance(index, int) or not 0 <= index < len(scen.baths):
        raise _fail("task.bath_index",
                    f"must index a configured bath (0..{len(scen.baths) - 1})")
    n_surface = cfg.task_params.get("surface_times", 8)
    if not isinstance(n_surface, int) or n_surface < 2:
        raise _fail("task.surface_times", "expected an integer >= 2")

    kernel = noise.noise_kernels(scen)[index]
    times = _grid(cfg, "time")
    lags = _grid(cfg, "lag")

    k_path = outdir / f"{cfg.output}.noise_kernel.csv"
    _write_csv(
        k_path,
        ["t [1/omega0]", "friction_kernel [omega0^2]", "mean_eta [omega0^1.5]"],
        zip(times, noise.friction_kernel(kernel.density, times),
            noise.noise_mean(kernel, times)),
    )

    t_slices = np.linspace(times[0], times[-1], n_surface)
    surf_path = outdir / f"{cfg.output}.noise_surface.csv"
    surf_rows = []
    for t in t_slices:
        s_vals = noise.noise_correlation(kernel, t, t + lags)
        surf_rows.extend((t, lag, sv) for lag, sv in zip(lags, s_vals))
    _write_csv(surf_path, ["t [1/omega0]", "s [1/omega0]", "S [omega0^3]"],
               surf_rows)

    stat = noise.stationary_noise_correlation(kernel, lags)
    stat_path = outdir / f"{cfg.output}.noise_stationary.csv"
    _write_csv(stat_path, ["s [1/omega0]", "S_stationary [omega0^3]"],
               zip(lags, stat))

    t_star = float(t_slices[-1])
    drift = np.max(np.abs(noise.noise_correlation(kernel, t_star, t_star + lags)
                          - stat))
    ident.check("stationarity_collapse", drift, "stationarity")
    if isinstance(kernel.preparation, Thermal):
        t_half = float(t_slices[len(t_slices) // 2])
        homo = np.max(np.abs(
            noise.noise_correlation(kernel, t_half, t_half + lags)
            - noise.noise_correlation(kernel, t_star, t_star + lags)))
        ident.check("thermal_homogeneity", homo, "identity")
    return [k_path, surf_path, stat_path]


def _task_oracle_compare(cfg, scen, outdir, ident):
    import numpy as np

    from . import oracle
    from .correlations import finite_time_correlations
    from .genfunc import propagate_trajectory

    n_modes = cfg.task_params.get("n_modes", 300)
    if not isinstance(n_modes, int) or n_modes < 2:
        raise _fail("task.n_modes", "expected an integer >= 2")
    t_ref = _number(cfg.task_params.get("t_ref", 60.0), "task.t_ref",
                    positive=True)
    omega_max = cfg.task_params.get("omega_max")
    if omega_max is not None:
        omega_max = _number(omega_max, "task.omega_max", positive=True)
    split = cfg.task_params.get("split")
    if split is not None:
        split = _number(split, "task.split", nonnegative=True)

    sys_, state = oracle.from_scenario(scen, n_modes, omega_max, split)
    t_deph = oracle.dephasing_time(sys_)
    times = _grid(cfg, "time")
    lags = _grid(cfg, "lag")

    u_o = oracle.u_response(sys_, times)
    u_a = scen.response.u(times)
    means_o, covs_o = oracle.central_moments(sys_, state, times)
    covs_a = np.array([s.covariance for s in propagate_trajectory(scen, times)])
    psi_o, phi_o = oracle.two_time_position_corr(sys_, state, t_ref, lags)
    psi_a, phi_a = finite_time_correlations(scen, None, t_ref, lags)

    # relative sup-norms: oscillatory quantities pass through zero pointwise
    u_rel = float(np.max(np.abs(u_o - u_a)) / np.max(np.abs(u_a)))
    sigma_rel = float(np.max(np.abs(covs_o - covs_a)) / np.max(np.abs(covs_a)))
    psi_rel = float(np.max(np.abs(psi_o - psi_a)) / np.max(np.abs(psi_a)))
    ident.check("u_relative_sup", u_rel, "oracle_rel")
    ident.check("sigma_relative_sup", sigma_rel, "oracle_rel")
    ident.check("psi_relative_sup", psi_rel, "oracle_rel")
    ident.report("dephasing_time", t_deph)
    ident.report("recurrence_time", oracle.recurrence_time(sys_))

    if len(scen.baths) == 2:
        from .transport import steady_current

        i_a = steady_current(scen)
        i_o = oracle.steady_current_estimate(sys_, state)
        if abs(i_a) > 1e-12:
            ident.check("current_plateau_rel", abs(i_o / i_a - 1.0),
                        "oracle_current_rel")
        else:
            ident.check("current_plateau_abs", abs(i_o - i_a), "stationarity")

    delta_path = outdir / f"{cfg.output}.oracle_deltas.csv"
    _write_csv(
        delta_path,
        ["t [1/omega0]", "u_analytic [1/omega0]", "u_oracle [1/omega0]",
         "delta_u [1/omega0]",
         "cov_qq_analytic [1/omega0]", "cov_qq_oracle [1/omega0]",
         "delta_cov_qq [1/omega0]",
         "cov_qp_analytic [1]", "cov_qp_oracle [1]", "delta_cov_qp [1]",
         "cov_pp_analytic [omega0]", "cov_pp_oracle [omega0]",
         "delta_cov_pp [omega0]"],
        zip(times, u_a, u_o, u_o - u_a,
            covs_a[:, 0, 0], covs_o[:, 0, 0], covs_o[:, 0, 0] - covs_a[:, 0, 0],
            covs_a[:, 0, 1], covs_o[:, 0, 1], covs_o[:, 0, 1] - covs_a[:, 0, 1],
            covs_a[:, 1, 1], covs_o[:, 1, 1], covs_o[:, 1, 1] - covs_a[:, 1, 1]),
    )
    psi_path = outdir / f"{cfg.output}.oracle_twotime.csv"
    _write_csv(
        psi_path,
        ["s [1/omega0]", "psi_analytic [1/omega0]", "psi_oracle [1/omega0]",
         "delta_psi [1/omega0]", "phi_analytic [1/omega0]",
         "phi_oracle [1/omega0]", "delta_phi [1/omega0]"],
        zip(lags, psi_a, psi_o, psi_o - psi_a, phi_a, phi_o, phi_o - phi_a),
    )
    modes_path = outdir / f"{cfg.output}.oracle_modes.csv"
    mode_rows = []
    for b_idx, bath in enumerate(sys_.baths):
        mode_rows.extend(
            (b_idx, w, lam, wt)
            for w, lam, wt in zip(bath.frequencies, bath.couplings, bath.weights))
    _write_csv(modes_path,
               ["bath", "frequency [omega0]", "coupling [omega0^1.5]",
                "weight [omega0]"],
               mode_rows)
    return [delta_path, psi_path, modes_path]


_TASK_RUNNERS = {
    "fdt": _task_fdt,
    "correlations": _task_correlations,
    "zq": _task_zq,
    "current": _task_current,
    "cgf": _task_cgf,
    "noise": _task_noise,
    "oracle-compare": _task_oracle_compare,
}


def _resolved_block(cfg: RunConfig, scen) -> dict:
    susc = scen.susceptibility
    return {
        "omega_max": float(susc.omega_max),
        "n_freq": int(scen.n_freq),
        "grids": cfg.grids,
        "baths": [
            {"label": b.label or f"bath{i}",
             "density": type(b.density).__name__,
             "preparation": type(b.preparation).__name__}
            for i, b in enumerate(scen.baths)
        ],
    }


def _write_manifest(cfg: RunConfig, scen, outdir: Path, outputs, ident,
                    args) -> Path:
    from . import __version__

    manifest = {
        "library": "oscbath",
        "library_version": __version__,
        "command": "run",
        "config": cfg.raw,
        "resolved": _resolved_block(cfg, scen),
        "task": cfg.task,
        "seed": args.seed,
        "threads": args.threads,
        "outputs": [p.name for p in outputs],
        "tolerances_requested": cfg.tolerances,
        "identities": ident.entries,
        "all_identities_passed": ident.all_passed(),
    }
    path = outdir / f"{cfg.output}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _cmd_run(cfg: RunConfig, args) -> int:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    scen = _build_scenario(cfg)
    ident = _Identities(cfg.tolerances)
    outputs = _TASK_RUNNERS[cfg.task](cfg, scen, outdir, ident)
    manifest = _write_manifest(cfg, scen, outdir, outputs, ident, args)
    for path in [*outputs, manifest]:
        print(path)
    if not ident.all_passed():
        failed = [k for k, e in ident.entries.items() if e["passed"] is False]
        print(f"tolerance failure: {', '.join(failed)}", file=sys.stderr)
        return 3
    return 0


def _cmd_validate(cfg: RunConfig, args) -> int:
    scen = _build_scenario(cfg)
    report = scen.susceptibility.pole_scan()
    if not report.passed:
        print(str(report), file=sys.stderr)
        return 4
    resolved = _resolved_block(cfg, scen)
    print("ok")
    print(f"  task: {cfg.task}")
    print(f"  baths: {len(scen.baths)} "
          f"({', '.join(b['density'] for b in resolved['baths'])})")
    print(f"  omega_max: {resolved['omega_max']:.6g} (resolved)")
    print(f"  n_freq: {resolved['n_freq']}")
    for name, g in resolved["grids"].items():
        print(f"  {name} grid: {g['points']} points on "
              f"[{g['start']:.6g}, {g['stop']:.6g}]")
    print(f"  {report}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscbath",
        description="Exact Gaussian oscillator-bath dynamics: batch runs.",
    )
    from . import __version__

    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "execute one task from a JSON config"),
                            ("validate", "check a config without running it")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a JSON run configuration")
        p.add_argument("--output-dir", default=".",
                       help="directory for CSV artifacts and the manifest")
        p.add_argument("--threads", type=int, default=None,
                       help="cap BLAS/OpenMP thread pools")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved, recorded in the manifest, unused "
                            "(runs contain no randomness)")
    args = parser.parse_args(argv)

    if args.threads is not None:
        if args.threads < 1:
            print("config error: --threads must be >= 1", file=sys.stderr)
            return 2
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "BLIS_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    if "numpy" in sys.modules and args.threads is not None:
        print("note: numpy already loaded; --threads may not bind",
              file=sys.stderr)

    try:
        cfg = load_config(args.config)
    except _ConfigProblem as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    from .errors import (BudgetError, ConfigError, DomainError,
                         PoleScanError, PreparationError, ToleranceError)

    try:
        if args.command == "run":
            return _cmd_run(cfg, args)
        return _cmd_validate(cfg, args)
    except _ConfigProblem as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, PreparationError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PoleScanError as exc:
        print(f"pole scan failure: {exc}", file=sys.stderr)
        return 4
    except (ToleranceError, BudgetError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
