"""Scenario files: TOML documents describing a domain, coefficients, beta, mu and a run.

Grammar (all sections optional except ``domain``)::

    name = "markov_interval"
    expect = "markov"            # markov | submarkov | supra | not_positive
    lambda = "auto"              # or a positive number
    p_exponent = 2.0
    beta = 1.0                   # or one value per boundary face

    [domain]
    kind = "interval"            # n, length
    # kind = "rectangle"         # nx, ny, lx, ly

    [coefficients]
    preset = "laplace"           # laplace | drift | full
    # drift: a (scalar or d x d), b, c (scalar or d-vector), d0 (scalar)
    # full:  a (n_cells x d x d), b, c (n_cells x d), d0 (n_cells)

    [[mu]]
    faces = "left"               # all | left | right | bottom | top | [indices]
    atoms = [{point = [0.7], weight = 0.6}]
    density = {uniform = 0.4}    # or {cells = [...]}

    [run]
    t_end = 10.0
    dt = 0.01
    theta = 1.0
    initial = "ones"             # "indicator(a:b)" | explicit array
    record_stride = 1

    [outputs]                    # file names inside --out
    trajectory = "trajectory.csv"

Faces not named by any ``[[mu]]`` entry carry the zero measure; naming a
face twice is an error.  Unknown keys are rejected.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .coefficients import CoefficientField
from .exceptions import RobinNonlocalError, ScenarioError
from .geometry import Grid, build_interval, build_rectangle
from .measures import BoundaryMeasureFamily, Measure, resolve_faces

TOP_KEYS = {"name", "expect", "lambda", "p_exponent", "beta", "domain", "coefficients", "mu",
            "run", "outputs"}
DOMAIN_KEYS = {"interval": {"kind", "n", "length"}, "rectangle": {"kind", "nx", "ny", "lx", "ly"}}
COEFF_KEYS = {"laplace": {"preset"}, "drift": {"preset", "a", "b", "c", "d0"},
              "full": {"preset", "a", "b", "c", "d0"}}
MU_KEYS = {"faces", "atoms", "density"}
ATOM_KEYS = {"point", "weight"}
RUN_KEYS = {"t_end", "dt", "theta", "initial", "record_stride"}
OUTPUT_KEYS = {"trajectory", "diagnostics", "spectrum", "report", "verify"}
EXPECTATIONS = {"markov", "submarkov", "supra", "not_positive"}

DEFAULT_OUTPUTS = {
    "trajectory": "trajectory.csv",
    "diagnostics": "diagnostics.txt",
    "spectrum": "spectrum.csv",
    "report": "report.txt",
    "verify": "verify.txt",
}


def _check_keys(table: dict, allowed: set, where: str) -> None:
    if not isinstance(table, dict):
        raise ScenarioError(f"{where}: expected a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown key {unknown[0]!r}")


@dataclass(frozen=True)
class RunSpec:
    t_end: float = 1.0
    dt: float = 0.01
    theta: float = 1.0
    initial: object = "ones"
    record_stride: int = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    domain: dict
    coefficients: dict
    beta: object
    mu: list
    run: RunSpec
    lam: object = "auto"
    expect: str | None = None
    p_exponent: float | None = None
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    source: str | None = None


def parse_scenario(text: str, name: str = "scenario", source: str | None = None) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{source or name}: {exc}") from exc
    _check_keys(doc, TOP_KEYS, "top level")
    if "domain" not in doc:
        raise ScenarioError("missing [domain] section")
    domain = doc["domain"]
    kind = domain.get("kind") if isinstance(domain, dict) else None
    if kind not in DOMAIN_KEYS:
        raise ScenarioError(f"[domain]: kind must be 'interval' or 'rectangle', got {kind!r}")
    _check_keys(domain, DOMAIN_KEYS[kind], "[domain]")

    coeffs = doc.get("coefficients", {"preset": "laplace"})
    preset = coeffs.get("preset", "laplace") if isinstance(coeffs, dict) else None
    if preset not in COEFF_KEYS:
        raise ScenarioError(f"[coefficients]: unknown preset {preset!r}")
    _check_keys(coeffs, COEFF_KEYS[preset], "[coefficients]")
    if preset == "full":
        missing = {"a", "b", "c", "d0"} - set(coeffs)
        if missing:
            raise ScenarioError(f"[coefficients]: preset 'full' needs key {sorted(missing)[0]!r}")

    mu = doc.get("mu", [])
    if not isinstance(mu, list):
        raise ScenarioError("mu must be an array of tables ([[mu]])")
    for i, entry in enumerate(mu):
        _check_keys(entry, MU_KEYS, f"mu[{i}]")
        if "faces" not in entry:
            raise ScenarioError(f"mu[{i}]: missing key 'faces'")
        for j, atom in enumerate(entry.get("atoms", [])):
            _check_keys(atom, ATOM_KEYS, f"mu[{i}].atoms[{j}]")
            if set(atom) != ATOM_KEYS:
                raise ScenarioError(f"mu[{i}].atoms[{j}]: needs 'point' and 'weight'")
        dens = entry.get("density")
        if dens is not None:
            _check_keys(dens, {"uniform", "cells"}, f"mu[{i}].density")
            if len(dens) != 1:
                raise ScenarioError(f"mu[{i}].density: give exactly one of 'uniform' or 'cells'")

    run_tab = doc.get("run", {})
    _check_keys(run_tab, RUN_KEYS, "[run]")
    run = RunSpec(**run_tab)
    if not (run.t_end > 0 and run.dt > 0 and 0 <= run.theta <= 1 and run.record_stride >= 1):
        raise ScenarioError("[run]: need t_end > 0, dt > 0, 0 <= theta <= 1, record_stride >= 1")

    outputs = dict(DEFAULT_OUTPUTS)
    out_tab = doc.get("outputs", {})
    _check_keys(out_tab, OUTPUT_KEYS, "[outputs]")
    outputs.update(out_tab)

    expect = doc.get("expect")
    if expect is not None and expect not in EXPECTATIONS:
        raise ScenarioError(f"expect must be one of {sorted(EXPECTATIONS)}, got {expect!r}")
    lam = doc.get("lambda", "auto")
    if lam != "auto" and not (isinstance(lam, (int, float)) and lam > 0):
        raise ScenarioError(f"lambda must be 'auto' or a positive number, got {lam!r}")
    return Scenario(
        name=doc.get("name", name),
        domain=domain,
        coefficients=coeffs,
        beta=doc.get("beta", 0.0),
        mu=mu,
        run=run,
        lam=lam,
        expect=expect,
        p_exponent=doc.get("p_exponent"),
        outputs=outputs,
        source=source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, name=path.stem, source=str(path))


def bundled_scenarios() -> dict[str, Path]:
    here = Path(__file__).parent / "scenarios"
    return {p.stem: p for p in sorted(here.glob("*.scenario"))}


@dataclass(frozen=True, eq=False)
class Problem:
    scenario: Scenario
    grid: Grid
    coeff: CoefficientField
    family: BoundaryMeasureFamily

    def initial_state(self) -> np.ndarray:
        return initial_state(self.scenario.run.initial, self.grid)


def _grid(domain: dict, size) -> Grid:
    if domain["kind"] == "interval":
        n = domain.get("n", 32) if size is None else size
        return build_interval(n, domain.get("length", 1.0))
    nx, ny = (domain.get("nx", 16), domain.get("ny", 16)) if size is None else size
    return build_rectangle(nx, ny, domain.get("lx", 1.0), domain.get("ly", 1.0))


def _coefficients(spec: dict, grid: Grid, beta) -> CoefficientField:
    preset = spec.get("preset", "laplace")
    beta = np.asarray(beta, dtype=float)
    if beta.ndim and beta.shape != (grid.n_faces,):
        raise ScenarioError(f"beta: need a scalar or {grid.n_faces} per-face values")
    if preset == "laplace":
        return CoefficientField.laplace(grid, beta=beta)
    if preset == "drift":
        return CoefficientField.constant(grid, a=spec.get("a", 1.0), b=spec.get("b", 0.0),
                                         c=spec.get("c", 0.0), d0=spec.get("d0", 0.0), beta=beta)
    beta = np.broadcast_to(beta, (grid.n_faces,))
    return CoefficientField(a=spec["a"], b=spec["b"], c=spec["c"], d0=spec["d0"], beta=beta)


def _family(entries: list, grid: Grid, p_exponent) -> BoundaryMeasureFamily:
    measures = [None] * grid.n_faces
    for i, entry in enumerate(entries):
        m = Measure.zero()
        for atom in entry.get("atoms", []):
            m = m + Measure.dirac(atom["point"], atom["weight"])
        dens = entry.get("density")
        if dens is not None and "uniform" in dens:
            m = m + Measure.uniform(grid, dens["uniform"])
        elif dens is not None:
            cells = np.asarray(dens["cells"], dtype=float)
            if cells.shape != (grid.n_cells,):
                raise ScenarioError(f"mu[{i}].density.cells: need {grid.n_cells} values")
            m = m + Measure(density=cells)
        for z in resolve_faces(entry["faces"], grid):
            if measures[z] is not None:
                raise ScenarioError(f"mu[{i}]: face {z} already has a measure")
            measures[z] = m
    measures = [Measure.zero() if m is None else m for m in measures]
    return BoundaryMeasureFamily(grid, measures, p_exponent)


def build_problem(scenario: Scenario, size=None) -> Problem:
    """Grid, coefficients and family for ``scenario``.

    ``size`` overrides the resolution: ``n`` for intervals, ``(nx, ny)`` for
    rectangles.  Scenarios with per-cell arrays cannot be resized.
    """
    if size is not None and scenario.coefficients.get("preset") == "full":
        raise ScenarioError("scenarios with per-cell coefficient arrays cannot be resized")
    try:
        grid = _grid(scenario.domain, size)
        coeff = _coefficients(scenario.coefficients, grid, scenario.beta)
        family = _family(scenario.mu, grid, scenario.p_exponent)
    except ScenarioError:
        raise
    except (RobinNonlocalError, ValueError, TypeError, KeyError) as exc:
        raise ScenarioError(f"{scenario.name}: {exc}") from exc
    return Problem(scenario, grid, coeff, family)


_INDICATOR = re.compile(r"^indicator\((\d*):(\d*)\)$")


def initial_state(spec, grid: Grid) -> np.ndarray:
    """``"ones"``, ``"indicator(a:b)"`` (cell index slice) or an explicit array."""
    n = grid.n_cells
    if isinstance(spec, str):
        if spec == "ones":
            return np.ones(n)
        m = _INDICATOR.match(spec.replace(" ", ""))
        if m:
            lo = int(m.group(1)) if m.group(1) else 0
            hi = int(m.group(2)) if m.group(2) else n
            u = np.zeros(n)
            u[lo:hi] = 1.0
            if not u.any():
                raise ScenarioError(f"initial {spec!r} selects no cells")
            return u
        raise ScenarioError(f"[run].initial: cannot parse {spec!r}")
    u = np.asarray(spec, dtype=float)
    if u.shape != (n,):
        raise ScenarioError(f"[run].initial: need {n} values, got {u.shape}")
    return u
