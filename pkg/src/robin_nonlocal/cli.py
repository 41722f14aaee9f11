"""Command line front end: ``robin-nonlocal simulate|spectrum|verify``.

Exit codes: 0 success, 1 verification failed, 2 scenario/parse error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import os
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .assembly import assemble_boundary_ops
from .conditions import evaluate_conditions, reconcile
from .evolution import ThetaStepper, markov_diagnostics
from .exceptions import RobinNonlocalError, ScenarioError
from .greiner import make_context, resolvent_identity_residual, s_lambda_decay_profile
from .measures import hypothesis_report
from .scenario import Problem, build_problem, load_scenario
from .spectral import eig_report

log = logging.getLogger("robin_nonlocal")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3
RESIDUAL_TOL = 1e-10
TRAJECTORY_COLUMNS = ("t", "min_u", "max_u", "weighted_mass", "deviation_T1")


class NumericalFailure(Exception):
    def __init__(self, operation: str, cause: Exception):
        super().__init__(f"{operation} failed: {cause}")
        self.operation = operation


@contextlib.contextmanager
def _step(operation: str):
    try:
        yield
    except (RobinNonlocalError, np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise NumericalFailure(operation, exc) from exc


def _fmt(x: float) -> str:
    return repr(float(x))


class _AtomicDir:
    """Collects output files in a temporary directory and moves them in on success."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
        self.files: list[str] = []

    def write(self, name: str, text: str) -> None:
        (self.tmp / name).write_text(text)
        self.files.append(name)

    def commit(self) -> None:
        for name in self.files:
            os.replace(self.tmp / name, self.out_dir / name)
        shutil.rmtree(self.tmp, ignore_errors=True)

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def trajectory_csv(problem: Problem, A) -> str:
    run = problem.scenario.run
    vol = problem.grid.cell_volume
    stepper = ThetaStepper(A, run.dt, run.theta)
    u = problem.initial_state()
    ones = np.ones(problem.grid.n_cells)
    n_steps = max(1, int(np.ceil(run.t_end / run.dt - 1e-9)))
    lines = [",".join(TRAJECTORY_COLUMNS)]

    def row(k, u, ones):
        return ",".join(_fmt(v) for v in (k * run.dt, u.min(), u.max(), u.sum() * vol,
                                          np.abs(ones - 1.0).max()))

    lines.append(row(0, u, ones))
    for k in range(1, n_steps + 1):
        u = stepper.step(u)
        ones = stepper.step(ones)
        if k % run.record_stride == 0 or k == n_steps:
            lines.append(row(k, u, ones))
    return "\n".join(lines) + "\n"


def _assemble(problem: Problem):
    with _step("assembly"):
        return assemble_boundary_ops(problem.grid, problem.coeff, problem.family)


def cmd_simulate(problem: Problem, out: _AtomicDir, tol: float) -> int:
    ops = _assemble(problem)
    run = problem.scenario.run
    with _step("evolution"):
        out.write(problem.scenario.outputs["trajectory"], trajectory_csv(problem, ops.APhi))
        diag = markov_diagnostics(ops.APhi, run.t_end, run.dt, run.theta,
                                  f=problem.initial_state(), record_stride=run.record_stride)
    verdict = evaluate_conditions(problem.coeff, problem.family, problem.grid, tol)
    lines = [
        f"scenario: {problem.scenario.name}",
        f"cells: {problem.grid.n_cells}",
        f"theta: {run.theta}",
        f"dt: {run.dt}",
        f"t_end: {run.t_end}",
        f"predicted_class: {verdict.predicted_class}",
        f"metzler: {ops.APhi.is_metzler()}",
        f"max_T1_minus_1: {_fmt(diag.max_T1_minus_1)}",
        f"max_abs_T1_minus_1: {_fmt(diag.max_abs_T1_minus_1)}",
        f"min_T1: {_fmt(diag.min_T1)}",
        f"min_state: {_fmt(diag.min_state)}",
        f"final_max_T1: {_fmt(diag.t1_max_series[-1])}",
        f"growing: {diag.growing}",
        f"decaying: {diag.decaying}",
        f"markov_within_tol: {diag.max_abs_T1_minus_1 <= tol}",
    ]
    if diag.growing:
        lines.append("WARNING: growth detected in T(t)1")
    out.write(problem.scenario.outputs["diagnostics"], "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_spectrum(problem: Problem, out: _AtomicDir, tol: float) -> int:
    ops = _assemble(problem)
    with _step("eigen-analysis"):
        rep = eig_report(ops.APhi)
    rows = ["re,im"] + [f"{_fmt(w.real)},{_fmt(w.imag)}" for w in rep.eigenvalues]
    out.write(problem.scenario.outputs["spectrum"], "\n".join(rows) + "\n")
    lines = [
        f"scenario: {problem.scenario.name}",
        f"spectral_bound: {_fmt(rep.spectral_bound)}",
        f"gap: {_fmt(rep.gap)}",
        f"class: {rep.asymptotic_class.kind}",
        f"class_rate: {_fmt(rep.asymptotic_class.rate)}",
        f"irreducible: {rep.irreducible}",
        f"metzler: {rep.metzler}",
        f"principal_right_positive: {bool(np.all(rep.principal_right > 0))}",
        f"principal_left_positive: {bool(np.all(rep.principal_left > 0))}",
        f"principal_left_mass: {_fmt(np.sum(rep.principal_left) * rep.cell_volume)}",
        "top_eigenvalues:",
    ]
    lines += [f"  {_fmt(w.real)} {_fmt(w.imag)}" for w in rep.top(5)]
    out.write(problem.scenario.outputs["report"], "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(problem: Problem, out: _AtomicDir, tol: float) -> int:
    ops = _assemble(problem)
    run = problem.scenario.run
    with _step("resolvent context"):
        ctx = make_context(ops, problem.scenario.lam)
        ctx10 = make_context(ops, 10 * ctx.lam)
    with _step("resolvent identity"):
        res = resolvent_identity_residual(ctx)
        res10 = resolvent_identity_residual(ctx10)
        radius = ctx.neumann_radius
        lams = [ctx.lam, 10 * ctx.lam, 100 * ctx.lam]
        profile = s_lambda_decay_profile(ops, lams)
    with _step("evolution"):
        diag = markov_diagnostics(ops.APhi, run.t_end, run.dt, run.theta,
                                  record_stride=run.record_stride)
    with _step("eigen-analysis"):
        rep = eig_report(ops.APhi)
    verdict = evaluate_conditions(problem.coeff, problem.family, problem.grid, tol)
    table = reconcile(verdict, diag, rep, tol, expected=problem.scenario.expect)
    hyp = hypothesis_report(problem.family)

    has_phi = bool(np.any(ctx.Phi))
    decreasing = all(b < a for a, b in zip(profile, profile[1:])) if has_phi else True
    checks = [
        ("resolvent_residual", res <= RESIDUAL_TOL),
        ("resolvent_residual_10x", res10 <= RESIDUAL_TOL),
        ("s_lambda_decay", decreasing),
        ("conditions", table.all_passed),
    ]
    lines = [
        f"scenario: {problem.scenario.name}",
        f"lambda: {_fmt(ctx.lam)}",
        f"resolvent_identity_residual: {_fmt(res)}",
        f"resolvent_identity_residual_10x: {_fmt(res10)}",
        f"neumann_radius: {_fmt(radius)}",
        "s_lambda_decay_profile:",
    ]
    lines += [f"  lambda={_fmt(l)} norm={_fmt(v)}" for l, v in zip(lams, profile)]
    lines += [
        f"measure_p_integral: {_fmt(hyp.p_integral)} (p={hyp.p_exponent:g})",
        f"predicted_class: {verdict.predicted_class}",
        f"expected_class: {problem.scenario.expect}",
    ]
    if verdict.note:
        lines.append(f"note: {verdict.note}")
    lines += ["", table.format_table(), ""]
    lines += [f"{name}: {'PASS' if ok else 'FAIL'}" for name, ok in checks]
    ok = all(ok for _, ok in checks)
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    out.write(problem.scenario.outputs["verify"], "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "spectrum": cmd_spectrum, "verify": cmd_verify}


def run_one(command: str, scenario_path, out_dir, tol: float = 1e-10) -> int:
    """Run one command on one scenario file and return its exit code."""
    try:
        problem = build_problem(load_scenario(scenario_path))
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out = _AtomicDir(Path(out_dir))
    try:
        code = COMMANDS[command](problem, out, tol)
    except NumericalFailure as exc:
        out.abort()
        print(f"error: {scenario_path}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BaseException:
        out.abort()
        raise
    out.commit()
    return code


def _thread_limit():
    value = os.environ.get("ROBIN_NONLOCAL_THREADS")
    if not value:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(value)))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robin-nonlocal", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("scenarios", nargs="+", help="scenario file(s)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tol", type=float, default=1e-10, help="tolerance for condition checks")
    p.add_argument("--jobs", type=int, default=1, help="scenario files to run concurrently")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    out = Path(args.out)
    if len(args.scenarios) == 1:
        targets = [(args.scenarios[0], out)]
    else:
        targets = [(s, out / Path(s).stem) for s in args.scenarios]
    with _thread_limit():
        if args.jobs > 1 and len(targets) > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                codes = list(pool.map(lambda t: run_one(args.command, t[0], t[1], args.tol), targets))
        else:
            codes = [run_one(args.command, s, o, args.tol) for s, o in targets]
    for (s, _), code in zip(targets, codes):
        log.info("%s %s -> exit %d", args.command, s, code)
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
