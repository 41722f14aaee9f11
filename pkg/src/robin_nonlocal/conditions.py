"""Algebraic positivity / sub-Markov / Markov conditions and their reconciliation
with observed semigroup behavior."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField, discrete_divergence_b, face_drift
from .evolution import MarkovDiagnostics
from .geometry import Grid
from .measures import BoundaryMeasureFamily
from .spectral import SpectralReport

MARKOV = "Positive+Markov"
SUBMARKOV = "Positive+SubMarkov"
SUPRA = "Positive+Supra"
NOT_POSITIVE = "NotPositive"


@dataclass(frozen=True)
class ConditionVerdict:
    """Per-cell and per-face margins of the Markov-type conditions.

    ``interior_margin = d0 - div b`` (>= 0 required), ``local_margin =
    beta + b.nu`` and ``budget = mass - beta - b.nu`` (<= 0 required).
    """

    positivity_predicted: bool
    interior_margin: np.ndarray
    local_margin: np.ndarray
    budget: np.ndarray
    tol: float
    predicted_class: str

    @property
    def interior_holds(self) -> bool:
        return bool(np.all(self.interior_margin >= -self.tol))

    @property
    def local_holds(self) -> bool:
        return bool(np.all(self.local_margin >= -self.tol))

    @property
    def interior_equality(self) -> bool:
        return bool(np.all(np.abs(self.interior_margin) <= self.tol))

    @property
    def budget_equality(self) -> bool:
        return bool(np.all(np.abs(self.budget) <= self.tol))

    @property
    def supra_certain(self) -> bool:
        """Every margin points toward growth, so ``A 1 >= 0`` with some entry > 0."""
        return bool(
            self.predicted_class == SUPRA
            and np.all(self.interior_margin <= self.tol)
            and np.all(self.budget >= -self.tol)
        )

    @property
    def note(self) -> str:
        if self.predicted_class == SUPRA and not self.supra_certain:
            return "margins of mixed sign: growth is not determined by the conditions alone"
        if self.predicted_class == SUPRA:
            return "blow-up expected when the local part is Markov and irreducible"
        return ""


def evaluate_conditions(coeff: CoefficientField, family: BoundaryMeasureFamily, grid: Grid,
                        tol: float = 1e-10) -> ConditionVerdict:
    interior = coeff.d0 - discrete_divergence_b(coeff, grid)
    local = coeff.beta + face_drift(coeff, grid)
    budget = family.total_masses - local
    positive = family.is_positive
    if not positive:
        klass = NOT_POSITIVE
    elif np.all(np.abs(interior) <= tol) and np.all(np.abs(budget) <= tol):
        klass = MARKOV
    elif np.all(interior >= -tol) and np.all(budget <= tol):
        klass = SUBMARKOV
    else:
        klass = SUPRA
    return ConditionVerdict(positive, interior, local, budget, float(tol), klass)


@dataclass(frozen=True)
class ReconciliationRow:
    property: str
    predicted: bool | None
    observed: bool
    margin: float
    passed: bool

    @property
    def judged(self) -> bool:
        return self.predicted is not None


@dataclass(frozen=True)
class Reconciliation:
    rows: list[ReconciliationRow] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def row(self, name: str) -> ReconciliationRow:
        for r in self.rows:
            if r.property == name:
                return r
        raise KeyError(name)

    def format_table(self) -> str:
        lines = [f"{'property':<12}{'predicted':>11}{'observed':>10}{'margin':>16}  pass"]
        for r in self.rows:
            pred = "n/a" if r.predicted is None else str(r.predicted)
            lines.append(
                f"{r.property:<12}{pred:>11}{str(r.observed):>10}"
                f"{r.margin:>16.6e}  {'PASS' if r.passed else 'FAIL'}"
            )
        return "\n".join(lines)


EXPECT_CLASS = {"markov": MARKOV, "submarkov": SUBMARKOV, "supra": SUPRA,
                "not_positive": NOT_POSITIVE}


def observed_class(diagnostics: MarkovDiagnostics, report: SpectralReport, tol: float = 1e-10) -> str:
    """Class read off the simulated orbit and the spectrum alone."""
    s, s_tol = report.spectral_bound, report.class_tolerance
    if not (report.metzler and diagnostics.min_state >= -tol):
        return NOT_POSITIVE
    if diagnostics.max_abs_T1_minus_1 <= tol and abs(s) <= s_tol:
        return MARKOV
    if s > s_tol:
        return SUPRA
    return SUBMARKOV


def reconcile(verdict: ConditionVerdict, diagnostics: MarkovDiagnostics, report: SpectralReport,
              tol: float = 1e-10, expected: str | None = None) -> Reconciliation:
    """Predicted-versus-observed table.

    Rows whose prediction is undetermined (non-positive family, or a supra
    verdict with margins of mixed sign) carry ``predicted=None`` and pass.
    With ``expected`` (``"markov"``, ``"submarkov"``, ``"supra"`` or
    ``"not_positive"``) the positivity row must also agree with it and an
    ``expected`` row compares it to the predicted class.
    """
    s = report.spectral_bound
    s_tol = report.class_tolerance
    rows = []

    observed_pos = report.metzler and diagnostics.min_state >= -tol
    pos_ok = verdict.positivity_predicted == observed_pos
    if expected is not None:
        pos_ok = pos_ok and (expected != "not_positive") == observed_pos
    rows.append(ReconciliationRow("positivity", verdict.positivity_predicted, observed_pos,
                                  diagnostics.min_state, pos_ok))

    klass = verdict.predicted_class
    positive = verdict.positivity_predicted
    mixed = klass == SUPRA and not verdict.supra_certain
    checks = (
        ("markov", klass == MARKOV, diagnostics.max_abs_T1_minus_1 <= tol and abs(s) <= s_tol,
         diagnostics.max_abs_T1_minus_1),
        ("submarkov", klass in (MARKOV, SUBMARKOV), diagnostics.max_T1_minus_1 <= tol and s <= s_tol,
         diagnostics.max_T1_minus_1),
        ("supra", klass == SUPRA, s > s_tol, s),
    )
    for name, predicted, observed, margin in checks:
        if not positive or (mixed and name != "markov"):
            rows.append(ReconciliationRow(name, None, bool(observed), float(margin), True))
        else:
            rows.append(ReconciliationRow(name, predicted, bool(observed), float(margin),
                                          predicted == bool(observed)))
    if expected is not None:
        want = EXPECT_CLASS[expected]
        rows.append(ReconciliationRow("expected", True, verdict.predicted_class == want,
                                      float("nan"), verdict.predicted_class == want))
    return Reconciliation(rows)
