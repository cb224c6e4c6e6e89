"""Comparison of predicted cost asymptotics with the exact recurrences.

For each n on a geometric grid the first ``order`` terms of f_n's expansion
are compared with the exact value.  The next term of the expansion sets the
expected size of the relative error, and the run passes when the observed
error decays at the same rate and ends up no more than a fixed factor above
that expectation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from mpmath import mp

from . import oracle
from .models import analyze
from .specfun import to_mpf
from .tolls import TollSpec
from .transfer import CoeffAsymptotics, error_magnitude, evaluate_asym

SLOPE_TOLERANCE = 0.35
RATIO_FACTOR = 10.0
FLOAT_NOISE = 1e-13
ORACLE_MODES = {"bst": "mp", "catalan": "float", "unionfind": "float"}


@dataclass(frozen=True)
class ValidationRow:
    n: int
    exact: float
    predicted: float
    rel_error: float
    expected_ratio: float


@dataclass(frozen=True)
class ValidationReport:
    model: str
    toll: TollSpec
    order: int
    rows: tuple
    fitted_slope: float | None
    expected_slope: float | None
    passed: bool
    reason: str

    @property
    def final(self) -> ValidationRow:
        return self.rows[-1]

    def to_dict(self) -> dict:
        def fmt(x):
            return None if x is None else float(f"{x:.6e}")

        return {
            "model": self.model,
            "toll": self.toll.label(),
            "order": self.order,
            "rows": [
                {"n": r.n, "exact": fmt(r.exact), "predicted": fmt(r.predicted),
                 "rel_error": fmt(r.rel_error), "expected_ratio": fmt(r.expected_ratio)}
                for r in self.rows
            ],
            "fitted_slope": fmt(self.fitted_slope),
            "expected_slope": fmt(self.expected_slope),
            "status": "PASS" if self.passed else "FAIL",
            "reason": self.reason,
        }


def geometric_grid(nmax: int, decades: int = 2, per_decade: int = 8, nmin: int = 10) -> list:
    """Integers nmax * 10^(-j/per_decade), ascending and without duplicates."""
    points = {max(nmin, round(nmax * 10 ** (-j / per_decade))) for j in range(decades * per_decade + 1)}
    return sorted(p for p in points if p <= nmax)


def _fit_slope(ns, values) -> float | None:
    pairs = [(np.log(n), np.log(v)) for n, v in zip(ns, values) if v > 0]
    if len(pairs) < 3:
        return None
    x, y = np.array(pairs).T
    return float(np.polyfit(x, y, 1)[0])


def _split(asym: CoeffAsymptotics, order: int):
    """Prediction from the first ``order`` terms and a callable for the next one."""
    head = CoeffAsymptotics(asym.terms[:order], asym.error, asym.exp_factor, asym.digits)
    if len(asym.terms) > order:
        nxt = CoeffAsymptotics(asym.terms[order:order + 1], asym.error, asym.exp_factor, asym.digits)
        return head, lambda n: abs(evaluate_asym(nxt, n, 20))
    return head, lambda n: error_magnitude(asym, n)


def validate(model: str, toll: TollSpec, nmax: int, order: int = 3, digits: int = 30,
             slope_tolerance: float = SLOPE_TOLERANCE, ratio_factor: float = RATIO_FACTOR,
             mode: str | None = None) -> ValidationReport:
    """Compare the first ``order`` terms of f_n with the exact oracle on n <= nmax."""
    if order < 1:
        raise ValueError("order must be at least 1")
    if nmax < 100:
        raise ValueError("nmax must be at least 100")
    analysis = analyze(model, toll, order + 2, digits)
    head, omitted = _split(analysis.fn_asym, order)
    mode = mode or ORACLE_MODES[model]
    exact = oracle.MEAN_ORACLES[model](toll, nmax + 1, mode, digits + 10)
    noise = FLOAT_NOISE if mode == "float" else 10.0 ** (-(digits - 5))
    rows = []
    with mp.workdps(digits):
        for n in geometric_grid(nmax):
            fe = to_mpf(exact[n])
            fp = evaluate_asym(head, n, digits)
            rel = abs(fp / fe - 1)
            ratio = omitted(n) / abs(fp)
            rows.append(ValidationRow(n, float(fe), float(fp), float(rel), float(ratio)))
    top = [r for r in rows if r.n * 10 >= nmax and r.expected_ratio > 100 * noise]
    fitted = _fit_slope([r.n for r in top], [r.rel_error for r in top])
    expected = _fit_slope([r.n for r in top], [r.expected_ratio for r in top])
    final = rows[-1]
    bound = ratio_factor * max(final.expected_ratio, noise)
    if final.rel_error >= bound:
        passed, reason = False, f"final relative error {final.rel_error:.3e} exceeds {bound:.3e}"
    elif fitted is None or expected is None:
        passed, reason = True, "error at the oracle's noise level"
    elif abs(fitted - expected) > slope_tolerance:
        passed, reason = False, f"error slope {fitted:.3f} differs from expected {expected:.3f}"
    else:
        passed, reason = True, f"error slope {fitted:.3f} vs expected {expected:.3f}"
    return ValidationReport(model, toll, order, tuple(rows), fitted, expected, passed, reason)
