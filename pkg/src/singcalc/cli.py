"""Command-line interface: ``singcalc <command> [options]``.

Settings are resolved in the order built-in defaults, config file
(``key=value`` lines, from ``--config`` or ``$SINGCALC_CONFIG``), environment
(``$SINGCALC_DIGITS``, ``$SINGCALC_CACHE``), then command-line flags.

Exit codes: 0 success, 1 validation failure, 2 invalid input, 3 precision
failure (two routes to a quantity disagree).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
from mpmath import mp

from . import oracle
from .expansion import ErrorBudget, SingularExpansion, format_decimal, to_dict as expansion_to_dict
from .hadamard import IntegerSumError, power_hadamard, zigzag
from .models import (
    Constant,
    ConstantMismatchError,
    DivergentConstantError,
    UnsupportedDimensionError,
    analyze,
    bst_constants,
    catalan_constants,
    polya_analyze,
    stirling_analyze,
    unionfind_constant,
)
from .specfun import MIN_DIGITS, to_mpf
from .tolls import InvalidTollError, TollSpec
from .transfer import CoeffAsymptotics, evaluate_asym
from .validation import RATIO_FACTOR, SLOPE_TOLERANCE, geometric_grid, validate

DEFAULTS = {"digits": "50", "format": "text", "cache_path": str(Path.home() / ".cache" / "singcalc" / "constants.json")}
ENV_KEYS = {"digits": "SINGCALC_DIGITS", "cache_path": "SINGCALC_CACHE"}
FORMATS = ("text", "json", "csv")
MODELS = ("bst", "catalan", "unionfind")


class UsageError(ValueError):
    """Bad command-line input (exit status 2)."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    digits: int
    format: str
    cache_path: Path
    args: argparse.Namespace


# --------------------------------------------------------------------------
# configuration


def read_config_file(path: str | os.PathLike) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = value.strip()
    return out


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    settings = dict(DEFAULTS)
    config_path = args.config or environ.get("SINGCALC_CONFIG")
    if config_path:
        settings.update(read_config_file(config_path))
    for key, var in ENV_KEYS.items():
        if environ.get(var):
            settings[key] = environ[var]
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = str(value)
    try:
        digits = int(settings["digits"])
    except ValueError:
        raise UsageError(f"digits must be an integer, got {settings['digits']!r}") from None
    if digits < MIN_DIGITS:
        raise UsageError(f"digits must be at least {MIN_DIGITS}")
    if settings["format"] not in FORMATS:
        raise UsageError(f"format must be one of {', '.join(FORMATS)}")
    return RunConfig(args.command, digits, settings["format"], Path(settings["cache_path"]).expanduser(), args)


# --------------------------------------------------------------------------
# formatting


def coeff_text(c, digits: int) -> str:
    if isinstance(c, (int, Fraction)):
        return str(c)
    with mp.workdps(digits):
        c = to_mpf(c)
        if c == mpmath.floor(c) and abs(c) < 10**15:
            return str(int(c))
        return mpmath.nstr(c, digits)


def _power_text(base: str, p: Fraction) -> str:
    if p == 0:
        return ""
    if p == 1:
        return base
    return f"{base}^{p}" if p > 0 and p.denominator == 1 else f"{base}^({p})"


def _scale_text(npow, logpow: int, base: str, log_name: str) -> str:
    parts = [_power_text(base, Fraction(npow))] if npow else []
    if logpow:
        parts.append(log_name if logpow == 1 else f"{log_name}^{logpow}" if logpow > 0 else f"({log_name})^({logpow})")
    return "·".join(parts) or "1"


def term_text(coeff, npow, logpow: int, digits: int, base: str = "n", log_name: str = "log n") -> str:
    c = coeff_text(coeff, digits)
    if not npow and not logpow:
        return c
    scale_ = _scale_text(npow, logpow, base, log_name)
    if c in ("1", "-1"):
        return c[:-1] + scale_
    return f"{c}·{scale_}"


def asym_text(a: CoeffAsymptotics, digits: int) -> str:
    body = " + ".join(term_text(t.coeff, t.npow, t.logpow, digits) for t in a.terms) or "0"
    tail = "" if a.error.exact else f" + O({_scale_text(a.error.npow, a.error.logpow, 'n', 'log n')})"
    factor = "" if a.exp_factor.rational == 1 and a.exp_factor.epow == 0 else f"  [times ({a.exp_factor})^n]"
    return body.replace("+ -", "- ") + tail + factor


def expansion_text(f: SingularExpansion, digits: int) -> str:
    u = "(1-z/rho)" if not (f.rho.rational == 1 and f.rho.epow == 0) else "(1-z)"
    body = " + ".join(term_text(t.coeff, t.alpha, t.logpow, digits, u, "L") for t in f.terms) or "0"
    tail = "" if f.error.exact else f" + O({_scale_text(f.error.aexp, f.error.logpow, u, 'L')})"
    return body.replace("+ -", "- ") + tail + f"  [rho = {f.rho}]"


def dump_json(obj) -> str:
    """Canonical JSON: insertion-ordered keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def dump_csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _expansion_rows(section: str, d: dict, power_key: str) -> list:
    return [[section, t["coeff"], t[power_key], t["logpow"]] for t in d["terms"]]


# --------------------------------------------------------------------------
# constants store


class ConstantsCache:
    """Write-once JSON store of formatted constants keyed by ``name@digits``."""

    def __init__(self, path: Path):
        self.path = path
        self.data = {}
        if path.exists():
            try:
                self.data = json.loads(path.read_text())
            except json.JSONDecodeError:
                self.data = {}
        self.dirty = False

    @staticmethod
    def key(name: str, digits: int) -> str:
        return f"{name}@{digits}"

    def get(self, name: str, digits: int):
        return self.data.get(self.key(name, digits))

    def put(self, entry: dict) -> None:
        key = self.key(entry["name"], entry["digits"])
        if key not in self.data:
            self.data[key] = entry
            self.dirty = True

    def save(self) -> None:
        if not self.dirty:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".constants-")
        with os.fdopen(fd, "w") as fh:
            fh.write(dump_json(self.data))
        os.replace(tmp, self.path)
        self.dirty = False


def _polya_constant(d: int, key: str):
    def run(digits: int) -> Constant:
        return polya_analyze(d, 3, digits).constants[key]
    return run


def _stirling_constant(kind: str, key: str):
    def run(digits: int) -> Constant:
        return stirling_analyze(kind, 4, digits).constants[key]
    return run


CONSTANTS = {
    "K'_0": lambda digits: bst_constants(TollSpec.log(), digits),
    "Kbar'_0": lambda digits: catalan_constants(TollSpec.log(), digits),
    "Khat'_0": lambda digits: unionfind_constant(TollSpec.log(), min(digits, 30)),
    "K": _polya_constant(2, "K"),
    "Q(1)": _polya_constant(3, "Q(1)"),
    "log sqrt(2 pi)": _stirling_constant("factorial", "log sqrt(2 pi)"),
    "A": _stirling_constant("superfactorial", "A"),
}


def constant_entries(names: list, digits: int, cache: ConstantsCache | None) -> list:
    out = []
    for name in names:
        entry = cache.get(name, digits) if cache else None
        if entry is None:
            entry = CONSTANTS[name](digits).to_dict()
            if cache:
                cache.put(entry)
        out.append(entry)
    if cache:
        cache.save()
    return out


# --------------------------------------------------------------------------
# commands


def parse_toll(text: str) -> TollSpec:
    return TollSpec.parse(text)


def cmd_analyze(cfg: RunConfig) -> tuple[str, int]:
    a = cfg.args
    result = analyze(a.model, parse_toll(a.toll), a.order, cfg.digits)
    d = result.to_dict()
    if cfg.format == "json":
        return dump_json(d), 0
    if cfg.format == "csv":
        rows = _expansion_rows("singular", d["singular"], "alpha") + _expansion_rows("asymptotics", d["asymptotics"], "npow")
        rows += [["constant", c["value"], c["name"], c["provenance"]] for c in d["constants"]]
        return dump_csv(["section", "coeff", "power", "logpow"], rows), 0
    shown = min(cfg.digits, 20)
    lines = [
        f"model {a.model}, toll {result.toll}",
        f"f(z) ~ {expansion_text(result.f_singular, shown)}",
        f"f_n ~ {asym_text(result.fn_asym, shown)}",
    ]
    for c in d["constants"]:
        lines.append(f"{c['name']} = {c['value']}  ({c['digits']} digits, {c['provenance']})")
    return "\n".join(lines) + "\n", 0


def cmd_validate(cfg: RunConfig) -> tuple[str, int]:
    a = cfg.args
    report = validate(a.model, parse_toll(a.toll), a.nmax, a.order, min(cfg.digits, 30),
                      a.slope_tolerance, a.ratio_factor)
    status = 0 if report.passed else 1
    d = report.to_dict()
    if cfg.format == "json":
        return dump_json(d), status
    if cfg.format == "csv":
        rows = [[r["n"], r["exact"], r["predicted"], r["rel_error"], r["expected_ratio"]] for r in d["rows"]]
        return dump_csv(["n", "exact", "predicted", "rel_error", "expected_ratio"], rows), status
    lines = [f"model {a.model}, toll {report.toll}, first {a.order} terms",
             f"{'n':>8} {'exact':>16} {'predicted':>16} {'rel.err':>10} {'expected':>10}"]
    for r in report.rows:
        lines.append(f"{r.n:>8} {r.exact:>16.9e} {r.predicted:>16.9e} {r.rel_error:>10.3e} {r.expected_ratio:>10.3e}")
    lines.append(f"{d['status']}: {report.reason}")
    return "\n".join(lines) + "\n", status


def cmd_constants(cfg: RunConfig) -> tuple[str, int]:
    names = cfg.args.names or list(CONSTANTS)
    unknown = [n for n in names if n not in CONSTANTS]
    if unknown:
        raise UsageError(f"unknown constants {unknown}; available: {', '.join(CONSTANTS)}")
    cache = None if cfg.args.no_cache else ConstantsCache(cfg.cache_path)
    entries = constant_entries(names, cfg.digits, cache)
    if cfg.format == "json":
        return dump_json(entries), 0
    if cfg.format == "csv":
        return dump_csv(["name", "value", "digits", "provenance"],
                        [[e["name"], e["value"], e["digits"], e["provenance"]] for e in entries]), 0
    return "".join(f"{e['name']} = {e['value']}  ({e['digits']} digits, {e['provenance']})\n" for e in entries), 0


def _table_rows(asym: CoeffAsymptotics, exact, ns: list, digits: int) -> list:
    rows = []
    with mp.workdps(digits):
        for n in ns:
            fe = to_mpf(exact[n])
            fp = evaluate_asym(asym, n, digits)
            rows.append((n, float(fe), float(fp), float(fe / fp) if fp else float("nan")))
    return rows


def cmd_polya(cfg: RunConfig) -> tuple[str, int]:
    a = cfg.args
    result = polya_analyze(a.dim, a.order, cfg.digits)
    exact = oracle.polya_first_return(a.dim, a.nmax + 1)
    rows = _table_rows(result.pn_asym, exact, geometric_grid(a.nmax, decades=2, per_decade=4), cfg.digits)
    d = result.to_dict()
    d["table"] = [{"n": n, "exact": float(f"{e:.9e}"), "predicted": float(f"{p:.9e}"), "ratio": float(f"{r:.9e}")}
                  for n, e, p, r in rows]
    if cfg.format == "json":
        return dump_json(d), 0
    if cfg.format == "csv":
        return dump_csv(["n", "exact", "predicted", "ratio"], [list(r) for r in rows]), 0
    shown = min(cfg.digits, 20)
    lines = [f"walk on Z^{a.dim}, first return at time 2n",
             f"P(z) ~ {expansion_text(result.p_singular, shown)}",
             f"p_n ~ {asym_text(result.pn_asym, shown)}"]
    lines += [f"{c['name']} = {c['value']}  ({c['digits']} digits, {c['provenance']})" for c in d["constants"]]
    lines.append(f"{'n':>8} {'exact':>16} {'predicted':>16} {'exact/pred':>12}")
    lines += [f"{n:>8} {e:>16.9e} {p:>16.9e} {r:>12.8f}" for n, e, p, r in rows]
    return "\n".join(lines) + "\n", 0


def _exact_log_sum(kind: str, n: int):
    total = mpmath.mpf(0)
    for k in range(2, n + 1):
        total += mpmath.log(k) * (k if kind == "superfactorial" else 1)
    return total


def cmd_stirling(cfg: RunConfig) -> tuple[str, int]:
    a = cfg.args
    result = stirling_analyze(a.kind, a.order, cfg.digits)
    d = result.to_dict()
    rows = []
    if a.n:
        with mp.workdps(cfg.digits):
            exact = _exact_log_sum(a.kind, a.n)
            pred = evaluate_asym(result.asym, a.n, cfg.digits)
        rows.append((a.n, format_decimal(exact, 20), format_decimal(pred, 20), format_decimal(abs(exact - pred), 5)))
        d["check"] = {"n": a.n, "exact": rows[0][1], "predicted": rows[0][2], "abs_error": rows[0][3]}
    if cfg.format == "json":
        return dump_json(d), 0
    if cfg.format == "csv":
        return dump_csv(["n", "exact", "predicted", "abs_error"], [list(r) for r in rows]), 0
    shown = min(cfg.digits, 20)
    what = "log n!" if a.kind == "factorial" else "log S(n), S(n) = prod k^k"
    lines = [f"{what} ~ {asym_text(result.asym, shown)}"]
    lines += [f"{c['name']} = {c['value']}  ({c['digits']} digits, {c['provenance']})" for c in d["constants"]]
    lines += [f"n = {n}: exact {e}, predicted {p}, |error| {err}" for n, e, p, err in rows]
    return "\n".join(lines) + "\n", 0


def cmd_hadamard(cfg: RunConfig) -> tuple[str, int]:
    a = cfg.args
    try:
        alpha, beta = Fraction(a.a), Fraction(a.b)
    except (ValueError, ZeroDivisionError):
        raise UsageError("exponents must be rationals or decimals") from None
    digits = cfg.digits
    f = SingularExpansion.monomial(alpha, digits=digits)
    g = SingularExpansion.monomial(beta, digits=digits)
    zig = zigzag(f, g)
    try:
        law = power_hadamard(alpha, beta, a.order, digits)
    except IntegerSumError:
        law = None
    rows, worst = [], mpmath.mpf(0)
    if law is not None:
        with mp.workdps(digits + 10):
            for t in sorted(law.terms, key=lambda t: t.key)[: a.order]:
                z = zig.coefficient(t.alpha, t.logpow)
                rel = abs(to_mpf(z) / to_mpf(t.coeff) - 1) if t.coeff else abs(to_mpf(z))
                worst = max(worst, rel)
                rows.append((str(t.alpha), t.logpow, format_decimal(t.coeff, digits),
                             format_decimal(z, digits), format_decimal(rel, 3)))
    ok = law is None or worst < a.tolerance
    status = 0 if ok else 3
    summary = ("closed law unavailable (a + b is an integer)" if law is None
               else f"max Δ < {a.tolerance:g}" if ok else f"max Δ = {format_decimal(worst, 3)} ≥ {a.tolerance:g}")
    if cfg.format == "json":
        d = {"a": str(alpha), "b": str(beta),
             "rows": [{"alpha": r[0], "logpow": r[1], "power_law": r[2], "zigzag": r[3], "rel_diff": r[4]} for r in rows],
             "zigzag": expansion_to_dict(zig), "summary": summary}
        return dump_json(d), status
    if cfg.format == "csv":
        return dump_csv(["alpha", "logpow", "power_law", "zigzag", "rel_diff"], [list(r) for r in rows]), status
    shown = min(digits, 30)
    lines = [f"(1-z)^{alpha} (.) (1-z)^{beta}"]
    if law is not None:
        lines.append(f"power law: {expansion_text(law, shown)}")
    shown_zig = zig.truncate(law.error) if law is not None else zig
    if law is None and len(zig.terms) > 2 * a.order:
        t = zig.terms[2 * a.order]
        shown_zig = zig.truncate(ErrorBudget(t.alpha, t.logpow))
    lines.append(f"zigzag:    {expansion_text(shown_zig, shown)}")
    lines += [f"  {_scale_text(Fraction(r[0]), r[1], '(1-z)', 'L')}: {r[2][:shown]}  vs  {r[3][:shown]}  Δ = {r[4]}"
              for r in rows]
    lines.append(summary)
    return "\n".join(lines) + "\n", status


def cmd_oracle(cfg: RunConfig) -> tuple[str, int]:
    a = cfg.args
    provider = oracle.MEAN_ORACLES[a.model](parse_toll(a.toll), a.nmax + 1, a.mode, cfg.digits)
    if cfg.format == "json":
        return dump_json({"model": a.model, "toll": a.toll, "mode": provider.mode,
                          "values": provider.to_csv(cfg.digits).splitlines()[1:]}), 0
    return provider.to_csv(cfg.digits), 0


COMMANDS = {
    "analyze": cmd_analyze,
    "validate": cmd_validate,
    "constants": cmd_constants,
    "polya": cmd_polya,
    "stirling": cmd_stirling,
    "hadamard": cmd_hadamard,
    "oracle": cmd_oracle,
}


# --------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--digits", type=int, help="working precision in decimal digits (at least 16)")
    common.add_argument("--format", choices=FORMATS, help="output format")
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--cache", dest="cache_path", help="JSON constants cache")

    parser = argparse.ArgumentParser(prog="singcalc", description="Singular expansions, Hadamard products "
                                     "and coefficient asymptotics for tree recurrences.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="expected-cost expansion of a tree model")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--toll", required=True, help="'log' or 'power:<alpha>'")
    p.add_argument("--order", type=_positive_int, default=4, help="terms per singular element")

    p = sub.add_parser("validate", parents=[common], help="compare the expansion with the exact recurrence")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--toll", required=True)
    p.add_argument("--nmax", type=_positive_int, required=True)
    p.add_argument("--order", type=_positive_int, default=3, help="number of leading terms compared")
    p.add_argument("--slope-tolerance", type=float, default=SLOPE_TOLERANCE)
    p.add_argument("--ratio-factor", type=float, default=RATIO_FACTOR)

    p = sub.add_parser("constants", parents=[common], help="high-precision constants")
    p.add_argument("names", nargs="*", help=f"subset of: {', '.join(CONSTANTS)}")
    p.add_argument("--no-cache", action="store_true")

    p = sub.add_parser("polya", parents=[common], help="first-return probabilities of lattice walks")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--nmax", type=_positive_int, default=5000)
    p.add_argument("--order", type=_positive_int, default=2)

    p = sub.add_parser("stirling", parents=[common], help="log n! and log prod k^k")
    p.add_argument("--kind", choices=("factorial", "superfactorial"), default="factorial")
    p.add_argument("--order", type=_positive_int, default=4)
    p.add_argument("--n", type=_positive_int, help="compare with the exact value at n")

    p = sub.add_parser("hadamard", parents=[common], help="(1-z)^a (.) (1-z)^b by both routes")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--order", type=_positive_int, default=4)
    p.add_argument("--tolerance", type=float, default=1e-40)

    p = sub.add_parser("oracle", parents=[common], help="exact mean costs as CSV")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--toll", required=True)
    p.add_argument("--nmax", type=_positive_int, required=True)
    p.add_argument("--mode", choices=("auto",) + oracle.MODES, default="auto")
    return parser


def _join_negative_values(argv: list) -> list:
    """Let ``--a -1/3`` through: argparse would read ``-1/3`` as an option."""
    out = []
    it = iter(argv)
    for item in it:
        if item in ("--a", "--b"):
            value = next(it, None)
            out.append(item if value is None else f"{item}={value}")
        else:
            out.append(item)
    return out


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        cfg = resolve_config(args)
        text, status = COMMANDS[args.command](cfg)
    except ConstantMismatchError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return 3
    except (UsageError, InvalidTollError, UnsupportedDimensionError, DivergentConstantError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
