"""Toll sequences t_n = n^alpha or log n, with t_0 = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp

from .specfun import to_fraction, to_mpf


class InvalidTollError(ValueError):
    """Raised for malformed toll descriptions or alpha <= 0."""


@dataclass(frozen=True)
class TollSpec:
    kind: str  # "power" or "log"
    alpha: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("power", "log"):
            raise InvalidTollError(f"unknown toll kind {self.kind!r}")
        object.__setattr__(self, "alpha", to_fraction(self.alpha))
        if self.kind == "power" and self.alpha <= 0:
            raise InvalidTollError("a power toll needs alpha > 0")

    @classmethod
    def power(cls, alpha) -> "TollSpec":
        return cls("power", alpha)

    @classmethod
    def log(cls) -> "TollSpec":
        return cls("log")

    @classmethod
    def parse(cls, text: str) -> "TollSpec":
        """``"log"`` or ``"power:<alpha>"`` with alpha a rational or decimal."""
        text = text.strip()
        if text == "log":
            return cls.log()
        kind, sep, value = text.partition(":")
        if kind != "power" or not sep:
            raise InvalidTollError(f"toll must be 'log' or 'power:<alpha>', got {text!r}")
        try:
            alpha = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidTollError(f"bad exponent {value!r}") from exc
        return cls.power(alpha)

    @property
    def is_rational(self) -> bool:
        """True when every t_n is rational (integer powers)."""
        return self.kind == "power" and self.alpha.denominator == 1

    @property
    def t1(self):
        return Fraction(1) if self.kind == "power" else Fraction(0)

    def value(self, n: int, mode: str = "exact", digits: int = 50):
        if n == 0:
            return Fraction(0) if mode == "exact" else (0.0 if mode == "float" else mpmath.mpf(0))
        if mode == "exact":
            if not self.is_rational:
                raise ValueError(f"{self} has irrational values; use mode 'mp' or 'float'")
            return Fraction(n) ** int(self.alpha)
        if mode == "float":
            return math.log(n) if self.kind == "log" else float(n) ** float(self.alpha)
        with mp.workdps(digits):
            if self.kind == "log":
                return mpmath.log(n)
            return mpmath.mpf(n) ** to_mpf(self.alpha)

    def values(self, N: int, mode: str = "exact", digits: int = 50) -> list:
        return [self.value(n, mode, digits) for n in range(N)]

    def label(self) -> str:
        return "log" if self.kind == "log" else f"power:{self.alpha}"

    def __str__(self) -> str:
        return "log n" if self.kind == "log" else f"n^{self.alpha}"
