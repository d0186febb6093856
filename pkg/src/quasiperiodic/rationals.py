"""Continued fractions, convergents and orbit spacing for frequencies in (0, 1)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

INT64_MAX = 2**63 - 1
MACHINE_EPS = float(np.finfo(float).eps)

NAMED_FREQUENCIES = {"golden": 1, "silver": 2}
NAMED_DEPTH = 40


class PrecisionWarning(UserWarning):
    """Raised (as a warning) when a float expansion hits the precision horizon."""


@dataclass(frozen=True)
class ContinuedFraction:
    value: float
    coefficients: tuple[int, ...]
    terminated: bool = False
    precision_limited: bool = False

    def __post_init__(self):
        if any(a < 1 for a in self.coefficients):
            raise ValueError(f"coefficients must be positive integers: {self.coefficients}")

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[int], terminated: bool = False):
        coefficients = tuple(int(a) for a in coefficients)
        if not coefficients:
            raise ValueError("need at least one coefficient")
        if any(a < 1 for a in coefficients):
            raise ValueError(f"coefficients must be positive integers: {coefficients}")
        frac = evaluate_coefficients(coefficients)
        return cls(float(frac), coefficients, terminated=terminated)

    @classmethod
    def named(cls, name: str, depth: int = NAMED_DEPTH):
        """``golden`` = [0; 1, 1, ...], ``silver`` = [0; 2, 2, ...]."""
        try:
            a = NAMED_FREQUENCIES[name]
        except KeyError:
            raise ValueError(f"unknown named frequency {name!r}") from None
        coeffs = (a,) * depth
        value = (math.sqrt(5) - 1) / 2 if a == 1 else math.sqrt(2) - 1
        return cls(value, coeffs)

    def __len__(self):
        return len(self.coefficients)

    @property
    def bound(self) -> int:
        return max(self.coefficients)


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    n: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __float__(self):
        return self.p / self.q

    def __str__(self):
        return f"{self.p}/{self.q}"


@dataclass(frozen=True)
class BoundedTypeReport:
    horizon: int
    bound: int
    bounded_so_far: bool


def evaluate_coefficients(coefficients: Sequence[int]) -> Fraction:
    """Exact value of [0; a_1, ..., a_n]."""
    frac = Fraction(0)
    for a in reversed(coefficients):
        frac = 1 / (a + frac)
    return frac


def cf_expand(x: float, max_terms: int, eps: float = 1e-12) -> ContinuedFraction:
    """Gauss-map digits of ``x``.

    Termination is declared when the remainder is within ``eps`` (relative) of an
    integer, so floats that are rationals up to rounding expand finitely. The
    rounding error of the Gauss iterate is tracked (it grows roughly like
    q_n^2 * machine-epsilon); once it could move 1/r across an integer the digit
    is no longer determined and the expansion is cut with a ``PrecisionWarning``.
    """
    if not 0 < x < 1:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")

    coeffs: list[int] = []
    r = float(x)
    err = MACHINE_EPS * r  # absolute error carried by r
    terminated = False
    limited = False
    while len(coeffs) < max_terms:
        inv = 1.0 / r
        nearest = round(inv)
        if nearest >= 1 and abs(inv - nearest) < eps * max(1.0, inv):
            coeffs.append(int(nearest))
            terminated = True
            break
        err_inv = err / (r * r) + MACHINE_EPS * inv
        a = int(math.floor(inv))
        margin = 4.0 * err_inv
        if math.floor(inv - margin) != a or math.floor(inv + margin) != a:
            limited = True
            warnings.warn(
                f"continued fraction of {x!r} truncated after {len(coeffs)} terms: "
                "float precision horizon reached",
                PrecisionWarning,
                stacklevel=2,
            )
            break
        coeffs.append(a)
        r = inv - a
        err = err_inv + MACHINE_EPS
    return ContinuedFraction(float(x), tuple(coeffs), terminated=terminated, precision_limited=limited)


def convergents(cf: ContinuedFraction, depth: int | None = None) -> list[Convergent]:
    """p_n/q_n for n = 1..depth from the recurrence q_n = a_n q_{n-1} + q_{n-2}."""
    if depth is None:
        depth = len(cf.coefficients)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > len(cf.coefficients):
        raise IndexError(f"depth {depth} exceeds the {len(cf.coefficients)} available coefficients")
    out = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for n, a in enumerate(cf.coefficients[:depth], start=1):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        if q > INT64_MAX:
            raise OverflowError(f"convergent denominator exceeds 64-bit range at n={n}")
        out.append(Convergent(p, q, n))
    return out


def bounded_type(cf: ContinuedFraction, horizon: int | None = None, bound: int | None = None) -> BoundedTypeReport:
    """Max coefficient over the first ``horizon`` digits.

    ``bounded_so_far`` is only meaningful against an explicit ``bound``; without one
    it reports whether the inspected digits are all finite, which is always true.
    """
    coeffs = cf.coefficients if horizon is None else cf.coefficients[:horizon]
    b = max(coeffs)
    return BoundedTypeReport(len(coeffs), b, True if bound is None else b <= bound)


def orbit_gap(theta: float, alpha: float, q: int) -> float:
    """Largest circular gap between the points theta + j*alpha mod 1, j < q."""
    if q <= 0:
        raise ValueError("q must be a positive integer")
    pts = np.sort(np.mod(theta + alpha * np.arange(q), 1.0))
    if q == 1:
        return 1.0
    gaps = np.diff(pts)
    wrap = pts[0] + 1.0 - pts[-1]
    return float(max(gaps.max(), wrap))


def parse_frequency(spec: str, depth: int = NAMED_DEPTH) -> ContinuedFraction | Fraction:
    """Parse a command-line frequency.

    Accepts ``p/q`` (returned as an exact Fraction), a named frequency, a
    comma-separated coefficient list, or a decimal literal (expanded with
    ``cf_expand``).
    """
    s = spec.strip()
    if s in NAMED_FREQUENCIES:
        return ContinuedFraction.named(s, depth)
    if "/" in s:
        frac = Fraction(s)
        if not 0 <= frac <= 1:
            raise ValueError(f"frequency {spec!r} outside [0, 1]")
        return frac
    if "," in s:
        return ContinuedFraction.from_coefficients([int(t) for t in s.split(",") if t.strip()])
    return cf_expand(float(s), depth)
