"""Exact dyadic fixed-point numbers on [0, 1] and closed intervals over them.

A :class:`Dyadic` is ``numerator / 2**precision``. Arithmetic results are
rounded back onto the operands' grid in an explicit direction, so interval
endpoints can always be rounded outward.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import PrecisionMismatch, RangeError, RefusalError, UsageError

#: Extra bits carried by attack internals beyond the key precision.
GUARD_BITS = 16
#: Largest number of grid points any brute-force routine will enumerate.
ENUMERATION_CAP = 2**24


class Rounding(str, enum.Enum):
    DOWN = "down"
    UP = "up"
    NEAREST = "nearest"


def as_rounding(value) -> Rounding:
    try:
        return Rounding(value)
    except ValueError:
        raise UsageError(f"unknown rounding mode {value!r}; expected down, up or nearest") from None


def round_shift(value: int, shift: int, rounding: Rounding = Rounding.NEAREST) -> int:
    """Divide the non-negative integer ``value`` by ``2**shift`` with directed rounding.

    Nearest rounding breaks ties toward the even quotient.
    """
    if shift <= 0:
        return value << -shift
    q = value >> shift
    r = value - (q << shift)
    if r == 0 or rounding is Rounding.DOWN:
        return q
    if rounding is Rounding.UP:
        return q + 1
    half = 1 << (shift - 1)
    if r > half or (r == half and q & 1):
        return q + 1
    return q


def round_fraction(value: Fraction, precision: int, rounding: Rounding = Rounding.NEAREST) -> int:
    """Numerator at ``precision`` of the non-negative rational ``value`` rounded onto the grid."""
    scaled = value * (1 << precision)
    q, r = divmod(scaled.numerator, scaled.denominator)
    if r == 0 or rounding is Rounding.DOWN:
        return q
    if rounding is Rounding.UP:
        return q + 1
    twice = 2 * r
    if twice > scaled.denominator or (twice == scaled.denominator and q & 1):
        return q + 1
    return q


def dyadic_exponent(value: Fraction) -> int:
    """Return ``k`` such that ``value`` has denominator ``2**k``; raise if it is not dyadic."""
    den = value.denominator
    if den & (den - 1):
        raise UsageError(f"{value} is not a dyadic rational")
    return den.bit_length() - 1


_NUM_POW = re.compile(r"^\s*(\d+)\s*/\s*2\s*\^\s*(\d+)\s*$")


def parse_rational(text: str) -> tuple[Fraction, int | None]:
    """Parse ``"num/2^p"``, ``"a/b"``, an integer, or a finite decimal.

    Returns the exact value and, for the ``num/2^p`` form only, the stated
    precision. The value must be a non-negative dyadic rational.
    """
    m = _NUM_POW.match(text)
    if m:
        num, p = int(m.group(1)), int(m.group(2))
        return Fraction(num, 1 << p), p
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse {text!r} as a dyadic rational") from None
    if value < 0:
        raise UsageError(f"{text!r} is negative")
    dyadic_exponent(value)
    return value, None


@dataclass(frozen=True, eq=False, slots=True)
class Dyadic:
    """The point ``numerator / 2**precision`` of the unit interval.

    Equality, ordering and hashing follow the value, so ``Dyadic(1, 1)`` and
    ``Dyadic(2, 2)`` compare equal.
    """

    numerator: int
    precision: int

    def __post_init__(self):
        if not isinstance(self.numerator, int) or not isinstance(self.precision, int):
            raise UsageError("Dyadic numerator and precision must be integers")
        if self.precision < 0:
            raise UsageError(f"negative precision {self.precision}")
        if not 0 <= self.numerator <= 1 << self.precision:
            raise RangeError("Dyadic", f"{self.numerator}/2^{self.precision} is outside [0, 1]")

    @classmethod
    def from_fraction(cls, value: Fraction, precision: int, rounding: Rounding = Rounding.NEAREST) -> Dyadic:
        if value < 0 or value > 1:
            raise RangeError("from_fraction", f"{value} is outside [0, 1]")
        return cls(round_fraction(Fraction(value), precision, as_rounding(rounding)), precision)

    @classmethod
    def parse(cls, text: str, precision: int | None = None) -> Dyadic:
        """Read ``"num/2^p"`` (precision kept as written), ``"a/b"`` or a decimal.

        Values without a stated precision are placed on the coarsest grid that
        holds them, or lifted to ``precision`` when given.
        """
        value, stated = parse_rational(text)
        if value > 1:
            raise RangeError("parse", f"{text!r} is outside [0, 1]")
        p = stated if stated is not None else dyadic_exponent(value)
        d = cls(int(value * (1 << p)), p)
        return d.lift(precision) if precision is not None else d

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.precision)

    @property
    def ulp(self) -> Fraction:
        return Fraction(1, 1 << self.precision)

    def lift(self, precision: int) -> Dyadic:
        """Exactly re-express this point at ``precision``; the point must lie on that grid."""
        if precision >= self.precision:
            return Dyadic(self.numerator << (precision - self.precision), precision)
        shift = self.precision - precision
        if self.numerator & ((1 << shift) - 1):
            raise PrecisionMismatch(f"{self} does not lie on the 2^-{precision} grid")
        return Dyadic(self.numerator >> shift, precision)

    def round_to(self, precision: int, rounding: Rounding = Rounding.NEAREST) -> Dyadic:
        if precision >= self.precision:
            return self.lift(precision)
        return Dyadic(round_shift(self.numerator, self.precision - precision, as_rounding(rounding)), precision)

    def complement(self) -> Dyadic:
        """The mirror point ``1 - x`` on the same grid."""
        return Dyadic((1 << self.precision) - self.numerator, self.precision)

    def reduced(self) -> Dyadic:
        """Same value on the coarsest grid that holds it."""
        if self.numerator == 0:
            return Dyadic(0, 0)
        tz = (self.numerator & -self.numerator).bit_length() - 1
        tz = min(tz, self.precision)
        return Dyadic(self.numerator >> tz, self.precision - tz)

    def _key(self, other: Dyadic) -> tuple[int, int]:
        p = max(self.precision, other.precision)
        return self.numerator << (p - self.precision), other.numerator << (p - other.precision)

    def __eq__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b = self._key(other)
        return a == b

    def __lt__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b = self._key(other)
        return a < b

    def __le__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b = self._key(other)
        return a <= b

    def __gt__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b = self._key(other)
        return a > b

    def __ge__(self, other):
        if not isinstance(other, Dyadic):
            return NotImplemented
        a, b = self._key(other)
        return a >= b

    def __hash__(self):
        r = self.reduced()
        return hash((r.numerator, r.precision))

    def __float__(self):
        return self.numerator / (1 << self.precision)

    def __str__(self):
        return f"{self.numerator}/2^{self.precision}"

    def __repr__(self):
        return f"Dyadic({self.numerator}, {self.precision})"


def _common_precision(*points: Dyadic) -> int:
    p = points[0].precision
    for d in points[1:]:
        if d.precision != p:
            raise PrecisionMismatch(f"operands at precisions {[x.precision for x in points]}")
    return p


def fixed_point_arith(a: Dyadic, b: Dyadic, op: str, rounding: Rounding | str = Rounding.NEAREST) -> Dyadic:
    """Add, subtract or multiply two points of the same grid, rounding the result back onto it."""
    p = _common_precision(a, b)
    rounding = as_rounding(rounding)
    if op == "add":
        num = a.numerator + b.numerator
        if num > 1 << p:
            raise RangeError("add", f"{a} + {b} exceeds 1")
    elif op == "sub":
        num = a.numerator - b.numerator
        if num < 0:
            raise RangeError("sub", f"{a} - {b} is negative")
    elif op == "mul":
        num = round_shift(a.numerator * b.numerator, p, rounding)
    else:
        raise UsageError(f"unknown operation {op!r}")
    return Dyadic(num, p)


@dataclass(frozen=True, slots=True)
class DyadicInterval:
    """Closed interval ``[lo, hi]`` with both endpoints on one grid."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        _common_precision(self.lo, self.hi)
        if self.hi < self.lo:
            raise UsageError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def of(cls, lo: int, hi: int, precision: int) -> DyadicInterval:
        return cls(Dyadic(lo, precision), Dyadic(hi, precision))

    @classmethod
    def unit(cls, precision: int = 0) -> DyadicInterval:
        return cls.of(0, 1 << precision, precision)

    @classmethod
    def parse(cls, text: str) -> DyadicInterval:
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise UsageError(f"interval {text!r} must look like [lo, hi]")
        parts = body[1:-1].split(",")
        if len(parts) != 2:
            raise UsageError(f"interval {text!r} must have two endpoints")
        lo, hi = (Dyadic.parse(s) for s in parts)
        p = max(lo.precision, hi.precision)
        return cls(lo.lift(p), hi.lift(p))

    @property
    def precision(self) -> int:
        return self.lo.precision

    @property
    def width(self) -> Dyadic:
        return Dyadic(self.hi.numerator - self.lo.numerator, self.precision)

    @property
    def is_point(self) -> bool:
        return self.lo.numerator == self.hi.numerator

    def lift(self, precision: int) -> DyadicInterval:
        return DyadicInterval(self.lo.lift(precision), self.hi.lift(precision))

    def contains(self, x: Dyadic) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: DyadicInterval) -> DyadicInterval | None:
        """Exact intersection, or ``None`` when the intervals are disjoint."""
        _common_precision(self.lo, other.lo)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return DyadicInterval(lo, hi) if lo <= hi else None

    def hull(self, other: DyadicInterval) -> DyadicInterval:
        _common_precision(self.lo, other.lo)
        return DyadicInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def interval_algebra(a: DyadicInterval, b: DyadicInterval, op: str) -> DyadicInterval | None:
    if op == "intersect":
        return a.intersect(b)
    if op == "hull":
        return a.hull(b)
    raise UsageError(f"unknown interval operation {op!r}")


@dataclass(frozen=True)
class CandidateSet:
    """A finite union of closed intervals, sorted, with disjoint interiors."""

    intervals: tuple[DyadicInterval, ...]
    precision: int

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        prev = None
        for iv in self.intervals:
            if iv.precision != self.precision:
                raise PrecisionMismatch(f"interval {iv} is not at precision {self.precision}")
            if prev is not None and iv.lo < prev.hi:
                raise UsageError(f"intervals {prev} and {iv} overlap or are unsorted")
            prev = iv

    @classmethod
    def from_intervals(cls, intervals: Iterable[DyadicInterval], precision: int) -> CandidateSet:
        """Sort, then merge overlapping or touching intervals."""
        ordered = sorted((iv.lift(precision) for iv in intervals), key=lambda iv: iv.lo.numerator)
        merged: list[DyadicInterval] = []
        for iv in ordered:
            if merged and iv.lo <= merged[-1].hi:
                if iv.hi > merged[-1].hi:
                    merged[-1] = DyadicInterval(merged[-1].lo, iv.hi)
            else:
                merged.append(iv)
        return cls(tuple(merged), precision)

    def measure(self) -> Dyadic:
        total = sum(iv.hi.numerator - iv.lo.numerator for iv in self.intervals)
        return Dyadic(total, self.precision)

    def contains(self, x: Dyadic) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def grid_population(self, n: int) -> int:
        """Number of points ``i / 2**n`` lying in the set."""
        return sum(grid_count(iv, n) for iv in self.intervals)

    def is_subset_of(self, other: CandidateSet) -> bool:
        return all(any(o.lo <= iv.lo and iv.hi <= o.hi for o in other.intervals) for iv in self.intervals)

    def __iter__(self) -> Iterator[DyadicInterval]:
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)


def grid_bounds(interval: DyadicInterval, n: int) -> tuple[int, int]:
    """Numerators of the first and last grid points ``i / 2**n`` inside ``interval``.

    The pair is ``(first, first - 1)`` when the interval holds no grid point.
    """
    p = interval.precision
    if n >= p:
        return interval.lo.numerator << (n - p), interval.hi.numerator << (n - p)
    shift = p - n
    first = -((-interval.lo.numerator) >> shift)
    last = interval.hi.numerator >> shift
    return first, last


def grid_count(interval: DyadicInterval, n: int) -> int:
    first, last = grid_bounds(interval, n)
    return max(0, last - first + 1)


def grid_enumerate(interval: DyadicInterval, n: int, cap: int = ENUMERATION_CAP) -> list[Dyadic]:
    """All points ``i / 2**n`` in the closed ``interval``, ascending."""
    first, last = grid_bounds(interval, n)
    count = max(0, last - first + 1)
    if count > cap:
        raise RefusalError(f"{count} grid points in {interval} exceed the cap of {cap}", count, cap)
    return [Dyadic(i, n) for i in range(first, last + 1)]


def measure(candidates: CandidateSet) -> Dyadic:
    return candidates.measure()


def contains(candidates: CandidateSet, x: Dyadic) -> bool:
    return candidates.contains(x)


def format_points(points: Sequence[Dyadic]) -> str:
    return ", ".join(str(d) for d in points)
