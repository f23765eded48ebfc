"""Unimodal interval maps evaluated on dyadic points.

The tent family ``f(x) = mu * min(x, 1 - x)`` is the reference instance. Its
parameter is a dyadic rational, so ``f`` of a point on the ``2**-p`` grid is
exactly representable at precision ``p + mu_shift``; every rounding below is
taken from that exact value. For ``mu = 2`` nothing is ever rounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dyadic import (
    Dyadic,
    DyadicInterval,
    Rounding,
    as_rounding,
    dyadic_exponent,
    parse_rational,
    round_shift,
)
from .errors import UsageError

FAMILIES = ("tent",)


@dataclass(frozen=True)
class MapDescriptor:
    """A unimodal map of [0, 1]: increasing on ``[0, c]``, decreasing on ``[c, 1]``."""

    mu: Fraction
    family: str = "tent"
    mu_numerator: int = field(init=False, repr=False, compare=False)
    mu_shift: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown map family {self.family!r}; known: {', '.join(FAMILIES)}")
        mu = self.mu
        if isinstance(mu, str):
            mu = parse_rational(mu)[0]
        elif isinstance(mu, Dyadic):
            mu = mu.value
        mu = Fraction(mu)
        if not 0 <= mu <= 2:
            raise UsageError(f"tent parameter {mu} outside [0, 2]")
        shift = dyadic_exponent(mu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "mu_numerator", mu.numerator)
        object.__setattr__(self, "mu_shift", shift)

    @property
    def critical_point(self) -> Dyadic:
        return Dyadic(1, 1)

    @property
    def maximum(self) -> Fraction:
        return self.mu / 2

    @property
    def exact_doubling(self) -> bool:
        return self.mu == 2

    @property
    def surjective(self) -> bool:
        return self.mu == 2

    def describe(self) -> str:
        return f"{self.family} mu={self.mu}"


def tent(mu="2") -> MapDescriptor:
    return MapDescriptor(mu=mu)


def exact_image(m: MapDescriptor, num: int, p: int) -> tuple[int, int]:
    """``f(num / 2**p)`` as an exact ``(numerator, precision)`` pair."""
    fold = min(num, (1 << p) - num)
    return m.mu_numerator * fold, p + m.mu_shift


def eval_point(m: MapDescriptor, x: Dyadic, rounding: Rounding | str = Rounding.NEAREST,
               precision: int | None = None) -> Dyadic:
    """``f(x)`` rounded onto the ``precision`` grid (default: the grid of ``x``)."""
    num, q = exact_image(m, x.numerator, x.precision)
    target = x.precision if precision is None else precision
    return Dyadic(round_shift(num, q - target, as_rounding(rounding)), target)


def image_interval(m: MapDescriptor, interval: DyadicInterval, precision: int | None = None) -> DyadicInterval:
    """Outward-rounded enclosure of ``f[interval]``."""
    p = interval.precision if precision is None else precision
    c = m.critical_point
    lo, hi = interval.lo, interval.hi

    def down(x):
        return eval_point(m, x, Rounding.DOWN, p)

    def up(x):
        return eval_point(m, x, Rounding.UP, p)

    if hi <= c:
        return DyadicInterval(down(lo), up(hi))
    if lo >= c:
        return DyadicInterval(down(hi), up(lo))
    return DyadicInterval(min(down(lo), down(hi)), up(c))


def bisect_first(pred: Callable[[int], bool], lo: int, hi: int) -> int | None:
    """Smallest ``x`` in ``[lo, hi]`` with ``pred(x)`` for a predicate that is monotone (False then True)."""
    if lo > hi or not pred(hi):
        return None
    while lo < hi:
        mid = (lo + hi) >> 1
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def bisect_last(pred: Callable[[int], bool], lo: int, hi: int) -> int | None:
    """Largest ``x`` in ``[lo, hi]`` with ``pred(x)`` for a predicate that is monotone (True then False)."""
    if lo > hi or not pred(lo):
        return None
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if pred(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def compare(a_num: int, a_p: int, b_num: int, b_p: int) -> int:
    """Sign of ``a_num/2**a_p - b_num/2**b_p``."""
    if a_p > b_p:
        b_num <<= a_p - b_p
    elif b_p > a_p:
        a_num <<= b_p - a_p
    return (a_num > b_num) - (a_num < b_num)


def laps(m: MapDescriptor, domain: DyadicInterval) -> list[tuple[DyadicInterval, int]]:
    """Monotone pieces of ``f`` on ``domain`` with their orientation (+1 increasing, -1 decreasing)."""
    p = domain.precision
    c = m.critical_point.lift(max(p, 1))
    dom = domain.lift(c.precision)
    pieces = []
    if dom.lo <= c:
        pieces.append((DyadicInterval(dom.lo, min(dom.hi, c)), 1))
    if dom.hi >= c:
        pieces.append((DyadicInterval(max(dom.lo, c), dom.hi), -1))
    return pieces


def preimage(m: MapDescriptor, w: Dyadic, domain: DyadicInterval | None = None) -> list[DyadicInterval]:
    """Brackets around the solutions of ``f(x) = w`` on ``domain``, one per monotone branch.

    Each bracket ``[a, b]`` has ``b - a`` at most one ulp of the working grid
    and carries a sign change: ``f(a) <= w <= f(b)`` on an increasing branch,
    the reverse on a decreasing one. A root on the grid gives ``a == b``. The
    double root at the peak is reported once.
    """
    # the doubling branch roots w/2 and 1 - w/2 need one bit more than w
    floor = w.precision + 1
    if domain is None:
        domain = DyadicInterval.unit(floor)
    elif domain.precision < floor:
        domain = domain.lift(floor)
    out: list[DyadicInterval] = []
    for lap, orient in laps(m, domain):
        p = lap.precision

        def diff(x, p=p):
            num, q = exact_image(m, x, p)
            return compare(num, q, w.numerator, w.precision)

        lo, hi = lap.lo.numerator, lap.hi.numerator
        if orient > 0:
            if diff(lo) > 0 or diff(hi) < 0:
                continue
            a = bisect_last(lambda x: diff(x) <= 0, lo, hi)
            b = a if diff(a) == 0 else a + 1
        else:
            if diff(lo) < 0 or diff(hi) > 0:
                continue
            a = bisect_last(lambda x: diff(x) >= 0, lo, hi)
            b = a if diff(a) == 0 else a + 1
        bracket = DyadicInterval.of(a, b, p)
        if not out or out[-1] != bracket:
            out.append(bracket)
    return out


def iterate(m: MapDescriptor, x: Dyadic, i: int, rounding: Rounding | str = Rounding.NEAREST,
            precision: int | None = None) -> Dyadic:
    """``i``-fold composition of :func:`eval_point` with the same rounding at each step."""
    if i < 1:
        raise UsageError(f"iteration count must be >= 1, got {i}")
    for _ in range(i):
        x = eval_point(m, x, rounding, precision)
    return x


@dataclass(frozen=True)
class IterationRule:
    """How an orbit is computed: a map plus a rounding convention.

    ``rounding=None`` iterates exactly, letting the precision grow by
    ``mu_shift`` bits per step (no growth at ``mu = 2``). Otherwise each
    iterate is rounded onto the ``precision`` grid, or onto the input's own
    grid when ``precision`` is ``None``.
    """

    map: MapDescriptor
    rounding: Rounding | None = None
    precision: int | None = None
    _doubling_exact: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.rounding is not None:
            object.__setattr__(self, "rounding", as_rounding(self.rounding))
        if self.rounding is not None and self.precision is None and not self.map.exact_doubling:
            raise UsageError("a rounded iteration rule needs a working precision")
        # exact doubling never rounds, whatever the rounding mode says
        object.__setattr__(self, "_doubling_exact", self.map.exact_doubling and self.precision is None)

    @property
    def exact(self) -> bool:
        return self.rounding is None or (self.map.exact_doubling and self.precision is None)

    def describe(self) -> str:
        if self.rounding is None:
            return "exact"
        where = "input grid" if self.precision is None else f"2^-{self.precision}"
        return f"{self.rounding.value} at {where}"

    def output_precision(self, p: int, steps: int = 1) -> int:
        if steps == 0:
            return p
        if self.rounding is None:
            return p + steps * self.map.mu_shift
        return p if self.precision is None else self.precision

    def advance(self, num: int, p: int) -> tuple[int, int]:
        m = self.map
        fold = num if num << 1 <= 1 << p else (1 << p) - num
        prod, q = m.mu_numerator * fold, p + m.mu_shift
        if self.rounding is None:
            return prod, q
        target = p if self.precision is None else self.precision
        return round_shift(prod, q - target, self.rounding), target

    def run(self, num: int, p: int, steps: int) -> tuple[int, int]:
        """State after ``steps`` iterations; same arithmetic as :meth:`states` without the per-step yield."""
        if steps <= 0:
            return num, p
        if self._doubling_exact:
            full = 1 << p
            half = full >> 1
            for _ in range(steps):
                if num > half:
                    num = full - num
                num <<= 1
            return num, p
        if self.rounding is None or steps < 2:
            advance = self.advance
            for _ in range(steps):
                num, p = advance(num, p)
            return num, p
        num, p = self.advance(num, p)
        mu_num, shift = self.map.mu_numerator, self.map.mu_shift
        full = 1 << p
        half_full = full >> 1
        if shift == 0:
            for _ in range(steps - 1):
                num = mu_num * (num if num <= half_full else full - num)
            return num, p
        mask = (1 << shift) - 1
        half = 1 << (shift - 1)
        mode = self.rounding
        for _ in range(steps - 1):
            prod = mu_num * (num if num <= half_full else full - num)
            num = prod >> shift
            if mode is Rounding.NEAREST:
                rem = prod & mask
                if rem > half or (rem == half and num & 1):
                    num += 1
            elif mode is Rounding.UP and prod & mask:
                num += 1
        return num, p

    def states(self, num: int, p: int, steps: int):
        """Yield ``(numerator, precision)`` of the next ``steps`` iterates."""
        if self._doubling_exact:
            full = 1 << p
            half = full >> 1
            for _ in range(steps):
                if num > half:
                    num = full - num
                num <<= 1
                yield num, p
            return
        if self.rounding is None or steps < 2:
            advance = self.advance
            for _ in range(steps):
                num, p = advance(num, p)
                yield num, p
            return
        # rounded onto a fixed grid: after the first step every iterate shares it
        num, p = self.advance(num, p)
        yield num, p
        mu_num, shift = self.map.mu_numerator, self.map.mu_shift
        full = 1 << p
        half_full = full >> 1
        mask = (1 << shift) - 1
        half = 1 << (shift - 1) if shift else 0
        mode = self.rounding
        for _ in range(steps - 1):
            prod = mu_num * (num if num <= half_full else full - num)
            if shift == 0:
                num = prod
            else:
                num = prod >> shift
                rem = prod & mask
                if mode is Rounding.NEAREST:
                    if rem > half or (rem == half and num & 1):
                        num += 1
                elif mode is Rounding.UP and rem:
                    num += 1
            yield num, p

    def orbit(self, x: Dyadic, steps: int) -> list[Dyadic]:
        """``[f(x), f^2(x), ..., f^steps(x)]`` under this rule."""
        out = []
        num, p = x.numerator, x.precision
        for _ in range(steps):
            num, p = self.advance(num, p)
            out.append(Dyadic(num, p))
        return out

    def advance_array(self, nums: np.ndarray, p: int) -> tuple[np.ndarray, int]:
        """Vectorised :meth:`advance` for many points on one grid."""
        m = self.map
        full = 1 << p
        fold = np.minimum(nums, full - nums)
        prod, q = fold * m.mu_numerator, p + m.mu_shift
        if self.rounding is None:
            return prod, q
        target = p if self.precision is None else self.precision
        shift = q - target
        if shift <= 0:
            return prod << -shift, target
        out = prod >> shift
        rem = prod - (out << shift)
        if self.rounding is Rounding.UP:
            out = out + (rem != 0)
        elif self.rounding is Rounding.NEAREST:
            half = 1 << (shift - 1)
            out = out + ((rem > half) | ((rem == half) & ((out & 1) == 1)))
        return out, target

    def array_dtype(self, p: int, steps: int):
        """int64 when every intermediate fits, otherwise Python integers in an object array."""
        top = max(self.output_precision(p, s) for s in range(steps + 1)) + self.map.mu_numerator.bit_length() + 1
        return np.int64 if top <= 62 else object
