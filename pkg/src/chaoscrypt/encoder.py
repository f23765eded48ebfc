"""Step-function quantizers turning orbit points into keystream symbols."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import Dyadic, DyadicInterval
from .errors import UsageError

OWNERSHIPS = ("left", "right")


@dataclass(frozen=True)
class StepEncoder:
    """A partition of [0, 1] into cells ``[b_j, b_{j+1}]``, each carrying a symbol.

    An interior breakpoint belongs to exactly one neighbouring cell: the lower
    one under ``"left"`` ownership (so ``encode(1/2) == 0`` for the
    threshold-at-one-half encoder), the upper one under ``"right"``.
    """

    breakpoints: tuple[Dyadic, ...]
    symbols: tuple[int, ...]
    alphabet_size: int | None = None
    boundary_ownership: str = "left"
    _bounds: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(self.breakpoints)
        syms = tuple(int(s) for s in self.symbols)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "symbols", syms)
        if len(bps) < 2 or bps[0] != Dyadic(0, 0) or bps[-1] != Dyadic(1, 0):
            raise UsageError("breakpoints must run from 0 to 1")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise UsageError("breakpoints must be strictly increasing")
        if len(syms) != len(bps) - 1:
            raise UsageError(f"{len(bps) - 1} cells need {len(bps) - 1} symbols, got {len(syms)}")
        size = self.alphabet_size if self.alphabet_size is not None else max(2, max(syms) + 1)
        if size < 2:
            raise UsageError("alphabet needs at least two symbols")
        if any(s < 0 or s >= size for s in syms):
            raise UsageError(f"symbols {syms} out of range for alphabet size {size}")
        object.__setattr__(self, "alphabet_size", size)
        if self.boundary_ownership not in OWNERSHIPS:
            raise UsageError(f"boundary ownership must be left or right, got {self.boundary_ownership!r}")

    @classmethod
    def parse(cls, text: str, boundary_ownership: str = "left", alphabet_size: int | None = None) -> StepEncoder:
        """Read ``"s0:b1:s1:...:bq-1:sq-1"``, e.g. ``"0:1/2:1"``."""
        parts = [s.strip() for s in text.split(":")]
        if len(parts) % 2 == 0:
            raise UsageError(f"encoder {text!r} must alternate symbols and breakpoints, starting and ending with a symbol")
        try:
            symbols = [int(s) for s in parts[0::2]]
        except ValueError:
            raise UsageError(f"encoder {text!r} has a non-integer symbol") from None
        inner = [Dyadic.parse(b) for b in parts[1::2]]
        return cls((Dyadic(0, 0), *inner, Dyadic(1, 0)), tuple(symbols), alphabet_size, boundary_ownership)

    def to_spec(self) -> str:
        out = [str(self.symbols[0])]
        for b, s in zip(self.breakpoints[1:-1], self.symbols[1:]):
            r = b.reduced()
            out += [f"{r.numerator}/{1 << r.precision}", str(s)]
        return ":".join(out)

    @property
    def precision(self) -> int:
        return max(b.precision for b in self.breakpoints)

    @property
    def cell_count(self) -> int:
        return len(self.symbols)

    def encode(self, x: Dyadic) -> int:
        return self.symbol_at(x.numerator, x.precision)

    def symbol_at(self, num: int, p: int) -> int:
        """Symbol of ``num / 2**p`` using integer thresholds cached per precision."""
        bounds = self._bounds.get(p) or _thresholds(self, p)
        if self.boundary_ownership == "left":
            return self.symbols[bisect_left(bounds, num)]
        return self.symbols[bisect_right(bounds, num)]

    def symbols_at(self, nums: np.ndarray, p: int) -> np.ndarray:
        bounds = _thresholds(self, p)
        side = "left" if self.boundary_ownership == "left" else "right"
        if nums.dtype == object:
            pick = np.fromiter(((bisect_left if side == "left" else bisect_right)(bounds, int(v)) for v in nums),
                               dtype=np.int64, count=len(nums))
        else:
            pick = np.searchsorted(np.asarray(bounds, dtype=np.int64), nums, side=side)
        return np.asarray(self.symbols, dtype=np.int64)[pick]

    def cells(self) -> list[tuple[DyadicInterval, int]]:
        p = self.precision
        return [(DyadicInterval(a.lift(p), b.lift(p)), s)
                for a, b, s in zip(self.breakpoints, self.breakpoints[1:], self.symbols)]

    def cells_for_symbol(self, sigma: int) -> list[DyadicInterval]:
        """Closed hulls of the maximal runs of cells carrying ``sigma``, ascending."""
        if not 0 <= sigma < self.alphabet_size:
            raise UsageError(f"symbol {sigma} outside alphabet of size {self.alphabet_size}")
        out: list[DyadicInterval] = []
        for cell, s in self.cells():
            if s != sigma:
                continue
            if out and out[-1].hi == cell.lo:
                out[-1] = DyadicInterval(out[-1].lo, cell.hi)
            else:
                out.append(cell)
        return out

    def owns(self, point: Dyadic, hull: DyadicInterval) -> bool:
        """Whether the endpoint ``point`` of a symbol hull is itself encoded with that hull's symbol."""
        if point == hull.lo:
            return point == Dyadic(0, 0) or self.boundary_ownership == "right"
        if point == hull.hi:
            return point == Dyadic(1, 0) or self.boundary_ownership == "left"
        return True


def encode(enc: StepEncoder, x: Dyadic) -> int:
    return enc.encode(x)


def cells_for_symbol(enc: StepEncoder, sigma: int) -> list[DyadicInterval]:
    return enc.cells_for_symbol(sigma)


def threshold_encoder(threshold: Dyadic = Dyadic(1, 1), boundary_ownership: str = "left") -> StepEncoder:
    """Binary encoder: 0 up to ``threshold``, 1 above it."""
    return StepEncoder((Dyadic(0, 0), threshold, Dyadic(1, 0)), (0, 1), 2, boundary_ownership)


def _thresholds(enc: StepEncoder, p: int) -> tuple[int, ...]:
    cached = enc._bounds.get(p)
    if cached is not None:
        return cached
    # left ownership: b < x  <=>  num > floor(b * 2^p); right: b <= x  <=>  num >= ceil(b * 2^p)
    out = []
    for b in enc.breakpoints[1:-1]:
        if b.precision <= p:
            out.append(b.numerator << (p - b.precision))
        elif enc.boundary_ownership == "left":
            out.append(b.numerator >> (b.precision - p))
        else:
            out.append(-((-b.numerator) >> (b.precision - p)))
    enc._bounds[p] = tuple(out)
    return enc._bounds[p]


def symbols_of(enc: StepEncoder, points: Sequence[Dyadic]) -> list[int]:
    return [enc.encode(x) for x in points]
