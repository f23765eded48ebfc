"""Parallel-orbit one-way function candidate.

``N = 2**m`` initial points are iterated side by side under the same map; at
each step the output symbol is the index of the smallest iterate, written as
``m`` bits. Includes an exhaustive inversion oracle for tiny instances and two
classical randomness statistics.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dyadic import GUARD_BITS, Dyadic, Rounding
from .errors import RefusalError, UsageError
from .maps import IterationRule, MapDescriptor, compare
from .parallel import run_chunks

DEFAULT_OWF_MU = Fraction(131065, 1 << 16)
DEFAULT_WORKING_PRECISION = 64
INVERSION_BUDGET_BITS = 24
SANITY_MIN_BITS = 100


@dataclass(frozen=True)
class OwfInstance:
    """``N = 2**bits_per_symbol`` orbits of ``map`` started from ``coord_precision``-bit points."""

    map: MapDescriptor
    bits_per_symbol: int
    coord_precision: int
    rule: IterationRule | None = None
    N: int = field(init=False)

    def __post_init__(self):
        if self.bits_per_symbol < 1:
            raise UsageError(f"bits per symbol must be >= 1, got {self.bits_per_symbol}")
        if self.coord_precision < 1:
            raise UsageError(f"coordinate precision must be >= 1, got {self.coord_precision}")
        object.__setattr__(self, "N", 1 << self.bits_per_symbol)
        if self.rule is None:
            object.__setattr__(self, "rule", default_owf_rule(self.map, self.coord_precision))
        elif self.rule.map != self.map:
            raise UsageError("iteration rule and instance use different maps")

    @classmethod
    def build(cls, mu=DEFAULT_OWF_MU, N: int = 2, coord_precision: int = 16,
              rounding: Rounding | str | None = Rounding.NEAREST,
              working_precision: int | None = None) -> OwfInstance:
        """Convenience constructor taking the orbit count rather than its logarithm."""
        if N < 2 or N & (N - 1):
            raise UsageError(f"orbit count must be a power of two >= 2, got {N}")
        m = MapDescriptor(mu)
        if m.exact_doubling and working_precision is None:
            rule = IterationRule(m)
        elif rounding is None:
            rule = IterationRule(m)
        else:
            wp = working_precision or max(DEFAULT_WORKING_PRECISION, coord_precision + GUARD_BITS)
            rule = IterationRule(m, rounding, wp)
        return cls(m, N.bit_length() - 1, coord_precision, rule)

    def describe(self) -> str:
        return f"{self.map.describe()} N={self.N} n={self.coord_precision} arithmetic={self.rule.describe()}"


def default_owf_rule(m: MapDescriptor, coord_precision: int) -> IterationRule:
    """Exact for ``mu = 2``; otherwise round-to-nearest on a grid of at least 64 bits."""
    if m.exact_doubling:
        return IterationRule(m)
    return IterationRule(m, Rounding.NEAREST, max(DEFAULT_WORKING_PRECISION, coord_precision + GUARD_BITS))


@dataclass(frozen=True)
class OwfInput:
    coords: tuple[Dyadic, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))

    def check(self, inst: OwfInstance):
        if len(self.coords) != inst.N:
            raise UsageError(f"instance needs {inst.N} coordinates, got {len(self.coords)}")
        n = inst.coord_precision
        for x in self.coords:
            if x.precision > n and x.reduced().precision > n:
                raise UsageError(f"coordinate {x} is not on the 2^-{n} grid")
            if not Dyadic(0, 0) <= x < Dyadic(1, 0):
                raise UsageError(f"coordinate {x} outside [0, 1)")

    def numerators(self, n: int) -> tuple[int, ...]:
        return tuple(x.lift(n).numerator for x in self.coords)

    @classmethod
    def from_numerators(cls, nums, n: int) -> OwfInput:
        return cls(tuple(Dyadic(int(v), n) for v in nums))


@dataclass(frozen=True)
class OwfOutput:
    symbols: tuple[int, ...]
    bits_per_symbol: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.bits_per_symbol < 1:
            raise UsageError(f"bits per symbol must be >= 1, got {self.bits_per_symbol}")

    @property
    def bits(self) -> str:
        w = self.bits_per_symbol
        return "".join(format(s, f"0{w}b") for s in self.symbols)

    @classmethod
    def from_bits(cls, bits: str, bits_per_symbol: int) -> OwfOutput:
        bits = "".join(bits.split())
        if any(b not in "01" for b in bits):
            raise UsageError("bit strings may contain only 0 and 1")
        if bits_per_symbol < 1 or len(bits) % bits_per_symbol:
            raise UsageError(f"{len(bits)} bits do not split into {bits_per_symbol}-bit symbols")
        w = bits_per_symbol
        return cls(tuple(int(bits[k:k + w], 2) for k in range(0, len(bits), w)), w)

    def __len__(self):
        return len(self.symbols)


def _argmin(states: list[tuple[int, int]]) -> int:
    best = 0
    for j in range(1, len(states)):
        if compare(*states[j], *states[best]) < 0:
            best = j
    return best


def owf_step(inst: OwfInstance, x: OwfInput, i: int) -> int:
    """Index of the smallest ``i``-th iterate; ties go to the lowest index."""
    if i < 1:
        raise UsageError(f"iteration index must be >= 1, got {i}")
    x.check(inst)
    n = inst.coord_precision
    states = [inst.rule.run(v, n, i) for v in x.numerators(n)]
    return _argmin(states)


def owf_stream(inst: OwfInstance, x: OwfInput, l: int) -> OwfOutput:
    """Symbols for iterations ``1 .. l``."""
    if l < 1:
        raise UsageError(f"stream length must be >= 1, got {l}")
    x.check(inst)
    n = inst.coord_precision
    states = [(v, n) for v in x.numerators(n)]
    advance = inst.rule.advance
    out = []
    for _ in range(l):
        states = [advance(*s) for s in states]
        out.append(_argmin(states))
    return OwfOutput(tuple(out), inst.bits_per_symbol)


def random_input(inst: OwfInstance, rng: random.Random) -> OwfInput:
    n = inst.coord_precision
    return OwfInput.from_numerators([rng.getrandbits(n) for _ in range(inst.N)], n)


def orbit_ranks(inst: OwfInstance, l: int) -> np.ndarray:
    """``ranks[v, i]`` orders the ``(i+1)``-th iterates of every grid point ``v / 2**n``.

    Equal iterates get equal ranks, so argmin over ranks reproduces argmin over
    the exact values including the lowest-index tie-break.
    """
    n = inst.coord_precision
    rule = inst.rule
    dtype = rule.array_dtype(n, l)
    nums = np.arange(1 << n, dtype=np.int64).astype(dtype)
    p = n
    ranks = np.empty((1 << n, l), dtype=np.int64)
    for i in range(l):
        nums, p = rule.advance_array(nums, p)
        _, inverse = np.unique(nums, return_inverse=True)
        ranks[:, i] = inverse.reshape(-1)
    return ranks


def _invert_job(args):
    ranks, target, n, N, start, stop = args
    idx = np.arange(start, stop, dtype=np.int64)
    mask = (1 << n) - 1
    shifts = [n * (N - 1 - j) for j in range(N)]
    for i, s in enumerate(target):
        if idx.size == 0:
            break
        vals = np.stack([ranks[(idx >> sh) & mask, i] for sh in shifts])
        idx = idx[vals.argmin(axis=0) == s]
    return idx


def owf_invert_bruteforce(inst: OwfInstance, out: OwfOutput, budget_bits: int = INVERSION_BUDGET_BITS,
                          workers: int = 1, chunk: int = 1 << 18) -> list[OwfInput]:
    """Every coordinate tuple whose stream equals ``out``, in lexicographic order.

    Deliberately exponential: the search covers all ``2**(N*n)`` tuples and
    refuses beyond ``budget_bits``. Each hit is re-checked with
    :func:`owf_stream` before it is returned.
    """
    if out.bits_per_symbol != inst.bits_per_symbol:
        raise UsageError(f"output uses {out.bits_per_symbol}-bit symbols, instance uses {inst.bits_per_symbol}")
    if not out.symbols:
        raise UsageError("output stream is empty")
    bad = sorted({s for s in out.symbols if s >= inst.N})
    if bad:
        raise UsageError(f"symbols {bad} are not valid orbit indices for N={inst.N}")
    n, N = inst.coord_precision, inst.N
    total_bits = n * N
    if total_bits > budget_bits:
        raise RefusalError(f"inversion needs 2^{total_bits} tuples, above the 2^{budget_bits} budget",
                           1 << total_bits, 1 << budget_bits)
    l = len(out.symbols)
    ranks = orbit_ranks(inst, l)
    target = np.asarray(out.symbols, dtype=np.int64)
    total = 1 << total_bits
    jobs = [(ranks, target, n, N, s, min(s + chunk, total)) for s in range(0, total, chunk)]
    hits = np.concatenate(run_chunks(_invert_job, jobs, workers))
    mask = (1 << n) - 1
    found = []
    for code in hits.tolist():
        x = OwfInput.from_numerators([(code >> (n * (N - 1 - j))) & mask for j in range(N)], n)
        if owf_stream(inst, x, l) != out:
            raise AssertionError(f"inversion produced {x} which does not reproduce the output")
        found.append(x)
    return found


@dataclass(frozen=True)
class SanityReport:
    length: int
    ones: int
    runs: int
    monobit_z: float
    runs_z: float

    @property
    def passed(self) -> bool:
        return abs(self.monobit_z) < 3 and abs(self.runs_z) < 3

    def as_dict(self) -> dict:
        return {"monobit_z": self.monobit_z, "runs_z": self.runs_z, "pass": self.passed}


def randomness_sanity(bits: str) -> SanityReport:
    """Monobit and Wald-Wolfowitz runs statistics; both must stay below 3 in absolute value."""
    bits = "".join(bits.split())
    if any(b not in "01" for b in bits):
        raise UsageError("bit strings may contain only 0 and 1")
    n = len(bits)
    if n < SANITY_MIN_BITS:
        raise UsageError(f"randomness check needs at least {SANITY_MIN_BITS} bits, got {n}")
    arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    ones = int(arr.sum())
    zeros = n - ones
    monobit = abs(2 * ones - n) / math.sqrt(n)
    runs = 1 + int(np.count_nonzero(arr[1:] != arr[:-1]))
    mean = 1 + 2 * zeros * ones / n
    var = 2 * zeros * ones * (2 * zeros * ones - n) / (n * n * (n - 1))
    # a constant string has zero variance: no evidence of randomness at all
    runs_z = (runs - mean) / math.sqrt(var) if var > 0 else math.inf
    return SanityReport(n, ones, runs, monobit, runs_z)
