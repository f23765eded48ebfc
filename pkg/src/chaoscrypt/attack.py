"""Known-plaintext key recovery by interval refinement.

Each candidate interval is tracked as a :class:`RefinementBranch`: a piece of
key space on which the orbit map ``x -> f^i(x)`` is monotone, together with
the exact image of the piece. Every new symbol advances the images one step,
splits any piece whose image straddles the critical point, intersects the
images with the symbol's cells and pulls the survivors back to key space by
bisection. The orbit map is evaluated with the defender's own arithmetic
(``IterationRule``), so pieces are exact on the working grid and the true key
is never dropped; closed cell hulls may keep a few spurious boundary points,
which the final forward check removes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Sequence

import numpy as np

from .cipher import KeystreamSegment, default_rule
from .dyadic import (
    ENUMERATION_CAP,
    GUARD_BITS,
    CandidateSet,
    Dyadic,
    DyadicInterval,
    grid_bounds,
)
from .encoder import StepEncoder
from .errors import BackwardFrontierError, InconsistentModelError, RefusalError, UsageError
from .maps import IterationRule, MapDescriptor, bisect_first, bisect_last, compare
from .parallel import run_chunks

#: Below this many grid points, enumeration beats further refinement.
BRUTE_FORCE_THRESHOLD = 2**12
#: Largest frontier backward iteration will carry.
FRONTIER_CAP = 2**16
#: Refinement refuses to track more pieces than this.
MAX_BRANCHES = 2**12


@dataclass(frozen=True)
class RefinementBranch:
    """Key-space piece ``domain`` on which ``f^depth`` is monotone with image ``forward_image``."""

    domain: DyadicInterval
    forward_image: DyadicInterval
    orientation: int
    depth: int


@dataclass
class AttackTrace:
    candidate_sets: list[CandidateSet] = field(default_factory=list)
    branch_counts: list[int] = field(default_factory=list)

    @property
    def measures(self) -> list[Dyadic]:
        return [s.measure() for s in self.candidate_sets]

    @property
    def shrink_ratios(self) -> list[Fraction | None]:
        """``measure(E_i) / measure(E_{i-1})`` for ``i >= 2``; ``None`` after a null set."""
        ms = [m.value for m in self.measures]
        return [b / a if a else None for a, b in zip(ms, ms[1:])]


@dataclass
class AttackReport:
    surviving_keys: list[Dyadic]
    iterations_used: int
    brute_force_count: int
    trace: AttackTrace | None = None
    informative_iterations: int = 0
    degenerate_iterations: int = 0
    precision: int = 0
    state_precision: int = 0
    max_intervals: int = 0
    rule: str = ""

    def summary(self) -> dict[str, str]:
        return {
            "survivors": str(len(self.surviving_keys)),
            "iterations_used": str(self.iterations_used),
            "informative_iterations": str(self.informative_iterations),
            "degenerate_iterations": str(self.degenerate_iterations),
            "brute_force_count": str(self.brute_force_count),
            "max_intervals": str(self.max_intervals),
            "working_precision": str(self.precision),
            "state_precision": str(self.state_precision),
            "iteration_rule": self.rule,
        }


def root_branch(precision: int) -> RefinementBranch:
    unit = DyadicInterval.unit(precision)
    return RefinementBranch(unit, unit, 1, 0)


def candidate_set(branches: Sequence[RefinementBranch], precision: int | None = None) -> CandidateSet:
    if precision is None:
        precision = branches[0].domain.precision if branches else 0
    return CandidateSet.from_intervals((b.domain for b in branches), precision)


def _orbit_map(rule: IterationRule, p: int, depth: int):
    run = rule.run
    return lambda x: run(x, p, depth)


def _split(branch: RefinementBranch, rule: IterationRule, c: Dyadic) -> list[RefinementBranch]:
    """Cut ``branch`` where its image crosses the critical point so each piece maps into one lap."""
    img = branch.forward_image
    if not (img.lo < c < img.hi):
        return [branch]
    dom = branch.domain
    p, lo, hi = dom.precision, dom.lo.numerator, dom.hi.numerator
    phi = _orbit_map(rule, p, branch.depth)

    def side(x):
        n, q = phi(x)
        return compare(n, q, c.numerator, c.precision)

    def piece(a, b):
        ya, yb = phi(a), phi(b)
        pair = sorted([ya, yb], key=lambda y: Fraction(y[0], 1 << y[1]))
        image = DyadicInterval(Dyadic(*pair[0]), Dyadic(*pair[1]))
        return RefinementBranch(DyadicInterval.of(a, b, p), image, branch.orientation, branch.depth)

    if branch.orientation > 0:
        left_end = bisect_last(lambda x: side(x) <= 0, lo, hi)
        right_start = bisect_first(lambda x: side(x) >= 0, lo, hi)
    else:
        left_end = bisect_last(lambda x: side(x) >= 0, lo, hi)
        right_start = bisect_first(lambda x: side(x) <= 0, lo, hi)
    return [piece(lo, left_end), piece(right_start, hi)]


def _restrict(piece: RefinementBranch, rule: IterationRule, enc: StepEncoder,
              hulls: list[DyadicInterval], c: Dyadic) -> list[RefinementBranch]:
    img = piece.forward_image
    lap = 1 if img.hi <= c else -1
    a = rule.advance(img.lo.numerator, img.lo.precision)
    b = rule.advance(img.hi.numerator, img.hi.precision)
    if lap < 0:
        a, b = b, a
    new_lo, new_hi = Dyadic(*a), Dyadic(*b)
    orient = piece.orientation * lap
    depth = piece.depth + 1
    dom = piece.domain
    p, lo, hi = dom.precision, dom.lo.numerator, dom.hi.numerator
    phi = _orbit_map(rule, p, depth)

    def vs(x, target):
        n, q = phi(x)
        return compare(n, q, target.numerator, target.precision)

    out = []
    for hull in hulls:
        u = max(new_lo, hull.lo)
        v = min(new_hi, hull.hi)
        if u > v:
            continue
        if u == v and not enc.owns(u, hull):
            continue
        if orient > 0:
            x0 = lo if u == new_lo else bisect_first(lambda x: vs(x, u) >= 0, lo, hi)
            x1 = hi if v == new_hi else bisect_last(lambda x: vs(x, v) <= 0, lo, hi)
        else:
            x0 = lo if v == new_hi else bisect_first(lambda x: vs(x, v) <= 0, lo, hi)
            x1 = hi if u == new_lo else bisect_last(lambda x: vs(x, u) >= 0, lo, hi)
        if x0 is None or x1 is None or x0 > x1:
            continue
        ya, yb = Dyadic(*phi(x0)), Dyadic(*phi(x1))
        image = DyadicInterval(ya, yb) if orient > 0 else DyadicInterval(yb, ya)
        out.append(RefinementBranch(DyadicInterval.of(x0, x1, p), image, orient, depth))
    return out


def refine_step(branches: Sequence[RefinementBranch], m: MapDescriptor, enc: StepEncoder, symbol: int, i: int,
                rule: IterationRule | None = None, max_branches: int | None = None) -> list[RefinementBranch]:
    """Shrink the branches of ``E_{i-1}`` to those whose ``i``-th iterate encodes to ``symbol``."""
    rule = IterationRule(m) if rule is None else rule
    if rule.map != m:
        raise UsageError("iteration rule uses a different map")
    hulls = enc.cells_for_symbol(symbol)
    c = m.critical_point
    out: list[RefinementBranch] = []
    for branch in branches:
        if branch.depth != i - 1:
            raise UsageError(f"branch at depth {branch.depth} cannot take iteration {i}")
        for piece in _split(branch, rule, c):
            out.extend(_restrict(piece, rule, enc, hulls, c))
        if max_branches is not None and len(out) > max_branches:
            raise RefusalError(f"refinement at iteration {i} needs more than {max_branches} branches",
                               len(out), max_branches)
    if not out:
        raise InconsistentModelError(f"no key produces symbol {symbol} at iteration {i} given the earlier symbols")
    out.sort(key=lambda b: (b.domain.lo.numerator, b.domain.hi.numerator))
    return out


def initial_candidates(m: MapDescriptor, enc: StepEncoder, c1: int, precision: int | None = None,
                       rule: IterationRule | None = None) -> list[RefinementBranch]:
    """Branches of ``E_1``: the key-space pieces whose first iterate encodes to ``c1``.

    Starting from the identity on [0, 1], the key space is cut at the
    critical point and each monotone half is pulled back through the cell
    endpoints of ``c1``.
    """
    if precision is None:
        precision = max(enc.precision, 1) + GUARD_BITS
    try:
        return refine_step([root_branch(precision)], m, enc, c1, 1, rule)
    except InconsistentModelError:
        raise InconsistentModelError(f"symbol {c1} can never be produced by {m.describe()} under this encoder") from None


def _survivors(first: int, last: int, symbols: tuple[int, ...], rule: IterationRule, enc: StepEncoder,
               n: int) -> list[int]:
    dtype = rule.array_dtype(n, len(symbols))
    keys = np.arange(first, last + 1, dtype=np.int64) if dtype is np.int64 else \
        np.array(list(range(first, last + 1)), dtype=object)
    state, q = keys.copy(), n
    for c in symbols:
        if len(keys) == 0:
            break
        state, q = rule.advance_array(state, q)
        keep = enc.symbols_at(state, q) == c
        keys, state = keys[keep], state[keep]
    return [int(k) for k in keys]


def _survivors_job(args):
    return _survivors(*args)


def brute_force_finalize(candidates: CandidateSet, segment: KeystreamSegment, m: MapDescriptor, enc: StepEncoder,
                         n: int, rule: IterationRule | None = None, cap: int = ENUMERATION_CAP,
                         workers: int = 1, chunk: int = 2**16) -> list[Dyadic]:
    """All ``2**-n`` grid points of ``candidates`` whose forward symbols reproduce ``segment``.

    The symbols are matched from each point's first iterate.
    """
    rule = IterationRule(m) if rule is None else rule
    total = candidates.grid_population(n)
    if total > cap:
        more = math.ceil(math.log2(total / cap))
        raise RefusalError(f"{total} candidate keys exceed the enumeration cap of {cap}; "
                           f"about {more} more keystream symbols are needed", total, cap, more)
    segment.check_alphabet(enc.alphabet_size)
    jobs = []
    for iv in candidates:
        first, last = grid_bounds(iv, n)
        for start in range(first, last + 1, chunk):
            jobs.append((start, min(last, start + chunk - 1), segment.symbols, rule, enc, n))
    found = sorted({k for part in run_chunks(_survivors_job, jobs, workers) for k in part})
    return [Dyadic(k, n) for k in found]


def state_precision(rule: IterationRule, n: int, offset: int) -> int:
    """Grid of the orbit state ``f^(offset-1)(k)`` for an ``n``-bit key."""
    return n if offset == 1 else rule.output_precision(n, offset - 1)


def run_attack(segment: KeystreamSegment, m: MapDescriptor, enc: StepEncoder, n: int, *,
               rule: IterationRule | None = None, precision: int | None = None, trace: bool = False,
               brute_force_threshold: int | None = BRUTE_FORCE_THRESHOLD, cap: int = ENUMERATION_CAP,
               workers: int = 1, max_branches: int | None = MAX_BRANCHES) -> AttackReport:
    """Recover every state consistent with a known keystream segment.

    The survivors are the orbit states ``y = f^(m-1)(k)`` for a segment
    starting at iterate ``m``; each reproduces the segment from its own first
    iterate. At ``m = 1`` they are the keys. Refinement stops early once the
    candidate set holds at most ``brute_force_threshold`` grid points
    (``None`` refines through the whole segment).
    """
    if segment.t < 1:
        raise UsageError("the attack needs at least one keystream symbol")
    segment.check_alphabet(enc.alphabet_size)
    rule = default_rule(m, n) if rule is None else rule
    grid = state_precision(rule, n, segment.offset)
    p = max(n + GUARD_BITS if precision is None else precision, grid)

    branches = initial_candidates(m, enc, segment.symbols[0], p, rule)
    record = AttackTrace([candidate_set(branches, p)], [len(branches)])
    populations = [record.candidate_sets[0].grid_population(grid)]
    for i in range(2, segment.t + 1):
        if brute_force_threshold is not None and populations[-1] <= brute_force_threshold:
            break
        branches = refine_step(branches, m, enc, segment.symbols[i - 1], i, rule, max_branches)
        record.candidate_sets.append(candidate_set(branches, p))
        record.branch_counts.append(len(branches))
        populations.append(record.candidate_sets[-1].grid_population(grid))

    final = record.candidate_sets[-1]
    survivors = brute_force_finalize(final, segment, m, enc, grid, rule, cap, workers)
    previous = [(1 << grid) + 1] + populations[:-1]
    informative = sum(1 for a, b in zip(previous, populations) if b < a)
    return AttackReport(
        surviving_keys=survivors,
        iterations_used=len(record.candidate_sets),
        brute_force_count=populations[-1],
        trace=record if trace else None,
        informative_iterations=informative,
        degenerate_iterations=len(populations) - informative,
        precision=p,
        state_precision=grid,
        max_intervals=max(len(s) for s in record.candidate_sets),
        rule=rule.describe(),
    )


def write_trace_csv(trace: AttackTrace, fh: IO[str]):
    """One row per candidate interval: ``iter,interval_index,lo,hi,precision,measure``.

    ``measure`` is the total measure of that iteration's candidate set.
    """
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["iter", "interval_index", "lo", "hi", "precision", "measure"])
    for it, cands in enumerate(trace.candidate_sets, start=1):
        total = cands.measure()
        for idx, iv in enumerate(cands):
            writer.writerow([it, idx, str(iv.lo), str(iv.hi), cands.precision, str(total)])


def read_trace_csv(fh: IO[str]) -> dict[int, list[DyadicInterval]]:
    out: dict[int, list[DyadicInterval]] = {}
    for row in csv.DictReader(fh):
        out.setdefault(int(row["iter"]), []).append(DyadicInterval(Dyadic.parse(row["lo"]), Dyadic.parse(row["hi"])))
    return out


def backward_iterate(m: MapDescriptor, y: Dyadic, j: int, check_symbols: KeystreamSegment | None = None,
                     encoder: StepEncoder | None = None, frontier_cap: int = FRONTIER_CAP) -> list[Dyadic]:
    """Every grid point ``x`` with ``f^j(x) == y`` under exact doubling, as Dyadics on the grid of ``y``.

    See :func:`backward_numerators` for the pruning rules.
    """
    nums = backward_numerators(m, y, j, check_symbols, encoder, frontier_cap)
    return [Dyadic(int(x), y.precision) for x in nums]


def backward_numerators(m: MapDescriptor, y: Dyadic, j: int, check_symbols: KeystreamSegment | None = None,
                        encoder: StepEncoder | None = None, frontier_cap: int = FRONTIER_CAP) -> np.ndarray:
    """Sorted numerators of the ancestors of ``y`` after ``j`` exact doublings.

    Only even numerators are images of grid points, so internal levels keep
    those alone; each candidate is re-checked forward (``f(x)`` must give the
    child back exactly). With ``check_symbols`` (read from iterate ``offset``),
    ancestors whose intermediate iterates disagree with the observed symbols
    are pruned.
    """
    if not m.exact_doubling:
        raise UsageError("backward iteration requires the exact mu = 2 tent map")
    if j < 0:
        raise UsageError(f"step count must be non-negative, got {j}")
    if check_symbols is not None and encoder is None:
        raise UsageError("symbol filtering needs the encoder")
    p = y.precision
    full = 1 << p
    dtype = np.int64 if p <= 61 else object
    rule = IterationRule(m)

    def expected(i):
        if check_symbols is None:
            return None
        k = i - check_symbols.offset
        return check_symbols.symbols[k] if 0 <= k < check_symbols.t else None

    frontier = np.array([y.numerator], dtype=dtype)
    want = expected(j)
    if want is not None and encoder.symbol_at(y.numerator, p) != want:
        return frontier[:0]
    for depth in range(1, j + 1):
        children = frontier[frontier % 2 == 0]
        halves = children // 2
        cands = np.concatenate([halves, full - halves])
        parents = np.concatenate([children, children])
        images, _ = rule.advance_array(cands, p)
        cands = cands[images == parents]
        want = expected(j - depth)
        if want is not None:
            cands = cands[encoder.symbols_at(cands, p) == want]
        frontier = np.unique(cands)
        if len(frontier) > frontier_cap:
            raise BackwardFrontierError(f"backward frontier of {len(frontier)} exceeds cap {frontier_cap}",
                                        len(frontier), frontier_cap)
        if len(frontier) == 0:
            break
    return frontier
