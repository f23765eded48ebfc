from fractions import Fraction
import itertools

import pytest
from hypothesis import given, strategies as st

from chaoscrypt.dyadic import (
    CandidateSet,
    Dyadic,
    DyadicInterval,
    Rounding,
    contains,
    fixed_point_arith,
    grid_count,
    grid_enumerate,
    interval_algebra,
    measure,
    parse_rational,
    round_fraction,
)
from chaoscrypt.errors import PrecisionMismatch, RangeError, RefusalError, UsageError


def D(text):
    return Dyadic.parse(text)


def dyadics(max_p=12):
    return st.integers(1, max_p).flatmap(lambda p: st.builds(Dyadic, st.integers(0, 1 << p), st.just(p)))


def intervals(p):
    return st.tuples(st.integers(0, 1 << p), st.integers(0, 1 << p)).map(
        lambda ab: DyadicInterval.of(min(ab), max(ab), p))


class TestFixedPoint:
    def test_mul_rounds_down_to_zero(self):
        assert fixed_point_arith(D("3/2^4"), D("5/2^4"), "mul", "down") == Dyadic(0, 4)

    def test_mul_rounds_up(self):
        assert fixed_point_arith(D("3/2^4"), D("5/2^4"), "mul", "up") == Dyadic(1, 4)

    def test_add_exact(self):
        r = fixed_point_arith(Dyadic(4, 4), Dyadic(8, 4), "add", "nearest")
        assert (r.numerator, r.precision) == (12, 4)

    def test_add_overflow(self):
        with pytest.raises(RangeError, match="add"):
            fixed_point_arith(Dyadic(12, 4), Dyadic(8, 4), "add")

    def test_sub_underflow(self):
        with pytest.raises(RangeError, match="sub"):
            fixed_point_arith(Dyadic(1, 4), Dyadic(2, 4), "sub")

    def test_mixed_precision(self):
        with pytest.raises(PrecisionMismatch):
            fixed_point_arith(Dyadic(1, 4), Dyadic(1, 5), "add")

    def test_nearest_ties_to_even(self):
        # 3/4 * 1/2 = 3/8 sits halfway between 1/4 and 2/4 on the quarter grid
        assert fixed_point_arith(Dyadic(3, 2), Dyadic(2, 2), "mul", "nearest").numerator == 2
        # 1/4 * 1/2 = 1/8 sits halfway between 0/4 and 1/4
        assert fixed_point_arith(Dyadic(1, 2), Dyadic(2, 2), "mul", "nearest").numerator == 0

    @pytest.mark.parametrize("p", range(1, 7))
    def test_rounding_sandwich_exhaustive(self, p):
        # compare every product on the grid against rational arithmetic
        full = 1 << p
        ulp = Fraction(1, full)
        for a, b in itertools.product(range(full + 1), repeat=2):
            exact = Fraction(a * b, full * full)
            lo = fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "mul", "down").value
            hi = fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "mul", "up").value
            near = fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "mul", "nearest").value
            assert lo <= exact <= hi
            assert hi - lo <= ulp
            assert lo == Fraction(int(exact / ulp), full)
            assert abs(near - exact) <= ulp / 2
            if abs(near - exact) == ulp / 2:
                assert (near / ulp).numerator % 2 == 0

    @pytest.mark.parametrize("p", [7, 8])
    def test_rounding_sandwich_large_grids(self, p):
        full = 1 << p
        for a in range(0, full + 1, 3):
            for b in range(0, full + 1, 5):
                exact = Fraction(a * b, full * full)
                lo = fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "mul", "down").value
                hi = fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "mul", "up").value
                assert lo <= exact <= hi and hi - lo <= Fraction(1, full)

    @given(st.fractions(0, 1), st.integers(1, 40))
    def test_round_fraction_directions(self, x, p):
        down = round_fraction(x, p, Rounding.DOWN)
        up = round_fraction(x, p, Rounding.UP)
        near = round_fraction(x, p, Rounding.NEAREST)
        scaled = x * (1 << p)
        assert down <= scaled <= up and up - down <= 1
        assert abs(near - scaled) <= Fraction(1, 2)

    @given(st.integers(1, 16).flatmap(
        lambda p: st.tuples(st.integers(0, 1 << p), st.integers(0, 1 << p), st.just(p))))
    def test_add_sub_exact(self, abp):
        a, b, p = abp
        if a + b <= 1 << p:
            assert fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "add").value == Fraction(a + b, 1 << p)
        if a >= b:
            assert fixed_point_arith(Dyadic(a, p), Dyadic(b, p), "sub").value == Fraction(a - b, 1 << p)


class TestDyadic:
    def test_equality_across_precisions(self):
        assert Dyadic(1, 1) == Dyadic(2, 2) == Dyadic(8, 4)
        assert hash(Dyadic(1, 1)) == hash(Dyadic(8, 4))
        assert Dyadic(3, 4) < Dyadic(1, 2)

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            Dyadic(17, 4)

    @pytest.mark.parametrize("text,num,p", [("7/2^5", 7, 5), ("1/4", 1, 2), ("0.75", 3, 2), ("1", 1, 0), ("0", 0, 0)])
    def test_parse(self, text, num, p):
        d = Dyadic.parse(text)
        assert (d.numerator, d.precision) == (num, p)

    def test_parse_keeps_stated_precision(self):
        assert Dyadic.parse("8/2^5").precision == 5

    def test_parse_rejects_non_dyadic(self):
        with pytest.raises(UsageError):
            Dyadic.parse("1/3")

    def test_parse_rational_forms(self):
        assert parse_rational("3/2^2") == (Fraction(3, 4), 2)
        assert parse_rational("2") == (Fraction(2), None)

    @given(dyadics(40))
    def test_text_roundtrip(self, d):
        back = Dyadic.parse(str(d))
        assert (back.numerator, back.precision) == (d.numerator, d.precision)

    @given(dyadics())
    def test_lift_and_reduce(self, d):
        assert d.lift(d.precision + 5) == d
        assert d.reduced() == d
        assert d.reduced().lift(d.precision).numerator == d.numerator

    def test_lift_off_grid(self):
        with pytest.raises(PrecisionMismatch):
            Dyadic(7, 5).lift(4)


class TestIntervals:
    def test_intersect(self):
        a = DyadicInterval.parse("[0, 1/4]").lift(3)
        b = DyadicInterval.parse("[1/8, 1/2]")
        assert interval_algebra(a, b, "intersect") == DyadicInterval(Dyadic(1, 3), Dyadic(2, 3))

    def test_intersect_empty(self):
        assert DyadicInterval.of(0, 1, 3).intersect(DyadicInterval.of(2, 3, 3)) is None

    def test_hull(self):
        assert interval_algebra(DyadicInterval.of(0, 1, 3), DyadicInterval.of(5, 6, 3), "hull") == DyadicInterval.of(0, 6, 3)

    def test_measure_of_final_pair(self):
        s = CandidateSet.from_intervals([DyadicInterval.of(7, 8, 5), DyadicInterval.of(24, 25, 5)], 5)
        assert measure(s) == Dyadic(2, 5)

    def test_contains(self):
        s = CandidateSet.from_intervals([DyadicInterval.parse("[0, 1/4]")], 2)
        assert not contains(s, Dyadic(3, 3))
        assert contains(s, Dyadic(1, 2))

    def test_str_format(self):
        assert str(DyadicInterval.of(7, 8, 5)) == "[7/2^5, 8/2^5]"

    def test_precision_mismatch(self):
        with pytest.raises(PrecisionMismatch):
            DyadicInterval(Dyadic(0, 2), Dyadic(1, 3))

    def test_candidate_set_merges_touching(self):
        s = CandidateSet.from_intervals([DyadicInterval.of(2, 3, 4), DyadicInterval.of(0, 2, 4),
                                         DyadicInterval.of(5, 6, 4)], 4)
        assert list(s) == [DyadicInterval.of(0, 3, 4), DyadicInterval.of(5, 6, 4)]

    def test_candidate_set_rejects_overlap(self):
        with pytest.raises(UsageError):
            CandidateSet((DyadicInterval.of(0, 3, 4), DyadicInterval.of(2, 5, 4)), 4)

    @given(intervals(8), intervals(8))
    def test_intersect_never_grows(self, a, b):
        r = a.intersect(b)
        if r is None:
            assert a.hi < b.lo or b.hi < a.lo
        else:
            assert r.width <= a.width and r.width <= b.width
            for x in range(r.lo.numerator, r.hi.numerator + 1):
                assert a.contains(Dyadic(x, 8)) and b.contains(Dyadic(x, 8))

    @given(st.lists(intervals(8), min_size=1, max_size=6))
    def test_measure_additive(self, ivs):
        s = CandidateSet.from_intervals(ivs, 8)
        covered = {x for iv in ivs for x in range(iv.lo.numerator, iv.hi.numerator + 1)}
        assert s.grid_population(8) == len(covered)
        assert measure(s).numerator == sum(iv.hi.numerator - iv.lo.numerator for iv in s)


class TestGrid:
    def test_enumerate_small(self):
        assert grid_enumerate(DyadicInterval.parse("[3/4, 7/8]"), 3) == [Dyadic(6, 3), Dyadic(7, 3)]
        assert grid_enumerate(DyadicInterval.unit(0), 1) == [Dyadic(0, 1), Dyadic(1, 1), Dyadic(2, 1)]

    def test_enumerate_drops_offgrid_endpoint(self):
        pts = grid_enumerate(DyadicInterval.of(7, 8, 5), 4)
        assert [(d.numerator, d.precision) for d in pts] == [(4, 4)]

    def test_enumerate_refuses(self):
        with pytest.raises(RefusalError) as info:
            grid_enumerate(DyadicInterval.unit(0), 30, cap=1000)
        assert info.value.count == (1 << 30) + 1

    @given(st.integers(1, 12), st.integers(1, 12), st.data())
    def test_count_formula(self, p, n, data):
        iv = data.draw(intervals(p))
        brute = [i for i in range((1 << n) + 1) if iv.contains(Dyadic(i, n))]
        lo, hi = iv.lo.value, iv.hi.value
        expected = (hi * (1 << n)).__floor__() - (lo * (1 << n)).__ceil__() + 1
        assert grid_count(iv, n) == len(brute) == max(0, expected)
