"""Acceptance criteria, one test each.

Every test records a PASS or FAIL line; the lines are printed in the pytest
terminal summary and by running this file directly.
"""

import functools
import random
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from chaoscrypt.attack import backward_iterate, backward_numerators, run_attack
from chaoscrypt.cipher import KeystreamSegment, StreamKey, decrypt_bits, encrypt_bits, keystream
from chaoscrypt.dyadic import Dyadic, DyadicInterval, Rounding
from chaoscrypt.encoder import StepEncoder, threshold_encoder
from chaoscrypt.maps import IterationRule, eval_point, image_interval, tent
from chaoscrypt.owf import OwfInstance, owf_invert_bruteforce, owf_stream, random_input, randomness_sanity

G = threshold_encoder()
ALMOST_TWO = "131065/2^16"
RESULTS: dict[int, str] = {}


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[number] = f"criterion {number:2d} FAIL  {title}: {type(exc).__name__}: {exc}".splitlines()[0]
                raise
            took = time.perf_counter() - start
            extra = f" ({detail})" if detail else ""
            RESULTS[number] = f"criterion {number:2d} PASS  {title} [{took:.2f} s]{extra}"
        return run
    return wrap


@criterion(1, "worked-example candidate intervals")
def test_criterion_1_trace_reproduction():
    printed = [
        [(0, 0.25), (0.75, 1)],
        [(0.125, 0.25), (0.75, 0.875)],
        [(0.1875, 0.25), (0.75, 0.8125)],
        [(0.2188, 0.25), (0.75, 0.7813)],
    ]
    start = time.perf_counter()
    report = run_attack(KeystreamSegment(1, (0, 1, 0, 0)), tent("2"), G, 4, trace=True, brute_force_threshold=None)
    elapsed = time.perf_counter() - start
    sets = report.trace.candidate_sets
    assert len(sets) == 4
    for got, want in zip(sets, printed):
        assert len(got) == len(want)
        for iv, (lo, hi) in zip(got, want):
            assert abs(float(iv.lo.value) - lo) <= 5e-5
            assert abs(float(iv.hi.value) - hi) <= 5e-5
    assert [(iv.lo.value, iv.hi.value) for iv in sets[3]] == [(Fraction(7, 32), Fraction(1, 4)),
                                                              (Fraction(3, 4), Fraction(25, 32))]
    assert elapsed < 1.0
    return f"E4 = [7/32, 1/4] + [3/4, 25/32], {elapsed * 1000:.1f} ms"


@criterion(2, "end-to-end key recovery, 100 keys of 32 bits")
def test_criterion_2_key_recovery():
    rng = random.Random(2)
    m = tent("2")
    n = 32
    start = time.perf_counter()
    for _ in range(100):
        k = Dyadic(rng.getrandbits(n), n)
        sk = StreamKey(k, m, G)
        report = run_attack(keystream(sk, 1, 40), m, G, n)
        found = report.surviving_keys
        assert found and k in found
        assert set(found) <= {k, k.complement()}
        future = keystream(sk, 41, 100)
        assert all(keystream(StreamKey(x, m, G), 41, 100) == future for x in found)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    return f"{elapsed:.2f} s total"


@criterion(3, "exact halving and at most 4 intervals under doubling")
def test_criterion_3_exact_halving():
    rng = random.Random(3)
    m = tent("2")
    traces = 0
    for n in (8, 16, 24, 32):
        for _ in range(25):
            k = Dyadic(rng.getrandbits(n), n)
            seg = keystream(StreamKey(k, m, G), 1, n + 4)
            sets = run_attack(seg, m, G, n, trace=True, brute_force_threshold=None).trace.candidate_sets
            resolution = Fraction(1, 1 << n)
            for a, b in zip(sets, sets[1:]):
                if a.measure().value > resolution:
                    assert b.measure().value == a.measure().value / 2
            assert max(len(s) for s in sets) <= 4
            traces += 1
    return f"{traces} traces"


SOUND_CONFIGS = [
    ("2", G),
    ("2", threshold_encoder(boundary_ownership="right")),
    ("2", StepEncoder.parse("0:1/4:1:3/4:0")),
    (ALMOST_TWO, G),
    (ALMOST_TWO, StepEncoder.parse("0:3/8:1:5/8:2")),
    ("3/2", G),
]


@criterion(4, "soundness over 1000 randomized trials")
def test_criterion_4_soundness():
    rng = random.Random(4)
    violations = 0
    trials = 0
    for trial in range(1000):
        n = (8, 16, 32)[trial % 3]
        mu, enc = SOUND_CONFIGS[(trial // 3) % len(SOUND_CONFIGS)]
        m = tent(mu)
        k = Dyadic(rng.getrandbits(n), n)
        seg = keystream(StreamKey(k, m, enc), 1, n + 8)
        report = run_attack(seg, m, enc, n, trace=True, brute_force_threshold=None)
        violations += sum(1 for s in report.trace.candidate_sets if not s.contains(k))
        violations += k not in report.surviving_keys
        trials += 1
    assert violations == 0
    return f"{trials} trials, {violations} violations"


@criterion(5, "backward iteration, 200 keys of 16 bits, j <= 16")
def test_criterion_5_backward_iteration():
    rng = random.Random(5)
    m = tent("2")
    rule = IterationRule(m)
    n = 16
    checked = 0
    for _ in range(200):
        k = rng.getrandbits(n)
        for j in range(0, 17):
            y = rule.run(k, n, j)
            nums = backward_numerators(m, Dyadic(*y), j)
            assert k in nums
            if j <= 8:
                assert backward_iterate(m, Dyadic(*y), j) == [Dyadic(int(x), n) for x in nums]
            # forward check of every candidate, vectorised
            images = nums
            for _ in range(j):
                images, _ = rule.advance_array(images, n)
            assert bool(np.all(images == y[0]))
            checked += len(nums)
    return f"{checked} candidates verified forward"


@criterion(6, "one-way function oracle equivalence")
def test_criterion_6_owf_oracle():
    rng = random.Random(6)
    start = time.perf_counter()
    runs = 0
    for n in (3, 4):
        inst = OwfInstance.build(mu="2", N=2, coord_precision=n)
        for _ in range(5):
            x = random_input(inst, rng)
            out = owf_stream(inst, x, 24)
            found = owf_invert_bruteforce(inst, out)
            assert x in found
            assert all(owf_stream(inst, y, 24) == out for y in found)
            runs += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    return f"{runs} inversions in {elapsed:.3f} s"


@criterion(7, "underdetermination with t = 4 at n = 16")
def test_criterion_7_underdetermination():
    n = 16
    seg = KeystreamSegment(1, (0, 1, 0, 0))
    report = run_attack(seg, tent("2"), G, n, trace=True, brute_force_threshold=None)
    e4 = report.trace.candidate_sets[-1]
    population = e4.grid_population(n)
    assert len(report.surviving_keys) == population
    assert abs(population - (1 << n) * e4.measure().value) <= 2 * len(e4)
    return f"{len(report.surviving_keys)} survivors, grid population {population}, 2^16 * measure = 4096"


MAP_CONFIGS = [("2", None), ("3/2", 30), (ALMOST_TWO, 40), ("7/4", 24), ("1", 20)]


@criterion(8, "rounding containment, 10^4 samples per map")
def test_criterion_8_rounding_containment():
    rng = random.Random(8)
    violations = 0
    for mu, precision in MAP_CONFIGS:
        m = tent(mu)
        for _ in range(10_000):
            p = rng.randint(4, 40)
            a, b = sorted((rng.randint(0, 1 << p), rng.randint(0, 1 << p)))
            iv = DyadicInterval.of(a, b, p)
            x = Dyadic(rng.randint(a, b), p)
            img = image_interval(m, iv, precision)
            exact = m.mu * min(x.value, 1 - x.value)
            for rounding in Rounding:
                if not img.contains(eval_point(m, x, rounding, precision or p)):
                    violations += 1
            violations += not img.lo.value <= exact <= img.hi.value
    assert violations == 0
    return f"{len(MAP_CONFIGS)} maps, {violations} violations"


@criterion(9, "encrypt/decrypt round trip up to 2^20 bits")
def test_criterion_9_round_trip():
    rng = random.Random(9)
    sizes = [0, 1, 7, 8, 1000, 1 << 16, 1 << 20]
    for mu in ("2", ALMOST_TWO):
        sk = StreamKey(Dyadic(rng.getrandbits(32), 32), tent(mu), G)
        for size in sizes:
            plain = format(rng.getrandbits(size), f"0{size}b") if size else ""
            cipher = encrypt_bits(sk, plain)
            assert len(cipher) == size
            assert decrypt_bits(sk, cipher) == plain
    return f"sizes up to {sizes[-1]} bits"


@criterion(10, "randomness sanity of 10^5 output bits (substitute for asymptotic claims)")
def test_criterion_10_randomness_sanity():
    inst = OwfInstance.build(coord_precision=32)
    x = random_input(inst, random.Random(10))
    report = randomness_sanity(owf_stream(inst, x, 100_000).bits)
    assert report.passed
    return f"monobit z = {report.monobit_z:.3f}, runs z = {report.runs_z:.3f}"


def main() -> int:
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))


if __name__ == "__main__":
    main()
