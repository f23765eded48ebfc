"""Command-line front end.

Every command prints ``key: value`` summary lines on standard output that echo
the numeric conventions in force (map, arithmetic, boundary ownership, seed).
Exit status: 0 success, 2 usage error, 3 inconsistent model (for example an
observed symbol no key can produce), 4 refusal (a search exceeding its cap).
"""

from __future__ import annotations

import argparse
import random
import secrets
import sys
import time
from pathlib import Path

from . import attack as atk
from . import cipher, owf
from .dyadic import GUARD_BITS, Dyadic, Rounding
from .encoder import StepEncoder
from .errors import InconsistentModelError, RangeError, RefusalError, UsageError
from .maps import IterationRule, MapDescriptor
from .parallel import worker_count

EXIT_USAGE = 2
EXIT_INCONSISTENT = 3
EXIT_REFUSED = 4


def emit(out, **fields):
    for name, value in fields.items():
        print(f"{name}: {value}", file=out)


def read_text(value: str) -> str:
    """Inline text, or the contents of the file it names."""
    path = Path(value)
    if path.is_file():
        return path.read_text()
    return value


def add_map_args(p: argparse.ArgumentParser, mu_default: str = "2"):
    p.add_argument("--map", default="tent", choices=["tent"], help="map family (default: tent)")
    p.add_argument("--mu", default=mu_default,
                   help=f"dyadic tent parameter in [0, 2] as 'num/2^p' or an integer (default: {mu_default})")
    p.add_argument("--rounding", choices=["auto", "exact", "nearest", "down", "up"], default="auto",
                   help="iteration arithmetic: exact, or rounded onto the working grid each step; "
                        "auto is exact for mu=2 and nearest otherwise")
    p.add_argument("--iteration-precision", type=int, default=None,
                   help="working grid bits for rounded iteration (default: key bits + 16)")


def add_encoder_args(p: argparse.ArgumentParser):
    p.add_argument("--encoder", default="0:1/2:1",
                   help="step encoder 's0:b1:s1:...:sq' with dyadic breakpoints (default: 0:1/2:1)")
    p.add_argument("--ownership", choices=["left", "right"], default="left",
                   help="cell owning an interior breakpoint: the lower (left) or upper (right)")


def build_map(args) -> MapDescriptor:
    return MapDescriptor(args.mu, args.map)


def build_rule(args, m: MapDescriptor, n: int, auto_precision: int | None = None) -> IterationRule:
    if args.rounding == "exact":
        return IterationRule(m)
    if args.rounding == "auto":
        if m.exact_doubling and args.iteration_precision is None:
            return IterationRule(m)
        rounding = Rounding.NEAREST
    else:
        rounding = Rounding(args.rounding)
    precision = args.iteration_precision
    if precision is None:
        precision = auto_precision if auto_precision is not None else n + GUARD_BITS
    return IterationRule(m, rounding, precision)


def build_encoder(args) -> StepEncoder:
    return StepEncoder.parse(args.encoder, args.ownership)


def load_key(path: str) -> Dyadic:
    try:
        return cipher.parse_key(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read key file {path}: {exc.strerror}") from None


def stream_key(args) -> cipher.StreamKey:
    key = load_key(args.key)
    m = build_map(args)
    return cipher.StreamKey(key, m, build_encoder(args), build_rule(args, m, key.precision))


def read_bits(path: str, ascii_bits: bool) -> str:
    try:
        if ascii_bits:
            return cipher.parse_bits(Path(path).read_text())
        return cipher.bits_from_bytes(Path(path).read_bytes())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def write_bits(path: str, bits: str, ascii_bits: bool):
    if ascii_bits:
        Path(path).write_text(bits + "\n")
    else:
        Path(path).write_bytes(cipher.bytes_from_bits(bits))


def describe_common(out, sk: cipher.StreamKey):
    emit(out, map=sk.map.describe(), arithmetic=sk.rule.describe(), encoder=sk.encoder.to_spec(),
         ownership=sk.encoder.boundary_ownership, precision=sk.precision)


def cmd_keygen(args, out):
    if args.bits < 1:
        raise UsageError(f"key size must be >= 1 bit, got {args.bits}")
    rng = random.Random(args.seed) if args.seed is not None else secrets.SystemRandom()
    key = Dyadic(rng.getrandbits(args.bits), args.bits)
    text = cipher.format_key(key)
    if args.output:
        Path(args.output).write_text(text)
        emit(out, key_file=args.output, precision=args.bits)
    else:
        out.write(text)
    emit(out, seed="none" if args.seed is None else args.seed)


def cmd_keystream(args, out):
    sk = stream_key(args)
    seg = cipher.keystream(sk, args.offset, args.length)
    describe_common(out, sk)
    emit(out, offset=args.offset, length=args.length)
    if args.output:
        if args.ascii:
            Path(args.output).write_text(cipher.symbols_to_text(seg.symbols) + "\n")
        else:
            write_bits(args.output, seg.bits(), False)
        emit(out, keystream_file=args.output)
    else:
        emit(out, keystream=cipher.symbols_to_text(seg.symbols))


def cmd_crypt(args, out):
    sk = stream_key(args)
    data = read_bits(args.input, args.ascii)
    result = cipher.encrypt_bits(sk, data, args.offset)
    write_bits(args.output, result, args.ascii)
    describe_common(out, sk)
    emit(out, offset=args.offset, bits=len(data), output=args.output)


def attack_segment(args, enc: StepEncoder) -> cipher.KeystreamSegment:
    if args.symbols is not None:
        if args.plaintext or args.ciphertext:
            raise UsageError("give either --symbols or --plaintext with --ciphertext, not both")
        return cipher.segment_from_text(read_text(args.symbols), args.offset)
    if not (args.plaintext and args.ciphertext):
        raise UsageError("the attack needs --symbols, or both --plaintext and --ciphertext")
    if enc.alphabet_size != 2:
        raise UsageError("known-plaintext extraction needs a binary encoder")
    c = read_bits(args.ciphertext, args.ascii)
    p = read_bits(args.plaintext, args.ascii)
    return cipher.known_plaintext_extract(c, p, args.offset)


def cmd_attack(args, out):
    m = build_map(args)
    enc = build_encoder(args)
    n = args.precision
    if n < 1:
        raise UsageError(f"key precision must be >= 1, got {n}")
    rule = build_rule(args, m, n)
    seg = attack_segment(args, enc)
    # a trace records every symbol, so it disables the early switch to enumeration
    threshold = None if args.trace else args.brute_force_threshold
    workers = worker_count(args.workers)
    emit(out, map=m.describe(), arithmetic=rule.describe(), encoder=enc.to_spec(), ownership=enc.boundary_ownership,
         precision=n, offset=seg.offset, symbols=seg.t, workers=workers)
    start = time.perf_counter()
    report = atk.run_attack(seg, m, enc, n, rule=rule, trace=True, brute_force_threshold=threshold,
                            workers=workers)
    elapsed = time.perf_counter() - start
    emit(out, **report.summary())
    emit(out, elapsed_s=f"{elapsed:.3f}")
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            atk.write_trace_csv(report.trace, fh)
        emit(out, trace_file=args.trace)
    label = "key" if seg.offset == 1 else f"state_{seg.offset - 1}"
    shown = report.surviving_keys if args.max_print < 0 else report.surviving_keys[:args.max_print]
    for y in shown:
        print(f"{label}: {y}", file=out)
    if len(shown) < len(report.surviving_keys):
        emit(out, omitted=len(report.surviving_keys) - len(shown))


def cmd_invert_state(args, out):
    m = build_map(args)
    y = Dyadic.parse(args.state, args.precision)
    check = None
    enc = None
    if args.symbols is not None:
        enc = build_encoder(args)
        check = cipher.segment_from_text(read_text(args.symbols), args.offset)
    found = atk.backward_iterate(m, y, args.steps, check, enc, args.frontier_cap)
    emit(out, map=m.describe(), state=y, steps=args.steps, candidates=len(found))
    for x in found:
        print(f"preimage: {x}", file=out)


def owf_instance(args) -> owf.OwfInstance:
    m = build_map(args)
    if args.N < 2 or args.N & (args.N - 1):
        raise UsageError(f"orbit count must be a power of two >= 2, got {args.N}")
    auto = max(owf.DEFAULT_WORKING_PRECISION, args.n + GUARD_BITS)
    rule = build_rule(args, m, args.n, auto)
    return owf.OwfInstance(m, args.N.bit_length() - 1, args.n, rule)


def read_coords(path: str, inst: owf.OwfInstance) -> owf.OwfInput:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read coordinate file {path}: {exc.strerror}") from None
    coords = tuple(Dyadic.parse(line.strip()) for line in lines if line.strip())
    x = owf.OwfInput(coords)
    x.check(inst)
    return x


def cmd_owf_gen(args, out):
    inst = owf_instance(args)
    if args.coords:
        x = read_coords(args.coords, inst)
        seed = "none"
    else:
        rng = random.Random(args.seed) if args.seed is not None else secrets.SystemRandom()
        x = owf.random_input(inst, rng)
        seed = "none" if args.seed is None else args.seed
    stream = owf.owf_stream(inst, x, args.l)
    emit(out, instance=inst.describe(), l=args.l, seed=seed)
    for c in x.coords:
        print(f"coord: {c}", file=out)
    if args.output:
        Path(args.output).write_text(stream.bits + "\n")
        emit(out, bits_file=args.output)
    else:
        emit(out, bits=stream.bits)


def cmd_owf_invert(args, out):
    inst = owf_instance(args)
    target = owf.OwfOutput.from_bits(read_text(args.out), inst.bits_per_symbol)
    start = time.perf_counter()
    found = owf.owf_invert_bruteforce(inst, target, args.budget, worker_count(args.workers))
    emit(out, instance=inst.describe(), l=len(target), solutions=len(found),
         elapsed_s=f"{time.perf_counter() - start:.3f}")
    for x in found:
        print("coords: " + " ".join(str(c) for c in x.coords), file=out)


def cmd_owf_test(args, out):
    report = owf.randomness_sanity(read_text(args.bits))
    emit(out, length=report.length, ones=report.ones, runs=report.runs, monobit_z=f"{report.monobit_z:.4f}",
         runs_z=f"{report.runs_z:.4f}", passed="yes" if report.passed else "no")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaoscrypt",
                                     description="Chaos-based stream ciphers, their interval-refinement attack, "
                                                 "and a parallel-orbit one-way function candidate.",
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="draw a random key on the 2^-n grid", allow_abbrev=False)
    p.add_argument("--bits", type=int, required=True, help="key precision n in bits")
    p.add_argument("--seed", type=int, default=None, help="seed for a reproducible key")
    p.add_argument("-o", "--output", help="key file to write (default: print it)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("keystream", help="emit keystream symbols for a key", allow_abbrev=False)
    p.add_argument("--key", required=True, help="key file")
    add_map_args(p)
    add_encoder_args(p)
    p.add_argument("--offset", type=int, default=1, help="first iterate emitted (default: 1)")
    p.add_argument("--length", type=int, required=True, help="number of symbols")
    p.add_argument("--ascii", action="store_true", help="write symbols as text instead of packed bytes")
    p.add_argument("-o", "--output", help="output file (default: print the symbols)")
    p.set_defaults(func=cmd_keystream)

    for name in ("encrypt", "decrypt"):
        p = sub.add_parser(name, help=f"{name} a bit stream by XOR with the keystream", allow_abbrev=False)
        p.add_argument("--key", required=True, help="key file")
        add_map_args(p)
        add_encoder_args(p)
        p.add_argument("--offset", type=int, default=1, help="iterate paired with the first data bit (default: 1)")
        p.add_argument("--in", dest="input", required=True, help="input file")
        p.add_argument("--out", dest="output", required=True, help="output file")
        p.add_argument("--ascii", action="store_true", help="files hold '0'/'1' text rather than raw bytes")
        p.set_defaults(func=cmd_crypt)

    p = sub.add_parser("attack", help="recover keys from a known keystream segment", allow_abbrev=False)
    add_map_args(p)
    add_encoder_args(p)
    p.add_argument("--symbols", help="keystream symbols, inline or a file name")
    p.add_argument("--plaintext", help="known plaintext file (with --ciphertext, instead of --symbols)")
    p.add_argument("--ciphertext", help="ciphertext file matching --plaintext")
    p.add_argument("--ascii", action="store_true", help="plaintext/ciphertext files hold '0'/'1' text")
    p.add_argument("--offset", type=int, default=1, help="iterate index of the first symbol (default: 1)")
    p.add_argument("--precision", type=int, required=True, help="key precision n in bits")
    p.add_argument("--trace", help="write per-iteration candidate intervals to this CSV file")
    p.add_argument("--brute-force-threshold", type=int, default=atk.BRUTE_FORCE_THRESHOLD,
                   help=f"enumerate once at most this many grid points remain (default: {atk.BRUTE_FORCE_THRESHOLD})")
    p.add_argument("--workers", type=int, default=0, help="worker processes for enumeration (0: auto)")
    p.add_argument("--max-print", type=int, default=64, help="survivors to list (-1: all; default: 64)")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("invert-state", help="list every key reaching a state after j exact doublings",
                       allow_abbrev=False)
    add_map_args(p)
    add_encoder_args(p)
    p.add_argument("--state", required=True, help="orbit state as 'num/2^p'")
    p.add_argument("--precision", type=int, default=None, help="grid of the state (default: as written)")
    p.add_argument("--steps", type=int, required=True, help="iterations j separating key and state")
    p.add_argument("--symbols", help="known symbols to prune with, inline or a file name")
    p.add_argument("--offset", type=int, default=1, help="iterate index of the first symbol (default: 1)")
    p.add_argument("--frontier-cap", type=int, default=atk.FRONTIER_CAP,
                   help=f"refuse when a level holds more candidates (default: {atk.FRONTIER_CAP})")
    p.set_defaults(func=cmd_invert_state)

    p = sub.add_parser("owf", help="parallel-orbit one-way function", allow_abbrev=False)
    osub = p.add_subparsers(dest="owf_command", required=True)
    mu_default = f"{owf.DEFAULT_OWF_MU.numerator}/2^{owf.DEFAULT_OWF_MU.denominator.bit_length() - 1}"

    def owf_args(q):
        add_map_args(q, mu_default)
        q.add_argument("--n", type=int, required=True, help="coordinate precision in bits")
        q.add_argument("--N", type=int, default=2, help="number of orbits, a power of two (default: 2)")
        q.add_argument("--workers", type=int, default=1, help="worker processes (0: auto)")

    q = osub.add_parser("gen", help="emit the output bit string", allow_abbrev=False)
    owf_args(q)
    q.add_argument("--l", type=int, required=True, help="stream length in symbols")
    q.add_argument("--coords", help="coordinate file, one 'num/2^p' per line (default: random)")
    q.add_argument("--seed", type=int, default=None, help="seed for random coordinates")
    q.add_argument("-o", "--output", help="write the bit string to this file")
    q.set_defaults(func=cmd_owf_gen)

    q = osub.add_parser("invert", help="exhaustively invert an output string", allow_abbrev=False)
    owf_args(q)
    q.add_argument("--out", required=True, help="output bit string, inline or a file name")
    q.add_argument("--budget", type=int, default=owf.INVERSION_BUDGET_BITS,
                   help=f"largest N*n searched (default: {owf.INVERSION_BUDGET_BITS})")
    q.set_defaults(func=cmd_owf_invert)

    q = osub.add_parser("test", help="monobit and runs statistics of a bit string", allow_abbrev=False)
    q.add_argument("--bits", required=True, help="bit string, inline or a file name")
    q.set_defaults(func=cmd_owf_test)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = sys.stdout
    try:
        args.func(args, out)
    except InconsistentModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except RefusalError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        if exc.more_symbols is not None:
            emit(out, more_symbols_needed=exc.more_symbols)
        return EXIT_REFUSED
    except (UsageError, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
