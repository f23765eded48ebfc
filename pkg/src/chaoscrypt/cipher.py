"""The stream cipher under attack: keystream symbol ``g(f^i(k))`` XORed into the data."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .dyadic import GUARD_BITS, Dyadic, Rounding
from .encoder import StepEncoder
from .errors import UsageError
from .maps import IterationRule, MapDescriptor


def default_rule(m: MapDescriptor, key_precision: int) -> IterationRule:
    """The defender's arithmetic: exact for ``mu = 2``, round-to-nearest with guard bits otherwise."""
    if m.exact_doubling:
        return IterationRule(m)
    return IterationRule(m, Rounding.NEAREST, key_precision + GUARD_BITS)


@dataclass(frozen=True)
class StreamKey:
    key: Dyadic
    map: MapDescriptor
    encoder: StepEncoder
    rule: IterationRule | None = None

    def __post_init__(self):
        if self.rule is None:
            object.__setattr__(self, "rule", default_rule(self.map, self.key.precision))
        elif self.rule.map != self.map:
            raise UsageError("iteration rule and key use different maps")

    @property
    def precision(self) -> int:
        return self.key.precision


@dataclass(frozen=True)
class KeystreamSegment:
    """Symbols ``c_1 .. c_t`` observed from iterate ``offset`` onward."""

    offset: int
    symbols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.offset < 1:
            raise UsageError(f"offset must be >= 1, got {self.offset}")
        if any(s < 0 for s in self.symbols):
            raise UsageError("symbols must be non-negative")

    @property
    def t(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def bits(self) -> str:
        if any(s > 1 for s in self.symbols):
            raise UsageError("segment is not binary")
        return "".join(map(str, self.symbols))

    def check_alphabet(self, alphabet_size: int):
        bad = [s for s in self.symbols if s >= alphabet_size]
        if bad:
            raise UsageError(f"symbols {sorted(set(bad))} outside alphabet of size {alphabet_size}")


def orbit_symbols(rule: IterationRule, enc: StepEncoder, num: int, p: int, start: int, count: int) -> list[int]:
    """Symbols of iterates ``start .. start+count-1`` of ``num / 2**p``."""
    num, p = rule.run(num, p, start - 1)
    symbol_at = enc.symbol_at
    out = []
    for q, r in rule.states(num, p, count):
        out.append(symbol_at(q, r))
        if q == 0:
            # 0 is fixed under every rule, so the rest of the stream is constant
            out.extend([out[-1]] * (count - len(out)))
            break
    return out


def keystream(sk: StreamKey, offset: int = 1, t: int = 1) -> KeystreamSegment:
    if offset < 1 or t < 1:
        raise UsageError(f"offset and length must be >= 1, got offset={offset}, t={t}")
    syms = orbit_symbols(sk.rule, sk.encoder, sk.key.numerator, sk.key.precision, offset, t)
    return KeystreamSegment(offset, tuple(syms))


_BITS = re.compile(r"^[01]*$")


def parse_bits(text: str) -> str:
    """Normalise an ASCII bit string, dropping whitespace."""
    bits = "".join(text.split())
    if not _BITS.match(bits):
        raise UsageError("bit strings may contain only 0 and 1")
    return bits


def xor_crypt(data_bits: str, keystream_bits: str) -> str:
    """Elementwise XOR of two equal-length bit strings; applying it twice restores the data."""
    if len(data_bits) != len(keystream_bits):
        raise UsageError(f"length mismatch: {len(data_bits)} data bits vs {len(keystream_bits)} keystream bits")
    if not data_bits:
        return ""
    return format(int(data_bits, 2) ^ int(keystream_bits, 2), f"0{len(data_bits)}b")


def known_plaintext_extract(ciphertext_bits: str, plaintext_bits: str, offset: int = 1) -> KeystreamSegment:
    """Recover the keystream under a known plaintext block starting at iterate ``offset``."""
    ks = xor_crypt(ciphertext_bits, plaintext_bits)
    return KeystreamSegment(offset, tuple(int(b) for b in ks))


def bits_from_bytes(data: bytes) -> str:
    """MSB-first bit string of ``data``."""
    if not data:
        return ""
    return format(int.from_bytes(data, "big"), f"0{8 * len(data)}b")


def bytes_from_bits(bits: str) -> bytes:
    if len(bits) % 8:
        raise UsageError(f"{len(bits)} bits do not pack into whole bytes")
    if not bits:
        return b""
    return int(bits, 2).to_bytes(len(bits) // 8, "big")


def encrypt_bits(sk: StreamKey, bits: str, offset: int = 1) -> str:
    if sk.encoder.alphabet_size != 2:
        raise UsageError("the XOR cipher needs a binary encoder")
    if not bits:
        return ""
    return xor_crypt(bits, keystream(sk, offset, len(bits)).bits())


decrypt_bits = encrypt_bits


def format_key(key: Dyadic) -> str:
    digits = max(1, (key.precision + 3) // 4)
    return f"precision: {key.precision}\nnumerator: {key.numerator:0{digits}x}\n"


def parse_key(text: str) -> Dyadic:
    fields = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        name, sep, value = line.partition(":")
        if not sep:
            raise UsageError(f"malformed key file line {line!r}")
        fields[name.strip()] = value.strip()
    try:
        precision = int(fields["precision"])
        numerator = int(fields["numerator"], 16)
    except KeyError as exc:
        raise UsageError(f"key file is missing {exc.args[0]!r}") from None
    except ValueError:
        raise UsageError("key file fields are not valid integers") from None
    return Dyadic(numerator, precision)


def segment_from_text(text: str, offset: int = 1) -> KeystreamSegment:
    """Symbols written as digits, optionally separated by commas or whitespace."""
    body = text.strip()
    if "," in body or " " in body or "\n" in body:
        tokens = [tok for tok in re.split(r"[,\s]+", body) if tok]
    else:
        tokens = list(body)
    try:
        return KeystreamSegment(offset, tuple(int(tok) for tok in tokens))
    except ValueError:
        raise UsageError(f"cannot read symbols from {text[:40]!r}") from None


def symbols_to_text(symbols: Iterable[int]) -> str:
    syms: Sequence[int] = list(symbols)
    if all(s < 10 for s in syms):
        return "".join(map(str, syms))
    return ",".join(map(str, syms))
