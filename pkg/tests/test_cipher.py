import random

import pytest
from hypothesis import given, strategies as st

from chaoscrypt.cipher import (
    KeystreamSegment,
    StreamKey,
    bits_from_bytes,
    bytes_from_bits,
    decrypt_bits,
    encrypt_bits,
    format_key,
    keystream,
    known_plaintext_extract,
    parse_bits,
    parse_key,
    segment_from_text,
    xor_crypt,
)
from chaoscrypt.dyadic import Dyadic
from chaoscrypt.encoder import StepEncoder, threshold_encoder
from chaoscrypt.errors import UsageError
from chaoscrypt.maps import tent

G = threshold_encoder()
bitstrings = st.text(alphabet="01", max_size=300)


def sk(num, n, mu="2", enc=G):
    return StreamKey(Dyadic(num, n), tent(mu), enc)


class TestKeystream:
    def test_worked_orbit(self):
        assert keystream(sk(3, 4), 1, 4).symbols == (0, 1, 0, 1)

    def test_fixed_point(self):
        for offset in (1, 5, 40):
            assert keystream(sk(0, 8), offset, 3).symbols == (0, 0, 0)

    def test_offset_suffix(self):
        assert keystream(sk(3, 4), 2, 2).symbols == (1, 0)

    def test_rejects_bad_offset(self):
        with pytest.raises(UsageError):
            keystream(sk(3, 4), 0, 2)

    @pytest.mark.parametrize("mu", ["2", "131065/2^16", "3/2"])
    @given(st.integers(0, 1 << 20), st.integers(1, 30))
    def test_symmetry_leak(self, mu, num, offset):
        a = keystream(sk(num, 20, mu), offset, 40)
        b = keystream(sk((1 << 20) - num, 20, mu), offset, 40)
        assert a.symbols == b.symbols

    @given(st.integers(1, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 1 << n))))
    def test_doubling_orbit_collapse(self, nk):
        n, num = nk
        tail = keystream(sk(num, n), n + 2, 20).symbols
        assert tail == (G.encode(Dyadic(0, 0)),) * 20

    def test_suffix_consistency(self, rng):
        for mu in ("2", "131065/2^16"):
            key = sk(rng.getrandbits(32), 32, mu)
            full = keystream(key, 1, 60).symbols
            for off in (2, 17, 33):
                assert keystream(key, off, 60 - off + 1).symbols == full[off - 1:]

    def test_rule_mismatch(self):
        from chaoscrypt.maps import IterationRule
        with pytest.raises(UsageError):
            StreamKey(Dyadic(1, 4), tent("2"), G, IterationRule(tent("3/2")))


class TestXor:
    def test_examples(self):
        assert xor_crypt("1010", "0110") == "1100"
        assert xor_crypt("1011", "0000") == "1011"
        assert xor_crypt("1011", "1011") == "0000"
        assert xor_crypt("", "") == ""

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            xor_crypt("101", "10")

    @given(bitstrings, st.data())
    def test_involution(self, p, data):
        ks = data.draw(st.text(alphabet="01", min_size=len(p), max_size=len(p)))
        assert xor_crypt(xor_crypt(p, ks), ks) == p

    def test_extract(self):
        seg = known_plaintext_extract("1100", "1010", 1)
        assert seg == KeystreamSegment(1, (0, 1, 1, 0))
        assert known_plaintext_extract("1101", "1101", 5).symbols == (0, 0, 0, 0)

    def test_extract_recovers_keystream(self, rng):
        key = sk(rng.getrandbits(24), 24, "131065/2^16")
        plain = "".join(rng.choice("01") for _ in range(50))
        cipher = encrypt_bits(key, plain, 3)
        assert known_plaintext_extract(cipher, plain, 3) == keystream(key, 3, 50)

    def test_parse_bits(self):
        assert parse_bits("10 1\n1") == "1011"
        with pytest.raises(UsageError):
            parse_bits("102")


class TestEncryption:
    @given(st.binary(max_size=200))
    def test_bytes_bits_roundtrip(self, data):
        assert bytes_from_bits(bits_from_bytes(data)) == data

    def test_msb_first(self):
        assert bits_from_bytes(b"\x80\x01") == "1000000000000001"

    def test_needs_binary_alphabet(self):
        key = sk(3, 8, enc=StepEncoder.parse("0:3/8:1:1/2:2"))
        with pytest.raises(UsageError):
            encrypt_bits(key, "0101")

    def test_roundtrip_large(self):
        rng = random.Random(99)
        key = sk(rng.getrandbits(32), 32, "131065/2^16")
        plain = format(rng.getrandbits(1 << 16), f"0{1 << 16}b")
        assert decrypt_bits(key, encrypt_bits(key, plain)) == plain


class TestFormats:
    @given(st.integers(1, 100).flatmap(lambda n: st.tuples(st.integers(0, 1 << n), st.just(n))))
    def test_key_roundtrip(self, key):
        d = Dyadic(*key)
        back = parse_key(format_key(d))
        assert (back.numerator, back.precision) == key

    def test_key_file_layout(self):
        assert format_key(Dyadic(0x52E6, 16)) == "precision: 16\nnumerator: 52e6\n"

    def test_bad_key_file(self):
        with pytest.raises(UsageError):
            parse_key("precision: 8\n")
        with pytest.raises(UsageError):
            parse_key("precision: 8\nnumerator: zz\n")

    def test_segment_text(self):
        assert segment_from_text("0100").symbols == (0, 1, 0, 0)
        assert segment_from_text("0, 1, 12\n3", 4) == KeystreamSegment(4, (0, 1, 12, 3))
        with pytest.raises(UsageError):
            segment_from_text("0a1")
