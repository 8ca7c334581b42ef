import numpy as np
import pytest

from aerothz import codec
from aerothz.codec import _reference

POLYS = (0o133, 0o171)


class TestEncoder:
    def test_zero_input_zero_output(self):
        coded = codec.conv_encode(np.zeros(100, dtype=np.uint8))
        assert not coded.any()
        assert coded.size == (100 + 6) * 2

    def test_impulse_response_is_generators(self):
        # a single 1 followed by zeros emits the generator taps
        coded = codec.conv_encode(np.array([1, 0, 0, 0, 0, 0, 0], dtype=np.uint8))
        g1 = [(0o133 >> s) & 1 for s in range(6, -1, -1)]
        g2 = [(0o171 >> s) & 1 for s in range(6, -1, -1)]
        got = coded.reshape(-1, 2)
        assert np.array_equal(got[:7, 0], g1)
        assert np.array_equal(got[:7, 1], g2)

    def test_linearity_over_gf2(self):
        rng = np.random.default_rng(0)
        a = rng.integers(0, 2, 64).astype(np.uint8)
        b = rng.integers(0, 2, 64).astype(np.uint8)
        assert np.array_equal(
            codec.conv_encode(a) ^ codec.conv_encode(b), codec.conv_encode(a ^ b)
        )


class TestViterbi:
    def test_noiseless_roundtrip(self):
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, 2042).astype(np.uint8)
        assert np.array_equal(codec.viterbi_decode(codec.conv_encode(bits)), bits)

    def test_corrects_scattered_errors(self):
        rng = np.random.default_rng(2)
        bits = rng.integers(0, 2, 2042).astype(np.uint8)
        coded = codec.conv_encode(bits)
        noisy = coded.copy()
        flips = rng.choice(coded.size, coded.size // 40, replace=False)
        noisy[flips] ^= 1
        assert np.array_equal(codec.viterbi_decode(noisy), bits)

    def test_coded_beats_uncoded_at_matched_rate(self):
        rng = np.random.default_rng(3)
        p_flip = 0.04
        n_info = 2042
        errs_coded = 0
        total = 0
        for _ in range(5):
            bits = rng.integers(0, 2, n_info).astype(np.uint8)
            coded = codec.conv_encode(bits)
            noisy = coded ^ (rng.uniform(size=coded.size) < p_flip).astype(np.uint8)
            errs_coded += np.count_nonzero(codec.viterbi_decode(noisy) != bits)
            total += n_info
        assert errs_coded / total < p_flip / 4

    def test_invalid_lengths(self):
        with pytest.raises(ValueError):
            codec.viterbi_decode(np.zeros(7, dtype=np.uint8))
        with pytest.raises(ValueError):
            codec.viterbi_decode(np.zeros(10, dtype=np.uint8))


class TestBackendEquality:
    def test_encode_decode_bit_exact_across_backends(self):
        rng = np.random.default_rng(4)
        for n in (100, 511, 2042):
            bits = rng.integers(0, 2, n).astype(np.uint8)
            coded = _reference.conv_encode(bits, 7, POLYS)
            assert np.array_equal(codec.conv_encode(bits), coded)
            noisy = coded ^ (rng.uniform(size=coded.size) < 0.05).astype(np.uint8)
            assert np.array_equal(
                codec.viterbi_decode(noisy), _reference.viterbi_decode(noisy, 7, POLYS)
            )

    def test_tie_breaking_identical(self):
        # all-ones garbage maximizes metric ties; both backends must agree
        garbage = np.ones(256, dtype=np.uint8)
        assert np.array_equal(
            codec.viterbi_decode(garbage), _reference.viterbi_decode(garbage, 7, POLYS)
        )


class TestQpsk:
    def test_gray_mapping_constellation(self):
        s = codec.qpsk_modulate(np.array([0, 0, 0, 1, 1, 0, 1, 1], dtype=np.uint8))
        expect = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
        assert np.allclose(s, expect)

    def test_unit_power(self):
        rng = np.random.default_rng(5)
        s = codec.qpsk_modulate(rng.integers(0, 2, 4096).astype(np.uint8))
        assert np.allclose(np.abs(s), 1.0)

    def test_roundtrip(self):
        rng = np.random.default_rng(6)
        bits = rng.integers(0, 2, 4096).astype(np.uint8)
        assert np.array_equal(codec.qpsk_demodulate(codec.qpsk_modulate(bits)), bits)

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            codec.qpsk_modulate(np.array([1, 0, 1], dtype=np.uint8))
