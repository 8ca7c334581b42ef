"""Convolutional codec with a compiled core and a pure-Python fallback.

The Cython extension is used when available; set ``AEROTHZ_PURE_PYTHON=1``
to force the fallback.  Both backends are bit-exact (same trellis, same
tie-breaking), so results never depend on which one is active.
"""

from __future__ import annotations

import os

import numpy as np

from . import _reference

BACKEND = "python"
_encode_impl = None
_decode_impl = None

if not os.environ.get("AEROTHZ_PURE_PYTHON"):
    try:
        from . import _kernels

        _encode_impl = _kernels.conv_encode_c
        _decode_impl = _kernels.viterbi_decode_c
        BACKEND = "cython"
    except ImportError:
        pass

if _encode_impl is None:
    _encode_impl = _reference.conv_encode
    _decode_impl = _reference.viterbi_decode


def conv_encode(bits, constraint_len: int = 7, polys: tuple = (0o133, 0o171)) -> np.ndarray:
    """Rate-1/len(polys) convolutional encoding with zero termination."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    return _encode_impl(bits, constraint_len, tuple(polys))


def viterbi_decode(coded, constraint_len: int = 7, polys: tuple = (0o133, 0o171)) -> np.ndarray:
    """Hard-decision Viterbi decoding of a zero-terminated block."""
    coded = np.ascontiguousarray(coded, dtype=np.uint8)
    return _decode_impl(coded, constraint_len, tuple(polys))


def qpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped QPSK: bit pairs (b0, b1) -> ((1-2b0) + j(1-2b1))/sqrt(2)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 2:
        raise ValueError("QPSK needs an even number of bits")
    b = bits.reshape(-1, 2).astype(float)
    return ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) / np.sqrt(2.0)


def qpsk_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Hard Gray demapping, inverse of :func:`qpsk_modulate`."""
    symbols = np.asarray(symbols)
    bits = np.empty((symbols.size, 2), dtype=np.uint8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.ravel()
