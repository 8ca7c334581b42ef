"""Pure-numpy convolutional codec: reference implementation and fallback.

Rate-1/2 feedforward encoder with configurable constraint length and
generator polynomials, hard-decision Viterbi decoding of zero-terminated
blocks.  State convention: the register holds the previous ``K-1`` input
bits with the newest in the high bit; on input ``b`` the 7-bit window is
``(b << (K-1)) | state`` and the next state is that window shifted right.

The trellis loop is the package's hot kernel; the Cython build in
``_kernels.pyx`` implements the same bit-exact algorithm (identical
tie-breaking: the lower predecessor state wins on equal metrics).
"""

from __future__ import annotations

import numpy as np


def _parity(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    while np.any(x):
        out ^= x & 1
        x = x >> 1
    return out


def codec_tables(constraint_len: int, polys: tuple[int, ...]):
    """Per-state transition tables: next state and output bits per input."""
    n_states = 1 << (constraint_len - 1)
    states = np.arange(n_states)
    nxt = np.empty((2, n_states), dtype=np.int32)
    outs = np.empty((2, n_states, len(polys)), dtype=np.uint8)
    for b in (0, 1):
        window = (b << (constraint_len - 1)) | states
        nxt[b] = window >> 1
        for gi, g in enumerate(polys):
            outs[b, :, gi] = _parity(window & g).astype(np.uint8)
    return nxt, outs


def conv_encode(bits: np.ndarray, constraint_len: int, polys: tuple[int, ...]) -> np.ndarray:
    """Encode a bit block, appending K-1 zero tail bits (zero termination)."""
    bits = np.asarray(bits, dtype=np.uint8)
    full = np.concatenate([bits, np.zeros(constraint_len - 1, dtype=np.uint8)])
    nxt, outs = codec_tables(constraint_len, polys)
    coded = np.empty(full.size * len(polys), dtype=np.uint8)
    state = 0
    n_out = len(polys)
    for i, b in enumerate(full):
        coded[i * n_out : (i + 1) * n_out] = outs[b, state]
        state = nxt[b, state]
    return coded


def viterbi_decode(coded: np.ndarray, constraint_len: int, polys: tuple[int, ...]) -> np.ndarray:
    """Hard-decision Viterbi decoding of a zero-terminated block.

    Returns the information bits (tail stripped).  Vectorized over the state
    axis; the step loop is inherently sequential.
    """
    coded = np.asarray(coded, dtype=np.uint8)
    n_out = len(polys)
    if coded.size % n_out:
        raise ValueError("coded length must be a multiple of the output count")
    n_steps = coded.size // n_out
    n_tail = constraint_len - 1
    if n_steps <= n_tail:
        raise ValueError("block too short for the termination tail")
    n_states = 1 << (constraint_len - 1)

    _, outs = codec_tables(constraint_len, polys)
    # Predecessors of state t are the two windows w in {2t, 2t+1}: the input
    # bit is w's high bit and the previous state its low K-1 bits.  Slot 0 is
    # the even window; ties in the path metric resolve toward it.
    prev = np.empty((2, n_states), dtype=np.int32)
    prev_in = np.empty((2, n_states), dtype=np.uint8)
    branch_out = np.empty((2, n_states, n_out), dtype=np.uint8)
    for t in range(n_states):
        for slot in (0, 1):
            w = 2 * t + slot
            b, s = w >> (constraint_len - 1), w & (n_states - 1)
            prev[slot, t] = s
            prev_in[slot, t] = b
            branch_out[slot, t] = outs[b, s]

    big = np.int32(1 << 20)
    metric = np.full(n_states, big, dtype=np.int32)
    metric[0] = 0
    decisions = np.empty((n_steps, n_states), dtype=np.uint8)
    rx = coded.reshape(n_steps, n_out)
    for i in range(n_steps):
        bm0 = np.count_nonzero(branch_out[0] != rx[i][None, :], axis=1).astype(np.int32)
        bm1 = np.count_nonzero(branch_out[1] != rx[i][None, :], axis=1).astype(np.int32)
        cand0 = metric[prev[0]] + bm0
        cand1 = metric[prev[1]] + bm1
        take1 = cand1 < cand0
        metric = np.where(take1, cand1, cand0)
        decisions[i] = take1.astype(np.uint8)

    # Traceback from the zero state (zero-terminated block).
    state = 0
    bits = np.empty(n_steps, dtype=np.uint8)
    for i in range(n_steps - 1, -1, -1):
        slot = decisions[i, state]
        bits[i] = prev_in[slot, state]
        state = prev[slot, state]
    return bits[: n_steps - n_tail]
