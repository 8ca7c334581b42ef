# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolutional-codec kernels.

Bit-exact with the pure-numpy reference in ``_reference.py``: same state
convention (newest input bit in the register's high bit), same termination,
same tie rule (even predecessor window wins).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv_encode_c(cnp.uint8_t[::1] bits, int constraint_len, tuple polys):
    cdef int n_out = len(polys)
    cdef int n_info = bits.shape[0]
    cdef int n_tail = constraint_len - 1
    cdef int n_steps = n_info + n_tail
    cdef int n_states = 1 << n_tail
    from ._reference import codec_tables
    nxt_np, outs_np = codec_tables(constraint_len, polys)
    cdef cnp.int32_t[:, ::1] nxt = nxt_np
    cdef cnp.uint8_t[:, :, ::1] outs = outs_np
    out_np = np.empty(n_steps * n_out, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_np
    cdef int i, j, b, state = 0
    for i in range(n_steps):
        b = bits[i] if i < n_info else 0
        for j in range(n_out):
            out[i * n_out + j] = outs[b, state, j]
        state = nxt[b, state]
    return out_np


def viterbi_decode_c(cnp.uint8_t[::1] coded, int constraint_len, tuple polys):
    cdef int n_out = len(polys)
    cdef int total = coded.shape[0]
    if total % n_out:
        raise ValueError("coded length must be a multiple of the output count")
    cdef int n_steps = total // n_out
    cdef int n_tail = constraint_len - 1
    if n_steps <= n_tail:
        raise ValueError("block too short for the termination tail")
    cdef int n_states = 1 << n_tail

    from ._reference import codec_tables
    _, outs_np = codec_tables(constraint_len, polys)
    cdef cnp.uint8_t[:, :, ::1] outs = outs_np

    prev_np = np.empty((2, n_states), dtype=np.int32)
    prev_in_np = np.empty((2, n_states), dtype=np.uint8)
    branch_np = np.empty((2, n_states, n_out), dtype=np.uint8)
    cdef cnp.int32_t[:, ::1] prev = prev_np
    cdef cnp.uint8_t[:, ::1] prev_in = prev_in_np
    cdef cnp.uint8_t[:, :, ::1] branch = branch_np
    cdef int t, slot, w, b, s, j
    for t in range(n_states):
        for slot in range(2):
            w = 2 * t + slot
            b = w >> n_tail
            s = w & (n_states - 1)
            prev[slot, t] = s
            prev_in[slot, t] = b
            for j in range(n_out):
                branch[slot, t, j] = outs[b, s, j]

    cdef cnp.int32_t big = 1 << 20
    metric_np = np.full(n_states, big, dtype=np.int32)
    metric_next_np = np.empty(n_states, dtype=np.int32)
    cdef cnp.int32_t[::1] metric = metric_np
    cdef cnp.int32_t[::1] metric_next = metric_next_np
    metric[0] = 0
    decisions_np = np.empty((n_steps, n_states), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] decisions = decisions_np
    cdef int i, bm0, bm1
    cdef cnp.int32_t c0, c1
    for i in range(n_steps):
        for t in range(n_states):
            bm0 = 0
            bm1 = 0
            for j in range(n_out):
                if branch[0, t, j] != coded[i * n_out + j]:
                    bm0 += 1
                if branch[1, t, j] != coded[i * n_out + j]:
                    bm1 += 1
            c0 = metric[prev[0, t]] + bm0
            c1 = metric[prev[1, t]] + bm1
            if c1 < c0:
                metric_next[t] = c1
                decisions[i, t] = 1
            else:
                metric_next[t] = c0
                decisions[i, t] = 0
        metric[:] = metric_next

    bits_np = np.empty(n_steps, dtype=np.uint8)
    cdef cnp.uint8_t[::1] bits = bits_np
    cdef int state = 0
    for i in range(n_steps - 1, -1, -1):
        slot = decisions[i, state]
        bits[i] = prev_in[slot, state]
        state = prev[slot, state]
    return bits_np[: n_steps - n_tail]
