"""Benchmark the compiled codec kernel against the pure-numpy fallback.

The Viterbi trellis is the hot sequential loop of decision-directed
tracking (two decodes per OFDM symbol per served link); everything else in
the simulator is vectorized linear algebra.  Run:

    python benchmarks/bench_codec.py [--blocks N]
"""

import argparse
import time

import numpy as np

from aerothz import codec
from aerothz.codec import _reference

POLYS = (0o133, 0o171)
K = 7


def time_fn(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--blocks", type=int, default=20, help="blocks per measurement")
    parser.add_argument("--info-bits", type=int, default=2042, help="information bits per block")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, args.info_bits).astype(np.uint8)
    coded = codec.conv_encode(bits, K, POLYS)
    noisy = coded ^ (rng.uniform(size=coded.size) < 0.02).astype(np.uint8)

    ref_dec = _reference.viterbi_decode(noisy, K, POLYS)
    fast_dec = codec.viterbi_decode(noisy, K, POLYS)
    assert np.array_equal(ref_dec, fast_dec), "backends disagree"

    rows = []
    rows.append(
        (
            "conv_encode",
            time_fn(lambda: _reference.conv_encode(bits, K, POLYS), args.blocks),
            time_fn(lambda: codec.conv_encode(bits, K, POLYS), args.blocks),
        )
    )
    rows.append(
        (
            "viterbi_decode",
            time_fn(lambda: _reference.viterbi_decode(noisy, K, POLYS), max(3, args.blocks // 4)),
            time_fn(lambda: codec.viterbi_decode(noisy, K, POLYS), args.blocks),
        )
    )

    print(f"active backend: {codec.BACKEND}")
    print(f"block: {args.info_bits} info bits -> {coded.size} coded bits, 64-state trellis\n")
    print(f"{'kernel':<16}{'pure python':>14}{'active':>14}{'speedup':>10}")
    for name, t_py, t_fast in rows:
        print(f"{name:<16}{t_py * 1e3:>11.2f} ms{t_fast * 1e3:>11.2f} ms{t_py / t_fast:>9.1f}x")

    sym_rate = 1.0 / (2 * rows[1][2])
    print(f"\nDADD budget: {sym_rate:,.0f} two-link OFDM symbols decodable per second")


if __name__ == "__main__":
    main()
