"""Throughput of the numba and numpy block kernels on the same draws.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]

Prints trials per second for each backend and the speedup. The numba kernel
is compiled (or loaded from cache) before timing.
"""

import argparse
import time

from ncrelay import NetworkCode, SnrPoint, Topology
from ncrelay import _kernels
from ncrelay._accel import HAVE_NUMBA
from ncrelay.montecarlo import _link_scale

CASES = {
    "2S2R": [[1, 0], [1, 1]],
    "3S3R": [[1, 0, 0], [0, 1, 0], [1, 1, 1]],
    "2S5R": [[1, 0], [1, 0], [1, 1], [1, 1], [0, 1]],
}


def time_kernel(code, top, db, mode, demod, n, repeat, use_numba):
    d = _kernels.draw_block(1, 0, top.n_sources, top.n_links, mode == "waveform", n)
    args = (d, _link_scale(top), SnrPoint.from_db(db).gamma, code.encoding, code.codebook, code.messages,
            top.ideal_sr, mode == "waveform", demod == "mdd", n, use_numba)
    _kernels.simulate_block(*args)  # warm up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _kernels.simulate_block(*args)
        best = min(best, time.perf_counter() - t0)
    return n / best


def time_draws(top, n, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _kernels.draw_block(1, 0, top.n_sources, top.n_links, False, n)
        best = min(best, time.perf_counter() - t0)
    return n / best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=_kernels.BLOCK_TRIALS)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--snr", type=float, nargs="*", default=[5.0, 20.0])
    a = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba disabled (NCRELAY_DISABLE_NUMBA set or numba missing): numpy only")
    print(f"{'case':6} {'snr':>5} {'mode':9} {'demod':5} {'numpy/s':>12} {'numba/s':>12} {'speedup':>8} {'draws/s':>12}")
    for name, enc in CASES.items():
        code = NetworkCode(enc)
        top = Topology.iid(code.n_sources, code.n_relays)
        draws = time_draws(top, a.trials, a.repeat)
        for db in a.snr:
            for mode in ("bsc", "waveform"):
                for demod in ("ml", "mdd"):
                    npy = time_kernel(code, top, db, mode, demod, a.trials, a.repeat, False)
                    nb = time_kernel(code, top, db, mode, demod, a.trials, a.repeat, True) if HAVE_NUMBA else float("nan")
                    print(f"{name:6} {db:5.1f} {mode:9} {demod:5} {npy:12.3e} {nb:12.3e} {nb / npy:8.1f} {draws:12.3e}")


if __name__ == "__main__":
    main()
