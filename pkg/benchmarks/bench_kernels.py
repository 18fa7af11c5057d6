#!/usr/bin/env python3
"""Benchmark the hot kernels: compiled (numba) dispatch versus the
pure-numpy fallback bodies, on training-shaped workloads. Also asserts the
two paths agree numerically.

Run from the repo root:

    python3 benchmarks/bench_kernels.py            # uses the active backend
    COMMENTGEN_NUMBA=0 python3 benchmarks/bench_kernels.py   # numpy-only

With numba available the table shows the compiled path against the numpy
fallback; without it both columns time the same fallback code.
"""

import time

import numpy as np

from commentgen import kernels, nnet


def timeit(fn, *args, repeats=30):
    fn(*args)  # warmup (and jit compile on the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def allclose(a, b):
    if isinstance(a, tuple):
        return all(allclose(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), atol=1e-10)


def lstm_case(rng, T=120, D=64, H=128):
    p = nnet.init_lstm(rng, D, H)
    xs = rng.normal(size=(T, D))
    pre_x = xs @ p.wx + p.b
    h0 = np.zeros(H)
    c0 = np.zeros(H)
    whT = np.ascontiguousarray(p.wh.T)
    fwd_args = (pre_x, h0, c0, whT)
    hs, cs, gates = kernels.PYTHON_IMPLS["lstm_seq_forward"](*fwd_args)
    dhs = rng.normal(size=(T, H))
    bwd_args = (gates, hs, cs, h0, c0, p.wh, dhs, np.zeros(H), np.zeros(H))
    return fwd_args, bwd_args


def gru_case(rng, T=120, D=64, H=128):
    p = nnet.init_gru(rng, D, H)
    xs = rng.normal(size=(T, D))
    pre_x = xs @ p.wx + p.b
    h0 = np.zeros(H)
    fwd_args = (pre_x, h0, np.ascontiguousarray(p.wh_zr.T), np.ascontiguousarray(p.wh_n.T))
    hs, gates = kernels.PYTHON_IMPLS["gru_seq_forward"](*fwd_args)
    dhs = rng.normal(size=(T, H))
    bwd_args = (gates, hs, h0, p.wh_zr, p.wh_n, dhs, np.zeros(H))
    return fwd_args, bwd_args


def crf_case(rng, T=40, L=18):
    emis = rng.normal(size=(T, L))
    trans = rng.normal(size=(L, L))
    bos = rng.normal(size=L)
    eos = rng.normal(size=L)
    fwd_args = (emis, trans, bos, eos)
    logz, alpha = kernels.PYTHON_IMPLS["crf_forward"](*fwd_args)
    marg_args = (emis, trans, bos, eos, alpha, logz)
    return fwd_args, marg_args


def main():
    rng = np.random.default_rng(0)
    sizes = {"paper-ish": dict(T=120, D=64, H=128), "desk": dict(T=40, D=24, H=32)}
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<28} {'dispatched':>12} {'numpy-fallback':>15} {'speedup':>8}")
    for label, dims in sizes.items():
        lstm_fwd, lstm_bwd = lstm_case(rng, **dims)
        gru_fwd, gru_bwd = gru_case(rng, **dims)
        cases = [
            ("lstm_seq_forward", lstm_fwd),
            ("lstm_seq_backward", lstm_bwd),
            ("gru_seq_forward", gru_fwd),
            ("gru_seq_backward", gru_bwd),
        ]
        for name, args in cases:
            dispatched = kernels.DISPATCHED[name]
            fallback = kernels.PYTHON_IMPLS[name]
            assert allclose(dispatched(*args), fallback(*args)), name
            t_disp = timeit(dispatched, *args)
            t_py = timeit(fallback, *args)
            tag = f"{name} [{label}]"
            print(f"{tag:<28} {t_disp * 1e3:>10.3f}ms {t_py * 1e3:>13.3f}ms {t_py / t_disp:>7.1f}x")
    crf_fwd, crf_marg = crf_case(rng)
    for name, args in (
        ("crf_forward", crf_fwd),
        ("crf_marginals", crf_marg),
        ("crf_viterbi", crf_fwd),
    ):
        dispatched = kernels.DISPATCHED[name]
        fallback = kernels.PYTHON_IMPLS[name]
        assert allclose(dispatched(*args), fallback(*args)), name
        t_disp = timeit(dispatched, *args)
        t_py = timeit(fallback, *args)
        print(f"{name:<28} {t_disp * 1e3:>10.3f}ms {t_py * 1e3:>13.3f}ms {t_py / t_disp:>7.1f}x")
    print("numerical agreement between paths: OK")


if __name__ == "__main__":
    main()
