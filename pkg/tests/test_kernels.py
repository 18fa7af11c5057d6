"""Kernel correctness: dispatched implementations agree with the uncompiled
python bodies, with step-by-step cell replays, and with brute-force CRF
enumeration."""

import itertools

import numpy as np
import pytest

from commentgen import kernels, nnet


def _lstm_args(rng, T=6, D=3, H=4):
    p = nnet.init_lstm(rng, D, H)
    xs = rng.normal(size=(T, D))
    pre_x = xs @ p.wx + p.b
    return p, xs, pre_x, np.zeros(H), np.zeros(H)


def test_lstm_kernel_matches_single_steps():
    rng = np.random.default_rng(0)
    p, xs, pre_x, h0, c0 = _lstm_args(rng)
    hs, cs, _ = kernels.lstm_seq_forward(pre_x, h0, c0, np.ascontiguousarray(p.wh.T))
    h, c = h0, c0
    for t in range(xs.shape[0]):
        h, c = nnet.lstm_step(p, xs[t], h, c)
        np.testing.assert_allclose(hs[t], h, atol=1e-12)
        np.testing.assert_allclose(cs[t], c, atol=1e-12)


def test_gru_kernel_matches_single_steps():
    rng = np.random.default_rng(1)
    p = nnet.init_gru(rng, 3, 5)
    xs = rng.normal(size=(7, 3))
    hs, _ = nnet.gru_run(p, xs)
    h = np.zeros(5)
    for t in range(7):
        h = nnet.gru_step(p, xs[t], h)
        np.testing.assert_allclose(hs[t], h, atol=1e-12)


def test_dispatched_kernels_match_python_bodies():
    rng = np.random.default_rng(2)
    p, xs, pre_x, h0, c0 = _lstm_args(rng)
    whT = np.ascontiguousarray(p.wh.T)
    for a, b in zip(
        kernels.DISPATCHED["lstm_seq_forward"](pre_x, h0, c0, whT),
        kernels.PYTHON_IMPLS["lstm_seq_forward"](pre_x, h0, c0, whT),
    ):
        np.testing.assert_allclose(a, b, atol=1e-12)

    emis = rng.normal(size=(5, 4))
    trans = rng.normal(size=(4, 4))
    bos = rng.normal(size=4)
    eos = rng.normal(size=4)
    logz_d, alpha_d = kernels.DISPATCHED["crf_forward"](emis, trans, bos, eos)
    logz_p, alpha_p = kernels.PYTHON_IMPLS["crf_forward"](emis, trans, bos, eos)
    assert abs(logz_d - logz_p) < 1e-10
    np.testing.assert_allclose(alpha_d, alpha_p, atol=1e-10)
    node_d, edge_d = kernels.DISPATCHED["crf_marginals"](emis, trans, bos, eos, alpha_d, logz_d)
    node_p, edge_p = kernels.PYTHON_IMPLS["crf_marginals"](emis, trans, bos, eos, alpha_p, logz_p)
    np.testing.assert_allclose(node_d, node_p, atol=1e-10)
    np.testing.assert_allclose(edge_d, edge_p, atol=1e-10)


def _enumerate(emis, trans, bos, eos):
    T, L = emis.shape
    total = -np.inf
    best = -np.inf
    best_path = None
    for path in itertools.product(range(L), repeat=T):
        s = bos[path[0]] + emis[0, path[0]]
        for t in range(1, T):
            s += trans[path[t - 1], path[t]] + emis[t, path[t]]
        s += eos[path[-1]]
        total = np.logaddexp(total, s)
        if s > best:
            best = s
            best_path = path
    return total, best, best_path


@pytest.mark.parametrize("seed", range(5))
def test_crf_forward_and_viterbi_vs_enumeration(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 6))
    L = int(rng.integers(2, 5))
    emis = rng.normal(size=(T, L))
    trans = rng.normal(size=(L, L))
    bos = rng.normal(size=L)
    eos = rng.normal(size=L)
    total, best, _ = _enumerate(emis, trans, bos, eos)
    logz, _ = kernels.crf_forward(emis, trans, bos, eos)
    assert abs(logz - total) < 1e-8
    _, vscore = kernels.crf_viterbi(emis, trans, bos, eos)
    assert abs(vscore - best) < 1e-8


def test_viterbi_tie_breaks_to_lowest_label():
    # identical scores everywhere: every path ties, lowest index must win
    emis = np.zeros((4, 3))
    trans = np.zeros((3, 3))
    path, _ = kernels.crf_viterbi(emis, trans, np.zeros(3), np.zeros(3))
    assert path.tolist() == [0, 0, 0, 0]


def test_node_marginals_are_distributions():
    rng = np.random.default_rng(5)
    emis = rng.normal(size=(6, 4))
    trans = rng.normal(size=(4, 4))
    bos = rng.normal(size=4)
    eos = rng.normal(size=4)
    logz, alpha = kernels.crf_forward(emis, trans, bos, eos)
    node, edge = kernels.crf_marginals(emis, trans, bos, eos, alpha, logz)
    np.testing.assert_allclose(node.sum(axis=1), np.ones(6), atol=1e-10)
    assert edge.sum() == pytest.approx(5.0, abs=1e-9)  # T-1 transitions

def test_backend_reported():
    assert kernels.BACKEND in ("numba", "numpy")
