"""Hot numeric kernels: recurrent-cell sequence loops and linear-chain CRF
dynamic programs.

Everything here operates on plain float64 numpy arrays. When numba is
importable the per-timestep loops are compiled with @njit (cache=True); the
env var COMMENTGEN_NUMBA selects the path:

    COMMENTGEN_NUMBA=0   force the pure-numpy fallback
    COMMENTGEN_NUMBA=1   require numba, fail at import if missing
    unset / auto         use numba when available

The LSTM/GRU kernels share one function body between both paths (the body is
numba-compatible numpy). The CRF kernels have a looped body for numba and a
vectorized numpy body; tests and benchmarks/bench_kernels.py assert the two
paths agree.

Conventions: sequences are time-major (T, dim). LSTM gate order is
[input, forget, output, candidate]; GRU gate order is [update, reset,
candidate]. Input projections (x @ wx + b) are precomputed by the caller as
`pre_x` so the kernels contain only the sequential recurrence; the bulk
weight-gradient matmuls likewise happen in the caller.
"""

import os

import numpy as np

_flag = os.environ.get("COMMENTGEN_NUMBA", "auto").strip().lower()
if _flag in ("0", "off", "false", "no"):
    USE_NUMBA = False
elif _flag in ("1", "on", "true", "yes", "require"):
    import numba  # fail loudly when explicitly requested

    USE_NUMBA = True
else:
    try:
        import numba

        USE_NUMBA = True
    except ImportError:
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def _sigmoid(x):
    # exp(-|x|) never overflows, so this form is warning-free for any input
    z = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


if USE_NUMBA:
    _sigmoid = numba.njit(cache=True)(_sigmoid)


def _lstm_seq_forward(pre_x, h0, c0, whT):
    """Run an LSTM over a sequence.

    pre_x: (T, 4H) precomputed x@wx+b, h0/c0: (H,), whT: (4H, H) transposed
    recurrent weights. Returns (hs, cs, gates) with gates post-activation.
    """
    T = pre_x.shape[0]
    H = h0.shape[0]
    hs = np.empty((T, H))
    cs = np.empty((T, H))
    gates = np.empty((T, 4 * H))
    h = h0
    c = c0
    for t in range(T):
        pre = pre_x[t] + np.dot(whT, h)
        i = _sigmoid(pre[0:H])
        f = _sigmoid(pre[H : 2 * H])
        o = _sigmoid(pre[2 * H : 3 * H])
        g = np.tanh(pre[3 * H : 4 * H])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, 0:H] = i
        gates[t, H : 2 * H] = f
        gates[t, 2 * H : 3 * H] = o
        gates[t, 3 * H : 4 * H] = g
        hs[t] = h
        cs[t] = c
    return hs, cs, gates


def _lstm_seq_backward(gates, hs, cs, h0, c0, wh, dhs, dh_last, dc_last):
    """Backward pass matching _lstm_seq_forward.

    wh: (H, 4H) recurrent weights (untransposed). dhs: (T, H) upstream grads
    on every h_t; dh_last/dc_last: extra grads on the final h/c. Returns
    (dpre, dh0, dc0) where dpre is (T, 4H) grads on the pre-activations.
    """
    T, H = hs.shape
    dpre = np.empty((T, 4 * H))
    dh_carry = dh_last.copy()
    dc_carry = dc_last.copy()
    for t in range(T - 1, -1, -1):
        dh = dhs[t] + dh_carry
        i = gates[t, 0:H]
        f = gates[t, H : 2 * H]
        o = gates[t, 2 * H : 3 * H]
        g = gates[t, 3 * H : 4 * H]
        c = cs[t]
        if t == 0:
            c_prev = c0
        else:
            c_prev = cs[t - 1]
        tc = np.tanh(c)
        do = dh * tc
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_carry = dc * f
        dpre[t, 0:H] = di * i * (1.0 - i)
        dpre[t, H : 2 * H] = df * f * (1.0 - f)
        dpre[t, 2 * H : 3 * H] = do * o * (1.0 - o)
        dpre[t, 3 * H : 4 * H] = dg * (1.0 - g * g)
        dh_carry = np.dot(wh, dpre[t])
    return dpre, dh_carry, dc_carry


def _gru_seq_forward(pre_x, h0, whT_zr, whT_n):
    """Run a GRU over a sequence.

    pre_x: (T, 3H) precomputed x@wx+b, whT_zr: (2H, H), whT_n: (H, H)
    transposed recurrent weights. Returns (hs, gates) with gates = [z, r, n].
    """
    T = pre_x.shape[0]
    H = h0.shape[0]
    hs = np.empty((T, H))
    gates = np.empty((T, 3 * H))
    h = h0
    for t in range(T):
        pre_zr = pre_x[t, 0 : 2 * H] + np.dot(whT_zr, h)
        z = _sigmoid(pre_zr[0:H])
        r = _sigmoid(pre_zr[H : 2 * H])
        pre_n = pre_x[t, 2 * H : 3 * H] + np.dot(whT_n, r * h)
        n = np.tanh(pre_n)
        h = (1.0 - z) * h + z * n
        gates[t, 0:H] = z
        gates[t, H : 2 * H] = r
        gates[t, 2 * H : 3 * H] = n
        hs[t] = h
    return hs, gates


def _gru_seq_backward(gates, hs, h0, wh_zr, wh_n, dhs, dh_last):
    """Backward pass matching _gru_seq_forward.

    wh_zr: (H, 2H), wh_n: (H, H) untransposed. Returns (dpre, dh0) with
    dpre (T, 3H) pre-activation grads in [z, r, n] order.
    """
    T, H = hs.shape
    dpre = np.empty((T, 3 * H))
    carry = dh_last.copy()
    for t in range(T - 1, -1, -1):
        dh = dhs[t] + carry
        z = gates[t, 0:H]
        r = gates[t, H : 2 * H]
        n = gates[t, 2 * H : 3 * H]
        if t == 0:
            h_prev = h0
        else:
            h_prev = hs[t - 1]
        dz = dh * (n - h_prev)
        dn = dh * z
        dh_prev = dh * (1.0 - z)
        dpre_n = dn * (1.0 - n * n)
        drh = np.dot(wh_n, dpre_n)
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r
        dpre[t, 0:H] = dz * z * (1.0 - z)
        dpre[t, H : 2 * H] = dr * r * (1.0 - r)
        dpre[t, 2 * H : 3 * H] = dpre_n
        dh_prev = dh_prev + np.dot(wh_zr, dpre[t, 0 : 2 * H])
        carry = dh_prev
    return dpre, carry


def _crf_forward_loops(emis, trans, bos, eos):
    """Log-space forward algorithm; returns (logZ, alpha)."""
    T, L = emis.shape
    alpha = np.empty((T, L))
    alpha[0] = bos + emis[0]
    for t in range(1, T):
        for k in range(L):
            m = -np.inf
            for j in range(L):
                v = alpha[t - 1, j] + trans[j, k]
                if v > m:
                    m = v
            s = 0.0
            for j in range(L):
                s += np.exp(alpha[t - 1, j] + trans[j, k] - m)
            alpha[t, k] = emis[t, k] + m + np.log(s)
    final = alpha[T - 1] + eos
    m = final[0]
    for k in range(1, L):
        if final[k] > m:
            m = final[k]
    s = 0.0
    for k in range(L):
        s += np.exp(final[k] - m)
    return m + np.log(s), alpha


def _crf_forward_np(emis, trans, bos, eos):
    T, L = emis.shape
    alpha = np.empty((T, L))
    alpha[0] = bos + emis[0]
    for t in range(1, T):
        m = alpha[t - 1][:, None] + trans
        mx = m.max(axis=0)
        alpha[t] = emis[t] + mx + np.log(np.exp(m - mx).sum(axis=0))
    final = alpha[T - 1] + eos
    mx = final.max()
    return mx + np.log(np.exp(final - mx).sum()), alpha


def _crf_marginals_loops(emis, trans, bos, eos, alpha, logz):
    """Node marginals (T, L) and edge marginals summed over time (L, L)."""
    T, L = emis.shape
    beta = np.empty((T, L))
    beta[T - 1] = eos
    for t in range(T - 2, -1, -1):
        for j in range(L):
            m = -np.inf
            for k in range(L):
                v = trans[j, k] + emis[t + 1, k] + beta[t + 1, k]
                if v > m:
                    m = v
            s = 0.0
            for k in range(L):
                s += np.exp(trans[j, k] + emis[t + 1, k] + beta[t + 1, k] - m)
            beta[t, j] = m + np.log(s)
    node = np.empty((T, L))
    for t in range(T):
        for k in range(L):
            node[t, k] = np.exp(alpha[t, k] + beta[t, k] - logz)
    edge = np.zeros((L, L))
    for t in range(T - 1):
        for j in range(L):
            for k in range(L):
                edge[j, k] += np.exp(
                    alpha[t, j] + trans[j, k] + emis[t + 1, k] + beta[t + 1, k] - logz
                )
    return node, edge


def _crf_marginals_np(emis, trans, bos, eos, alpha, logz):
    T, L = emis.shape
    beta = np.empty((T, L))
    beta[T - 1] = eos
    for t in range(T - 2, -1, -1):
        m = trans + (emis[t + 1] + beta[t + 1])[None, :]
        mx = m.max(axis=1)
        beta[t] = mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))
    node = np.exp(alpha + beta - logz)
    edge = np.zeros((L, L))
    for t in range(T - 1):
        edge += np.exp(
            alpha[t][:, None] + trans + (emis[t + 1] + beta[t + 1])[None, :] - logz
        )
    return node, edge


def _crf_viterbi(emis, trans, bos, eos):
    """Max-scoring path; ties resolved toward the lowest label index.

    Returns (path, score). Shared body for both backends: the inner loops
    are O(T L^2) which numba compiles and numpy tolerates at tagging sizes.
    """
    T, L = emis.shape
    delta = np.empty((T, L))
    bp = np.zeros((T, L), dtype=np.int64)
    delta[0] = bos + emis[0]
    for t in range(1, T):
        for k in range(L):
            best = delta[t - 1, 0] + trans[0, k]
            arg = 0
            for j in range(1, L):
                v = delta[t - 1, j] + trans[j, k]
                if v > best:
                    best = v
                    arg = j
            delta[t, k] = best + emis[t, k]
            bp[t, k] = arg
    best = delta[T - 1, 0] + eos[0]
    arg = 0
    for k in range(1, L):
        v = delta[T - 1, k] + eos[k]
        if v > best:
            best = v
            arg = k
    path = np.empty(T, dtype=np.int64)
    path[T - 1] = arg
    for t in range(T - 1, 0, -1):
        path[t - 1] = bp[t, path[t]]
    return path, best


if USE_NUMBA:
    _jit = numba.njit(cache=True)
    lstm_seq_forward = _jit(_lstm_seq_forward)
    lstm_seq_backward = _jit(_lstm_seq_backward)
    gru_seq_forward = _jit(_gru_seq_forward)
    gru_seq_backward = _jit(_gru_seq_backward)
    crf_forward = _jit(_crf_forward_loops)
    crf_marginals = _jit(_crf_marginals_loops)
    crf_viterbi = _jit(_crf_viterbi)
else:
    lstm_seq_forward = _lstm_seq_forward
    lstm_seq_backward = _lstm_seq_backward
    gru_seq_forward = _gru_seq_forward
    gru_seq_backward = _gru_seq_backward
    crf_forward = _crf_forward_np
    crf_marginals = _crf_marginals_np
    crf_viterbi = _crf_viterbi

# uncompiled reference bodies, used by tests and the kernel benchmark
PYTHON_IMPLS = {
    "lstm_seq_forward": _lstm_seq_forward,
    "lstm_seq_backward": _lstm_seq_backward,
    "gru_seq_forward": _gru_seq_forward,
    "gru_seq_backward": _gru_seq_backward,
    "crf_forward": _crf_forward_np,
    "crf_marginals": _crf_marginals_np,
    "crf_viterbi": _crf_viterbi,
}

DISPATCHED = {
    "lstm_seq_forward": lambda *a: lstm_seq_forward(*a),
    "lstm_seq_backward": lambda *a: lstm_seq_backward(*a),
    "gru_seq_forward": lambda *a: gru_seq_forward(*a),
    "gru_seq_backward": lambda *a: gru_seq_backward(*a),
    "crf_forward": lambda *a: crf_forward(*a),
    "crf_marginals": lambda *a: crf_marginals(*a),
    "crf_viterbi": lambda *a: crf_viterbi(*a),
}
