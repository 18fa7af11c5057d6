"""Minimal neural toolkit: parameter initialization, LSTM/GRU cells,
softmax cross-entropy, SGD with plateau learning-rate decay, dropout,
finite-difference gradient checking, and a binary checkpoint container.

Models in this package are flat dicts mapping parameter name -> float64
ndarray; gradients use the same keys. Updates happen in place so any views
held elsewhere stay valid.
"""

import json
import os
import struct
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from . import kernels


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(x):
    z = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


class LstmParams(NamedTuple):
    """Packed LSTM cell parameters, gate order [input, forget, output, cand].

    wx: (input_dim, 4H), wh: (H, 4H), b: (4H,).
    """

    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.wh.shape[0]


class GruParams(NamedTuple):
    """Packed GRU cell parameters, gate order [update, reset, candidate].

    wx: (input_dim, 3H), wh_zr: (H, 2H), wh_n: (H, H), b: (3H,).
    """

    wx: np.ndarray
    wh_zr: np.ndarray
    wh_n: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.wh_zr.shape[0]


def init_lstm(rng, input_dim: int, hidden: int) -> LstmParams:
    return LstmParams(
        wx=uniform_init(rng, (input_dim, 4 * hidden), input_dim),
        wh=uniform_init(rng, (hidden, 4 * hidden), hidden),
        b=np.zeros(4 * hidden),
    )


def init_gru(rng, input_dim: int, hidden: int) -> GruParams:
    return GruParams(
        wx=uniform_init(rng, (input_dim, 3 * hidden), input_dim),
        wh_zr=uniform_init(rng, (hidden, 2 * hidden), hidden),
        wh_n=uniform_init(rng, (hidden, hidden), hidden),
        b=np.zeros(3 * hidden),
    )


def add_lstm(params: dict, prefix: str, cell: LstmParams) -> None:
    params[prefix + ".wx"] = cell.wx
    params[prefix + ".wh"] = cell.wh
    params[prefix + ".b"] = cell.b


def get_lstm(params: dict, prefix: str) -> LstmParams:
    return LstmParams(params[prefix + ".wx"], params[prefix + ".wh"], params[prefix + ".b"])


def add_gru(params: dict, prefix: str, cell: GruParams) -> None:
    params[prefix + ".wx"] = cell.wx
    params[prefix + ".wh_zr"] = cell.wh_zr
    params[prefix + ".wh_n"] = cell.wh_n
    params[prefix + ".b"] = cell.b


def get_gru(params: dict, prefix: str) -> GruParams:
    return GruParams(
        params[prefix + ".wx"],
        params[prefix + ".wh_zr"],
        params[prefix + ".wh_n"],
        params[prefix + ".b"],
    )


def lstm_step(p: LstmParams, x, h_prev, c_prev):
    """One LSTM step: gates via sigmoid, squashes via tanh.

    c = f*c_prev + i*g, h = o*tanh(c). Raises on dimension mismatch.
    """
    H = p.hidden
    if x.shape[0] != p.wx.shape[0] or h_prev.shape[0] != H or c_prev.shape[0] != H:
        raise ValueError(
            f"lstm_step dimension mismatch: x {x.shape}, h {h_prev.shape}, "
            f"c {c_prev.shape} vs wx {p.wx.shape}, wh {p.wh.shape}"
        )
    pre = x @ p.wx + h_prev @ p.wh + p.b
    i = sigmoid(pre[:H])
    f = sigmoid(pre[H : 2 * H])
    o = sigmoid(pre[2 * H : 3 * H])
    g = np.tanh(pre[3 * H :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def gru_step(p: GruParams, x, h_prev):
    """One GRU step: h = (1-z)*h_prev + z*tanh(Wx + U(r*h_prev) + b)."""
    H = p.hidden
    if x.shape[0] != p.wx.shape[0] or h_prev.shape[0] != H:
        raise ValueError(
            f"gru_step dimension mismatch: x {x.shape}, h {h_prev.shape} "
            f"vs wx {p.wx.shape}"
        )
    pre = x @ p.wx + p.b
    zr = pre[: 2 * H] + h_prev @ p.wh_zr
    z = sigmoid(zr[:H])
    r = sigmoid(zr[H:])
    n = np.tanh(pre[2 * H :] + (r * h_prev) @ p.wh_n)
    return (1.0 - z) * h_prev + z * n


def lstm_run(p: LstmParams, xs, h0=None, c0=None):
    """LSTM over a (T, D) sequence via the hot kernel.

    Returns (hs, cs, cache) where cache feeds lstm_run_backward.
    """
    H = p.hidden
    if h0 is None:
        h0 = np.zeros(H)
    if c0 is None:
        c0 = np.zeros(H)
    pre_x = xs @ p.wx + p.b
    whT = np.ascontiguousarray(p.wh.T)
    hs, cs, gates = kernels.lstm_seq_forward(pre_x, h0, c0, whT)
    return hs, cs, (xs, hs, cs, gates, h0, c0)


def lstm_run_backward(p: LstmParams, cache, dhs, dh_last=None, dc_last=None):
    """Gradients for lstm_run. Returns (dxs, grads_dict, dh0, dc0)."""
    xs, hs, cs, gates, h0, c0 = cache
    H = p.hidden
    if dh_last is None:
        dh_last = np.zeros(H)
    if dc_last is None:
        dc_last = np.zeros(H)
    dpre, dh0, dc0 = kernels.lstm_seq_backward(
        gates, hs, cs, h0, c0, p.wh, dhs, dh_last, dc_last
    )
    h_prevs = np.vstack([h0[None, :], hs[:-1]])
    grads = {
        "wx": xs.T @ dpre,
        "wh": h_prevs.T @ dpre,
        "b": dpre.sum(axis=0),
    }
    dxs = dpre @ p.wx.T
    return dxs, grads, dh0, dc0


def gru_run(p: GruParams, xs, h0=None):
    """GRU over a (T, D) sequence via the hot kernel."""
    H = p.hidden
    if h0 is None:
        h0 = np.zeros(H)
    pre_x = xs @ p.wx + p.b
    whT_zr = np.ascontiguousarray(p.wh_zr.T)
    whT_n = np.ascontiguousarray(p.wh_n.T)
    hs, gates = kernels.gru_seq_forward(pre_x, h0, whT_zr, whT_n)
    return hs, (xs, hs, gates, h0)


def gru_run_backward(p: GruParams, cache, dhs, dh_last=None):
    """Gradients for gru_run. Returns (dxs, grads_dict, dh0)."""
    xs, hs, gates, h0 = cache
    H = p.hidden
    if dh_last is None:
        dh_last = np.zeros(H)
    dpre, dh0 = kernels.gru_seq_backward(gates, hs, h0, p.wh_zr, p.wh_n, dhs, dh_last)
    h_prevs = np.vstack([h0[None, :], hs[:-1]])
    r = gates[:, H : 2 * H]
    grads = {
        "wx": xs.T @ dpre,
        "wh_zr": h_prevs.T @ dpre[:, : 2 * H],
        "wh_n": (r * h_prevs).T @ dpre[:, 2 * H :],
        "b": dpre.sum(axis=0),
    }
    dxs = dpre @ p.wx.T
    return dxs, grads, dh0


def softmax(v):
    m = v.max()
    e = np.exp(v - m)
    return e / e.sum()


def softmax_rows(m):
    mx = m.max(axis=-1, keepdims=True)
    e = np.exp(m - mx)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits, target: int):
    """Stabilized cross-entropy. Returns (loss, dlogits)."""
    if not 0 <= target < logits.shape[0]:
        raise IndexError(f"target {target} out of range for {logits.shape[0]} logits")
    p = softmax(logits)
    loss = -np.log(max(p[target], 1e-300))
    grad = p.copy()
    grad[target] -= 1.0
    return loss, grad


def softmax_xent_rows(logits, targets):
    """Row-wise cross-entropy over (T, C) logits. Returns (losses, dlogits)."""
    T = logits.shape[0]
    p = softmax_rows(logits)
    picked = p[np.arange(T), targets]
    losses = -np.log(np.maximum(picked, 1e-300))
    grads = p
    grads[np.arange(T), targets] -= 1.0
    return losses, grads


def dropout_mask(rng, shape, rate: float):
    """Inverted-dropout mask: zeros with prob rate, survivors scaled 1/(1-rate)."""
    if rate <= 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


@dataclass(frozen=True)
class OptimizerState:
    """SGD learning-rate schedule: multiply by decay_factor after `patience`
    consecutive epochs without validation improvement; stop at the floor."""

    learning_rate: float = 0.1
    decay_factor: float = 0.1
    patience: int = 7
    floor: float = 1e-7
    best_valid_loss: float = np.inf
    epochs_since_improvement: int = 0

    @property
    def should_stop(self) -> bool:
        # tolerant compare: six float64 decays of 0.1 land a few ulp above 1e-7
        return self.learning_rate <= self.floor * (1.0 + 1e-9)


def plateau_decay(state: OptimizerState, valid_loss: float) -> OptimizerState:
    """Advance the schedule by one epoch's validation loss."""
    if valid_loss < state.best_valid_loss:
        return replace(state, best_valid_loss=valid_loss, epochs_since_improvement=0)
    waited = state.epochs_since_improvement + 1
    if waited >= state.patience:
        new_lr = max(state.learning_rate * state.decay_factor, state.floor)
        return replace(state, learning_rate=new_lr, epochs_since_improvement=0)
    return replace(state, epochs_since_improvement=waited)


def grad_norm(grads: dict) -> float:
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    return float(np.sqrt(total))


def clip_grads(grads: dict, max_norm: float = 5.0) -> float:
    """Scale all gradients so the global norm is at most max_norm.

    Returns the scale applied (1.0 when no clipping happened).
    """
    norm = grad_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return 1.0
    scale = max_norm / norm
    for g in grads.values():
        g *= scale
    return scale


def sgd_step(params: dict, grads: dict, state: OptimizerState, clip_norm: float | None = 5.0):
    """In-place p -= lr * g with optional global-norm clipping at clip_norm.

    Raises ValueError naming the parameter if a gradient is not finite.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for parameter '{name}'")
    if clip_norm is not None:
        clip_grads(grads, clip_norm)
    lr = state.learning_rate
    for name, g in grads.items():
        params[name] -= lr * g
    return params


def zeros_like_params(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def accumulate(total: dict, part: dict, scale: float = 1.0) -> None:
    for k, v in part.items():
        total[k] += scale * v


def grad_check(
    loss_fn: Callable[[], float],
    params: dict,
    analytic: dict,
    epsilon: float = 1e-5,
    keys=None,
) -> float:
    """Central finite differences against analytic grads.

    loss_fn recomputes the scalar loss from the current (mutated) params.
    Relative error per entry is |a-n| / max(|a|, |n|, 1e-8); returns the max.
    """
    max_err = 0.0
    for name in keys if keys is not None else sorted(params):
        p = params[name]
        a = analytic[name]
        flat = p.reshape(-1)
        aflat = a.reshape(-1)
        for idx in range(flat.shape[0]):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            up = loss_fn()
            flat[idx] = orig - epsilon
            down = loss_fn()
            flat[idx] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise FloatingPointError(f"non-finite loss while perturbing '{name}'")
            num = (up - down) / (2.0 * epsilon)
            err = abs(aflat[idx] - num) / max(abs(aflat[idx]), abs(num), 1e-8)
            max_err = max(max_err, err)
    return max_err


CHECKPOINT_MAGIC = b"CGCK"
CHECKPOINT_VERSION = 1


def save_params(path, kind: str, params: dict, meta: dict | None = None) -> None:
    """Write the little-endian checkpoint container.

    Layout: magic, u32 version, kind (u32 len + utf8), meta JSON (u64 len +
    utf8), u32 blob count, then per blob: name (u32 len + utf8), u64 rows,
    u64 cols, raw float64 data. 1-D arrays use cols == 0 and rows == length.
    Identical bytes imply an identical model; blobs are written in sorted
    name order and the write is atomic.
    """
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    kind_bytes = kind.encode("utf-8")
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(kind_bytes)))
        f.write(kind_bytes)
        f.write(struct.pack("<Q", len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<I", len(params)))
        for name in sorted(params):
            arr = np.asarray(params[name], dtype="<f8")
            if arr.ndim == 1:
                rows, cols = arr.shape[0], 0
            elif arr.ndim == 2:
                rows, cols = arr.shape
            else:
                raise ValueError(f"checkpoint arrays must be 1-D or 2-D, got {arr.shape}")
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<QQ", rows, cols))
            f.write(arr.tobytes(order="C"))
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def load_params(path):
    """Read a checkpoint. Returns (kind, params, meta)."""
    with open(path, "rb") as f:
        data = f.read()
    off = 0

    def take(n):
        nonlocal off
        chunk = data[off : off + n]
        if len(chunk) != n:
            raise ValueError(f"truncated checkpoint {path}")
        off += n
        return chunk

    if take(4) != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a checkpoint (bad magic)")
    (version,) = struct.unpack("<I", take(4))
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    (klen,) = struct.unpack("<I", take(4))
    kind = take(klen).decode("utf-8")
    (mlen,) = struct.unpack("<Q", take(8))
    meta = json.loads(take(mlen).decode("utf-8"))
    (count,) = struct.unpack("<I", take(4))
    params = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<I", take(4))
        name = take(nlen).decode("utf-8")
        rows, cols = struct.unpack("<QQ", take(16))
        n = rows * max(cols, 1)
        arr = np.frombuffer(take(n * 8), dtype="<f8").astype(np.float64)
        params[name] = arr.reshape((rows,) if cols == 0 else (rows, cols))
    return kind, params, meta
