"""Attentive GRU encoder-decoder generating comment tokens from code tokens.

The encoder is a single-layer bidirectional GRU over code-token embeddings
(initialized from the semantic, syntactic, or concatenated table depending
on the mode). Its final states are bridged through a tanh linear layer into
the decoder's initial state; the unidirectional GRU decoder applies additive
attention over the encoder states at every step.

Modes: "lamner" (concatenated table, fine-tuned), "lam" (semantic only),
"ner" (syntactic only), "static" (concatenated, code embeddings frozen).
"""

from dataclasses import dataclass, field

import numpy as np

from . import nnet
from .corpus import Vocabulary
from .embeddings import EmbeddingTable

MODES = ("lamner", "lam", "ner", "static")
MAX_GENERATE_LEN = 30


@dataclass
class SummarizerConfig:
    enc_hidden_total: int = 512  # both directions together
    dec_hidden: int = 512
    att_dim: int | None = None  # defaults to dec_hidden
    dec_emb_dim: int = 256
    dropout: float = 0.1
    learning_rate: float = 0.1
    epochs: int = 100
    batch_size: int = 16
    clip_norm: float = 5.0
    patience: int = 7
    decay_factor: float = 0.1
    lr_floor: float = 1e-7
    seed: int = 0
    embedding_dim: int | None = None  # expected code-table width, checked if set


@dataclass
class SummarizerModel:
    mode: str
    code_vocab: Vocabulary
    comment_vocab: Vocabulary
    enc_hidden: int  # per direction
    dec_hidden: int
    att_dim: int
    dec_emb_dim: int
    params: dict = field(repr=False, default_factory=dict)

    @property
    def code_embedding_frozen(self) -> bool:
        return self.mode == "static"

    def meta(self) -> dict:
        return {
            "mode": self.mode,
            "code_tokens": self.code_vocab.itos,
            "comment_tokens": self.comment_vocab.itos,
            "enc_hidden": self.enc_hidden,
            "dec_hidden": self.dec_hidden,
            "att_dim": self.att_dim,
            "dec_emb_dim": self.dec_emb_dim,
        }


@dataclass
class EncoderOutput:
    hs: np.ndarray  # (T, 2*enc_hidden) per-position states, directions concatenated
    h_last: np.ndarray  # (2*enc_hidden) final forward state then final backward state
    h_final: np.ndarray  # (dec_hidden) tanh-bridged decoder seed
    cache: tuple = None


@dataclass
class AttentionRecord:
    """One weight row over source positions per emitted token."""

    rows: list = field(default_factory=list)

    def to_matrix(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, 0))
        return np.vstack(self.rows)


def init_summarizer(
    code_table: EmbeddingTable,
    comment_vocab: Vocabulary,
    config: SummarizerConfig,
    mode: str = "lamner",
) -> SummarizerModel:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if config.embedding_dim is not None and code_table.dim != config.embedding_dim:
        raise ValueError(
            f"code table dimension {code_table.dim} does not match the "
            f"configured embedding width {config.embedding_dim} for mode {mode!r}"
        )
    if config.enc_hidden_total % 2:
        raise ValueError("enc_hidden_total must be even (two directions)")
    rng = np.random.default_rng(config.seed)
    He = config.enc_hidden_total // 2
    Hd = config.dec_hidden
    A = config.att_dim or Hd
    Ed = config.dec_emb_dim
    E = code_table.dim
    Vm = len(comment_vocab)
    code_vocab = Vocabulary.from_json({"tokens": list(code_table.tokens)})
    params = {
        "code_emb": code_table.vectors.copy(),
        "bridge.w": nnet.uniform_init(rng, (2 * He, Hd), 2 * He),
        "bridge.b": np.zeros(Hd),
        "att.ws": nnet.uniform_init(rng, (Hd, A), Hd),
        "att.wh": nnet.uniform_init(rng, (2 * He, A), 2 * He),
        "att.v": nnet.uniform_init(rng, (A,), A),
        "dec_emb": nnet.uniform_init(rng, (Vm, Ed), Ed),
        "out.w": nnet.uniform_init(rng, (Hd + 2 * He + Ed, Vm), Hd + 2 * He + Ed),
        "out.b": np.zeros(Vm),
    }
    nnet.add_gru(params, "enc_f", nnet.init_gru(rng, E, He))
    nnet.add_gru(params, "enc_b", nnet.init_gru(rng, E, He))
    nnet.add_gru(params, "dec", nnet.init_gru(rng, Ed + 2 * He, Hd))
    return SummarizerModel(
        mode=mode,
        code_vocab=code_vocab,
        comment_vocab=comment_vocab,
        enc_hidden=He,
        dec_hidden=Hd,
        att_dim=A,
        dec_emb_dim=Ed,
        params=params,
    )


def encode(model: SummarizerModel, code_indices) -> EncoderOutput:
    """Bidirectional encoding; h_last concatenates the forward direction's
    final state with the backward direction's final state, and
    h_final = tanh(h_last @ W + b)."""
    idx = np.asarray(code_indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot encode an empty sequence")
    p = model.params
    xs = p["code_emb"][idx]
    f_cell = nnet.get_gru(p, "enc_f")
    b_cell = nnet.get_gru(p, "enc_b")
    hs_f, cache_f = nnet.gru_run(f_cell, xs)
    hs_b_rev, cache_b = nnet.gru_run(b_cell, xs[::-1])
    hs_b = hs_b_rev[::-1]
    hs = np.hstack([hs_f, hs_b])
    h_last = np.concatenate([hs_f[-1], hs_b[0]])
    y_fc = h_last @ p["bridge.w"] + p["bridge.b"]
    h_final = np.tanh(y_fc)
    return EncoderOutput(hs=hs, h_last=h_last, h_final=h_final, cache=(idx, xs, cache_f, cache_b))


def attend(model: SummarizerModel, decoder_state, encoder_states):
    """Additive attention. Returns (context, weights, cache)."""
    if encoder_states.shape[0] == 0:
        raise ValueError("attention needs at least one encoder state")
    p = model.params
    pre = decoder_state @ p["att.ws"] + encoder_states @ p["att.wh"]
    act = np.tanh(pre)
    scores = act @ p["att.v"]
    weights = nnet.softmax(scores)
    context = weights @ encoder_states
    return context, weights, (act, weights, decoder_state, encoder_states)


def _attend_backward(model, cache, dctx, grads, scale, dhs_acc):
    """Backprop through one attention call. Adds into grads/dhs_acc and
    returns the gradient on the decoder state."""
    p = model.params
    act, weights, s_prev, hs = cache
    dw = hs @ dctx
    dhs_acc += np.outer(weights, dctx)
    de = weights * (dw - float(weights @ dw))
    da = np.outer(de, p["att.v"]) * (1.0 - act * act)
    grads["att.v"] += scale * (act.T @ de)
    da_sum = da.sum(axis=0)
    grads["att.ws"] += scale * np.outer(s_prev, da_sum)
    grads["att.wh"] += scale * (hs.T @ da)
    dhs_acc += da @ p["att.wh"].T
    return p["att.ws"] @ da_sum


def decode_step(model: SummarizerModel, prev_token: int, decoder_state, encoder_states):
    """One decoding step. Returns (logits, new_state, attention_weights).

    The GRU input is the previous comment token's embedding concatenated
    with the attention context; the output projection reads the new state,
    the context, and that embedding.
    """
    p = model.params
    if not 0 <= prev_token < p["dec_emb"].shape[0]:
        raise IndexError(f"previous token index {prev_token} out of range")
    ctx, weights, _ = attend(model, decoder_state, encoder_states)
    emb = p["dec_emb"][prev_token]
    x = np.concatenate([emb, ctx])
    s_new = nnet.gru_step(nnet.get_gru(p, "dec"), x, decoder_state)
    readout = np.concatenate([s_new, ctx, emb])
    logits = readout @ p["out.w"] + p["out.b"]
    return logits, s_new, weights


def generate(model: SummarizerModel, code_indices, max_len: int = MAX_GENERATE_LEN):
    """Greedy decoding from SOS until EOS or max_len. Returns
    (comment token list, AttentionRecord); EOS is not emitted and its
    attention row is not recorded."""
    record = AttentionRecord()
    if max_len <= 0:
        return [], record
    enc = encode(model, code_indices)
    s = enc.h_final
    prev = model.comment_vocab.sos_index
    eos = model.comment_vocab.eos_index
    out = []
    for _ in range(max_len):
        logits, s, weights = decode_step(model, prev, s, enc.hs)
        nxt = int(np.argmax(logits))
        if nxt == eos:
            break
        out.append(model.comment_vocab.token(nxt))
        record.rows.append(weights.copy())
        prev = nxt
    return out, record


def beam_generate(model: SummarizerModel, code_indices, beam_width: int = 4, max_len: int = MAX_GENERATE_LEN):
    """Plain beam search over summed log probabilities (no length norm).
    Greedy decoding stays the default; this exists behind a width flag."""
    if beam_width <= 1:
        return generate(model, code_indices, max_len)
    enc = encode(model, code_indices)
    sos = model.comment_vocab.sos_index
    eos = model.comment_vocab.eos_index
    beams = [(0.0, [sos], enc.h_final, [], False)]
    for _ in range(max_len):
        grown = []
        for logp, toks, s, rows, done in beams:
            if done:
                grown.append((logp, toks, s, rows, done))
                continue
            logits, s_new, weights = decode_step(model, toks[-1], s, enc.hs)
            logprobs = logits - (np.max(logits) + np.log(np.exp(logits - np.max(logits)).sum()))
            for tok in np.argsort(-logprobs)[:beam_width]:
                tok = int(tok)
                grown.append(
                    (
                        logp + float(logprobs[tok]),
                        toks + [tok],
                        s_new,
                        rows if tok == eos else rows + [weights.copy()],
                        tok == eos,
                    )
                )
        grown.sort(key=lambda b: (-b[0], b[1]))
        beams = grown[:beam_width]
        if all(b[4] for b in beams):
            break
    logp, toks, _, rows, done = beams[0]
    body = toks[1:-1] if done else toks[1:]
    record = AttentionRecord(rows=rows)
    return [model.comment_vocab.token(t) for t in body], record


def _pair_loss_grads(model, code_idx, comment_idx, rng, cfg, grads, scale):
    """Teacher-forced loss for one pair; accumulates scaled grads in place."""
    p = model.params
    He = model.enc_hidden
    Ed = model.dec_emb_dim
    Hd = model.dec_hidden
    enc = encode(model, code_idx)
    idx, xs, cache_f, cache_b = enc.cache
    T = len(idx)
    enc_mask = nnet.dropout_mask(rng, enc.hs.shape, cfg.dropout)
    hs_d = enc.hs * enc_mask

    sos = model.comment_vocab.sos_index
    eos = model.comment_vocab.eos_index
    inputs = [sos] + list(comment_idx)
    targets = list(comment_idx) + [eos]
    n_steps = len(targets)
    dec_cell = nnet.get_gru(p, "dec")

    s = enc.h_final
    steps = []
    total = 0.0
    for i in range(n_steps):
        ctx, weights, att_cache = attend(model, s, hs_d)
        emb = p["dec_emb"][inputs[i]]
        x = np.concatenate([emb, ctx])
        hs_step, gru_cache = nnet.gru_run(dec_cell, x[None, :], h0=s)
        s_new = hs_step[0]
        readout = np.concatenate([s_new, ctx, emb])
        ro_mask = nnet.dropout_mask(rng, readout.shape, cfg.dropout)
        readout_d = readout * ro_mask
        logits = readout_d @ p["out.w"] + p["out.b"]
        loss, dlogits = nnet.softmax_xent(logits, targets[i])
        total += loss
        steps.append((inputs[i], att_cache, gru_cache, readout_d, ro_mask, dlogits))
        s = s_new

    dhs_d = np.zeros_like(hs_d)
    ds_carry = np.zeros(Hd)
    inv = 1.0 / n_steps
    for i in range(n_steps - 1, -1, -1):
        prev_tok, att_cache, gru_cache, readout_d, ro_mask, dlogits = steps[i]
        dlogits = dlogits * inv
        grads["out.w"] += scale * np.outer(readout_d, dlogits)
        grads["out.b"] += scale * dlogits
        dreadout = (dlogits @ p["out.w"].T) * ro_mask
        ds_new = dreadout[:Hd] + ds_carry
        dctx = dreadout[Hd : Hd + 2 * He].copy()
        demb = dreadout[Hd + 2 * He :].copy()
        dxs_step, gru_grads, ds_prev = nnet.gru_run_backward(dec_cell, gru_cache, ds_new[None, :])
        for k, v in gru_grads.items():
            grads[f"dec.{k}"] += scale * v
        dx = dxs_step[0]
        demb += dx[:Ed]
        dctx += dx[Ed:]
        ds_prev_att = _attend_backward(model, att_cache, dctx, grads, scale, dhs_d)
        grads["dec_emb"][prev_tok] += scale * demb
        ds_carry = ds_prev + ds_prev_att

    dh_final = ds_carry
    dy_fc = dh_final * (1.0 - enc.h_final * enc.h_final)
    grads["bridge.w"] += scale * np.outer(enc.h_last, dy_fc)
    grads["bridge.b"] += scale * dy_fc
    dh_last = p["bridge.w"] @ dy_fc

    dhs = dhs_d * enc_mask
    dhs_f = np.ascontiguousarray(dhs[:, :He])
    dhs_b = np.ascontiguousarray(dhs[::-1, He:])
    f_cell = nnet.get_gru(p, "enc_f")
    b_cell = nnet.get_gru(p, "enc_b")
    dxs_f, gf, _ = nnet.gru_run_backward(f_cell, cache_f, dhs_f, dh_last=dh_last[:He])
    dxs_b_rev, gb, _ = nnet.gru_run_backward(b_cell, cache_b, dhs_b, dh_last=dh_last[He:])
    for k, v in gf.items():
        grads[f"enc_f.{k}"] += scale * v
    for k, v in gb.items():
        grads[f"enc_b.{k}"] += scale * v
    dxs = dxs_f + dxs_b_rev[::-1]
    if "code_emb" in grads:
        np.add.at(grads["code_emb"], idx, scale * dxs)
    return total * inv


def pair_loss(model: SummarizerModel, code_idx, comment_idx) -> float:
    """Teacher-forced mean cross-entropy for one pair, dropout off."""
    enc = encode(model, code_idx)
    sos = model.comment_vocab.sos_index
    eos = model.comment_vocab.eos_index
    inputs = [sos] + list(comment_idx)
    targets = list(comment_idx) + [eos]
    s = enc.h_final
    total = 0.0
    for i, tgt in enumerate(targets):
        logits, s, _ = decode_step(model, inputs[i], s, enc.hs)
        loss, _ = nnet.softmax_xent(logits, tgt)
        total += loss
    return total / len(targets)


def corpus_loss(model: SummarizerModel, encoded_pairs) -> float:
    return sum(pair_loss(model, c, m) for c, m in encoded_pairs) / max(len(encoded_pairs), 1)


def encode_pairs(model: SummarizerModel, pairs, max_comment_len: int = MAX_GENERATE_LEN):
    """ParallelPairs to (code index list, comment index list) with UNK fallback."""
    out = []
    for p in pairs:
        code = model.code_vocab.encode(p.code_tokens)
        comment = model.comment_vocab.encode(p.comment_tokens[:max_comment_len])
        if code and comment:
            out.append((code, comment))
    return out


def train_summarizer(
    model: SummarizerModel,
    train_pairs,
    valid_pairs=None,
    config: SummarizerConfig | None = None,
):
    """Teacher-forced SGD with plateau decay; batches accumulate mean-of-
    sample-loss gradients. Static mode never updates code_emb. Returns
    (model, history of validation losses)."""
    cfg = config or SummarizerConfig()
    data = encode_pairs(model, train_pairs)
    if not data:
        raise ValueError("no usable training pairs")
    monitor = encode_pairs(model, valid_pairs) if valid_pairs else data
    rng = np.random.default_rng(cfg.seed + 1)
    state = nnet.OptimizerState(
        learning_rate=cfg.learning_rate,
        decay_factor=cfg.decay_factor,
        patience=cfg.patience,
        floor=cfg.lr_floor,
    )
    history = []
    for _epoch in range(cfg.epochs):
        for start in range(0, len(data), cfg.batch_size):
            batch = data[start : start + cfg.batch_size]
            grads = nnet.zeros_like_params(model.params)
            if model.code_embedding_frozen:
                grads.pop("code_emb")
            scale = 1.0 / len(batch)
            for code_idx, comment_idx in batch:
                _pair_loss_grads(model, code_idx, comment_idx, rng, cfg, grads, scale)
            nnet.sgd_step(model.params, grads, state, clip_norm=cfg.clip_norm)
        epoch_loss = corpus_loss(model, monitor)
        history.append(epoch_loss)
        state = nnet.plateau_decay(state, epoch_loss)
        if state.should_stop:
            break
    return model, history


def export_attention(record: AttentionRecord, code_tokens, comment_tokens, path) -> None:
    """Write the heatmap file: "rows cols" header, one whitespace-separated
    float row per line, then TAB-joined row labels (emitted comment tokens)
    and TAB-joined column labels (code tokens). Empty generations produce a
    header-only file."""
    matrix = record.to_matrix()
    rows = matrix.shape[0]
    cols = matrix.shape[1] if rows else len(code_tokens)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{rows} {cols}\n")
        if rows == 0:
            return
        for row in matrix:
            f.write(" ".join(format(v, ".17g") for v in row) + "\n")
        f.write("\t".join(comment_tokens) + "\n")
        f.write("\t".join(code_tokens) + "\n")


def read_attention(path):
    """Parse an exported attention file back into (matrix, row_labels,
    col_labels)."""
    with open(path, encoding="utf-8") as f:
        rows, cols = (int(x) for x in f.readline().split())
        if rows == 0:
            return np.zeros((0, cols)), [], []
        matrix = np.array(
            [[float(v) for v in f.readline().split()] for _ in range(rows)]
        )
        row_labels = f.readline().rstrip("\n").split("\t")
        col_labels = f.readline().rstrip("\n").split("\t")
    return matrix, row_labels, col_labels


def save(model: SummarizerModel, path) -> None:
    nnet.save_params(path, "summarizer", model.params, model.meta())


def load(path) -> SummarizerModel:
    kind, params, meta = nnet.load_params(path)
    if kind != "summarizer":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, expected summarizer")
    return SummarizerModel(
        mode=meta["mode"],
        code_vocab=Vocabulary.from_json({"tokens": meta["code_tokens"]}),
        comment_vocab=Vocabulary.from_json({"tokens": meta["comment_tokens"]}),
        enc_hidden=meta["enc_hidden"],
        dec_hidden=meta["dec_hidden"],
        att_dim=meta["att_dim"],
        dec_emb_dim=meta["dec_emb_dim"],
        params=params,
    )
