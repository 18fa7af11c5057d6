"""Bidirectional character-level language model over code text.

Two fully independent single-layer LSTMs (a left-to-right and a
right-to-left model, each with its own character embedding and output
projection) are trained jointly to predict the next character in their scan
direction. A code token's semantic embedding is the forward hidden state
after the token's last character concatenated with the backward hidden
state after its first character (scanning right to left).
"""

from dataclasses import dataclass, field

import numpy as np

from . import nnet
from .corpus import SPECIALS
from .embeddings import EmbeddingTable, fallback_row

UNK_CHAR_INDEX = 0


class CharVocabulary:
    """Dense character index; index 0 is the unknown-character slot and the
    newline terminator is always modeled."""

    def __init__(self, chars):
        seen = sorted(set(chars) | {"\n"})
        self.itos = ["<unk-char>"] + seen
        self.stoi = {c: i for i, c in enumerate(seen, start=1)}

    @classmethod
    def from_lines(cls, lines) -> "CharVocabulary":
        chars = set()
        for line in lines:
            chars.update(line)
        return cls(chars)

    def __len__(self):
        return len(self.itos)

    def index(self, ch: str) -> int:
        return self.stoi.get(ch, UNK_CHAR_INDEX)

    def encode(self, text: str) -> np.ndarray:
        return np.array([self.index(c) for c in text], dtype=np.int64)


@dataclass
class CharLmConfig:
    hidden: int = 128
    d_char: int = 32
    dropout: float = 0.1
    learning_rate: float = 0.1
    epochs: int = 100
    bptt_window: int = 128
    clip_norm: float = 5.0
    patience: int = 7
    decay_factor: float = 0.1
    lr_floor: float = 1e-7
    seed: int = 0


@dataclass
class CharLmModel:
    vocab: CharVocabulary
    hidden: int
    d_char: int
    params: dict = field(repr=False, default_factory=dict)

    @property
    def embedding_dim(self) -> int:
        return 2 * self.hidden

    def meta(self) -> dict:
        return {
            "chars": self.vocab.itos[1:],
            "hidden": self.hidden,
            "d_char": self.d_char,
        }

    @classmethod
    def from_meta(cls, params: dict, meta: dict) -> "CharLmModel":
        vocab = CharVocabulary(meta["chars"])
        return cls(vocab=vocab, hidden=meta["hidden"], d_char=meta["d_char"], params=params)


def init_char_lm(vocab: CharVocabulary, config: CharLmConfig) -> CharLmModel:
    rng = np.random.default_rng(config.seed)
    C, H, D = len(vocab), config.hidden, config.d_char
    params = {}
    for direction in ("fwd", "bwd"):
        params[f"{direction}.emb"] = nnet.uniform_init(rng, (C, D), D)
        nnet.add_lstm(params, f"{direction}.lstm", nnet.init_lstm(rng, D, H))
        params[f"{direction}.out_w"] = nnet.uniform_init(rng, (H, C), H)
        params[f"{direction}.out_b"] = np.zeros(C)
    return CharLmModel(vocab=vocab, hidden=H, d_char=D, params=params)


def _direction_indices(vocab: CharVocabulary, line: str, direction: str) -> np.ndarray:
    idx = vocab.encode(line + "\n")
    return idx if direction == "fwd" else idx[::-1].copy()


def _train_direction_on_line(model, direction, idx, state, cfg, rng):
    """One truncated-BPTT pass over a line; hidden state carries across
    windows, gradients do not. Returns the summed loss and position count."""
    p = model.params
    cell = nnet.get_lstm(p, f"{direction}.lstm")
    emb = p[f"{direction}.emb"]
    out_w = p[f"{direction}.out_w"]
    out_b = p[f"{direction}.out_b"]
    H = model.hidden
    h = np.zeros(H)
    c = np.zeros(H)
    total_loss = 0.0
    total_pos = 0
    for s in range(0, len(idx) - 1, cfg.bptt_window):
        inputs = idx[s : s + cfg.bptt_window]
        targets = idx[s + 1 : s + 1 + len(inputs)]
        if len(targets) < len(inputs):
            inputs = inputs[: len(targets)]
        if len(inputs) == 0:
            break
        xs = emb[inputs]
        hs, cs, cache = nnet.lstm_run(cell, xs, h0=h, c0=c)
        mask = nnet.dropout_mask(rng, hs.shape, cfg.dropout)
        hd = hs * mask
        logits = hd @ out_w + out_b
        losses, dlogits = nnet.softmax_xent_rows(logits, targets)
        t = len(inputs)
        total_loss += float(losses.sum())
        total_pos += t
        dlogits /= t
        grads = {
            f"{direction}.out_w": hd.T @ dlogits,
            f"{direction}.out_b": dlogits.sum(axis=0),
        }
        dhs = (dlogits @ out_w.T) * mask
        dxs, cell_grads, _, _ = nnet.lstm_run_backward(cell, cache, dhs)
        for k, v in cell_grads.items():
            grads[f"{direction}.lstm.{k}"] = v
        demb = np.zeros_like(emb)
        np.add.at(demb, inputs, dxs)
        grads[f"{direction}.emb"] = demb
        nnet.sgd_step(p, grads, state, clip_norm=cfg.clip_norm)
        h = hs[-1].copy()
        c = cs[-1].copy()
    return total_loss, total_pos


def evaluate_loss(model: CharLmModel, lines) -> float:
    """Mean next-character cross-entropy in nats/char, both directions,
    dropout off."""
    p = model.params
    total = 0.0
    count = 0
    for direction in ("fwd", "bwd"):
        cell = nnet.get_lstm(p, f"{direction}.lstm")
        emb = p[f"{direction}.emb"]
        out_w = p[f"{direction}.out_w"]
        out_b = p[f"{direction}.out_b"]
        for line in lines:
            idx = _direction_indices(model.vocab, line, direction)
            xs = emb[idx[:-1]]
            hs, _, _ = nnet.lstm_run(cell, xs)
            losses, _ = nnet.softmax_xent_rows(hs @ out_w + out_b, idx[1:])
            total += float(losses.sum())
            count += len(losses)
    return total / max(count, 1)


def train_char_lm(lines, config: CharLmConfig | None = None):
    """Train forward and backward models on code lines (comments assumed
    already absent). Returns (model, history of per-epoch eval losses)."""
    if not lines:
        raise ValueError("empty corpus")
    cfg = config or CharLmConfig()
    vocab = CharVocabulary.from_lines(lines)
    model = init_char_lm(vocab, cfg)
    rng = np.random.default_rng(cfg.seed + 1)
    state = nnet.OptimizerState(
        learning_rate=cfg.learning_rate,
        decay_factor=cfg.decay_factor,
        patience=cfg.patience,
        floor=cfg.lr_floor,
    )
    history = []
    for _epoch in range(cfg.epochs):
        for direction in ("fwd", "bwd"):
            for line in lines:
                idx = _direction_indices(vocab, line, direction)
                _train_direction_on_line(model, direction, idx, state, cfg, rng)
        epoch_loss = evaluate_loss(model, lines)
        history.append(epoch_loss)
        state = nnet.plateau_decay(state, epoch_loss)
        if state.should_stop:
            break
    return model, history


def line_states(model: CharLmModel, text: str):
    """Per-character hidden states for one line of text.

    Returns (hs_fwd, hs_bwd), each (T, hidden): hs_fwd[t] is the forward
    state after consuming text[t]; hs_bwd[t] is the backward state after
    consuming text[t] scanning right to left.
    """
    if not text:
        raise ValueError("empty text")
    p = model.params
    idx = model.vocab.encode(text)
    fwd_cell = nnet.get_lstm(p, "fwd.lstm")
    hs_fwd, _, _ = nnet.lstm_run(fwd_cell, p["fwd.emb"][idx])
    bwd_cell = nnet.get_lstm(p, "bwd.lstm")
    hs_bwd_rev, _, _ = nnet.lstm_run(bwd_cell, p["bwd.emb"][idx[::-1]])
    return hs_fwd, hs_bwd_rev[::-1]


def token_embedding(model: CharLmModel, text: str, span, convention: str = "include_first"):
    """Contextual semantic embedding of one token occurrence, forward
    component first; length is 2 * hidden.

    convention "include_first" reads the backward state after consuming the
    token's first character; "exclude_first" reads the state just before it
    (the right-context-only alternative).
    """
    start, end = span
    if not 0 <= start < end <= len(text):
        raise ValueError(f"invalid span {span} for text of length {len(text)}")
    hs_fwd, hs_bwd = line_states(model, text)
    fwd = hs_fwd[end - 1]
    if convention == "include_first":
        bwd = hs_bwd[start]
    elif convention == "exclude_first":
        bwd = hs_bwd[start + 1] if start + 1 < len(text) else np.zeros(model.hidden)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return np.concatenate([fwd, bwd])


def build_semantic_table(
    model: CharLmModel,
    methods,
    vocab,
    occurrence_cap: int = 1000,
    seed: int = 0,
    convention: str = "include_first",
) -> EmbeddingTable:
    """Per-type semantic table: mean of contextual occurrence embeddings over
    the corpus (capped per token). `methods` are labeled/tokenized methods;
    occurrences are keyed by NUM/STR-normalized token text. Vocabulary tokens
    never observed (and the specials) fall back to seeded uniform rows.
    """
    dim = model.embedding_dim
    sums = {}
    counts = {}
    for method in methods:
        if not method.tokens:
            continue
        hs_fwd, hs_bwd = line_states(model, method.source)
        for tok in method.tokens:
            if tok.kind == "number":
                key = "NUM"
            elif tok.kind in ("string", "char"):
                key = "STR"
            else:
                key = tok.text
            if key not in vocab.stoi or key in SPECIALS:
                continue
            if counts.get(key, 0) >= occurrence_cap:
                continue
            start, end = tok.span
            if convention == "include_first":
                bwd = hs_bwd[start]
            else:
                bwd = hs_bwd[start + 1] if start + 1 < len(method.source) else np.zeros(model.hidden)
            vec = np.concatenate([hs_fwd[end - 1], bwd])
            if key in sums:
                sums[key] += vec
                counts[key] += 1
            else:
                sums[key] = vec.copy()
                counts[key] = 1
    rows = np.empty((len(vocab), dim))
    missing = []
    for i, tok in enumerate(vocab.itos):
        if tok in sums:
            rows[i] = sums[tok] / counts[tok]
        else:
            rows[i] = fallback_row(tok, dim, seed)
            if tok not in SPECIALS:
                missing.append(tok)
    if missing:
        import logging

        logging.getLogger(__name__).info(
            "semantic table: %d vocabulary tokens never occurred, used seeded fallback",
            len(missing),
        )
    return EmbeddingTable(list(vocab.itos), rows)


def generate_line(model: CharLmModel, first_char: str, max_len: int = 400) -> str:
    """Greedy forward generation from a single seed character, stopping at
    the newline terminator or max_len."""
    p = model.params
    cell = nnet.get_lstm(p, "fwd.lstm")
    emb = p["fwd.emb"]
    out_w = p["fwd.out_w"]
    out_b = p["fwd.out_b"]
    h = np.zeros(model.hidden)
    c = np.zeros(model.hidden)
    out = [first_char]
    idx = model.vocab.index(first_char)
    for _ in range(max_len):
        h, c = nnet.lstm_step(cell, emb[idx], h, c)
        idx = int(np.argmax(h @ out_w + out_b))
        ch = model.vocab.itos[idx] if idx != UNK_CHAR_INDEX else "\N{REPLACEMENT CHARACTER}"
        if ch == "\n":
            break
        out.append(ch)
    return "".join(out)


def save(model: CharLmModel, path) -> None:
    nnet.save_params(path, "charlm", model.params, model.meta())


def load(path) -> CharLmModel:
    kind, params, meta = nnet.load_params(path)
    if kind != "charlm":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, expected charlm")
    return CharLmModel.from_meta(params, meta)
