"""BiLSTM-CRF tagger over code-token sequences.

Inputs are per-token semantic embeddings (a trainable matrix initialized
from the char-LM table), projected, run through a bidirectional LSTM, and
scored by an emission layer plus a linear-chain CRF with synthetic BOS/EOS
states. After training, per-token syntactic embeddings are the mean BiLSTM
output states over corpus occurrences.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels, nnet
from .corpus import SPECIALS, Vocabulary
from .embeddings import EmbeddingTable, fallback_row
from .javalex import ENTITY_LABELS


@dataclass
class NerConfig:
    hidden: int = 128
    d_proj: int = 256
    dropout: float = 0.1
    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 16
    clip_norm: float = 5.0
    patience: int = 7
    decay_factor: float = 0.1
    lr_floor: float = 1e-7
    seed: int = 0
    fine_tune_embeddings: bool = True


@dataclass
class NerModel:
    vocab: Vocabulary
    labels: tuple
    hidden: int
    d_proj: int
    params: dict = field(repr=False, default_factory=dict)

    @property
    def label_index(self) -> dict:
        return {l: i for i, l in enumerate(self.labels)}

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def embedding_dim(self) -> int:
        return 2 * self.hidden

    def trans_parts(self):
        """(core, bos_row, eos_col) views of the (L+2)-square matrix."""
        L = self.num_labels
        t = self.params["trans"]
        return (
            np.ascontiguousarray(t[:L, :L]),
            np.ascontiguousarray(t[L, :L]),
            np.ascontiguousarray(t[:L, L + 1]),
        )

    def meta(self) -> dict:
        return {
            "tokens": self.vocab.itos,
            "labels": list(self.labels),
            "hidden": self.hidden,
            "d_proj": self.d_proj,
        }


def init_ner(semantic_table: EmbeddingTable, config: NerConfig, labels=ENTITY_LABELS) -> NerModel:
    """Semantic table rows become the trainable input embedding matrix; the
    table's token order is the model vocabulary."""
    if list(semantic_table.tokens[:4]) != list(SPECIALS):
        raise ValueError("semantic table must start with the special tokens")
    rng = np.random.default_rng(config.seed)
    vocab = Vocabulary.from_json({"tokens": list(semantic_table.tokens)})
    L = len(labels)
    e_in = semantic_table.dim
    H = config.hidden
    D = config.d_proj
    params = {
        "emb": semantic_table.vectors.copy(),
        "proj.w": nnet.uniform_init(rng, (e_in, D), e_in),
        "proj.b": np.zeros(D),
        "emis.w": nnet.uniform_init(rng, (2 * H, L), 2 * H),
        "emis.b": np.zeros(L),
        "trans": rng.uniform(-0.1, 0.1, size=(L + 2, L + 2)),
    }
    nnet.add_lstm(params, "f.lstm", nnet.init_lstm(rng, D, H))
    nnet.add_lstm(params, "b.lstm", nnet.init_lstm(rng, D, H))
    return NerModel(vocab=vocab, labels=tuple(labels), hidden=H, d_proj=D, params=params)


def _bilstm_states(model: NerModel, idx):
    """Projected embeddings through both LSTM directions; returns the
    concatenated (T, 2H) states plus caches for backward."""
    p = model.params
    xs0 = p["emb"][idx]
    xs1 = xs0 @ p["proj.w"] + p["proj.b"]
    f_cell = nnet.get_lstm(p, "f.lstm")
    b_cell = nnet.get_lstm(p, "b.lstm")
    hs_f, _, cache_f = nnet.lstm_run(f_cell, xs1)
    hs_b_rev, _, cache_b = nnet.lstm_run(b_cell, xs1[::-1])
    hs = np.hstack([hs_f, hs_b_rev[::-1]])
    return hs, (idx, xs0, xs1, cache_f, cache_b)


def emissions_for(model: NerModel, tokens, dropout_mask=None):
    """Emission score matrix (T, L) for a token sequence; cache for training."""
    idx = np.array(model.vocab.encode(tokens), dtype=np.int64)
    hs, cache = _bilstm_states(model, idx)
    hd = hs if dropout_mask is None else hs * dropout_mask
    emis = hd @ model.params["emis.w"] + model.params["emis.b"]
    return emis, (cache, hs, hd, dropout_mask)


def gold_path_score(model: NerModel, emissions, gold_idx) -> float:
    core, bos, eos = model.trans_parts()
    s = bos[gold_idx[0]] + emissions[0, gold_idx[0]]
    for t in range(1, len(gold_idx)):
        s += core[gold_idx[t - 1], gold_idx[t]] + emissions[t, gold_idx[t]]
    s += eos[gold_idx[-1]]
    return float(s)


def crf_log_likelihood(model: NerModel, emissions, gold):
    """Negative log likelihood: log Z - score(gold). `gold` may be label
    strings or indices."""
    gold_idx = _gold_indices(model, gold)
    if emissions.shape[0] != len(gold_idx):
        raise ValueError(
            f"{emissions.shape[0]} emission rows vs {len(gold_idx)} gold labels"
        )
    core, bos, eos = model.trans_parts()
    logz, _ = kernels.crf_forward(emissions, core, bos, eos)
    return float(logz) - gold_path_score(model, emissions, gold_idx)


def _gold_indices(model: NerModel, gold):
    lab = model.label_index
    out = []
    for g in gold:
        if isinstance(g, str):
            if g not in lab:
                raise ValueError(f"label {g!r} outside the model's label set")
            out.append(lab[g])
        else:
            if not 0 <= int(g) < model.num_labels:
                raise ValueError(f"label index {g} outside 0..{model.num_labels - 1}")
            out.append(int(g))
    return out


def viterbi(model: NerModel, emissions):
    """Best label sequence for an emission matrix; ties resolve to the
    lowest label index."""
    if emissions.shape[0] == 0:
        raise ValueError("viterbi requires a nonempty sequence")
    core, bos, eos = model.trans_parts()
    path, _ = kernels.crf_viterbi(emissions, core, bos, eos)
    return [model.labels[i] for i in path]


def predict(model: NerModel, tokens):
    emis, _ = emissions_for(model, tokens)
    return viterbi(model, emis)


def _train_pair_grads(model, tokens, gold_idx, rng, cfg, grads, scale):
    """Accumulate one sequence's NLL gradients into `grads`; returns loss."""
    p = model.params
    L = model.num_labels
    T = len(tokens)
    mask = nnet.dropout_mask(rng, (T, 2 * model.hidden), cfg.dropout)
    emis, (cache, hs, hd, _) = emissions_for(model, tokens, dropout_mask=mask)
    core, bos, eos = model.trans_parts()
    logz, alpha = kernels.crf_forward(emis, core, bos, eos)
    loss = float(logz) - gold_path_score(model, emis, gold_idx)
    node, edge = kernels.crf_marginals(emis, core, bos, eos, alpha, logz)
    dtrans = np.zeros_like(p["trans"])
    dtrans[:L, :L] = edge
    for t in range(1, T):
        dtrans[gold_idx[t - 1], gold_idx[t]] -= 1.0
    dtrans[L, :L] += node[0]
    dtrans[L, gold_idx[0]] -= 1.0
    dtrans[:L, L + 1] += node[-1]
    dtrans[:L, L + 1][gold_idx[-1]] -= 1.0
    # node doubles as the emission gradient once the gold one-hots come off
    demis = node
    for t, g in enumerate(gold_idx):
        demis[t, g] -= 1.0

    grads["trans"] += scale * dtrans
    grads["emis.w"] += scale * (hd.T @ demis)
    grads["emis.b"] += scale * demis.sum(axis=0)
    dhd = demis @ p["emis.w"].T
    dhs = dhd * mask
    H = model.hidden
    idx, xs0, xs1, cache_f, cache_b = cache
    f_cell = nnet.get_lstm(p, "f.lstm")
    b_cell = nnet.get_lstm(p, "b.lstm")
    dxs_f, gf, _, _ = nnet.lstm_run_backward(f_cell, cache_f, np.ascontiguousarray(dhs[:, :H]))
    dxs_b_rev, gb, _, _ = nnet.lstm_run_backward(
        b_cell, cache_b, np.ascontiguousarray(dhs[::-1, H:])
    )
    for k, v in gf.items():
        grads[f"f.lstm.{k}"] += scale * v
    for k, v in gb.items():
        grads[f"b.lstm.{k}"] += scale * v
    dxs1 = dxs_f + dxs_b_rev[::-1]
    grads["proj.w"] += scale * (xs0.T @ dxs1)
    grads["proj.b"] += scale * dxs1.sum(axis=0)
    if cfg.fine_tune_embeddings:
        dxs0 = dxs1 @ p["proj.w"].T
        np.add.at(grads["emb"], idx, scale * dxs0)
    return loss


def mean_nll(model: NerModel, sequences) -> float:
    """Mean per-sequence CRF negative log likelihood, dropout off."""
    total = 0.0
    for tokens, labels in sequences:
        emis, _ = emissions_for(model, tokens)
        total += crf_log_likelihood(model, emis, list(labels))
    return total / max(len(sequences), 1)


def train_ner(
    sequences,
    semantic_table: EmbeddingTable,
    config: NerConfig | None = None,
    valid=None,
    labels=ENTITY_LABELS,
):
    """SGD with plateau decay on (token sequence, label sequence) pairs.

    Batches accumulate per-sequence mean gradients (numerically the mean of
    sample losses). Returns (model, history of validation losses).
    """
    cfg = config or NerConfig()
    if not sequences:
        raise ValueError("empty training corpus")
    model = init_ner(semantic_table, cfg, labels=labels)
    gold = [
        (list(toks), _gold_indices(model, list(labs))) for toks, labs in sequences
    ]
    rng = np.random.default_rng(cfg.seed + 1)
    state = nnet.OptimizerState(
        learning_rate=cfg.learning_rate,
        decay_factor=cfg.decay_factor,
        patience=cfg.patience,
        floor=cfg.lr_floor,
    )
    monitor = valid if valid is not None else sequences
    history = []
    for _epoch in range(cfg.epochs):
        for start in range(0, len(gold), cfg.batch_size):
            batch = gold[start : start + cfg.batch_size]
            grads = nnet.zeros_like_params(model.params)
            if not cfg.fine_tune_embeddings:
                grads.pop("emb")
            scale = 1.0 / len(batch)
            for tokens, gold_idx in batch:
                _train_pair_grads(model, tokens, gold_idx, rng, cfg, grads, scale)
            nnet.sgd_step(model.params, grads, state, clip_norm=cfg.clip_norm)
        epoch_loss = mean_nll(model, monitor)
        history.append(epoch_loss)
        state = nnet.plateau_decay(state, epoch_loss)
        if state.should_stop:
            break
    return model, history


def evaluate_ner(model: NerModel, gold_corpus) -> dict:
    """Token-level precision/recall/F1 per label plus micro averages."""
    counts = {l: {"tp": 0, "fp": 0, "fn": 0, "support": 0} for l in model.labels}
    for tokens, labels in gold_corpus:
        pred = predict(model, list(tokens))
        for g, p in zip(labels, pred):
            counts[g]["support"] += 1
            if g == p:
                counts[g]["tp"] += 1
            else:
                counts[p]["fp"] += 1
                counts[g]["fn"] += 1
    per_label = {}
    tp = fp = fn = 0
    for lab, c in counts.items():
        p = c["tp"] / (c["tp"] + c["fp"]) if c["tp"] + c["fp"] else 0.0
        r = c["tp"] / (c["tp"] + c["fn"]) if c["tp"] + c["fn"] else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        per_label[lab] = {"precision": p, "recall": r, "f1": f1, "support": c["support"]}
        tp += c["tp"]
        fp += c["fp"]
        fn += c["fn"]
    micro_p = tp / (tp + fp) if tp + fp else 0.0
    micro_r = tp / (tp + fn) if tp + fn else 0.0
    micro_f1 = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    return {
        "per_label": per_label,
        "micro": {"precision": micro_p, "recall": micro_r, "f1": micro_f1},
    }


def build_syntactic_table(
    model: NerModel, sequences, vocab: Vocabulary, occurrence_cap: int = 1000, seed: int = 0
) -> EmbeddingTable:
    """Mean BiLSTM output state (2 * hidden) per vocabulary token over its
    corpus occurrences; unseen tokens and specials use seeded fallback rows."""
    dim = model.embedding_dim
    sums = {}
    counts = {}
    for tokens in sequences:
        if not tokens:
            continue
        idx = np.array(model.vocab.encode(list(tokens)), dtype=np.int64)
        hs, _ = _bilstm_states(model, idx)
        for t, tok in enumerate(tokens):
            if tok not in vocab.stoi or tok in SPECIALS:
                continue
            if counts.get(tok, 0) >= occurrence_cap:
                continue
            if tok in sums:
                sums[tok] += hs[t]
                counts[tok] += 1
            else:
                sums[tok] = hs[t].copy()
                counts[tok] = 1
    rows = np.empty((len(vocab), dim))
    for i, tok in enumerate(vocab.itos):
        if tok in sums:
            rows[i] = sums[tok] / counts[tok]
        else:
            rows[i] = fallback_row(tok, dim, seed)
    return EmbeddingTable(list(vocab.itos), rows)


def save(model: NerModel, path) -> None:
    nnet.save_params(path, "ner", model.params, model.meta())


def load(path) -> NerModel:
    kind, params, meta = nnet.load_params(path)
    if kind != "ner":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, expected ner")
    model = NerModel(
        vocab=Vocabulary.from_json({"tokens": meta["tokens"]}),
        labels=tuple(meta["labels"]),
        hidden=meta["hidden"],
        d_proj=meta["d_proj"],
        params=params,
    )
    return model
