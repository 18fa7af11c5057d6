"""Dataset handling: code/comment pair ingestion (JSONL or TSV),
preprocessing (literal normalization, truncation, comment lowercasing),
vocabulary construction, and deterministic train/valid/test splits.
"""

import json
import re
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

MAX_CODE_LEN = 300
MAX_COMMENT_LEN = 30
NUM_TOKEN = "NUM"
STR_TOKEN = "STR"

UNK, PAD, SOS, EOS = "<unk>", "<pad>", "<sos>", "<eos>"
SPECIALS = (UNK, PAD, SOS, EOS)

_NUMERIC_RE = re.compile(
    r"""^[+-]?(
        0[xX][0-9a-fA-F_]+[lL]? |
        0[bB][01_]+[lL]? |
        (\d[\d_]*\.?[\d_]*|\.\d[\d_]*)([eE][+-]?\d+)?[fFdDlL]?
    )$""",
    re.VERBOSE,
)
_STRING_RE = re.compile(r'^".*"$|^\'.*\'$', re.DOTALL)
_TRAILING_PUNCT = re.compile(r"([.,;:!?]+)$")


@dataclass(frozen=True)
class ParallelPair:
    """One (code token sequence, comment token sequence) record."""

    code_tokens: tuple
    comment_tokens: tuple
    id: str = ""


class DatasetError(Exception):
    pass


def tokenize_comment(text: str):
    """Shared comment tokenization rule: lowercase, split terminal
    punctuation off each whitespace chunk, then whitespace split."""
    out = []
    for chunk in text.lower().split():
        m = _TRAILING_PUNCT.search(chunk)
        if m and m.group(1) != chunk:
            out.append(chunk[: m.start(1)])
            out.append(m.group(1))
        else:
            out.append(chunk)
    return out


def load_dataset(path, format: str = "jsonl"):
    """Read pairs in file order. JSONL records are
    {"id": optional, "code": str, "comment": str}; TSV is code TAB comment.
    Raises DatasetError naming the line for malformed records."""
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown dataset format {format!r}")
    pairs = []
    try:
        with open(path, encoding="utf-8") as f:
            raw_lines = f.readlines()
    except FileNotFoundError:
        raise DatasetError(f"dataset file not found: {path}")
    except UnicodeDecodeError as e:
        raise DatasetError(f"dataset file {path} is not valid UTF-8: {e}")
    for lineno, line in enumerate(raw_lines, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if format == "jsonl":
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"line {lineno}: invalid JSON ({e})")
            if "code" not in rec or "comment" not in rec:
                raise DatasetError(f"line {lineno}: record missing code or comment field")
            code, comment = rec["code"], rec["comment"]
            pid = str(rec.get("id", len(pairs)))
        else:
            cols = line.split("\t")
            if len(cols) != 2:
                raise DatasetError(
                    f"line {lineno}: expected 2 tab-separated columns, got {len(cols)}"
                )
            code, comment = cols
            pid = str(len(pairs))
        if not code.strip() or not comment.strip():
            raise DatasetError(f"line {lineno}: empty code or comment field")
        pairs.append(
            ParallelPair(
                code_tokens=tuple(code.split()),
                comment_tokens=tuple(tokenize_comment(comment)),
                id=pid,
            )
        )
    return pairs


def normalize_code_token(tok: str) -> str:
    """Map literal-shaped tokens to NUM / STR placeholders."""
    if _NUMERIC_RE.match(tok):
        return NUM_TOKEN
    if len(tok) >= 2 and _STRING_RE.match(tok):
        return STR_TOKEN
    return tok


def preprocess(
    pair: ParallelPair,
    max_code_len: int = MAX_CODE_LEN,
    max_comment_len: int = MAX_COMMENT_LEN,
) -> ParallelPair:
    """Literal replacement plus prefix truncation; comments lowercased.

    Total and idempotent: NUM/STR are their own fixed points and truncation
    of a truncated sequence is a no-op.
    """
    code = tuple(normalize_code_token(t) for t in pair.code_tokens[:max_code_len])
    comment = tuple(t.lower() for t in pair.comment_tokens[:max_comment_len])
    return replace(pair, code_tokens=code, comment_tokens=comment)


class Vocabulary:
    """Dense token<->index bijection with reserved specials.

    Index order: <unk>=0, <pad>=1, <sos>=2, <eos>=3, then corpus tokens by
    frequency descending, ties lexicographic.
    """

    def __init__(self, tokens):
        self.itos = list(SPECIALS) + [t for t in tokens if t not in SPECIALS]
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, tok):
        return tok in self.stoi

    @property
    def unk_index(self):
        return self.stoi[UNK]

    @property
    def pad_index(self):
        return self.stoi[PAD]

    @property
    def sos_index(self):
        return self.stoi[SOS]

    @property
    def eos_index(self):
        return self.stoi[EOS]

    def index(self, tok: str) -> int:
        return self.stoi.get(tok, self.unk_index)

    def token(self, idx: int) -> str:
        return self.itos[idx]

    def encode(self, tokens):
        return [self.index(t) for t in tokens]

    def decode(self, indices):
        return [self.token(i) for i in indices]

    def to_json(self) -> dict:
        return {"tokens": self.itos}

    @classmethod
    def from_json(cls, data) -> "Vocabulary":
        v = cls.__new__(cls)
        v.itos = list(data["tokens"])
        v.stoi = {t: i for i, t in enumerate(v.itos)}
        return v


def build_vocab(pairs, side: str = "code", min_count: int = 2) -> Vocabulary:
    """Frequency-filtered vocabulary over one side of the corpus."""
    if side not in ("code", "comment"):
        raise ValueError(f"side must be code or comment, got {side!r}")
    if not pairs:
        raise DatasetError("cannot build a vocabulary from an empty corpus")
    counts = {}
    for p in pairs:
        toks = p.code_tokens if side == "code" else p.comment_tokens
        for t in toks:
            counts[t] = counts.get(t, 0) + 1
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    return Vocabulary(kept)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: Fraction = Fraction(8, 10)
    valid_fraction: Fraction = Fraction(1, 10)
    test_fraction: Fraction = Fraction(1, 10)
    seed: int = 0

    def __post_init__(self):
        if self.train_fraction + self.valid_fraction + self.test_fraction != 1:
            raise ValueError("split fractions must sum to 1")


def split(pairs, spec: SplitSpec = SplitSpec()):
    """Disjoint exhaustive shuffle-split, deterministic per seed.

    Valid/test sizes round their fractions; train takes the remainder, so
    all sizes land within one of exact proportionality.
    """
    n = len(pairs)
    n_valid = round(n * float(spec.valid_fraction))
    n_test = round(n * float(spec.test_fraction))
    n_train = n - n_valid - n_test
    if n_train < 0:
        raise ValueError("fractions leave no room for the training split")
    order = np.random.default_rng(spec.seed).permutation(n)
    train = [pairs[i] for i in order[:n_train]]
    valid = [pairs[i] for i in order[n_train : n_train + n_valid]]
    test = [pairs[i] for i in order[n_train + n_valid :]]
    return train, valid, test
