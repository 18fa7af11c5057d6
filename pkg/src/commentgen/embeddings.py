"""Token embedding tables and the text .vec format (header line
"count dim", then one "token TAB floats" line per token).
"""

import hashlib

import numpy as np

FALLBACK_LOW = -0.05
FALLBACK_HIGH = 0.05


class TableError(Exception):
    pass


class EmbeddingTable:
    """Map token -> fixed-length float64 vector, in a stable row order."""

    def __init__(self, tokens, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise TableError(
                f"vectors shape {vectors.shape} does not match {len(tokens)} tokens"
            )
        self.tokens = list(tokens)
        self.vectors = vectors
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise TableError("duplicate tokens in embedding table")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok):
        return tok in self.index

    def row(self, tok: str) -> np.ndarray:
        return self.vectors[self.index[tok]]

    def matrix_for(self, vocab) -> np.ndarray:
        """Rows aligned to a Vocabulary's index order."""
        missing = [t for t in vocab.itos if t not in self.index]
        if missing:
            raise TableError(f"table missing {len(missing)} tokens: {missing[:5]}")
        return np.vstack([self.row(t) for t in vocab.itos])


def fallback_row(token: str, dim: int, seed: int) -> np.ndarray:
    """Seeded uniform(-0.05, 0.05) row, stable per (seed, token)."""
    digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.uniform(FALLBACK_LOW, FALLBACK_HIGH, size=dim)


def write_vec(path, table: EmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for tok, vec in zip(table.tokens, table.vectors):
            floats = " ".join(format(v, ".17g") for v in vec)
            f.write(f"{tok}\t{floats}\n")


def read_vec(path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise TableError(f"{path}: bad .vec header")
        count, dim = int(header[0]), int(header[1])
        tokens = []
        rows = np.empty((count, dim))
        for i in range(count):
            line = f.readline()
            if not line:
                raise TableError(f"{path}: expected {count} rows, got {i}")
            tok, _, rest = line.rstrip("\n").partition("\t")
            if not rest:
                parts = line.split()
                tok, rest = parts[0], " ".join(parts[1:])
            vals = rest.split()
            if len(vals) != dim:
                raise TableError(f"{path}: row {i} has {len(vals)} floats, want {dim}")
            tokens.append(tok)
            rows[i] = [float(v) for v in vals]
    return EmbeddingTable(tokens, rows)


def concat_tables(semantic: EmbeddingTable, syntactic: EmbeddingTable) -> EmbeddingTable:
    """Row-wise concatenation, semantic first. Vocabularies must match."""
    a, b = set(semantic.tokens), set(syntactic.tokens)
    if a != b:
        only_a = sorted(a - b)
        only_b = sorted(b - a)
        raise TableError(
            "vocabulary mismatch between tables: "
            f"{len(only_a)} only in semantic {only_a[:5]}, "
            f"{len(only_b)} only in syntactic {only_b[:5]}"
        )
    rows = np.hstack(
        [semantic.vectors, np.vstack([syntactic.row(t) for t in semantic.tokens])]
    )
    return EmbeddingTable(semantic.tokens, rows)
