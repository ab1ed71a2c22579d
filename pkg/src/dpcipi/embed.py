"""Static k-mer embedding tables: TSV loading, OOV neighbor averaging, pooling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .kmer import KmerSequence

TOKEN_ALPHABET = "ACGT"

# Positions consulted when a token is absent from the table: two per side.
OOV_NEIGHBOR_OFFSETS = (-2, -1, 1, 2)


@dataclass
class EmbeddingTable:
    """Token -> dense vector map with k and dimension metadata."""

    k: int
    dim: int
    vectors: dict[str, np.ndarray] = field(repr=False)
    source: str = "pretrained"

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class SequenceEmbedding:
    """Per-token vectors for one sequence; rows has shape (tokens, dim)."""

    rows: np.ndarray
    dim: int

    def __len__(self) -> int:
        return self.rows.shape[0]


def _valid_token(token: str, k: int) -> bool:
    return len(token) == k and all(c in TOKEN_ALPHABET for c in token)


def load_table(path) -> EmbeddingTable:
    """Read the TSV table format: a k/dim/count header line, then one row per token."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split("\t")
        try:
            fields = dict(p.split("=", 1) for p in parts)
            k = int(fields["k"])
            dim = int(fields["dim"])
            count = int(fields["count"])
        except (ValueError, KeyError):
            raise InputError(
                f"malformed embedding table header {header!r}, expected 'k=K\\tdim=D\\tcount=N'"
            ) from None
        vectors: dict[str, np.ndarray] = {}
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            token, _, rest = line.partition("\t")
            if token in vectors:
                raise InputError(f"duplicate token '{token}' in embedding table")
            if not _valid_token(token, k):
                raise InputError(f"invalid token '{token}' for k={k} table")
            try:
                vec = np.array([float(v) for v in rest.split()], dtype=np.float64)
            except ValueError:
                raise InputError(f"non-numeric vector entry for token '{token}'") from None
            if vec.shape[0] != dim:
                raise InputError(
                    f"token '{token}' has vector length {vec.shape[0]}, expected dim={dim}"
                )
            vectors[token] = vec
    if len(vectors) != count:
        raise InputError(
            f"embedding table declares count={count} but has {len(vectors)} rows"
        )
    return EmbeddingTable(k=k, dim=dim, vectors=vectors, source="pretrained")


def save_table(table: EmbeddingTable, path) -> None:
    """Write the TSV format with full round-trip float precision, tokens sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"k={table.k}\tdim={table.dim}\tcount={len(table.vectors)}\n")
        for token in sorted(table.vectors):
            values = " ".join(repr(float(v)) for v in table.vectors[token])
            fh.write(f"{token}\t{values}\n")


def embed_sequence(table: EmbeddingTable, s: KmerSequence) -> SequenceEmbedding:
    """Look up each token; unknown tokens take the mean of known window neighbors.

    An out-of-vocabulary token at position i averages the stored vectors of
    its in-table neighbors at i-2, i-1, i+1, i+2 (out-of-range or OOV
    neighbors are excluded). With no known neighbor it becomes the zero
    vector, so no random values ever enter the representation.
    """
    if s.k != table.k:
        raise ValueError(f"sequence k={s.k} does not match table k={table.k}")
    rows = np.zeros((len(s.tokens), table.dim), dtype=np.float64)
    for i, token in enumerate(s.tokens):
        vec = table.vectors.get(token)
        if vec is not None:
            rows[i] = vec
            continue
        neighbors = []
        for off in OOV_NEIGHBOR_OFFSETS:
            j = i + off
            if 0 <= j < len(s.tokens):
                nvec = table.vectors.get(s.tokens[j])
                if nvec is not None:
                    neighbors.append(nvec)
        if neighbors:
            rows[i] = np.mean(neighbors, axis=0)
    return SequenceEmbedding(rows=rows, dim=table.dim)


def embed_sequence_backward(
    table: EmbeddingTable,
    tokens,
    drows: np.ndarray,
    accum: dict[str, np.ndarray],
) -> None:
    """Route per-row gradients back onto table entries, mirroring embed_sequence.

    Rows of in-table tokens map straight to that token; OOV rows split their
    gradient evenly over the known neighbors that produced the forward mean.
    Used only when the table is being fine-tuned.
    """
    tokens = tuple(tokens)
    for i, token in enumerate(tokens):
        g = drows[i]
        if token in table.vectors:
            if token in accum:
                accum[token] = accum[token] + g
            else:
                accum[token] = g.copy()
            continue
        known = []
        for off in OOV_NEIGHBOR_OFFSETS:
            j = i + off
            if 0 <= j < len(tokens) and tokens[j] in table.vectors:
                known.append(tokens[j])
        if not known:
            continue
        share = g / len(known)
        for ntok in known:
            if ntok in accum:
                accum[ntok] = accum[ntok] + share
            else:
                accum[ntok] = share.copy()


def gse_pool(e: SequenceEmbedding) -> np.ndarray:
    """Elementwise mean over tokens; the zero vector for an empty sequence."""
    if len(e) == 0:
        return np.zeros(e.dim, dtype=np.float64)
    return e.rows.mean(axis=0)


def random_table(k: int, dim: int, seed: int) -> EmbeddingTable:
    """Uniform [-0.05, 0.05] vectors for all 4^k tokens; deterministic per seed."""
    rng = np.random.default_rng(seed)
    tokens = ["".join(p) for p in itertools.product(TOKEN_ALPHABET, repeat=k)]
    matrix = rng.uniform(-0.05, 0.05, size=(len(tokens), dim))
    vectors = {tok: matrix[i].copy() for i, tok in enumerate(tokens)}
    return EmbeddingTable(k=k, dim=dim, vectors=vectors, source=f"random({seed})")
