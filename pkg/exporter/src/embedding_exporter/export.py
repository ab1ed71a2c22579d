"""Pull the input-embedding rows for every canonical k-mer out of a
BERT-style DNA language model checkpoint and write them in the consumer's
TSV table format:

    k=<K>\tdim=<D>\tcount=<N>
    TOKEN\tv1 v2 ... vD        (decimal floats, full round-trip precision)

Only the static token-embedding matrix is exported; contextual layers are
out of scope because the consumer treats the table as frozen per-token
initialization.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path

BASES = "ACGT"
VOCAB_FILE = "vocab.txt"


@dataclass(frozen=True)
class ExportManifest:
    checkpoint: str
    k: int
    dim: int
    count: int
    missing: tuple[str, ...]
    sha256: str

    def to_json(self) -> str:
        data = asdict(self)
        data["missing"] = list(self.missing)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def canonical_kmers(k: int) -> list[str]:
    """All 4**k k-mers over A/C/G/T in lexicographic order."""
    return ["".join(p) for p in itertools.product(BASES, repeat=k)]


def read_vocab(checkpoint_dir: Path) -> dict[str, int]:
    """BERT-style vocab.txt: one token per line, row number is the embedding index."""
    vocab_path = checkpoint_dir / VOCAB_FILE
    if not vocab_path.is_file():
        raise FileNotFoundError(f"no {VOCAB_FILE} in checkpoint directory {checkpoint_dir}")
    vocab: dict[str, int] = {}
    with open(vocab_path, "r", encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            token = line.rstrip("\n").strip().upper()
            if token and token not in vocab:
                vocab[token] = index
    return vocab


def load_embedding_matrix(checkpoint: str):
    """The model's input word-embedding weight as a (vocab, dim) float array."""
    from transformers import AutoModel

    model = AutoModel.from_pretrained(checkpoint)
    return model.get_input_embeddings().weight.detach().cpu().numpy()


def export_table(
    checkpoint: str,
    out_path: str | Path,
    k: int = 6,
    manifest_path: str | Path | None = None,
) -> ExportManifest:
    """Write the TSV table plus a manifest recording counts, gaps, and the file hash.

    Canonical k-mers absent from the source vocabulary are listed in the
    manifest rather than invented; the consumer's out-of-vocabulary rule
    covers them at embedding time.
    """
    checkpoint_dir = Path(checkpoint)
    vocab = read_vocab(checkpoint_dir)
    matrix = load_embedding_matrix(checkpoint)
    dim = matrix.shape[1]

    out_path = Path(out_path)
    rows = []
    missing = []
    for kmer in canonical_kmers(k):
        index = vocab.get(kmer)
        if index is None:
            missing.append(kmer)
            continue
        if index >= matrix.shape[0]:
            raise ValueError(
                f"vocab index {index} for '{kmer}' exceeds embedding rows {matrix.shape[0]}"
            )
        values = " ".join(repr(float(v)) for v in matrix[index])
        rows.append(f"{kmer}\t{values}")

    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(f"k={k}\tdim={dim}\tcount={len(rows)}\n")
        for row in rows:
            fh.write(row + "\n")

    digest = hashlib.sha256(out_path.read_bytes()).hexdigest()
    manifest = ExportManifest(
        checkpoint=str(checkpoint),
        k=k,
        dim=int(dim),
        count=len(rows),
        missing=tuple(missing),
        sha256=digest,
    )
    if manifest_path is None:
        manifest_path = out_path.with_name("manifest.json")
    Path(manifest_path).write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def parse_table(path: str | Path) -> dict[str, list[float]]:
    """Re-read an exported TSV (used to verify the round-trip contract)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = dict(part.split("=", 1) for part in header.split("\t"))
        count = int(fields["count"])
        dim = int(fields["dim"])
        vectors: dict[str, list[float]] = {}
        for line in fh:
            token, _, rest = line.rstrip("\n").partition("\t")
            values = [float(v) for v in rest.split()]
            if len(values) != dim:
                raise ValueError(f"row for '{token}' has {len(values)} values, expected {dim}")
            vectors[token] = values
    if len(vectors) != count:
        raise ValueError(f"table declares {count} rows but contains {len(vectors)}")
    return vectors
