"""K-mer segmentation, pairwise padding, and same-locus deduplication."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .align import OffsetMap
from .errors import InputError
from .seqio import NucleotideSequence

PAD_CHAR = "#"


def padding_token(k: int) -> str:
    return PAD_CHAR * k


@dataclass(frozen=True)
class KmerSequence:
    """Ordered k-mer tokens for one strain; may contain padding tokens."""

    strain_name: str
    tokens: tuple[str, ...]
    k: int


def segment(seq: NucleotideSequence, k: int) -> KmerSequence:
    """All overlapping k-length windows, in order: L - k + 1 tokens."""
    if k <= 0:
        raise ValueError("k must be positive")
    if len(seq.bases) < k:
        raise InputError(
            f"sequence '{seq.name}' is shorter than k={k} ({len(seq.bases)} bases)"
        )
    bases = seq.bases
    tokens = tuple(bases[i : i + k] for i in range(len(bases) - k + 1))
    return KmerSequence(strain_name=seq.name, tokens=tokens, k=k)


def align_and_fill_pair(
    r: KmerSequence, t: KmerSequence, offsets: OffsetMap
) -> tuple[list[str], list[str]]:
    """Prefix each token list with one padding token per offset position."""
    pad = padding_token(r.k)
    m = [pad] * offsets.offset(r.strain_name) + list(r.tokens)
    n = [padding_token(t.k)] * offsets.offset(t.strain_name) + list(t.tokens)
    return m, n


def deduplicate_pair(
    r: KmerSequence,
    t: KmerSequence,
    offsets: OffsetMap,
    keep_tails: bool = True,
) -> tuple[KmerSequence, KmerSequence]:
    """Drop tokens the two padded sequences share at the same locus.

    After removing every common position, residual padding tokens are also
    stripped so no placeholder reaches the encoder. Tokens beyond the shorter
    padded length are kept by default (keep_tails=False truncates there
    instead). Relative order always survives.
    """
    m, n = align_and_fill_pair(r, t, offsets)
    limit = min(len(m), len(n))
    common = {i for i in range(limit) if m[i] == n[i]}

    def survivors(tokens: list[str], k: int) -> tuple[str, ...]:
        pad = padding_token(k)
        kept = []
        for i, tok in enumerate(tokens):
            if i in common:
                continue
            if not keep_tails and i >= limit:
                continue
            if tok == pad:
                continue
            kept.append(tok)
        return tuple(kept)

    r_d = KmerSequence(strain_name=r.strain_name, tokens=survivors(m, r.k), k=r.k)
    t_d = KmerSequence(strain_name=t.strain_name, tokens=survivors(n, t.k), k=t.k)
    return r_d, t_d


@dataclass(frozen=True)
class PairExample:
    """One preprocessed pair: deduplicated token lists plus labels and split."""

    reference_tokens: tuple[str, ...]
    test_tokens: tuple[str, ...]
    binary_label: int
    level_label: int
    split: str

    def label(self, task: str) -> int:
        if task == "binary":
            return self.binary_label
        if task == "multilevel":
            return self.level_label
        raise ValueError(f"unknown task '{task}'")


def write_pair_examples(path, examples: Iterable[PairExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "reference_tokens": list(ex.reference_tokens),
                        "test_tokens": list(ex.test_tokens),
                        "binary_label": ex.binary_label,
                        "level_label": ex.level_label,
                        "split": ex.split,
                    }
                )
                + "\n"
            )


def read_pair_examples(path) -> list[PairExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            examples.append(
                PairExample(
                    reference_tokens=tuple(data["reference_tokens"]),
                    test_tokens=tuple(data["test_tokens"]),
                    binary_label=int(data["binary_label"]),
                    level_label=int(data["level_label"]),
                    split=data["split"],
                )
            )
    return examples
