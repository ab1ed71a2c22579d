"""Generated strain corpora whose cross-immunity labels are deterministic
functions of pair Hamming distance; used for sanity training runs, baseline
checks, and the end-to-end pipeline tests."""

from __future__ import annotations

import numpy as np

from .align import align_sequences
from .kmer import PairExample, deduplicate_pair, segment
from .seqio import HiRecord, NucleotideSequence, build_dataset

BASES = "ACGT"

# Mutation count per titer level; binary positives (m <= 3) are well separated
# from negatives (m >= 6), and the titer representative of each level keeps
# every derived label consistent with the real binning rules.
MUTATIONS_BY_LEVEL = {3: 1, 2: 2, 1: 3, 0: (6, 7, 8)}
TITER_BY_LEVEL = {0: 20.0, 1: 60.0, 2: 500.0, 3: 2000.0}

TRAIN_YEAR = 88  # 1988
TEST_YEAR = 97  # 1997


def _mutate(rng: np.random.Generator, bases: str, count: int, k: int) -> str:
    """Mutate `count` positions spaced at least k apart (disjoint k-mer windows)."""
    candidates = list(range(k - 1, len(bases) - k))
    chosen: list[int] = []
    for pos in rng.permutation(candidates):
        if all(abs(pos - c) >= k for c in chosen):
            chosen.append(int(pos))
            if len(chosen) == count:
                break
    if len(chosen) < count:
        raise ValueError(f"cannot place {count} mutations with spacing {k} in {len(bases)} bases")
    out = list(bases)
    for pos in chosen:
        alternatives = [b for b in BASES if b != out[pos]]
        out[pos] = alternatives[rng.integers(len(alternatives))]
    return "".join(out)


def make_strain_corpus(
    n_pairs: int = 500,
    length: int = 60,
    k: int = 3,
    seed: int = 0,
    test_fraction: float = 0.2,
) -> tuple[list[NucleotideSequence], list[HiRecord]]:
    """Synthesize strain sequences and HI records for n_pairs reference/test pairs.

    Each pair is a fresh random sequence plus a copy mutated at m spread-out
    positions; the recorded titer encodes m, so the derived binary label is a
    Hamming-distance threshold. Strain names carry two-digit years placing the
    first test_fraction of pairs in the temporal test split.
    """
    rng = np.random.default_rng(seed)
    n_test = int(n_pairs * test_fraction)
    sequences: list[NucleotideSequence] = []
    records: list[HiRecord] = []
    for idx in range(n_pairs):
        # Half the pairs land in level 0 so the binary task stays balanced.
        draw = int(rng.integers(6))
        level = 0 if draw < 3 else draw - 2
        spec = MUTATIONS_BY_LEVEL[level]
        m = int(spec if isinstance(spec, int) else spec[rng.integers(len(spec))])
        year = TEST_YEAR if idx < n_test else TRAIN_YEAR
        bases = "".join(BASES[i] for i in rng.integers(0, 4, size=length))
        ref = NucleotideSequence(
            name=f"A/SYNREF{idx}/{year}", accession=f"SR{idx:05d}", bases=bases
        )
        test = NucleotideSequence(
            name=f"A/SYNTEST{idx}/{year}",
            accession=f"ST{idx:05d}",
            bases=_mutate(rng, bases, m, k),
        )
        sequences.extend([ref, test])
        records.append(
            HiRecord(reference_name=ref.name, test_name=test.name, titer=TITER_BY_LEVEL[level])
        )
    return sequences, records


def make_hamming_corpus(
    n_pairs: int = 500,
    length: int = 60,
    k: int = 3,
    seed: int = 0,
    test_fraction: float = 0.2,
) -> list[PairExample]:
    """Deduplicated pair examples from make_strain_corpus via the real pipeline:
    label derivation, template alignment, segmentation, and dedup."""
    sequences, records = make_strain_corpus(n_pairs, length, k, seed, test_fraction)
    pairs = build_dataset(records, sequences)
    offsets = align_sequences(sequences)
    segmented = {s.name: segment(s, k) for s in sequences}
    examples = []
    for pair in pairs:
        r_d, t_d = deduplicate_pair(
            segmented[pair.reference.name], segmented[pair.test.name], offsets
        )
        examples.append(
            PairExample(
                reference_tokens=r_d.tokens,
                test_tokens=t_d.tokens,
                binary_label=pair.binary_label,
                level_label=pair.level_label,
                split=pair.split,
            )
        )
    return examples


def split_examples(examples: list[PairExample]) -> tuple[list[PairExample], list[PairExample]]:
    train = [ex for ex in examples if ex.split == "train"]
    test = [ex for ex in examples if ex.split == "test"]
    return train, test
