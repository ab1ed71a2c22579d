import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpcipi import synthetic
from dpcipi.embed import random_table
from dpcipi.seqio import format_fasta


@pytest.fixture(scope="session")
def small_corpus():
    """200 synthetic pairs preprocessed through the real pipeline (k=3)."""
    examples = synthetic.make_hamming_corpus(n_pairs=200, length=60, k=3, seed=13)
    return synthetic.split_examples(examples)


@pytest.fixture(scope="session")
def small_table():
    return random_table(k=3, dim=16, seed=7)


def write_corpus_files(directory: Path, n_pairs: int = 40, seed: int = 3):
    """Materialize a synthetic strain corpus as FASTA + HI CSV inputs."""
    sequences, records = synthetic.make_strain_corpus(
        n_pairs=n_pairs, length=60, k=3, seed=seed
    )
    fasta = directory / "strains.fasta"
    fasta.write_text(format_fasta(sequences), encoding="utf-8")
    lines = ["reference_name,test_name,hi_titer"]
    for rec in records:
        lines.append(f"{rec.reference_name},{rec.test_name},{rec.titer:g}")
    csv_path = directory / "hi.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return fasta, csv_path


@pytest.fixture()
def corpus_files(tmp_path):
    return write_corpus_files(tmp_path)
