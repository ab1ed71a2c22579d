"""Strain sequence and HI-titer ingestion: FASTA, titer CSV, labels, temporal split."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable

from .errors import InputError

ALPHABET = frozenset("ACGTN")

BINARY_THRESHOLD = 40.0
LEVEL_EDGES = (40.0, 100.0, 1000.0)
TITER_MAX = 10240.0
SPLIT_YEAR = 1995

HI_COLUMNS = ("reference_name", "test_name", "hi_titer")


@dataclass(frozen=True)
class NucleotideSequence:
    """A named strain's functional gene sequence, bases uppercased over A/C/G/T/N."""

    name: str
    accession: str
    bases: str


@dataclass(frozen=True)
class HiRecord:
    reference_name: str
    test_name: str
    titer: float


@dataclass(frozen=True)
class VirusPair:
    reference: NucleotideSequence
    test: NucleotideSequence
    titer: float
    binary_label: int
    level_label: int
    split: str


def parse_fasta(text: str) -> list[NucleotideSequence]:
    """Parse FASTA text with ``>name|accession`` headers.

    Multi-line bodies are joined and uppercased. Raises InputError (with the
    offending line number) on malformed headers, empty bodies, characters
    outside the alphabet, or duplicate strain names.
    """
    records: list[NucleotideSequence] = []
    seen: set[str] = set()
    name = accession = None
    header_line = 0
    chunks: list[str] = []

    def flush() -> None:
        if name is None:
            return
        bases = "".join(chunks).upper()
        if not bases:
            raise InputError(f"line {header_line}: empty sequence body for '{name}'")
        for ch in bases:
            if ch not in ALPHABET:
                raise InputError(
                    f"line {header_line}: sequence '{name}' contains invalid base {ch!r}"
                )
        if name in seen:
            raise InputError(f"line {header_line}: duplicate strain name '{name}'")
        seen.add(name)
        records.append(NucleotideSequence(name=name, accession=accession, bases=bases))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            parts = line[1:].split("|")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise InputError(
                    f"line {lineno}: malformed FASTA header {line!r}, expected '>name|accession'"
                )
            name, accession = parts[0].strip(), parts[1].strip()
            header_line = lineno
            chunks = []
        else:
            if name is None:
                raise InputError(f"line {lineno}: sequence data before any FASTA header")
            chunks.append(line)
    flush()
    return records


def format_fasta(records: Iterable[NucleotideSequence], width: int = 70) -> str:
    """Serialize records back to FASTA; inverse of parse_fasta."""
    out = []
    for rec in records:
        out.append(f">{rec.name}|{rec.accession}")
        for i in range(0, len(rec.bases), width):
            out.append(rec.bases[i : i + width])
    return "\n".join(out) + "\n"


def parse_hi_table(text: str) -> tuple[list[HiRecord], int]:
    """Parse the HI-titer CSV; returns (records, skipped_row_count).

    Rows with an empty titer cell are skipped and counted. Non-numeric,
    non-positive, or out-of-range titers are row errors.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("HI table is empty") from None
    header = [h.strip() for h in header]
    col: dict[str, int] = {}
    for name in HI_COLUMNS:
        if name not in header:
            raise InputError(f"HI table missing column '{name}'")
        col[name] = header.index(name)

    records: list[HiRecord] = []
    skipped = 0
    for row_idx, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(col.values()):
            raise InputError(f"HI table row {row_idx}: expected {len(header)} columns")
        ref = row[col["reference_name"]].strip()
        test = row[col["test_name"]].strip()
        titer_text = row[col["hi_titer"]].strip()
        if not titer_text:
            skipped += 1
            continue
        if not ref or not test:
            raise InputError(f"HI table row {row_idx}: empty strain name")
        try:
            titer = float(titer_text)
        except ValueError:
            raise InputError(
                f"HI table row {row_idx}: non-numeric titer {titer_text!r}"
            ) from None
        if titer <= 0:
            raise InputError(f"HI table row {row_idx}: titer must be positive, got {titer}")
        if titer > TITER_MAX:
            raise InputError(
                f"HI table row {row_idx}: titer {titer} above maximum {TITER_MAX:g}"
            )
        records.append(HiRecord(reference_name=ref, test_name=test, titer=titer))
    return records, skipped


def strain_year(name: str) -> int:
    """Year from the final '/'-delimited field of a strain name.

    Two-digit fields map to the 1900s; the corpus this tool targets ends
    before 2000, so legacy two-digit years are unambiguous.
    """
    field = name.rsplit("/", 1)[-1].strip()
    if field.isdigit() and len(field) == 4:
        return int(field)
    if field.isdigit() and len(field) == 2:
        return 1900 + int(field)
    raise InputError(f"cannot extract a year from strain name '{name}'")


def binary_label(titer: float) -> int:
    return 1 if titer >= BINARY_THRESHOLD else 0


def level_label(titer: float) -> int:
    for level, edge in enumerate(LEVEL_EDGES):
        if titer < edge:
            return level
    return len(LEVEL_EDGES)


def build_dataset(
    records: Iterable[HiRecord], sequences: Iterable[NucleotideSequence]
) -> list[VirusPair]:
    """Join HI records to sequences, assign labels and the temporal split.

    A pair lands in the test split iff either strain's year is >= SPLIT_YEAR,
    so no post-threshold strain ever appears in a training pair. Input order
    is preserved.
    """
    by_name = {s.name: s for s in sequences}
    records = list(records)
    missing = sorted(
        {r.reference_name for r in records if r.reference_name not in by_name}
        | {r.test_name for r in records if r.test_name not in by_name}
    )
    if missing:
        raise InputError("unknown strain name(s): " + ", ".join(missing))

    pairs = []
    for rec in records:
        ref = by_name[rec.reference_name]
        test = by_name[rec.test_name]
        year = max(strain_year(ref.name), strain_year(test.name))
        pairs.append(
            VirusPair(
                reference=ref,
                test=test,
                titer=rec.titer,
                binary_label=binary_label(rec.titer),
                level_label=level_label(rec.titer),
                split="test" if year >= SPLIT_YEAR else "train",
            )
        )
    return pairs


def pair_to_dict(pair: VirusPair) -> dict:
    return {
        "reference": {
            "name": pair.reference.name,
            "accession": pair.reference.accession,
            "bases": pair.reference.bases,
        },
        "test": {
            "name": pair.test.name,
            "accession": pair.test.accession,
            "bases": pair.test.bases,
        },
        "titer": pair.titer,
        "binary_label": pair.binary_label,
        "level_label": pair.level_label,
        "split": pair.split,
    }


def write_dataset_jsonl(path, pairs: Iterable[VirusPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_to_dict(pair)) + "\n")
