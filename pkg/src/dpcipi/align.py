"""Template alignment by sliding offset, and the alignment-based distance."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .errors import InputError
from .seqio import NucleotideSequence


@dataclass(frozen=True)
class OffsetMap:
    """Start offsets of each strain on the template's coordinate system."""

    template_name: str
    offsets: dict[str, int]

    def offset(self, name: str) -> int:
        try:
            return self.offsets[name]
        except KeyError:
            raise InputError(f"strain '{name}' not present in the offset map") from None

    def to_json(self) -> str:
        return json.dumps(
            {"template": self.template_name, "offsets": self.offsets}, sort_keys=True
        )

    @classmethod
    def from_json(cls, text: str) -> "OffsetMap":
        data = json.loads(text)
        return cls(template_name=data["template"], offsets=dict(data["offsets"]))


def common_sites_length(a: str, b: str) -> int:
    """Number of positions where the two strings agree, up to the shorter length."""
    return sum(x == y for x, y in zip(a, b))


def align_sequences(seqs: Iterable[NucleotideSequence]) -> OffsetMap:
    """Compute each strain's start offset against the longest sequence.

    The template is the longest sequence (first wins on ties). A strain's
    offset is the shift i in [0, len(template) - len(strain)] maximizing the
    common-sites count against template[i:]; equal scores keep the largest i.
    """
    seqs = list(seqs)
    if not seqs:
        raise InputError("cannot align an empty sequence collection")
    template = max(seqs, key=lambda s: len(s.bases))
    t = template.bases
    offsets: dict[str, int] = {}
    for s in seqs:
        p = len(t) - len(s.bases)
        best_score = -1
        best_i = 0
        for i in range(p + 1):
            score = common_sites_length(s.bases, t[i:])
            if best_score <= score:
                best_score = score
                best_i = i
        offsets[s.name] = best_i
    return OffsetMap(template_name=template.name, offsets=offsets)


def aligned_distance(
    r: NucleotideSequence,
    t: NucleotideSequence,
    offsets: OffsetMap,
    count_overhang: bool = True,
) -> int:
    """Mismatches in the overlap of the two placed strains, plus overhang.

    Both strains are placed at their template offsets. The overhang term
    (positions covered by exactly one strain) is on by default so that length
    differences contribute to the normalized similarity; pass
    count_overhang=False for plain overlap Hamming distance.
    """
    o_r = offsets.offset(r.name)
    o_t = offsets.offset(t.name)
    start = max(o_r, o_t)
    end = min(o_r + len(r.bases), o_t + len(t.bases))
    overlap = max(0, end - start)
    mismatches = 0
    if overlap:
        a = r.bases[start - o_r : start - o_r + overlap]
        b = t.bases[start - o_t : start - o_t + overlap]
        mismatches = sum(x != y for x, y in zip(a, b))
    if not count_overhang:
        return mismatches
    single = (len(r.bases) - overlap) + (len(t.bases) - overlap)
    return mismatches + single


def similarity(
    r: NucleotideSequence,
    t: NucleotideSequence,
    offsets: OffsetMap,
    count_overhang: bool = True,
) -> float:
    """Distance normalized by mean length. Larger values mean more different."""
    length = len(r.bases) + len(t.bases)
    if length == 0:
        raise InputError("similarity undefined for two empty sequences")
    return aligned_distance(r, t, offsets, count_overhang) / (length / 2)
