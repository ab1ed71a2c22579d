import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpcipi.align import OffsetMap, align_sequences, aligned_distance, common_sites_length, similarity
from dpcipi.errors import InputError
from dpcipi.seqio import NucleotideSequence

from oracles import brute_force_offsets


def _seq(name, bases):
    return NucleotideSequence(name=name, accession="x", bases=bases)


def test_common_sites_identity():
    assert common_sites_length("ACGT", "ACGT") == 4


def test_common_sites_one_mismatch():
    assert common_sites_length("ACGT", "AGGT") == 3


def test_common_sites_empty_operand():
    assert common_sites_length("AC", "") == 0


def test_align_offset_found_by_scan():
    result = align_sequences([_seq("t", "ACGTACGT"), _seq("s", "GTAC")])
    assert result.template_name == "t"
    assert result.offsets["s"] == 2
    assert result.offsets["t"] == 0


def test_align_template_offset_zero():
    result = align_sequences([_seq("only", "ACGT")])
    assert result.offsets["only"] == 0


def test_align_tie_keeps_largest_offset():
    result = align_sequences([_seq("t", "AAAAAA"), _seq("s", "AAAA")])
    assert result.offsets["s"] == 2


def test_align_empty_collection_rejected():
    with pytest.raises(InputError):
        align_sequences([])


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_align_matches_brute_force(data):
    bases = st.text(alphabet="ACGT", min_size=1, max_size=64)
    a = data.draw(bases)
    b = data.draw(bases)
    seqs = [_seq("a", a), _seq("b", b)]
    result = align_sequences(seqs)
    template_name, expected = brute_force_offsets([("a", a), ("b", b)])
    assert result.template_name == template_name
    assert result.offsets == expected


def test_offset_optimality_on_random_sequences():
    rng = np.random.default_rng(123)
    for _ in range(40):
        n = int(rng.integers(1, 65))
        seqs = [
            _seq(f"s{i}", "".join("ACGT"[j] for j in rng.integers(0, 4, size=max(1, n - i))))
            for i in range(4)
        ]
        result = align_sequences(seqs)
        template = max(seqs, key=lambda s: len(s.bases)).bases
        for s in seqs:
            best = result.offsets[s.name]
            chosen = common_sites_length(s.bases, template[best:])
            for i in range(len(template) - len(s.bases) + 1):
                assert common_sites_length(s.bases, template[i:]) <= chosen


def test_distance_identical_zero():
    offsets = OffsetMap("a", {"a": 0, "b": 0})
    a = _seq("a", "ACGT")
    b = _seq("b", "ACGT")
    assert aligned_distance(a, b, offsets) == 0
    assert similarity(a, b, offsets) == 0.0


def test_distance_one_overlap_mismatch():
    offsets = OffsetMap("a", {"a": 0, "b": 0})
    a = _seq("a", "AAAA")
    b = _seq("b", "AAAT")
    assert aligned_distance(a, b, offsets) == 1
    assert similarity(a, b, offsets) == pytest.approx(0.25)


def test_distance_counts_overhang():
    offsets = OffsetMap("b", {"a": 0, "b": 0})
    a = _seq("a", "AAAA")
    b = _seq("b", "AAAAAA")
    assert aligned_distance(a, b, offsets) == 2
    assert similarity(a, b, offsets) == pytest.approx(0.4)
    assert aligned_distance(a, b, offsets, count_overhang=False) == 0


def test_distance_unknown_strain():
    offsets = OffsetMap("a", {"a": 0})
    with pytest.raises(InputError, match="nowhere"):
        aligned_distance(_seq("a", "ACGT"), _seq("nowhere", "ACGT"), offsets)


def test_distance_symmetry_and_bound():
    rng = np.random.default_rng(7)
    for _ in range(30):
        seqs = [
            _seq(f"s{i}", "".join("ACGT"[j] for j in rng.integers(0, 4, size=rng.integers(1, 50))))
            for i in range(2)
        ]
        offsets = align_sequences(seqs)
        d_ab = aligned_distance(seqs[0], seqs[1], offsets)
        d_ba = aligned_distance(seqs[1], seqs[0], offsets)
        assert d_ab == d_ba
        sim = similarity(seqs[0], seqs[1], offsets)
        assert similarity(seqs[1], seqs[0], offsets) == sim
        assert 0.0 <= sim <= 2.0


def test_offset_map_json_round_trip():
    offsets = OffsetMap("t", {"t": 0, "s": 3})
    assert OffsetMap.from_json(offsets.to_json()) == offsets
