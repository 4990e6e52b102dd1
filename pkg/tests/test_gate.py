"""Gate construction, checking, batch path, and the gate file format."""

import random

import numpy as np
import pytest

from pepgate.descriptors import compute_descriptors
from pepgate.errors import (
    ChecksumMismatch,
    DegenerateInput,
    FormatVersionMismatch,
    InsufficientPoints,
)
from pepgate.gate import (
    GATE_MAGIC,
    GATE_VERSION,
    HullGate,
    ValidityVerdict,
    build_gate,
    collect_descriptor_points,
    gate_check,
    gate_check_batch,
    load_gate,
    save_gate,
)
from pepgate.hull import contains
from pepgate.sequences import AMINO_ACIDS, ProteinSequence
from pepgate import storage

from conftest import make_corpus, make_sequence


@pytest.fixture(scope="module")
def gate(reference_corpus):
    return build_gate(reference_corpus, provenance="test corpus seed=90125")


def test_gate_shape(gate, reference_corpus):
    assert set(gate.hulls) == set(AMINO_ACIDS)
    for aa in AMINO_ACIDS:
        assert gate.point_counts[aa] <= len(reference_corpus)
        assert len(gate.hulls[aa].vertices) >= 4
    assert gate.provenance == "test corpus seed=90125"
    assert gate.tolerance == 1e-9


def test_every_training_sequence_passes_its_own_gate(gate, reference_corpus):
    for seq in reference_corpus:
        verdict = gate_check(gate, seq)
        assert verdict.valid, verdict.failed_amino_acids


def test_tiny_corpus_insufficient_points():
    corpus = [ProteinSequence("ACD"), ProteinSequence("GHK"), ProteinSequence("LMN")]
    with pytest.raises(InsufficientPoints) as exc:
        build_gate(corpus)
    assert exc.value.count < 4


def test_degenerate_amino_acid_coincident():
    # W always exactly once at offset 0: one distinct point
    rng = random.Random(7)
    body = lambda: "".join(rng.choice("ACDEFGHIKLMNPQRSTVY") for _ in range(40))
    corpus = [ProteinSequence("W" + body()) for _ in range(60)]
    with pytest.raises(DegenerateInput) as exc:
        build_gate(corpus)
    assert exc.value.rank == 0
    assert "W" in str(exc.value)


def test_degenerate_amino_acid_collinear():
    # W once per sequence, varying offset: points (1, mu, 0) on a line
    rng = random.Random(8)
    corpus = []
    for _ in range(60):
        off = rng.randint(0, 20)
        rest = "".join(rng.choice("ACDEFGHIKLMNPQRSTVY") for _ in range(40))
        corpus.append(ProteinSequence(rest[:off] + "W" + rest[off:]))
    with pytest.raises(DegenerateInput) as exc:
        build_gate(corpus)
    assert exc.value.rank == 1


def test_degenerate_amino_acid_coplanar():
    # W exactly twice per sequence at fixed length: points (2, mu, d2) plane
    rng = random.Random(9)
    corpus = []
    for _ in range(80):
        chars = [rng.choice("ACDEFGHIKLMNPQRSTVY") for _ in range(40)]
        i, j = rng.sample(range(40), 2)
        chars[i] = chars[j] = "W"
        corpus.append(ProteinSequence("".join(chars)))
    with pytest.raises(DegenerateInput) as exc:
        build_gate(corpus)
    assert exc.value.rank == 2


def test_verdict_consistency():
    with pytest.raises(ValueError):
        ValidityVerdict(valid=True, failed_amino_acids=("A",), skipped_amino_acids=())


def test_gate_check_skips_absent_amino_acids(gate):
    verdict = gate_check(gate, ProteinSequence("AAACCC"))
    assert set(verdict.skipped_amino_acids) == set(AMINO_ACIDS) - {"A", "C"}
    assert list(verdict.skipped_amino_acids) == sorted(verdict.skipped_amino_acids)


def test_gate_check_matches_manual_containment(gate):
    rng = random.Random(31337)
    seqs = [make_sequence(rng, 5, 90) for _ in range(60)]
    seqs.append(ProteinSequence("K" * 30))
    for seq in seqs:
        verdict = gate_check(gate, seq)
        expected_failed = []
        for aa, p in sorted(compute_descriptors(seq).points.items()):
            inside = contains(
                gate.hulls[aa], (p.n, p.mu, p.d2), gate.absolute_tolerance(aa)
            )
            if not inside:
                expected_failed.append(aa)
        assert list(verdict.failed_amino_acids) == expected_failed
        assert verdict.valid == (not expected_failed)


def test_batch_matches_single(gate, reference_corpus):
    rng = random.Random(4242)
    seqs = reference_corpus[:30] + [make_sequence(rng, 3, 120) for _ in range(120)]
    batch = gate_check_batch(gate, seqs)
    for seq, got in zip(seqs, batch):
        assert got == gate_check(gate, seq)


def test_batch_empty(gate):
    assert gate_check_batch(gate, []) == []


def test_hull_vertices_count_as_inside(gate, reference_corpus):
    # a corpus point that is a hull vertex sits on the boundary
    points = collect_descriptor_points(reference_corpus)
    aa = "A"
    hull = gate.hulls[aa]
    vertex = hull.vertices[0]
    assert contains(hull, vertex, gate.absolute_tolerance(aa))
    assert any(np.allclose(vertex, p) for p in points[aa])


def test_build_gate_deterministic_and_order_independent(reference_corpus):
    g1 = build_gate(reference_corpus, threads=1)
    shuffled = list(reference_corpus)
    random.Random(5).shuffle(shuffled)
    g2 = build_gate(shuffled, threads=4)
    for aa in AMINO_ACIDS:
        assert g1.hulls[aa] == g2.hulls[aa]


def test_gate_requires_all_20_hulls(gate):
    partial = dict(gate.hulls)
    del partial["A"]
    with pytest.raises(ValueError):
        HullGate(
            hulls=partial,
            provenance="",
            tolerance=1e-9,
            point_counts=gate.point_counts,
        )


# -- persistence -------------------------------------------------------------


def test_gate_round_trip(gate, tmp_path):
    path = tmp_path / "gate.pgh"
    save_gate(gate, path)
    loaded = load_gate(path)
    assert loaded == gate
    for aa in AMINO_ACIDS:
        assert loaded.hulls[aa].vertices.tobytes() == gate.hulls[aa].vertices.tobytes()
        assert loaded.hulls[aa].offsets.tobytes() == gate.hulls[aa].offsets.tobytes()
    # and the file itself is byte-stable across saves
    path2 = tmp_path / "gate2.pgh"
    save_gate(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_truncated_gate_file(gate, tmp_path):
    path = tmp_path / "gate.pgh"
    save_gate(gate, path)
    data = path.read_bytes()
    for cut in (10, len(data) // 2, len(data) - 1):
        path.write_bytes(data[:cut])
        with pytest.raises(ChecksumMismatch):
            load_gate(path)


def test_corrupted_gate_file(gate, tmp_path):
    path = tmp_path / "gate.pgh"
    save_gate(gate, path)
    data = bytearray(path.read_bytes())
    data[len(data) // 3] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumMismatch):
        load_gate(path)


def test_version_mismatch(gate, tmp_path):
    path = tmp_path / "gate.pgh"
    meta, sections = {"provenance": "", "tolerance": 1e-9, "point_counts": {}}, []
    storage.write_file(path, GATE_MAGIC, 999, meta, sections)
    with pytest.raises(FormatVersionMismatch):
        load_gate(path)
    assert GATE_VERSION == 1


def test_wrong_magic(gate, tmp_path):
    path = tmp_path / "gate.pgh"
    storage.write_file(path, b"XXXX", GATE_VERSION, {}, [])
    with pytest.raises(FormatVersionMismatch):
        load_gate(path)
