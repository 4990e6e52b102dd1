"""Descriptor triple computation: hand examples, invariants, bounds."""

import random

from pepgate.descriptors import compute_descriptors, descriptors_to_csv
from pepgate.sequences import AMINO_ACIDS, ProteinSequence


def random_sequence(rng, max_len=120):
    n = rng.randint(1, max_len)
    return ProteinSequence("".join(rng.choice(AMINO_ACIDS) for _ in range(n)))


def test_homopolymer_triple():
    ds = compute_descriptors(ProteinSequence("AAA"))
    p = ds.points["A"]
    assert p.n == 3
    assert p.mu == 1.0
    assert abs(p.d2 - 2 / 9) < 1e-15
    assert set(ds.points) == {"A"}


def test_two_amino_acids():
    ds = compute_descriptors(ProteinSequence("ACA"))
    a, c = ds.points["A"], ds.points["C"]
    assert (a.n, a.mu) == (2, 1.0)
    assert abs(a.d2 - 1 / 3) < 1e-15
    assert (c.n, c.mu, c.d2) == (1, 1.0, 0.0)


def test_single_residue():
    ds = compute_descriptors(ProteinSequence("M"))
    assert ds.points["M"] == type(ds.points["M"])(n=1, mu=0.0, d2=0.0)
    assert ds.length == 1


def naive_descriptors(residues):
    """Direct-from-definition reference: positions list per amino acid."""
    length = len(residues)
    out = {}
    for aa in set(residues):
        offs = [t for t, ch in enumerate(residues) if ch == aa]
        n = len(offs)
        mu = sum(offs) / n
        d2 = sum((t - mu) ** 2 for t in offs) / (n * length)
        out[aa] = (n, mu, d2)
    return out


def test_matches_naive_reference_on_random_sequences():
    rng = random.Random(401)
    for _ in range(200):
        seq = random_sequence(rng)
        ds = compute_descriptors(seq)
        ref = naive_descriptors(seq.residues)
        assert set(ds.points) == set(ref)
        for aa, (n, mu, d2) in ref.items():
            p = ds.points[aa]
            assert p.n == n
            assert abs(p.mu - mu) < 1e-12
            assert abs(p.d2 - d2) < 1e-12


def test_count_conservation_and_bounds():
    rng = random.Random(402)
    for _ in range(300):
        seq = random_sequence(rng)
        length = len(seq)
        ds = compute_descriptors(seq)
        assert sum(p.n for p in ds.points.values()) == length
        for p in ds.points.values():
            assert p.n >= 1
            assert 0.0 <= p.mu <= length - 1
            assert 0.0 <= p.d2 <= (length - 1) ** 2 / length + 1e-12
            assert p.d2 <= length


def test_d2_worst_case_two_extremes():
    # occurrences at both ends of the sequence maximize spread
    seq = ProteinSequence("A" + "C" * 8 + "A")
    p = compute_descriptors(seq).points["A"]
    assert p.n == 2
    assert p.mu == 4.5
    assert abs(p.d2 - (2 * 4.5**2) / (2 * 10)) < 1e-15


def test_csv_export_shape():
    seq = ProteinSequence("ACA")
    text = descriptors_to_csv([("s1", compute_descriptors(seq))])
    lines = text.strip().splitlines()
    assert lines[0] == "sequence_id,amino_acid,n,mu,d2"
    assert lines[1].startswith("s1,A,2,1.0,")
    assert lines[2].startswith("s1,C,1,1.0,0.0")
    assert len(lines) == 3
