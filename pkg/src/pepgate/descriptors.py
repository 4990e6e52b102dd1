"""Per-amino-acid positional descriptors.

Each sequence maps to at most 20 points in 3D descriptor space, one per
amino acid present. For amino acid k at 0-indexed offsets t_1..t_n in a
sequence of length L:

    n  = occurrence count
    mu = (sum t_j) / n
    d2 = sum (t_j - mu)^2 / (n * L)

The d2 normalization (divide by n * L, not n alone) is a convention of this
package and is recorded in gate-file metadata so downstream consumers can
tell which convention a gate was built under.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sequences import AA_INDEX, AMINO_ACIDS, ProteinSequence

NORMALIZATION = "d2 = sum((t - mu)^2) / (n * L), offsets 0-indexed from first residue"


@dataclass(frozen=True)
class DescriptorPoint:
    n: int
    mu: float
    d2: float


@dataclass(frozen=True)
class DescriptorSet:
    """Descriptor points for one sequence, keyed by amino acid code."""

    points: dict[str, DescriptorPoint]
    length: int

    def as_tuples(self) -> list[tuple[str, int, float, float]]:
        """Rows (amino_acid, n, mu, d2) in canonical alphabet order."""
        return [
            (aa, p.n, p.mu, p.d2)
            for aa in AMINO_ACIDS
            if (p := self.points.get(aa)) is not None
        ]


def compute_descriptors(seq: ProteinSequence) -> DescriptorSet:
    """Compute the descriptor triple for every amino acid present in seq.

    Accumulates integer moment sums and divides once, so results are exact
    up to a single rounding per coordinate.
    """
    length = len(seq)
    count = [0] * 20
    s1 = [0] * 20
    s2 = [0] * 20
    for t, ch in enumerate(seq.residues):
        i = AA_INDEX[ch]
        count[i] += 1
        s1[i] += t
        s2[i] += t * t
    points: dict[str, DescriptorPoint] = {}
    for i, aa in enumerate(AMINO_ACIDS):
        n = count[i]
        if n == 0:
            continue
        mu = s1[i] / n
        # n*s2 - s1^2 = n * sum((t - mu)^2), exact in integers
        d2 = (n * s2[i] - s1[i] * s1[i]) / (n * n * length)
        points[aa] = DescriptorPoint(n=n, mu=mu, d2=d2)
    return DescriptorSet(points=points, length=length)


def descriptors_to_csv(rows: list[tuple[str, DescriptorSet]]) -> str:
    """Render (sequence_id, DescriptorSet) pairs as CSV for external plotting."""
    lines = ["sequence_id,amino_acid,n,mu,d2"]
    for seq_id, ds in rows:
        for aa, n, mu, d2 in ds.as_tuples():
            lines.append(f"{seq_id},{aa},{n},{mu!r},{d2!r}")
    return "\n".join(lines) + "\n"
