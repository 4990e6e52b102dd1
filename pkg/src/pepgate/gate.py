"""The 20-hull validity gate: construction, checking, persistence.

A gate holds one descriptor-space convex hull per amino acid, built from a
reference corpus. A sequence is a valid protein iff, for every amino acid
it contains, its descriptor point lies inside that amino acid's hull.
Amino acids absent from the sequence cannot be tested and are recorded as
skipped (vacuously satisfied).
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .descriptors import NORMALIZATION, compute_descriptors
from .errors import DegenerateInput, InsufficientPoints
from .hull import ConvexHull3, build_hull, contains
from .sequences import AA_INDEX, AMINO_ACIDS, ProteinSequence
from . import storage

GATE_MAGIC = b"PGHG"
GATE_VERSION = 1

DEFAULT_TOLERANCE = 1e-9


def thread_count() -> int:
    """Worker cap: PEPGATE_THREADS if set, else the machine's cores."""
    raw = os.environ.get("PEPGATE_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ValidityVerdict:
    valid: bool
    failed_amino_acids: tuple[str, ...]
    skipped_amino_acids: tuple[str, ...]

    def __post_init__(self):
        if self.valid != (len(self.failed_amino_acids) == 0):
            raise ValueError("valid flag inconsistent with failure list")


@dataclass(frozen=True, eq=False)
class HullGate:
    """Exactly 20 hulls keyed by amino acid, plus build provenance."""

    hulls: dict[str, ConvexHull3]
    provenance: str
    tolerance: float
    point_counts: dict[str, int]

    def __post_init__(self):
        if set(self.hulls) != set(AMINO_ACIDS):
            missing = sorted(set(AMINO_ACIDS) - set(self.hulls))
            extra = sorted(set(self.hulls) - set(AMINO_ACIDS))
            raise ValueError(f"gate needs all 20 hulls (missing {missing}, extra {extra})")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")

    def __eq__(self, other):
        if not isinstance(other, HullGate):
            return NotImplemented
        return (
            self.provenance == other.provenance
            and self.tolerance == other.tolerance
            and self.point_counts == other.point_counts
            and all(self.hulls[aa] == other.hulls[aa] for aa in AMINO_ACIDS)
        )

    def absolute_tolerance(self, aa: str) -> float:
        """Containment slack for one hull: relative tolerance scaled by the
        hull's largest plane offset magnitude."""
        hull = self.hulls[aa]
        return self.tolerance * (1.0 + float(np.abs(hull.offsets).max()))


def collect_descriptor_points(corpus: list[ProteinSequence]) -> dict[str, np.ndarray]:
    """Per-amino-acid (m, 3) arrays of (n, mu, d2) across the corpus."""
    buckets: dict[str, list[tuple[int, float, float]]] = {aa: [] for aa in AMINO_ACIDS}
    for seq in corpus:
        for aa, point in compute_descriptors(seq).points.items():
            buckets[aa].append((point.n, point.mu, point.d2))
    return {
        aa: np.array(rows, dtype=np.float64).reshape(-1, 3)
        for aa, rows in buckets.items()
    }


def build_gate(
    corpus: list[ProteinSequence],
    tolerance: float = DEFAULT_TOLERANCE,
    provenance: str = "",
    threads: int | None = None,
) -> HullGate:
    """Build the 20-hull gate from a reference corpus.

    Raises InsufficientPoints for an amino acid with fewer than 4 points
    and DegenerateInput when an amino acid's points span fewer than 3
    dimensions; both make the gate unusable, so they are fatal.
    """
    points = collect_descriptor_points(corpus)
    for aa in AMINO_ACIDS:
        if len(points[aa]) < 4:
            raise InsufficientPoints(aa, len(points[aa]))

    def build_one(aa: str) -> ConvexHull3:
        try:
            return build_hull(points[aa])
        except DegenerateInput as exc:
            raise DegenerateInput(
                exc.rank, f"descriptor points for amino acid {aa}"
            ) from exc

    workers = threads if threads is not None else thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hulls = dict(zip(AMINO_ACIDS, pool.map(build_one, AMINO_ACIDS)))
    else:
        hulls = {aa: build_one(aa) for aa in AMINO_ACIDS}
    return HullGate(
        hulls=hulls,
        provenance=provenance,
        tolerance=tolerance,
        point_counts={aa: int(len(points[aa])) for aa in AMINO_ACIDS},
    )


def gate_check(gate: HullGate, seq: ProteinSequence) -> ValidityVerdict:
    """Test one sequence against every hull for an amino acid it contains."""
    descriptor = compute_descriptors(seq)
    failed = []
    skipped = []
    for aa in AMINO_ACIDS:
        point = descriptor.points.get(aa)
        if point is None:
            skipped.append(aa)
            continue
        inside = contains(
            gate.hulls[aa],
            (point.n, point.mu, point.d2),
            gate.absolute_tolerance(aa),
        )
        if not inside:
            failed.append(aa)
    return ValidityVerdict(
        valid=not failed,
        failed_amino_acids=tuple(failed),
        skipped_amino_acids=tuple(skipped),
    )


_CODE_TABLE = np.full(128, -1, dtype=np.int64)
for _aa, _i in AA_INDEX.items():
    _CODE_TABLE[ord(_aa)] = _i


def gate_check_batch(gate: HullGate, seqs: list[ProteinSequence]) -> list[ValidityVerdict]:
    """Vectorized gate_check over a batch; same verdicts, one matmul per
    amino acid instead of one contains() call per (sequence, amino acid)."""
    if not seqs:
        return []
    n_seqs = len(seqs)
    codes = [
        _CODE_TABLE[np.frombuffer(s.residues.encode(), dtype=np.uint8)] for s in seqs
    ]
    lengths = np.array([len(c) for c in codes], dtype=np.float64)
    flat = np.concatenate(codes)
    seq_of = np.repeat(np.arange(n_seqs), [len(c) for c in codes])
    offsets = np.concatenate([np.arange(len(c), dtype=np.float64) for c in codes])

    key = seq_of * 20 + flat
    size = n_seqs * 20
    count = np.bincount(key, minlength=size).reshape(n_seqs, 20)
    s1 = np.bincount(key, weights=offsets, minlength=size).reshape(n_seqs, 20)
    s2 = np.bincount(key, weights=offsets * offsets, minlength=size).reshape(n_seqs, 20)

    # integer-valued float64 sums are exact for the lengths gated here, so
    # these match compute_descriptors bit for bit
    failures = [[] for _ in range(n_seqs)]
    present = count > 0
    for j, aa in enumerate(AMINO_ACIDS):
        rows = np.nonzero(present[:, j])[0]
        if len(rows) == 0:
            continue
        n = count[rows, j]
        mu = s1[rows, j] / n
        d2 = (n * s2[rows, j] - s1[rows, j] ** 2) / (n * n * lengths[rows])
        pts = np.column_stack([n.astype(np.float64), mu, d2])
        hull = gate.hulls[aa]
        tol = gate.absolute_tolerance(aa)
        ok = (pts @ hull.normals.T - hull.offsets <= tol).all(axis=1)
        for r in rows[~ok]:
            failures[r].append(aa)

    verdicts = []
    for i in range(n_seqs):
        skipped = tuple(aa for j, aa in enumerate(AMINO_ACIDS) if not present[i, j])
        verdicts.append(
            ValidityVerdict(
                valid=not failures[i],
                failed_amino_acids=tuple(failures[i]),
                skipped_amino_acids=skipped,
            )
        )
    return verdicts


def _hull_to_bytes(hull: ConvexHull3) -> bytes:
    head = struct.pack("<II", len(hull.vertices), len(hull.facet_indices))
    return b"".join(
        [
            head,
            np.ascontiguousarray(hull.vertices, dtype="<f8").tobytes(),
            np.ascontiguousarray(hull.facet_indices, dtype="<u4").tobytes(),
            np.ascontiguousarray(hull.normals, dtype="<f8").tobytes(),
            np.ascontiguousarray(hull.offsets, dtype="<f8").tobytes(),
        ]
    )


def _hull_from_bytes(data: bytes) -> ConvexHull3:
    n_verts, n_facets = struct.unpack_from("<II", data, 0)
    pos = 8

    def take(count, dtype, shape):
        nonlocal pos
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos).reshape(shape)
        pos += arr.nbytes
        return arr.astype(arr.dtype.newbyteorder("="))

    vertices = take(n_verts * 3, "<f8", (n_verts, 3))
    facets = take(n_facets * 3, "<u4", (n_facets, 3))
    normals = take(n_facets * 3, "<f8", (n_facets, 3))
    offs = take(n_facets, "<f8", (n_facets,))
    bbox = np.vstack([vertices.min(axis=0), vertices.max(axis=0)])
    return ConvexHull3(
        vertices=vertices,
        facet_indices=facets,
        normals=normals,
        offsets=offs,
        bbox=bbox,
    )


def save_gate(gate: HullGate, path) -> None:
    meta = {
        "provenance": gate.provenance,
        "tolerance": gate.tolerance,
        "normalization": NORMALIZATION,
        "point_counts": gate.point_counts,
    }
    sections = [(aa, _hull_to_bytes(gate.hulls[aa])) for aa in AMINO_ACIDS]
    storage.write_file(path, GATE_MAGIC, GATE_VERSION, meta, sections)


def load_gate(path) -> HullGate:
    meta, sections = storage.read_file(path, GATE_MAGIC, GATE_VERSION)
    hulls = {name: _hull_from_bytes(data) for name, data in sections}
    return HullGate(
        hulls=hulls,
        provenance=meta["provenance"],
        tolerance=meta["tolerance"],
        point_counts={k: int(v) for k, v in meta["point_counts"].items()},
    )
