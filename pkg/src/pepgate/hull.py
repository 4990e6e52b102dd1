"""3D convex hulls via incremental insertion with filtered exact predicates.

Every orientation decision is made by a floating-point determinant guarded
by a conservative rounding-error bound; determinants inside the band are
recomputed in exact rational arithmetic (fractions.Fraction on the original
coordinates, which are exact binary rationals). Decisions are therefore
exact, and the construction tolerates coplanar, collinear, and duplicated
input.

Coplanar input makes the incremental triangulation keep boundary points
that are not extreme (face centers, edge midpoints). Those are pruned by an
exact criterion: a boundary point is a vertex of the polytope iff the
normals of its incident facets span rank 3. The hull is rebuilt on the
surviving points and the result audited against every original point.

Input points are deduplicated and lexicographically sorted before any
geometry runs, so the hull is a function of the point set alone: the same
set in any order yields bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateInput

_EPS = 2.0**-53
# Safety factor over the worst-case rounding error of the 3x3 orientation
# determinant (true constant is ~8 eps); oversizing only routes more
# borderline cases to exact arithmetic.
_FILTER = 64.0 * _EPS


@dataclass(frozen=True, eq=False)
class ConvexHull3:
    """A non-degenerate 3D convex hull.

    vertices: (V, 3) float64, lexicographically sorted; the extreme points
        of the input, always a subset of the input points.
    facet_indices: (F, 3) uint32 rows into `vertices`, each rotated so the
        smallest index comes first, rows sorted; orientation preserved
        (outward normal along cross(v1 - v0, v2 - v0)).
    normals: (F, 3) outward unit normals.
    offsets: (F,) plane offsets; x is inside when normals @ x <= offsets
        (+ tolerance) for every row.
    bbox: (2, 3) componentwise min/max of the vertices.
    """

    vertices: np.ndarray
    facet_indices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    bbox: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, ConvexHull3):
            return NotImplemented
        return (
            self.vertices.tobytes() == other.vertices.tobytes()
            and self.facet_indices.tobytes() == other.facet_indices.tobytes()
            and self.normals.tobytes() == other.normals.tobytes()
            and self.offsets.tobytes() == other.offsets.tobytes()
        )

    @property
    def edge_count(self) -> int:
        edges = set()
        for a, b, c in self.facet_indices:
            for u, v in ((a, b), (b, c), (c, a)):
                edges.add((min(u, v), max(u, v)))
        return len(edges)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - self.edge_count + len(self.facet_indices)


def _fr(x: float) -> Fraction:
    return Fraction(float(x))


def _exact_cross(a, b, c) -> tuple[Fraction, Fraction, Fraction]:
    """cross(b - a, c - a) in exact rational arithmetic."""
    ax, ay, az = map(_fr, a)
    ux, uy, uz = _fr(b[0]) - ax, _fr(b[1]) - ay, _fr(b[2]) - az
    vx, vy, vz = _fr(c[0]) - ax, _fr(c[1]) - ay, _fr(c[2]) - az
    return (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)


def _axis_diffs(a, b, c, q) -> tuple[int, int, int]:
    """Exact integer (b-a, c-a, q-a) for one axis, on a common 2^k grid.

    Floats are dyadic rationals; scaling one determinant column by a
    positive constant leaves the determinant's sign unchanged, so each
    axis may use its own grid.
    """
    ratios = [float(v).as_integer_ratio() for v in (a, b, c, q)]
    den = max(r[1] for r in ratios)
    ia, ib, ic, iq = (n * (den // d) for n, d in ratios)
    return ib - ia, ic - ia, iq - ia


def _orient_exact(a, b, c, q) -> int:
    """Exact sign of det[b-a; c-a; q-a] (positive: q on the normal side)."""
    ux, vx, wx = _axis_diffs(a[0], b[0], c[0], q[0])
    uy, vy, wy = _axis_diffs(a[1], b[1], c[1], q[1])
    uz, vz, wz = _axis_diffs(a[2], b[2], c[2], q[2])
    det = (
        ux * (vy * wz - vz * wy)
        - uy * (vx * wz - vz * wx)
        + uz * (vx * wy - vy * wx)
    )
    return (det > 0) - (det < 0)


def _rank_of_vectors(vectors) -> int:
    """Exact rank of a list of rational 3-vectors (Gaussian elimination)."""
    rows = [list(v) for v in vectors]
    rank = 0
    for col in range(3):
        pivot = next(
            (r for r in range(rank, len(rows)) if rows[r][col] != 0), None
        )
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        prow = rows[rank]
        for r in range(rank + 1, len(rows)):
            if rows[r][col] != 0:
                factor = rows[r][col] / prow[col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], prow)]
        rank += 1
        if rank == 3:
            break
    return rank


class _Builder:
    """Mutable construction state for one incremental pass."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        # parallel facet stores indexed by facet id; dead facets keep their
        # slots so ids stay stable
        self.verts: list[tuple[int, int, int]] = []
        self.normal: list[np.ndarray] = []
        self.perm: list[np.ndarray] = []
        self.alive: list[bool] = []
        self.conflicts: dict[int, np.ndarray] = {}
        self.interior: tuple[Fraction, Fraction, Fraction] | None = None
        self.interior_f: np.ndarray | None = None

    # -- predicates ---------------------------------------------------------

    def _dets_and_bands(self, fid: int, coords: np.ndarray):
        a = self.pts[self.verts[fid][0]]
        w = coords - a
        det = w @ self.normal[fid]
        band = _FILTER * (np.abs(w) @ self.perm[fid])
        return det, band

    def _strictly_above_coords(self, fid: int, coords: np.ndarray):
        """Exact strictly-above mask plus float dets (for apex ranking)."""
        det, band = self._dets_and_bands(fid, coords)
        above = det > band
        near = ~above & (det >= -band)
        if near.any():
            a, b, c = (self.pts[i] for i in self.verts[fid])
            for j in np.nonzero(near)[0]:
                if _orient_exact(a, b, c, coords[j]) > 0:
                    above[j] = True
        return above, det

    # -- facet management ----------------------------------------------------

    def _add_oriented(self, a: int, b: int, c: int) -> int:
        """Add facet (a,b,c), flipped if needed so the interior is below."""
        pa, pb, pc = self.pts[a], self.pts[b], self.pts[c]
        u, v = pb - pa, pc - pa
        au, av = np.abs(u), np.abs(v)
        normal = np.cross(u, v)
        perm = np.array(
            [
                au[1] * av[2] + au[2] * av[1],
                au[2] * av[0] + au[0] * av[2],
                au[0] * av[1] + au[1] * av[0],
            ]
        )
        w = self.interior_f - pa
        det = float(w @ normal)
        band = float(_FILTER * (np.abs(w) @ perm))
        if det > band:
            side = 1
        elif det < -band:
            side = -1
        else:
            nx, ny, nz = _exact_cross(pa, pb, pc)
            ix, iy, iz = self.interior
            d = (
                nx * (ix - _fr(pa[0]))
                + ny * (iy - _fr(pa[1]))
                + nz * (iz - _fr(pa[2]))
            )
            side = (d > 0) - (d < 0)
        if side == 0:
            raise RuntimeError("interior point lies on a candidate facet plane")
        if side > 0:
            b, c = c, b
            normal = -normal
        self.verts.append((a, b, c))
        self.normal.append(normal)
        self.perm.append(perm)
        self.alive.append(True)
        return len(self.verts) - 1

    def _assign(self, pids: np.ndarray, fids: list[int]) -> None:
        """Partition points to the facet each is most above; drop the rest."""
        if len(pids) == 0 or not fids:
            return
        coords = self.pts[pids]
        dets = np.empty((len(fids), len(pids)))
        above = np.zeros_like(dets, dtype=bool)
        for r, fid in enumerate(fids):
            above[r], dets[r] = self._strictly_above_coords(fid, coords)
        dets[~above] = -np.inf
        best = dets.argmax(axis=0)
        assigned = above.any(axis=0)
        for r, fid in enumerate(fids):
            sel = pids[assigned & (best == r)]
            if len(sel):
                prev = self.conflicts.get(fid)
                self.conflicts[fid] = (
                    sel if prev is None else np.concatenate([prev, sel])
                )

    # -- construction --------------------------------------------------------

    def seed_simplex(self, simplex: tuple[int, int, int, int]) -> None:
        corners = self.pts[list(simplex)]
        self.interior_f = corners.mean(axis=0)
        fr = [tuple(map(_fr, p)) for p in corners]
        self.interior = tuple(sum(c[k] for c in fr) / 4 for k in range(3))
        i0, i1, i2, i3 = simplex
        for a, b, c in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
            self._add_oriented(a, b, c)
        rest = np.array(
            [i for i in range(len(self.pts)) if i not in simplex], dtype=np.intp
        )
        self._assign(rest, [0, 1, 2, 3])

    def _alive_ids(self) -> list[int]:
        return [f for f, a in enumerate(self.alive) if a]

    def _visible_from(self, apex: int) -> list[int]:
        ids = self._alive_ids()
        anchors = np.array([self.verts[f][0] for f in ids])
        normals = np.array([self.normal[f] for f in ids])
        perms = np.array([self.perm[f] for f in ids])
        w = self.pts[apex] - self.pts[anchors]
        det = np.einsum("ij,ij->i", w, normals)
        band = _FILTER * np.einsum("ij,ij->i", np.abs(w), perms)
        vis = det > band
        near = ~vis & (det >= -band)
        for j in np.nonzero(near)[0]:
            fid = ids[j]
            a, b, c = (self.pts[i] for i in self.verts[fid])
            if _orient_exact(a, b, c, self.pts[apex]) > 0:
                vis[j] = True
        return [f for f, v in zip(ids, vis) if v]

    def _step(self) -> None:
        fid = min(self.conflicts)
        pids = self.conflicts[fid]
        det, _ = self._dets_and_bands(fid, self.pts[pids])
        apex = int(pids[int(det.argmax())])

        visible = self._visible_from(apex)
        # directed edges of the visible region, in deterministic order
        edges: list[tuple[int, int]] = []
        edge_set: set[tuple[int, int]] = set()
        for f in sorted(visible):
            a, b, c = self.verts[f]
            for u, v in ((a, b), (b, c), (c, a)):
                edges.append((u, v))
                edge_set.add((u, v))
        horizon = [(u, v) for u, v in edges if (v, u) not in edge_set]

        pool: list[np.ndarray] = []
        for f in visible:
            self.alive[f] = False
            dropped = self.conflicts.pop(f, None)
            if dropped is not None:
                pool.append(dropped)
        new_fids = [self._add_oriented(u, v, apex) for u, v in horizon]
        if pool:
            merged = np.concatenate(pool)
            self._assign(merged[merged != apex], new_fids)

    def outside_mask(self, coords: np.ndarray) -> np.ndarray:
        """Exact strictly-outside mask for arbitrary coordinates."""
        outside = np.zeros(len(coords), dtype=bool)
        for fid in self._alive_ids():
            above, _ = self._strictly_above_coords(fid, coords)
            outside |= above
        return outside

    def run(self) -> None:
        for _ in range(4):
            while self.conflicts:
                self._step()
            leftovers = np.nonzero(self.outside_mask(self.pts))[0]
            if len(leftovers) == 0:
                return
            self._assign(leftovers.astype(np.intp), self._alive_ids())
        raise RuntimeError("hull construction failed to converge")

    def structure_vertex_ids(self) -> list[int]:
        ids = sorted({i for f in self._alive_ids() for i in self.verts[f]})
        return ids

    def extreme_vertex_ids(self) -> list[int]:
        """Structure vertices whose incident facet normals span rank 3.

        Rank 3 proves the point is a 0-face of the polytope; lower rank
        means it sits in the relative interior of a facet (rank 1) or an
        edge (rank 2) and is not extreme.
        """
        star: dict[int, list[int]] = {}
        for fid in self._alive_ids():
            for i in self.verts[fid]:
                star.setdefault(i, []).append(fid)
        kept = []
        for i, fids in star.items():
            normals = [
                _exact_cross(*(self.pts[v] for v in self.verts[f])) for f in fids
            ]
            if _rank_of_vectors(normals) == 3:
                kept.append(i)
        return sorted(kept)


def _pick_simplex(pts: np.ndarray) -> tuple[int, int, int, int]:
    """Four affinely independent point indices, or DegenerateInput(rank).

    Float extremes nominate candidates; exact arithmetic confirms them and,
    when a nominee fails, a full exact scan settles whether the set is
    genuinely degenerate.
    """
    n = len(pts)
    if n == 1:
        raise DegenerateInput(0)
    i0, i1 = 0, n - 1  # lexicographic extremes of the sorted array

    def collinear(j):
        nx, ny, nz = _exact_cross(pts[i0], pts[i1], pts[j])
        return nx == 0 and ny == 0 and nz == 0

    cr = np.cross(pts[i1] - pts[i0], pts - pts[i0])
    i2 = int(np.einsum("ij,ij->i", cr, cr).argmax())
    if i2 in (i0, i1) or collinear(i2):
        i2 = next(
            (j for j in range(n) if j not in (i0, i1) and not collinear(j)), -1
        )
        if i2 < 0:
            raise DegenerateInput(1)

    dets = (pts - pts[i0]) @ np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    i3 = int(np.abs(dets).argmax())
    if i3 in (i0, i1, i2) or _orient_exact(pts[i0], pts[i1], pts[i2], pts[i3]) == 0:
        i3 = next(
            (
                j
                for j in range(n)
                if j not in (i0, i1, i2)
                and _orient_exact(pts[i0], pts[i1], pts[i2], pts[j]) != 0
            ),
            -1,
        )
        if i3 < 0:
            raise DegenerateInput(2)
    return i0, i1, i2, i3


def _construct(pts: np.ndarray) -> _Builder:
    builder = _Builder(pts)
    builder.seed_simplex(_pick_simplex(pts))
    builder.run()
    return builder


def build_hull(points) -> ConvexHull3:
    """Build the convex hull of >= 4 points in 3D.

    Raises DegenerateInput(rank) when the points span fewer than 3
    dimensions (rank 0: coincident, 1: collinear, 2: coplanar).
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be an (n, 3) array")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    all_pts = np.unique(pts, axis=0)

    current = all_pts
    for _ in range(5):
        builder = _construct(current)
        extreme = builder.extreme_vertex_ids()
        pruned = len(extreme) < len(builder.structure_vertex_ids())
        missed = (
            builder.outside_mask(all_pts)
            if current.shape != all_pts.shape
            else np.zeros(len(all_pts), dtype=bool)
        )
        if not pruned and not missed.any():
            return _assemble(builder)
        keep = current[extreme]
        if missed.any():
            keep = np.vstack([keep, all_pts[missed]])
        current = np.unique(keep, axis=0)
    raise RuntimeError("hull vertex pruning failed to converge")


def _assemble(builder: _Builder) -> ConvexHull3:
    pts = builder.pts
    triples = [builder.verts[f] for f in builder._alive_ids()]
    used = sorted({i for t in triples for i in t})
    remap = {old: new for new, old in enumerate(used)}
    vertices = pts[used]

    rows = []
    for a, b, c in triples:
        t = (remap[a], remap[b], remap[c])
        k = int(np.argmin(t))
        rows.append(t[k:] + t[:k])  # rotate min-first; orientation preserved
    rows.sort()
    facet_indices = np.array(rows, dtype=np.uint32)

    a = vertices[facet_indices[:, 0]]
    b = vertices[facet_indices[:, 1]]
    c = vertices[facet_indices[:, 2]]
    raw = np.cross(b - a, c - a)
    normals = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    offsets = np.einsum("ij,ij->i", normals, a)
    bbox = np.vstack([vertices.min(axis=0), vertices.max(axis=0)])
    return ConvexHull3(
        vertices=vertices,
        facet_indices=facet_indices,
        normals=normals,
        offsets=offsets,
        bbox=bbox,
    )


def contains(hull: ConvexHull3, p, tol: float) -> bool:
    """Closed membership test: inside iff no facet plane is violated by
    more than tol. Boundary points count as inside."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    d = hull.normals @ np.asarray(p, dtype=float) - hull.offsets
    return bool((d <= tol).all())


def contains_many(hull: ConvexHull3, points, tol: float) -> np.ndarray:
    """Vectorized `contains` over an (m, 3) array; returns a bool array."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    pts = np.asarray(points, dtype=float)
    d = pts @ hull.normals.T - hull.offsets
    return (d <= tol).all(axis=1)
