"""Convex polytopes: construction, clipping, sections, hulls and
boundary-point classification.

Faces are stored as CSR loops (``loop_ptr``/``loop_idx``) ordered
counter-clockwise when seen from outside. Every tolerance is an absolute
length; callers scale it by the body size (``tol * diameter`` by default).
"""
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from . import kernels
from .errors import DegenerateCap, DegenerateInput, EmptyResult, NoIntersection
from .measure import SphereMeasure

DEFAULT_TOL = 1e-9
_EPS = np.finfo(float).eps
_EXACT_DIAMETER_LIMIT = 4000


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def plane_basis(normal):
    """Orthonormal ``(u, w)`` with ``u x w = normal``."""
    n = _unit(normal)
    helper = np.eye(3)[np.argmin(np.abs(n))]
    u = _unit(np.cross(helper, n))
    w = np.cross(n, u)
    return u, w


def order_ccw(points, normal):
    """Indices ordering coplanar points counter-clockwise about ``normal``."""
    u, w = plane_basis(normal)
    rel = points - points.mean(axis=0)
    ang = np.arctan2(rel @ w, rel @ u)
    return np.argsort(ang, kind="stable")


@dataclass(frozen=True)
class Halfspace:
    """The set ``{r : r . normal <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def flipped(self):
        return Halfspace(-self.normal, -self.offset)

    def signed_distance(self, points):
        return np.asarray(points, dtype=float) @ self.normal - self.offset


@dataclass(frozen=True)
class PlanarSection:
    normal: np.ndarray
    offset: float
    polygon: np.ndarray
    area: float


@dataclass(frozen=True)
class Classification:
    """Outcome of :func:`classify_point`.

    ``kind`` is one of ``regular``, ``ridge``, ``conical``, ``interior``,
    ``not_on_boundary``; ``normals`` holds the distinct incident normals
    (one for regular, the two extremes for ridge).
    """

    kind: str
    normals: tuple = ()

    def __str__(self):
        if not self.normals:
            return self.kind
        vecs = ", ".join("(" + ", ".join(f"{c:.6g}" for c in n) + ")" for n in self.normals)
        return f"{self.kind}[{vecs}]"


class ConvexPolytope:
    def __init__(self, vertices, loop_ptr, loop_idx, normals, areas, cap_face=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.loop_ptr = np.ascontiguousarray(loop_ptr, dtype=np.int64)
        self.loop_idx = np.ascontiguousarray(loop_idx, dtype=np.int64)
        self.normals = np.ascontiguousarray(normals, dtype=float)
        self.areas = np.ascontiguousarray(areas, dtype=float)
        self.cap_face = cap_face
        for arr in (self.vertices, self.loop_ptr, self.loop_idx, self.normals, self.areas):
            arr.flags.writeable = False

    @classmethod
    def from_loops(cls, vertices, loops, normals=None, cap_face=None):
        """Build from vertex loops; normals default to the loops' vector areas."""
        vertices = np.asarray(vertices, dtype=float)
        lens = np.array([len(loop) for loop in loops], dtype=np.int64)
        ptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        idx = np.concatenate([np.asarray(loop, dtype=np.int64) for loop in loops])
        vec = kernels.loop_vector_areas(vertices, ptr, idx)
        if normals is None:
            norms = np.linalg.norm(vec, axis=1)
            normals = vec / norms[:, None]
            areas = norms
        else:
            normals = np.asarray(normals, dtype=float)
            normals = normals / np.linalg.norm(normals, axis=1)[:, None]
            areas = np.einsum("ij,ij->i", vec, normals)
        return cls(vertices, ptr, idx, normals, areas, cap_face)

    # -- basic queries ---------------------------------------------------
    @property
    def n_faces(self):
        return len(self.loop_ptr) - 1

    def loop(self, f):
        return self.loop_idx[self.loop_ptr[f]:self.loop_ptr[f + 1]]

    @property
    def faces(self):
        return [(self.loop(f).tolist(), self.normals[f], float(self.areas[f]))
                for f in range(self.n_faces)]

    @cached_property
    def face_of_position(self):
        return np.repeat(np.arange(self.n_faces), np.diff(self.loop_ptr))

    @cached_property
    def offsets(self):
        first = self.vertices[self.loop_idx[self.loop_ptr[:-1]]]
        return np.einsum("ij,ij->i", first, self.normals)

    @cached_property
    def diameter(self):
        """Largest vertex distance (a bounding-box diagonal above
        ``_EXACT_DIAMETER_LIMIT`` vertices)."""
        v = self.vertices
        if len(v) <= _EXACT_DIAMETER_LIMIT:
            return float(pdist(v).max())
        return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))

    @property
    def total_area(self):
        return float(self.areas.sum())

    @cached_property
    def volume(self):
        c = self.vertices.mean(axis=0)
        return float(np.sum(self.areas * (self.offsets - self.normals @ c)) / 3.0)

    def edges(self):
        """Directed edges ``(a, b)`` of every face loop."""
        nxt = kernels._next_positions(self.loop_ptr)
        return np.stack([self.loop_idx, self.loop_idx[nxt]], axis=1)

    def surface_measure(self):
        return SphereMeasure(self.normals, self.areas)

    def transformed(self, scale=1.0, shift=(0.0, 0.0, 0.0)):
        """Image under ``r -> scale * r + shift`` (``scale > 0``)."""
        return ConvexPolytope(
            self.vertices * scale + np.asarray(shift, dtype=float),
            self.loop_ptr, self.loop_idx, self.normals, self.areas * scale**2,
            self.cap_face,
        )

    def validate(self, tol=DEFAULT_TOL):
        """List every violated invariant (empty list means valid)."""
        problems = []
        scale = self.diameter
        if np.any(~np.isfinite(self.vertices)):
            problems.append("non-finite vertex")
        if np.any(np.abs(np.linalg.norm(self.normals, axis=1) - 1) > 1e-12):
            problems.append("non-unit normal")
        if np.any(self.areas < 0):
            problems.append("negative face area")
        excess = self.vertices @ self.normals.T - self.offsets[None, :]
        if excess.max() > tol * scale:
            problems.append(f"not convex: excess {excess.max():.3e}")
        # planarity of each loop
        off = np.einsum("ij,ij->i", self.vertices[self.loop_idx], self.normals[self.face_of_position])
        if np.abs(off - self.offsets[self.face_of_position]).max() > tol * scale:
            problems.append("non-planar face")
        e = self.edges()
        keys = e[:, 0] * len(self.vertices) + e[:, 1]
        rev = e[:, 1] * len(self.vertices) + e[:, 0]
        if len(np.unique(keys)) != len(keys):
            problems.append("repeated directed edge")
        if not np.array_equal(np.sort(keys), np.sort(rev)):
            problems.append("edge not shared by exactly two faces")
        used = np.unique(self.loop_idx)
        n_v, n_e, n_f = len(used), len(keys) // 2, self.n_faces
        if n_v - n_e + n_f != 2:
            problems.append(f"Euler characteristic {n_v - n_e + n_f} != 2")
        closure = np.linalg.norm(self.areas @ self.normals)
        if closure > tol * self.total_area:
            problems.append(f"surface not closed: |sum a n| = {closure:.3e}")
        return problems

    # -- serialisation -----------------------------------------------------
    def to_dict(self):
        return {
            "vertices": self.vertices.tolist(),
            "faces": [
                {"loop": self.loop(f).tolist(), "normal": self.normals[f].tolist(),
                 "area": float(self.areas[f])}
                for f in range(self.n_faces)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        faces = data["faces"]
        return cls.from_loops(
            np.asarray(data["vertices"], dtype=float),
            [f["loop"] for f in faces],
            normals=[f["normal"] for f in faces],
        )

    def __repr__(self):
        return f"ConvexPolytope(V={len(self.vertices)}, F={self.n_faces})"


# ---------------------------------------------------------------------------
# mesh text format
# ---------------------------------------------------------------------------

def write_mesh(poly, path):
    with open(path, "w") as fh:
        for v in poly.vertices:
            fh.write("v {!r} {!r} {!r}\n".format(*map(float, v)))
        for f in range(poly.n_faces):
            fh.write("f " + " ".join(str(i + 1) for i in poly.loop(f)) + "\n")


def read_mesh(path):
    verts, loops = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                loops.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
    return ConvexPolytope.from_loops(np.array(verts), loops)


def save_json(poly, path):
    with open(path, "w") as fh:
        json.dump(poly.to_dict(), fh)


# ---------------------------------------------------------------------------
# clipping and sections
# ---------------------------------------------------------------------------

def clip(poly, halfspace, tol=DEFAULT_TOL, snap=None, signed=None):
    """Return ``poly`` intersected with ``halfspace``.

    Vertices within ``snap`` of the plane (scalar or one value per vertex;
    default ``tol * diameter``) are treated as lying on it. Callers that can
    evaluate the vertex distances more accurately pass them as ``signed``.
    The cut face is appended last and recorded in ``cap_face``.
    """
    h = halfspace
    verts = poly.vertices
    s = verts @ h.normal - h.offset if signed is None else np.asarray(signed, dtype=float)
    if snap is None:
        snap = tol * poly.diameter
    s = np.where(np.abs(s) <= snap, 0.0, s)
    if np.all(s <= 0.0):
        return poly
    if not np.any(s < 0.0):
        raise EmptyResult("the halfspace keeps no interior point")

    new_ptr, codes, lo, hi = kernels.clip_loops(poly.loop_ptr, poly.loop_idx, s)

    # one new vertex per crossed edge, shared by the two faces that use it
    keys = lo * len(verts) + hi
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    c_lo, c_hi = lo[first], hi[first]
    frac = s[c_lo] / (s[c_lo] - s[c_hi])
    crossing_pts = verts[c_lo] + frac[:, None] * (verts[c_hi] - verts[c_lo])

    n_old = len(verts)
    if len(inverse):
        mapped = np.where(codes >= 0, codes, n_old + inverse.reshape(-1)[np.maximum(-codes - 1, 0)])
    else:
        mapped = codes
    all_pts = np.vstack([verts, crossing_pts])

    lens = np.diff(new_ptr)
    keep_face = lens >= 3
    loops = [mapped[new_ptr[f]:new_ptr[f + 1]] for f in np.nonzero(keep_face)[0]]
    normals = list(poly.normals[keep_face])

    on_plane = np.nonzero(s == 0.0)[0]
    used_old = np.zeros(n_old, dtype=bool)
    for loop in loops:
        used_old[loop[loop < n_old]] = True
    cap_ids = np.concatenate([on_plane[used_old[on_plane]], n_old + np.arange(len(uniq))])
    if len(cap_ids) < 3:
        raise DegenerateCap("the cut touches the body in fewer than three points")
    cap_pts = all_pts[cap_ids]
    cap_loop = cap_ids[order_ccw(cap_pts, h.normal)]
    cap_area, cap_err = _area_with_error(all_pts[cap_loop], h.normal)
    if cap_area <= cap_err:
        raise DegenerateCap("the cut section has no area")
    loops.append(cap_loop)
    normals.append(h.normal)

    # compact the vertex array
    stacked = np.concatenate(loops)
    used = np.unique(stacked)
    remap = np.full(len(all_pts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    loops = [remap[loop] for loop in loops]
    return ConvexPolytope.from_loops(all_pts[used], loops, normals=np.array(normals),
                                     cap_face=len(loops) - 1)


def _area_with_error(points, normal):
    """Fan area of a planar loop along ``normal`` and a rounding-error bound.

    The bound sums the magnitudes of the individual cross-product terms, so
    long thin loops made of exactly representable coordinates are not
    mistaken for degenerate ones.
    """
    p = points[1:] - points[0]
    u, w = p[:-1], p[1:]
    vec = np.cross(u, w).sum(axis=0)
    mag = (np.abs(u[:, [1, 2, 0]] * w[:, [2, 0, 1]]) + np.abs(u[:, [2, 0, 1]] * w[:, [1, 2, 0]])).sum(axis=0)
    return 0.5 * float(vec @ normal), 0.5 * 64 * _EPS * float(mag @ np.abs(normal))


def section(poly, normal, offset, tol=DEFAULT_TOL):
    """Planar section ``{r in poly : r . normal = offset}``."""
    h = Halfspace(normal, offset)
    snap = tol * poly.diameter
    s = h.signed_distance(poly.vertices)
    s = np.where(np.abs(s) <= snap, 0.0, s)
    if s.min() > 0 or s.max() < 0:
        raise NoIntersection("the plane misses the body")
    if s.max() == 0.0 or s.min() == 0.0:
        # supporting plane: the section is a face, an edge or a vertex
        touching = np.nonzero(s == 0.0)[0]
        sign = 1.0 if s.max() == 0.0 else -1.0
        match = np.nonzero(poly.normals @ (sign * h.normal) > 1 - 1e-10)[0]
        if len(match):
            loop = poly.loop(match[0])
            pts = poly.vertices[loop][order_ccw(poly.vertices[loop], h.normal)]
            return PlanarSection(h.normal, h.offset, pts, float(poly.areas[match[0]]))
        pts = poly.vertices[touching]
        return PlanarSection(h.normal, h.offset, pts, 0.0)
    clipped = clip(poly, h, tol=tol)
    loop = clipped.loop(clipped.cap_face)
    return PlanarSection(h.normal, h.offset, clipped.vertices[loop],
                         float(clipped.areas[clipped.cap_face]))


def polygon_area(points, normal):
    """Area of a planar loop via the shoelace formula in the plane basis."""
    u, w = plane_basis(normal)
    x, y = points @ u, points @ w
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ---------------------------------------------------------------------------
# hull
# ---------------------------------------------------------------------------

def hull3(points, plane_tol=1e-10):
    """Convex hull of a 3D point cloud (Qhull), with coplanar triangles merged."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 4:
        raise DegenerateInput("need at least four points")
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[2] <= 1e-12 * sv[0]:
        raise DegenerateInput("points are coplanar")
    hull = ConvexHull(pts)
    eq = hull.equations
    scale = np.ptp(pts, axis=0).max()
    n_tri = len(hull.simplices)
    parent = np.arange(n_tri)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n_tri):
        for j in hull.neighbors[i]:
            if j > i and np.abs(eq[i, :3] - eq[j, :3]).max() < plane_tol \
                    and abs(eq[i, 3] - eq[j, 3]) < plane_tol * scale:
                parent[find(i)] = find(j)
    roots = np.array([find(i) for i in range(n_tri)])
    loops, normals = [], []
    for r in np.unique(roots):
        members = np.nonzero(roots == r)[0]
        ids = np.unique(hull.simplices[members])
        n = eq[members, :3].mean(axis=0)
        n /= np.linalg.norm(n)
        loops.append(ids[order_ccw(pts[ids], n)])
        normals.append(n)
    used = np.unique(np.concatenate(loops))
    remap = np.full(len(pts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return ConvexPolytope.from_loops(pts[used], [remap[l] for l in loops], normals=np.array(normals))


def box(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = np.array([[x, y, z] for z in (lo[2], hi[2]) for y in (lo[1], hi[1]) for x in (lo[0], hi[0])])
    loops = [
        [0, 2, 3, 1],  # z = lo
        [4, 5, 7, 6],  # z = hi
        [0, 1, 5, 4],  # y = lo
        [2, 6, 7, 3],  # y = hi
        [0, 4, 6, 2],  # x = lo
        [1, 3, 7, 5],  # x = hi
    ]
    return ConvexPolytope.from_loops(corners, loops)


def prism(polygon_xy, z0, z1):
    """Right prism over a counter-clockwise convex polygon in the xy-plane."""
    p = np.asarray(polygon_xy, dtype=float)
    n = len(p)
    verts = np.vstack([np.column_stack([p, np.full(n, z0)]), np.column_stack([p, np.full(n, z1)])])
    loops = [list(range(n - 1, -1, -1)), list(range(n, 2 * n))]
    for i in range(n):
        j = (i + 1) % n
        loops.append([i, j, n + j, n + i])
    return ConvexPolytope.from_loops(verts, loops)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def face_distances(poly, point):
    """Signed distance of ``point`` to every face plane, each measured from
    the face vertex nearest the point, with a floating-point error bound."""
    p = np.asarray(point, dtype=float)
    d2 = np.sum((poly.vertices[poly.loop_idx] - p) ** 2, axis=1)
    order = np.lexsort((d2, poly.face_of_position))
    nearest = poly.loop_idx[order[poly.loop_ptr[:-1]]]
    rel = p - poly.vertices[nearest]
    terms = rel * poly.normals
    s = terms.sum(axis=1)
    err = 8 * _EPS * np.abs(terms).sum(axis=1)
    return s, err


def _angle(a, b):
    return float(np.arccos(np.clip(a @ b, -1.0, 1.0)))


def classify_point(poly, point, tol=None, angular_tol=1e-10):
    """Classify a point against ``poly``.

    ``tol`` is the distance under which a face counts as incident (default
    ``1e-9 * diameter``). Normals closer than ``angular_tol`` count as one.
    Three or more distinct normals still give a ridge when they all lie
    within ``angular_tol`` of the minor arc joining the two most distant
    ones, since the normal cone is then two-dimensional.
    """
    if tol is None:
        tol = DEFAULT_TOL * poly.diameter
    s, err = face_distances(poly, point)
    if np.any(s > tol + err):
        return Classification("not_on_boundary")
    active = np.nonzero(np.abs(s) <= tol + err)[0]
    if len(active) == 0:
        return Classification("interior")
    reps = []
    for f in active:
        n = poly.normals[f]
        if all(_angle(n, r) > angular_tol for r in reps):
            reps.append(n)
    if len(reps) == 1:
        return Classification("regular", (reps[0],))
    reps = np.array(reps)
    gram = np.clip(reps @ reps.T, -1.0, 1.0)
    i, j = np.unravel_index(np.argmin(gram), gram.shape)
    a, b = reps[i], reps[j]
    if _angle(a, b) > np.pi - 1e-9:
        return Classification("conical", tuple(reps))
    if len(reps) > 2:
        axis = _unit(np.cross(a, b))
        mid = _unit(a + b)
        half = 0.5 * _angle(a, b)
        for n in reps:
            off_plane = abs(np.arcsin(np.clip(n @ axis, -1, 1)))
            inplane = n - (n @ axis) * axis
            if off_plane > angular_tol or _angle(_unit(inplane), mid) > half + angular_tol:
                return Classification("conical", tuple(reps))
    return Classification("ridge", (a, b))
