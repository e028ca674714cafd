"""Finite atomic measures on the unit sphere and on a great-circle arc."""
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DomainError

MERGE_TOL = 1e-12


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise DomainError(f"cannot normalise {v!r}")
    return v / n


def _merge_groups(points, radius):
    """Label points so that any two within ``radius`` share a label."""
    n = len(points)
    if n < 2:
        return np.zeros(n, dtype=np.int64), n
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return np.arange(n), n
    graph = sparse.coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    count, labels = connected_components(graph, directed=False)
    return labels, count


def _weighted_directions(dirs, weights, labels, count):
    w = np.bincount(labels, weights=weights, minlength=count)
    acc = np.zeros((count, 3))
    for k in range(3):
        acc[:, k] = np.bincount(labels, weights=weights * dirs[:, k], minlength=count)
    norms = np.linalg.norm(acc, axis=1)
    # antipodal members could cancel; fall back to the first member's direction
    bad = norms < 1e-300
    if np.any(bad):
        first = np.full(count, -1)
        for i, lab in enumerate(labels):
            if first[lab] < 0:
                first[lab] = i
        acc[bad] = dirs[first[bad]]
        norms[bad] = 1.0
    return acc / norms[:, None], w


class SphereMeasure:
    """Atoms ``(direction, weight)`` with unit directions and positive weights.

    Atoms closer than ``MERGE_TOL`` are merged into their weighted mean
    direction on construction; zero weights are dropped.
    """

    __slots__ = ("dirs", "weights")

    def __init__(self, dirs=(), weights=(), merge_tol=MERGE_TOL):
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(dirs) != len(weights):
            raise DomainError("dirs and weights differ in length")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise DomainError("weights must be finite and non-negative")
        keep = weights > 0
        dirs, weights = dirs[keep], weights[keep]
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(~np.isfinite(norms)) or np.any(norms == 0):
            raise DomainError("directions must be finite and non-zero")
        dirs = dirs / norms[:, None]
        if merge_tol > 0 and len(dirs) > 1:
            labels, count = _merge_groups(dirs, merge_tol)
            if count < len(dirs):
                dirs, weights = _weighted_directions(dirs, weights, labels, count)
        self.dirs = dirs
        self.weights = weights
        self.dirs.flags.writeable = False
        self.weights.flags.writeable = False

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"SphereMeasure(n_atoms={len(self)}, mass={self.mass():.6g})"

    def __add__(self, other):
        return SphereMeasure(
            np.vstack([self.dirs, other.dirs]),
            np.concatenate([self.weights, other.weights]),
        )

    def scaled(self, factor):
        return SphereMeasure(self.dirs, self.weights * float(factor), merge_tol=0)

    def mass(self):
        return float(np.sum(self.weights))

    def moment(self):
        return self.weights @ self.dirs if len(self) else np.zeros(3)

    def drag_integral(self):
        return float(np.sum(self.weights * self.dirs[:, 2] ** 3))

    def restricted(self, keep):
        keep = np.asarray(keep, dtype=bool)
        return SphereMeasure(self.dirs[keep], self.weights[keep], merge_tol=0)

    def clustered(self, width=0.01):
        """Bin directions on a cubic grid of side ``width`` and merge each bin
        into its weighted mean direction."""
        if len(self) == 0:
            return self
        keys = np.floor(self.dirs / width + 0.5).astype(np.int64)
        _, labels = np.unique(keys, axis=0, return_inverse=True)
        labels = labels.reshape(-1)
        dirs, w = _weighted_directions(self.dirs, self.weights, labels, labels.max() + 1)
        return SphereMeasure(dirs, w)

    def cluster_weights(self, centers):
        """Total weight of the atoms nearest to each of ``centers``."""
        centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        centers = centers / np.linalg.norm(centers, axis=1)[:, None]
        if len(self) == 0:
            return np.zeros(len(centers))
        nearest = np.argmax(self.dirs @ centers.T, axis=1)
        return np.bincount(nearest, weights=self.weights, minlength=len(centers))

    def mass_near(self, direction, radius):
        d = _unit(direction)
        ang = np.arccos(np.clip(self.dirs @ d, -1.0, 1.0))
        return float(np.sum(self.weights[ang <= radius]))

    def to_dict(self):
        return {
            "atoms": [
                {"dir": [float(c) for c in d], "w": float(w)}
                for d, w in zip(self.dirs, self.weights)
            ]
        }

    @classmethod
    def from_dict(cls, data):
        atoms = data.get("atoms", [])
        return cls([a["dir"] for a in atoms], [a["w"] for a in atoms])


def two_atom(e1, e2, w1, w2):
    return SphereMeasure([_unit(e1), _unit(e2)], [w1, w2])


def mass(nu):
    return nu.mass()


def moment(nu):
    return nu.moment()


def drag_integral(nu):
    return nu.drag_integral()


def geodesic_matrix(a, b):
    """Pairwise great-circle distances between unit rows of ``a`` and ``b``.

    Computed from chord lengths, which stay accurate for nearly equal
    directions where arccos of the dot product loses half the digits.
    """
    chord = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return 2.0 * np.arcsin(np.minimum(0.5 * chord, 1.0))


def _transport_lp(dist, w1, w2, ii, jj):
    n1, n2 = len(w1), len(w2)
    npairs = len(ii)
    nvar = npairs + n1 + n2
    cost = np.concatenate([dist[ii, jj], np.ones(n1 + n2)])
    rows = np.concatenate([ii, n1 + jj, np.arange(n1), n1 + np.arange(n2)])
    cols = np.concatenate(
        [np.arange(npairs), np.arange(npairs), npairs + np.arange(n1 + n2)]
    )
    a_eq = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n1 + n2, nvar))
    res = linprog(cost, A_eq=a_eq, b_eq=np.concatenate([w1, w2]), bounds=(0, None),
                  method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    duals = res.eqlin.marginals
    return float(res.fun), duals[:n1], duals[n1:]


def bl_distance_lp(nu1, nu2, start_radius=0.15):
    """Bounded-Lipschitz distance via a sparse LP with column generation.

    Move mass at geodesic cost and pay 1 per unit of mass left unmatched on
    either side; this is the dual of the sup over f with sup-norm and
    Lipschitz constant both at most 1. Only pairs closer than
    ``start_radius`` enter the first LP, and pairs with negative reduced cost
    are added until none remain, so the value is exact. Slower than
    :func:`bl_distance` and kept as an independent cross-check.
    """
    n1, n2 = len(nu1), len(nu2)
    if n1 == 0 or n2 == 0:
        return nu1.mass() + nu2.mass()
    dist = geodesic_matrix(nu1.dirs, nu2.dirs)
    useful = dist < 2.0
    active = useful & (dist < start_radius)
    while True:
        ii, jj = np.nonzero(active)
        value, u, v = _transport_lp(dist, nu1.weights, nu2.weights, ii, jj)
        reduced = dist - u[:, None] - v[None, :]
        enter = useful & ~active & (reduced < -1e-12)
        if not enter.any():
            return max(0.0, value)
        active |= enter


def _load_ot():
    # POT probes every array backend it can find on import; only numpy is used here.
    for key in ("PYTORCH", "JAX", "TENSORFLOW", "CUPY"):
        os.environ.setdefault(f"POT_BACKEND_DISABLE_{key}", "1")
    import ot

    return ot


def bl_distance(nu1, nu2):
    """Bounded-Lipschitz distance between two atomic measures on the sphere.

    Same transport problem as :func:`bl_distance_lp`, made balanced by giving
    each side a sink atom that absorbs the other side's unmatched mass at
    cost 1, then solved exactly by network simplex.
    """
    n1, n2 = len(nu1), len(nu2)
    if n1 == 0 or n2 == 0:
        return nu1.mass() + nu2.mass()
    m1, m2 = nu1.mass(), nu2.mass()
    cost = np.ones((n1 + 1, n2 + 1))
    cost[:n1, :n2] = np.minimum(geodesic_matrix(nu1.dirs, nu2.dirs), 2.0)
    cost[n1, n2] = 0.0
    a = np.append(nu1.weights, m2)
    b = np.append(nu2.weights, m1)
    b *= a.sum() / b.sum()
    value = _load_ot().emd2(a, b, cost, numItermax=50_000_000)
    return max(0.0, float(value))


class GreatArc:
    """Minor great-circle arc from ``e1`` to ``e2``.

    The parameter runs over ``[-alpha, beta]``; 0 maps to ``center``
    (the normalised bisector unless given). ``center`` must lie on the arc.
    """

    def __init__(self, e1, e2, center=None):
        self.e1 = _unit(e1)
        self.e2 = _unit(e2)
        cross = np.cross(self.e1, self.e2)
        if np.linalg.norm(cross) < 1e-12:
            raise DomainError("arc endpoints are equal or antipodal")
        self.normal = cross / np.linalg.norm(cross)
        if center is None:
            center = self.e1 + self.e2
        c = np.asarray(center, dtype=float)
        c = c - (c @ self.normal) * self.normal
        self.center = _unit(c)
        self.tangent = np.cross(self.normal, self.center)
        self.alpha = float(-self._angle(self.e1))
        self.beta = float(self._angle(self.e2))
        if self.alpha < 0 or self.beta < 0:
            raise DomainError("center does not lie on the arc")

    def _angle(self, v):
        return np.arctan2(v @ self.tangent, v @ self.center)

    @property
    def length(self):
        return self.alpha + self.beta

    def point(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = np.cos(phi)[..., None] * self.center + np.sin(phi)[..., None] * self.tangent
        return out

    def locate(self, dirs):
        """Nearest arc parameter and angular distance for each direction."""
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        inplane_c = dirs @ self.center
        inplane_t = dirs @ self.tangent
        phi = np.arctan2(inplane_t, inplane_c)
        phi = np.clip(phi, -self.alpha, self.beta)
        # a direction whose in-plane part is null (a pole) or lies on the far
        # side of the circle is nearest to one of the endpoints
        foot = self.point(phi)
        dist = np.arccos(np.clip(np.sum(dirs * foot, axis=1), -1.0, 1.0))
        for end_phi in (-self.alpha, self.beta):
            end = self.point(end_phi)
            d_end = np.arccos(np.clip(dirs @ end, -1.0, 1.0))
            better = d_end < dist
            phi = np.where(better, end_phi, phi)
            dist = np.where(better, d_end, dist)
        return phi, dist

    def to_dict(self):
        return {"e1": self.e1.tolist(), "e2": self.e2.tolist(), "center": self.center.tolist()}


@dataclass
class ArcMeasure:
    """Atoms on the parameter interval of a :class:`GreatArc`."""

    phis: np.ndarray
    weights: np.ndarray
    arc: GreatArc
    off_arc_mass: float = 0.0
    off_arc: "SphereMeasure" = field(default=None, repr=False)

    def __post_init__(self):
        self.phis = np.asarray(self.phis, dtype=float).reshape(-1)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        order = np.argsort(self.phis, kind="stable")
        self.phis = self.phis[order]
        self.weights = self.weights[order]
        eps = 1e-9
        if np.any(self.phis < -self.arc.alpha - eps) or np.any(self.phis > self.arc.beta + eps):
            raise DomainError("arc parameter outside [-alpha, beta]")
        if np.any(self.weights <= 0):
            raise DomainError("arc atoms need positive weights")

    def mass(self):
        return float(np.sum(self.weights))

    def to_sphere(self):
        return SphereMeasure(self.arc.point(self.phis), self.weights)

    def to_dict(self):
        return {
            "arc": self.arc.to_dict(),
            "atoms": [{"phi": float(p), "w": float(w)} for p, w in zip(self.phis, self.weights)],
            "off_arc_mass": float(self.off_arc_mass),
        }


def project_to_arc(nu, arc, angular_tol=1e-6):
    """Send each atom to its nearest arc parameter; atoms farther than
    ``angular_tol`` from the arc are reported as off-arc mass instead."""
    if len(nu) == 0:
        return ArcMeasure(np.zeros(0), np.zeros(0), arc, 0.0, SphereMeasure())
    phi, dist = arc.locate(nu.dirs)
    on = dist <= angular_tol
    off = nu.restricted(~on)
    return ArcMeasure(phi[on], nu.weights[on], arc, off.mass(), off)


def _intervals_of(support):
    intervals = getattr(support, "intervals", support)
    return np.asarray(intervals, dtype=float).reshape(-1, 2)


def distance_to_set(phis, support):
    """Distance from each parameter to a union of closed intervals."""
    iv = _intervals_of(support)
    phis = np.asarray(phis, dtype=float)[:, None]
    gaps = np.maximum(np.maximum(iv[None, :, 0] - phis, phis - iv[None, :, 1]), 0.0)
    return gaps.min(axis=1)


def mass_outside(arc_measure, support, eps):
    """Weight of arc atoms farther than ``eps`` from the support set."""
    if len(arc_measure.phis) == 0:
        return 0.0
    d = distance_to_set(arc_measure.phis, support)
    return float(np.sum(arc_measure.weights[d > eps]))
