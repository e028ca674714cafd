"""Newton's resistance functional for concave height functions.

Two evaluations of the same quantity are provided: a midpoint-rule sum over
a cell-centred grid (``resistance``) and a sum over the faces of the body
under the graph (``resistance_surface``). Around them sit the 1D closed-form
optimum, the measure-space minimum over a finite angle grid, and the local
cut that lowers the resistance when a rim slope exceeds 1.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import DomainError, Infeasible, PlaneBelowBase
from .geometry import Halfspace, clip, prism
from .lp import simplex

SQRT2 = np.sqrt(2.0)
TOP_REL_TOL = 1e-9
CONCAVITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# domain and grid functions


class DomainSpec:
    """Convex polygon in the plane, stored counter-clockwise."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise DomainError("a domain needs at least three vertices")
        if _signed_area(v) < 0:
            v = v[::-1]
        self.vertices = v
        self.area = _signed_area(v)
        if self.area <= 0:
            raise DomainError("domain has no area")
        edges = np.roll(v, -1, axis=0) - v
        cross = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
        if np.any(cross < -1e-12 * np.abs(edges).max() ** 2):
            raise DomainError("domain polygon is not convex")
        # inward-facing halfplanes n . p <= c with unit outward n
        out = np.column_stack([edges[:, 1], -edges[:, 0]])
        out /= np.linalg.norm(out, axis=1)[:, None]
        self._normals = out
        self._offsets = np.einsum("ij,ij->i", out, v)

    @classmethod
    def square(cls, half=1.0):
        h = float(half)
        return cls([[-h, -h], [h, -h], [h, h], [-h, h]])

    @classmethod
    def regular(cls, sides, radius=1.0):
        ang = 2 * np.pi * np.arange(sides) / sides
        return cls(radius * np.column_stack([np.cos(ang), np.sin(ang)]))

    @property
    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def contains(self, x, y, tol=0.0):
        p = np.stack([np.asarray(x, float), np.asarray(y, float)], axis=-1)
        return np.all(p @ self._normals.T <= self._offsets + tol, axis=-1)

    def inscribed_disc(self):
        """Centre and radius of the largest disc inside the polygon (small LP)."""
        n = len(self._normals)
        a_ub = np.column_stack([self._normals, np.ones(n)])
        res = linprog([0, 0, -1], A_ub=a_ub, b_ub=self._offsets,
                      bounds=[(None, None), (None, None), (0, None)], method="highs")
        return res.x[:2], float(res.x[2])

    def to_dict(self):
        return {"vertices": self.vertices.tolist()}


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class ConcaveGridFn:
    """Values of a concave ``u : domain -> [0, M]`` at cell centres.

    The lattice covers the domain's bounding box with ``nx`` by ``ny`` cells;
    ``values[j, i]`` sits at ``(x[i], y[j])`` and cells whose centre is
    outside the domain are masked out.
    """

    def __init__(self, domain, values, M, check=True):
        self.domain = domain
        self.values = np.asarray(values, dtype=float)
        self.M = float(M)
        if self.M <= 0:
            raise DomainError("M must be positive")
        ny, nx = self.values.shape
        lo, hi = domain.bounds
        self.hx = (hi[0] - lo[0]) / nx
        self.hy = (hi[1] - lo[1]) / ny
        self.x = lo[0] + (np.arange(nx) + 0.5) * self.hx
        self.y = lo[1] + (np.arange(ny) + 0.5) * self.hy
        xx, yy = np.meshgrid(self.x, self.y)
        self.mask = domain.contains(xx, yy)
        if check:
            problems = self.problems()
            if problems:
                raise DomainError("; ".join(problems))

    @classmethod
    def sample(cls, domain, func, M, nx, ny=None, check=True):
        ny = nx if ny is None else ny
        lo, hi = domain.bounds
        x = lo[0] + (np.arange(nx) + 0.5) * (hi[0] - lo[0]) / nx
        y = lo[1] + (np.arange(ny) + 0.5) * (hi[1] - lo[1]) / ny
        xx, yy = np.meshgrid(x, y)
        return cls(domain, func(xx, yy), M, check=check)

    @property
    def shape(self):
        return self.values.shape

    @property
    def mesh(self):
        return np.meshgrid(self.x, self.y)

    @property
    def top_level(self):
        return self.M - TOP_REL_TOL * self.M

    def top_mask(self):
        """Cells in the upper level set ``{u = M}`` (to the detection tolerance)."""
        return self.mask & (self.values >= self.top_level)

    def problems(self):
        u, m = self.values, self.mask
        out = []
        tol = CONCAVITY_TOL * max(1.0, self.M)
        inside = u[m]
        if inside.size == 0:
            return ["no grid cell lies inside the domain"]
        if inside.min() < -tol or inside.max() > self.M + tol:
            out.append(f"values leave [0, M]: range [{inside.min():.3e}, {inside.max():.3e}]")
        ny, nx = u.shape
        up = np.pad(u, 1)
        mp = np.pad(m, 1)

        def shifted(arr, dj, di):
            return arr[1 + dj:1 + dj + ny, 1 + di:1 + di + nx]

        for dj, di in ((0, 1), (1, 0), (1, 1), (1, -1)):
            ok = m & shifted(mp, dj, di) & shifted(mp, -dj, -di)
            gap = 0.5 * (shifted(up, dj, di) + shifted(up, -dj, -di)) - u
            if np.any(gap[ok] > tol):
                out.append(f"concavity fails along ({di},{dj}) by {gap[ok].max():.3e}")
        return out

    def with_values(self, values):
        return ConcaveGridFn(self.domain, values, self.M, check=False)

    def to_dict(self):
        ny, nx = self.shape
        return {
            "header": {"omega": self.domain.vertices.tolist(), "nx": nx, "ny": ny, "M": self.M},
            "values": self.values.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data, check=True):
        h = data["header"]
        values = np.asarray(data["values"], dtype=float).reshape(h["ny"], h["nx"])
        return cls(DomainSpec(h["omega"]), values, h["M"], check=check)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path, check=True):
        with open(path) as fh:
            return cls.from_dict(json.load(fh), check=check)


# ---------------------------------------------------------------------------
# resistance, grid and surface forms


@dataclass
class ResistanceReport:
    F_value: float
    grad_norm: np.ndarray = field(repr=False)
    min_slope_below_top: float

    def to_dict(self):
        return {"F_value": self.F_value, "min_slope_below_top": self.min_slope_below_top}


def resistance(u):
    g2, total = kernels.grid_integrand(u.values, u.mask, u.hx, u.hy, u.M, TOP_REL_TOL * u.M)
    grad = np.sqrt(g2)
    below = u.mask & (u.values < u.top_level)
    slope = float(grad[below].min()) if below.any() else float("nan")
    return ResistanceReport(u.hx * u.hy * total, grad, slope)


def resistance_surface(body, omega_area):
    """Face sum of ``n_z**3 * area`` plus the domain area.

    The bottom face contributes ``-|domain|``, so the added constant brings
    the total back to the graph-only integral.
    """
    return body.surface_measure().drag_integral() + float(omega_area)


@dataclass(frozen=True)
class Roof:
    """``u(x, y) = min(M, min_i(a_i x + b_i y + c_i))``: a piecewise-linear concave function."""

    planes: tuple
    M: float

    def __call__(self, x, y):
        out = np.full(np.broadcast(x, y).shape, self.M, dtype=float)
        for a, b, c in self.planes:
            out = np.minimum(out, a * x + b * y + c)
        return out

    def body(self, domain):
        poly = prism(domain.vertices, 0.0, self.M)
        for a, b, c in self.planes:
            poly = clip(poly, Halfspace(np.array([-a, -b, 1.0]), c))
        return poly

    def grid(self, domain, n):
        return ConcaveGridFn.sample(domain, self, self.M, n)


# ---------------------------------------------------------------------------
# one-dimensional problem on [0, 1] with u(0) = M


@dataclass
class Solution2D:
    M: float
    knots_x: np.ndarray
    knots_z: np.ndarray
    F_value: float
    normals: np.ndarray
    weights: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.knots_x, self.knots_z)

    def to_dict(self):
        return {
            "M": self.M,
            "knots": np.column_stack([self.knots_x, self.knots_z]).tolist(),
            "F_value": self.F_value,
            "measure": [{"n": n.tolist(), "w": float(w)} for n, w in zip(self.normals, self.weights)],
        }


def solve_2d(M):
    """Minimiser of the 1D resistance over concave ``u: [0,1] -> [0,M]`` with ``u(0) = M``."""
    M = float(M)
    if M <= 0:
        raise DomainError("M must be positive")
    if M < 1:
        xs = np.array([0.0, 1.0 - M, 1.0])
        zs = np.array([M, M, 0.0])
        F = 1.0 - M / 2.0
        normals = np.array([[0.0, 1.0], [1 / SQRT2, 1 / SQRT2]])
        weights = np.array([1.0 - M, SQRT2 * M])
    else:
        xs = np.array([0.0, 1.0])
        zs = np.array([M, 0.0])
        F = 1.0 / (1.0 + M * M)
        r = np.hypot(M, 1.0)
        normals = np.array([[M / r, 1.0 / r]])
        weights = np.array([r])
    return Solution2D(M, xs, zs, F, normals, weights)


# ---------------------------------------------------------------------------
# measure-space minimum


@dataclass
class MeasureSearchResult:
    angles: np.ndarray
    weights: np.ndarray
    value: float
    unique: bool
    grid: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "value": self.value,
            "unique": self.unique,
            "atoms": [{"phi": float(p), "w": float(w)} for p, w in zip(self.angles, self.weights)],
            "grid_size": int(len(self.grid)),
        }


def min_measure_search(n_angles=None, angles=None, target=(1 / SQRT2, 1 / SQRT2), support_tol=1e-12):
    """Minimise ``sum w cos(phi)**3`` over weights on an angle grid in ``[0, pi/2]``
    whose moment ``sum w (sin phi, cos phi)`` equals ``target``.

    Give either ``n_angles`` (uniform grid, endpoints included) or an explicit
    ``angles`` array.
    """
    if angles is None:
        if n_angles is None or n_angles < 3:
            raise DomainError("need at least three angles")
        angles = np.linspace(0.0, np.pi / 2, int(n_angles))
    phi = np.asarray(angles, dtype=float)
    if np.any(phi < -1e-15) or np.any(phi > np.pi / 2 + 1e-15):
        raise DomainError("angles must lie in [0, pi/2]")
    a = np.vstack([np.sin(phi), np.cos(phi)])
    try:
        res = simplex(np.cos(phi) ** 3, a, np.asarray(target, dtype=float))
    except Infeasible:
        has_ends = np.isclose(phi, 0).any() and np.isclose(phi, np.pi / 2).any()
        assert not has_ends, "grid with both endpoints must be feasible"
        raise
    keep = res.x > support_tol
    return MeasureSearchResult(phi[keep], res.x[keep], res.value, res.unique(), phi)


# ---------------------------------------------------------------------------
# local cut at a rim point of the top plateau


@dataclass(frozen=True)
class RimPoint:
    """A point on the boundary of ``{u = M}``, the horizontal direction the
    wall falls away in, and the wall slope there."""

    x: float
    y: float
    slope: float
    heading: float = 0.0

    @property
    def direction(self):
        return np.array([np.cos(self.heading), np.sin(self.heading)])


@dataclass
class CutImprovement:
    t: float
    delta_F: float
    cap_area: float

    @property
    def ratio(self):
        return self.delta_F / self.cap_area if self.cap_area > 0 else 0.0

    def to_row(self):
        return {"t": self.t, "delta_F": self.delta_F, "cap_area": self.cap_area, "ratio": self.ratio}


def cut_plane(u, rim, t, x, y):
    d = rim.direction
    return u.M - SQRT2 * t - (d[0] * (x - rim.x) + d[1] * (y - rim.y))


def cut_improvement(u, rim, t, base=None):
    """Resistance drop from replacing ``u`` by ``min(u, plane)``, where the
    plane has slope 1 towards ``rim.direction`` and sits ``t`` (measured
    along its unit normal) below the rim point.

    ``cap_area`` is the area of the plane piece under the graph, counted by
    cell centres. Pass ``base`` (the value of ``resistance(u)``) to skip
    recomputing it across a sweep.
    """
    vx, vy = u.domain.vertices.T
    low = cut_plane(u, rim, t, vx, vy).min()
    if low < 0:
        raise PlaneBelowBase(f"plane reaches {low:.3e} over the domain at t={t}")
    xx, yy = u.mesh
    plane = cut_plane(u, rim, t, xx, yy)
    below = u.mask & (plane < u.values)
    if not below.any():
        return CutImprovement(float(t), 0.0, 0.0)
    f0 = resistance(u).F_value if base is None else base
    f1 = resistance(u.with_values(np.minimum(u.values, plane))).F_value
    cap = SQRT2 * u.hx * u.hy * int(below.sum())
    return CutImprovement(float(t), f0 - f1, cap)


@dataclass
class ImprovementSweep:
    rows: list
    extrapolate: float
    fit_residual: float
    positive_found: bool

    def to_dict(self):
        return {
            "rows": [r.to_row() for r in self.rows],
            "extrapolate": self.extrapolate,
            "fit_residual": self.fit_residual,
            "positive_found": self.positive_found,
        }


def improvement_sweep(u, rim, ts, fit_points=None):
    """Cut at each ``t`` and extrapolate ``delta_F / cap_area`` to ``t = 0``.

    The extrapolate is the intercept of a least-squares line in ``t`` through
    the ``fit_points`` smallest cuts (all by default); the residual is the
    RMS misfit of that line.
    """
    base = resistance(u).F_value
    rows = [cut_improvement(u, rim, t, base=base) for t in sorted(ts, reverse=True)]
    used = [r for r in rows if r.cap_area > 0]
    if fit_points is not None:
        used = used[-fit_points:]
    tt = np.array([r.t for r in used])
    rr = np.array([r.ratio for r in used])
    if len(used) >= 2:
        coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(tt), tt]), rr, rcond=None)
        resid = float(np.sqrt(np.mean((coef[0] + coef[1] * tt - rr) ** 2)))
        intercept = float(coef[0])
    else:
        intercept, resid = (float(rr[0]) if len(rr) else 0.0), float("nan")
    return ImprovementSweep(rows, intercept, resid, any(r.delta_F > 0 for r in rows))


def plateau_pyramid(slope, M=1.0, base=0.2, n=512, half=1.0):
    """Square-based pyramid over ``[-half, half]^2`` with a vertical skirt of
    height ``base`` and the top cut flat at ``M``; returns the grid function
    and the midpoint of the plateau's right-hand edge as a rim point."""
    k = float(slope)
    dom = DomainSpec.square(half)
    rim_x = half - (M - base) / k
    if rim_x <= 0:
        raise DomainError("walls too shallow: the plateau is empty")

    def height(x, y):
        return np.minimum(M, base + k * (half - np.maximum(np.abs(x), np.abs(y))))

    return ConcaveGridFn.sample(dom, height, M, n), RimPoint(rim_x, 0.0, k)


def predicted_ratio_limit(slope):
    """``delta_F / cap_area`` as t -> 0 for a straight rim with wall slope ``slope``:
    the two-atom limit measure's drag minus the cut face's own drag."""
    k = float(slope)
    lam_top = (k - 1) / (SQRT2 * k)
    lam_wall = np.hypot(1, k) / (SQRT2 * k)
    return lam_top + lam_wall * (1 + k * k) ** -1.5 - 1 / (2 * SQRT2)


# ---------------------------------------------------------------------------
# inner ball


@dataclass
class InnerBallReport:
    holds: object  # True / False, or None when the check was skipped
    radius: float
    reason: str = ""

    def to_dict(self):
        return {"holds": self.holds, "radius": self.radius, "reason": self.reason}


def inner_ball_check(u, M0=None, slope_floor=1.0, slope_tol=1e-3):
    """Does ``{u = M}`` contain the disc of radius ``M0 - M`` concentric with
    the domain's largest inscribed disc?

    The claim presumes every wall slope is at least ``slope_floor``; that is
    checked first on cells whose whole 3x3 neighbourhood lies in the domain
    below the top (stencils there never straddle the rim or the border).
    """
    centre, r_in = u.domain.inscribed_disc()
    M0 = r_in if M0 is None else float(M0)
    radius = M0 - u.M
    if radius <= 0:
        return InnerBallReport(None, radius, "M >= M0: no disc to test")
    below = u.mask & (u.values < u.top_level)
    clean = below.copy()
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            clean &= np.roll(np.roll(below, dj, axis=0), di, axis=1)
    clean[[0, -1], :] = False
    clean[:, [0, -1]] = False
    grad = resistance(u).grad_norm
    if clean.any() and grad[clean].min() < slope_floor - slope_tol:
        return InnerBallReport(
            None, radius, f"wall slope {grad[clean].min():.6g} below {slope_floor}: precondition fails"
        )
    xx, yy = u.mesh
    inside = u.mask & (np.hypot(xx - centre[0], yy - centre[1]) <= radius)
    holds = bool(np.all(u.values[inside] >= u.top_level))
    return InnerBallReport(holds, radius, "" if holds else "a cell in the disc lies below the top")
