"""Example bodies with known ridge limits, and the support-realisation
pipeline: support set -> generating function -> arc measure -> planar chain
-> extruded body, together with the closed-form limit it should produce.

Planar work happens in the (x, z) plane with the arc parameter phi standing
for the outward normal (sin phi, -cos phi); the edge with that normal runs
in direction (cos phi, sin phi).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import CapMiss, DomainError, EndpointMassMissing, N0NotInterior, NonConvexBrokenLine
from .geometry import ConvexPolytope, Halfspace, classify_point, clip, hull3, prism
from .measure import ArcMeasure, GreatArc, SphereMeasure
from .ridge import RidgeFrame

PHI_TOL = 1e-9


def arc_frame(alpha, beta, angular_tol=1e-9):
    """Ridge frame at the origin with e = (0, 0, -1) and the face normals at
    angles alpha and beta from it in the xz-plane."""
    e1 = np.array([-np.sin(alpha), 0.0, -np.cos(alpha)])
    e2 = np.array([np.sin(beta), 0.0, -np.cos(beta)])
    return RidgeFrame.build(np.zeros(3), e1, e2, e=[0.0, 0.0, -1.0], angular_tol=angular_tol)


def normal2(phi):
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.sin(phi), -np.cos(phi)], axis=-1)


def tangent2(phi):
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


def direction3(phi):
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.sin(phi), np.zeros_like(phi), -np.cos(phi)], axis=-1)


# ---------------------------------------------------------------------------
# example bodies
# ---------------------------------------------------------------------------

@dataclass
class ExampleBody:
    name: str
    body: ConvexPolytope
    frame: RidgeFrame
    ts: list = None
    targets: dict = field(default_factory=dict)


def tetrahedron():
    """Tetrahedron MNPQ cut near an interior point of its edge MN."""
    m, n = np.array([0.0, -1.0, 0.0]), np.array([0.0, 1.5, 0.0])
    p, q = np.array([-1.0, 0.3, -1.2]), np.array([1.1, -0.2, -0.9])
    body = hull3([m, n, p, q])
    e1 = np.array([-1.2, 0.0, 1.0]) / np.hypot(1.2, 1.0)
    e2 = np.array([0.9, 0.0, 1.1]) / np.hypot(0.9, 1.1)
    e = e1 + 1.3 * e2
    frame = RidgeFrame.build([0.0, 0.2, 0.0], e1, e2, e=e)
    return ExampleBody("tetrahedron", body, frame,
                       targets={"lambda1": frame.lambda1, "lambda2": frame.lambda2})


def cylinder(n=256, lambda1=0.6, height=1.0):
    """Polygonal cylinder x^2 + y^2 <= 1, 0 <= z <= height, cut near the
    midpoint of the bottom edge facing +x."""
    if n < 16:
        raise DomainError("cylinder needs n >= 16")
    if not 0 < lambda1 < 1:
        raise DomainError("lambda1 must be in (0, 1)")
    ang = (np.arange(n) + 0.5) * 2 * np.pi / n
    body = prism(np.column_stack([np.cos(ang), np.sin(ang)]), 0.0, height)
    lambda2 = np.sqrt(1 - lambda1**2)
    frame = RidgeFrame.build([np.cos(np.pi / n), 0.0, 0.0], [1, 0, 0], [0, 0, -1],
                             lambdas=[lambda1, lambda2])
    return ExampleBody(f"cylinder(n={n})", body, frame,
                       targets={"lambda1": lambda1, "lambda2": lambda2})


def wedge(n=256):
    """Polygonal cylinder y^2 + z^2 <= 1 (axis x) trimmed by |x| <= z + 1.

    One polygon vertex sits at (y, z) = (0, -1), so the ridge point
    (0, 0, -1) is a vertex of the polytope whose extra facet normals tilt
    by pi/n out of the arc plane; the frame tolerance covers that tilt.
    """
    if n < 16:
        raise DomainError("wedge needs n >= 16")
    theta = -np.pi / 2 + 2 * np.pi * np.arange(n) / n
    yz = np.column_stack([np.cos(theta), np.sin(theta)])
    # prism along x: build in (y, z, x) then permute to (x, y, z)
    along = prism(yz, -2.5, 2.5)
    v = along.vertices[:, [2, 0, 1]]
    base = ConvexPolytope.from_loops(v, [along.loop(f) for f in range(along.n_faces)],
                                     normals=along.normals[:, [2, 0, 1]])
    body = clip(base, Halfspace([1.0, 0.0, -1.0], 1.0 / 1.0))
    body = clip(body, Halfspace([-1.0, 0.0, -1.0], 1.0))
    s = 1 / np.sqrt(2)
    frame = RidgeFrame.build([0.0, 0.0, -1.0], [-s, 0, -s], [s, 0, -s], e=[0, 0, -1],
                             angular_tol=2 * np.pi / n)
    return ExampleBody(f"wedge(n={n})", body, frame, targets={
        "weights": (np.sqrt(2) / 3, np.sqrt(2) / 3, 1 / 3),
        "cap_coeff": 4 * np.sqrt(2), "side_coeff": 8 / 3,
    })


def oscillating_profile(a, b, i0=120, depth=12, x0=0.5, y0=0.5):
    """Vertices (y_i, x_i) of the broken line x = gamma(y), y > 0, with
    x_{i+1} = x_i / i and y_{i+1} = a y_i (i even) or b y_i (i odd)."""
    if not 0 < a < b < 1:
        raise DomainError("need 0 < a < b < 1")
    xs, ys = [float(x0)], [float(y0)]
    for i in range(i0, i0 + depth):
        xs.append(xs[-1] / i)
        ys.append(ys[-1] * (a if i % 2 == 0 else b))
    return np.array(ys), np.array(xs)


def oscillating(a=0.3, b=0.7, i0=120, depth=12, x0=0.5, y0=0.5):
    """Body {|x| <= z, gamma(y) <= z <= 1} whose cut measures at t = x_i
    alternate between two limits.

    The broken line is truncated after ``depth`` segments by one segment
    down to gamma = 0, so the ridge at the origin is an exact polytope edge.
    """
    ys, xs = oscillating_profile(a, b, i0, depth, x0, y0)
    last = i0 + depth
    y_flat = ys[-1] * (a if last % 2 == 0 else b)
    slope_first = (xs[0] - xs[1]) / (ys[0] - ys[1])
    y_top = ys[0] + (1.0 - xs[0]) / (2.0 * slope_first)
    # profile in (y, z), right half from the flat end upwards
    half = [(y_flat, 0.0)] + list(zip(ys[::-1], xs[::-1])) + [(y_top, 1.0)]
    half = np.array(half)
    slopes = np.diff(half[:, 1]) / np.diff(half[:, 0])
    if np.any(np.diff(half[:, 0]) <= 0) or np.any(np.diff(slopes) <= 0) or slopes[0] <= 0:
        raise NonConvexBrokenLine(f"profile is not convex for i0={i0}; increase i0")
    profile = np.vstack([half, (half * [-1, 1])[::-1]])  # CCW in (y, z)

    verts, index = [], {}

    def vid(x, y, z):
        key = (x, y, z)
        if key not in index:
            index[key] = len(verts)
            verts.append(key)
        return index[key]

    loops, normals = [], []
    s = 1 / np.sqrt(2)
    right = [vid(z, y, z) for y, z in profile]
    left = [vid(-z, y, z) for y, z in profile]
    loops += [right, left[::-1]]
    normals += [[s, 0, -s], [-s, 0, -s]]
    k = len(profile)
    for i in range(k):
        (ya, za), (yb, zb) = profile[i], profile[(i + 1) % k]
        if za == 0.0 and zb == 0.0:
            continue  # the ridge edge itself
        if za == 1.0 and zb == 1.0:
            loops.append([vid(-1.0, ya, 1.0), vid(1.0, ya, 1.0), vid(1.0, yb, 1.0), vid(-1.0, yb, 1.0)])
            normals.append([0, 0, 1])
            continue
        ring = [vid(-za, ya, za), vid(za, ya, za), vid(zb, yb, zb), vid(-zb, yb, zb)]
        ring = [r for j, r in enumerate(ring) if r not in ring[:j]]
        dy, dz = yb - ya, zb - za
        nrm = np.array([0.0, dz, -dy])
        loops.append(ring)
        normals.append(nrm / np.linalg.norm(nrm))
    verts = np.array(verts)
    loops = _orient(verts, loops, np.array(normals, dtype=float))
    body = ConvexPolytope.from_loops(verts, loops, normals=np.array(normals, dtype=float))
    frame = RidgeFrame.build([0.0, 0.0, 0.0], [-s, 0, -s], [s, 0, -s], e=[0, 0, -1])
    ts = [float(x) for x in xs[:depth]]
    parity = [(i0 + j) % 2 for j in range(depth)]

    def limit(c):
        return ((1 + c) / (2 * np.sqrt(2)), (1 + c) / (2 * np.sqrt(2)), (1 - c) / 2)

    return ExampleBody(f"oscillating(a={a}, b={b})", body, frame, ts=ts, targets={
        "even": limit(a), "odd": limit(b), "parity": parity,
    })


def triangular_prism(alpha=0.7, beta=1.1, half_length=1.0):
    """Prism over a triangle in the xz-plane; its bottom edge is a segment of
    ridge points, the case where the two-atom limit always holds."""
    tri = np.array([[0.0, 0.0], [1.0 / np.tan(beta), 1.0], [-1.0 / np.tan(alpha), 1.0]])
    along = prism(tri, -half_length, half_length)  # built in (x, z, y)
    v = along.vertices[:, [0, 2, 1]]
    loops = [along.loop(f)[::-1] for f in range(along.n_faces)]  # permutation flips handedness
    body = ConvexPolytope.from_loops(v, loops)
    frame = arc_frame(alpha, beta)
    return ExampleBody("triangular prism", body, frame,
                       targets={"lambda1": frame.lambda1, "lambda2": frame.lambda2})


def cube_edge():
    from .geometry import box
    s = 1 / np.sqrt(2)
    body = box([0, 0, 0], [1, 1, 1])
    frame = RidgeFrame.build([0.5, 0.0, 0.0], [0, -1, 0], [0, 0, -1], lambdas=[s, s])
    return ExampleBody("cube edge", body, frame, targets={"lambda1": s, "lambda2": s})


def build_example(which, **params):
    builders = {
        "tetrahedron": tetrahedron, "cylinder": cylinder, "wedge": wedge,
        "oscillating": oscillating, "prism": triangular_prism, "cube": cube_edge,
        1: tetrahedron, 2: cylinder, 3: wedge, 4: oscillating,
    }
    if which not in builders:
        raise DomainError(f"unknown example {which!r}")
    return builders[which](**params)


def _orient(verts, loops, normals):
    """Reverse loops whose vector area disagrees with the given normal."""
    out = []
    for loop, n in zip(loops, normals):
        p = verts[loop] - verts[loop[0]]
        vec = np.cross(p[1:-1], p[2:]).sum(axis=0)
        out.append(loop if vec @ n >= 0 else loop[::-1])
    return out


# ---------------------------------------------------------------------------
# support sets and generating functions
# ---------------------------------------------------------------------------

@dataclass
class SupportSpec:
    """Closed subset of [-alpha, beta] given as a union of closed intervals."""

    alpha: float
    beta: float
    intervals: list

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (a > 0 and b > 0 and a + b < np.pi):
            raise DomainError("need alpha, beta > 0 with alpha + beta < pi")
        iv = sorted((float(lo), float(hi)) for lo, hi in self.intervals)
        merged = []
        for lo, hi in iv:
            if hi < lo:
                raise DomainError(f"interval [{lo}, {hi}] is reversed")
            if lo < -a - PHI_TOL or hi > b + PHI_TOL:
                raise DomainError(f"interval [{lo}, {hi}] leaves [-alpha, beta]")
            lo, hi = max(lo, -a), min(hi, b)
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        if not merged or merged[0][0] > -a + PHI_TOL or merged[-1][1] < b - PHI_TOL:
            raise DomainError("the support must contain both arc endpoints")
        merged[0] = (-a, merged[0][1])
        merged[-1] = (merged[-1][0], b)
        self.alpha, self.beta, self.intervals = a, b, merged

    @property
    def gaps(self):
        return [(self.intervals[i][1], self.intervals[i + 1][0]) for i in range(len(self.intervals) - 1)]

    def to_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "intervals": [list(iv) for iv in self.intervals]}

    @classmethod
    def from_dict(cls, data):
        return cls(data["alpha"], data["beta"], data["intervals"])


@dataclass
class GeneratingFn:
    """Right-continuous distribution function of a measure supported on K.

    Slope 1 on each component of K, constant alpha + (gap midpoint) on each
    gap, so F(-alpha-) = 0 and F(beta) = alpha + beta.
    """

    support: SupportSpec

    @property
    def alpha(self):
        return self.support.alpha

    @property
    def beta(self):
        return self.support.beta

    @property
    def total(self):
        return self.alpha + self.beta

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        g = phi.copy()
        for lo, hi in self.support.gaps:
            inside = (phi >= lo) & (phi < hi)
            g = np.where(inside, 0.5 * (lo + hi), g)
        return self.alpha + g

    def left_limit(self, phi):
        phi = np.asarray(phi, dtype=float)
        g = phi.copy()
        for lo, hi in self.support.gaps:
            inside = (phi > lo) & (phi <= hi)
            g = np.where(inside, 0.5 * (lo + hi), g)
        return np.where(phi <= -self.alpha, 0.0, self.alpha + g)

    def jumps(self):
        """Atoms ``(phi, size)`` of the measure, sorted by phi."""
        out = {}
        for lo, hi in self.support.gaps:
            half = 0.5 * (hi - lo)
            out[lo] = out.get(lo, 0.0) + half
            out[hi] = out.get(hi, 0.0) + half
        return sorted(out.items())

    @property
    def breakpoints(self):
        pts = sorted({p for iv in self.support.intervals for p in iv})
        return [(float(p), float(self(p))) for p in pts]


def generating_function(support):
    return GeneratingFn(support)


def discretize_measure(fn, n_atoms=64, center_arc=None):
    """Atomic approximation of the measure with distribution ``fn``.

    Jumps become exact atoms. Each component of K of positive length is cut
    into equal cells whose mass sits at the cell midpoint; if an arc
    endpoint carries no jump, the mass of its adjacent cell is moved onto
    the endpoint so the chain construction has both endpoint edges.
    """
    if n_atoms < 3:
        raise DomainError("n_atoms must be at least 3")
    alpha, beta = fn.alpha, fn.beta
    jumps = fn.jumps()
    phis = [p for p, _ in jumps]
    weights = [w for _, w in jumps]
    comps = [(lo, hi) for lo, hi in fn.support.intervals if hi > lo]
    total_len = sum(hi - lo for lo, hi in comps)
    budget = max(n_atoms - len(jumps), len(comps))
    for lo, hi in comps:
        k = max(1, int(round(budget * (hi - lo) / total_len)))
        edges = np.linspace(lo, hi, k + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        w = np.diff(edges)
        if lo == -alpha and not any(abs(p + alpha) < PHI_TOL for p, _ in jumps):
            mids[0] = -alpha
        if hi == beta and not any(abs(p - beta) < PHI_TOL for p, _ in jumps):
            mids[-1] = beta
        phis.extend(mids.tolist())
        weights.extend(w.tolist())
    phis, weights = np.array(phis), np.array(weights)
    order = np.argsort(phis, kind="stable")
    phis, weights = phis[order], weights[order]
    # merge coincident parameters (a jump at a component endpoint and a cell)
    keep = np.concatenate([[True], np.diff(phis) > 1e-15])
    groups = np.cumsum(keep) - 1
    w = np.bincount(groups, weights=weights)
    arc = center_arc or arc_frame(alpha, beta).arc
    return ArcMeasure(phis[keep], w, arc)


# ---------------------------------------------------------------------------
# planar chain
# ---------------------------------------------------------------------------

@dataclass
class PlanarChain:
    """Convex polygonal curve from the left ray to the right ray of the
    angle -z cot(alpha) <= x <= z cot(beta)."""

    vertices: np.ndarray  # (n + 1, 2) points (x, z)
    phis: np.ndarray      # (n,) normal parameter of each edge
    lengths: np.ndarray   # (n,) edge lengths
    alpha: float
    beta: float
    c0: float = 0.0
    n0: np.ndarray = None

    @property
    def z_leave_left(self):
        return float(self.vertices[1, 1])

    @property
    def z_leave_right(self):
        return float(self.vertices[-2, 1])

    @property
    def inner(self):
        """Vertices from where the chain leaves the left ray to where it
        meets the right ray."""
        return self.vertices[1:-1]

    @property
    def z_min(self):
        return float(self.inner[:, 1].min())

    def induced_measure(self):
        """Edge normals and lengths, recomputed from the vertex coordinates."""
        d = np.diff(self.vertices, axis=0)
        lengths = np.hypot(d[:, 0], d[:, 1])
        phis = np.arctan2(d[:, 1], d[:, 0])
        return phis, lengths

    def is_convex(self, tol=1e-12):
        d = np.diff(self.vertices, axis=0)
        cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
        scale = np.linalg.norm(d, axis=1)
        return bool(np.all(cross >= -tol * scale[:-1] * scale[1:]))

    def in_angle(self, tol=1e-9):
        x, z = self.vertices[:, 0], self.vertices[:, 1]
        return bool(np.all(x >= -z / np.tan(self.alpha) - tol) and np.all(x <= z / np.tan(self.beta) + tol))

    def scaled(self, rho):
        return PlanarChain(self.vertices * rho, self.phis, self.lengths * rho,
                           self.alpha, self.beta, self.c0 * rho, self.n0)

    def to_dict(self):
        return {"alpha": self.alpha, "beta": self.beta,
                "points": self.vertices.tolist(), "phis": self.phis.tolist(),
                "lengths": self.lengths.tolist()}


def planar_chain(mu):
    """Polygon chain whose edge normals and lengths are the atoms of ``mu``.

    The chain starts at A on the left ray and ends at D on the right ray;
    A and D are placed so that the segment AD closes the polygon with
    normal -n0, where c0 n0 is the first moment of ``mu``.
    """
    alpha, beta = mu.arc.alpha, mu.arc.beta
    phis, w = np.asarray(mu.phis, dtype=float), np.asarray(mu.weights, dtype=float)
    if len(phis) == 0 or abs(phis[0] + alpha) > PHI_TOL or abs(phis[-1] - beta) > PHI_TOL:
        raise EndpointMassMissing("the measure needs atoms at both arc endpoints")
    phis = phis.copy()
    phis[0], phis[-1] = -alpha, beta
    moment = w @ normal2(phis)
    c0 = float(np.hypot(*moment))
    n0 = moment / c0
    psi = np.arctan2(n0[0], -n0[1])
    if not (-alpha < psi < beta):
        raise N0NotInterior(f"moment direction {psi} is not inside (-alpha, beta)")
    e1 = normal2(-alpha)
    e2 = normal2(beta)
    mu1, mu2 = np.linalg.solve(np.column_stack([e1, e2]), n0)
    start = mu1 * c0 * np.array([-np.cos(alpha), np.sin(alpha)])
    end = mu2 * c0 * np.array([np.cos(beta), np.sin(beta)])
    steps = w[:, None] * tangent2(phis)
    pts = np.vstack([start, start + np.cumsum(steps, axis=0)])
    gap = np.linalg.norm(pts[-1] - end)
    if gap > 1e-9 * max(1.0, c0):
        raise AssertionError(f"chain failed to close: gap {gap}")
    pts[-1] = end
    return PlanarChain(pts, phis, w.copy(), float(alpha), float(beta), c0, n0)


# ---------------------------------------------------------------------------
# extrusion
# ---------------------------------------------------------------------------

def _slice_polygon(chain, y):
    """Section of the body at height y, CCW in (x, z)."""
    cot_a, cot_b = 1 / np.tan(chain.alpha), 1 / np.tan(chain.beta)
    top_l, top_r = np.array([-cot_a, 1.0]), np.array([cot_b, 1.0])
    if y == 0.0:
        return np.array([top_r, top_l, [0.0, 0.0]])
    pts = y * y * chain.inner
    high = max(1.0, pts[:, 1].max()) + 1.0
    ring = np.vstack([[-cot_a * high, high], pts, [cot_b * high, high]])
    # clip the closed ring by z <= 1
    out = []
    m = len(ring)
    for i in range(m):
        p, q = ring[i], ring[(i + 1) % m]
        sp, sq = p[1] - 1.0, q[1] - 1.0
        if sp <= 0:
            out.append(p)
        if sp * sq < 0:
            out.append(p + sp / (sp - sq) * (q - p))
    out = np.array(out)
    # start at the top-right corner so the top edge comes first
    keep = np.ones(len(out), dtype=bool)
    d = np.linalg.norm(np.diff(np.vstack([out, out[:1]]), axis=0), axis=1)
    keep[1:] = d[:-1] > 1e-13
    out = out[keep]
    top = np.nonzero(np.isclose(out[:, 1], 1.0, rtol=0, atol=1e-15))[0]
    right_top = top[np.argmax(out[top, 0])]
    return np.roll(out, -right_top, axis=0)


def _edge_angles(poly):
    d = np.diff(np.vstack([poly, poly[:1]]), axis=0)
    ang = np.arctan2(-d[:, 0], d[:, 1])  # outward normal (dz, -dx)
    return np.mod(ang - np.pi / 2, 2 * np.pi)


def _loft(p, q, ip, iq, angle_tol=1e-9):
    """Side faces between two convex slices, each starting at the start of
    its top edge; indices ``ip``/``iq`` are global vertex ids."""
    ap, aq = _edge_angles(p), _edge_angles(q)
    ap[0] = aq[0] = 0.0
    faces = []
    i = j = 0
    np_, nq = len(p), len(q)
    while i < np_ or j < nq:
        a = ap[i] if i < np_ else np.inf
        b = aq[j] if j < nq else np.inf
        if abs(a - b) <= angle_tol:
            faces.append([ip[i], ip[(i + 1) % np_], iq[(j + 1) % nq], iq[j]])
            i += 1
            j += 1
        elif a < b:
            faces.append([ip[i], ip[(i + 1) % np_], iq[j % nq]])
            i += 1
        else:
            faces.append([iq[(j + 1) % nq], iq[j], ip[i % np_]])
            j += 1
    return faces


def y_grid(slices, y_max, y_min_ratio=1e-4):
    if slices < 8 or slices % 2:
        raise DomainError("slices must be an even integer >= 8")
    half = np.geomspace(y_min_ratio * y_max, y_max, slices // 2)
    return np.concatenate([-half[::-1], [0.0], half])


def extrude(chain, slices=64, y_min_ratio=1e-4, y_max_factor=0.999):
    """Polytope approximating {(x, y, z) : (x, z) in y^2 B, z <= 1}, where B
    is the region above the chain, by lofting convex y-slices."""
    z_min = chain.z_min
    if not z_min > 1e-12:
        raise CapMiss("the chain touches the apex, so the extrusion is unbounded")
    y_max = y_max_factor / np.sqrt(z_min)
    ys = y_grid(slices, y_max, y_min_ratio)
    polys = [_slice_polygon(chain, y) for y in ys]
    verts, ids = [], []
    base = 0
    for y, poly in zip(ys, polys):
        verts.append(np.column_stack([poly[:, 0], np.full(len(poly), y), poly[:, 1]]))
        ids.append(np.arange(base, base + len(poly)))
        base += len(poly)
    verts = np.vstack(verts)
    loops = []
    for k in range(len(ys) - 1):
        loops += _loft(polys[k], polys[k + 1], ids[k], ids[k + 1])
    loops.append(ids[0][::-1].tolist())
    loops.append(ids[-1].tolist())
    interior = np.array([0.0, 0.0, 0.5])
    fixed = []
    for loop in loops:
        p = verts[loop]
        vec = np.cross(p[1:-1] - p[0], p[2:] - p[0]).sum(axis=0)
        fixed.append(loop if vec @ (p.mean(axis=0) - interior) >= 0 else loop[::-1])
    body = ConvexPolytope.from_loops(verts, fixed)
    apex = int(np.nonzero(np.all(verts == 0.0, axis=1))[0][0])
    touching = np.unique(body.face_of_position[body.loop_idx == apex])
    tilt = float(np.max(np.abs(np.arcsin(np.clip(body.normals[touching, 1], -1, 1)))))
    frame = arc_frame(chain.alpha, chain.beta, angular_tol=max(1.5 * tilt, 1e-9))
    return body, frame


# ---------------------------------------------------------------------------
# predicted limit
# ---------------------------------------------------------------------------

def _branches(chain):
    inner = chain.inner
    z = inner[:, 1]
    lo_first = int(np.argmin(z))
    lo_last = len(z) - 1 - int(np.argmin(z[::-1]))
    left = inner[: lo_first + 1][::-1]  # increasing z
    right = inner[lo_last:]             # increasing z
    return left, right


def width_function(chain):
    """Width L(tau) of the region above the chain at height tau, plus the
    lengths L-(tau), L+(tau) of its boundary on the left and right rays."""
    left, right = _branches(chain)
    cot_a, cot_b = 1 / np.tan(chain.alpha), 1 / np.tan(chain.beta)
    z_min = chain.z_min
    zl, zr = chain.z_leave_left, chain.z_leave_right

    def width(tau):
        tau = np.asarray(tau, dtype=float)
        xl = np.where(tau >= zl, -tau * cot_a, np.interp(tau, left[:, 1], left[:, 0]))
        xr = np.where(tau >= zr, tau * cot_b, np.interp(tau, right[:, 1], right[:, 0]))
        return np.where(tau >= z_min, xr - xl, 0.0)

    def minus(tau):
        return np.maximum(0.0, np.asarray(tau, dtype=float) - zl) / np.sin(chain.alpha)

    def plus(tau):
        return np.maximum(0.0, np.asarray(tau, dtype=float) - zr) / np.sin(chain.beta)

    return width, minus, plus


def _xi_integral(fn, heights, z_floor):
    """2 * int_0^inf xi^2 fn(1 / xi^2) dxi for fn vanishing below z_floor."""
    xi_max = 1 / np.sqrt(z_floor)
    pts = sorted({float(1 / np.sqrt(h)) for h in heights if h > z_floor})

    def integrand(xi):
        return xi * xi * float(fn(1.0 / (xi * xi))) if xi > 0 else 0.0

    val, _ = quad(integrand, 0.0, xi_max, points=pts or None, limit=400,
                  epsabs=0.0, epsrel=1e-11)
    return 2.0 * val


def predicted_coefficients(chain):
    """Coefficients (b, s_minus, s_plus) with |B_t| = b t^1.5 and the two
    planar side pieces of area s_-+ t^1.5."""
    width, minus, plus = width_function(chain)
    heights = chain.vertices[:, 1]
    b = _xi_integral(width, heights, chain.z_min)
    s_minus = _xi_integral(minus, heights, chain.z_leave_left)
    s_plus = _xi_integral(plus, heights, chain.z_leave_right)
    return b, s_minus, s_plus


def interior_edge_weights(chain, b):
    """Limit weight of each edge strictly between the two rays."""
    pts = chain.vertices[1:-1]
    za, zb = pts[:-1, 1], pts[1:, 1]
    ell = chain.lengths[1:-1]
    flat = np.isclose(za, zb, rtol=1e-12, atol=0)
    safe = np.where(flat, 1.0, zb - za)
    slanted = 2 * ell * (za ** -0.5 - zb ** -0.5) / safe
    integral = np.where(flat, ell * za ** -1.5, slanted)
    return chain.phis[1:-1], 2.0 / (3.0 * b) * integral


def predicted_limit(chain):
    b, s_minus, s_plus = predicted_coefficients(chain)
    phis, w = interior_edge_weights(chain, b)
    dirs = np.vstack([direction3(-chain.alpha), direction3(chain.beta), direction3(phis).reshape(-1, 3)])
    weights = np.concatenate([[s_minus / b, s_plus / b], w])
    return SphereMeasure(dirs, weights)
