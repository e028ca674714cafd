"""Cuts near a ridge point and t -> 0 sweeps of the normalised cap measure."""
import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._accel import thread_cap
from .errors import BadFrame, DomainError, NoIntersection, RidgecutError, TinyCap
from .geometry import DEFAULT_TOL, Halfspace, classify_point, clip
from .measure import GreatArc, SphereMeasure, bl_distance, project_to_arc

_EPS = np.finfo(float).eps


def sine_law_weights(alpha, beta):
    """Coefficients of ``e`` in the basis ``(e1, e2)`` when ``e`` makes
    angles ``alpha`` and ``beta`` with them."""
    if not (0 < alpha < np.pi and 0 < beta < np.pi and alpha + beta < np.pi):
        raise DomainError(f"need alpha, beta in (0, pi) with alpha + beta < pi, got {alpha}, {beta}")
    s = np.sin(alpha + beta)
    return float(np.sin(beta) / s), float(np.sin(alpha) / s)


@dataclass(frozen=True)
class RidgeFrame:
    r0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e: np.ndarray
    lambda1: float
    lambda2: float
    arc: GreatArc = field(repr=False)
    angular_tol: float = 1e-9

    @classmethod
    def build(cls, r0, e1, e2, e=None, lambdas=None, angular_tol=1e-9):
        """Frame from the two face normals plus either the cut direction
        ``e`` or its coefficients ``lambdas``."""
        e1 = np.asarray(e1, dtype=float) / np.linalg.norm(e1)
        e2 = np.asarray(e2, dtype=float) / np.linalg.norm(e2)
        if np.arccos(np.clip(e1 @ e2, -1, 1)) < 1e-6 or np.arccos(np.clip(-e1 @ e2, -1, 1)) < 1e-6:
            raise DomainError("e1 and e2 must not be parallel")
        if (e is None) == (lambdas is None):
            raise DomainError("give exactly one of e and lambdas")
        if e is None:
            l1, l2 = map(float, lambdas)
            e = l1 * e1 + l2 * e2
            if abs(np.linalg.norm(e) - 1) > 1e-12:
                raise DomainError(f"lambda1 e1 + lambda2 e2 has norm {np.linalg.norm(e)}")
        else:
            e = np.asarray(e, dtype=float) / np.linalg.norm(e)
            basis = np.column_stack([e1, e2])
            (l1, l2), *_ = np.linalg.lstsq(basis, e, rcond=None)
            if np.linalg.norm(basis @ [l1, l2] - e) > 1e-12:
                raise DomainError("e is not in the plane of e1 and e2")
        if l1 <= 0 or l2 <= 0:
            raise DomainError("e must lie strictly inside the arc from e1 to e2")
        arc = GreatArc(e1, e2, center=e)
        return cls(np.asarray(r0, dtype=float), e1, e2, e, float(l1), float(l2), arc, angular_tol)

    @property
    def alpha(self):
        return self.arc.alpha

    @property
    def beta(self):
        return self.arc.beta

    @property
    def c0(self):
        return 1.0 / np.tan(self.alpha) + 1.0 / np.tan(self.beta)

    @property
    def area_ratio_bound(self):
        return float(np.sqrt(2.0) / np.sqrt(1.0 + self.e1 @ self.e2))

    def two_atom_limit(self):
        return SphereMeasure([self.e1, self.e2], [self.lambda1, self.lambda2])

    def to_dict(self):
        return {
            "r0": self.r0.tolist(), "e1": self.e1.tolist(), "e2": self.e2.tolist(),
            "e": self.e.tolist(), "lambda1": self.lambda1, "lambda2": self.lambda2,
            "alpha": self.alpha, "beta": self.beta, "c0": self.c0,
            "angular_tol": self.angular_tol,
        }


@dataclass
class CutResult:
    t: float
    cap_area: float
    nu_t: SphereMeasure
    st_area: float
    moment_residual: float
    n_faces: int = 0

    def to_row(self):
        return [self.t, self.cap_area, self.st_area, self.moment_residual, len(self.nu_t)]


def check_frame(body, frame, t=None, tol=DEFAULT_TOL):
    """Raise :class:`BadFrame` unless ``frame.r0`` is a ridge of ``body``
    with face normals ``e1`` and ``e2``.

    Incidence is decided at the resolution of the cut, ``tol * t``.
    """
    scale = body.diameter if t is None else min(t, body.diameter)
    cls = classify_point(body, frame.r0, tol=tol * scale, angular_tol=frame.angular_tol)
    if cls.kind != "ridge":
        raise BadFrame(f"r0 is not a ridge point: {cls}", cls)
    a, b = cls.normals
    match = max(frame.angular_tol, 1e-9)

    def close(u, v):
        return np.arccos(np.clip(u @ v, -1, 1)) <= match

    if not ((close(a, frame.e1) and close(b, frame.e2)) or (close(a, frame.e2) and close(b, frame.e1))):
        raise BadFrame(f"ridge normals {cls} differ from the frame's e1, e2", cls)
    return cls


def cut(body, frame, t, tol=DEFAULT_TOL, frame_check=True):
    """Keep the part of ``body`` with ``(r - r0) . e >= -t`` and return the
    surface measure of its curved part divided by the cap area."""
    if not t > 0:
        raise DomainError("t must be positive")
    if frame_check:
        check_frame(body, frame, t, tol)
    rel = body.vertices - frame.r0
    terms = rel * (-frame.e)
    signed = terms.sum(axis=1) - t
    snap = tol * t + 8 * _EPS * np.abs(terms).sum(axis=1)
    plane = Halfspace(-frame.e, t - frame.r0 @ frame.e)
    kept = clip(body, plane, tol=tol, snap=snap, signed=signed)
    if kept.cap_face is None:
        raise NoIntersection(f"the plane at t={t!r} leaves the whole body on the kept side")
    cap_area = float(kept.areas[kept.cap_face])
    if cap_area < tol * t * body.diameter:
        raise TinyCap(f"cap area {cap_area:.3e} is below tol * t * diameter at t={t!r}")
    others = np.ones(kept.n_faces, dtype=bool)
    others[kept.cap_face] = False
    weights = kept.areas[others] / cap_area
    normals = kept.normals[others]
    residual = float(np.linalg.norm(weights @ normals - frame.e))
    return CutResult(
        t=float(t),
        cap_area=cap_area,
        nu_t=SphereMeasure(normals, weights),
        st_area=float(kept.areas[others].sum()),
        moment_residual=residual,
        n_faces=int(kept.n_faces),
    )


def geometric_schedule(t0, ratio=0.5, count=14):
    if not (t0 > 0 and 0 < ratio < 1 and count >= 1):
        raise DomainError("schedule needs t0 > 0, 0 < ratio < 1, count >= 1")
    return [t0 * ratio**k for k in range(count)]


@dataclass
class SweepReport:
    cuts: list
    verdict: str
    candidates: list
    bl_steps: list
    limit_candidate: SphereMeasure = None
    witnesses: tuple = ()
    support_arc: object = None
    eta: float = 1e-3
    bl_to_candidate: list = field(default_factory=list)

    @property
    def ts(self):
        return [c.t for c in self.cuts]

    @property
    def max_moment_residual(self):
        return max(c.moment_residual for c in self.cuts)

    def to_dict(self):
        out = {
            "verdict": self.verdict,
            "eta": self.eta,
            "cuts": [
                {"t": c.t, "cap_area": c.cap_area, "st_area": c.st_area,
                 "moment_residual": c.moment_residual, "nu_t": c.nu_t.to_dict()}
                for c in self.cuts
            ],
            "bl_steps": list(self.bl_steps),
        }
        if self.limit_candidate is not None:
            out["limit_candidate"] = self.limit_candidate.to_dict()
        if self.witnesses:
            out["divergent"] = {"witnesses": [w.to_dict() for w in self.witnesses]}
        if self.support_arc is not None:
            out["support_arc"] = self.support_arc.to_dict()
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "cap_area", "st_area", "moment_residual", "n_atoms", "bl_to_candidate"])
            for c, d in zip(self.cuts, self.bl_to_candidate or [float("nan")] * len(self.cuts)):
                w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in c.to_row() + [d]])

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def convergence_verdict(steps, eta, window=3, decay=0.8):
    """Classify the tail of consecutive BL distances.

    ``converged`` when the last ``window`` steps are all at most ``eta``.
    ``divergent`` when they all exceed ``3 * eta`` and are not shrinking
    (the last is at least ``decay`` times the first), so a sequence that is
    still settling at a steady rate reads as ``unresolved`` instead.
    """
    if len(steps) < window:
        return "unresolved"
    tail = np.asarray(steps[-window:])
    if np.all(tail <= eta):
        return "converged"
    if np.all(tail > 3 * eta) and tail[-1] >= decay * tail[0]:
        return "divergent"
    return "unresolved"


def sweep(body, frame, ts=None, t0=None, ratio=0.5, count=14, tol=DEFAULT_TOL,
          eta=1e-3, cluster_width=0.01, arc_tol=None, workers=None):
    """Cut at each t (explicit list or geometric schedule) and judge whether
    the clustered cap measures settle."""
    if ts is None:
        ts = geometric_schedule(0.1 * body.diameter if t0 is None else t0, ratio, count)
    ts = sorted({float(t) for t in ts}, reverse=True)
    check_frame(body, frame, ts[-1], tol)

    def one(t):
        try:
            return cut(body, frame, t, tol=tol, frame_check=False)
        except RidgecutError as err:
            raise type(err)(f"cut at t={t!r} failed: {err}") from err

    workers = workers or thread_cap()
    if workers > 1 and len(ts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cuts = list(pool.map(one, ts))
    else:
        cuts = [one(t) for t in ts]
    cuts.sort(key=lambda c: -c.t)

    candidates = [c.nu_t.clustered(cluster_width) for c in cuts]
    steps = [bl_distance(a, b) for a, b in zip(candidates[:-1], candidates[1:])]
    verdict = convergence_verdict(steps, eta)
    report = SweepReport(cuts=cuts, verdict=verdict, candidates=candidates,
                         bl_steps=steps, eta=eta)
    tol_arc = frame.angular_tol if arc_tol is None else arc_tol
    if verdict == "divergent":
        report.witnesses = (candidates[-2], candidates[-1])
    else:
        report.limit_candidate = candidates[-1]
        report.support_arc = project_to_arc(candidates[-1], frame.arc, max(tol_arc, cluster_width))
        report.bl_to_candidate = [bl_distance(c, candidates[-1]) for c in candidates]
    return report


def area_ratio_check(result, frame, margin=1e-9):
    """Compare ``|S_t| / |B_t|`` with the bound ``sqrt(2) / sqrt(1 + e1.e2)``."""
    ratio = result.st_area / result.cap_area
    bound = frame.area_ratio_bound
    return {"ratio": ratio, "bound": bound, "exceeds": bool(ratio > bound * (1 + margin))}
