"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Runtimes are measured after a warm-up that compiles the numba kernels and
loads the transport solver, so they time the computation itself.
"""
import time

import numpy as np
import pytest

from ridgecut.constructions import (
    SupportSpec,
    arc_frame,
    build_example,
    planar_chain,
)
from ridgecut.measure import ArcMeasure, SphereMeasure, bl_distance
from ridgecut.newton import (
    DomainSpec,
    Roof,
    improvement_sweep,
    min_measure_search,
    plateau_pyramid,
    resistance,
    resistance_surface,
    solve_2d,
)
from ridgecut.reproduce import run_construction, run_example
from ridgecut.ridge import cut, sine_law_weights, sweep

from .conftest import record_criterion

QUARTER = 1 / (2 * np.sqrt(2))


@pytest.fixture(scope="module", autouse=True)
def warm_up():
    ex = build_example("cube")
    cut(ex.body, ex.frame, 0.1)
    bl_distance(SphereMeasure([[0, 0, 1]], [1.0]), SphereMeasure([[0, 1, 0]], [1.0]))
    u, _ = plateau_pyramid(2.0, n=16)
    resistance(u)


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def report(number, ok, detail, seconds, limit):
    ok = bool(ok) and seconds < limit
    record_criterion(number, ok, f"{detail}; {seconds:.2f} s (limit {limit} s)")
    return ok


def test_criterion_01_moment_identity():
    with Clock() as clk:
        worst = {}
        for name in ("tetrahedron", "cube"):
            ex = build_example(name)
            rep = sweep(ex.body, ex.frame, count=14)
            assert len(rep.cuts) == 14
            worst[name] = max(np.linalg.norm(c.nu_t.moment() - ex.frame.e) for c in rep.cuts)
    ok = all(v <= 1e-9 for v in worst.values())
    detail = ", ".join(f"{k} max |moment - e| = {v:.2e}" for k, v in worst.items())
    assert report(1, ok, detail, clk.seconds, 1.0)


def test_criterion_02_example1_two_atom_limit():
    with Clock() as clk:
        ex = build_example(1)
        rep = sweep(ex.body, ex.frame)
        fr = ex.frame
        l1, l2 = sine_law_weights(fr.alpha, fr.beta)
        target = SphereMeasure([fr.e1, fr.e2], [l1, l2])
        dist = bl_distance(rep.limit_candidate, target)
    ok = rep.verdict == "converged" and dist <= 1e-3
    detail = f"verdict {rep.verdict}, lambdas ({l1:.6f}, {l2:.6f}), BL = {dist:.2e}"
    assert report(2, ok, detail, clk.seconds, 1.0)


def test_criterion_03_example2_cylinder():
    with Clock() as clk:
        _, rep, comps = run_example(2, n=4096, lambda1=0.6)
    w = {c.name: c for c in comps}
    ok = all(w[k].passed and w[k].tolerance <= 1e-2 for k in ("lambda1", "lambda2"))
    detail = f"weights ({w['lambda1'].measured:.6f}, {w['lambda2'].measured:.6f}) vs (0.6, 0.8)"
    assert report(3, ok, detail, clk.seconds, 30.0)


def test_criterion_04_example3_wedge():
    with Clock() as clk:
        _, rep, comps = run_example(3, t=1e-3, n=2048)
    assert rep.cuts[-1].t == pytest.approx(1e-3)
    ok = len(comps) == 6 and all(c.passed and c.tolerance <= 2e-2 for c in comps)
    detail = ", ".join(f"{c.name} {c.measured:.5f} ({100 * c.error:.2f}%)" for c in comps)
    assert report(4, ok, detail, clk.seconds, 30.0)


def test_criterion_05_example4_divergent():
    with Clock() as clk:
        _, rep, comps = run_example(4, a=0.3, b=0.7, depth=12)
    weights = [c for c in comps if "weight" in c.name]
    worst = max(c.error for c in weights)
    ok = rep.verdict == "divergent" and len(rep.witnesses) == 2 and all(c.passed for c in comps)
    detail = f"verdict {rep.verdict}, {len(weights)} weights, worst relative error {100 * worst:.2f}%"
    assert report(5, ok, detail, clk.seconds, 60.0)


def test_criterion_06_support_realization():
    a = b = np.pi / 4
    spec = SupportSpec(a, b, [[-a, -a], [0, b / 2], [b, b]])
    with Clock() as clk:
        runs = {s: run_construction(spec, slices=s) for s in (128, 256)}
    bl = {s: r.comparisons[0].measured for s, r in runs.items()}
    off = runs[128].comparisons[1].measured
    ok = bl[128] <= 0.05 and off <= 0.01 and bl[256] < bl[128]
    detail = f"BL(128) = {bl[128]:.4f}, BL(256) = {bl[256]:.4f}, off-K mass {100 * off:.2f}%"
    assert report(6, ok, detail, clk.seconds, 120.0)


def test_criterion_07_chain_round_trip():
    rng = np.random.default_rng(7)
    worst = 0.0
    with Clock() as clk:
        for _ in range(50):
            alpha, beta = rng.uniform(0.2, 1.4, size=2)
            inner = np.sort(rng.uniform(-alpha, beta, size=rng.integers(0, 12)))
            phis = np.concatenate([[-alpha], inner, [beta]])
            w = rng.uniform(0.05, 2.0, size=len(phis))
            mu = ArcMeasure(phis, w, arc_frame(alpha, beta).arc)
            got_phi, got_w = planar_chain(mu).induced_measure()
            worst = max(worst, np.abs(got_phi - phis).max(), np.abs(got_w - w).max())
    ok = worst <= 1e-12
    assert report(7, ok, f"50 random measures, worst deviation {worst:.2e}", clk.seconds, 1.0)


def test_criterion_08_measure_minimum():
    with Clock() as clk:
        three = min_measure_search(3)
        fine = min_measure_search(91)
        no_quarter = min_measure_search(90)
    assert np.isclose(fine.grid, np.pi / 4).any() and not np.isclose(no_quarter.grid, np.pi / 4).any()
    ok = (
        abs(three.value - QUARTER) <= 1e-9
        and three.unique
        and len(three.angles) == 1 and abs(three.angles[0] - np.pi / 4) < 1e-15
        and abs(three.weights[0] - 1) < 1e-12
        and abs(fine.value - QUARTER) <= 1e-9
        and no_quarter.value > QUARTER + 1e-9
    )
    detail = (f"grid 3: {three.value:.12f}, grid 91: {fine.value:.12f}, "
              f"grid 90: {no_quarter.value:.12f}")
    assert report(8, ok, detail, clk.seconds, 1.0)


def test_criterion_09_two_dimensional_solutions():
    n = 10**6
    x = (np.arange(n) + 0.5) / n
    h = 1.0 / n
    worst_closed, worst_quad = 0.0, 0.0
    with Clock() as clk:
        for M in (0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 5.0):
            sol = solve_2d(M)
            closed = 1 - M / 2 if M < 1 else 1 / (1 + M * M)
            worst_closed = max(worst_closed, abs(sol.F_value - closed))
            slope = (sol(x + h / 2) - sol(x - h / 2)) / h
            worst_quad = max(worst_quad, abs(np.mean(1 / (1 + slope**2)) - sol.F_value))
    ok = worst_closed <= 1e-12 and worst_quad <= 1e-6
    detail = f"closed form {worst_closed:.1e}, midpoint quadrature {worst_quad:.1e}"
    assert report(9, ok, detail, clk.seconds, 5.0)


def test_criterion_10_cut_improvement():
    ts = [0.1 * 0.8**i for i in range(10)]
    with Clock() as clk:
        steep = improvement_sweep(*plateau_pyramid(2.0, n=512), ts)
        flat = improvement_sweep(*plateau_pyramid(1.0, n=512), ts)
    tail = [r.ratio for r in steep.rows[-4:]]
    ok = (
        steep.positive_found
        and steep.extrapolate > 0
        and steep.fit_residual < 0.25 * steep.extrapolate
        and min(tail) > 0
        and abs(flat.extrapolate) <= 0.02
    )
    detail = (f"k=2 extrapolate {steep.extrapolate:.4f} (fit rms {steep.fit_residual:.1e}), "
              f"k=1 extrapolate {flat.extrapolate:.4f}")
    assert report(10, ok, detail, clk.seconds, 60.0)


CROSS_FORM_ROOFS = {
    "ridge tent": Roof(((1.0, 0.0, 1.0), (-1.0, 0.0, 1.0)), 0.8),
    "flat-top pyramid": Roof(((2, 0, 2.2), (-2, 0, 2.2), (0, 2, 2.2), (0, -2, 2.2)), 1.0),
    "skew roof": Roof(((-0.5, -0.3, 1.0), (0.7, 0.2, 1.2), (0.1, -1.5, 2.0)), 1.5),
}


def test_criterion_11_cross_form_consistency():
    dom = DomainSpec.square(1.0)
    gaps = {}
    with Clock() as clk:
        for name, roof in CROSS_FORM_ROOFS.items():
            grid_f = resistance(roof.grid(dom, 256)).F_value
            gaps[name] = abs(grid_f - resistance_surface(roof.body(dom), dom.area))
    ok = all(g <= 1e-2 for g in gaps.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in gaps.items())
    assert report(11, ok, detail, clk.seconds, 30.0)
