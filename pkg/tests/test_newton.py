import numpy as np
import pytest

from ridgecut.errors import DomainError, Infeasible, PlaneBelowBase, Unbounded
from ridgecut.lp import simplex
from ridgecut.newton import (
    ConcaveGridFn,
    DomainSpec,
    RimPoint,
    Roof,
    cut_improvement,
    improvement_sweep,
    inner_ball_check,
    min_measure_search,
    plateau_pyramid,
    predicted_ratio_limit,
    resistance,
    resistance_surface,
    solve_2d,
)

UNIT = DomainSpec.square(0.5)


# --- domains and grid functions ---------------------------------------------

def test_domain_basics():
    d = DomainSpec([[1, 1], [-1, 1], [-1, -1], [1, -1]])
    assert d.area == pytest.approx(4.0)
    centre, r = d.inscribed_disc()
    assert np.allclose(centre, 0, atol=1e-9) and r == pytest.approx(1.0)
    assert d.contains(0.99, 0.0) and not d.contains(1.01, 0.0)
    with pytest.raises(DomainError):
        DomainSpec([[0, 0], [1, 0], [0.2, 0.2], [0, 1]])
    with pytest.raises(DomainError):
        DomainSpec([[0, 0], [1, 0], [2, 0]])


def test_grid_rejects_bad_functions():
    with pytest.raises(DomainError, match="concav"):
        ConcaveGridFn.sample(UNIT, lambda x, y: 0.1 + x * x, 1.0, 32)
    with pytest.raises(DomainError):
        ConcaveGridFn.sample(UNIT, lambda x, y: 0 * x + 1.5, 1.0, 32)
    with pytest.raises(DomainError):
        ConcaveGridFn.sample(UNIT, lambda x, y: 0 * x, -1.0, 32)


def test_grid_json_round_trip(tmp_path):
    u = ConcaveGridFn.sample(UNIT, lambda x, y: 1 - x * x - y * y, 1.0, 33, 17)
    u.save(tmp_path / "u.json")
    back = ConcaveGridFn.load(tmp_path / "u.json")
    assert np.array_equal(back.values, u.values)
    assert back.M == u.M and back.shape == (17, 33)


# --- resistance ---------------------------------------------------------------

def test_resistance_of_flat_top_is_domain_area():
    u = ConcaveGridFn.sample(UNIT, lambda x, y: 0 * x + 0.7, 1.0, 64)
    assert resistance(u).F_value == pytest.approx(1.0, abs=1e-14)


def test_resistance_of_ramp():
    u = ConcaveGridFn.sample(UNIT, lambda x, y: 2 * (0.5 - x), 2.0, 256)
    assert resistance(u).F_value == pytest.approx(0.2, abs=1e-9)


def test_resistance_of_cone_is_half_disc_area():
    d = DomainSpec.regular(256, 1.0)
    u = ConcaveGridFn.sample(d, lambda x, y: np.maximum(0, 1 - np.hypot(x, y)), 1.0, 512)
    assert resistance(u).F_value == pytest.approx(np.pi / 2, rel=1e-3)


def test_resistance_invariant_under_shift_and_bounded_by_area():
    f = lambda x, y: 0.5 - 0.8 * (x * x + y * y)
    u = ConcaveGridFn.sample(UNIT, f, 1.0, 128)
    v = ConcaveGridFn.sample(UNIT, lambda x, y: f(x, y) + 0.3, 1.0, 128)
    assert resistance(u).F_value == pytest.approx(resistance(v).F_value, abs=1e-14)
    assert resistance(u).F_value <= UNIT.area


def test_surface_form_examples():
    assert resistance_surface(Roof((), 0.7).body(UNIT), UNIT.area) == pytest.approx(1.0)
    ramp = Roof(((1.0, 0.0, 0.5),), 0.5)  # flat on x >= 0, 45 degrees on x < 0
    assert resistance_surface(ramp.body(UNIT), UNIT.area) == pytest.approx(0.75, abs=1e-14)


def test_grid_and_surface_forms_agree_on_a_gentle_roof():
    sq = DomainSpec.square(1.0)
    roof = Roof(((-0.2, -0.2, 1.0), (0.2, -0.2, 1.0), (0.0, 0.25, 1.0)), 1.5)
    grid = resistance(roof.grid(sq, 512)).F_value
    surf = resistance_surface(roof.body(sq), sq.area)
    assert abs(grid - surf) < 1e-3


# --- one-dimensional problem and measure search --------------------------------

@pytest.mark.parametrize("M,F", [(0.5, 0.75), (1.0, 0.5), (2.0, 0.2)])
def test_solve_2d(M, F):
    sol = solve_2d(M)
    assert sol.F_value == pytest.approx(F)
    assert sol(0.0) == pytest.approx(M) and sol(1.0) == 0.0
    # the measure of the optimal profile has moment (M, 1) and drag F
    moment = sol.weights @ sol.normals
    assert np.allclose(moment, [M, 1.0])
    assert sol.weights @ sol.normals[:, 1] ** 3 == pytest.approx(F)


def test_solve_2d_domain():
    with pytest.raises(DomainError):
        solve_2d(0.0)


def test_measure_search_finds_single_diagonal_atom():
    res = min_measure_search(91)
    assert res.unique
    assert res.angles.tolist() == pytest.approx([np.pi / 4])
    assert res.value == pytest.approx(1 / (2 * np.sqrt(2)), abs=1e-12)


@pytest.mark.parametrize("M", [0.5, 2.0])
def test_measure_search_matches_1d_optimum(M):
    sol = solve_2d(M)
    grid = np.sort(np.concatenate([np.linspace(0, np.pi / 2, 31), [np.arctan(M)]]))
    res = min_measure_search(angles=grid, target=(M, 1.0))
    assert res.value == pytest.approx(sol.F_value, abs=1e-12)


def test_measure_search_input_checks():
    with pytest.raises(DomainError):
        min_measure_search(2)
    with pytest.raises(DomainError):
        min_measure_search(angles=[0.0, 2.0, 0.5])


# --- dense simplex ------------------------------------------------------------

def test_simplex_small_lp():
    # min -x - y  s.t.  x + 2y + s1 = 4,  3x + y + s2 = 6
    res = simplex([-1, -1, 0, 0], [[1, 2, 1, 0], [3, 1, 0, 1]], [4, 6])
    assert np.allclose(res.x[:2], [1.6, 1.2])
    assert res.value == pytest.approx(-2.8)
    assert res.unique()


def test_simplex_infeasible_and_unbounded():
    with pytest.raises(Infeasible):
        simplex([1, 1], [[1, 1]], [-1])
    with pytest.raises(Unbounded):
        simplex([-1, 0], [[1, -1]], [1])


def test_simplex_matches_scipy():
    from scipy.optimize import linprog

    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.uniform(0.1, 1.0, size=(3, 8))
        b = a @ rng.uniform(0.1, 1.0, size=8)
        c = rng.normal(size=8) + 1.5
        ref = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        assert simplex(c, a, b).value == pytest.approx(ref.fun, abs=1e-9)


# --- local cuts ---------------------------------------------------------------

def test_cut_that_misses_the_graph_changes_nothing():
    u = ConcaveGridFn.sample(UNIT, lambda x, y: 0 * x + 0.7, 1.0, 32)
    r = cut_improvement(u, RimPoint(0.5, 0.0, 1.0), 0.1)
    assert (r.delta_F, r.cap_area, r.ratio) == (0.0, 0.0, 0.0)


def test_cut_plane_must_stay_above_base():
    u = ConcaveGridFn.sample(UNIT, lambda x, y: 0 * x + 0.7, 1.0, 32)
    with pytest.raises(PlaneBelowBase):
        cut_improvement(u, RimPoint(-0.5, 0.0, 1.0), 0.1)


def test_predicted_ratio_limit():
    assert predicted_ratio_limit(1.0) == pytest.approx(0.0, abs=1e-15)
    assert predicted_ratio_limit(2.0) == pytest.approx(0.0707, abs=1e-4)


def test_steep_pyramid_cut_improves():
    u, rim = plateau_pyramid(2.0, n=256)
    sweep = improvement_sweep(u, rim, [0.08, 0.04, 0.02])
    assert sweep.positive_found
    assert [r.t for r in sweep.rows] == [0.08, 0.04, 0.02]
    assert all(r.cap_area > 0 for r in sweep.rows)


def test_plateau_needs_steep_enough_walls():
    with pytest.raises(DomainError):
        plateau_pyramid(0.5)


# --- inner ball -----------------------------------------------------------------

def test_inner_ball_on_truncated_cone():
    d = DomainSpec.regular(128, 1.0)
    u = ConcaveGridFn.sample(d, lambda x, y: np.minimum(0.6, 1 - np.hypot(x, y)), 0.6, 256)
    rep = inner_ball_check(u)
    assert rep.holds is True
    assert rep.radius == pytest.approx(d.inscribed_disc()[1] - 0.6)


def test_inner_ball_skips_shallow_walls_and_tall_bodies():
    d = DomainSpec.regular(128, 1.0)
    shallow = ConcaveGridFn.sample(d, lambda x, y: np.minimum(0.3, 0.5 * (1 - np.hypot(x, y))), 0.3, 128)
    rep = inner_ball_check(shallow)
    assert rep.holds is None and "precondition" in rep.reason
    tall = ConcaveGridFn.sample(d, lambda x, y: 0 * x + 1.2, 1.2, 32)
    assert inner_ball_check(tall).holds is None
