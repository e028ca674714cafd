import numpy as np
import pytest

from ridgecut.constructions import arc_frame, build_example
from ridgecut.errors import BadFrame, DomainError
from ridgecut.geometry import box
from ridgecut.measure import bl_distance
from ridgecut.ridge import (
    RidgeFrame,
    area_ratio_check,
    check_frame,
    convergence_verdict,
    cut,
    geometric_schedule,
    sine_law_weights,
    sweep,
)

S = 1 / np.sqrt(2)


def test_sine_law_weights_reproduce_e():
    for alpha, beta in [(0.3, 0.4), (np.pi / 4, np.pi / 4), (1.2, 0.5)]:
        l1, l2 = sine_law_weights(alpha, beta)
        fr = arc_frame(alpha, beta)
        assert np.allclose(l1 * fr.e1 + l2 * fr.e2, fr.e, atol=1e-14)
        assert (fr.lambda1, fr.lambda2) == pytest.approx((l1, l2), abs=1e-14)


def test_sine_law_domain():
    with pytest.raises(DomainError):
        sine_law_weights(2.0, 1.5)


def test_frame_rejects_e_outside_arc():
    with pytest.raises(DomainError):
        RidgeFrame.build([0, 0, 0], [1, 0, 0], [0, 0, -1], e=[-1, 0, -1])
    with pytest.raises(DomainError):
        RidgeFrame.build([0, 0, 0], [1, 0, 0], [0, 0, -1], e=[1, 0, -1], lambdas=[0.5, 0.5])


def test_cube_edge_cut_is_exact():
    ex = build_example("cube")
    for t in (0.2, 0.05, 0.001):
        r = cut(ex.body, ex.frame, t)
        # cap is a 1 x 2t rectangle; side strips and two end triangles
        assert r.cap_area == pytest.approx(2 * t, rel=1e-12)
        w = r.nu_t.cluster_weights([[0, -1, 0], [0, 0, -1], [1, 0, 0], [-1, 0, 0]])
        assert np.allclose(w, [S, S, t / 2, t / 2], rtol=1e-12)
        assert r.moment_residual < 1e-14


def test_area_ratio_bound_on_cube():
    ex = build_example("cube")
    r = cut(ex.body, ex.frame, 0.01)
    chk = area_ratio_check(r, ex.frame)
    # |S_t| / |B_t| = sqrt 2 + t, so the two-face bound is exceeded only by the end pieces
    assert chk["ratio"] == pytest.approx(np.sqrt(2) + 0.01, rel=1e-12)
    assert chk["bound"] == pytest.approx(np.sqrt(2))
    assert chk["exceeds"]
    prism = build_example("prism")
    r = cut(prism.body, prism.frame, 1e-3)
    assert area_ratio_check(r, prism.frame)["ratio"] <= prism.frame.area_ratio_bound * (1 + 1e-2)


def test_bad_frames():
    cube = box([0, 0, 0], [1, 1, 1])
    frame = RidgeFrame.build([0.5, 0.5, 0.0], [0, -1, 0], [0, 0, -1], lambdas=[S, S])
    with pytest.raises(BadFrame) as err:
        check_frame(cube, frame)
    assert err.value.classification.kind == "regular"
    wrong = RidgeFrame.build([0.5, 0.0, 0.0], [1, 0, 0], [0, 0, -1], lambdas=[S, S])
    with pytest.raises(BadFrame):
        cut(cube, wrong, 0.1)
    with pytest.raises(DomainError):
        cut(cube, build_example("cube").frame, 0.0)


def test_schedule():
    assert geometric_schedule(1.0, 0.5, 3) == [1.0, 0.5, 0.25]
    with pytest.raises(DomainError):
        geometric_schedule(1.0, 1.5, 3)


@pytest.mark.parametrize(
    "steps,verdict",
    [
        ([0.1, 1e-4, 2e-4, 5e-4], "converged"),
        ([0.2, 0.25, 0.2, 0.24], "divergent"),
        ([0.04, 0.02, 0.01], "unresolved"),  # shrinking steadily, not yet small
        ([0.01, 1e-4], "unresolved"),
        ([0.1, 1e-4, 0.01, 1e-4], "unresolved"),
    ],
)
def test_convergence_verdict(steps, verdict):
    assert convergence_verdict(steps, 1e-3) == verdict


def test_sweep_order_and_candidate():
    ex = build_example("prism")
    rep = sweep(ex.body, ex.frame, ts=[0.01, 0.1, 0.001, 0.05])
    assert rep.ts == sorted(rep.ts, reverse=True)
    assert rep.verdict in ("converged", "unresolved")
    assert bl_distance(rep.limit_candidate, ex.frame.two_atom_limit()) < 1e-3
    assert rep.bl_to_candidate[-1] == pytest.approx(0.0, abs=1e-12)


def test_sweep_is_independent_of_thread_count(monkeypatch):
    ex = build_example("tetrahedron")
    one = sweep(ex.body, ex.frame, count=6, workers=1)
    many = sweep(ex.body, ex.frame, count=6, workers=4)
    assert one.ts == many.ts
    assert [c.cap_area for c in one.cuts] == [c.cap_area for c in many.cuts]
    assert one.bl_steps == many.bl_steps


def test_sweep_reports_failing_t():
    ex = build_example("cube")
    with pytest.raises(Exception, match="t="):
        sweep(ex.body, ex.frame, ts=[0.1, 5.0])


def test_report_outputs(tmp_path):
    ex = build_example("cube")
    rep = sweep(ex.body, ex.frame, count=4)
    rep.write_csv(tmp_path / "c.csv")
    rep.write_json(tmp_path / "r.json")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("t,cap_area")
    assert len(lines) == 5
    assert '"verdict"' in (tmp_path / "r.json").read_text()


def test_tetrahedron_weights_follow_from_its_angles():
    ex = build_example("tetrahedron")
    fr = ex.frame
    r = cut(ex.body, fr, 1e-4)
    w = r.nu_t.cluster_weights([fr.e1, fr.e2])
    assert w == pytest.approx([fr.lambda1, fr.lambda2], rel=1e-3)
