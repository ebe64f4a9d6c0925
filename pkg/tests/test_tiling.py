import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exmiura.extrusion import ExtrusionSpec
from exmiura.fold_sim import construct_final_state
from exmiura.extrusion import build_extruded_model
from exmiura.tiling import (
    INNER_STRUCTURE,
    MalformedState,
    NoBracket,
    classify_tiling,
    coverage_error,
    evaluate_tiling,
    measure_gap_and_shift,
    skin_columns,
    skin_planes,
    solve_double_tiling,
    verify_dual_tiling_structure,
)

PI = math.pi
D = 14.294


@pytest.fixture(scope="module")
def final6(desk):
    return construct_final_state(build_extruded_model(desk, ExtrusionSpec(D), 6, 6))


def test_desk_final_state_is_gapped(final6):
    rep = measure_gap_and_shift(final6)
    assert rep.g > 0
    assert rep.g == pytest.approx(3.3027115217702629, rel=1e-9)
    assert rep.s == pytest.approx(8.9529183937092647, rel=1e-9)
    assert rep.tiling_class == "Gapped"
    assert rep.inner_structure == "gapped columns"


def test_planes_agree(final6):
    top = measure_gap_and_shift(final6, "top")
    bottom = measure_gap_and_shift(final6, "bottom")
    assert top.g == pytest.approx(bottom.g, rel=1e-9)
    assert top.s == pytest.approx(bottom.s, rel=1e-9)


@pytest.mark.parametrize("n,plane", [(4, "top"), (8, "bottom")])
def test_gap_and_shift_independent_of_patch_size(desk, final6, n, plane):
    fin = construct_final_state(build_extruded_model(desk, ExtrusionSpec(D), n, n))
    ref = measure_gap_and_shift(final6)
    rep = measure_gap_and_shift(fin, plane)
    assert rep.g == pytest.approx(ref.g, rel=1e-9)
    assert rep.s == pytest.approx(ref.s, rel=1e-9)


def test_two_parallel_planes(final6):
    planes = skin_planes(final6)
    assert planes.max_deviation < 1e-9 * final6.scale
    assert planes.separation > 0
    assert abs(planes.normal[2]) == pytest.approx(1.0, abs=1e-12)


def test_columns_share_edges(final6):
    cols = skin_columns(final6)
    assert cols.max_share_deviation < 1e-9 * final6.scale
    assert sum(len(c) for c in cols.columns) == len(skin_planes(final6).bottom) + len(skin_planes(final6).top)


def test_shift_independent_of_depth(desk):
    # the wall lean sets s; the extrusion depth only sets the column period
    a = evaluate_tiling(desk, ExtrusionSpec(D))
    b = evaluate_tiling(desk, ExtrusionSpec(20.0))
    assert a.g == pytest.approx(b.g, rel=1e-9)
    assert a.s_raw == pytest.approx(b.s_raw, rel=1e-9)
    assert b.d == pytest.approx(20.0)


def test_construction_state_is_malformed(desk_model):
    with pytest.raises((MalformedState, ValueError)):
        measure_gap_and_shift(desk_model.folded)


def test_gapped_state_fails_dual_check(final6):
    chk = verify_dual_tiling_structure(final6)
    assert not chk.ok
    assert chk.max_spread > 1.0


@pytest.mark.parametrize(
    "g,s,d,kind",
    [(0.0, 0.0, 1.0, "Prism"), (0.0, 0.5, 1.0, "HipRoof"), (0.0, 1.0, 1.0, "Pyramid"), (0.3, 0.5, 1.0, "Gapped"), (-0.3, 0.0, 1.0, "Gapped")],
)
def test_classification_table(g, s, d, kind):
    c = classify_tiling(SimpleNamespace(g=g, s=s, d=d))
    assert c == kind
    assert c.inner_structure == INNER_STRUCTURE[kind]


def test_inner_structure_labels():
    assert INNER_STRUCTURE["Prism"] == "triangular prism, degenerated tetrahedron"
    assert INNER_STRUCTURE["HipRoof"] == "hip-roof, tetrahedron"
    assert INNER_STRUCTURE["Pyramid"] == "quadrangular cone, tetrahedron"


reals = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-9, 1e6, allow_nan=False)


@given(reals, reals, positive, positive)
def test_classification_total_and_consistent(g, s, d, eps):
    r = SimpleNamespace(g=g, s=s, d=d)
    c = classify_tiling(r, eps)
    assert c == classify_tiling(r, eps)
    assert c.kind in INNER_STRUCTURE
    if abs(g) > eps:
        assert c == "Gapped"
    elif s < eps:
        assert c == "Prism"
    elif abs(s - d) < eps:
        assert c == "Pyramid"
    else:
        assert c == "HipRoof"


def _rotation(a, b, c):
    ca, sa, cb, sb, cc, sc = map(float, (np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(c), np.sin(c)))
    Rz = np.array([[ca, -sa, 0], [sa, ca, 0], [0, 0, 1]])
    Ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    Rx = np.array([[1, 0, 0], [0, cc, -sc], [0, sc, cc]])
    return Rz @ Ry @ Rx


angles = st.floats(-PI, PI, allow_nan=False)
shifts = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(angles, angles, angles, shifts, shifts, shifts)
def test_rigid_motion_invariance(final6, a, b, c, x, y, z):
    ref = measure_gap_and_shift(final6)
    R = _rotation(a, b, c)
    moved = final6.with_vertices(final6.vertices @ R.T + np.array([x, y, z]))
    rep = measure_gap_and_shift(moved)
    scale = final6.scale
    assert rep.g == pytest.approx(ref.g, abs=1e-8 * scale)
    assert rep.s == pytest.approx(ref.s, abs=1e-8 * scale)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_scaling_covariance(final6, lam):
    ref = measure_gap_and_shift(final6)
    scaled = replace(final6.with_vertices(final6.vertices * lam), pattern=final6.pattern * lam)
    rep = measure_gap_and_shift(scaled)
    assert rep.g == pytest.approx(lam * ref.g, rel=1e-8)
    assert rep.s == pytest.approx(lam * ref.s, rel=1e-8)
    assert rep.d == pytest.approx(lam * ref.d, rel=1e-12)


@pytest.mark.parametrize("rho", [0.70, 0.756, 0.85, 0.95])
def test_shift_within_depth(desk, rho):
    rep = evaluate_tiling(desk.replace(rho=rho * PI), ExtrusionSpec(D))
    assert 0.0 <= rep.s <= rep.d


def test_coverage_error_zero_only_without_gap(final6):
    rep = measure_gap_and_shift(final6)
    assert coverage_error(rep) == pytest.approx(rep.g / (rep.width + rep.g), rel=1e-9)


def test_solver_needs_a_sign_change(desk):
    # at the desk angle the columns never close over this range
    with pytest.raises(NoBracket):
        solve_double_tiling(desk, ExtrusionSpec(D), "rho", (0.7 * PI, 0.8 * PI))


def test_solver_rejects_unknown_parameter(desk):
    with pytest.raises(ValueError):
        solve_double_tiling(desk, ExtrusionSpec(D), "depth", (1.0, 2.0))


def test_outer_solve_needs_bracket(desk):
    with pytest.raises(ValueError):
        solve_double_tiling(desk, ExtrusionSpec(D), "theta", (0.2, 0.3), s_target=1.0)


def test_gap_solve_closes_columns(desk):
    base = desk.replace(theta=0.26 * PI)
    q = solve_double_tiling(base, ExtrusionSpec(D), "rho", (0.66 * PI, 0.8 * PI))
    top = evaluate_tiling(q, ExtrusionSpec(D))
    bottom = evaluate_tiling(q, ExtrusionSpec(D), plane="bottom")
    assert abs(top.g) < 1e-7 * max(q.l, q.w)
    assert coverage_error(top) < 1e-6
    assert coverage_error(bottom) < 1e-6
    assert q.rho == pytest.approx(2.22226539535780, abs=1e-9)
