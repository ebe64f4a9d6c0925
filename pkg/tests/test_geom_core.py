import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exmiura.extrusion import extrusion_direction
from exmiura.geom_core import (
    VertexSectorData,
    angle_between,
    eq1_residual,
    eq2_direction,
    rotate_z,
    solve_horizontal_direction,
    unit,
)
from exmiura.miura import derive_angles

finite = st.floats(-1e3, 1e3, allow_nan=False)
angles = st.floats(-10.0, 10.0, allow_nan=False)
vectors = st.tuples(finite, finite, finite).map(np.array)


def test_quarter_turn():
    np.testing.assert_allclose(rotate_z(math.pi / 2, [1, 0, 0]), [0, 1, 0], atol=1e-16)


def test_zero_rotation_is_identity():
    v = np.array([1.5, -2.0, 3.25])
    assert np.array_equal(rotate_z(0.0, v), v)


def test_rotation_of_stacked_vectors():
    V = np.eye(3)
    out = rotate_z(0.3, V)
    for v, o in zip(V, out):
        np.testing.assert_allclose(o, rotate_z(0.3, v), atol=1e-15)


@given(angles, vectors)
def test_rotation_inverse(t, v):
    np.testing.assert_allclose(rotate_z(-t, rotate_z(t, v)), v, atol=1e-12 * (1 + np.linalg.norm(v)))


@given(angles, angles, vectors)
def test_rotation_preserves_norm_and_z_and_composes(a, b, v):
    r = rotate_z(a, v)
    scale = 1 + np.linalg.norm(v)
    assert abs(np.linalg.norm(r) - np.linalg.norm(v)) <= 1e-14 * scale * 10
    assert r[2] == v[2]
    np.testing.assert_allclose(rotate_z(b, r), rotate_z(a + b, v), atol=1e-12 * scale)


def _flat_sector(alpha, beta):
    # e+ at azimuth 0, n at alpha, e- at alpha + beta: all in the plane z = 0
    az = lambda t: np.array([math.cos(t), math.sin(t), 0.0])  # noqa: E731
    gamma = 2 * math.pi - alpha - beta
    return VertexSectorData(az(0.0), az(alpha + beta), gamma), az(alpha)


def test_flat_sheet_is_developable():
    s, n = _flat_sector(0.7, 1.9)
    assert abs(eq1_residual(n, s)) < 1e-15


def test_residual_sign_is_raw(desk):
    # both signs occur on the horizontal circle, which is what bracketing needs
    d = derive_angles(desk)
    s = VertexSectorData(d.e_plus, d.e_minus, d.gamma)
    t = np.linspace(0, 2 * math.pi, 64)
    v = [eq1_residual([math.cos(a), math.sin(a), 0.0], s) for a in t]
    assert min(v) < -1e-3 and max(v) > 1e-3


def test_coplanar_edges_zero_everywhere():
    s, n = _flat_sector(0.7, 1.9)
    for t in np.linspace(0, 2 * math.pi, 17):
        assert abs(eq1_residual(rotate_z(t, n), s)) < 1e-14


def _random_unit(rng):
    return unit(rng.normal(size=3))


def test_flip_symmetry_1000():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        s = VertexSectorData(_random_unit(rng), _random_unit(rng), rng.uniform(0, 2 * math.pi))
        n = _random_unit(rng)
        assert eq1_residual(n, s) == pytest.approx(eq1_residual(-n, s), abs=1e-15)


def test_closed_form_direction_zeroes_residual(desk):
    d = derive_angles(desk)
    s = VertexSectorData(d.e_plus, d.e_minus, d.gamma)
    n = extrusion_direction(d)
    assert abs(eq1_residual(n, s)) < 1e-9
    assert abs(np.linalg.norm(n) - 1) < 1e-14


def test_oracle_finds_closed_form(desk):
    d = derive_angles(desk)
    s = VertexSectorData(d.e_plus, d.e_minus, d.gamma)
    n = extrusion_direction(d)
    roots = solve_horizontal_direction(s)
    assert roots
    assert min(angle_between(n, r) for r in roots) < 1e-9
    for r in roots:
        assert abs(eq1_residual(r, s)) < 1e-11
        assert abs(np.linalg.norm(r) - 1) < 1e-12
        assert r[2] == 0.0


def test_straight_cut_degenerates_to_full_circle():
    e = np.array([1.0, 0.0, 0.0])
    roots = solve_horizontal_direction(VertexSectorData(e, -e, math.pi))
    assert len(roots) == 4096


def test_oracle_refuses_coarse_sampling(desk):
    d = derive_angles(desk)
    with pytest.raises(ValueError):
        solve_horizontal_direction(VertexSectorData(d.e_plus, d.e_minus, d.gamma), samples=100)


def test_roots_move_continuously(desk):
    d = derive_angles(desk)
    s0 = VertexSectorData(d.e_plus, d.e_minus, d.gamma)
    s1 = VertexSectorData(unit(d.e_plus + np.array([1e-6, -1e-6, 0.0])), d.e_minus, d.gamma)
    r0 = solve_horizontal_direction(s0)
    r1 = solve_horizontal_direction(s1)
    assert len(r0) == len(r1)
    for a in r0:
        assert min(angle_between(a, b) for b in r1) < 1e-4


def test_no_horizontal_root():
    # both edges vertical: the residual is (cos^2 g - 1) everywhere on the circle
    z = np.array([0.0, 0.0, 1.0])
    assert solve_horizontal_direction(VertexSectorData(z, z, 1.0)) == []


def test_eq2_rejects_coincident_edges():
    e = np.array([1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        eq2_direction(e, e, 0.0)
