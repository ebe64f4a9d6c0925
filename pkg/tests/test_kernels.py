import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exmiura.extrusion import _triangles, extrude_mesh
from exmiura.fold_sim import triangulate_skins
from exmiura.kernels import HAVE_NUMBA, dihedral_and_gradient, penetrating_pairs, rigid_constraints
from exmiura.miura import alternate_mode_mesh, default_cut_starts

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba disabled")


def test_single_crossing_pair():
    V = np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [0.5, 0.5, -1], [0.5, 0.5, 1], [1.5, 0.5, 0]], float)
    tris = np.array([[0, 1, 2], [3, 4, 5]])
    for backend in ("numpy", "numba"):
        assert penetrating_pairs(V, tris, [0, 1], 1e-12, backend).tolist() == [[0, 1]]
        # same owner face: never a penetration
        assert len(penetrating_pairs(V, tris, [0, 0], 1e-12, backend)) == 0


def test_touching_and_coplanar_are_not_penetrations():
    V = np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [0.5, 0.5, 0], [0.5, 0.5, 1], [1.5, 0.5, 1]], float)
    tris = np.array([[0, 1, 2], [3, 4, 5]])
    flat = V.copy()
    flat[3:, 2] = 0
    for backend in ("numpy", "numba"):
        assert len(penetrating_pairs(V, tris, [0, 1], 1e-12, backend)) == 0
        assert len(penetrating_pairs(flat, tris, [0, 1], 1e-12, backend)) == 0


def _alternate(desk, n, d):
    mesh = extrude_mesh(alternate_mode_mesh(desk, 1.2, n, n), d, default_cut_starts(n, n)).folded
    tris, owner = _triangles(mesh)
    return mesh.vertices, tris, owner, 1e-9 * mesh.scale


@pytest.mark.parametrize("n,d", [(4, 1.0), (4, 2.0), (4, 48.0)])
def test_penetration_backends_agree(desk, n, d):
    v, t, o, eps = _alternate(desk, n, d)
    a = penetrating_pairs(v, t, o, eps, "numpy")
    b = penetrating_pairs(v, t, o, eps, "numba")
    assert np.array_equal(a, b)
    assert (len(a) > 0) == (d < 4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=18, max_size=18))
def test_penetration_backends_agree_random(xs):
    V = np.array(xs).reshape(6, 3)
    tris = np.array([[0, 1, 2], [3, 4, 5]])
    assert np.array_equal(
        penetrating_pairs(V, tris, [0, 1], 1e-9, "numpy"), penetrating_pairs(V, tris, [0, 1], 1e-9, "numba")
    )


@pytest.mark.parametrize("n", [2, 4])
def test_constraint_backends_agree(desk, n):
    from exmiura.extrusion import ExtrusionSpec, build_extruded_model

    t = triangulate_skins(build_extruded_model(desk, ExtrusionSpec(14.294), n, n))
    X = t.model.folded.vertices + np.random.default_rng(n).normal(scale=0.01, size=t.model.folded.vertices.shape)
    r1, J1 = rigid_constraints(X, t.edges, t.rest, t.quads, t.scale, "numpy")
    r2, J2 = rigid_constraints(X, t.edges, t.rest, t.quads, t.scale, "numba")
    assert np.allclose(r1, r2, rtol=0, atol=1e-12)
    assert np.allclose(J1, J2, rtol=0, atol=1e-12)


def test_constraint_jacobian_matches_finite_differences(strip_model):
    t = triangulate_skins(strip_model)
    X = strip_model.folded.vertices + np.random.default_rng(3).normal(scale=0.05, size=strip_model.folded.vertices.shape)
    r, J = rigid_constraints(X, t.edges, t.rest, t.quads, t.scale)
    h = 1e-6
    x = X.ravel()
    for k in np.random.default_rng(4).choice(x.size, 20, replace=False):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        fd = (rigid_constraints(xp.reshape(X.shape), t.edges, t.rest, t.quads, t.scale)[0]
              - rigid_constraints(xm.reshape(X.shape), t.edges, t.rest, t.quads, t.scale)[0]) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(0.1, 3.0))
def test_dihedral_gradient(apex, fold):
    # edge on the x axis, apexes on either side; fold the right wing about x
    X = np.array([[0, 0, 0], [1, 0, 0], [0.3, 1, 0], [0.6, -1, 0]], float)
    c, s = np.cos(fold), np.sin(fold)
    X[3] = [0.6, -c, s]
    X = X + 0.05 * np.array(apex + apex[:6]).reshape(4, 3)
    ang, g = dihedral_and_gradient(X, 0, 1, 2, 3)
    h = 1e-7
    for v in range(4):
        for k in range(3):
            Xp, Xm = X.copy(), X.copy()
            Xp[v, k] += h
            Xm[v, k] -= h
            fd = (dihedral_and_gradient(Xp, 0, 1, 2, 3)[0] - dihedral_and_gradient(Xm, 0, 1, 2, 3)[0]) / (2 * h)
            assert g[v][k] == pytest.approx(fd, abs=1e-5)


def test_disable_switch_uses_numpy():
    code = "import exmiura.kernels as k; print(k.HAVE_NUMBA, k.BACKEND)"
    env = dict(os.environ, EXMIURA_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "numpy"]


@needs_numba
def test_default_backend_is_numba():
    from exmiura import kernels

    assert kernels.BACKEND == "numba"


def test_fallback_run_gives_same_validation():
    code = (
        "import numpy as np; from exmiura import *;"
        "m = build_extruded_model(MiuraParams(14.26, 10, 0.7, 2.375), ExtrusionSpec(2.0), 4, 4);"
        "print(validate_model(m).ok)"
    )
    runs = []
    for flag in ("1", "0"):
        env = dict(os.environ, EXMIURA_DISABLE_NUMBA=flag)
        runs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    assert runs[0] == runs[1]
