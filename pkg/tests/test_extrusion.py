import math

import numpy as np
import pytest

from exmiura.extrusion import (
    ExtrusionSpec,
    NonDevelopable,
    build_extruded_model,
    cut_vertex_sectors,
    develop_mesh,
    develop_model,
    extrude_mesh,
    extrusion_direction,
    mesh_extrusion_direction,
    oracle_direction,
    refold_mesh,
    validate_mesh,
    validate_model,
)
from exmiura.fold_sim import rigid_align
from exmiura.geom_core import angle_between, ccw_angle_xy, eq1_residual, rotate_z
from exmiura.miura import MiuraParams, derive_angles, extract_cut_lines, fold_miura_mesh

PI = math.pi


def affected(mesh, v):
    """Vertices whose sector sums involve ``v`` and the faces incident to it."""
    near = {v}
    faces = []
    for fi, f in enumerate(mesh.faces):
        if v in f:
            i = f.index(v)
            near |= {f[i - 1], f[(i + 1) % len(f)]}
            faces.append(fi)
    interior = set(int(x) for x in mesh.interior_vertices)
    return sorted(near & interior), faces


@pytest.mark.parametrize("kw", [dict(depth=0.0), dict(depth=-1.0), dict(depth=1.0, mode="sideways")])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ExtrusionSpec(**kw)


def test_alternate_spec_needs_angle():
    with pytest.raises(ValueError):
        ExtrusionSpec(1.0, mode="alternate")


def test_direction_is_horizontal_and_ccw(desk):
    d = derive_angles(desk)
    n = extrusion_direction(d)
    assert n[2] == 0.0
    assert 0 < ccw_angle_xy(d.e_plus, n) < PI


def test_straight_diagonal_direction():
    l, th = 3.0, 0.3 * PI
    d = derive_angles(MiuraParams(l, 2 * l * math.cos(th), th, 0.4 * PI))
    x = d.e_minus + d.e_plus
    x[2] = 0.0
    expected = rotate_z(PI / 2, x) / np.linalg.norm(x)
    assert angle_between(extrusion_direction(d), expected) < 1e-7


def test_oracle_root_is_unique(desk):
    d = derive_angles(desk)
    from exmiura.geom_core import VertexSectorData

    s = VertexSectorData(d.e_plus, d.e_minus, d.gamma)
    assert angle_between(oracle_direction(s), extrusion_direction(d)) < 1e-9


def test_world_direction_matches_local_closed_form(desk, desk_model):
    d = derive_angles(desk)
    n_world = rotate_z(-PI / 2, extrusion_direction(d))
    assert angle_between(n_world, desk_model.direction) < 1e-12


def test_every_cut_vertex_on_the_ellipse(desk):
    base = fold_miura_mesh(desk, 8, 8)
    cuts = extract_cut_lines(base)
    n = mesh_extrusion_direction(base, cuts)
    for secs in cut_vertex_sectors(base, cuts):
        for s in secs:
            if s is not None:
                assert abs(eq1_residual(n, s)) < 1e-9
                assert abs(s.angle_defect(n)) < 1e-9 or abs(s.angle_defect(-n)) < 1e-9


def test_two_by_two_face_count(desk):
    m = build_extruded_model(desk, ExtrusionSpec(5.0), 2, 2)
    cut = extract_cut_lines(m.base, m.cuts)[0]
    kinds = [o[0] for o in m.face_origin]
    # 4 Miura faces, the one crossed by the diagonal split in two, one strip face per cut edge
    assert kinds.count("miura") == 4 + cut.edge_kinds.count("diagonal")
    assert kinds.count("strip") == len(cut.edges)
    assert len(m.folded.faces) == 7


def test_roles_and_skins(desk, desk_model):
    m = desk_model
    roles = m.folded.roles
    assert set(roles) == {"miura", "web", "skin-top", "skin-bottom"}
    h = derive_angles(desk).height
    z = m.folded.vertices[:, 2]
    for fi, r in enumerate(roles):
        f = list(m.folded.faces[fi])
        if r == "skin-top":
            assert np.max(abs(z[f] - h)) < 1e-9
        elif r == "skin-bottom":
            assert np.max(abs(z[f])) < 1e-9
        if r != "miura":
            P = m.folded.vertices[f]
            np.testing.assert_allclose(P[0] + P[2], P[1] + P[3], atol=1e-9 * m.scale)


def test_strip_width_is_depth(desk_model):
    m = desk_model
    for fi, (kind, *_) in enumerate(m.face_origin):
        if kind != "strip":
            continue
        P = m.folded.vertices[list(m.folded.faces[fi])]
        assert np.linalg.norm(P[3] - P[0]) == pytest.approx(m.depth, rel=1e-12)


def test_fresh_model_has_no_failures(desk_model):
    rep = validate_model(desk_model)
    assert rep.ok, rep.summary()
    assert rep.max_angle_defect < 1e-8


def test_model_isometric_to_development(desk_model):
    m = desk_model
    P = develop_model(m)
    e = m.folded.edges
    flat = np.linalg.norm(P[e[:, 1]] - P[e[:, 0]], axis=1)
    np.testing.assert_allclose(m.folded.edge_lengths(), flat, rtol=1e-10)


def test_development_contains_miura_pattern(desk, desk_model):
    m = desk_model
    P = m.pattern
    # every Miura face keeps its pattern shape; strips are d wide parallelograms
    base = m.base.pattern
    for fi, (kind, *rest) in enumerate(m.face_origin):
        f = list(m.folded.faces[fi])
        if kind == "miura":
            src = [m.origin[v][0] for v in f]
            _, rms = rigid_align(
                np.column_stack([P[f], np.zeros(len(f))]), np.column_stack([base[src], np.zeros(len(f))])
            )
            assert rms < 1e-10 * m.scale
        else:
            assert np.linalg.norm(P[f[3]] - P[f[0]]) == pytest.approx(m.depth, rel=1e-10)


def test_refold_round_trip(desk_model):
    m = desk_model
    X = refold_mesh(m.folded)
    _, rms = rigid_align(X, m.folded.vertices)
    assert rms < 1e-6 * m.scale


def test_nondevelopable_reports_worst_vertex(desk_model):
    m = desk_model
    v = int(m.folded.interior_vertices[3])
    X = m.folded.vertices.copy()
    X[v, 2] += 0.05
    with pytest.raises(NonDevelopable) as err:
        develop_mesh(m.folded.with_vertices(X))
    assert err.value.vertex in affected(m.folded, v)[0]
    assert abs(err.value.defect) > 1e-8


@pytest.mark.parametrize("which", [0, 3, 10, 14])
def test_single_vertex_fault_is_localised(desk_model, which):
    m = desk_model
    v = int(m.folded.interior_vertices[which])
    X = m.folded.vertices.copy()
    X[v] += 1e-3 * np.array([0.6, -0.48, 0.64])
    rep = validate_model(m.with_vertices(X))
    verts, faces = affected(m.folded, v)
    assert v in rep.bad_vertices
    assert rep.bad_vertices == verts
    quads = [f for f in faces if len(m.folded.faces[f]) == 4]
    assert rep.bad_faces == quads
    skins = [f for f in faces if m.folded.roles[f].startswith("skin")]
    assert rep.bad_skins == skins


@pytest.mark.parametrize("depth", [0.5, 2.0])
def test_alternate_mode_small_depth_intersects(desk, depth):
    m = build_extruded_model(desk, ExtrusionSpec(depth, mode="alternate", accordion_angle=1.2), 4, 4)
    rep = validate_model(m)
    assert rep.intersections
    assert rep.max_angle_defect < 1e-8


@pytest.mark.parametrize("depth", [16.0, 48.0])
def test_alternate_mode_large_depth_clear(desk, depth):
    m = build_extruded_model(desk, ExtrusionSpec(depth, mode="alternate", accordion_angle=1.2), 4, 4)
    assert validate_model(m).intersections == []


def test_validate_mesh_defaults_to_extreme_planes(desk_model):
    rep = validate_mesh(desk_model.folded, intersections=False)
    assert rep.ok
    assert rep.bottom == pytest.approx(0.0, abs=1e-12)


def test_explicit_direction_override(desk):
    base = fold_miura_mesh(desk, 4, 4)
    # an arbitrary horizontal direction breaks developability at the cut
    with pytest.raises(NonDevelopable):
        extrude_mesh(base, 3.0, [3], direction=[1.0, 0.0, 0.0])
