"""Edge extrusion of a folded Miura-Ori along oblique cutting lines."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geom_core import (
    VertexSectorData,
    angle_between,
    ccw_angle_xy,
    eq1_residual,
    eq2_direction,
    solve_horizontal_direction,
)
from .kernels import penetrating_pairs
from .mesh import FoldedMesh
from .miura import (
    CutLine,
    DegenerateParameters,
    MiuraDerived,
    MiuraParams,
    alternate_mode_mesh,
    default_cut_starts,
    extract_cut_lines,
    fold_miura_mesh,
)

__all__ = [
    "NoValidDirection",
    "NonDevelopable",
    "ExtrusionSpec",
    "ExtrudedModel",
    "ValidationReport",
    "extrusion_direction",
    "cut_vertex_sectors",
    "mesh_extrusion_direction",
    "build_extruded_model",
    "extrude_mesh",
    "develop_model",
    "develop_mesh",
    "refold_mesh",
    "validate_model",
    "validate_mesh",
]


class NoValidDirection(ValueError):
    pass


class NonDevelopable(ValueError):
    def __init__(self, vertex: int, defect: float):
        super().__init__(f"vertex {vertex} is not developable (angle defect {defect:.3e} rad)")
        self.vertex = vertex
        self.defect = defect


@dataclass(frozen=True)
class ExtrusionSpec:
    depth: float
    cuts: tuple | None = None
    mode: str = "ordinary"
    accordion_angle: float | None = None

    def __post_init__(self):
        if not (isinstance(self.depth, (int, float)) and math.isfinite(self.depth) and self.depth > 0):
            raise ValueError("extrusion depth must be a positive number")
        if self.mode not in ("ordinary", "alternate"):
            raise ValueError(f"unknown base mode {self.mode!r}")
        if self.mode == "alternate":
            a = self.accordion_angle
            if a is None or not 0.0 < a < math.pi:
                raise ValueError("alternate mode needs accordion_angle in (0, pi)")
        if self.cuts is not None:
            object.__setattr__(self, "cuts", tuple(int(c) for c in self.cuts))


@dataclass(frozen=True)
class ExtrudedModel:
    """Folded extruded Miura-Ori plus its crease pattern.

    ``origin[v] = (base vertex, offset)``: offset counts the cuts to the right of
    the instance; the instance sits at ``base + offset * depth * n``.
    ``face_origin[f]`` is ``("miura", base face)`` or ``("strip", cut, edge)``.
    """

    folded: FoldedMesh
    pattern: np.ndarray
    origin: tuple
    face_origin: tuple
    direction: np.ndarray
    depth: float
    cuts: tuple
    base: FoldedMesh
    params: MiuraParams | None = None
    spec: ExtrusionSpec | None = None
    height: float = 0.0

    @property
    def scale(self) -> float:
        return self.folded.scale

    def with_vertices(self, vertices) -> "ExtrudedModel":
        return ExtrudedModel(
            self.folded.with_vertices(vertices),
            self.pattern,
            self.origin,
            self.face_origin,
            self.direction,
            self.depth,
            self.cuts,
            self.base,
            self.params,
            self.spec,
            self.height,
        )


def extrusion_direction(derived: MiuraDerived) -> np.ndarray:
    """Skin-parallel extrusion direction from the closed forms (local frame)."""
    return eq2_direction(derived.e_plus, derived.e_minus, derived.gamma)


# ----------------------------------------------------------------------------
# splitting
# ----------------------------------------------------------------------------


def _split_faces(base: FoldedMesh, cuts: list[CutLine]):
    """Faces after cutting diagonals: (vertex tuple, base face index, offset)."""
    cols = base.meta["cols"]
    diag_faces = {}
    for c in cuts:
        for (k, j), (k2, j2), kind in zip(c.grid, c.grid[1:], c.edge_kinds):
            if kind == "diagonal":
                diag_faces[k * cols + j2] = True
    pat = base.pattern
    cut_polys = [pat[list(c.vertices)] for c in cuts]

    def offset(pt):
        # number of cut lines to the right of a pattern point
        n = 0
        for poly in cut_polys:
            i = int(np.searchsorted(poly[:, 1], pt[1]) - 1)
            i = min(max(i, 0), len(poly) - 2)
            a, b = poly[i], poly[i + 1]
            t = (pt[1] - a[1]) / (b[1] - a[1])
            if a[0] + t * (b[0] - a[0]) > pt[0]:
                n += 1
        return n

    out = []
    for fi, f in enumerate(base.faces):
        if fi in diag_faces:
            A, B, C, D = f
            tris = [(B, C, D), (A, B, D)]
        else:
            tris = [f]
        for t in tris:
            out.append((t, fi, offset(pat[list(t)].mean(axis=0))))
    return out


def _instances(split, cuts):
    keys = sorted({(v, o) for t, _, o in split for v in t})
    return {key: i for i, key in enumerate(keys)}, keys


def cut_vertex_sectors(base: FoldedMesh, cuts: list[CutLine]) -> list[list[VertexSectorData | None]]:
    """World-frame sector data at every interior cut vertex (right-hand side kept)."""
    split = _split_faces(base, cuts)
    ncut = len(cuts)
    # offsets: faces right of cut c (sorted by x) carry offset ncut-1-c
    order = np.argsort([base.pattern[c.vertices[0], 0] for c in cuts])
    rank = {int(ci): r for r, ci in enumerate(order)}
    out = []
    for ci, c in enumerate(cuts):
        keep = ncut - 1 - rank[ci]
        res = []
        for i, v in enumerate(c.vertices):
            if i == 0 or i == len(c.vertices) - 1:
                res.append(None)
                continue
            gamma = 0.0
            for t, _, o in split:
                if o != keep or v not in t:
                    continue
                m = len(t)
                p = t.index(v)
                P = base.vertices[v]
                a = base.vertices[t[p - 1]] - P
                b = base.vertices[t[(p + 1) % m]] - P
                gamma += angle_between(a, b)
            res.append(VertexSectorData(c.e_plus[i], c.e_minus[i], gamma))
        out.append(res)
    return out


def mesh_extrusion_direction(base: FoldedMesh, cuts: list[CutLine], check_tol: float = 1e-9) -> np.ndarray:
    """Extrusion direction from world-frame cut data, checked against the oracle at every vertex."""
    sectors = cut_vertex_sectors(base, cuts)
    n = None
    for cls in (1, 3):
        for c, secs in zip(cuts, sectors):
            for s, k in zip(secs, c.classes):
                if s is not None and k == cls:
                    n = eq2_direction(s.e_plus, s.e_minus, s.gamma)
                    break
            if n is not None:
                break
        if n is not None:
            break
    if n is None:
        raise NoValidDirection("cutting lines have no interior class-1/3 vertex")
    for secs in sectors:
        for s in secs:
            if s is None:
                continue
            if abs(eq1_residual(n, s)) > check_tol:
                raise NoValidDirection("no common skin-parallel direction for all cut vertices")
    return n


def select_oriented_root(sector: VertexSectorData, roots, tol: float = 1e-8) -> list[np.ndarray]:
    """Oracle roots counter-clockwise from e+ (in (0, pi)) whose strip angles close the vertex."""
    out = []
    for n in roots:
        t = ccw_angle_xy(sector.e_plus, n)
        if not 0.0 < t < math.pi:
            continue
        if abs(sector.angle_defect(n)) < tol:
            out.append(n)
    return out


def oracle_direction(sector: VertexSectorData, **kw) -> np.ndarray:
    roots = select_oriented_root(sector, solve_horizontal_direction(sector, **kw))
    if len(roots) != 1:
        raise NoValidDirection(f"oracle found {len(roots)} admissible horizontal directions")
    return roots[0]


# ----------------------------------------------------------------------------
# assembly
# ----------------------------------------------------------------------------


def _base_mesh(p: MiuraParams, spec: ExtrusionSpec, rows: int, cols: int) -> FoldedMesh:
    if spec.mode == "ordinary":
        return fold_miura_mesh(p, rows, cols)
    return alternate_mode_mesh(p, spec.accordion_angle, rows, cols)


def build_extruded_model(p: MiuraParams, spec: ExtrusionSpec, rows: int = 4, cols: int = 4, check: bool = True):
    base = _base_mesh(p, spec, rows, cols)
    model = extrude_mesh(base, spec.depth, spec.cuts, params=p, spec=spec)
    if check:
        rep = validate_model(model, intersections=False)
        if rep.max_angle_defect > 1e-8:
            v = max(rep.angle_defects, key=lambda k: abs(rep.angle_defects[k]))
            raise NonDevelopable(v, rep.angle_defects[v])
    return model


def extrude_mesh(base: FoldedMesh, depth: float, starts=None, direction=None, params=None, spec=None) -> ExtrudedModel:
    rows, cols = base.meta["rows"], base.meta["cols"]
    if starts is None:
        starts = default_cut_starts(rows, cols)
    cuts = extract_cut_lines(base, starts)
    if not cuts:
        raise ValueError(f"no admissible cutting line for a {rows}x{cols} mesh")
    n = mesh_extrusion_direction(base, cuts) if direction is None else np.asarray(direction, float)
    split = _split_faces(base, cuts)
    index, keys = _instances(split, cuts)
    verts = np.array([base.vertices[v] + o * depth * n for v, o in keys])
    faces, roles, forigin = [], [], []
    for t, fi, o in split:
        faces.append(tuple(index[(v, o)] for v in t))
        roles.append("miura")
        forigin.append(("miura", fi))
    ncut = len(cuts)
    order = np.argsort([base.pattern[c.vertices[0], 0] for c in cuts])
    height = float(base.meta.get("height", 0.0))
    aux_hint = {}
    for r, ci in enumerate(order):
        c = cuts[int(ci)]
        o = ncut - 1 - r
        for ei, ((u, v), kind) in enumerate(zip(c.edges, c.edge_kinds)):
            f = (index[(u, o)], index[(v, o)], index[(v, o + 1)], index[(u, o + 1)])
            faces.append(f)
            if kind == "diagonal":
                roles.append("web")
            else:
                z = base.vertices[u, 2]
                roles.append("skin-top" if z > 0.5 * (height + base.vertices[:, 2].min()) else "skin-bottom")
            forigin.append(("strip", int(ci), ei))
    hint = {}
    for (a, b), val in base.fold_hint.items():
        for oa in range(ncut + 1):
            if (a, oa) in index and (b, oa) in index:
                ia, ib = index[(a, oa)], index[(b, oa)]
                hint[(min(ia, ib), max(ia, ib))] = val
    folded = FoldedMesh(
        verts,
        faces,
        roles,
        meta={**dict(base.meta), "cuts": tuple(starts), "depth": depth},
        fold_hint=hint,
    )
    pattern = develop_mesh(folded, seed=0, seed_pattern=base.pattern[list(base.faces[split[0][1]])] if len(split[0][0]) == 4 else None)
    folded = FoldedMesh(verts, faces, roles, pattern=pattern, meta=folded.meta, fold_hint=hint)
    return ExtrudedModel(
        folded,
        pattern,
        tuple(keys),
        tuple(forigin),
        n,
        float(depth),
        tuple(starts),
        base,
        params,
        spec,
        height,
    )


# ----------------------------------------------------------------------------
# development
# ----------------------------------------------------------------------------


def _fit_rigid_2d(src: np.ndarray, dst: np.ndarray):
    cs, cd = src.mean(0), dst.mean(0)
    u, _, vt = np.linalg.svd((src - cs).T @ (dst - cd))
    r = (u @ vt).T
    if np.linalg.det(r) < 0:
        vt[-1] *= -1
        r = (u @ vt).T
    return r, cd - r @ cs


def develop_mesh(mesh: FoldedMesh, seed: int = 0, seed_pattern=None, tol: float = 1e-8) -> np.ndarray:
    """Unroll faces breadth-first into the plane; returns (N, 2) pattern coordinates."""
    defects = mesh.angle_defects()
    if defects:
        v = max(defects, key=lambda k: abs(defects[k]))
        if abs(defects[v]) > tol:
            raise NonDevelopable(v, defects[v])
    V = mesh.vertices
    P = np.full((len(V), 2), np.nan)
    f0 = mesh.faces[seed]
    pts = V[list(f0)]
    e = pts[1] - pts[0]
    e /= np.linalg.norm(e)
    nrm = mesh.face_normal(seed)
    b = np.cross(nrm, e)
    loc = np.stack([(pts - pts[0]) @ e, (pts - pts[0]) @ b], axis=1)
    if seed_pattern is not None:
        r, t = _fit_rigid_2d(loc, np.asarray(seed_pattern, float))
        loc = loc @ r.T + t
    for v, q in zip(f0, loc):
        P[v] = q
    placed = {seed}
    # edge -> faces
    emap: dict[tuple[int, int], list[int]] = {}
    for fi, f in enumerate(mesh.faces):
        for i in range(len(f)):
            a, c = f[i], f[(i + 1) % len(f)]
            emap.setdefault((min(a, c), max(a, c)), []).append(fi)
    queue = deque([seed])
    worst = 0.0
    while queue:
        fi = queue.popleft()
        f = mesh.faces[fi]
        for i in range(len(f)):
            a, c = f[i], f[(i + 1) % len(f)]
            for gj in emap[(min(a, c), max(a, c))]:
                if gj in placed:
                    continue
                g = mesh.faces[gj]
                # g contains c->a when consistently oriented: it lies right of a->c
                ea = V[c] - V[a]
                L = np.linalg.norm(ea)
                ea /= L
                e2 = (P[c] - P[a]) / np.linalg.norm(P[c] - P[a])
                right = np.array([e2[1], -e2[0]])
                for v in g:
                    q = V[v] - V[a]
                    s = q @ ea
                    h = np.linalg.norm(q - s * ea)
                    pos = P[a] + s * e2 + h * right
                    if np.isnan(P[v, 0]):
                        P[v] = pos
                    else:
                        worst = max(worst, float(np.linalg.norm(P[v] - pos)))
                placed.add(gj)
                queue.append(gj)
    if worst > 1e-6 * mesh.scale:
        raise NonDevelopable(-1, worst)
    return P


def _axis_rotation(axis, angle: float) -> np.ndarray:
    k = axis / np.linalg.norm(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def refold_mesh(mesh: FoldedMesh, angles=None, seed: int = 0) -> np.ndarray:
    """Fold the crease pattern by per-edge fold angles; returns (N, 3) coordinates.

    ``angles`` is aligned with ``mesh.edges`` (default: the measured fold
    angles). The seed face stays in the plane z = 0; every other face is
    reached breadth-first and hinged about the shared edge, so the result
    matches the folded mesh up to a rigid motion.
    """
    if mesh.pattern is None:
        raise ValueError("mesh has no crease pattern")
    angles = mesh.fold_angles() if angles is None else np.asarray(angles, float)
    P = np.column_stack([mesh.pattern, np.zeros(len(mesh.pattern))])
    X = np.full_like(P, np.nan)
    # per face: x_3d = R @ x_pattern + t
    frames = {seed: (np.eye(3), np.zeros(3))}
    for v in mesh.faces[seed]:
        X[v] = P[v]
    queue = deque([seed])
    adj: dict[int, list[int]] = {}
    for ei, (fl, fr) in enumerate(mesh.edge_faces):
        if fl >= 0 and fr >= 0:
            adj.setdefault(int(fl), []).append(ei)
            adj.setdefault(int(fr), []).append(ei)
    while queue:
        fi = queue.popleft()
        R, t = frames[fi]
        for ei in adj.get(fi, ()):
            fl, fr = (int(x) for x in mesh.edge_faces[ei])
            other = fr if fl == fi else fl
            if other in frames:
                continue
            a, b = (int(x) for x in mesh.edges[ei])
            # the right face is the left face turned by +angle about a->b
            ang = angles[ei] if fl == fi else -angles[ei]
            H = _axis_rotation(P[b] - P[a], ang)
            Rc = R @ H
            tc = R @ (P[a] - H @ P[a]) + t
            frames[other] = (Rc, tc)
            for v in mesh.faces[other]:
                if np.isnan(X[v, 0]):
                    X[v] = Rc @ P[v] + tc
            queue.append(other)
    return X


def develop_model(m: ExtrudedModel) -> np.ndarray:
    return develop_mesh(m.folded, seed=0, seed_pattern=None)


# ----------------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------------


@dataclass
class ValidationReport:
    angle_defects: dict
    planarity: np.ndarray
    skin_deviation: dict
    intersections: list
    angle_tol: float = 1e-8
    planarity_tol: float = 1e-9
    skin_tol: float = 1e-8
    scale: float = 1.0
    top: float = 0.0
    bottom: float = 0.0

    @property
    def max_angle_defect(self) -> float:
        return max((abs(v) for v in self.angle_defects.values()), default=0.0)

    @property
    def bad_vertices(self) -> list[int]:
        return sorted(v for v, d in self.angle_defects.items() if abs(d) > self.angle_tol)

    @property
    def bad_faces(self) -> list[int]:
        return [int(i) for i in np.nonzero(self.planarity > self.planarity_tol * self.scale)[0]]

    @property
    def bad_skins(self) -> list[int]:
        return sorted(f for f, d in self.skin_deviation.items() if d > self.skin_tol * self.scale)

    @property
    def failures(self) -> int:
        return len(self.bad_vertices) + len(self.bad_faces) + len(self.bad_skins) + len(self.intersections)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "max_angle_defect": self.max_angle_defect,
            "bad_vertices": self.bad_vertices,
            "max_planarity": float(self.planarity.max(initial=0.0)),
            "bad_faces": self.bad_faces,
            "max_skin_deviation": max(self.skin_deviation.values(), default=0.0),
            "bad_skins": self.bad_skins,
            "skin_planes": [self.bottom, self.top],
            "intersections": [list(p) for p in self.intersections],
        }


def _triangles(mesh: FoldedMesh):
    tris, owner = [], []
    for fi, f in enumerate(mesh.faces):
        for i in range(1, len(f) - 1):
            tris.append((f[0], f[i], f[i + 1]))
            owner.append(fi)
    return np.array(tris, dtype=np.int64), np.array(owner, dtype=np.int64)


def face_intersections(mesh: FoldedMesh, tol: float = 1e-9) -> list[tuple[int, int]]:
    tris, owner = _triangles(mesh)
    pairs = penetrating_pairs(mesh.vertices, tris, owner, tol * mesh.scale)
    found = {tuple(sorted((int(owner[a]), int(owner[b])))) for a, b in pairs}
    return sorted(found)


def validate_mesh(
    mesh: FoldedMesh,
    top=None,
    bottom=None,
    intersections: bool = True,
    angle_tol: float = 1e-8,
    planarity_tol: float = 1e-9,
    skin_tol: float = 1e-8,
    intersection_tol: float = 1e-9,
) -> ValidationReport:
    z = mesh.vertices[:, 2]
    top = float(z.max()) if top is None else top
    bottom = float(z.min()) if bottom is None else bottom
    skin = {}
    for fi, r in enumerate(mesh.roles):
        if r == "skin-top":
            skin[fi] = float(np.max(np.abs(z[list(mesh.faces[fi])] - top)))
        elif r == "skin-bottom":
            skin[fi] = float(np.max(np.abs(z[list(mesh.faces[fi])] - bottom)))
    return ValidationReport(
        angle_defects=mesh.angle_defects(),
        planarity=mesh.planarity(),
        skin_deviation=skin,
        intersections=face_intersections(mesh, intersection_tol) if intersections else [],
        angle_tol=angle_tol,
        planarity_tol=planarity_tol,
        skin_tol=skin_tol,
        scale=mesh.scale,
        top=top,
        bottom=bottom,
    )


def validate_model(m: ExtrudedModel, intersections: bool = True, **kw) -> ValidationReport:
    bottom = float(m.base.vertices[:, 2].min())
    return validate_mesh(m.folded, top=bottom + m.height, bottom=bottom, intersections=intersections, **kw)
