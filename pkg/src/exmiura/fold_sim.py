"""Rigid folding simulation of extruded Miura-Ori by vertex-coordinate constraint projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import dihedral_and_gradient, rigid_constraints
from .mesh import FoldedMesh
from .extrusion import ExtrudedModel

__all__ = [
    "ConvergenceFailure",
    "MissingFinalState",
    "Crease",
    "TriangulatedModel",
    "FoldSample",
    "FoldPath",
    "SigmaZeroState",
    "SigmaZeroStates",
    "triangulate_skins",
    "project_state",
    "simulate_fold_path",
    "fold_both_ways",
    "find_sigma_zero_states",
    "extract_final_state",
    "construct_final_state",
    "check_final_state",
    "rigid_align",
    "write_trace",
]


class ConvergenceFailure(RuntimeError):
    def __init__(self, message: str, last_phi: float):
        super().__init__(f"{message} (last good phi = {last_phi:.12g})")
        self.last_phi = last_phi


class MissingFinalState(ValueError):
    pass


@dataclass(frozen=True)
class Crease:
    """Oriented crease p0->p1 with apex ``left``/``right`` in the two incident faces."""

    p0: int
    p1: int
    left: int
    right: int
    sign: float = 1.0

    def angle(self, X) -> float:
        return self.sign * dihedral_and_gradient(X, self.p0, self.p1, self.left, self.right)[0]

    def angle_and_gradient(self, X):
        ang, g = dihedral_and_gradient(X, self.p0, self.p1, self.left, self.right)
        return self.sign * ang, {v: self.sign * gv for v, gv in g.items()}


@dataclass(frozen=True)
class TriangulatedModel:
    """Constraint system of an extruded model.

    ``edges``/``rest`` are every fixed-length bar: mesh edges, one diagonal per
    rigid quad and the auxiliary skin diagonals. ``quads`` carry planarity.
    """

    model: ExtrudedModel
    edges: np.ndarray
    rest: np.ndarray
    quads: np.ndarray
    aux_edges: tuple
    aux_faces: tuple
    triangulated: bool
    phi_crease: Crease
    sigma_crease: Crease | None
    sigma_creases: tuple = ()

    @property
    def scale(self) -> float:
        return self.model.folded.scale

    @property
    def mesh(self) -> FoldedMesh:
        f = self.model.folded
        return FoldedMesh(
            f.vertices,
            f.faces,
            f.roles,
            pattern=f.pattern,
            meta=f.meta,
            fold_hint=f.fold_hint,
            aux_edges=frozenset(self.aux_edges),
        )

    def constraints(self, X, backend=None):
        return rigid_constraints(X, self.edges, self.rest, self.quads, self.scale, backend)


def _pick_diagonal(pattern, f):
    A, B, C, D = f
    d1 = np.linalg.norm(pattern[A] - pattern[C])
    d2 = np.linalg.norm(pattern[B] - pattern[D])
    if abs(d1 - d2) <= 1e-12 * max(d1, d2):
        return (A, C) if min(A, C) < min(B, D) else (B, D)
    return (A, C) if d1 < d2 else (B, D)


def _diagonal_crease(f, diag) -> Crease:
    A, B, C, D = f
    # with the quad counter-clockwise, A->C has D on the left and B on the right
    if diag == (A, C):
        return Crease(A, C, D, B)
    return Crease(B, D, A, C)


def _apex_index(mesh: FoldedMesh, fi: int, a: int, b: int) -> int:
    # the corner of face ``fi`` farthest from the line a-b
    cand = [v for v in mesh.faces[fi] if v not in (a, b)]
    p0, p1 = mesh.vertices[a], mesh.vertices[b]
    e = (p1 - p0) / np.linalg.norm(p1 - p0)
    return max(cand, key=lambda v: np.linalg.norm(np.cross(mesh.vertices[v] - p0, e)))


def _mesh_crease(mesh: FoldedMesh, a: int, b: int) -> Crease:
    ei = mesh.edge_id(a, b)
    p0, p1 = (int(x) for x in mesh.edges[ei])
    fl, fr = mesh.edge_faces[ei]
    return Crease(p0, p1, _apex_index(mesh, fl, p0, p1), _apex_index(mesh, fr, p0, p1))


def _mirror_creases(m: ExtrudedModel) -> list[tuple[int, int]]:
    """Interior mirror-line creases (straight-line edges between two Miura faces)."""
    mesh = m.folded
    cols = m.base.meta["cols"]
    out = []
    for (a, b), (fl, fr) in zip(mesh.edges, mesh.edge_faces):
        if fl < 0 or fr < 0 or mesh.roles[fl] != "miura" or mesh.roles[fr] != "miura":
            continue
        ka = m.origin[a][0] // (cols + 1)
        kb = m.origin[b][0] // (cols + 1)
        if ka == kb:
            out.append((int(a), int(b)))
    return out


def triangulate_skins(m: ExtrudedModel, triangulate: bool = True) -> TriangulatedModel:
    """Add one auxiliary diagonal to every skin parallelogram and collect all constraints.

    With ``triangulate=False`` skin faces stay rigid quads (the plain extruded model).
    """
    mesh = m.folded
    pat = m.pattern
    bars = {tuple(int(x) for x in e) for e in mesh.edges}
    quads, aux, aux_faces, sig = [], [], [], []
    for fi, f in enumerate(mesh.faces):
        if len(f) != 4:
            continue
        diag = _pick_diagonal(pat, f)
        key = (min(diag), max(diag))
        bars.add(key)
        skin = mesh.roles[fi].startswith("skin")
        if skin and triangulate:
            aux.append(key)
            aux_faces.append(fi)
            sig.append(_diagonal_crease(f, diag))
        else:
            quads.append(f)
    edges = np.array(sorted(bars), dtype=np.int64)
    rest = np.linalg.norm(pat[edges[:, 0]] - pat[edges[:, 1]], axis=1)
    centre = mesh.vertices.mean(axis=0)

    def mid(c):
        return np.linalg.norm(0.5 * (mesh.vertices[c[0]] + mesh.vertices[c[1]]) - centre)

    mir = _mirror_creases(m)
    if not mir:
        raise ValueError("model has no interior mirror-line crease to drive")
    a, b = min(mir, key=lambda e: (round(mid(e), 9), e))
    phi = _mesh_crease(mesh, a, b)
    if phi.angle(mesh.vertices) < 0:
        phi = Crease(phi.p0, phi.p1, phi.left, phi.right, -1.0)
    sigma = None
    if sig:
        sigma = min(sig, key=lambda c: (round(mid((c.p0, c.p1)), 9), c.p0, c.p1))
    return TriangulatedModel(
        m,
        edges,
        rest,
        np.array(quads, dtype=np.int64).reshape(-1, 4),
        tuple(aux),
        tuple(aux_faces),
        triangulate,
        phi,
        sigma,
        tuple(sig),
    )


# ----------------------------------------------------------------------------
# projection
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class _Pins:
    anchor: int
    second: int
    third: int
    ref: np.ndarray
    basis: np.ndarray  # (6, 3) rows: x,y,z of anchor; 2 normals of first edge; face normal

    def rows(self, X, n):
        J = np.zeros((6, 3 * n))
        r = np.zeros(6)
        verts = (self.anchor, self.anchor, self.anchor, self.second, self.second, self.third)
        for i, (v, d) in enumerate(zip(verts, self.basis)):
            J[i, 3 * v : 3 * v + 3] = d
            r[i] = d @ (X[v] - self.ref[v])
        return r, J


def _make_pins(t: TriangulatedModel, X) -> _Pins:
    c = t.phi_crease
    p0, p1, ap = c.p0, c.p1, c.left
    e = X[p1] - X[p0]
    e /= np.linalg.norm(e)
    nrm = np.cross(e, X[ap] - X[p0])
    nrm /= np.linalg.norm(nrm)
    b = np.cross(nrm, e)
    basis = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], b, nrm, nrm], dtype=float)
    return _Pins(p0, p1, ap, np.array(X, copy=True), basis)


def _wrap(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _unwrap_phi(a: float) -> float:
    # fold angles along the path live in [0, pi]; measured values just past pi come back negative
    return a + 2.0 * math.pi if a < -0.5 * math.pi else a


def _drive_row(crease: Crease, X, target, n, scale):
    ang, g = crease.angle_and_gradient(X)
    row = np.zeros(3 * n)
    for v, gv in g.items():
        row[3 * v : 3 * v + 3] += gv * scale
    return _wrap(ang - target) * scale, row


def _system(t, X, drive, target, pins, backend):
    n = len(X)
    r, J = t.constraints(X, backend)
    rd, jd = _drive_row(drive, X, target, n, t.scale)
    rp, jp = pins.rows(X, n)
    return np.concatenate([r, [rd], rp]), np.vstack([J, jd[None, :], jp])


def project_state(
    t: TriangulatedModel,
    X,
    target: float,
    drive: Crease | None = None,
    pins: _Pins | None = None,
    tol: float | None = None,
    max_iter: int = 40,
    backend=None,
):
    """Damped Newton projection onto the constraint set with the drive crease at ``target``.

    Returns ``(X, max residual)``; raises ConvergenceFailure when the residual
    does not reach ``tol`` (default ``1e-10 * scale``).
    """
    drive = drive or t.phi_crease
    X = np.array(X, dtype=float)
    pins = pins or _make_pins(t, X)
    tol = 1e-10 * t.scale if tol is None else tol
    r, J = _system(t, X, drive, target, pins, backend)
    res = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if res < tol:
            return X, res
        dx = -np.linalg.lstsq(J, r, rcond=1e-12)[0].reshape(X.shape)
        alpha = 1.0
        while alpha >= 1.0 / 64:
            Y = X + alpha * dx
            r2, J2 = _system(t, Y, drive, target, pins, backend)
            res2 = float(np.max(np.abs(r2)))
            if np.isfinite(res2) and res2 < res:
                break
            alpha *= 0.5
        else:
            break
        X, r, J, res = Y, r2, J2, res2
    if res < tol:
        return X, res
    raise ConvergenceFailure(f"Newton projection stalled at residual {res:.3e}", float("nan"))


# ----------------------------------------------------------------------------
# path continuation
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldSample:
    phi: float
    sigma: float
    residual: float
    vertices: np.ndarray


@dataclass(frozen=True)
class FoldPath:
    samples: tuple
    model: TriangulatedModel
    meta: dict = field(default_factory=dict)

    @property
    def phi(self) -> np.ndarray:
        return np.array([s.phi for s in self.samples])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([s.sigma for s in self.samples])

    @property
    def residual(self) -> np.ndarray:
        return np.array([s.residual for s in self.samples])

    def __len__(self):
        return len(self.samples)


def _sigma(t: TriangulatedModel, X) -> float:
    return t.sigma_crease.angle(X) if t.sigma_crease is not None else float("nan")


def _phi(t: TriangulatedModel, X) -> float:
    return _unwrap_phi(t.phi_crease.angle(X))


def simulate_fold_path(
    t: TriangulatedModel,
    phi_from: float,
    phi_to: float,
    step: float,
    start=None,
    min_step: float = 1e-6,
    tol: float | None = None,
    switch_fraction: float = 0.05,
    backend=None,
) -> FoldPath:
    """Continue the folding motion from ``phi_from`` to ``phi_to`` in steps of at most ``step``.

    ``start`` (default: the construction state) is first carried to
    ``phi_from`` without recording. Samples are taken at every accepted step.
    When ``phi_to`` is pi the fold angle stops being a usable parameter (the
    mirror creases flatten onto each other), so over the last
    ``switch_fraction`` of the range the drive moves to sigma, which is
    marched to zero; ``meta["drive_switch"]`` records where that happened.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    X = np.array(t.model.folded.vertices if start is None else start, dtype=float)
    pins = _make_pins(t, X)
    tol = 1e-10 * t.scale if tol is None else tol
    phi0 = _phi(t, X)
    X, res = project_state(t, X, phi0, pins=pins, tol=tol, backend=backend)
    args = (pins, tol, min_step, backend)
    if abs(phi0 - phi_from) > 1e-12:
        X, res = _march(t, X, t.phi_crease, phi0, phi_from, step, *args)[-1][1:]
    meta = {"phi_from": phi_from, "phi_to": phi_to, "step": step, "drive_switch": None}
    to_final = abs(phi_to - math.pi) < 1e-9 and phi_to > phi_from and t.sigma_crease is not None
    stop = phi_to - switch_fraction * abs(phi_to - phi_from) if to_final else phi_to
    run = _march(t, X, t.phi_crease, phi_from, stop, step, *args, first_res=res)
    if phi_to == 0.0:
        run[-1] = _snap_developed(t, run[-1], meta)
    if to_final:
        Xs = run[-1][1]
        meta["drive_switch"] = _phi(t, Xs)
        s0 = _sigma(t, Xs)
        tail = _march(t, Xs, t.sigma_crease, s0, 0.0, step, *args)
        run += tail[1:]
    samples = tuple(FoldSample(_phi(t, Y), _sigma(t, Y), r, Y) for _, Y, r in run)
    return FoldPath(samples, t, meta)


def _march(t, X, drive, a, b, step, pins, tol, min_step, backend, first_res=0.0):
    """Step the angle of ``drive`` from ``a`` to ``b``; returns [(value, X, residual)]."""
    out = [(a, X, first_res)]
    direction = 1.0 if b >= a else -1.0
    h = step
    val = a
    prev = None
    while direction * (b - val) > 1e-15:
        hh = min(h, abs(b - val))
        target = val + direction * hh
        if prev is not None:
            # secant predictor along the path
            p_val, p_X = prev
            guess = X + (X - p_X) * (hh / abs(val - p_val))
        else:
            guess = X
        try:
            Y, res = project_state(t, guess, target, drive=drive, pins=pins, tol=tol, backend=backend)
            # reject branch jumps: the corrector must stay close to the predictor
            if np.max(np.linalg.norm(Y - guess, axis=1)) > max(10.0 * hh, 1e-3) * t.scale:
                raise ConvergenceFailure("branch jump", val)
        except ConvergenceFailure:
            h = 0.5 * hh
            if h < min_step:
                raise ConvergenceFailure("continuation failed", _phi(t, X)) from None
            continue
        prev = (val, X)
        val, X = target, Y
        out.append((val, X, res))
        h = min(step, 2.0 * h)
    return out


def _snap_developed(t, entry, meta, snap_tol: float = 1e-3):
    # The flat state is a singular point of the constraints, so Newton only
    # creeps toward it; the development itself is an exact solution there.
    val, X, res = entry
    flat = np.column_stack([t.model.pattern, np.zeros(len(X))])
    aligned, rms = rigid_align(flat, X)
    if rms > snap_tol * t.scale:
        return entry
    meta["developed_snap_rms"] = rms
    r, _ = t.constraints(aligned)
    return val, aligned, float(np.max(np.abs(r))) if len(r) else 0.0


def fold_both_ways(t: TriangulatedModel, step: float, lo: float = 0.0, hi: float = math.pi, **kw) -> FoldPath:
    """Fold from the construction state down to ``lo`` and up to ``hi``; merged ascending in phi."""
    X0 = t.model.folded.vertices
    phi_c = _phi(t, X0)
    down = simulate_fold_path(t, phi_c, lo, step, **kw)
    up = simulate_fold_path(t, phi_c, hi, step, **kw)
    samples = tuple(reversed(down.samples)) + up.samples[1:]
    meta = dict(up.meta, phi_from=lo, phi_to=hi, phi_construction=phi_c)
    return FoldPath(samples, t, meta)


# ----------------------------------------------------------------------------
# sigma = 0 states
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaZeroState:
    phi: float
    sigma: float
    vertices: np.ndarray
    label: str = ""


@dataclass(frozen=True)
class SigmaZeroStates:
    states: tuple
    model: TriangulatedModel

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def labelled(self, label: str) -> SigmaZeroState | None:
        for s in self.states:
            if s.label == label:
                return s
        return None


_LABELS = {1: ("final",), 2: ("developed", "final"), 3: ("developed", "construction", "final")}


def find_sigma_zero_states(path: FoldPath, tol: float = 1e-9, endpoint_tol: float = 1e-9) -> SigmaZeroStates:
    """Bracket sign changes of sigma along the path and bisect on the simulator."""
    t = path.model
    if t.sigma_crease is None or not len(path):
        return SigmaZeroStates((), t)
    pins = _make_pins(t, path.samples[0].vertices)
    found = []
    smp = path.samples
    for i, s in enumerate(smp):
        if abs(s.sigma) < endpoint_tol and (i == 0 or i == len(smp) - 1 or abs(s.sigma) <= tol):
            found.append(SigmaZeroState(s.phi, s.sigma, s.vertices))
    for s0, s1 in zip(smp, smp[1:]):
        if abs(s0.sigma) < tol or abs(s1.sigma) < tol:
            continue
        if np.sign(s0.sigma) == np.sign(s1.sigma):
            continue
        a, b, Xa, sa = s0.phi, s1.phi, s0.vertices, s0.sigma
        X = Xa
        for _ in range(200):
            m = 0.5 * (a + b)
            X, _ = project_state(t, X, m, pins=pins)
            sm = _sigma(t, X)
            if abs(sm) < tol or abs(b - a) < 1e-15:
                break
            if np.sign(sm) == np.sign(sa):
                a, sa = m, sm
            else:
                b = m
        found.append(SigmaZeroState(m, sm, X))
    found.sort(key=lambda s: s.phi)
    # merge duplicates from adjacent brackets
    merged = []
    for s in found:
        if merged and abs(s.phi - merged[-1].phi) < 1e-7:
            continue
        merged.append(s)
    labels = _LABELS.get(len(merged))
    if labels is None:
        out = tuple(SigmaZeroState(s.phi, s.sigma, s.vertices, f"state-{i}") for i, s in enumerate(merged))
    else:
        out = tuple(SigmaZeroState(s.phi, s.sigma, s.vertices, lab) for s, lab in zip(merged, labels))
    return SigmaZeroStates(out, t)


def rigid_align(A, B):
    """Rigidly move ``A`` onto ``B`` (Kabsch); returns (aligned A, RMS distance)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    ca, cb = A.mean(0), B.mean(0)
    u, _, vt = np.linalg.svd((A - ca).T @ (B - cb))
    d = np.sign(np.linalg.det(u @ vt))
    R = u @ np.diag([1.0, 1.0, d]) @ vt
    out = (A - ca) @ R + cb
    return out, float(np.sqrt(np.mean(np.sum((out - B) ** 2, axis=1))))


def check_final_state(mesh: FoldedMesh, plane_tol: float = 1e-7, share_tol: float = 1e-7):
    """Skins on two parallel planes and edge-sharing columns; returns (planes, columns)."""
    from .tiling import skin_columns, skin_planes

    planes = skin_planes(mesh)
    if planes.max_deviation > plane_tol * mesh.scale:
        raise MissingFinalState(f"final-state skins are {planes.max_deviation:.3e} off two parallel planes")
    columns = skin_columns(mesh, share_tol * mesh.scale)
    if not any(len(c) > 1 for c in columns.columns):
        raise MissingFinalState("no two skin-parallelograms share an edge")
    return planes, columns


def extract_final_state(states: SigmaZeroStates, plane_tol: float = 1e-7, share_tol: float = 1e-7) -> FoldedMesh:
    """Snapshot of the state labelled final, checked with :func:`check_final_state`."""
    fin = states.labelled("final")
    if fin is None:
        raise MissingFinalState("no sigma = 0 state labelled final")
    mesh = states.model.mesh.with_vertices(fin.vertices)
    check_final_state(mesh, plane_tol, share_tol)
    return mesh


def _web_angle(mesh: FoldedMesh) -> float:
    for f, r in zip(mesh.faces, mesh.roles):
        if r == "web":
            P = mesh.vertices[list(f)]
            u, v = P[1] - P[0], P[3] - P[0]
            return math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v)))
    raise MissingFinalState("model has no web strips")


def construct_final_state(m: ExtrudedModel, tol: float = 1e-9) -> FoldedMesh:
    """Final folded state built directly: the same cuts and depth on the alternate mode.

    With every mirror crease flat-folded (phi = pi), the Miura part is an
    accordion of stacked panels. Its opening angle is fixed by requiring the
    web strips to keep their construction-state shape, which is then checked
    against every rigid constraint of the triangulated model.
    """
    from scipy.optimize import brentq

    from .extrusion import extrude_mesh
    from .miura import alternate_mode_mesh

    from .extrusion import mesh_extrusion_direction
    from .miura import extract_cut_lines

    meta = m.folded.meta
    rows, cols, p = meta["rows"], meta["cols"], m.params
    target = _web_angle(m.folded)
    first = [m.cuts[0]]

    def web_angle(a):
        # every web is congruent, so one cut edge and the direction suffice
        base = alternate_mode_mesh(p, a, rows, cols)
        cut = extract_cut_lines(base, first)[0]
        n = mesh_extrusion_direction(base, [cut])
        k = cut.edge_kinds.index("diagonal")
        u, v = cut.edges[k]
        e = base.vertices[v] - base.vertices[u]
        return math.atan2(np.linalg.norm(np.cross(e, n)), float(np.dot(e, n)))

    f = lambda a: web_angle(a) - target  # noqa: E731
    # fine sampling toward pi: nearly flat-folded constructions close the accordion almost fully
    grid = np.concatenate([np.linspace(0.05, math.pi - 0.05, 61), math.pi - np.logspace(-1.4, -12, 45)])
    vals = [f(a) for a in grid]
    roots = [
        brentq(f, a, b, xtol=1e-15)
        for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:])
        if np.sign(fa) != np.sign(fb)
    ]
    if not roots:
        raise MissingFinalState("no accordion angle reproduces the web strips")

    def build(a):
        return extrude_mesh(alternate_mode_mesh(p, a, rows, cols), m.depth, list(m.cuts), params=p)

    fin = build(roots[0]).folded
    if fin.faces != m.folded.faces:
        raise MissingFinalState("final-state mesh does not match the model connectivity")
    t = triangulate_skins(m)
    r, _ = t.constraints(fin.vertices)
    if np.max(np.abs(r)) > tol * t.scale:
        raise MissingFinalState(f"final state violates the rigid constraints by {np.max(np.abs(r)):.3e}")
    out = t.mesh.with_vertices(fin.vertices)
    return replace(out, meta={**out.meta, "accordion_angle": roots[0]})


def write_trace(path: FoldPath, fh) -> None:
    """CSV trace: header ``phi,sigma,residual`` then one line per sample."""
    fh.write("phi,sigma,residual\n")
    for s in path.samples:
        fh.write(f"{s.phi:.17g},{s.sigma:.17g},{s.residual:.17g}\n")
