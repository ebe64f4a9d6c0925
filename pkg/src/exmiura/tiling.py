"""Skin-plane tilings of the final folded state: gap, shift, double-tiling solves and classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .mesh import FoldedMesh, newell_normal
from .miura import MiuraParams

__all__ = [
    "MalformedState",
    "NoBracket",
    "SkinPlanes",
    "SkinColumns",
    "TilingReport",
    "Classification",
    "DualTilingCheck",
    "INNER_STRUCTURE",
    "skin_planes",
    "skin_columns",
    "measure_gap_and_shift",
    "classify_tiling",
    "coverage_error",
    "verify_dual_tiling_structure",
    "final_state_for",
    "evaluate_tiling",
    "solve_double_tiling",
]

INNER_STRUCTURE = {
    "Gapped": "gapped columns",
    "Prism": "triangular prism, degenerated tetrahedron",
    "HipRoof": "hip-roof, tetrahedron",
    "Pyramid": "quadrangular cone, tetrahedron",
}


class MalformedState(ValueError):
    pass


class NoBracket(ValueError):
    pass


def _skin_faces(mesh: FoldedMesh) -> list[int]:
    return [i for i, r in enumerate(mesh.roles) if r.startswith("skin")]


# ----------------------------------------------------------------------------
# planes and columns
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SkinPlanes:
    normal: np.ndarray
    bottom_offset: float
    top_offset: float
    bottom: tuple
    top: tuple
    max_deviation: float

    @property
    def separation(self) -> float:
        return self.top_offset - self.bottom_offset

    def faces(self, which: str) -> tuple:
        return {"top": self.top, "bottom": self.bottom}[which]

    def offset(self, which: str) -> float:
        return {"top": self.top_offset, "bottom": self.bottom_offset}[which]


def skin_planes(mesh: FoldedMesh) -> SkinPlanes:
    """Fit the skin faces to (at most) two parallel planes.

    The common normal is the dominant direction of the skin-face normals;
    faces are split into two groups at the largest jump in height along it.
    ``max_deviation`` is the worst vertex distance from its group's plane.
    """
    faces = _skin_faces(mesh)
    if not faces:
        raise MalformedState("mesh has no skin faces")
    V = mesh.vertices
    normals = []
    for fi in faces:
        nrm = newell_normal(V[list(mesh.faces[fi])])
        normals.append(nrm / np.linalg.norm(nrm))
    normals = np.array(normals)
    _, _, vt = np.linalg.svd(normals)
    nu = vt[0]
    # keep +z up when the planes are horizontal
    if nu[2] < 0 or (abs(nu[2]) < 1e-12 and nu[np.argmax(np.abs(nu))] < 0):
        nu = -nu
    heights = np.array([V[list(mesh.faces[fi])] @ nu for fi in faces])
    centre = heights.mean(axis=1)
    order = np.argsort(centre)
    jumps = np.diff(centre[order])
    scale = mesh.scale
    if len(jumps) and jumps.max() > 1e-6 * scale:
        cut = int(np.argmax(jumps)) + 1
        low, high = order[:cut], order[cut:]
    else:
        low, high = order, np.array([], dtype=int)
    lo_off = float(np.mean(heights[low]))
    hi_off = float(np.mean(heights[high])) if len(high) else lo_off
    dev = max(
        float(np.max(np.abs(heights[low] - lo_off))),
        float(np.max(np.abs(heights[high] - hi_off))) if len(high) else 0.0,
    )
    return SkinPlanes(
        nu,
        lo_off,
        hi_off,
        tuple(sorted(faces[i] for i in low)),
        tuple(sorted(faces[i] for i in high)),
        dev,
    )


@dataclass(frozen=True)
class SkinColumns:
    """Edge-sharing chains of skin faces; ``shared`` lists (face, face, coincidence error)."""

    columns: tuple
    shared: tuple

    @property
    def max_share_deviation(self) -> float:
        return max((s[2] for s in self.shared), default=0.0)


def _edges(mesh: FoldedMesh, fi: int):
    f = mesh.faces[fi]
    return [(f[i], f[(i + 1) % len(f)]) for i in range(len(f))]


def _link_edges(mesh: FoldedMesh, fi: int):
    # columns chain through the edges a skin shares with Miura walls, never through web edges
    out = []
    for a, b in _edges(mesh, fi):
        fl, fr = mesh.edge_faces[mesh.edge_id(a, b)]
        nb = fr if fl == fi else fl
        if nb < 0 or mesh.roles[nb] != "web":
            out.append((a, b))
    return out


def _shared_edge(mesh: FoldedMesh, fa: int, fb: int, tol: float):
    V = mesh.vertices
    best = None
    for a, b in _link_edges(mesh, fa):
        for c, d in _link_edges(mesh, fb):
            err = min(
                max(np.linalg.norm(V[a] - V[c]), np.linalg.norm(V[b] - V[d])),
                max(np.linalg.norm(V[a] - V[d]), np.linalg.norm(V[b] - V[c])),
            )
            if err <= tol and (best is None or err < best[0]):
                best = (err, (a, b), (c, d))
    return best


def skin_columns(mesh: FoldedMesh, tol: float = 1e-7, faces=None) -> SkinColumns:
    """Group skin faces into columns: chains of faces whose edges coincide within ``tol``."""
    faces = list(_skin_faces(mesh) if faces is None else faces)
    parent = {f: f for f in faces}

    def root(f):
        while parent[f] != f:
            parent[f] = parent[parent[f]]
            f = parent[f]
        return f

    shared = []
    for i, fa in enumerate(faces):
        for fb in faces[i + 1 :]:
            hit = _shared_edge(mesh, fa, fb, tol)
            if hit is not None:
                shared.append((fa, fb, float(hit[0])))
                parent[root(fa)] = root(fb)
    groups: dict[int, list[int]] = {}
    for f in faces:
        groups.setdefault(root(f), []).append(f)
    cols = tuple(tuple(sorted(g)) for g in sorted(groups.values(), key=min))
    return SkinColumns(cols, tuple(shared))


# ----------------------------------------------------------------------------
# gap and shift
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TilingReport:
    g: float
    s: float
    d: float
    tiling_class: str
    periods: tuple
    s_raw: float
    plane: str
    width: float
    gap_spread: float = 0.0
    shift_spread: float = 0.0
    epsilon: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def inner_structure(self) -> str:
        return INNER_STRUCTURE[self.tiling_class]

    @property
    def coverage(self) -> float:
        """Skin area per period cell over the cell area (1 for a tiling)."""
        return self.width / (self.width + self.g)

    def as_dict(self) -> dict:
        return {
            "g": self.g,
            "s": self.s,
            "s_raw": self.s_raw,
            "d": self.d,
            "class": self.tiling_class,
            "inner_structure": self.inner_structure,
            "plane": self.plane,
            "column_width": self.width,
            "period_along": list(map(float, self.periods[0])),
            "period_across": list(map(float, self.periods[1])),
            "gap_spread": self.gap_spread,
            "shift_spread": self.shift_spread,
            "epsilon": self.epsilon,
        }


def _frame(mesh: FoldedMesh, planes: SkinPlanes, columns: SkinColumns):
    """In-plane unit vectors: ``u`` along the columns, ``v`` across them."""
    V = mesh.vertices
    if not columns.shared:
        raise MalformedState("skin faces are not edge-connected in columns")
    fa, fb, _ = min(columns.shared, key=lambda x: x[2])
    # the shared edges run across the column; the remaining sides run along it
    _, (a, b), _ = _shared_edge(mesh, fa, fb, np.inf)
    across = V[b] - V[a]
    f = mesh.faces[fa]
    i = f.index(a)
    along = None
    for j in (i - 1, i + 1):
        e = V[f[j % len(f)]] - V[a]
        if np.linalg.norm(np.cross(e, across)) > 1e-9 * np.linalg.norm(e) * np.linalg.norm(across):
            along = e
            break
    nu = planes.normal
    along = along - (along @ nu) * nu
    u = along / np.linalg.norm(along)
    v = np.cross(nu, u)
    return u, v, across


def _side_lengths(mesh: FoldedMesh, fi: int, u):
    """Length of the along-column sides of skin ``fi``."""
    V = mesh.vertices
    best = 0.0
    for a, b in _edges(mesh, fi):
        e = V[b] - V[a]
        c = abs(e @ u) / np.linalg.norm(e)
        if c > 1.0 - 1e-6:
            best = max(best, float(np.linalg.norm(e)))
    return best


def _wall_shift(mesh: FoldedMesh, fi: int, u, planes: SkinPlanes, opposite: float, tol: float):
    """Inward lean, along the columns, of the two walls standing on the across-column edges of skin ``fi``.

    Returns None when a wall is missing (patch boundary).
    """
    V = mesh.vertices
    f = mesh.faces[fi]
    centre = V[list(f)].mean(axis=0)
    nu = planes.normal
    total = 0.0
    walls = 0
    for a, b in _edges(mesh, fi):
        e = V[b] - V[a]
        if abs(e @ u) / np.linalg.norm(e) > 1.0 - 1e-6:
            continue
        ei = mesh.edge_id(a, b)
        fl, fr = mesh.edge_faces[ei]
        nb = fr if fl == fi else fl
        if nb < 0:
            return None
        far = [w for w in mesh.faces[nb] if w not in (a, b)]
        if any(abs(V[w] @ nu - opposite) > tol for w in far):
            return None
        shift = V[far].mean(axis=0) - 0.5 * (V[a] + V[b])
        # component along u in the oblique (edge, u) basis of the plane
        ee = e - (e @ nu) * nu
        M = np.array([[ee @ ee, ee @ u], [ee @ u, 1.0]])
        rhs = np.array([shift @ ee, shift @ u])
        coef = np.linalg.solve(M, rhs)
        inward = 1.0 if (centre - 0.5 * (V[a] + V[b])) @ u > 0 else -1.0
        total += inward * coef[1]
        walls += 1
    return total if walls == 2 else None


def measure_gap_and_shift(final: FoldedMesh, plane: str = "top", tol: float = 1e-7, epsilon: float | None = None) -> TilingReport:
    """Gap g and shift s of the skin columns on one skin plane.

    g is the signed distance between the facing boundary lines of adjacent
    columns (negative for overlap). s is how far, along the column direction,
    the two walls standing on a skin's across-column edges lean in toward
    each other before reaching the opposite plane: with g = 0 the cell above
    the skin closes in a ridge of length d - s, so s = 0 leaves a prism and
    s = d a pyramid apex. ``tol`` is relative to the model scale.
    """
    scale = final.scale
    planes = skin_planes(final)
    faces = planes.faces(plane)
    if not faces:
        raise MalformedState(f"no skin faces on the {plane} plane")
    columns = skin_columns(final, tol * scale, faces)
    # every skin is a translate of every other, so any chain fixes the directions
    u, v, _ = _frame(final, planes, skin_columns(final, tol * scale))
    V = final.vertices
    lines = []
    for col in columns.columns:
        pv = np.concatenate([V[list(final.faces[fi])] @ v for fi in col])
        lines.append((float(pv.min()), float(pv.max()), col))
    lines.sort(key=lambda x: x[0])
    merged = []
    for lo, hi, col in lines:
        if merged and abs(lo - merged[-1][0]) < tol * scale:
            continue
        merged.append((lo, hi, col))
    if len(merged) < 2:
        raise MalformedState(f"need two skin columns on the {plane} plane, found {len(merged)}")
    gaps = np.array([b[0] - a[1] for a, b in zip(merged, merged[1:])])
    width = float(np.mean([hi - lo for lo, hi, _ in merged]))
    d = float(np.mean([_side_lengths(final, fi, u) for fi in faces]))
    opposite = planes.offset("bottom" if plane == "top" else "top")
    shifts = [_wall_shift(final, fi, u, planes, opposite, max(tol * scale, 1e-9 * scale)) for fi in faces]
    shifts = np.array([s for s in shifts if s is not None])
    if not len(shifts):
        raise MalformedState("no skin face has walls on both across-column edges")
    s_raw = float(np.mean(shifts))
    eps = 1e-6 * d if epsilon is None else epsilon
    if -eps <= s_raw <= d + eps:
        s = min(max(s_raw, 0.0), d)
    else:
        s = s_raw % d
    # period vectors: one skin length along the column, one column step across
    a1 = d * u
    c0 = V[final.faces[merged[0][2][0]][0]]
    c1 = V[final.faces[merged[1][2][0]][0]]
    w = c1 - c0
    w = w - (w @ planes.normal) * planes.normal
    k = round((w @ u) / d)
    a2 = w - k * a1
    g = float(np.mean(gaps))
    rep = TilingReport(
        g=g,
        s=s,
        d=d,
        tiling_class="Gapped",
        periods=(a1, a2),
        s_raw=s_raw,
        plane=plane,
        width=width,
        gap_spread=float(np.ptp(gaps)),
        shift_spread=float(np.ptp(shifts)),
        epsilon=eps,
    )
    return replace(rep, tiling_class=classify_tiling(rep, eps).kind)


@dataclass(frozen=True)
class Classification:
    kind: str
    inner_structure: str

    def __eq__(self, other):
        if isinstance(other, str):
            return self.kind == other
        return isinstance(other, Classification) and self.kind == other.kind

    def __hash__(self):
        return hash(self.kind)

    def __str__(self):
        return self.kind


def classify_tiling(report, epsilon: float | None = None) -> Classification:
    """Gapped iff |g| > eps; otherwise Prism at s ~ 0, Pyramid at s ~ d, HipRoof between.

    ``report`` may be a TilingReport or any object with ``g``, ``s``, ``d``.
    """
    g, s, d = float(report.g), float(report.s), float(report.d)
    eps = 1e-6 * d if epsilon is None else float(epsilon)
    if abs(g) > eps:
        kind = "Gapped"
    elif s < eps:
        kind = "Prism"
    elif abs(s - d) < eps:
        kind = "Pyramid"
    else:
        kind = "HipRoof"
    return Classification(kind, INNER_STRUCTURE[kind])


def coverage_error(report: TilingReport) -> float:
    """Relative error between the skin area in one period cell and the cell area."""
    a1, a2 = report.periods
    cell = float(np.linalg.norm(np.cross(a1, a2)))
    skin = report.width * report.d
    return abs(skin - cell) / cell


# ----------------------------------------------------------------------------
# pyramid structure
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DualTilingCheck:
    ok: bool
    spreads: dict
    tolerance: float

    @property
    def max_spread(self) -> float:
        return max(self.spreads.values(), default=float("nan"))

    def __bool__(self):
        return self.ok


def verify_dual_tiling_structure(final: FoldedMesh, tol: float = 1e-7) -> DualTilingCheck:
    """Check that the four faces around each skin parallelogram close in one apex.

    For every skin face with all four neighbours, the neighbour planes are cut
    with the opposite skin plane; consecutive cut lines meet in four corner
    points whose diameter is the apex spread (0 for a pyramid, the ridge
    length for a hip roof, a whole edge for a prism).
    """
    planes = skin_planes(final)
    V = final.vertices
    nu = planes.normal
    spreads = {}
    for which, other in (("bottom", "top"), ("top", "bottom")):
        h = planes.offset(other)
        for fi in planes.faces(which):
            cuts = []
            for a, b in _edges(final, fi):
                fl, fr = final.edge_faces[final.edge_id(a, b)]
                nb = fr if fl == fi else fl
                if nb < 0:
                    break
                P = V[list(final.faces[nb])]
                m = newell_normal(P)
                cuts.append((m / np.linalg.norm(m), P.mean(axis=0)))
            else:
                pts = []
                for (n1, p1), (n2, p2) in zip(cuts, cuts[1:] + cuts[:1]):
                    # point on both neighbour planes and on the opposite skin plane
                    A = np.array([n1, n2, nu])
                    if abs(np.linalg.det(A)) < 1e-12:
                        pts = None
                        break
                    pts.append(np.linalg.solve(A, [n1 @ p1, n2 @ p2, h]))
                if pts is None:
                    spreads[fi] = float("inf")
                    continue
                pts = np.array(pts)
                spreads[fi] = float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=2)))
    limit = tol * final.scale
    ok = bool(spreads) and all(s < limit for s in spreads.values())
    return DualTilingCheck(ok, spreads, limit)


# ----------------------------------------------------------------------------
# pipeline and solves
# ----------------------------------------------------------------------------


def final_state_for(p: MiuraParams, spec, rows: int = 6, cols: int = 6):
    """Build the extruded model for ``p`` and return (model, final state)."""
    from .extrusion import build_extruded_model
    from .fold_sim import construct_final_state

    m = build_extruded_model(p, spec, rows, cols)
    return m, construct_final_state(m)


def evaluate_tiling(p: MiuraParams, spec, rows: int = 6, cols: int = 6, plane: str = "top", epsilon=None) -> TilingReport:
    _, fin = final_state_for(p, spec, rows, cols)
    return measure_gap_and_shift(fin, plane, epsilon=epsilon)


_FREE = ("rho", "theta", "w_over_l")


def _with(p: MiuraParams, name: str, value: float) -> MiuraParams:
    if name == "rho":
        return replace(p, rho=value)
    if name == "theta":
        return replace(p, theta=value)
    if name == "w_over_l":
        return replace(p, w=value * p.l)
    raise ValueError(f"free parameter must be one of {_FREE}, got {name!r}")


def _bracket(f, lo: float, hi: float, samples: int):
    xs = np.linspace(lo, hi, samples)
    prev_x, prev_f = None, None
    for x in xs:
        try:
            fx = f(x)
        except ValueError:  # parameters outside the buildable range
            prev_x, prev_f = None, None
            continue
        if prev_f is not None and np.sign(fx) != np.sign(prev_f):
            return prev_x, x
        if fx == 0.0:
            return x, x
        prev_x, prev_f = x, fx
    raise NoBracket(f"no sign change on [{lo:.6g}, {hi:.6g}]")


def _root(f, lo, hi, scan: int, xtol: float):
    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        if scan < 2:
            raise NoBracket(f"g has the same sign at both ends of [{lo:.6g}, {hi:.6g}]")
        lo, hi = _bracket(f, lo, hi, scan)
    if lo == hi:
        return lo
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_double_tiling(
    base: MiuraParams,
    spec,
    free_param: str = "rho",
    bracket=(0.55 * math.pi, 0.97 * math.pi),
    rows: int = 6,
    cols: int = 6,
    s_target: float | None = None,
    outer_param: str = "rho",
    outer_bracket=None,
    scan: int = 0,
    tol: float = 1e-7,
    s_tol: float = 1e-7,
) -> MiuraParams:
    """Adjust ``free_param`` until the skin columns close up (g = 0).

    With ``s_target`` an outer root find on ``outer_param`` drives the shift
    to the target, re-solving g = 0 at every outer step (the inner bracket is
    then scanned with ``max(scan, 12)`` samples). The shift vanishes only in
    the flat-folded limit rho -> pi, which meshes cannot reach, so when the
    shift error keeps one sign but is within ``s_tol * d`` at an end of the
    outer bracket, that end is returned.
    """
    if free_param not in _FREE or outer_param not in _FREE:
        raise ValueError(f"free parameters must be among {_FREE}")
    limit = tol * max(base.l, base.w)

    def inner(p: MiuraParams, sc: int) -> MiuraParams:
        g = lambda x: evaluate_tiling(_with(p, free_param, x), spec, rows, cols).g  # noqa: E731
        x = _root(g, bracket[0], bracket[1], sc, 1e-15)
        q = _with(p, free_param, x)
        got = evaluate_tiling(q, spec, rows, cols).g
        if abs(got) > limit:
            raise NoBracket(f"g = {got:.3e} after refinement (limit {limit:.3e})")
        return q

    if s_target is None:
        return inner(base, scan)
    if outer_param == free_param:
        raise ValueError("outer_param and free_param must differ")
    if outer_bracket is None:
        raise ValueError("an s target needs outer_bracket")
    sc = max(scan, 12)
    solved = {}

    def shift_error(y):
        if y not in solved:
            q = inner(_with(base, outer_param, y), sc)
            solved[y] = (q, evaluate_tiling(q, spec, rows, cols).s_raw - s_target)
        return solved[y][1]

    lo, hi = outer_bracket
    flo, fhi = shift_error(lo), shift_error(hi)
    if np.sign(flo) == np.sign(fhi):
        edge = min((abs(flo), lo), (abs(fhi), hi))
        if edge[0] <= s_tol * spec.depth:
            return solved[edge[1]][0]
        raise NoBracket(f"shift error has one sign on the outer bracket ({flo:.4g}, {fhi:.4g})")
    y = brentq(shift_error, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    shift_error(y)
    return solved[y][0]
