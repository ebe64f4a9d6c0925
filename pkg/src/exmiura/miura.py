"""Miura-Ori parameterisation, closed-form angles, folded meshes and oblique cutting lines.

World frame: skin planes are horizontal (bottom z = 0, top z = height).  Mirror
creases (length ``w``) zig-zag in vertical planes y = const; the oblique creases
(length ``l``) are horizontal ridges/valleys.  Grid vertex (k, j) sits on
mirror line k, zig-zag line j; face (k, j) spans mirror lines k..k+1 and
zig-zag lines j..j+1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom_core import rotate_z, unit
from .mesh import FoldedMesh

__all__ = [
    "DegenerateParameters",
    "MiuraParams",
    "MiuraDerived",
    "derive_angles",
    "LOCAL_TO_WORLD",
    "crease_pattern_coords",
    "fold_miura_mesh",
    "alternate_mode_mesh",
    "CutLine",
    "extract_cut_lines",
    "admissible_cut_starts",
    "default_cut_starts",
    "grid_index",
]

# Rotation taking the closed-form local frame to the world frame.
LOCAL_TO_WORLD = -math.pi / 2.0


class DegenerateParameters(ValueError):
    pass


@dataclass(frozen=True)
class MiuraParams:
    """Shape of the Miura parallelogram (l, w, theta) and the mirror-crease fold angle rho."""

    l: float
    w: float
    theta: float
    rho: float

    def __post_init__(self):
        for name in ("l", "w", "theta", "rho"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.l <= 0 or self.w <= 0:
            raise ValueError("lengths l and w must be positive")
        if not 0.0 < self.theta <= math.pi / 2:
            raise ValueError(f"theta must lie in (0, pi/2), got {self.theta / math.pi:.6g}pi")
        if not 0.0 <= self.rho <= math.pi:
            raise ValueError(f"rho must lie in (0, pi), got {self.rho / math.pi:.6g}pi")

    def require_foldable(self) -> None:
        """Reject the degenerate corners that only closed-form evaluation tolerates."""
        if self.theta >= math.pi / 2:
            raise DegenerateParameters("theta = pi/2 gives a degenerate (rectangular) Miura")
        if self.rho <= 0.0 or self.rho >= math.pi:
            raise DegenerateParameters("rho must lie strictly inside (0, pi) to build a mesh")

    def replace(self, **kw) -> "MiuraParams":
        d = dict(l=self.l, w=self.w, theta=self.theta, rho=self.rho)
        d.update(kw)
        return MiuraParams(**d)

    @property
    def diagonal(self) -> float:
        return math.sqrt(self.w**2 + self.l**2 - 2 * self.w * self.l * math.cos(self.theta))


@dataclass(frozen=True)
class MiuraDerived:
    """Closed-form angles at a class-1 cut vertex, in the local frame (x, y horizontal)."""

    xi: float
    zeta: float
    gamma: float
    L: float
    h: float
    height: float
    e_plus: np.ndarray = field(repr=False)
    e_minus: np.ndarray = field(repr=False)
    params: MiuraParams | None = None

    @property
    def e_plus_world(self) -> np.ndarray:
        return rotate_z(LOCAL_TO_WORLD, self.e_plus)

    @property
    def e_minus_world(self) -> np.ndarray:
        return rotate_z(LOCAL_TO_WORLD, self.e_minus)


def derive_angles(p: MiuraParams) -> MiuraDerived:
    l, w, th, rho = p.l, p.w, p.theta, p.rho
    L = p.diagonal
    if L <= 0.0:
        raise DegenerateParameters("parallelogram diagonal has zero length")
    cos_xi = math.sin(th) * math.cos(rho / 2)
    sin_xi = math.hypot(math.sin(th) * math.sin(rho / 2), math.cos(th))
    cos_zeta = math.cos(th) / sin_xi
    sin_zeta = math.sin(th) * math.sin(rho / 2) / sin_xi
    cos_g = (l * math.cos(2 * th) - w * math.cos(th)) / L
    sin_g = math.sin(th) * (w - 2 * l * math.cos(th)) / L
    gamma = math.atan2(sin_g, cos_g) % (2 * math.pi)
    c_half = math.cos(rho / 2)
    if abs(c_half) < 1e-300:
        raise DegenerateParameters("cos(rho/2) = 0: auxiliary length h is unbounded")
    h = l * sin_xi / c_half
    e_plus = np.array([-cos_xi, -sin_xi, 0.0])
    # Unit diagonal from the class-1 vertex down to the opposite skin plane.
    e_minus = np.array([l * cos_xi, w * cos_zeta - l * sin_xi, -w * sin_zeta]) / L
    return MiuraDerived(
        xi=math.atan2(sin_xi, cos_xi),
        zeta=math.atan2(sin_zeta, cos_zeta),
        gamma=gamma,
        L=L,
        h=h,
        height=w * sin_zeta,
        e_plus=e_plus,
        e_minus=e_minus,
        params=p,
    )


def grid_index(k: int, j: int, cols: int) -> int:
    return k * (cols + 1) + j


def crease_pattern_coords(p: MiuraParams, rows: int, cols: int) -> np.ndarray:
    k, j = np.meshgrid(np.arange(rows + 1), np.arange(cols + 1), indexing="ij")
    x = j * p.w + (k % 2) * p.l * math.cos(p.theta)
    y = k * p.l * math.sin(p.theta)
    return np.stack([x.ravel(), y.ravel()], axis=1).astype(float)


def _grid_faces(rows: int, cols: int) -> list[tuple[int, int, int, int]]:
    g = lambda k, j: grid_index(k, j, cols)  # noqa: E731
    return [
        (g(k, j), g(k, j + 1), g(k + 1, j + 1), g(k + 1, j))
        for k in range(rows)
        for j in range(cols)
    ]


def _check_grid(rows: int, cols: int) -> None:
    if rows < 2 or cols < 2:
        raise ValueError("rows and cols must both be >= 2")


def fold_miura_mesh(p: MiuraParams, rows: int, cols: int) -> FoldedMesh:
    """Ordinary-mode folded Miura-Ori with ``rows`` x ``cols`` faces."""
    _check_grid(rows, cols)
    p.require_foldable()
    d = derive_angles(p)
    sx, cx = math.sin(d.xi), math.cos(d.xi)
    cz = math.cos(d.zeta)
    k, j = np.meshgrid(np.arange(rows + 1), np.arange(cols + 1), indexing="ij")
    x = j * p.w * cz + (k % 2) * p.l * sx
    y = k * p.l * cx
    z = (j % 2) * d.height
    verts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1).astype(float)
    faces = _grid_faces(rows, cols)
    return FoldedMesh(
        verts,
        faces,
        ("miura",) * len(faces),
        pattern=crease_pattern_coords(p, rows, cols),
        meta={"rows": rows, "cols": cols, "mode": "ordinary", "height": d.height, "params": p},
    )


def alternate_mode_mesh(p: MiuraParams, accordion_angle: float, rows: int, cols: int) -> FoldedMesh:
    """Miura-Ori folded in the periodic alternate mode.

    Mirror creases sit at +-pi so neighbouring rows stack into panels; the panels
    hinge on the oblique creases like an accordion with fold angle ``accordion_angle``.
    ``p.rho`` is ignored.
    """
    _check_grid(rows, cols)
    if not 0.0 < accordion_angle < math.pi:
        raise ValueError("accordion_angle must lie in (0, pi)")
    if p.theta >= math.pi / 2:
        raise DegenerateParameters("theta = pi/2 gives a degenerate (rectangular) Miura")
    half_open = (math.pi - accordion_angle) / 2.0
    width = p.w * math.sin(p.theta)
    # cross-section (y, z) of every oblique-crease line
    yz = np.zeros((cols + 1, 2))
    for jj in range(cols):
        # spreading toward -y keeps every crease sign of the flat-folded ordinary state
        step = np.array([-math.sin(half_open), (1.0 if jj % 2 == 0 else -1.0) * math.cos(half_open)])
        yz[jj + 1] = yz[jj] + width * step
    k, j = np.meshgrid(np.arange(rows + 1), np.arange(cols + 1), indexing="ij")
    x = j * p.w * math.cos(p.theta) + (k % 2) * p.l
    verts = np.stack([x.ravel(), yz[j.ravel(), 0], yz[j.ravel(), 1]], axis=1).astype(float)
    faces = _grid_faces(rows, cols)
    hint = {}
    g = lambda kk, jj: grid_index(kk, jj, cols)  # noqa: E731
    for kk in range(1, rows):
        for jj in range(cols):
            a, b = g(kk, jj), g(kk, jj + 1)
            # mirror creases alternate along each line, as in the ordinary mode
            sign = 1.0 if (kk + jj) % 2 == 0 else -1.0
            hint[(min(a, b), max(a, b))] = sign * math.pi
    return FoldedMesh(
        verts,
        faces,
        ("miura",) * len(faces),
        pattern=crease_pattern_coords(p, rows, cols),
        meta={
            "rows": rows,
            "cols": cols,
            "mode": "alternate",
            "height": float(yz[:, 1].max() - yz[:, 1].min()),
            "accordion_angle": accordion_angle,
            "params": p,
        },
        fold_hint=hint,
    )


@dataclass(frozen=True)
class CutLine:
    """Oblique cutting line: diagonals in even face rows, oblique creases in odd rows.

    ``vertices[i]`` lies on mirror line i.  ``classes`` tags each vertex 1..4
    (1/2 on the top skin plane, 3/4 on the bottom; odd classes have the diagonal
    below them).  ``e_plus`` points to the next vertex, ``e_minus`` to the
    previous one (nan at the ends).
    """

    start: int
    vertices: tuple
    grid: tuple
    classes: tuple
    edge_kinds: tuple
    e_plus: np.ndarray = field(repr=False)
    e_minus: np.ndarray = field(repr=False)

    @property
    def edges(self) -> list[tuple[int, int]]:
        v = self.vertices
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]


def _cut_column(j0: int, k: int) -> int:
    return j0 - (k + 1) // 2


def admissible_cut_starts(rows: int, cols: int) -> list[int]:
    """Start columns whose cut edges are all interior edges or face diagonals."""
    out = []
    for j0 in range(cols + 1):
        ok = True
        for k in range(rows):
            j = _cut_column(j0, k)
            lo, hi = (1, cols) if k % 2 == 0 else (1, cols - 1)
            ok = ok and lo <= j <= hi
        if ok:
            out.append(j0)
    return out


def default_cut_starts(rows: int, cols: int, spacing: int = 1) -> list[int]:
    """Every ``spacing``-th admissible start, anchored at the rightmost one."""
    adm = admissible_cut_starts(rows, cols)
    if not adm:
        return []
    top = adm[-1]
    return sorted(j for j in adm if (top - j) % spacing == 0)


def extract_cut_lines(mesh: FoldedMesh, starts=None) -> list[CutLine]:
    rows, cols = mesh.meta["rows"], mesh.meta["cols"]
    if starts is None:
        starts = default_cut_starts(rows, cols)
    adm = set(admissible_cut_starts(rows, cols))
    height = mesh.meta.get("height", 0.0)
    lines = []
    for j0 in starts:
        if j0 not in adm:
            raise ValueError(f"cut start column {j0} leaves the mesh; admissible: {sorted(adm)}")
        grid = tuple((k, _cut_column(j0, k)) for k in range(rows + 1))
        vids = tuple(grid_index(k, j, cols) for k, j in grid)
        kinds = tuple("diagonal" if k % 2 == 0 else "oblique" for k in range(rows))
        pts = mesh.vertices[list(vids)]
        ep = np.full((len(vids), 3), np.nan)
        em = np.full((len(vids), 3), np.nan)
        for i in range(len(vids)):
            if i + 1 < len(vids):
                ep[i] = unit(pts[i + 1] - pts[i])
            if i > 0:
                em[i] = unit(pts[i - 1] - pts[i])
        classes = []
        for (k, j), p in zip(grid, pts):
            top = p[2] > 0.5 * height if height > 0 else (j % 2 == 1)
            odd = k % 2 == 1
            classes.append((1 if odd else 2) if top else (3 if odd else 4))
        lines.append(CutLine(j0, vids, grid, tuple(classes), kinds, ep, em))
    return lines
