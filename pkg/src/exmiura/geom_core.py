"""Vector utilities, the cut-vertex developability residual and its horizontal-circle oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "rotate_z",
    "rotation_z",
    "unit",
    "angle_between",
    "VertexSectorData",
    "eq1_residual",
    "eq2_direction",
    "solve_horizontal_direction",
    "ccw_angle_xy",
]


def rotation_z(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_z(theta: float, v) -> np.ndarray:
    """Rotate ``v`` (or an ``(..., 3)`` stack of vectors) by ``theta`` about +Z."""
    v = np.asarray(v, dtype=float)
    return v @ rotation_z(theta).T


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def angle_between(a, b) -> float:
    """Unsigned angle in [0, pi], robust near 0 and pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))


def ccw_angle_xy(a, b) -> float:
    """Counter-clockwise angle in [0, 2pi) from ``a`` to ``b`` projected on XY, viewed from +z."""
    t = np.arctan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])
    return float(t % (2.0 * np.pi))


@dataclass(frozen=True)
class VertexSectorData:
    """Cut edges at one split vertex.

    ``gamma`` is the sector-angle sum kept on the fixed side of the cut; ``alpha``
    and ``beta`` are the strip angles once the extrusion direction is known.
    """

    e_plus: np.ndarray
    e_minus: np.ndarray
    gamma: float
    alpha: float = float("nan")
    beta: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "e_plus", np.asarray(self.e_plus, dtype=float))
        object.__setattr__(self, "e_minus", np.asarray(self.e_minus, dtype=float))

    def with_direction(self, n) -> "VertexSectorData":
        return VertexSectorData(
            self.e_plus,
            self.e_minus,
            self.gamma,
            angle_between(n, self.e_plus),
            angle_between(self.e_minus, n),
        )

    def angle_defect(self, n) -> float:
        """2pi - (alpha + beta + gamma) for the direction ``n``."""
        s = self.with_direction(n)
        return 2.0 * np.pi - (s.alpha + s.beta + s.gamma)


def eq1_residual(n, sector: VertexSectorData) -> float:
    """Dot-product form of the developability condition at a split vertex.

    Zero iff ``n`` lies on the spherical ellipse with foci ``e_plus``/``e_minus``
    (or on its spurious companion branches).  The sign is returned raw.
    """
    n = np.asarray(n, dtype=float)
    c = np.cos(sector.gamma)
    a = float(np.dot(sector.e_plus, n))
    b = float(np.dot(sector.e_minus, n))
    return (c * c - 1.0) * float(np.dot(n, n)) + a * a + b * b - 2.0 * c * a * b


def eq2_direction(e_plus, e_minus, gamma: float) -> np.ndarray:
    """Closed-form skin-parallel extrusion direction for one cut vertex.

    Both edges are projected onto the skin plane (z = 0) first; ``n`` is the
    quarter-turn of ``e_minus - R(-gamma) e_plus``.
    """
    ep = np.array(e_plus, dtype=float)
    em = np.array(e_minus, dtype=float)
    ep[2] = 0.0
    em[2] = 0.0
    x = em - rotate_z(-gamma, ep)
    norm = np.hypot(x[0], x[1])
    if norm < 1e-14:
        raise ValueError("degenerate cut vertex: e_minus coincides with R(-gamma) e_plus")
    n = rotate_z(np.pi / 2.0, x) / norm
    n[2] = 0.0
    return n


def solve_horizontal_direction(
    sector: VertexSectorData,
    samples: int = 4096,
    tol: float = 1e-13,
    zero_tol: float = 1e-11,
) -> list[np.ndarray]:
    """All horizontal unit ``n`` with a vanishing residual, by azimuth scan + bisection.

    Independent of :func:`eq2_direction`.  When the residual vanishes on the whole
    circle (a straight cut) every sample point is returned.
    """
    if samples < 4096:
        raise ValueError("oracle needs at least 4096 azimuth samples")
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    dirs = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    c = np.cos(sector.gamma)
    a = dirs @ sector.e_plus
    b = dirs @ sector.e_minus
    r = (c * c - 1.0) + a * a + b * b - 2.0 * c * a * b
    if np.all(np.abs(r) < zero_tol):
        return [d for d in dirs]

    def f(az):
        return eq1_residual([np.cos(az), np.sin(az), 0.0], sector)

    roots: list[float] = []
    for i in range(samples):
        j = (i + 1) % samples
        lo, hi = t[i], t[i] + 2.0 * np.pi / samples
        flo, fhi = r[i], r[j]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi > 0.0 or fhi == 0.0:
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0.0) == (flo > 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo < tol:
                break
        roots.append(0.5 * (lo + hi))
    out = []
    for az in roots:
        n = np.array([np.cos(az), np.sin(az), 0.0])
        if abs(eq1_residual(n, sector)) < zero_tol:
            out.append(n)
    return out
