"""Polygon mesh container shared by the Miura, extrusion and simulation layers."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping

import numpy as np

ROLES = ("miura", "skin-top", "skin-bottom", "web")


def newell_normal(pts: np.ndarray) -> np.ndarray:
    nxt = np.roll(pts, -1, axis=0)
    n = np.array(
        [
            np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
            np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
            np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
        ]
    )
    nn = np.linalg.norm(n)
    return n / nn if nn > 0 else n


def signed_dihedral(p0, p1, a, b) -> float:
    """Fold angle of edge p0->p1 between the face left of it (apex ``a``) and right (apex ``b``).

    Positive for a mountain seen from the side the pattern normal points to.
    """
    e = p1 - p0
    e = e / np.linalg.norm(e)
    n1 = np.cross(e, a - p0)
    n2 = np.cross(b - p0, e)
    n1 /= np.linalg.norm(n1)
    n2 /= np.linalg.norm(n2)
    return float(np.arctan2(np.dot(np.cross(n1, n2), e), np.dot(n1, n2)))


@dataclass(frozen=True)
class FoldedMesh:
    """Folded polyhedral surface with per-face roles.

    ``faces`` are vertex index tuples, counter-clockwise in the crease pattern.
    ``pattern`` holds planar crease-pattern coordinates when known.
    ``fold_hint`` overrides measured fold angles on edges where the measurement
    is ambiguous (stacked layers folded by +-pi).
    """

    vertices: np.ndarray
    faces: tuple
    roles: tuple
    pattern: np.ndarray | None = None
    meta: Mapping = field(default_factory=dict)
    fold_hint: Mapping = field(default_factory=dict)
    aux_edges: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "faces", tuple(tuple(int(i) for i in f) for f in self.faces))
        object.__setattr__(self, "roles", tuple(self.roles))
        if len(self.roles) != len(self.faces):
            raise ValueError("one role per face required")
        bad = set(self.roles) - set(ROLES)
        if bad:
            raise ValueError(f"unknown face roles {sorted(bad)}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def scale(self) -> float:
        v = self.vertices
        return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0))) or 1.0

    @cached_property
    def _topology(self):
        emap: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for fi, f in enumerate(self.faces):
            m = len(f)
            for i in range(m):
                a, b = f[i], f[(i + 1) % m]
                key = (a, b) if a < b else (b, a)
                emap.setdefault(key, []).append((fi, 0 if a < b else 1))
        keys = sorted(emap)
        edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
        # (face left of a->b, face right of a->b) with a < b; -1 when absent
        adj = np.full((len(keys), 2), -1, dtype=np.int64)
        for i, k in enumerate(keys):
            for fi, rev in emap[k]:
                adj[i, rev] = fi
        return edges, adj

    @property
    def edges(self) -> np.ndarray:
        return self._topology[0]

    @property
    def edge_faces(self) -> np.ndarray:
        return self._topology[1]

    @cached_property
    def edge_index(self) -> dict:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    def edge_id(self, a: int, b: int) -> int:
        return self.edge_index[(a, b) if a < b else (b, a)]

    @cached_property
    def boundary_vertices(self) -> frozenset:
        adj = self.edge_faces
        bnd = self.edges[(adj < 0).any(axis=1)]
        return frozenset(int(v) for v in bnd.ravel())

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        used = sorted({v for f in self.faces for v in f})
        return np.array([v for v in used if v not in self.boundary_vertices], dtype=np.int64)

    def _apex(self, fi: int, a: int, b: int) -> np.ndarray:
        """A face vertex off the edge a-b, farthest from the edge line (robust for triangles and quads)."""
        f = self.faces[fi]
        p0, p1 = self.vertices[a], self.vertices[b]
        e = (p1 - p0) / np.linalg.norm(p1 - p0)
        best, bd = None, -1.0
        for v in f:
            if v in (a, b):
                continue
            q = self.vertices[v] - p0
            d = np.linalg.norm(q - np.dot(q, e) * e)
            if d > bd:
                best, bd = self.vertices[v], d
        return best

    def fold_angles(self) -> np.ndarray:
        """Signed fold angle per edge (nan on the boundary)."""
        out = np.full(len(self.edges), np.nan)
        for i, ((a, b), (fl, fr)) in enumerate(zip(self.edges, self.edge_faces)):
            if fl < 0 or fr < 0:
                continue
            key = (int(a), int(b))
            if key in self.fold_hint:
                out[i] = self.fold_hint[key]
                continue
            out[i] = signed_dihedral(
                self.vertices[a], self.vertices[b], self._apex(fl, a, b), self._apex(fr, a, b)
            )
        return out

    def assignments(self, flat_tol: float = 1e-9) -> list[str]:
        """FOLD-style M/V/F/B per edge; auxiliary diagonals are always F."""
        out = []
        for (a, b), ang in zip(self.edges, self.fold_angles()):
            if np.isnan(ang):
                out.append("B")
            elif (int(a), int(b)) in self.aux_edges or abs(ang) <= flat_tol:
                out.append("F")
            else:
                out.append("M" if ang > 0 else "V")
        return out

    def face_normal(self, fi: int) -> np.ndarray:
        return newell_normal(self.vertices[list(self.faces[fi])])

    def sector_angles(self) -> dict[int, float]:
        """Sum of face corner angles at every vertex."""
        sums: dict[int, float] = {}
        v = self.vertices
        for f in self.faces:
            m = len(f)
            for i in range(m):
                p = v[f[i]]
                a = v[f[i - 1]] - p
                b = v[f[(i + 1) % m]] - p
                ang = np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b))
                sums[f[i]] = sums.get(f[i], 0.0) + float(ang)
        return sums

    def angle_defects(self) -> dict[int, float]:
        """2pi minus the sector sum at every interior vertex."""
        s = self.sector_angles()
        return {int(v): 2.0 * np.pi - s[int(v)] for v in self.interior_vertices}

    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    def planarity(self) -> np.ndarray:
        """Per-face max distance of a corner from the best-fit plane (0 for triangles)."""
        out = np.zeros(len(self.faces))
        for fi, f in enumerate(self.faces):
            if len(f) < 4:
                continue
            pts = self.vertices[list(f)]
            c = pts.mean(axis=0)
            _, _, vt = np.linalg.svd(pts - c)
            out[fi] = float(np.max(np.abs((pts - c) @ vt[-1])))
        return out

    def with_vertices(self, vertices) -> "FoldedMesh":
        return replace(self, vertices=np.array(vertices, dtype=float), fold_hint={})

    def role_faces(self, role: str) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r == role]
