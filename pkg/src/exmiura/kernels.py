"""Hot numeric kernels: triangle penetration scan and rigid-origami constraint assembly.

Each kernel has an ``@njit`` loop version and a vectorised numpy version with
identical results; :data:`BACKEND` says which one the public names point to.
"""
from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, njit

BACKEND = "numba" if HAVE_NUMBA else "numpy"

# ----------------------------------------------------------------------------
# triangle-triangle penetration
# ----------------------------------------------------------------------------


@njit(cache=True)
def _tri_penetrates(p0, p1, p2, q0, q1, q2, eps):
    # plane of p
    n1 = np.cross(p1 - p0, p2 - p0)
    nn1 = np.sqrt(n1[0] ** 2 + n1[1] ** 2 + n1[2] ** 2)
    n2 = np.cross(q1 - q0, q2 - q0)
    nn2 = np.sqrt(n2[0] ** 2 + n2[1] ** 2 + n2[2] ** 2)
    if nn1 == 0.0 or nn2 == 0.0:
        return False
    n1 = n1 / nn1
    n2 = n2 / nn2
    dq = np.empty(3)
    dq[0] = np.dot(n1, q0 - p0)
    dq[1] = np.dot(n1, q1 - p0)
    dq[2] = np.dot(n1, q2 - p0)
    if not (dq.max() > eps and dq.min() < -eps):
        return False
    dp = np.empty(3)
    dp[0] = np.dot(n2, p0 - q0)
    dp[1] = np.dot(n2, p1 - q0)
    dp[2] = np.dot(n2, p2 - q0)
    if not (dp.max() > eps and dp.min() < -eps):
        return False
    line = np.cross(n1, n2)
    ln = np.sqrt(line[0] ** 2 + line[1] ** 2 + line[2] ** 2)
    if ln < 1e-14:
        return False
    line = line / ln
    a0, a1 = _interval(p0, p1, p2, dp, line)
    b0, b1 = _interval(q0, q1, q2, dq, line)
    return min(a1, b1) - max(a0, b0) > eps


@njit(cache=True)
def _interval(p0, p1, p2, d, line):
    # segment of the triangle cut by the other plane, projected on the line
    pts = (p0, p1, p2)
    lo = np.inf
    hi = -np.inf
    for i in range(3):
        j = (i + 1) % 3
        di, dj = d[i], d[j]
        if di == 0.0:
            t = np.dot(pts[i], line)
            lo = min(lo, t)
            hi = max(hi, t)
        if (di > 0.0 and dj < 0.0) or (di < 0.0 and dj > 0.0):
            s = di / (di - dj)
            x = pts[i] + s * (pts[j] - pts[i])
            t = np.dot(x, line)
            lo = min(lo, t)
            hi = max(hi, t)
    return lo, hi


@njit(cache=True)
def _penetrating_pairs_loop(verts, tris, owner, pairs, eps):
    out = np.zeros(len(pairs), dtype=np.bool_)
    for k in range(len(pairs)):
        a = tris[pairs[k, 0]]
        b = tris[pairs[k, 1]]
        out[k] = _tri_penetrates(
            verts[a[0]], verts[a[1]], verts[a[2]], verts[b[0]], verts[b[1]], verts[b[2]], eps
        )
    return out


def _candidate_pairs(verts, tris, owner, eps):
    lo = verts[tris].min(axis=1) - eps
    hi = verts[tris].max(axis=1) + eps
    i, j = np.triu_indices(len(tris), k=1)
    ok = np.all((lo[i] <= hi[j]) & (lo[j] <= hi[i]), axis=1)
    ok &= owner[i] != owner[j]
    i, j = i[ok], j[ok]
    # drop pairs sharing a vertex
    share = (tris[i][:, :, None] == tris[j][:, None, :]).any(axis=(1, 2))
    return np.stack([i[~share], j[~share]], axis=1)


def _penetrating_pairs_numpy(verts, tris, owner, pairs, eps):
    if len(pairs) == 0:
        return np.zeros(0, dtype=bool)
    P = verts[tris[pairs[:, 0]]]  # (m, 3, 3)
    Q = verts[tris[pairs[:, 1]]]

    def plane(T):
        n = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
        nn = np.linalg.norm(n, axis=1)
        good = nn > 0
        n[good] /= nn[good, None]
        return n, good

    n1, g1 = plane(P)
    n2, g2 = plane(Q)
    dq = np.einsum("mk,mik->mi", n1, Q - P[:, :1])
    dp = np.einsum("mk,mik->mi", n2, P - Q[:, :1])
    straddle = (dq.max(1) > eps) & (dq.min(1) < -eps) & (dp.max(1) > eps) & (dp.min(1) < -eps)
    line = np.cross(n1, n2)
    ln = np.linalg.norm(line, axis=1)
    ok = g1 & g2 & straddle & (ln >= 1e-14)
    line[ok] /= ln[ok, None]

    def interval(T, d):
        lo = np.full(len(T), np.inf)
        hi = np.full(len(T), -np.inf)
        for i in range(3):
            j = (i + 1) % 3
            di, dj = d[:, i], d[:, j]
            t_on = np.einsum("mk,mk->m", T[:, i], line)
            on = di == 0.0
            lo = np.where(on, np.minimum(lo, t_on), lo)
            hi = np.where(on, np.maximum(hi, t_on), hi)
            cross = ((di > 0) & (dj < 0)) | ((di < 0) & (dj > 0))
            with np.errstate(invalid="ignore", divide="ignore"):
                s = np.where(cross, di / np.where(cross, di - dj, 1.0), 0.0)
            x = T[:, i] + s[:, None] * (T[:, j] - T[:, i])
            t = np.einsum("mk,mk->m", x, line)
            lo = np.where(cross, np.minimum(lo, t), lo)
            hi = np.where(cross, np.maximum(hi, t), hi)
        return lo, hi

    a0, a1 = interval(P, dp)
    b0, b1 = interval(Q, dq)
    return ok & (np.minimum(a1, b1) - np.maximum(a0, b0) > eps)


def penetrating_pairs(verts, tris, owner, eps, backend=None):
    """Indices into ``tris`` of triangle pairs that cross transversally.

    Coplanar contact, edge/vertex touching and pairs sharing a vertex or owner
    face are not penetrations.
    """
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    owner = np.asarray(owner, dtype=np.int64)
    pairs = _candidate_pairs(verts, tris, owner, eps)
    if len(pairs) == 0:
        return pairs
    backend = backend or BACKEND
    if backend == "numba":
        hit = _penetrating_pairs_loop(verts, tris, owner, np.ascontiguousarray(pairs), float(eps))
    else:
        hit = _penetrating_pairs_numpy(verts, tris, owner, pairs, float(eps))
    return pairs[hit]


# ----------------------------------------------------------------------------
# rigid-origami constraints: fixed edge lengths and quad planarity
# ----------------------------------------------------------------------------


@njit(cache=True)
def _constraints_loop(X, edges, rest, quads, inv_s2, r, J):
    ne = edges.shape[0]
    for i in range(ne):
        a = edges[i, 0]
        b = edges[i, 1]
        d0 = X[a, 0] - X[b, 0]
        d1 = X[a, 1] - X[b, 1]
        d2 = X[a, 2] - X[b, 2]
        ln = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
        r[i] = ln - rest[i]
        d0 /= ln
        d1 /= ln
        d2 /= ln
        J[i, 3 * a] = d0
        J[i, 3 * a + 1] = d1
        J[i, 3 * a + 2] = d2
        J[i, 3 * b] = -d0
        J[i, 3 * b + 1] = -d1
        J[i, 3 * b + 2] = -d2
    for q in range(quads.shape[0]):
        row = ne + q
        A = quads[q, 0]
        B = quads[q, 1]
        C = quads[q, 2]
        D = quads[q, 3]
        u = X[B] - X[A]
        v = X[C] - X[A]
        w = X[D] - X[A]
        gB = np.cross(v, w)
        gC = np.cross(w, u)
        gD = np.cross(u, v)
        r[row] = np.dot(u, gB) * inv_s2
        for k in range(3):
            J[row, 3 * B + k] = gB[k] * inv_s2
            J[row, 3 * C + k] = gC[k] * inv_s2
            J[row, 3 * D + k] = gD[k] * inv_s2
            J[row, 3 * A + k] = -(gB[k] + gC[k] + gD[k]) * inv_s2


def _constraints_numpy(X, edges, rest, quads, inv_s2, r, J):
    ne = len(edges)
    if ne:
        d = X[edges[:, 0]] - X[edges[:, 1]]
        ln = np.linalg.norm(d, axis=1)
        r[:ne] = ln - rest
        d /= ln[:, None]
        rows = np.arange(ne)
        for k in range(3):
            J[rows, 3 * edges[:, 0] + k] = d[:, k]
            J[rows, 3 * edges[:, 1] + k] = -d[:, k]
    if len(quads):
        A, B, C, D = (quads[:, i] for i in range(4))
        u = X[B] - X[A]
        v = X[C] - X[A]
        w = X[D] - X[A]
        gB = np.cross(v, w)
        gC = np.cross(w, u)
        gD = np.cross(u, v)
        rows = ne + np.arange(len(quads))
        r[rows] = np.einsum("ij,ij->i", u, gB) * inv_s2
        gA = -(gB + gC + gD)
        for k in range(3):
            J[rows, 3 * A + k] = gA[:, k] * inv_s2
            J[rows, 3 * B + k] = gB[:, k] * inv_s2
            J[rows, 3 * C + k] = gC[:, k] * inv_s2
            J[rows, 3 * D + k] = gD[:, k] * inv_s2


def rigid_constraints(X, edges, rest, quads, scale, backend=None):
    """Residuals and dense Jacobian of the length and planarity constraints.

    Rows ``[0, E)`` are ``|x_a - x_b| - rest`` (length units); rows after that are
    the signed volume ``det(B-A, C-A, D-A) / scale**2`` of each quad (also length
    units), so one tolerance fits both.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    quads = np.ascontiguousarray(quads, dtype=np.int64).reshape(-1, 4)
    rest = np.ascontiguousarray(rest, dtype=np.float64)
    m = len(edges) + len(quads)
    r = np.zeros(m)
    J = np.zeros((m, X.size))
    inv_s2 = 1.0 / float(scale) ** 2
    if (backend or BACKEND) == "numba":
        _constraints_loop(X, edges, rest, quads, inv_s2, r, J)
    else:
        _constraints_numpy(X, edges, rest, quads, inv_s2, r, J)
    return r, J


def dihedral_and_gradient(X, p0, p1, a, b):
    """Signed fold angle of edge p0->p1 (left apex ``a``, right apex ``b``) and its gradient.

    The gradient is returned as a dict ``{vertex: (3,) array}``.
    """
    P0, P1, A, B = X[p0], X[p1], X[a], X[b]
    e = P1 - P0
    le2 = e @ e
    le = np.sqrt(le2)
    n1 = np.cross(e, A - P0)
    n2 = np.cross(B - P0, e)
    m1 = n1 / np.linalg.norm(n1)
    m2 = n2 / np.linalg.norm(n2)
    ang = float(np.arctan2(np.cross(m1, m2) @ e / le, m1 @ m2))
    ga = -le / (n1 @ n1) * n1
    gb = -le / (n2 @ n2) * n2
    ta = (A - P0) @ e / le2
    tb = (B - P0) @ e / le2
    g = {
        a: ga,
        b: gb,
        p0: -((1.0 - ta) * ga + (1.0 - tb) * gb),
        p1: -(ta * ga + tb * gb),
    }
    return ang, g
