"""Time the numba kernels against their numpy fallbacks on realistic meshes.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends are checked for identical results before timing.
"""
import argparse
import time

import numpy as np

from exmiura import ExtrusionSpec, MiuraParams, build_extruded_model, triangulate_skins
from exmiura.extrusion import _triangles, extrude_mesh
from exmiura.kernels import HAVE_NUMBA, penetrating_pairs, rigid_constraints
from exmiura.miura import alternate_mode_mesh, default_cut_starts


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    p = MiuraParams(14.26, 10.0, 0.223 * np.pi, 0.756 * np.pi)
    for n in (4, 8, 12):
        m = build_extruded_model(p, ExtrusionSpec(14.294), n, n)
        t = triangulate_skins(m)
        X = m.folded.vertices
        yield f"constraints {n}x{n}", lambda b, t=t, X=X: rigid_constraints(
            X, t.edges, t.rest, t.quads, t.scale, b
        )
    for n in (4, 8):
        base = alternate_mode_mesh(p, 1.2, n, n)
        mesh = extrude_mesh(base, 1.0, default_cut_starts(n, n)).folded
        tris, owner = _triangles(mesh)
        eps = 1e-9 * mesh.scale
        yield f"penetration {n}x{n}", lambda b, v=mesh.vertices, tr=tris, o=owner, e=eps: penetrating_pairs(
            v, tr, o, e, b
        )


def same(a, b):
    if isinstance(a, tuple):
        return all(np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba disabled or missing; timing the numpy path only")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, fn in cases():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        if HAVE_NUMBA:
            if not same(fn("numpy"), fn("numba")):
                raise SystemExit(f"{name}: backends disagree")
            t_nb = best_of(lambda: fn("numba"), args.repeat)
            print(f"{name:<22}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<22}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
