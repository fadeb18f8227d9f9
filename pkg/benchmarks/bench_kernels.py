"""Time the compiled element kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py [n]``; ``n`` is the grid size.
"""
import sys
import timeit

import numpy as np

from maxwell_schwarz import _kernels_py
from maxwell_schwarz.mesh import build_box_mesh

try:
    from maxwell_schwarz import _kernels_cy
except ImportError:
    _kernels_cy = None


def main(n=24, repeat=5):
    mesh = build_box_mesh(((0, 0, 0), (1, 1, 1)), n)
    tets = mesh.vertices[mesh.cells]
    tris = mesh.vertices[mesh.faces]
    print(f"{mesh.n_cells} tetrahedra, {mesh.n_faces} triangles")
    impls = [("python", _kernels_py)]
    if _kernels_cy is None:
        print("compiled extension not built; timing the fallback only")
    else:
        impls.append(("cython", _kernels_cy))
        K1, M1 = _kernels_py.tet_element_matrices(tets)
        K2, M2 = _kernels_cy.tet_element_matrices(tets)
        print(f"max |difference|: K {np.abs(K1 - K2).max():.2e}, M {np.abs(M1 - M2).max():.2e}")
    results = {}
    for name, mod in impls:
        t_tet = min(timeit.repeat(lambda: mod.tet_element_matrices(tets), number=1, repeat=repeat))
        t_tri = min(timeit.repeat(lambda: mod.tri_tangential_mass(tris), number=1, repeat=repeat))
        results[name] = (t_tet, t_tri)
        print(f"{name:>7}: tet {t_tet * 1e3:8.2f} ms   tri {t_tri * 1e3:8.2f} ms")
    if len(results) == 2:
        (pt, pf), (ct, cf) = results["python"], results["cython"]
        print(f"speedup: tet x{pt / ct:.1f}, tri x{pf / cf:.1f}")
    return results


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 24)
