import numpy as np
import pytest

from maxwell_schwarz import _kernels_py, kernels
from maxwell_schwarz.errors import AssemblyError
from maxwell_schwarz.quadrature import TRI3_BARY, TRI3_WEIGHTS, tet_rule

TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
TRI_EDGES = ((0, 1), (0, 2), (1, 2))


def random_tets(rng, n):
    base = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    return base[None] + 0.2 * rng.standard_normal((n, 4, 3))


def bary_grads(x):
    # lambda = A^{-1} [1; x] solves for affine functions with vertex values delta_ij
    A = np.vstack([np.ones(len(x)), x.T])
    return np.linalg.inv(A)[:, 1:]


def whitney(x, lam):
    g = bary_grads(x)
    out = []
    for a, b in (TET_EDGES if len(x) == 4 else TRI_EDGES):
        length = np.linalg.norm(x[b] - x[a])
        out.append(length * (lam[a] * g[b] - lam[b] * g[a]))
    return np.array(out)


def test_backends_agree(rng):
    coords = random_tets(rng, 40)
    Kp, Mp = _kernels_py.tet_element_matrices(coords)
    Kk, Mk = kernels.tet_element_matrices(coords)
    assert np.allclose(Kp, Kk, atol=1e-12)
    assert np.allclose(Mp, Mk, atol=1e-12)
    tri = coords[:, :3]
    assert np.allclose(_kernels_py.tri_tangential_mass(tri), kernels.tri_tangential_mass(tri), atol=1e-12)


def test_mass_matches_quadrature(rng):
    x = random_tets(rng, 1)[0]
    _, M = kernels.tet_element_matrices(x[None])
    bary, w = tet_rule(2)
    vol = abs(np.linalg.det(x[1:] - x[0])) / 6
    ref = np.zeros((6, 6))
    for lam, wq in zip(bary, w):
        phi = whitney(x, lam)
        ref += wq * vol * phi @ phi.T
    assert np.allclose(M[0], ref, atol=1e-13)


def test_curl_matches_constant_curl(rng):
    x = random_tets(rng, 1)[0]
    K, _ = kernels.tet_element_matrices(x[None])
    g = bary_grads(x)
    vol = abs(np.linalg.det(x[1:] - x[0])) / 6
    curls = np.array([2 * np.linalg.norm(x[b] - x[a]) * np.cross(g[a], g[b]) for a, b in TET_EDGES])
    assert np.allclose(K[0], vol * curls @ curls.T, atol=1e-12)
    # gradients of vertex hat functions lie in the kernel
    G = np.zeros((6, 4))
    for e, (a, b) in enumerate(TET_EDGES):
        length = np.linalg.norm(x[b] - x[a])
        G[e, a], G[e, b] = -1 / length, 1 / length
    assert np.allclose(K[0] @ G, 0, atol=1e-11)


def test_mass_is_spd(rng):
    _, M = kernels.tet_element_matrices(random_tets(rng, 10))
    assert np.all(np.linalg.eigvalsh(M) > 0)


def test_triangle_mass_matches_quadrature(rng):
    x = random_tets(rng, 1)[0][:3]
    T = kernels.tri_tangential_mass(x[None])[0]
    # work in in-plane coordinates
    e1 = x[1] - x[0]
    e1 /= np.linalg.norm(e1)
    nrm = np.cross(x[1] - x[0], x[2] - x[0])
    nrm /= np.linalg.norm(nrm)
    e2 = np.cross(nrm, e1)
    y = np.stack([(x - x[0]) @ e1, (x - x[0]) @ e2], axis=1)
    area = 0.5 * abs(np.linalg.det(y[1:] - y[0]))
    ref = np.zeros((3, 3))
    for lam, wq in zip(TRI3_BARY, TRI3_WEIGHTS):
        phi = whitney(y, lam)
        ref += wq * area * phi @ phi.T
    assert np.allclose(T, ref, atol=1e-13)


@pytest.mark.parametrize("mod", [_kernels_py, kernels])
def test_degenerate_cells_raise(mod):
    flat = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]], float)
    with pytest.raises(AssemblyError):
        mod.tet_element_matrices(flat)
    line = np.array([[[0, 0, 0], [1, 0, 0], [2, 0, 0]]], float)
    with pytest.raises(AssemblyError):
        mod.tri_tangential_mass(line)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_environment_forces_numpy_fallback():
    import os
    import subprocess
    import sys

    code = "from maxwell_schwarz import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, MAXWELL_SCHWARZ_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
