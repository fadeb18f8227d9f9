"""Vectorized numpy implementation of the element kernels.

Used when the compiled ``_kernels_cy`` extension is unavailable, and as the
reference it is benchmarked against.
"""
import numpy as np

from .errors import AssemblyError

_TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_TRI_EDGES = ((0, 1), (0, 2), (1, 2))


def _edge_form_matrix(grads, lengths, measure, mass_denominator, pairs):
    """Gram matrix of scaled Whitney functions from barycentric gradients."""
    gg = np.einsum("cik,cjk->cij", grads, grads)
    n = len(pairs)
    out = np.empty((grads.shape[0], n, n))
    for e, (a, b) in enumerate(pairs):
        for f, (c, d) in enumerate(pairs):
            m_ac = 2.0 if a == c else 1.0
            m_ad = 2.0 if a == d else 1.0
            m_bc = 2.0 if b == c else 1.0
            m_bd = 2.0 if b == d else 1.0
            out[:, e, f] = (
                m_ac * gg[:, b, d] - m_ad * gg[:, b, c] - m_bc * gg[:, a, d] + m_bd * gg[:, a, c]
            )
    out *= (measure / mass_denominator)[:, None, None]
    out *= lengths[:, :, None] * lengths[:, None, :]
    return out


def tet_element_matrices(coords):
    """Curl-curl and mass matrices of the length-scaled Whitney edge basis.

    ``coords`` has shape (n_cells, 4, 3). Returns two arrays of shape
    (n_cells, 6, 6) in local edge order (01, 02, 03, 12, 13, 23).
    """
    coords = np.ascontiguousarray(coords, dtype=float)
    D = coords[:, 1:, :] - coords[:, :1, :]
    det = np.linalg.det(D)
    vol = np.abs(det) / 6.0
    scale = np.max(np.abs(D), axis=(1, 2)) ** 3
    if np.any(vol <= 1e-14 * scale):
        bad = int(np.flatnonzero(vol <= 1e-14 * scale)[0])
        raise AssemblyError(f"degenerate tetrahedron at position {bad}")
    inv = np.linalg.inv(D)
    grads = np.empty((len(coords), 4, 3))
    grads[:, 1:, :] = np.transpose(inv, (0, 2, 1))
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    lengths = np.stack(
        [np.linalg.norm(coords[:, b] - coords[:, a], axis=1) for a, b in _TET_EDGES], axis=1
    )
    curls = np.stack([np.cross(grads[:, a], grads[:, b]) for a, b in _TET_EDGES], axis=1)
    curls *= 2.0 * lengths[:, :, None]
    K = np.einsum("cik,cjk->cij", curls, curls) * vol[:, None, None]
    M = _edge_form_matrix(grads, lengths, vol, 20.0, _TET_EDGES)
    return K, M


def tri_tangential_mass(coords):
    """Tangential-trace Gram matrix on triangles, shape (n_faces, 3, 3).

    Local edge order (01, 02, 12).
    """
    coords = np.ascontiguousarray(coords, dtype=float)
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    area = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    if np.any(area <= 0.0):
        raise AssemblyError("degenerate triangle")
    E = np.stack([e1, e2], axis=2)  # (nf, 3, 2)
    G = np.einsum("cki,ckj->cij", E, E)
    Ginv = np.linalg.inv(G)
    g12 = np.einsum("cki,cij->cjk", E, Ginv)  # rows: surface grads of lambda_1, lambda_2
    grads = np.empty((len(coords), 3, 3))
    grads[:, 1:, :] = g12
    grads[:, 0, :] = -g12.sum(axis=1)
    lengths = np.stack(
        [np.linalg.norm(coords[:, b] - coords[:, a], axis=1) for a, b in _TRI_EDGES], axis=1
    )
    return _edge_form_matrix(grads, lengths, area, 12.0, _TRI_EDGES)
