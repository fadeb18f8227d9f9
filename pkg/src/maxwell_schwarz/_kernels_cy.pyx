# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

from .errors import AssemblyError

cnp.import_array()

cdef int TET_A[6]
cdef int TET_B[6]
TET_A[:] = [0, 0, 0, 1, 1, 2]
TET_B[:] = [1, 2, 3, 2, 3, 3]
cdef int TRI_A[3]
cdef int TRI_B[3]
TRI_A[:] = [0, 0, 1]
TRI_B[:] = [1, 2, 2]


cdef inline double _dot(double* u, double* v) nogil:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


cdef inline void _edge_gram(double[:, ::1] gg, double* lengths, int* A, int* B,
                            int n, double factor, double[:, ::1] out) nogil:
    cdef int e, f, a, b, c, d
    cdef double m_ac, m_ad, m_bc, m_bd
    for e in range(n):
        a = A[e]
        b = B[e]
        for f in range(n):
            c = A[f]
            d = B[f]
            m_ac = 2.0 if a == c else 1.0
            m_ad = 2.0 if a == d else 1.0
            m_bc = 2.0 if b == c else 1.0
            m_bd = 2.0 if b == d else 1.0
            out[e, f] = factor * lengths[e] * lengths[f] * (
                m_ac * gg[b, d] - m_ad * gg[b, c] - m_bc * gg[a, d] + m_bd * gg[a, c])


def tet_element_matrices(coords_in):
    cdef double[:, :, ::1] coords = np.ascontiguousarray(coords_in, dtype=np.float64)
    cdef Py_ssize_t nc = coords.shape[0]
    K_arr = np.empty((nc, 6, 6))
    M_arr = np.empty((nc, 6, 6))
    cdef double[:, :, ::1] K = K_arr
    cdef double[:, :, ::1] M = M_arr
    cdef double D[3][3]
    cdef double g[4][3]
    cdef double curl[6][3]
    cdef double lengths[6]
    gg_arr = np.empty((4, 4))
    cdef double[:, ::1] gg = gg_arr
    cdef double det, vol, scale, t
    cdef Py_ssize_t c
    cdef int i, j, k, e, f, a, b
    for c in range(nc):
        scale = 0.0
        for i in range(3):
            for k in range(3):
                D[i][k] = coords[c, i + 1, k] - coords[c, 0, k]
                if fabs(D[i][k]) > scale:
                    scale = fabs(D[i][k])
        det = (D[0][0] * (D[1][1] * D[2][2] - D[1][2] * D[2][1])
               - D[0][1] * (D[1][0] * D[2][2] - D[1][2] * D[2][0])
               + D[0][2] * (D[1][0] * D[2][1] - D[1][1] * D[2][0]))
        vol = fabs(det) / 6.0
        if vol <= 1e-14 * scale * scale * scale:
            raise AssemblyError(f"degenerate tetrahedron at position {c}")
        # rows of inv(D)^T: gradients of lambda_1..3
        g[1][0] = (D[1][1] * D[2][2] - D[1][2] * D[2][1]) / det
        g[1][1] = (D[1][2] * D[2][0] - D[1][0] * D[2][2]) / det
        g[1][2] = (D[1][0] * D[2][1] - D[1][1] * D[2][0]) / det
        g[2][0] = (D[0][2] * D[2][1] - D[0][1] * D[2][2]) / det
        g[2][1] = (D[0][0] * D[2][2] - D[0][2] * D[2][0]) / det
        g[2][2] = (D[0][1] * D[2][0] - D[0][0] * D[2][1]) / det
        g[3][0] = (D[0][1] * D[1][2] - D[0][2] * D[1][1]) / det
        g[3][1] = (D[0][2] * D[1][0] - D[0][0] * D[1][2]) / det
        g[3][2] = (D[0][0] * D[1][1] - D[0][1] * D[1][0]) / det
        for k in range(3):
            g[0][k] = -(g[1][k] + g[2][k] + g[3][k])
        for e in range(6):
            a = TET_A[e]
            b = TET_B[e]
            t = 0.0
            for k in range(3):
                t += (coords[c, b, k] - coords[c, a, k]) ** 2
            lengths[e] = sqrt(t)
            curl[e][0] = 2.0 * lengths[e] * (g[a][1] * g[b][2] - g[a][2] * g[b][1])
            curl[e][1] = 2.0 * lengths[e] * (g[a][2] * g[b][0] - g[a][0] * g[b][2])
            curl[e][2] = 2.0 * lengths[e] * (g[a][0] * g[b][1] - g[a][1] * g[b][0])
        for e in range(6):
            for f in range(6):
                K[c, e, f] = vol * _dot(curl[e], curl[f])
        for i in range(4):
            for j in range(4):
                gg[i, j] = _dot(g[i], g[j])
        _edge_gram(gg, lengths, TET_A, TET_B, 6, vol / 20.0, M[c])
    return K_arr, M_arr


def tri_tangential_mass(coords_in):
    cdef double[:, :, ::1] coords = np.ascontiguousarray(coords_in, dtype=np.float64)
    cdef Py_ssize_t nf = coords.shape[0]
    T_arr = np.empty((nf, 3, 3))
    cdef double[:, :, ::1] T = T_arr
    cdef double e1[3]
    cdef double e2[3]
    cdef double g[3][3]
    cdef double lengths[3]
    gg_arr = np.empty((3, 3))
    cdef double[:, ::1] gg = gg_arr
    cdef double g11, g12, g22, det, cx, cy, cz, area, t, i11, i12, i22
    cdef Py_ssize_t c
    cdef int i, j, k, e, a, b
    for c in range(nf):
        for k in range(3):
            e1[k] = coords[c, 1, k] - coords[c, 0, k]
            e2[k] = coords[c, 2, k] - coords[c, 0, k]
        cx = e1[1] * e2[2] - e1[2] * e2[1]
        cy = e1[2] * e2[0] - e1[0] * e2[2]
        cz = e1[0] * e2[1] - e1[1] * e2[0]
        area = 0.5 * sqrt(cx * cx + cy * cy + cz * cz)
        if area <= 0.0:
            raise AssemblyError("degenerate triangle")
        g11 = _dot(e1, e1)
        g12 = _dot(e1, e2)
        g22 = _dot(e2, e2)
        det = g11 * g22 - g12 * g12
        i11 = g22 / det
        i12 = -g12 / det
        i22 = g11 / det
        for k in range(3):
            g[1][k] = e1[k] * i11 + e2[k] * i12
            g[2][k] = e1[k] * i12 + e2[k] * i22
            g[0][k] = -(g[1][k] + g[2][k])
        for e in range(3):
            a = TRI_A[e]
            b = TRI_B[e]
            t = 0.0
            for k in range(3):
                t += (coords[c, b, k] - coords[c, a, k]) ** 2
            lengths[e] = sqrt(t)
        for i in range(3):
            for j in range(3):
                gg[i, j] = _dot(g[i], g[j])
        _edge_gram(gg, lengths, TRI_A, TRI_B, 3, area / 12.0, T[c])
    return T_arr
