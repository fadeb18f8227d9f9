"""Lowest-order Nedelec (Whitney) edge elements on box meshes.

The degree of freedom of edge ``e = (a, b)`` (``a < b``) is the mean
tangential component of the field along the edge, oriented from ``a`` to
``b``. The matching basis function is ``|e| (lam_a grad lam_b - lam_b grad
lam_a)``, whose tangential component is identically one on its own edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import kernels
from .errors import ConfigurationError
from .mesh import LOCAL_EDGES, BoxMesh, classify_boundary, face_edge_table, locate_point
from .quadrature import TRI3_BARY, TRI3_WEIGHTS, gauss_line, tet_rule, tet_rule_degree


class EdgeDofMap:
    """Global edge numbering, orientation signs and cached element data."""

    def __init__(self, mesh: BoxMesh):
        self.mesh = mesh
        self.n_dofs = mesh.n_edges
        self.dof_of_edge = np.arange(mesh.n_edges)
        self.cell_dofs = mesh.cell_edges
        local = mesh.cells[:, LOCAL_EDGES]
        self.cell_signs = np.where(local[..., 0] < local[..., 1], 1.0, -1.0)
        self.face_dofs = face_edge_table(mesh)
        self.edge_lengths = mesh.edge_lengths()
        self.boundary = classify_boundary(mesh)

    def sign(self, cell, local_edge):
        return self.cell_signs[cell, local_edge]

    @cached_property
    def element_matrices(self):
        """Signed curl-curl and mass matrices of every cell, (n_cells, 6, 6)."""
        K, M = kernels.tet_element_matrices(self.mesh.vertices[self.mesh.cells])
        ss = self.cell_signs[:, :, None] * self.cell_signs[:, None, :]
        return K * ss, M * ss

    @cached_property
    def face_matrices(self):
        """Tangential-trace Gram matrix of every face, (n_faces, 3, 3)."""
        return kernels.tri_tangential_mass(self.mesh.vertices[self.mesh.faces])

    @cached_property
    def cell_gradients(self):
        """Barycentric gradients (n_cells, 4, 3)."""
        p = self.mesh.vertices[self.mesh.cells]
        D = p[:, 1:, :] - p[:, :1, :]
        g = np.empty((len(p), 4, 3))
        g[:, 1:, :] = np.transpose(np.linalg.inv(D), (0, 2, 1))
        g[:, 0, :] = -g[:, 1:, :].sum(axis=1)
        return g

    def basis_values(self, cells, bary) -> np.ndarray:
        """Signed global basis functions of ``cells`` at barycentric points.

        ``bary`` has shape (n_cells, n_points, 4); result (n_cells, n_points, 6, 3).
        """
        cells = np.asarray(cells)
        g = self.cell_gradients[cells]
        L = self.edge_lengths[self.cell_dofs[cells]] * self.cell_signs[cells]
        a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        phi = (
            bary[:, :, a, None] * g[:, None, b, :] - bary[:, :, b, None] * g[:, None, a, :]
        )
        return phi * L[:, None, :, None]

    def evaluate(self, v, points) -> np.ndarray:
        """Evaluate the finite element field ``v`` at arbitrary points."""
        points = np.atleast_2d(points)
        out = np.zeros((len(points), 3), dtype=np.result_type(v, float))
        for i, x in enumerate(points):
            c, lam = locate_point(self.mesh, x)
            phi = self.basis_values([c], lam[None, None, :])[0, 0]
            out[i] = v[self.cell_dofs[c]] @ phi
        return out


@dataclass(frozen=True)
class ProblemParams:
    kappa: float
    epsilon: float = 0.0
    rel_permittivity: np.ndarray | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")
        if not 0 <= self.epsilon <= self.kappa ** 2 * (1 + 1e-12):
            raise ConfigurationError(
                f"need 0 <= epsilon <= kappa^2, got epsilon={self.epsilon}, kappa={self.kappa}"
            )

    def cell_permittivity(self, n_cells):
        if self.rel_permittivity is None:
            return None
        eps_r = np.asarray(self.rel_permittivity, dtype=complex)
        if eps_r.shape != (n_cells,):
            raise ConfigurationError("rel_permittivity must give one value per cell")
        return eps_r


@dataclass
class AssembledSystem:
    A: sp.csr_matrix
    rhs: np.ndarray
    S_imp: sp.csr_matrix
    M0: sp.csr_matrix
    T_bnd: sp.csr_matrix
    K: sp.csr_matrix
    M_w: sp.csr_matrix
    T_w: sp.csr_matrix
    params: ProblemParams


def _scatter(dofs, local, n, index=None, shape=None):
    """Sum element matrices ``local[c]`` into a sparse matrix.

    ``index`` optionally maps global dofs to a local numbering.
    """
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    if index is not None:
        rows, cols = index[rows], index[cols]
    shape = shape or (n, n)
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()


def boundary_faces_of(mesh: BoxMesh, cells) -> np.ndarray:
    """Faces on the boundary of the union of ``cells``."""
    cells = np.asarray(cells)
    f = mesh.cell_faces[cells].ravel()
    uniq, counts = np.unique(f, return_counts=True)
    return uniq[counts == 1]


def edges_of(mesh: BoxMesh, cells) -> np.ndarray:
    return np.unique(mesh.cell_edges[np.asarray(cells)].ravel())


def assemble_forms(dofmap, cells, faces, cell_coef=None, face_coef=None, index=None, size=None):
    """Curl-curl, (weighted) mass and (weighted) boundary Gram matrices.

    Restricted to the given cells and faces; optional complex coefficients
    multiply each cell's mass and each face's tangential Gram.
    """
    Kel, Mel = dofmap.element_matrices
    cells = np.asarray(cells)
    faces = np.asarray(faces, dtype=np.int64)
    n = size if size is not None else dofmap.n_dofs
    cd = dofmap.cell_dofs[cells]
    K = _scatter(cd, Kel[cells], n, index)
    Mloc = Mel[cells]
    if cell_coef is not None:
        Mloc = Mloc * np.asarray(cell_coef)[:, None, None]
    M = _scatter(cd, Mloc, n, index)
    Tloc = dofmap.face_matrices[faces]
    if face_coef is not None:
        Tloc = Tloc * np.asarray(face_coef)[:, None, None]
    T = _scatter(dofmap.face_dofs[faces], Tloc, n, index)
    return K, M, T


def element_matrices(coords):
    """Curl-curl, mass and per-face tangential matrices of one tetrahedron.

    Returns ``(K, M, T)`` with ``T`` of shape (4, 6, 6): the tangential Gram
    of face ``i`` (opposite local vertex ``i``) embedded in local edge numbering.
    """
    coords = np.asarray(coords, dtype=float).reshape(1, 4, 3)
    K, M = kernels.tet_element_matrices(coords)
    T = np.zeros((4, 6, 6))
    for i in range(4):
        verts = [v for v in range(4) if v != i]
        tri = kernels.tri_tangential_mass(coords[:, verts, :])[0]
        pairs = [(verts[0], verts[1]), (verts[0], verts[2]), (verts[1], verts[2])]
        idx = [next(e for e, (a, b) in enumerate(LOCAL_EDGES) if (a, b) == p) for p in pairs]
        T[i][np.ix_(idx, idx)] = tri
    return K[0], M[0], T


def face_permittivity_coef(mesh, faces, eps_r):
    """sqrt(Re eps_r) of the cell adjacent to each boundary face."""
    if eps_r is None:
        return None
    return np.sqrt(eps_r[mesh.face_cells[faces, 0]].real)


def assemble_system(mesh: BoxMesh, dofmap: EdgeDofMap, params: ProblemParams, case, quad_degree=4):
    """Assemble ``A = K - (kappa^2 + i eps) M_w - i kappa T_w`` and the load vector."""
    kappa, eps = params.kappa, params.epsilon
    eps_r = params.cell_permittivity(mesh.n_cells)
    if eps_r is None and getattr(case, "rel_permittivity", None) is not None:
        eps_r = np.asarray(case.rel_permittivity(mesh.cell_centroids()), dtype=complex)
        params = ProblemParams(kappa, eps, eps_r)
    bfaces = dofmap.boundary.boundary_faces
    all_cells = np.arange(mesh.n_cells)
    K, M0, T = assemble_forms(dofmap, all_cells, bfaces)
    if eps_r is None:
        M_w, T_w = M0, T
    else:
        _, M_w, T_w = assemble_forms(
            dofmap, all_cells, bfaces, cell_coef=eps_r,
            face_coef=face_permittivity_coef(mesh, bfaces, eps_r),
        )
    A = (K - (kappa ** 2 + 1j * eps) * M_w - 1j * kappa * T_w).tocsr()
    S = (K + kappa ** 2 * M0 + kappa * T).tocsr()
    rhs = assemble_rhs(mesh, dofmap, case, quad_degree)
    return AssembledSystem(
        A=A, rhs=rhs, S_imp=S, M0=M0, T_bnd=T, K=K, M_w=M_w, T_w=T_w, params=params
    )


def assemble_rhs(mesh, dofmap, case, quad_degree=4):
    poly = getattr(case, "poly_degree", None)
    if poly is not None and poly + 1 > tet_rule_degree(quad_degree):
        raise ConfigurationError(
            f"quadrature degree {tet_rule_degree(quad_degree)} cannot integrate a degree-"
            f"{poly} source against linear basis functions"
        )
    rhs = np.zeros(dofmap.n_dofs, dtype=complex)
    dipole = getattr(case, "dipole", None)
    if dipole is not None:
        x0, moment = dipole
        c, lam = locate_point(mesh, x0)
        phi = dofmap.basis_values([c], lam[None, None, :])[0, 0]
        np.add.at(rhs, dofmap.cell_dofs[c], 1j * (phi @ np.asarray(moment, dtype=complex)))
    J = getattr(case, "J", None)
    if J is not None:
        bary, w = tet_rule(quad_degree)
        vol = mesh.cell_volumes()
        p = mesh.vertices[mesh.cells]
        for chunk in np.array_split(np.arange(mesh.n_cells), max(1, mesh.n_cells // 20000)):
            pts = np.einsum("qv,cvk->cqk", bary, p[chunk])
            Jq = J(pts.reshape(-1, 3)).reshape(len(chunk), len(w), 3)
            phi = dofmap.basis_values(chunk, np.broadcast_to(bary, (len(chunk),) + bary.shape))
            loc = np.einsum("q,cqk,cqek->ce", w, Jq, phi) * vol[chunk, None]
            np.add.at(rhs, dofmap.cell_dofs[chunk], loc)
    g = getattr(case, "g", None)
    if g is not None:
        tags = dofmap.boundary
        faces = tags.boundary_faces
        normals = tags.face_normals
        pts, phiT, area = face_trace_values(mesh, dofmap, faces, TRI3_BARY)
        gq = g(pts.reshape(-1, 3), np.repeat(normals, len(TRI3_WEIGHTS), axis=0))
        gq = gq.reshape(len(faces), len(TRI3_WEIGHTS), 3)
        gq = gq - np.einsum("fqk,fk->fq", gq, normals)[..., None] * normals[:, None, :]
        loc = np.einsum("q,fqk,fqek->fe", TRI3_WEIGHTS, gq, phiT) * area[:, None]
        np.add.at(rhs, dofmap.face_dofs[faces], loc)
    return rhs


def source_norms(mesh, dofmap, case, quad_degree=6):
    """``(||J||_0^2, ||g_T||_{0,boundary}^2)`` by quadrature; missing sources count as zero."""
    J2 = 0.0
    J = getattr(case, "J", None)
    if J is not None:
        bary, w = tet_rule(quad_degree)
        pts = np.einsum("qv,cvk->cqk", bary, mesh.vertices[mesh.cells])
        Jq = J(pts.reshape(-1, 3)).reshape(mesh.n_cells, len(w), 3)
        J2 = float(np.einsum("q,cq,c->", w, np.sum(np.abs(Jq) ** 2, axis=2), mesh.cell_volumes()))
    g2 = 0.0
    g = getattr(case, "g", None)
    if g is not None:
        tags = dofmap.boundary
        faces, normals = tags.boundary_faces, tags.face_normals
        pts, _, area = face_trace_values(mesh, dofmap, faces, TRI3_BARY)
        gq = g(pts.reshape(-1, 3), np.repeat(normals, len(TRI3_WEIGHTS), axis=0))
        gq = gq.reshape(len(faces), len(TRI3_WEIGHTS), 3)
        gq = gq - np.einsum("fqk,fk->fq", gq, normals)[..., None] * normals[:, None, :]
        g2 = float(np.einsum("q,fq,f->", TRI3_WEIGHTS, np.sum(np.abs(gq) ** 2, axis=2), area))
    return J2, g2


def face_trace_values(mesh, dofmap, faces, bary):
    """Tangential traces of the three face basis functions at barycentric points.

    Returns ``(points, traces, areas)`` with shapes (nf, nq, 3),
    (nf, nq, 3 edges, 3) and (nf,).
    """
    p = mesh.vertices[mesh.faces[faces]]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    E = np.stack([e1, e2], axis=2)
    Ginv = np.linalg.inv(np.einsum("cki,ckj->cij", E, E))
    g = np.empty((len(faces), 3, 3))
    g[:, 1:, :] = np.einsum("cki,cij->cjk", E, Ginv)
    g[:, 0, :] = -g[:, 1:, :].sum(axis=1)
    L = dofmap.edge_lengths[dofmap.face_dofs[faces]]
    pts = np.einsum("qv,fvk->fqk", bary, p)
    traces = []
    for a, b in ((0, 1), (0, 2), (1, 2)):
        traces.append(bary[None, :, a, None] * g[:, None, b, :] - bary[None, :, b, None] * g[:, None, a, :])
    traces = np.stack(traces, axis=2) * L[:, None, :, None]
    return pts, traces, area


def assemble_local_gram(mesh, dofmap, cells, kappa, boundary_mode="full", index=None, size=None):
    """Gram matrix of ``(.,.)_{imp,kappa,G}`` on the union ``G`` of ``cells``.

    ``boundary_mode="interior-only"`` keeps only the part of ``dG`` inside the
    domain (the imp-minus product).
    """
    cells = np.asarray(cells)
    if cells.size == 0:
        raise ConfigurationError("empty cell subset")
    faces = boundary_faces_of(mesh, cells)
    if boundary_mode == "interior-only":
        on_bnd = np.isin(faces, dofmap.boundary.boundary_faces)
        faces = faces[~on_bnd]
    elif boundary_mode != "full":
        raise ConfigurationError(f"unknown boundary mode {boundary_mode!r}")
    K, M, T = assemble_forms(dofmap, cells, faces, index=index, size=size)
    return (K + kappa ** 2 * M + kappa * T).tocsr()


def quasi_interp_diagonal(dofmap, w) -> np.ndarray:
    """Diagonal of the weighting ``v -> r~_h(w v)``: ``w`` at edge midpoints.

    For lowest-order elements the tangential component is constant along
    each edge, so the midpoint point value is the edge moment and the
    weighting reduces to scaling each DOF.
    """
    if callable(w):
        return np.asarray(w(dofmap.mesh.edge_midpoints()), dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (dofmap.n_dofs,):
        raise ConfigurationError("weights must be sampled at every edge midpoint")
    return w


def discrete_l2_norm(dofmap, v, edges=None, cells=None) -> float:
    """``(h * sum_e |int_e v.t ds|^2)^(1/2)`` over the selected edges."""
    if cells is not None:
        edges = edges_of(dofmap.mesh, cells)
    if edges is None:
        edges = np.arange(dofmap.n_dofs)
    edges = np.asarray(edges)
    if edges.size == 0:
        raise ConfigurationError("empty region")
    moments = np.asarray(v)[edges] * dofmap.edge_lengths[edges]
    return float(np.sqrt(dofmap.mesh.h * np.sum(np.abs(moments) ** 2)))


def interpolate_field(mesh, dofmap, field, npts=3) -> np.ndarray:
    """Edge moments of an analytic vector field (Gauss rule along each edge)."""
    t, w = gauss_line(npts)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    tau = (b - a) / dofmap.edge_lengths[:, None]
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(field(pts.reshape(-1, 3))).reshape(len(a), len(t), 3)
    return np.einsum("q,eqk,ek->e", w, vals, tau)


def imp_norm(S, v) -> float:
    return float(np.sqrt(max(np.vdot(v, S @ v).real, 0.0)))


def export_matrix_market(system: AssembledSystem, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, mat in (("A", system.A), ("S_imp", system.S_imp)):
        path = directory / f"{name}.mtx"
        scipy.io.mmwrite(str(path), sp.coo_matrix(mat, dtype=complex), field="complex")
        out.append(path)
    path = directory / "rhs.mtx"
    scipy.io.mmwrite(
        str(path), sp.coo_matrix(system.rhs.reshape(-1, 1), dtype=complex), field="complex"
    )
    out.append(path)
    return out
