"""Local impedance problems and discrete Maxwell-harmonic extensions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .decomposition import Decomposition, subdomain_dofs
from .errors import SingularMatrixError
from .linalg import Factorization
from .nedelec import EdgeDofMap, ProblemParams, assemble_forms, boundary_faces_of


@dataclass
class LocalSystem:
    l: int
    cells: np.ndarray
    dofs: np.ndarray  # global DOF of each local DOF
    A: sp.csc_matrix
    F: Factorization
    S: sp.csr_matrix
    boundary_faces: np.ndarray  # all faces of dOmega_l
    gamma_faces: np.ndarray  # faces of Gamma_l = dOmega_l \ dOmega
    gamma_edges: np.ndarray  # global edges on Gamma_l
    gamma_local: np.ndarray  # their local indices
    T_gamma: sp.csr_matrix  # tangential Gram over Gamma_l, local numbering

    @property
    def n_dofs(self) -> int:
        return len(self.dofs)

    @property
    def m(self) -> int:
        return len(self.gamma_edges)

    def trace_load(self, lam) -> np.ndarray:
        """Load vector ``b_i = <lam, (phi_i)_T>_{Gamma_l}`` for trace coefficients ``lam``."""
        return self.T_gamma[:, self.gamma_local] @ np.asarray(lam, dtype=complex)


def _inside_cell(mesh, faces, cell_mask):
    fc = mesh.face_cells[faces]
    first_in = cell_mask[fc[:, 0]]
    return np.where(first_in, fc[:, 0], fc[:, 1])


def assemble_local(mesh, dofmap: EdgeDofMap, decomposition: Decomposition, l: int,
                   params: ProblemParams) -> LocalSystem:
    """Local impedance matrix on ``Omega_l`` with its factorization.

    The impedance term acts on the whole of ``dOmega_l``.
    """
    kappa, eps = params.kappa, params.epsilon
    cells = decomposition.subdomains[l]
    dofs = subdomain_dofs(decomposition, l)
    index = np.full(dofmap.n_dofs, -1, dtype=np.int64)
    index[dofs] = np.arange(len(dofs))
    n = len(dofs)
    bfaces = boundary_faces_of(mesh, cells)
    on_domain_bnd = np.isin(bfaces, dofmap.boundary.boundary_faces)
    gamma_faces = bfaces[~on_domain_bnd]
    K, M0, T = assemble_forms(dofmap, cells, bfaces, index=index, size=n)
    eps_r = params.cell_permittivity(mesh.n_cells)
    if eps_r is None:
        M_w, T_w = M0, T
    else:
        mask = np.zeros(mesh.n_cells, dtype=bool)
        mask[cells] = True
        adj = _inside_cell(mesh, bfaces, mask)
        _, M_w, T_w = assemble_forms(
            dofmap, cells, bfaces, cell_coef=eps_r[cells],
            face_coef=np.sqrt(eps_r[adj].real), index=index, size=n,
        )
    A = (K - (kappa ** 2 + 1j * eps) * M_w - 1j * kappa * T_w).tocsc()
    S = (K + kappa ** 2 * M0 + kappa * T).tocsr()
    try:
        F = Factorization(A)
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"subdomain {l}: {exc}", pivot=exc.pivot) from exc
    _, _, T_gamma = assemble_forms(dofmap, cells[:0], gamma_faces, index=index, size=n)
    gamma_edges = np.unique(dofmap.face_dofs[gamma_faces].ravel())
    return LocalSystem(
        l=l,
        cells=cells,
        dofs=dofs,
        A=A,
        F=F,
        S=S,
        boundary_faces=bfaces,
        gamma_faces=gamma_faces,
        gamma_edges=gamma_edges,
        gamma_local=index[gamma_edges],
        T_gamma=T_gamma.tocsc(),
    )


def assemble_all_local(mesh, dofmap, decomposition, params) -> list[LocalSystem]:
    return [
        assemble_local(mesh, dofmap, decomposition, l, params)
        for l in range(decomposition.n_subdomains)
    ]


def harmonic_lift(local: LocalSystem, lam) -> np.ndarray:
    """Solve ``a_l(v, w) = <lam, w_T>_{Gamma_l}`` for all local ``w``."""
    return local.F.solve(local.trace_load(lam))


@dataclass
class HarmonicBasis:
    V: np.ndarray  # (n_local, m_l)
    gram: np.ndarray  # V^H S V

    @property
    def m(self) -> int:
        return self.V.shape[1]


def build_harmonic_basis(local: LocalSystem, rank_tol: float = 1e-12) -> HarmonicBasis:
    """Lift every unit trace on ``Gamma_l`` (one column per interface edge)."""
    if local.m == 0:
        return HarmonicBasis(
            V=np.zeros((local.n_dofs, 0), dtype=complex), gram=np.zeros((0, 0), dtype=complex)
        )
    B = local.T_gamma[:, local.gamma_local].toarray().astype(complex)
    V = local.F.solve(B)
    gram = V.conj().T @ (local.S @ V)
    gram = 0.5 * (gram + gram.conj().T)
    ev = sla.eigvalsh(gram)
    if ev[0] <= rank_tol * ev[-1]:
        raise SingularMatrixError(
            f"subdomain {local.l}: harmonic basis is rank deficient "
            f"(Gram eigenvalue ratio {ev[0] / ev[-1]:.2e})"
        )
    return HarmonicBasis(V=V, gram=gram)
