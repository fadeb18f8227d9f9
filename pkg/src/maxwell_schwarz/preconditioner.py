"""One-level weighted additive Schwarz and hybrid two-level preconditioners."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .coarse_spectral import CoarseSpace, assemble_coarse_columns
from .errors import ConfigurationError, SingularMatrixError
from .mesh import build_box_mesh, locate_points
from .nedelec import EdgeDofMap

MODES = ("one-level", "hybrid-spectral", "hybrid-economical", "hybrid-grid")


class SchwarzPreconditioner:
    """Callable ``r -> B^{-1} r``; read-only once built.

    Local solves are summed in ascending subdomain order.
    """

    def __init__(self, A, locals_, pou, coarse: CoarseSpace | None = None, mode="one-level"):
        if mode not in MODES:
            raise ConfigurationError(f"unknown preconditioner mode {mode!r}")
        if mode != "one-level" and coarse is None:
            raise ConfigurationError(f"mode {mode!r} needs a coarse space")
        self.A = A
        self.locals = list(locals_)
        self.pou = pou
        self.coarse = coarse
        self.mode = mode
        self._weights = [pou.local(loc.l, loc.dofs) for loc in self.locals]
        self.n = A.shape[0]

    @property
    def coarse_dim(self) -> int:
        if self.mode == "one-level" or self.coarse is None:
            return 0
        return self.coarse.dim

    def apply_one_level(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=complex)
        z = np.zeros(self.n, dtype=complex)
        for loc, w in zip(self.locals, self._weights):
            try:
                z[loc.dofs] += w * loc.F.solve(r[loc.dofs])
            except Exception as exc:  # pragma: no cover - factorizations succeeded earlier
                raise SingularMatrixError(f"local solve failed on subdomain {loc.l}: {exc}") from exc
        return z

    def apply_hybrid(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=complex)
        z1 = self.apply_one_level(r)
        if self.coarse is None or self.coarse.dim == 0:
            return z1
        return z1 + self.coarse.correct(r - self.A @ z1)

    def __call__(self, r) -> np.ndarray:
        if self.mode == "one-level":
            return self.apply_one_level(r)
        return self.apply_hybrid(r)

    def dense_operator(self) -> np.ndarray:
        """``B^{-1}`` column by column; for small fixtures only."""
        I = np.eye(self.n, dtype=complex)
        return np.column_stack([self(I[:, j]) for j in range(self.n)])


def build_grid_coarse(mesh, dofmap: EdgeDofMap, decomposition, A) -> CoarseSpace:
    """Coarse Nedelec space on the subdomain-level grid, written in fine DOFs.

    A fine edge lies inside one coarse tetrahedron, where every coarse
    Whitney function is linear, so its mean tangential component equals the
    value at the edge midpoint.
    """
    n_c = decomposition.parts_per_dim
    if n_c < 1 or mesh.n % n_c:
        raise ConfigurationError(f"fine grid n={mesh.n} is not a refinement of n={n_c}")
    coarse_mesh = build_box_mesh((mesh.lower, mesh.upper), n_c)
    coarse_map = EdgeDofMap(coarse_mesh)
    mid = mesh.edge_midpoints()
    cells, bary = locate_points(coarse_mesh, mid)
    phi = coarse_map.basis_values(cells, bary[:, None, :])[:, 0]  # (n_fine, 6, 3)
    e = mesh.edges
    tau = mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]]
    tau /= np.linalg.norm(tau, axis=1)[:, None]
    vals = np.einsum("fkd,fd->fk", phi, tau)
    rows = np.repeat(np.arange(mesh.n_edges), 6)
    cols = coarse_map.cell_dofs[cells].ravel()
    P = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(dofmap.n_dofs, coarse_map.n_dofs))
    P.sum_duplicates()
    support = np.flatnonzero(np.diff(P.indptr))
    blocks = [(support, P[support].toarray())]
    owners = [[("grid", j) for j in range(P.shape[1])]]
    return assemble_coarse_columns(blocks, dofmap.n_dofs, A, owners)


@dataclass
class FieldOfValues:
    max_ratio: float
    min_inner: float
    tau_estimate: float
    tau_raw: float  # before clamping to [0, 1)
    n_samples: int
    dense: bool = False

    def __iter__(self):
        yield self.max_ratio
        yield self.min_inner
        yield self.tau_estimate


def _tau(max_ratio, min_inner):
    raw = max(max_ratio - 1.0, 1.0 - min_inner)
    return float(np.clip(raw, 0.0, np.nextafter(1.0, 0.0))), float(raw)


def field_of_values_diagnostics(preconditioner, A, S_imp, n_samples=200, seed=0,
                                dense=False) -> FieldOfValues:
    """Sampled norm and field-of-values bounds of ``P = B^{-1} A`` in the ``S_imp`` inner product.

    ``max_ratio = max |Pv|_S / |v|_S`` and ``min_inner = min |(v, Pv)_S| / |v|_S^2``
    over seeded complex Gaussian ``v``. With ``dense=True`` (n <= 3000) both
    quantities are computed exactly instead.
    """
    n = A.shape[0]
    if dense:
        if n > 3000:
            raise ConfigurationError("dense field-of-values diagnostics limited to n <= 3000")
        return _dense_fov(preconditioner, A, S_imp)
    rng = np.random.default_rng(seed)
    max_ratio, min_inner = 0.0, np.inf
    for _ in range(n_samples):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        Pv = preconditioner(A @ v)
        Sv = S_imp @ v
        nv2 = np.vdot(v, Sv).real
        max_ratio = max(max_ratio, np.sqrt(np.vdot(Pv, S_imp @ Pv).real / nv2))
        min_inner = min(min_inner, abs(np.vdot(Sv, Pv)) / nv2)
    tau, raw = _tau(max_ratio, min_inner)
    return FieldOfValues(float(max_ratio), float(min_inner), tau, raw, n_samples)


def _dense_fov(preconditioner, A, S_imp) -> FieldOfValues:
    n = A.shape[0]
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
    P = np.column_stack([preconditioner(Ad[:, j]) for j in range(n)])
    S = S_imp.toarray() if sp.issparse(S_imp) else np.asarray(S_imp)
    G = sla.cholesky(S, lower=True)
    # B = G^H P G^{-H} is P in S-orthonormal coordinates
    B = sla.solve_triangular(G, (G.conj().T @ P).conj().T, lower=True).conj().T
    max_ratio = float(np.linalg.norm(B, 2))
    # distance from 0 to the numerical range via rotated Hermitian parts
    def lam_min(theta):
        Hm = 0.5 * (np.exp(1j * theta) * B + np.exp(-1j * theta) * B.conj().T)
        return sla.eigvalsh(Hm, subset_by_index=[0, 0])[0]
    thetas = np.linspace(0, 2 * np.pi, 73, endpoint=False)
    vals = np.array([lam_min(t) for t in thetas])
    best = thetas[np.argmax(vals)]
    step = thetas[1] - thetas[0]
    for _ in range(30):
        cand = best + np.array([-step, 0.0, step])
        cv = [lam_min(t) for t in cand]
        best = cand[int(np.argmax(cv))]
        step *= 0.5
    min_inner = float(max(0.0, lam_min(best)))
    tau, raw = _tau(max_ratio, min_inner)
    return FieldOfValues(max_ratio, min_inner, tau, raw, n, dense=True)
