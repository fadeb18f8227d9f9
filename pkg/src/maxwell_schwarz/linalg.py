"""Complex sparse/dense kernels: LU factorization, Hermitian pencils, GMRES."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NotPositiveDefiniteError, SingularMatrixError


class Factorization:
    """Reusable LU factorization of a square complex matrix.

    Sparse input goes through SuperLU with a COLAMD fill-reducing column
    ordering; dense input through LAPACK ``getrf``. Both are immutable after
    construction and may be shared between threads.
    """

    def __init__(self, A, pivot_tol: float = 1e-14):
        if A.shape[0] != A.shape[1]:
            raise ConfigurationError(f"matrix must be square, got shape {A.shape}")
        self.shape = A.shape
        self.sparse = sp.issparse(A)
        if self.sparse:
            Acsc = sp.csc_matrix(A, dtype=complex)
            try:
                self._lu = spla.splu(Acsc, permc_spec="COLAMD")
            except RuntimeError as exc:
                raise SingularMatrixError(
                    f"sparse LU failed: {exc}", pivot=_locate_zero_pivot(Acsc)
                ) from exc
            diag = np.abs(self._lu.U.diagonal())
            order = self._lu.perm_c
        else:
            # singularity is reported through the pivot check below
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self._lu = sla.lu_factor(np.asarray(A, dtype=complex))
            diag = np.abs(np.diag(self._lu[0]))
            order = np.arange(len(diag))
        if diag.size and (diag.min() <= pivot_tol * diag.max()):
            k = int(np.argmin(diag))
            raise SingularMatrixError(
                f"numerically singular matrix: pivot {k} (column {int(order[k])}) "
                f"has magnitude {diag[k]:.3e}",
                pivot=int(order[k]),
            )

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        if self.sparse:
            return self._lu.solve(b)
        return sla.lu_solve(self._lu, b)


def _locate_zero_pivot(A):
    if A.shape[0] > 4000:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A.toarray(), check_finite=False)
    small = np.flatnonzero(np.abs(np.diag(lu)) == 0)
    return int(small[0]) if small.size else None


def lu_factor(A) -> Factorization:
    return Factorization(A)


def lu_solve(F: Factorization, b):
    return F.solve(b)


def hermitian_gen_eig(L, R, sym_tol: float = 1e-10):
    """Solve ``L v = lam R v`` for Hermitian ``L`` and HPD ``R``.

    Cholesky reduction ``R = G G^H`` followed by a Hermitian eigensolve of
    ``G^{-1} L G^{-H}``. Eigenvalues are returned ascending and eigenvectors
    ``R``-orthonormal.
    """
    L = np.asarray(L, dtype=complex)
    R = np.asarray(R, dtype=complex)
    n = L.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    scale = max(np.abs(L).max(), np.finfo(float).tiny)
    if np.abs(L - L.conj().T).max() > sym_tol * scale:
        raise ConfigurationError("left matrix of the pencil is not Hermitian")
    L = 0.5 * (L + L.conj().T)
    R = 0.5 * (R + R.conj().T)
    G, info = sla.lapack.zpotrf(R, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"right matrix is not positive definite: leading minor of order {info}", minor=info
        )
    if info < 0:  # pragma: no cover
        raise ConfigurationError(f"potrf argument error {info}")
    Y = sla.solve_triangular(G, L, lower=True)
    C = sla.solve_triangular(G, Y.conj().T, lower=True)
    C = 0.5 * (C + C.conj().T)
    lam, Z = sla.eigh(C)
    X = sla.solve_triangular(G.conj().T, Z, lower=False)
    return lam.real, X


@dataclass
class GMRESResult:
    x: np.ndarray
    history: np.ndarray
    converged: bool
    iterations: int
    basis: list | None = field(default=None, repr=False)

    def __iter__(self):
        yield self.x
        yield self.history


def _givens(a, b):
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    r = np.hypot(abs(a), abs(b))
    c = abs(a) / r
    s = (a / abs(a)) * np.conj(b) / r
    return c, s


def gmres(apply_operator, b, tol=1e-6, maxit=1000, weight=None, preconditioner=None,
          side="left", keep_basis=False) -> GMRESResult:
    """Un-restarted GMRES from a zero initial guess.

    The residual is minimized in the Euclidean norm, or in ``||.||_W`` when a
    Hermitian positive definite ``weight`` matrix is given. With a
    ``preconditioner`` and ``side="left"`` the iteration runs on
    ``M A x = M b`` and the history holds preconditioned residuals; with
    ``side="right"`` it runs on ``A M y = b`` and ``x = M y``.

    Arnoldi uses modified Gram-Schmidt with one reorthogonalization pass.
    Stops when the residual drops below ``tol`` times the initial residual.
    """
    b = np.asarray(b, dtype=complex)
    if side not in ("left", "right"):
        raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")
    if preconditioner is None:
        op = apply_operator
        rhs = b
    elif side == "left":
        def op(v):
            return preconditioner(apply_operator(v))
        rhs = preconditioner(b)
    else:
        def op(v):
            return apply_operator(preconditioner(v))
        rhs = b

    def dual(v):
        return v if weight is None else weight @ v

    def norm(v, wv):
        return float(np.sqrt(max(np.vdot(v, wv).real, 0.0)))

    n = len(b)
    w_r = dual(rhs)
    beta = norm(rhs, w_r)
    history = [beta]
    if beta == 0.0:
        return GMRESResult(np.zeros(n, dtype=complex), np.array(history), True, 0, [] if keep_basis else None)

    V = [rhs / beta]
    Z = [w_r / beta]
    H = np.zeros((maxit + 1, maxit), dtype=complex)
    cs = np.zeros(maxit)
    sn = np.zeros(maxit, dtype=complex)
    g = np.zeros(maxit + 1, dtype=complex)
    g[0] = beta
    converged = False
    k = 0
    for j in range(maxit):
        w = op(V[j])
        for _ in range(2):
            for i in range(j + 1):
                hij = np.vdot(Z[i], w)
                H[i, j] += hij
                w = w - hij * V[i]
        zw = dual(w)
        hnext = norm(w, zw)
        H[j + 1, j] = hnext
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
        H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
        H[j + 1, j] = 0.0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]
        res = abs(g[j + 1])
        history.append(res)
        k = j + 1
        if res <= tol * beta or hnext <= 1e-14 * beta:
            converged = True
            break
        V.append(w / hnext)
        Z.append(zw / hnext)
    y = sla.solve_triangular(H[:k, :k], g[:k], lower=False)
    x = np.zeros(n, dtype=complex)
    for i in range(k):
        x += y[i] * V[i]
    if preconditioner is not None and side == "right":
        x = preconditioner(x)
    return GMRESResult(x, np.array(history), converged, k, V if keep_basis else None)
