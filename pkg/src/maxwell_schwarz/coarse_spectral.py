"""Adaptive spectral coarse space built from local Maxwell-harmonic pencils."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, SingularMatrixError
from .linalg import Factorization, hermitian_gen_eig
from .local_problems import HarmonicBasis, LocalSystem

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-10
COLUMN_TOL = 1e-13


@dataclass
class SpectralSelection:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns in harmonic-basis coordinates
    rho: float
    selected: np.ndarray

    @property
    def n_selected(self) -> int:
        return len(self.selected)


class CoarseSpace:
    """Coarse basis ``C`` kept as dense blocks ``(dofs, W)``, plus ``A0 = C^H A C`` and its LU.

    Column ``j`` of block ``b`` is the global vector with ``W[:, j]`` on
    ``dofs`` and zeros elsewhere; columns are ordered block by block.
    """

    def __init__(self, n_global, blocks, A0=None, F0=None, owners=None):
        self.n_global = n_global
        self.blocks = blocks
        self.A0 = A0
        self.F0 = F0
        self.owners = owners or []
        sizes = [w.shape[1] for _, w in blocks]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    @property
    def C(self) -> sp.csc_matrix:
        """Sparse assembled basis (convenient for small problems)."""
        if not self.blocks:
            return sp.csc_matrix((self.n_global, 0), dtype=complex)
        mats = []
        for dofs, W in self.blocks:
            P = sp.csr_matrix(
                (np.ones(len(dofs)), (dofs, np.arange(len(dofs)))), shape=(self.n_global, len(dofs))
            )
            mats.append(P @ sp.csc_matrix(W))
        return sp.hstack(mats).tocsc()

    def restrict(self, r) -> np.ndarray:
        """``C^H r``."""
        return np.concatenate([W.conj().T @ r[dofs] for dofs, W in self.blocks])

    def extend(self, y) -> np.ndarray:
        """``C y``."""
        z = np.zeros(self.n_global, dtype=complex)
        for b, (dofs, W) in enumerate(self.blocks):
            z[dofs] += W @ y[self.offsets[b]:self.offsets[b + 1]]
        return z

    def correct(self, r) -> np.ndarray:
        """``C A0^{-1} C^H r``."""
        if self.dim == 0:
            return np.zeros(self.n_global, dtype=complex)
        return self.extend(self.F0.solve(self.restrict(np.asarray(r, dtype=complex))))


def build_geneo_pencil(local: LocalSystem, harmonic: HarmonicBasis, weights):
    """``L = (WV)^H S (WV)`` and ``R = V^H S V`` with ``W = diag(weights)``."""
    if harmonic.m == 0:
        raise ConfigurationError(f"subdomain {local.l} has no interface DOFs")
    WV = np.asarray(weights)[:, None] * harmonic.V
    L = WV.conj().T @ (local.S @ WV)
    L = 0.5 * (L + L.conj().T)
    return L, harmonic.gram


def select_modes(eigenvalues, eigenvectors, rho) -> SpectralSelection:
    """Keep eigenpairs with ``lam >= rho**2``."""
    if not 0.0 < rho < 1.0:
        raise ConfigurationError(f"rho must lie in (0, 1), got {rho}")
    lam = np.array(eigenvalues, dtype=float)
    if lam.size and lam.min() < -CLAMP_TOL:
        raise ConfigurationError(
            f"pencil eigenvalue {lam.min():.3e} is negative beyond roundoff"
        )
    lam[lam < 0] = 0.0
    selected = np.flatnonzero(lam >= rho ** 2)
    return SpectralSelection(lam, eigenvectors, float(rho), selected)


def solve_pencil(local, harmonic, weights, rho) -> SpectralSelection:
    L, R = build_geneo_pencil(local, harmonic, weights)
    lam, X = hermitian_gen_eig(L, R)
    return select_modes(lam, X, rho)


def spectral_sigma(alpha, beta, gamma) -> float:
    return 2.0 - (alpha + beta) + 0.5 * gamma


def _check_exponents(alpha, beta, gamma):
    if not 0.0 <= alpha <= beta <= 1.0:
        raise ConfigurationError(f"need 0 <= alpha <= beta <= 1, got alpha={alpha}, beta={beta}")
    if not 0.0 < gamma <= 1.0:
        raise ConfigurationError(f"gamma must lie in (0, 1], got {gamma}")


def choose_rho(kappa, alpha, beta, gamma, C0=1.0) -> float:
    """``min(C0 * kappa**-sigma, 0.999)`` with ``sigma = 2 - (alpha + beta) + gamma / 2``."""
    _check_exponents(alpha, beta, gamma)
    if C0 <= 0:
        raise ConfigurationError(f"C0 must be positive, got {C0}")
    return float(min(C0 * kappa ** (-spectral_sigma(alpha, beta, gamma)), 0.999))


def calibrate_C0(eigenvalue_sets, kappa, alpha, beta, gamma, target_fraction) -> float:
    """C0 such that ``choose_rho`` at ``kappa`` keeps about ``target_fraction`` of all modes.

    ``eigenvalue_sets`` are the pencil spectra of every subdomain at this ``kappa``.
    """
    _check_exponents(alpha, beta, gamma)
    if not 0.0 < target_fraction <= 1.0:
        raise ConfigurationError(f"target fraction must lie in (0, 1], got {target_fraction}")
    lam = np.sort(np.concatenate([np.asarray(e, float) for e in eigenvalue_sets]))[::-1]
    if lam.size == 0:
        return 1.0
    k = max(1, int(np.ceil(target_fraction * lam.size)))
    root = np.sqrt(np.maximum(lam, 1e-16))
    # midway to the next eigenvalue so rounding cannot move the boundary mode
    rho = float(root[k - 1] * (1 - 1e-12) if k == lam.size else 0.5 * (root[k - 1] + root[k]))
    rho = min(rho, 0.999)
    return rho * kappa ** spectral_sigma(alpha, beta, gamma)


def _galerkin(blocks, A, offsets):
    A = sp.csr_matrix(A)
    n = A.shape[0]
    dim = offsets[-1]
    A0 = np.zeros((dim, dim), dtype=complex)
    for m, (dofs_m, W_m) in enumerate(blocks):
        cols = A[:, dofs_m].tocsr()
        rows = np.flatnonzero(np.diff(cols.indptr))
        AW = cols[rows] @ W_m  # (rows, k_m), zero outside ``rows``
        pos = np.full(n, -1)
        pos[rows] = np.arange(len(rows))
        for l, (dofs_l, W_l) in enumerate(blocks):
            hit = pos[dofs_l]
            keep = hit >= 0
            if not keep.any():
                continue
            A0[offsets[l]:offsets[l + 1], offsets[m]:offsets[m + 1]] = (
                W_l[keep].conj().T @ AW[hit[keep]]
            )
    return A0


def assemble_coarse_columns(blocks, n_global, A, owners=None) -> CoarseSpace:
    """Build the coarse space from local blocks ``(dofs, values)`` and factor ``C^H A C``.

    Columns whose Euclidean norm is at most 1e-13 are dropped.
    """
    kept_blocks, kept_owners = [], []
    for b, (dofs, values) in enumerate(blocks):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 2 or values.shape[1] == 0:
            continue
        good = np.flatnonzero(np.linalg.norm(values, axis=0) > COLUMN_TOL)
        if good.size == 0:
            continue
        kept_blocks.append((np.asarray(dofs), values[:, good]))
        kept_owners.extend(owners[b][i] if owners is not None else (b, int(i)) for i in good)
    coarse = CoarseSpace(n_global, kept_blocks, owners=kept_owners)
    if coarse.dim == 0:
        log.info("coarse space is empty; the two-level method reduces to one level")
        return coarse
    coarse.A0 = _galerkin(kept_blocks, A, coarse.offsets)
    try:
        coarse.F0 = Factorization(coarse.A0)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"coarse matrix of dimension {coarse.dim} is singular; try a larger rho ({exc})",
            pivot=exc.pivot,
        ) from exc
    return coarse


def local_coarse_block(local, harmonic, selection, pou) -> np.ndarray:
    """``diag(chi_l) V_l xi`` for the selected modes of one subdomain."""
    w = pou.local(local.l, local.dofs)
    return w[:, None] * (harmonic.V @ selection.eigenvectors[:, selection.selected])


def assemble_coarse(selections, locals_, harmonics, pou, A) -> CoarseSpace:
    """Columns ``P_l diag(chi_l) V_l xi`` for every selected mode, ordered by (l, i)."""
    blocks, owners = [], []
    for sel, loc, harm in zip(selections, locals_, harmonics):
        if sel is None or sel.n_selected == 0:
            continue
        blocks.append((loc.dofs, local_coarse_block(loc, harm, sel, pou)))
        owners.append([(loc.l, int(i)) for i in sel.selected])
    return assemble_coarse_columns(blocks, A.shape[0], A, owners)


def dump_spectra(selections, path) -> Path:
    """CSV with one row per (subdomain, eigenvalue)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["subdomain", "index", "eigenvalue", "selected"])
        for l, sel in enumerate(selections):
            if sel is None:
                continue
            chosen = set(sel.selected.tolist())
            for i, lam in enumerate(sel.eigenvalues):
                out.writerow([l, i, f"{lam:.16e}", int(i in chosen)])
    return path
