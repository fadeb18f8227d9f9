"""Eigenproblem-free coarse space from vector spherical harmonics.

Surface fields on the unit sphere are carried onto the interface of a box
subdomain through the radial projection map, interpolated onto interface
edges and lifted by the local impedance solver.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .decomposition import Decomposition
from .errors import ConfigurationError, OutOfDomainError
from .local_problems import LocalSystem
from .quadrature import gauss_line

log = logging.getLogger(__name__)

MAX_DEGREE = 30
DEDUP_TOL = 1e-10


def _legendre_q(jmax, x):
    """Normalized ``P_j^k(x) / sin(theta)^k`` and its x-derivative.

    Returns arrays ``Q[j, k]`` and ``dQ[j, k]`` of shape (jmax+1, jmax+1, len(x)).
    Normalization makes ``Q[j,k] s^k`` the orthonormal Legendre factor for
    ``k = 0``; non-zero orders get an extra sqrt(2) in the azimuthal factor.
    No Condon-Shortley phase.
    """
    x = np.asarray(x, dtype=float)
    Q = np.zeros((jmax + 1, jmax + 1) + x.shape)
    dQ = np.zeros_like(Q)
    prod = 1.0  # prod_{i<=k} (2i-1)/(2i)
    for k in range(jmax + 1):
        if k > 0:
            prod *= (2 * k - 1) / (2 * k)
        Q[k, k] = np.sqrt((2 * k + 1) / (4.0 * np.pi) * prod)
        if k + 1 <= jmax:
            c = np.sqrt(2 * k + 3)
            Q[k + 1, k] = c * x * Q[k, k]
            dQ[k + 1, k] = c * Q[k, k]
        for j in range(k + 2, jmax + 1):
            a = np.sqrt((4 * j * j - 1) / (j * j - k * k))
            b = np.sqrt(((j - 1) ** 2 - k * k) / (4 * (j - 1) ** 2 - 1))
            Q[j, k] = a * (x * Q[j - 1, k] - b * Q[j - 2, k])
            dQ[j, k] = a * (Q[j - 1, k] + x * dQ[j - 1, k] - b * dQ[j - 2, k])
    return Q, dQ


def _frames(points):
    p = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(p, axis=1)
    if np.any(np.abs(r - 1.0) > 1e-12):
        raise ConfigurationError("points must lie on the unit sphere")
    ct = np.clip(p[:, 2], -1.0, 1.0)
    st = np.hypot(p[:, 0], p[:, 1])
    phi = np.arctan2(p[:, 1], p[:, 0])
    cp, sp_ = np.cos(phi), np.sin(phi)
    e_r = p
    e_t = np.stack([ct * cp, ct * sp_, -st], axis=1)
    e_p = np.stack([-sp_, cp, np.zeros_like(cp)], axis=1)
    return ct, st, phi, e_r, e_t, e_p


def _vsh_all(mu, points):
    """Fields for every entry up to degree ``mu``: dict (j, k, nu) -> (npts, 3)."""
    ct, st, phi, e_r, e_t, e_p = _frames(points)
    Q, dQ = _legendre_q(mu, ct)
    out = {}
    for j in range(1, mu + 1):
        for k in range(-j, j + 1):
            m = abs(k)
            if k > 0:
                T, dT = np.sqrt(2) * np.cos(m * phi), -np.sqrt(2) * m * np.sin(m * phi)
            elif k < 0:
                T, dT = np.sqrt(2) * np.sin(m * phi), np.sqrt(2) * m * np.cos(m * phi)
            else:
                T, dT = np.ones_like(phi), np.zeros_like(phi)
            if m == 0:
                d_theta = -st * dQ[j, 0]
                d_phi = np.zeros_like(phi)
            else:
                sk1 = st ** (m - 1)
                d_theta = sk1 * (m * ct * Q[j, m] - st * st * dQ[j, m])
                d_phi = sk1 * Q[j, m]
            grad = (d_theta * T)[:, None] * e_t + (d_phi * dT)[:, None] * e_p
            out[(j, k, 2)] = grad
            out[(j, k, 3)] = np.cross(grad, e_r)
    return out


def scalar_sh(j, k, points):
    """Real orthonormal spherical harmonic ``Y_j^k`` (used by tests and diagnostics)."""
    ct, st, phi, *_ = _frames(points)
    Q, _ = _legendre_q(j, ct)
    m = abs(k)
    if k > 0:
        T = np.sqrt(2) * np.cos(m * phi)
    elif k < 0:
        T = np.sqrt(2) * np.sin(m * phi)
    else:
        T = np.ones_like(phi)
    return Q[j, m] * st ** m * T


def eval_vsh(j, k, nu, points) -> np.ndarray:
    """Surface gradient (``nu=2``) or its rotation ``grad x e_r`` (``nu=3``) of ``Y_j^k``.

    ``points`` is one unit vector or an (npts, 3) array; the result is real.
    """
    if abs(k) > j or j < 0 or nu not in (2, 3):
        raise ConfigurationError(f"invalid harmonic index (j={j}, k={k}, nu={nu})")
    single = np.ndim(points) == 1
    if j == 0:
        val = np.zeros((1 if single else len(points), 3))
    else:
        val = _vsh_all(j, points)[(j, k, nu)]
    return val[0] if single else val


@dataclass(frozen=True)
class SphericalHarmonicBasis:
    mu: int

    def __post_init__(self):
        if not 1 <= self.mu <= MAX_DEGREE:
            raise ConfigurationError(f"mu must lie in [1, {MAX_DEGREE}], got {self.mu}")

    @property
    def entries(self):
        return [(j, k, nu) for j in range(1, self.mu + 1) for k in range(-j, j + 1) for nu in (2, 3)]

    def __len__(self):
        return 2 * ((self.mu + 1) ** 2 - 1)

    def evaluate(self, points) -> np.ndarray:
        """All fields at once, shape (n_entries, npts, 3)."""
        table = _vsh_all(self.mu, points)
        return np.stack([table[e] for e in self.entries])


@dataclass(frozen=True)
class StarMap:
    """Radial projection of a box boundary onto the unit sphere around its centre."""

    center: np.ndarray
    half_widths: np.ndarray

    @classmethod
    def for_box(cls, lower, upper):
        lower, upper = np.asarray(lower, float), np.asarray(upper, float)
        return cls(0.5 * (lower + upper), 0.5 * (upper - lower))

    @classmethod
    def for_subdomain(cls, decomposition: Decomposition, l: int):
        mesh = decomposition.mesh
        lo, hi = decomposition.boxes[l]
        return cls.for_box(mesh.lower + lo * mesh.spacing, mesh.lower + hi * mesh.spacing)

    def radius(self, directions):
        """Distance from the centre to the box boundary along unit directions."""
        d = np.abs(np.atleast_2d(directions))
        with np.errstate(divide="ignore"):
            return np.min(np.where(d > 0, self.half_widths / d, np.inf), axis=1)

    def face_axis(self, points):
        """Index of the box face plane each point sits on (largest scaled offset)."""
        s = np.abs(np.atleast_2d(points) - self.center) / self.half_widths
        return np.argmax(s, axis=1)

    def __call__(self, points):
        rel = np.atleast_2d(points) - self.center
        r = np.linalg.norm(rel, axis=1)
        if np.any(r < 1e-14):
            raise OutOfDomainError("the star map is undefined at the box centre")
        return rel / self.radius(rel / r[:, None])[:, None]

    def jacobian(self, points, axis):
        """Jacobian of ``x -> y + g(x)(x - y)`` with ``g = |x_i - y_i| / (a_i |x - y|)``."""
        rel = np.atleast_2d(points) - self.center
        r = np.linalg.norm(rel, axis=1)
        if np.any(r < 1e-14):
            raise OutOfDomainError("the star map is undefined at the box centre")
        idx = np.arange(len(rel))
        ri = rel[idx, axis]
        ai = self.half_widths[axis]
        g = np.abs(ri) / (ai * r)
        grad = -(np.abs(ri) / (ai * r ** 3))[:, None] * rel
        grad[idx, axis] += np.sign(ri) / (ai * r)
        return g[:, None, None] * np.eye(3) + rel[:, :, None] * grad[:, None, :]


def pullback_trace(starmap: StarMap, fields, points, tangents, axis=None) -> np.ndarray:
    """Tangential components ``lam_hat(Phi(x)) . (J_Phi(x) t)`` of pulled-back fields.

    ``fields`` maps unit-sphere points (npts, 3) to values (nf, npts, 3) or (npts, 3).
    ``axis`` picks the face plane used for the Jacobian (defaults to the
    plane the point lies on).
    """
    points = np.atleast_2d(points)
    if axis is None:
        axis = starmap.face_axis(points)
    J = starmap.jacobian(points, axis)
    jt = np.einsum("pij,pj->pi", J, np.atleast_2d(tangents))
    sphere = starmap(points)
    sphere /= np.linalg.norm(sphere, axis=1)[:, None]
    vals = fields(sphere)
    return np.einsum("...pi,pi->...p", vals, jt)


def _edge_face_axis(starmap, pa, pb):
    s_a = np.abs(np.abs(pa - starmap.center) - starmap.half_widths)
    s_b = np.abs(np.abs(pb - starmap.center) - starmap.half_widths)
    on_both = (s_a < 1e-9 * starmap.half_widths) & (s_b < 1e-9 * starmap.half_widths)
    if not np.all(on_both.any(axis=1)):
        raise ConfigurationError("interface edge does not lie on a face of the subdomain box")
    return np.argmax(on_both, axis=1)


def interface_traces(mesh, local: LocalSystem, starmap: StarMap, basis: SphericalHarmonicBasis,
                     npts: int = 3) -> np.ndarray:
    """Edge DOFs (mean tangential components) of every pulled-back field, (m_l, n_entries)."""
    edges = mesh.edges[local.gamma_edges]
    pa, pb = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
    tau = (pb - pa) / np.linalg.norm(pb - pa, axis=1)[:, None]
    axis = _edge_face_axis(starmap, pa, pb)
    t, w = gauss_line(npts)
    traces = np.zeros((len(edges), len(basis)))
    for ti, wi in zip(t, w):
        x = pa + ti * (pb - pa)
        traces += wi * pullback_trace(starmap, basis.evaluate, x, tau, axis).T
    return traces


@dataclass
class EconomicalBasis:
    values: np.ndarray  # weighted lifted columns in local numbering
    n_candidates: int
    kept: np.ndarray  # candidate indices retained


def _dedupe(columns, S):
    G = columns.conj().T @ (S @ columns)
    G = 0.5 * (G + G.conj().T)
    diag = np.real(np.diag(G))
    if diag.size == 0 or diag.max() <= 0:
        return np.zeros(0, dtype=int)
    _, piv, rank, _ = sla.lapack.zpstrf(G, tol=DEDUP_TOL * diag.max(), lower=1)
    return np.sort(piv[:rank] - 1)


def build_economical_basis(mesh, local: LocalSystem, starmap: StarMap, mu: int, pou) -> EconomicalBasis:
    """Lift every pulled-back harmonic trace, weight by the partition of unity, drop near-duplicates."""
    basis = SphericalHarmonicBasis(mu)
    if local.m == 0:
        return EconomicalBasis(np.zeros((local.n_dofs, 0), complex), len(basis), np.zeros(0, int))
    traces = interface_traces(mesh, local, starmap, basis)
    lifted = local.F.solve(local.T_gamma[:, local.gamma_local] @ traces.astype(complex))
    weighted = pou.local(local.l, local.dofs)[:, None] * lifted
    kept = _dedupe(weighted, local.S)
    if kept.size == 0:
        log.warning("subdomain %d: every economical candidate is degenerate", local.l)
    return EconomicalBasis(weighted[:, kept], len(basis), kept)


def mu_rule(kappa, beta) -> int:
    """``round(kappa ** (1 - beta / 2))``, at least 1."""
    return max(1, int(round(kappa ** (1.0 - 0.5 * beta))))
