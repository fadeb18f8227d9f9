"""Source definitions: manufactured smooth solution and point dipole in layers."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

log = logging.getLogger(__name__)


@dataclass
class ManufacturedCase:
    """Smooth exact field with matching volume source and impedance data.

    ``J = curl curl E - (kappa^2 + i eps) E`` so that the exact field solves
    the absorbing problem for any ``eps``; ``eps = 0`` gives the plain
    ``curl curl E - kappa^2 E`` source.
    """

    kappa: float
    epsilon: float = 0.0
    poly_degree: int | None = None
    dipole: None = None
    rel_permittivity: None = None

    def exact(self, p):
        x, y, z = np.asarray(p, dtype=float).T
        k = self.kappa
        return np.stack(
            [
                x * z * np.sin(k * y) + 1j * y * z * np.cos(k * x),
                -z * np.sin(k * y) - 1j * z * np.sin(k * x),
                (1 + 1j) * x * y,
            ],
            axis=1,
        )

    def curl(self, p):
        x, y, z = np.asarray(p, dtype=float).T
        k = self.kappa
        return np.stack(
            [
                (1 + 1j) * x + 1j * np.sin(k * x) + np.sin(k * y),
                x * np.sin(k * y) + 1j * y * np.cos(k * x) - (1 + 1j) * y,
                -z * (k * x * np.cos(k * y) + 1j * (k + 1) * np.cos(k * x)),
            ],
            axis=1,
        )

    def curl_curl(self, p):
        x, y, z = np.asarray(p, dtype=float).T
        k = self.kappa
        return np.stack(
            [
                k ** 2 * x * z * np.sin(k * y),
                -1j * k * (k + 1) * z * np.sin(k * x) + k * z * np.cos(k * y),
                -1j * k * y * np.sin(k * x) - k * np.cos(k * y) + np.sin(k * y),
            ],
            axis=1,
        )

    def J(self, p):
        return self.curl_curl(p) - (self.kappa ** 2 + 1j * self.epsilon) * self.exact(p)

    def g(self, p, normals):
        E = self.exact(p)
        ET = E - np.sum(E * normals, axis=1)[:, None] * normals
        return np.cross(self.curl(p), normals) - 1j * self.kappa * ET


def manufactured_case(kappa, epsilon=0.0) -> ManufacturedCase:
    return ManufacturedCase(kappa=kappa, epsilon=epsilon)


@dataclass
class ZeroCase:
    """No sources: the discrete solution vanishes."""

    poly_degree: int | None = 0
    dipole: None = None
    rel_permittivity: None = None

    def J(self, p):
        return np.zeros((len(p), 3), dtype=complex)

    def g(self, p, normals):
        return np.zeros((len(p), 3), dtype=complex)

    def exact(self, p):
        return np.zeros((len(p), 3), dtype=complex)


# (lower z bound, relative permittivity), scanned top to bottom
DEFAULT_LAYERS = (
    (0.5, 1.0 + 0.0j),
    (0.2, 11.5 + 1e-4j),
    (0.025, 2.1 + 1e-5j),
    (0.0, 1.0 + 1e7j),
)


@dataclass
class DipoleCase:
    """Point dipole ``i a delta_{x0}`` in horizontally layered media."""

    kappa: float
    x0: tuple = (0.5, 0.5, 0.8)
    moment: tuple = (1.0, 0.0, 0.0)
    layers: tuple = DEFAULT_LAYERS
    interfaces: tuple = ()
    snaps: list = field(default_factory=list)
    shift: np.ndarray | None = None
    poly_degree: int | None = None
    J: None = None
    g: None = None

    @property
    def dipole(self):
        return (np.asarray(self.x0, dtype=float), np.asarray(self.moment, dtype=float))

    def permittivity_at(self, z):
        z = np.asarray(z, dtype=float)
        bounds = self.interfaces or tuple(b for b, _ in self.layers)
        out = np.full(z.shape, self.layers[-1][1], dtype=complex)
        for (_, value), lower in reversed(list(zip(self.layers, bounds))):
            out[z >= lower] = value
        return out

    def rel_permittivity(self, centroids):
        return self.permittivity_at(np.asarray(centroids)[:, 2])

    def fit_to_mesh(self, mesh):
        """Snap layer interfaces to mesh planes and move ``x0`` off mesh planes.

        Returns a new case; snaps and the dipole shift are recorded on it.
        """
        hz = mesh.spacing[2]
        z0 = mesh.lower[2]
        snapped, snaps = [], []
        for lower, _ in self.layers:
            s = z0 + np.round((lower - z0) / hz) * hz
            snapped.append(float(s))
            if abs(s - lower) > 1e-12:
                snaps.append({"interface": lower, "snapped_to": float(s)})
                log.info("layer interface z=%g snapped to mesh plane z=%g", lower, s)
        x0 = np.array(self.x0, dtype=float)
        shift = np.zeros(3)
        on_plane = np.abs((x0 - mesh.lower) / mesh.spacing - np.round((x0 - mesh.lower) / mesh.spacing)) < 1e-9
        if np.any(x0 < mesh.lower) or np.any(x0 > mesh.upper):
            raise ConfigurationError(f"dipole location {x0.tolist()} outside the domain")
        if on_plane.any():
            shift[on_plane] = mesh.h / 100.0
            centre = 0.5 * (mesh.lower + mesh.upper)
            shift *= np.where(x0 > centre, -1.0, 1.0)
            log.info("dipole moved off mesh planes by %s", shift.tolist())
        return DipoleCase(
            kappa=self.kappa,
            x0=tuple(x0 + shift),
            moment=self.moment,
            layers=self.layers,
            interfaces=tuple(snapped),
            snaps=snaps,
            shift=shift,
        )


def dipole_case(kappa, layer_table=DEFAULT_LAYERS, x0=(0.5, 0.5, 0.8)) -> DipoleCase:
    return DipoleCase(kappa=kappa, x0=tuple(x0), layers=tuple(layer_table))
