"""Overlapping box decompositions and the edge partition of unity."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .mesh import BoxMesh

log = logging.getLogger(__name__)


def overlap_layers_for(n: int, parts_per_dim: int, overlap) -> int:
    """Element layers for ``"minimal"``, ``"generous"`` (about H/6) or an integer."""
    if overlap == "minimal":
        return 1
    if overlap == "generous":
        return max(1, int(round(n / (6 * parts_per_dim))))
    layers = int(overlap)
    if layers < 1:
        raise ConfigurationError(f"overlap layers must be >= 1, got {overlap!r}")
    return layers


@dataclass
class Decomposition:
    mesh: BoxMesh
    parts_per_dim: int
    overlap_layers: int
    boxes: np.ndarray  # (N, 2, 3) grid index bounds [lo, hi) of each Omega_l
    base_boxes: np.ndarray  # (N, 2, 3) non-overlapping boxes
    subdomains: list
    halo: list
    neighbors: list
    H: float

    @property
    def n_subdomains(self) -> int:
        return len(self.subdomains)

    @property
    def delta(self) -> float:
        return self.overlap_layers * self.mesh.grid_h

    def summary(self) -> dict:
        return {
            "parts_per_dim": self.parts_per_dim,
            "n_subdomains": self.n_subdomains,
            "overlap_layers": self.overlap_layers,
            "delta": self.delta,
            "H": self.H,
            "cells_per_subdomain": [int(len(c)) for c in self.subdomains],
        }


def _cells_in_box(mesh, lo, hi):
    r = [np.arange(lo[a], hi[a]) for a in range(3)]
    ci, cj, ck = np.meshgrid(*r, indexing="ij")
    cube = ((ci * mesh.n + cj) * mesh.n + ck).ravel()
    return (6 * cube[:, None] + np.arange(6)).ravel()


def build_decomposition(mesh: BoxMesh, parts_per_dim: int, overlap_layers: int) -> Decomposition:
    """Split the box into ``parts_per_dim**3`` cubes and extend each by element layers."""
    parts = int(parts_per_dim)
    layers = int(overlap_layers)
    if parts < 1 or mesh.n % parts:
        raise ConfigurationError(f"parts_per_dim={parts_per_dim} must divide n={mesh.n}")
    if layers < 1:
        raise ConfigurationError(f"overlap_layers must be >= 1, got {overlap_layers}")
    step = mesh.n // parts
    boxes, base, subdomains, halos = [], [], [], []
    vgrid = mesh.vertex_grid_index(np.arange(mesh.n_vertices))
    for idx in itertools.product(range(parts), repeat=3):
        b_lo = np.array(idx) * step
        b_hi = b_lo + step
        lo = np.maximum(b_lo - layers, 0)
        hi = np.minimum(b_hi + layers, mesh.n)
        if parts > 1 and np.all(lo == 0) and np.all(hi == mesh.n):
            log.warning("subdomain %s covers the whole domain", idx)
        boxes.append((lo, hi))
        base.append((b_lo, b_hi))
        subdomains.append(_cells_in_box(mesh, lo, hi))
        inside = np.all((vgrid >= lo) & (vgrid <= hi), axis=1)
        halos.append(np.flatnonzero(inside[mesh.cells].any(axis=1)))
    boxes = np.array(boxes)
    neighbors = []
    for l in range(len(boxes)):
        lo, hi = boxes[l]
        overlap = np.all(
            (np.minimum(hi, boxes[:, 1]) - np.maximum(lo, boxes[:, 0])) > 0, axis=1
        )
        neighbors.append(np.flatnonzero(overlap))
    diam = np.linalg.norm((boxes[:, 1] - boxes[:, 0]) * mesh.spacing, axis=1)
    return Decomposition(
        mesh=mesh,
        parts_per_dim=parts,
        overlap_layers=layers,
        boxes=boxes,
        base_boxes=np.array(base),
        subdomains=subdomains,
        halo=halos,
        neighbors=neighbors,
        H=float(diam.max()),
    )


@dataclass
class PartitionOfUnity:
    chi: np.ndarray  # (N, n_edges) weights at edge midpoints

    def local(self, l, dofs):
        return self.chi[l, dofs]


def layer_distance(decomposition: Decomposition, l: int, points) -> np.ndarray:
    """Distance in element layers from points to ``dOmega_l \\ dOmega``.

    Capped at the overlap width; zero outside the closed subdomain.
    """
    mesh = decomposition.mesh
    s = (np.atleast_2d(points) - mesh.lower) / mesh.spacing
    lo, hi = decomposition.boxes[l]
    tol = 1e-9
    inside = np.all((s >= lo - tol) & (s <= hi + tol), axis=1)
    d = np.full(len(s), float(decomposition.overlap_layers))
    for a in range(3):
        if lo[a] > 0:
            d = np.minimum(d, s[:, a] - lo[a])
        if hi[a] < mesh.n:
            d = np.minimum(d, hi[a] - s[:, a])
    d = np.clip(d, 0.0, None)
    d[~inside] = 0.0
    return d


def build_pou(decomposition: Decomposition, mesh: BoxMesh | None = None) -> PartitionOfUnity:
    """Normalized layer-distance weights sampled at edge midpoints."""
    mesh = mesh or decomposition.mesh
    mid = mesh.edge_midpoints()
    w = np.stack([layer_distance(decomposition, l, mid) for l in range(decomposition.n_subdomains)])
    total = w.sum(axis=0)
    assert np.all(total > 0), "decomposition does not cover every edge midpoint"
    chi = w / total
    # push the rounding residue of each column onto its largest weight
    top = np.argmax(chi, axis=0)
    cols = np.arange(chi.shape[1])
    rest = chi.sum(axis=0) - chi[top, cols]
    chi[top, cols] = 1.0 - rest
    return PartitionOfUnity(chi=chi)


def subdomain_dofs(decomposition: Decomposition, l: int) -> np.ndarray:
    """Global edges of the closed subdomain, ascending."""
    mesh = decomposition.mesh
    return np.unique(mesh.cell_edges[decomposition.subdomains[l]].ravel())


def prolongation(decomposition: Decomposition, dofmap, l: int) -> sp.csr_matrix:
    """Boolean matrix mapping subdomain DOFs to global DOFs (zero extension)."""
    dofs = subdomain_dofs(decomposition, l)
    n_loc = len(dofs)
    return sp.csr_matrix(
        (np.ones(n_loc), (dofs, np.arange(n_loc))), shape=(dofmap.n_dofs, n_loc)
    )
