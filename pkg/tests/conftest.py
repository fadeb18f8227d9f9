import functools

import numpy as np
import pytest

from maxwell_schwarz.cases import manufactured_case
from maxwell_schwarz.decomposition import build_decomposition, build_pou, subdomain_dofs
from maxwell_schwarz.local_problems import assemble_all_local
from maxwell_schwarz.mesh import build_box_mesh
from maxwell_schwarz.nedelec import EdgeDofMap, ProblemParams, assemble_system

UNIT = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def unit_mesh(n):
    mesh = build_box_mesh(UNIT, n)
    return mesh, EdgeDofMap(mesh)


@functools.lru_cache(maxsize=None)
def manufactured_system(n, kappa, eps):
    mesh, dofmap = unit_mesh(n)
    case = manufactured_case(kappa, eps)
    return mesh, dofmap, case, assemble_system(mesh, dofmap, ProblemParams(kappa, eps), case)


@functools.lru_cache(maxsize=None)
def decomposed(n, kappa, eps, parts, layers):
    mesh, dofmap, case, system = manufactured_system(n, kappa, eps)
    dec = build_decomposition(mesh, parts, layers)
    pou = build_pou(dec)
    locals_ = assemble_all_local(mesh, dofmap, dec, system.params)
    return mesh, dofmap, system, dec, pou, locals_


def interface_edges(mesh, dec, l):
    """Edges of the closed subdomain lying on a box face interior to the domain."""
    lo, hi = dec.boxes[l]
    mid = (mesh.edge_midpoints() - mesh.lower) / mesh.spacing
    edges = subdomain_dofs(dec, l)
    on = np.zeros(len(edges), bool)
    for a in range(3):
        if lo[a] > 0:
            on |= np.isclose(mid[edges, a], lo[a])
        if hi[a] < mesh.n:
            on |= np.isclose(mid[edges, a], hi[a])
    return edges[on]


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
