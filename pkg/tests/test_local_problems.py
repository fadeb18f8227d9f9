import numpy as np
import pytest

from maxwell_schwarz.cases import dipole_case
from maxwell_schwarz.decomposition import build_decomposition
from maxwell_schwarz.local_problems import (
    assemble_local,
    build_harmonic_basis,
    harmonic_lift,
)
from maxwell_schwarz.nedelec import ProblemParams, assemble_system

from conftest import decomposed, interface_edges, random_complex, unit_mesh


def test_single_subdomain_is_global_problem():
    mesh, dofmap, system, dec, pou, locals_ = decomposed(3, 2.0, 2.0, 1, 1)
    loc = locals_[0]
    assert loc.m == 0 and len(loc.gamma_faces) == 0
    assert np.array_equal(loc.dofs, np.arange(dofmap.n_dofs))
    assert abs(loc.A - system.A).max() == 0
    assert abs(loc.S - system.S_imp).max() < 1e-14


def test_single_subdomain_with_layered_permittivity():
    mesh, dofmap = unit_mesh(4)
    case = dipole_case(2.0).fit_to_mesh(mesh)
    system = assemble_system(mesh, dofmap, ProblemParams(2.0, 2.0), case)
    loc = assemble_local(mesh, dofmap, build_decomposition(mesh, 1, 1), 0, system.params)
    assert abs(loc.A - system.A).max() < 1e-12


@pytest.mark.parametrize("n,parts,layers", [(4, 2, 1), (6, 2, 2), (6, 3, 1)])
def test_interface_edges_match_geometry(n, parts, layers):
    mesh, dofmap, system, dec, pou, locals_ = decomposed(n, 2.0, 2.0, parts, layers)
    for loc in locals_:
        expected = interface_edges(mesh, dec, loc.l)
        assert np.array_equal(loc.gamma_edges, np.sort(expected))
        assert np.array_equal(loc.dofs[loc.gamma_local], loc.gamma_edges)
        # Gamma faces are interior faces of the global mesh
        assert np.all((mesh.face_cells[loc.gamma_faces] >= 0).all(axis=1))


def test_local_matrix_identities(rng):
    kappa, eps = 2.0, 2.0
    mesh, dofmap, system, dec, pou, locals_ = decomposed(4, kappa, eps, 2, 1)
    loc = locals_[0]
    v = random_complex(rng, loc.n_dofs)
    a = np.vdot(v, loc.A @ v)
    S = loc.S.toarray()
    assert np.allclose(S, S.conj().T)
    assert np.linalg.eigvalsh(S).min() > 0
    # Im a_l(v, v) = -eps |v|_0^2 - kappa |v_T|^2 over all of dOmega_l, so |Im a| <= S-norm
    assert a.imag < 0
    assert abs(a.imag) <= max(eps / kappa ** 2, 1.0) * np.vdot(v, S @ v).real
    assert abs(loc.A - loc.A.T).max() < 1e-13


def test_lift_properties(rng):
    mesh, dofmap, system, dec, pou, locals_ = decomposed(4, 2.0, 2.0, 2, 1)
    loc = locals_[3]
    assert np.all(harmonic_lift(loc, np.zeros(loc.m)) == 0)
    lam, mu = random_complex(rng, loc.m), random_complex(rng, loc.m)
    v = harmonic_lift(loc, lam)
    assert np.linalg.norm(loc.A @ v - loc.trace_load(lam)) <= 1e-12 * np.linalg.norm(loc.trace_load(lam))
    # discrete harmonicity: the residual vanishes away from Gamma_l
    interior = np.setdiff1d(np.arange(loc.n_dofs), loc.gamma_local)
    assert np.abs((loc.A @ v)[interior]).max() < 1e-12 * np.abs(v).max()
    w = harmonic_lift(loc, 2 * lam - 1j * mu)
    assert np.allclose(w, 2 * v - 1j * harmonic_lift(loc, mu))


def test_harmonic_basis_columns_are_unit_lifts():
    mesh, dofmap, system, dec, pou, locals_ = decomposed(4, 2.0, 2.0, 2, 1)
    loc = locals_[1]
    hb = build_harmonic_basis(loc)
    assert hb.m == loc.m == 90
    for j in (0, 17, 89):
        e = np.zeros(loc.m)
        e[j] = 1.0
        assert np.allclose(hb.V[:, j], harmonic_lift(loc, e))
    assert np.allclose(hb.gram, hb.V.conj().T @ (loc.S @ hb.V))
    assert np.linalg.eigvalsh(hb.gram).min() > 0


def test_empty_interface_basis():
    _, _, _, _, _, locals_ = decomposed(3, 2.0, 2.0, 1, 1)
    hb = build_harmonic_basis(locals_[0])
    assert hb.V.shape == (locals_[0].n_dofs, 0)


def test_assembly_is_deterministic():
    mesh, dofmap, system, dec, pou, locals_ = decomposed(4, 2.0, 2.0, 2, 1)
    again = assemble_local(mesh, dofmap, dec, 2, system.params)
    first = locals_[2]
    assert np.array_equal(again.dofs, first.dofs)
    assert (again.A != first.A).nnz == 0
    assert (again.T_gamma != first.T_gamma).nnz == 0
