"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (also printed in the terminal summary)
before asserting.
"""
import dataclasses
import math
import time

import numpy as np
import pytest
import scipy.linalg as sla

from maxwell_schwarz.coarse_economical import StarMap, build_economical_basis
from maxwell_schwarz.coarse_spectral import assemble_coarse_columns, solve_pencil
from maxwell_schwarz.config import ExperimentConfig
from maxwell_schwarz.decomposition import build_decomposition, build_pou, overlap_layers_for
from maxwell_schwarz.harness import convergence_study, run_experiment
from maxwell_schwarz.linalg import Factorization
from maxwell_schwarz.local_problems import build_harmonic_basis
from maxwell_schwarz.nedelec import assemble_forms, discrete_l2_norm, source_norms
from maxwell_schwarz.preconditioner import SchwarzPreconditioner, build_grid_coarse

from conftest import ACCEPTANCE_LINES, decomposed, manufactured_system, random_complex, unit_mesh

KAPPA = 2 * math.pi

# desk fixture at kappa = 2 pi: 8 points per wavelength (n = 8), 2x2x2 subdomains
FIXTURE = ExperimentConfig(kappa=KAPPA, mesh_rule="ppw", n_ppw=8, parts="2", overlap="generous",
                           calibrate_fraction=0.3)


def record(number, name, ok, detail):
    line = f"criterion {number:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


_RUNS = {}


def fixture_run(**changes):
    key = tuple(sorted(changes.items()))
    if key not in _RUNS:
        _RUNS[key] = run_experiment(dataclasses.replace(FIXTURE, **changes))
    return _RUNS[key]


def test_criterion_01_imaginary_part_identity():
    t0 = time.perf_counter()
    kappa, eps = KAPPA, KAPPA
    mesh, dofmap, case, s = manufactured_system(8, kappa, eps)
    E = Factorization(s.A.tocsc()).solve(s.rhs)
    mass = np.vdot(E, s.M0 @ E).real
    trace = np.vdot(E, s.T_bnd @ E).real
    curl = np.vdot(E, s.K @ E).real
    load = np.vdot(E, s.rhs)
    lhs = (kappa ** 2 + 1j * eps) * mass - curl + 1j * kappa * trace
    identity = abs(lhs + load) / abs(load)
    imag = abs(eps * mass + kappa * trace + load.imag) / abs(load)
    J2, g2 = source_norms(mesh, dofmap, case)
    left = eps * mass + kappa * trace
    right = J2 / eps + g2 / kappa
    elapsed = time.perf_counter() - t0
    ok = identity <= 1e-10 and imag <= 1e-10 and left <= right and elapsed < 30
    record(1, "algebraic identity", ok,
           f"identity rel {identity:.1e}, imag rel {imag:.1e}, bound {left:.4g} <= {right:.4g}, "
           f"{elapsed:.1f} s")


def test_criterion_02_form_constants():
    rng = np.random.default_rng(2024)
    violations, worst_low, worst_high = 0, np.inf, 0.0
    for eps_rule in ("kappa", "kappa2"):
        eps = KAPPA if eps_rule == "kappa" else KAPPA ** 2
        s = manufactured_system(4, KAPPA, eps)[3]
        n = s.A.shape[0]
        for _ in range(1000):
            v, w = random_complex(rng, n), random_complex(rng, n)
            Sv, Sw = s.S_imp @ v, s.S_imp @ w
            nv2 = np.vdot(v, Sv).real
            nw2 = np.vdot(w, Sw).real
            low = abs(np.vdot(v, s.A @ v)) / (eps / (6 * KAPPA ** 2) * nv2)
            high = abs(np.vdot(w, s.A @ v)) / (np.sqrt(2) * np.sqrt(nv2 * nw2))
            worst_low, worst_high = min(worst_low, low), max(worst_high, high)
            violations += int(low < 1) + int(high > 1)
    record(2, "form constants", violations == 0,
           f"{violations} violations in 2x1000 pairs, min coercivity ratio {worst_low:.3g}, "
           f"max continuity ratio {worst_high:.3g}")


def test_criterion_03_partition_of_unity():
    n = 30
    mesh, dofmap = unit_mesh(n)
    rng = np.random.default_rng(3)
    worst = 0.0
    cases = []
    for parts in (2, 3):
        for overlap in ("minimal", "generous"):
            layers = overlap_layers_for(n, parts, overlap)
            cases.append(f"p{parts}/{layers}L")
            dec = build_decomposition(mesh, parts, layers)
            pou = build_pou(dec)
            dofs = [np.unique(mesh.cell_edges[c].ravel()) for c in dec.subdomains]
            for _ in range(10):
                V = random_complex(rng, dofmap.n_dofs, 10)
                Z = np.zeros_like(V)
                for l, d in enumerate(dofs):
                    Z[d] += pou.local(l, d)[:, None] * V[d]
                worst = max(worst, np.abs(Z - V).max())
    assert len(set(cases)) == 4  # generous differs from one layer at this n
    record(3, "partition of unity", worst <= 1e-14,
           f"max |sum E D R v - v| = {worst:.1e} over 100 vectors for {', '.join(cases)}")


def test_criterion_04_spectral_coarse_correctness():
    n = FIXTURE.mesh_n()
    mesh, dofmap, system, dec, pou, locals_ = decomposed(n, KAPPA, KAPPA, 2, 1)
    rng = np.random.default_rng(4)
    drift, excess = 0.0, -np.inf
    for loc in locals_:
        hb = build_harmonic_basis(loc)
        w = pou.local(loc.l, loc.dofs)
        for rho in (0.1, 0.3):
            sel = solve_pencil(loc, hb, w, rho)
            X = sel.eigenvectors
            drift = max(drift, np.abs(X.conj().T @ hb.gram @ X - np.eye(hb.m)).max())
            Xs = X[:, sel.selected]
            for _ in range(100):
                x = random_complex(rng, hb.m)
                x /= np.sqrt(np.vdot(x, hb.gram @ x).real)  # |v|_S = 1
                rest = x - Xs @ (Xs.conj().T @ (hb.gram @ x))
                u = w * (hb.V @ rest)
                excess = max(excess, np.sqrt(np.vdot(u, loc.S @ u).real) - rho)
    ok = drift <= 1e-10 and excess <= 1e-10
    record(4, "spectral coarse correctness", ok,
           f"orthonormality drift {drift:.1e}, max |W(I-P)v| - rho = {excess:.3g}")


def test_criterion_05_exact_preconditioner():
    rep = run_experiment(ExperimentConfig(kappa=KAPPA, mesh_rule="fixed", n=4, parts="1",
                                          method="wasi", tol=1e-6))
    record(5, "exact preconditioner", rep.converged and rep.iterations == 1,
           f"parts=1 GMRES iterations {rep.iterations}")


def _dense(op, n):
    I = np.eye(n, dtype=complex)
    return np.column_stack([op(I[:, j]) for j in range(n)])


def test_criterion_06_dense_oracle():
    mesh, dofmap, system, dec, pou, locals_ = decomposed(2, KAPPA, KAPPA, 2, 1)
    n = dofmap.n_dofs
    A = system.A.toarray()
    one = np.zeros((n, n), complex)
    for loc in locals_:
        R = np.zeros((loc.n_dofs, n))
        R[np.arange(loc.n_dofs), loc.dofs] = 1.0
        one += R.T @ np.diag(pou.local(loc.l, loc.dofs)) @ np.linalg.inv(loc.A.toarray()) @ R
    B1 = SchwarzPreconditioner(system.A, locals_, pou)
    err = {"one-level": np.abs(_dense(B1, n) - one).max() / np.abs(one).max()}
    # every overlapping subdomain covers the cube here, so the interface-based coarse
    # spaces are empty; the hybrid formula is checked with the grid space and a random basis
    rng = np.random.default_rng(6)
    blocks = [(loc.dofs, pou.local(loc.l, loc.dofs)[:, None] * random_complex(rng, loc.n_dofs, 3))
              for loc in locals_]
    coarse_spaces = {
        "grid": build_grid_coarse(mesh, dofmap, dec, system.A),
        "random": assemble_coarse_columns(blocks, n, system.A),
    }
    for name, coarse in coarse_spaces.items():
        C = coarse.C.toarray()
        Q = C @ np.linalg.solve(C.conj().T @ A @ C, C.conj().T)
        ref = (np.eye(n) - Q @ A) @ one + Q
        H = SchwarzPreconditioner(system.A, locals_, pou, coarse, "hybrid-spectral")
        err[name] = np.abs(_dense(H, n) - ref).max() / np.abs(ref).max()
    ok = max(err.values()) <= 1e-10
    record(6, "dense oracle", ok, ", ".join(f"{k} {v:.1e}" for k, v in err.items()))


@pytest.mark.slow
def test_criterion_07_robustness_trend():
    t0 = time.perf_counter()
    base = ExperimentConfig(method="spectral", mesh_rule="gamma", gamma=0.5, parts="2",
                            overlap="minimal", calibrate_fraction=0.3, calibrate_kappa=math.pi)
    rows = []
    for factor in (1.0, 1.5, 2.0):
        rep = run_experiment(dataclasses.replace(base, kappa=factor * math.pi))
        rows.append((factor, rep.resolved["n"], rep.resolved["rho"], rep.coarse_dim,
                     rep.iterations, rep.converged))
    elapsed = time.perf_counter() - t0
    iters = [r[4] for r in rows]
    ok = all(r[5] for r in rows) and max(iters) - iters[0] <= 2 and elapsed <= 900
    detail = "; ".join(f"{f}pi n={n} rho={rho:.3g} dim={d} it={it}" for f, n, rho, d, it, _ in rows)
    record(7, "robustness trend", ok, f"{detail}; {elapsed:.0f} s")


def test_criterion_08_method_ordering():
    spec = fixture_run(method="spectral")
    eco = fixture_run(method="economical")
    wasi = fixture_run(method="wasi")
    its = (spec.iterations, eco.iterations, wasi.iterations)
    ok = all(r.converged for r in (spec, eco, wasi)) and its[0] <= its[1] <= its[2] \
        and its[2] >= 2 * its[0]
    record(8, "method ordering", ok,
           f"spectral {its[0]} (dim {spec.coarse_dim}) <= economical {its[1]} "
           f"(mu {eco.resolved['mu']}, dim {eco.coarse_dim}) <= WASI {its[2]}")


def test_criterion_09_pure_problem():
    absorbing = fixture_run(method="spectral")
    pure = fixture_run(method="spectral", epsilon="zero")
    a, p = absorbing.iterations, pure.iterations
    ok = pure.converged and absorbing.converged and p <= 2 * a and a <= 2 * p
    record(9, "pure problem", ok, f"eps=0: {p} iterations, eps=kappa: {a} iterations")


def test_criterion_10_gmres_bound():
    details, ok = [], True
    for label, changes in (("calibrated rho", {}), ("rho 0.3", {"rho": 0.3})):
        rep = fixture_run(method="spectral", weighted=True, fov_samples=200, **changes)
        tau = rep.diagnostics["field_of_values"]["tau_estimate"]
        h = np.array(rep.history) / rep.history[0]
        m = np.arange(len(h))
        bound = 10 * (2 * np.sqrt(tau) / (1 + tau)) ** m
        holds = bool(np.all(h <= bound)) and tau < 1 and rep.converged
        ok &= holds
        details.append(f"{label}: tau {tau:.3g}, {rep.iterations} it, "
                       f"max ratio to bound {np.max(h / bound):.3g}")
    record(10, "GMRES bound", ok, "; ".join(details))


def test_criterion_11_norm_equivalence():
    rng = np.random.default_rng(11)
    brackets, sampled, inside = [], [], True
    for n in (2, 4, 8):
        mesh, dofmap = unit_mesh(n)
        _, M, _ = assemble_forms(dofmap, np.arange(mesh.n_cells), np.zeros(0, dtype=np.int64))
        # exact equivalence constants: extreme eigenvalues of (h diag(|e|^2), M)
        D = mesh.h * dofmap.edge_lengths ** 2
        lam = sla.eigh(np.diag(D), M.toarray(), eigvals_only=True)
        lo, hi = np.sqrt(lam[0]), np.sqrt(lam[-1])
        ratios = []
        for _ in range(100):
            v = random_complex(rng, dofmap.n_dofs)
            ratios.append(discrete_l2_norm(dofmap, v) / np.sqrt(np.vdot(v, M @ v).real))
        inside &= lo * (1 - 1e-12) <= min(ratios) and max(ratios) <= hi * (1 + 1e-12)
        brackets.append((lo, hi))
        sampled.append((min(ratios), max(ratios)))

    def move(values):
        return (max(values) - min(values)) / max(values)

    b = np.array(brackets)
    s = np.array(sampled)
    moves = (move(b[:, 0]), move(b[:, 1]))
    ok = inside and max(moves) < 0.2
    record(11, "norm equivalence", ok,
           "bracket " + ", ".join(f"n={n} [{lo:.3f}, {hi:.3f}]" for n, (lo, hi) in zip((2, 4, 8), b))
           + f"; endpoint moves {moves[0]:.1%}/{moves[1]:.1%}; sampled envelope moves "
           f"{move(s[:, 0]):.1%}/{move(s[:, 1]):.1%}")


@pytest.mark.slow
def test_criterion_12_discretization_validity():
    table = convergence_study(math.pi, [2, 4, 8, 16])
    e = table.errors
    ok = all(b < a for a, b in zip(e, e[1:])) and min(table.orders) >= 0.9
    record(12, "discretization validity", ok,
           "errors " + ", ".join(f"{x:.4g}" for x in e)
           + "; orders " + ", ".join(f"{o:.2f}" for o in table.orders))


def test_criterion_13_economical_counts():
    cfg = dataclasses.replace(FIXTURE, parts="3")
    n = cfg.mesh_n()
    mesh, dofmap, system, dec, pou, locals_ = decomposed(n, KAPPA, KAPPA, 3, 1)
    centre = 13  # the only subdomain away from the domain boundary
    lo, hi = dec.boxes[centre]
    assert np.all(lo > 0) and np.all(hi < n)
    eb = build_economical_basis(mesh, locals_[centre], StarMap.for_subdomain(dec, centre), 1, pou)
    iters = {mu: fixture_run(method="economical", mu=str(mu)).iterations for mu in (2, 3, 4)}
    ok = eb.n_candidates == 6 and eb.values.shape[1] == 6 and iters[4] <= iters[2] \
        and iters[3] <= iters[2]
    record(13, "economical counts", ok,
           f"mu=1 candidates {eb.n_candidates}, retained {eb.values.shape[1]}; iterations "
           + ", ".join(f"mu={mu}: {it}" for mu, it in iters.items()))
