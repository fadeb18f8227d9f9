"""Experiment driver: build, precondition, solve, report."""
from __future__ import annotations

import contextlib
import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .cases import ZeroCase, dipole_case, manufactured_case
from .coarse_economical import StarMap, build_economical_basis, mu_rule
from .coarse_spectral import (
    assemble_coarse_columns,
    build_geneo_pencil,
    calibrate_C0,
    choose_rho,
    dump_spectra,
    local_coarse_block,
    solve_pencil,
)
from .config import ExperimentConfig
from .decomposition import build_decomposition, build_pou, overlap_layers_for
from .errors import ConfigurationError, MaxwellSchwarzError
from .linalg import Factorization, gmres, hermitian_gen_eig
from .local_problems import assemble_all_local, build_harmonic_basis
from .mesh import build_box_mesh, write_vtk
from .nedelec import (
    EdgeDofMap,
    ProblemParams,
    assemble_system,
    export_matrix_market,
    imp_norm,
    interpolate_field,
)
from .preconditioner import SchwarzPreconditioner, build_grid_coarse, field_of_values_diagnostics

log = logging.getLogger(__name__)

UNIT_CUBE = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
TABLE_COLUMNS = (
    "kappa", "beta", "method", "overlap", "iters", "coarse_dim", "max_local_dofs",
    "error_imp", "wall_time",
)
MODE_OF_METHOD = {
    "wasi": "one-level",
    "spectral": "hybrid-spectral",
    "economical": "hybrid-economical",
    "grid": "hybrid-grid",
}


@dataclass
class RunReport:
    iterations: int
    converged: bool
    coarse_dim: int
    max_local_dofs: int
    max_interface_dofs: int
    history: list
    error_imp: float | None
    timings: dict
    config: dict
    resolved: dict
    decomposition: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    n_dofs: int = 0
    backend: str = kernels.BACKEND
    solution: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("solution")
        return d

    def table_row(self) -> dict:
        return {
            "kappa": self.config["kappa"],
            "beta": self.config["beta"],
            "method": self.config["method"],
            "overlap": self.config["overlap"],
            "iters": self.iterations,
            "coarse_dim": self.coarse_dim,
            "max_local_dofs": self.max_local_dofs,
            "error_imp": "" if self.error_imp is None else self.error_imp,
            "wall_time": self.timings.get("total", 0.0),
        }


class _Timer:
    def __init__(self):
        self.times = {}

    @contextlib.contextmanager
    def phase(self, name):
        t = time.perf_counter()
        try:
            yield
        finally:
            self.times[name] = self.times.get(name, 0.0) + time.perf_counter() - t


def _build_case(cfg: ExperimentConfig, mesh):
    if cfg.case == "manufactured":
        return manufactured_case(cfg.kappa, cfg.epsilon_value())
    return dipole_case(cfg.kappa, x0=cfg.dipole_x0).fit_to_mesh(mesh)


def _local_spectra(locals_, harmonics, pou):
    out = []
    for loc, harm in zip(locals_, harmonics):
        if harm.m == 0:
            out.append(np.zeros(0))
            continue
        L, R = build_geneo_pencil(loc, harm, pou.local(loc.l, loc.dofs))
        out.append(hermitian_gen_eig(L, R)[0])
    return out


def calibrate_spectral_C0(cfg: ExperimentConfig) -> float:
    """C0 that keeps ``calibrate_fraction`` of all pencil modes at ``calibrate_kappa``.

    The calibration problem uses the same rules as ``cfg`` at the calibration wave number.
    """
    cal = dataclasses.replace(cfg, kappa=cfg.calibrate_kappa)
    mesh = build_box_mesh(UNIT_CUBE, cal.mesh_n())
    dofmap = EdgeDofMap(mesh)
    params = ProblemParams(cal.kappa, cal.epsilon_value())
    if cal.case == "dipole":
        params = assemble_system(mesh, dofmap, params, _build_case(cal, mesh)).params
    parts = cal.parts_value()
    dec = build_decomposition(mesh, parts, overlap_layers_for(mesh.n, parts, cal.overlap))
    pou = build_pou(dec)
    locals_ = assemble_all_local(mesh, dofmap, dec, params)
    spectra = []
    for loc in locals_:
        if loc.m == 0:
            continue
        harm = build_harmonic_basis(loc)
        spectra.extend(_local_spectra([loc], [harm], pou))
    return calibrate_C0(spectra, cal.kappa, cal.alpha_value(), cal.beta, cal.gamma, cal.calibrate_fraction)


def resolve_rho(cfg: ExperimentConfig) -> tuple[float, float | None]:
    """``(rho, C0)`` for the spectral method."""
    if cfg.rho is not None:
        return float(cfg.rho), cfg.C0
    if cfg.C0 is not None:
        C0 = float(cfg.C0)
    elif cfg.calibrate_fraction is not None:
        C0 = calibrate_spectral_C0(cfg)
    else:
        C0 = 1.0
    return choose_rho(cfg.kappa, cfg.alpha_value(), cfg.beta, cfg.gamma, C0), C0


def build_coarse(cfg, mesh, dofmap, dec, pou, locals_, A, out_dir=None, resolved=None):
    """Coarse space for the configured method (None for one-level methods)."""
    resolved = {} if resolved is None else resolved
    if cfg.method == "spectral":
        rho, C0 = resolve_rho(cfg)
        resolved.update(rho=rho, C0=C0, sigma=2 - (cfg.alpha_value() + cfg.beta) + cfg.gamma / 2)
        blocks, owners, selections, summary = [], [], [], []
        for loc in locals_:
            if loc.m == 0:
                selections.append(None)
                continue
            harm = build_harmonic_basis(loc)
            sel = solve_pencil(loc, harm, pou.local(loc.l, loc.dofs), rho)
            blocks.append((loc.dofs, local_coarse_block(loc, harm, sel, pou)))
            owners.append([(loc.l, int(i)) for i in sel.selected])
            summary.append({"l": loc.l, "m": loc.m, "selected": sel.n_selected,
                            "lambda_max": float(sel.eigenvalues.max())})
            # eigenvectors are no longer needed once the block exists
            selections.append(dataclasses.replace(sel, eigenvectors=None))
        resolved["spectra"] = summary
        if cfg.dump_spectra and out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            dump_spectra(selections, Path(out_dir) / "spectra.csv")
        return assemble_coarse_columns(blocks, A.shape[0], A, owners)
    if cfg.method == "economical":
        mu = mu_rule(cfg.kappa, cfg.beta) if str(cfg.mu) == "rule" else int(cfg.mu)
        resolved["mu"] = mu
        blocks = []
        for loc in locals_:
            eb = build_economical_basis(mesh, loc, StarMap.for_subdomain(dec, loc.l), mu, pou)
            blocks.append((loc.dofs, eb.values))
        return assemble_coarse_columns(blocks, A.shape[0], A)
    if cfg.method == "grid":
        return build_grid_coarse(mesh, dofmap, dec, A)
    return None


def run_experiment(cfg: ExperimentConfig, out_dir=None, keep_solution=False, case=None) -> RunReport:
    """Mesh, assemble, decompose, build the preconditioner and run GMRES from zero.

    ``case`` overrides the configured source (used for zero-data checks).
    """
    timer = _Timer()
    t0 = time.perf_counter()
    kappa = cfg.kappa
    eps = cfg.epsilon_value()
    n = cfg.mesh_n()
    parts = cfg.parts_value()
    with timer.phase("mesh"):
        mesh = build_box_mesh(UNIT_CUBE, n)
        dofmap = EdgeDofMap(mesh)
    if case is None:
        case = _build_case(cfg, mesh)
    with timer.phase("assembly"):
        system = assemble_system(mesh, dofmap, ProblemParams(kappa, eps), case)
    A = system.A
    resolved = {"n": n, "h": mesh.h, "parts": parts, "epsilon": eps, "alpha": cfg.alpha_value(),
                "n_dofs": dofmap.n_dofs}
    if cfg.case == "dipole" and case is not None and hasattr(case, "snaps"):
        resolved["layer_snaps"] = case.snaps
        resolved["dipole_shift"] = None if case.shift is None else case.shift.tolist()
    dec_summary = None
    coarse_dim = 0
    max_local = dofmap.n_dofs
    max_m = 0
    if cfg.method == "none":
        precond = None
    else:
        layers = overlap_layers_for(n, parts, cfg.overlap)
        resolved["overlap_layers"] = layers
        with timer.phase("decomposition"):
            dec = build_decomposition(mesh, parts, layers)
            pou = build_pou(dec)
        with timer.phase("local"):
            locals_ = assemble_all_local(mesh, dofmap, dec, system.params)
        dec_summary = dec.summary()
        dec_summary["local_dofs"] = [int(loc.n_dofs) for loc in locals_]
        dec_summary["interface_dofs"] = [int(loc.m) for loc in locals_]
        max_local = max(dec_summary["local_dofs"])
        max_m = max(dec_summary["interface_dofs"])
        with timer.phase("coarse"):
            coarse = build_coarse(cfg, mesh, dofmap, dec, pou, locals_, A, out_dir, resolved)
        precond = SchwarzPreconditioner(
            A, locals_, pou, coarse, MODE_OF_METHOD[cfg.method] if coarse is not None else "one-level"
        )
        coarse_dim = precond.coarse_dim
    with timer.phase("gmres"):
        result = gmres(
            lambda v: A @ v, system.rhs, tol=cfg.tol, maxit=cfg.maxit,
            weight=system.S_imp if cfg.weighted else None, preconditioner=precond,
        )
    diagnostics = {}
    if cfg.fov_samples > 0 and precond is not None:
        with timer.phase("diagnostics"):
            fov = field_of_values_diagnostics(precond, A, system.S_imp, cfg.fov_samples, cfg.seed)
        diagnostics["field_of_values"] = dataclasses.asdict(fov)
    error = None
    if cfg.case == "manufactured" and hasattr(case, "exact"):
        ref = interpolate_field(mesh, dofmap, case.exact)
        denom = imp_norm(system.S_imp, ref)
        diff = imp_norm(system.S_imp, result.x - ref)
        error = float(diff / denom) if denom > 0 else float(diff)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.write_vtk:
            cells_val = dofmap.evaluate(result.x, mesh.cell_centroids())
            write_vtk(mesh, out / "solution.vtk", cell_data={"E": cells_val})
        if cfg.dump_matrices:
            export_matrix_market(system, out)
    timer.times["total"] = time.perf_counter() - t0
    return RunReport(
        iterations=result.iterations,
        converged=bool(result.converged),
        coarse_dim=int(coarse_dim),
        max_local_dofs=int(max_local),
        max_interface_dofs=int(max_m),
        history=[float(h) for h in result.history],
        error_imp=error,
        timings=timer.times,
        config=cfg.to_dict(),
        resolved=resolved,
        decomposition=dec_summary,
        diagnostics=diagnostics,
        n_dofs=dofmap.n_dofs,
        solution=result.x if keep_solution else None,
    )


def write_table(rows, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(TABLE_COLUMNS) + ["status"])
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in list(TABLE_COLUMNS) + ["status"]})


def sweep(configs, out_dir=None) -> list[dict]:
    """Run every config in order; failures become rows with an error status."""
    configs = list(configs)
    if not configs:
        raise ConfigurationError("empty sweep")
    rows, reports = [], []
    for cfg in configs:
        try:
            rep = run_experiment(cfg)
            row = rep.table_row()
            row["status"] = "converged" if rep.converged else "not-converged"
            reports.append(rep.to_dict())
        except MaxwellSchwarzError as exc:
            log.error("sweep row failed: %s", exc)
            row = {"kappa": cfg.kappa, "beta": cfg.beta, "method": cfg.method,
                   "overlap": cfg.overlap, "status": f"error: {exc}"}
            reports.append({"config": cfg.to_dict(), "error": str(exc)})
        rows.append(row)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_table(rows, out / "table.csv")
        (out / "report.json").write_text(json.dumps({"rows": rows, "reports": reports}, indent=2))
    return rows


@dataclass
class ConvergenceTable:
    kappa: float
    n: list
    h: list
    errors: list
    orders: list

    def to_dict(self):
        return dataclasses.asdict(self)


def _solve(system, dofmap, mesh, direct_limit):
    if dofmap.n_dofs <= direct_limit:
        return Factorization(system.A.tocsc()).solve(system.rhs)
    # larger meshes: one-level Schwarz GMRES driven far below discretization error
    parts = 2 if mesh.n % 2 == 0 else 1
    dec = build_decomposition(mesh, parts, max(1, mesh.n // 8))
    locals_ = assemble_all_local(mesh, dofmap, dec, system.params)
    precond = SchwarzPreconditioner(system.A, locals_, build_pou(dec))
    res = gmres(lambda v: system.A @ v, system.rhs, tol=1e-11, maxit=2000, preconditioner=precond)
    return res.x


def convergence_study(kappa, refinements, epsilon=None, zero_data=False,
                      direct_limit=15000) -> ConvergenceTable:
    """Relative imp-norm error against the edge interpolant on each grid ``n`` in ``refinements``."""
    refinements = [int(r) for r in refinements]
    if len(refinements) < 2:
        raise ConfigurationError("a convergence study needs at least two meshes")
    eps = kappa if epsilon is None else epsilon
    errors, hs = [], []
    for n in refinements:
        mesh = build_box_mesh(UNIT_CUBE, n)
        dofmap = EdgeDofMap(mesh)
        case = ZeroCase() if zero_data else manufactured_case(kappa, eps)
        system = assemble_system(mesh, dofmap, ProblemParams(kappa, eps), case)
        x = _solve(system, dofmap, mesh, direct_limit)
        ref = interpolate_field(mesh, dofmap, case.exact)
        denom = imp_norm(system.S_imp, ref)
        diff = imp_norm(system.S_imp, x - ref)
        errors.append(float(diff / denom) if denom > 0 else float(diff))
        hs.append(float(mesh.h))
    orders = []
    for i in range(1, len(errors)):
        if errors[i] > 0 and errors[i - 1] > 0:
            orders.append(math.log(errors[i - 1] / errors[i]) / math.log(hs[i - 1] / hs[i]))
        else:
            orders.append(float("nan"))
    return ConvergenceTable(float(kappa), refinements, hs, errors, orders)
