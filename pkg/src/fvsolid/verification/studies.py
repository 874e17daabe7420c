"""Study drivers: convergence, stabilisation sweep, and stencil conditioning.

A study runs the solver over a (p, mesh) grid, tabulates error norms, and
fits observed orders.  A run that fails to converge is recorded as a gap
in the tables, never as an abort: nonconvergence is itself a result here.
Independent runs may be dispatched to a thread pool; all report assembly
happens on the calling thread.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..mesh import Mesh, build_geometry
from ..reconstruction import ReconstructionError
from ..residual import ResidualConfig, ResidualOperator
from ..solver import SolverConfig, solve_case
from .cases import BenchmarkCase
from .norms import NormRow, average_spacing, error_norms, least_squares_order, observed_orders

__all__ = [
    "LevelResult",
    "StudyResult",
    "AlphaResult",
    "AlphaStudyResult",
    "ConditioningRow",
    "ConditioningResult",
    "RECOMMENDED_ALPHA",
    "run_level",
    "convergence_study",
    "alpha_study",
    "conditioning_study",
    "write_convergence_csv",
    "write_convergence_dat",
    "write_conditioning_csv",
]

# The stabilisation sweep consistently shows this value as the best
# robustness/cost compromise; studies report it as the default.
RECOMMENDED_ALPHA = 0.1


@dataclass(frozen=True)
class LevelResult:
    """Outcome of one (p, mesh) solve."""

    case: str
    p: int
    level: int
    h: float
    n_cells: int
    norms: NormRow | None  # None when the solve did not converge
    converged: bool
    message: str
    newton_iters: int  # worst increment
    reduction: float  # final residual over initial, full load
    krylov: int
    wall: float
    res_history: tuple[float, ...] = ()  # (r0, r1, ...) for single-increment runs

    @property
    def stalled(self) -> bool:
        return "stalled" in self.message

    def six_order_within(self, iterations: int = 2) -> bool:
        """True if the residual dropped six orders in that many Newton steps."""
        r = self.res_history
        if len(r) < 2 or r[0] <= 0.0:
            return False
        return min(r[1 : iterations + 1]) <= 1e-6 * r[0]


def run_level(
    case: BenchmarkCase,
    p: int,
    mesh: Mesh,
    *,
    level: int = 0,
    alpha: float = 0.1,
    stabilisation: str = "alpha",
    n_plus: int | None = None,
    solver: SolverConfig | None = None,
) -> LevelResult:
    """Solve one case on one mesh and measure errors against the exact fields."""
    cfg = solver if solver is not None else case.solver
    rcfg = ResidualConfig(p=p, alpha=alpha, stabilisation=stabilisation, n_plus=n_plus)
    geom = build_geometry(mesh)
    h = average_spacing(geom, mesh.dim)
    t0 = time.perf_counter()
    try:
        op = ResidualOperator(mesh, geom, case.material, case.boundary, rcfg)
        r0 = float(np.linalg.norm(op.residual(np.zeros((mesh.n_cells, 3)), 1.0)))
        report = solve_case(op, cfg)
    except ReconstructionError as e:
        return LevelResult(
            case.name, p, level, h, mesh.n_cells, None, False, str(e), 0,
            float("nan"), 0, time.perf_counter() - t0,
        )
    wall = time.perf_counter() - t0

    newton_iters = max((r.newton for r in report.records), default=0)
    krylov = sum(r.krylov for r in report.records)
    last_inc = max((q.increment for q in report.records), default=1)
    final = [r for r in report.records if r.increment == last_inc]
    reduction = final[-1].res_norm / r0 if final and r0 > 0.0 else float("nan")
    history = (r0, *(r.res_norm for r in final)) if cfg.increments == 1 else ()

    norms = None
    if report.converged:
        sigma = op.cell_cauchy_stress(report.u)
        norms = error_norms(
            report.u, sigma, geom.cell_centroid, case.fields, h=h
        )
    return LevelResult(
        case.name, p, level, h, mesh.n_cells, norms, report.converged,
        report.message, newton_iters, reduction, krylov, wall, history,
    )


@dataclass(frozen=True)
class StudyResult:
    """Convergence table for one case over a (p, level) grid."""

    case: str
    ps: tuple[int, ...]
    results: tuple[LevelResult, ...]  # ordered by (p, level)

    def rows(self, p: int) -> list[LevelResult]:
        return [r for r in self.results if r.p == p]

    def _errors(self, p: int, attr: str) -> tuple[np.ndarray, np.ndarray]:
        rows = self.rows(p)
        h = np.array([r.h for r in rows])
        e = np.array(
            [getattr(r.norms, attr) if r.norms is not None else np.nan for r in rows]
        )
        return h, e

    def orders(self, p: int, attr: str) -> np.ndarray:
        """Pairwise observed orders of one error column; nan across gaps."""
        h, e = self._errors(p, attr)
        return observed_orders(h, e)

    def final_order(self, p: int, attr: str) -> float:
        orders = self.orders(p, attr)
        return float(orders[-1]) if len(orders) else float("nan")

    def slope_order(self, p: int, attr: str) -> float:
        h, e = self._errors(p, attr)
        return least_squares_order(h, e)

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.results)


def _run_grid(
    case: BenchmarkCase,
    ps: Sequence[int],
    meshes: Sequence[Mesh],
    *,
    threads: int,
    **kw,
) -> list[LevelResult]:
    jobs = [(p, lvl) for p in ps for lvl in range(len(meshes))]
    if threads <= 1:
        out = [
            run_level(case, p, meshes[lvl], level=lvl, **kw) for p, lvl in jobs
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(run_level, case, p, meshes[lvl], level=lvl, **kw)
                for p, lvl in jobs
            ]
            out = [f.result() for f in futures]
    return out


def _build_meshes(case: BenchmarkCase, min_levels: int = 3) -> list[Mesh]:
    if len(case.mesh_builders) < min_levels:
        raise ValueError(
            f"case '{case.name}' supplies {len(case.mesh_builders)} meshes; "
            f"a study needs at least {min_levels}"
        )
    meshes = [build() for build in case.mesh_builders]
    geoms = [build_geometry(m) for m in meshes]
    hs = [average_spacing(g, m.dim) for g, m in zip(geoms, meshes)]
    for coarse, fine in zip(hs, hs[1:]):
        if not fine < coarse:
            raise ValueError(
                f"case '{case.name}': mesh sequence must refine strictly "
                f"(spacing {coarse:.4g} then {fine:.4g})"
            )
    return meshes


def convergence_study(
    case: BenchmarkCase,
    ps: Sequence[int] = (1, 2, 3),
    *,
    alpha: float = 0.1,
    stabilisation: str = "alpha",
    n_plus: int | None = None,
    solver: SolverConfig | None = None,
    threads: int = 1,
    out_dir: str | Path | None = None,
) -> StudyResult:
    """Run the (p, mesh) grid of a case and tabulate errors and orders."""
    meshes = _build_meshes(case)
    results = _run_grid(
        case, ps, meshes, threads=threads,
        alpha=alpha, stabilisation=stabilisation, n_plus=n_plus, solver=solver,
    )
    study = StudyResult(case.name, tuple(ps), tuple(results))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_convergence_csv(study, out / f"{case.name}_convergence.csv")
        write_convergence_dat(study, out / f"{case.name}_convergence.dat")
    return study


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    study: StudyResult
    wall: float  # summed solve walls, fair under threading

    @property
    def converged_everywhere(self) -> bool:
        return self.study.all_converged


@dataclass(frozen=True)
class AlphaStudyResult:
    case: str
    p: int
    entries: tuple[AlphaResult, ...]
    recommended_alpha: float = RECOMMENDED_ALPHA

    def entry(self, alpha: float) -> AlphaResult:
        for e in self.entries:
            if e.alpha == alpha:
                return e
        raise KeyError(f"no study entry for alpha={alpha}")

    @property
    def nonconvergent_alphas(self) -> list[float]:
        return [e.alpha for e in self.entries if not e.converged_everywhere]


def alpha_study(
    case: BenchmarkCase,
    alphas: Sequence[float] = (0.001, 0.01, 0.1, 1.0),
    *,
    p: int = 2,
    threads: int = 1,
    out_dir: str | Path | None = None,
) -> AlphaStudyResult:
    """Sweep the stabilisation factor over the case's mesh sequence."""
    meshes = _build_meshes(case)
    entries = []
    for a in alphas:
        results = _run_grid(case, [p], meshes, threads=threads, alpha=a)
        study = StudyResult(case.name, (p,), tuple(results))
        entries.append(AlphaResult(a, study, sum(r.wall for r in results)))
    out = AlphaStudyResult(case.name, p, tuple(entries))
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        for e in out.entries:
            tag = f"{case.name}_alpha{e.alpha:g}"
            write_convergence_csv(e.study, path / f"{tag}_convergence.csv")
            write_convergence_dat(e.study, path / f"{tag}_convergence.dat")
    return out


@dataclass(frozen=True)
class ConditioningRow:
    case: str
    p: int
    n_plus: int
    n_cells: int
    converged: bool
    stalled: bool
    boundary_cond_max: float
    interior_cond_median: float
    message: str


@dataclass(frozen=True)
class ConditioningResult:
    rows: tuple[ConditioningRow, ...]

    def row(self, n_plus: int) -> ConditioningRow:
        for r in self.rows:
            if r.n_plus == n_plus:
                return r
        raise KeyError(f"no conditioning row for n_plus={n_plus}")


def conditioning_study(
    case: BenchmarkCase,
    *,
    p: int = 3,
    n_plus_values: Sequence[int] = (10, 20),
    level: int = -1,
    alpha: float = 0.1,
    solver: SolverConfig | None = None,
    out_dir: str | Path | None = None,
) -> ConditioningResult:
    """Probe stencil-size sensitivity of the reconstruction conditioning.

    Runs one mesh level at several stencil surpluses and records, per
    n_plus, the solve outcome together with condition estimates split
    into boundary-adjacent and interior cells.
    """
    mesh = case.mesh_builders[level]()
    geom = build_geometry(mesh)
    boundary_cells = np.unique(mesh.owner[mesh.neighbour < 0])
    interior_mask = np.ones(mesh.n_cells, dtype=bool)
    interior_mask[boundary_cells] = False

    rows = []
    for n_plus in n_plus_values:
        rcfg = ResidualConfig(p=p, alpha=alpha, n_plus=n_plus)
        try:
            op = ResidualOperator(mesh, geom, case.material, case.boundary, rcfg)
            cond = op.recon.cell_cond
            report = solve_case(op, solver if solver is not None else case.solver)
            converged, message = report.converged, report.message
        except ReconstructionError as e:
            cond = np.full(mesh.n_cells, np.nan)
            converged, message = False, str(e)
        rows.append(
            ConditioningRow(
                case.name,
                p,
                n_plus,
                mesh.n_cells,
                converged,
                "stalled" in message,
                float(np.nanmax(cond[boundary_cells])),
                float(np.nanmedian(cond[interior_mask])),
                message,
            )
        )
    result = ConditioningResult(tuple(rows))
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        write_conditioning_csv(result, path / f"{case.name}_conditioning.csv")
    return result


# -- artifact emission --------------------------------------------------------
def _fmt(x: float) -> str:
    """Fixed-width scientific form; empty cell for unavailable values."""
    return "" if not np.isfinite(x) else f"{x:.12e}"


def write_convergence_csv(study: StudyResult, path: str | Path) -> None:
    lines = ["case,p,h,N_c,L2_u,Linf_u,L2_s,Linf_s,order_u,order_s"]
    for p in study.ps:
        rows = study.rows(p)
        order_u = study.orders(p, "l2_u")
        order_s = study.orders(p, "l2_s")
        for i, r in enumerate(rows):
            n = r.norms
            lines.append(
                ",".join(
                    [
                        study.case,
                        str(p),
                        _fmt(r.h),
                        str(r.n_cells),
                        _fmt(n.l2_u) if n else "",
                        _fmt(n.linf_u) if n else "",
                        _fmt(n.l2_s) if n else "",
                        _fmt(n.linf_s) if n else "",
                        _fmt(order_u[i - 1]) if i > 0 else "",
                        _fmt(order_s[i - 1]) if i > 0 else "",
                    ]
                )
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_convergence_dat(study: StudyResult, path: str | Path) -> None:
    """Gnuplot mirror: one indexed block per p, log-log ready columns."""
    blocks = []
    for p in study.ps:
        lines = [f"# {study.case} p={p}", "# h L2_u Linf_u L2_s Linf_s"]
        for r in study.rows(p):
            n = r.norms
            if n is None:
                continue
            lines.append(
                f"{r.h:.12e} {n.l2_u:.12e} {n.linf_u:.12e} "
                f"{n.l2_s:.12e} {n.linf_s:.12e}"
            )
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n\n".join(blocks) + "\n")


def write_conditioning_csv(result: ConditioningResult, path: str | Path) -> None:
    lines = [
        "case,p,n_plus,N_c,converged,stalled,boundary_cond_max,interior_cond_median,message"
    ]
    for r in result.rows:
        msg = r.message.replace(",", ";")
        lines.append(
            f"{r.case},{r.p},{r.n_plus},{r.n_cells},{int(r.converged)},"
            f"{int(r.stalled)},{_fmt(r.boundary_cond_max)},"
            f"{_fmt(r.interior_cond_median)},{msg}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
