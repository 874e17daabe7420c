"""Jacobian-free Newton-Krylov solver with sparse approximate preconditioners.

The nonlinear system R(u) = 0 is solved by inexact Newton iterations.  Each
linear system J du = -R is solved matrix-free: the Jacobian action is a
one-sided finite difference of the residual, and a sparse approximation of J
(assembled once per solve, since it does not depend on u) is factorised for
left preconditioning.

Two approximations are available:

* AJ: compact-stencil approximation coupling only face neighbours through
  K |Delta_f| / |d_PN| per face.  Cheap, mesh-adjacency sparsity.
* NEJ: near-exact Jacobian of the linear-elastic flux, assembled from the
  reconstruction gradient coefficients at every face quadrature point.  For
  a linear material with alpha = 0 it IS the Jacobian (stabilisation is
  deliberately excluded).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import splu, spilu

from .constitutive import ConstitutiveError
from .reconstruction import FACE_DISPLACEMENT, FACE_SYMMETRY
from .residual import DiscreteState, ResidualOperator

__all__ = [
    "SolverError",
    "SolverConfig",
    "IterationRecord",
    "SolveReport",
    "jvp",
    "gmres_solve",
    "assemble_aj",
    "assemble_nej",
    "build_preconditioner",
    "newton_solve",
    "solve_case",
    "time_march",
]


class SolverError(Exception):
    pass


@dataclass
class SolverConfig:
    newton_tol: float = 1e-6
    newton_max: int = 30
    gmres_restart: int = 60
    gmres_max: int = 1000
    gmres_tol: float = 1e-4
    gmres_tol_final: float = 1e-6
    preconditioner: str = "aj"  # aj | nej | none
    factorisation: str = "ilu"  # ilu | lu
    line_search_max: int = 8  # gamma down to 2^-line_search_max
    increments: int = 1
    jvp_eps: float | None = None  # override for the finite-difference scale

    def __post_init__(self):
        for name in ("newton_tol", "gmres_tol", "gmres_tol_final"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.gmres_restart < 1:
            raise ValueError("gmres_restart must be >= 1")
        if self.preconditioner not in ("aj", "nej", "none"):
            raise ValueError(f"unknown preconditioner '{self.preconditioner}'")
        if self.factorisation not in ("ilu", "lu"):
            raise ValueError(f"unknown factorisation '{self.factorisation}'")
        if self.increments < 1:
            raise ValueError("increments must be >= 1")


@dataclass
class IterationRecord:
    increment: int
    newton: int
    res_norm: float
    krylov: int
    gamma: float
    wall: float


@dataclass
class SolveReport:
    u: np.ndarray  # (Nc, 3)
    converged: bool
    message: str
    records: list[IterationRecord] = field(default_factory=list)
    increments_done: int = 0

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("increment,newton,res_norm,krylov,gamma,wall_s\n")
            for r in self.records:
                fh.write(
                    f"{r.increment},{r.newton},{r.res_norm:.16e},"
                    f"{r.krylov},{r.gamma:.6g},{r.wall:.6f}\n"
                )


# -- Jacobian action ---------------------------------------------------------
def jvp(residual_fn, u: np.ndarray, r0: np.ndarray, v: np.ndarray, eps: float | None = None) -> np.ndarray:
    """Forward-difference J v, reusing the residual r0 = R(u)."""
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        return np.zeros_like(v)
    scale = np.sqrt(np.finfo(float).eps) if eps is None else eps
    h = scale * (1.0 + np.linalg.norm(u)) / vnorm
    return (residual_fn(u + h * v) - r0) / h


# -- preconditioner assembly -------------------------------------------------
def assemble_aj(op: ResidualOperator) -> sp.csr_matrix:
    """Compact-stencil approximation of dR/du with mesh-adjacency sparsity.

    Internal face f: coefficient a_f = K |Delta_f| Gamma_f / |d_PN| with
    Delta_f = d_PN / (d_PN . n_f), i.e. a_f = K Gamma_f / |d_PN . n_f|; the
    owner row gains +a_f I on the diagonal and -a_f I on the neighbour
    column (and symmetrically).  Displacement faces add the diagonal
    analogue; symmetry faces couple the owner to its own mirror image,
    contributing a_f (I - R_b).
    """
    mesh, geom = op.mesh, op.geom
    dim, nc = mesh.dim, mesh.n_cells
    kbar = op.kbar
    eye = np.eye(dim)

    rows, cols, vals = [], [], []

    def add_block(ci: int, cj: int, block: np.ndarray) -> None:
        for i in range(dim):
            for j in range(dim):
                if block[i, j] != 0.0:
                    rows.append(ci * dim + i)
                    cols.append(cj * dim + j)
                    vals.append(block[i, j])

    internal = np.nonzero(mesh.neighbour >= 0)[0]
    d = geom.d_pn[internal]
    dn = np.einsum("ij,ij->i", d, geom.face_normal[internal])
    if np.any(np.abs(dn) < 1e-14 * np.linalg.norm(d, axis=1)):
        f = int(internal[np.argmin(np.abs(dn))])
        raise SolverError(f"face {f}: degenerate skewness, approximate Jacobian undefined")
    a = kbar * geom.face_area[internal] / np.abs(dn)
    for k, f in enumerate(internal):
        P, N = int(mesh.owner[f]), int(mesh.neighbour[f])
        add_block(P, P, a[k] * eye)
        add_block(P, N, -a[k] * eye)
        add_block(N, N, a[k] * eye)
        add_block(N, P, -a[k] * eye)

    disp = np.nonzero(op.face_kind == FACE_DISPLACEMENT)[0]
    d = geom.d_pf[disp]
    dn = np.abs(np.einsum("ij,ij->i", d, geom.face_normal[disp]))
    a = kbar * geom.face_area[disp] / dn
    for k, f in enumerate(disp):
        add_block(int(mesh.owner[f]), int(mesh.owner[f]), a[k] * eye)

    sym = np.nonzero(op.face_kind == FACE_SYMMETRY)[0]
    d = geom.d_pf[sym]
    dn = np.abs(np.einsum("ij,ij->i", d, geom.face_normal[sym]))
    # the mirror cell sits at twice the wall distance
    a = kbar * geom.face_area[sym] / (2.0 * dn)
    for k, f in enumerate(sym):
        n = geom.face_normal[f][:dim]
        R = np.eye(dim) - 2.0 * np.outer(n, n)
        add_block(int(mesh.owner[f]), int(mesh.owner[f]), a[k] * (eye - R))

    n = nc * dim
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_nej(op: ResidualOperator) -> sp.csr_matrix:
    """Jacobian of the linear-elastic surface term from the gradient operators.

    Per quadrature point q with unit normal n and per stencil member N with
    gradient coefficient vector c, the flux block is
    mu (c . n) I + mu (c x n) + lam (n x c), weighted by the point's share
    of the face area and scattered with the owner/neighbour signs.  Columns
    of mirrored members fold back onto their source cell through R_b; the
    stabilisation term is deliberately not represented.
    """
    if not op.material.is_linear:
        raise SolverError("near-exact Jacobian supports linear elasticity only")
    mesh = op.mesh
    dim, nc = mesh.dim, mesh.n_cells
    mu, lam = op.material.small_strain_moduli()
    recon = op.recon

    # the per-axis operators share one sparsity pattern by construction
    # (the z operator is empty in 2D and contributes nothing)
    g = [recon.face_grad[ax].tocsr() for ax in range(dim)]
    g0 = g[0]
    for other in g[1:]:
        if not (
            np.array_equal(g0.indptr, other.indptr)
            and np.array_equal(g0.indices, other.indices)
        ):
            raise SolverError("gradient operators lost their shared sparsity pattern")

    nq = g0.shape[0]
    counts = np.diff(g0.indptr)
    q_of = np.repeat(np.arange(nq), counts)  # quadrature point per entry
    member = g0.indices  # extended member column per entry
    c = np.zeros((len(member), 3))
    for ax in range(dim):
        c[:, ax] = g[ax].data

    n_q = op.n_q[q_of]  # unit normals
    w = op.qw_area[q_of]  # quadrature weight x face area
    host = op.q_host[q_of]

    cn = np.einsum("ej,ej->e", c, n_q)
    eye3 = np.eye(3)
    B = mu * cn[:, None, None] * eye3
    B += mu * np.einsum("ei,ej->eij", c, n_q)
    B += lam * np.einsum("ei,ej->eij", n_q, c)

    # fold mirror columns onto their source cells
    mirrored = member >= nc
    col_cell = member.copy()
    if np.any(mirrored):
        slot = member[mirrored] - nc
        col_cell[mirrored] = recon.mirror_src[slot]
        B[mirrored] = B[mirrored] @ recon.mirror_R[slot]

    B *= w[:, None, None]

    own = mesh.owner[host]
    nb = mesh.neighbour[host]
    has_nb = nb >= 0

    # R_P = -(surface), owner flux positive: owner rows get -B, neighbour +B
    row_cells = np.concatenate([own, nb[has_nb]])
    col_cells = np.concatenate([col_cell, col_cell[has_nb]])
    blocks = np.concatenate([-B, B[has_nb]], axis=0)

    e = len(row_cells)
    ii, jj = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    rows = (row_cells[:, None, None] * dim + ii).reshape(e * dim * dim)
    cols = (col_cells[:, None, None] * dim + jj).reshape(e * dim * dim)
    vals = blocks[:, :dim, :dim].reshape(e * dim * dim)

    n = nc * dim
    out = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    out.sum_duplicates()
    return out


class _Factorised:
    def __init__(self, matrix: sp.csr_matrix | None, factorisation: str):
        if matrix is None:
            self._solve = None
            return
        m = matrix.tocsc()
        if factorisation == "lu":
            self._solve = splu(m).solve
        else:
            self._solve = spilu(m, drop_tol=1e-5, fill_factor=10).solve

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return v if self._solve is None else self._solve(v)


def build_preconditioner(op: ResidualOperator, cfg: SolverConfig) -> _Factorised:
    if cfg.preconditioner == "none":
        return _Factorised(None, cfg.factorisation)
    matrix = assemble_aj(op) if cfg.preconditioner == "aj" else assemble_nej(op)
    return _Factorised(matrix, cfg.factorisation)


# -- restarted GMRES ---------------------------------------------------------
def gmres_solve(apply_op, apply_precond, b: np.ndarray, *, restart: int = 60,
                maxiter: int = 1000, rtol: float = 1e-4):
    """Left-preconditioned restarted GMRES.

    Returns (x, iterations, converged, history, stalled).  `history` holds
    the preconditioned residual estimates, non-increasing within each
    restart cycle.  A cycle whose recurrence estimate reaches the tolerance
    returns converged on that estimate: re-applying a finite-difference
    operator to the small correction would drown the check in cancellation
    noise.  A cycle that exhausts its space without reducing the residual
    sets the stall flag and returns early (the caller decides what to do).
    """
    n = len(b)
    x = np.zeros(n)
    b_pre = apply_precond(b)
    bnorm = np.linalg.norm(b_pre)
    history: list[float] = []
    if bnorm == 0.0:
        return x, 0, True, history, False

    total = 0
    prev_cycle: float | None = None
    while total < maxiter:
        r = apply_precond(b - apply_op(x))
        beta = float(np.linalg.norm(r))
        history.append(beta)
        if beta <= rtol * bnorm:
            return x, total, True, history, False
        if prev_cycle is not None and beta >= prev_cycle:
            return x, total, False, history, True
        prev_cycle = beta

        m = min(restart, maxiter - total)
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        gvec = np.zeros(m + 1)
        gvec[0] = beta
        V[0] = r / beta
        k_used = 0
        est_done = False
        for k in range(m):
            # copy: an operator may hand back its argument, and the in-place
            # orthogonalisation below must never touch the basis
            w = np.array(apply_precond(apply_op(V[k])), dtype=float)
            for i in range(k + 1):  # modified Gram-Schmidt
                H[i, k] = w @ V[i]
                w -= H[i, k] * V[i]
            hk1 = np.linalg.norm(w)
            H[k + 1, k] = hk1
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            denom = float(np.hypot(H[k, k], H[k + 1, k]))
            if denom == 0.0:
                break  # exact breakdown: solution already in the subspace
            cs[k] = H[k, k] / denom
            sn[k] = H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            gvec[k + 1] = -sn[k] * gvec[k]
            gvec[k] = cs[k] * gvec[k]
            total += 1
            k_used = k + 1
            history.append(abs(float(gvec[k + 1])))
            if abs(gvec[k + 1]) <= rtol * bnorm or hk1 == 0.0:
                est_done = True
                break
            if hk1 > 0.0:
                V[k + 1] = w / hk1
        if k_used:
            y = solve_triangular(H[:k_used, :k_used], gvec[:k_used])
            x = x + V[:k_used].T @ y
        if est_done:
            return x, total, True, history, False

    r = apply_precond(b - apply_op(x))
    beta = float(np.linalg.norm(r))
    history.append(beta)
    return x, total, beta <= rtol * bnorm, history, False


# -- Newton ------------------------------------------------------------------
def newton_solve(
    op: ResidualOperator,
    cfg: SolverConfig,
    *,
    load_factor: float = 1.0,
    u0: np.ndarray | None = None,
    state: DiscreteState | None = None,
    precond: _Factorised | None = None,
    increment: int = 1,
    records: list[IterationRecord] | None = None,
    load_scale: float | None = None,
) -> tuple[np.ndarray, bool, str]:
    """Inexact Newton with backtracking line search; returns (u, ok, message)."""
    u = np.zeros((op.mesh.n_cells, 3)) if u0 is None else u0.copy()
    if precond is None:
        precond = build_preconditioner(op, cfg)
    if records is None:
        records = []

    def residual_packed(x: np.ndarray) -> np.ndarray:
        return op.pack(op.residual(op.unpack(x), load_factor, state))

    x = op.pack(u)
    try:
        r = residual_packed(x)
    except ConstitutiveError as e:
        return op.unpack(x), False, f"infeasible starting point: {e}"
    r0_norm = float(np.linalg.norm(r))
    scale = r0_norm if load_scale is None else load_scale
    atol = 1e-14 * scale
    if r0_norm == 0.0 or r0_norm <= atol:
        return op.unpack(x), True, "zero residual at start"

    t_start = time.perf_counter()
    rnorm = r0_norm
    for it in range(1, cfg.newton_max + 1):
        eta = cfg.gmres_tol
        if rnorm <= 100.0 * cfg.newton_tol * r0_norm:
            eta = cfg.gmres_tol_final  # tighten near the solution

        apply_j = lambda v: jvp(residual_packed, x, r, v, eps=cfg.jvp_eps)
        dx, inner, ok, _, stalled = gmres_solve(
            apply_j, precond, -r,
            restart=cfg.gmres_restart, maxiter=cfg.gmres_max, rtol=eta,
        )
        if stalled:
            dx, inner2, ok, _, stalled = gmres_solve(
                apply_j, precond, -r,
                restart=cfg.gmres_restart, maxiter=cfg.gmres_max, rtol=0.5 * eta,
            )
            inner += inner2
            if stalled:
                records.append(IterationRecord(
                    increment, it, rnorm, inner, 0.0, time.perf_counter() - t_start))
                return op.unpack(x), False, (
                    f"linear solver stalled twice at Newton iteration {it} "
                    f"(residual {rnorm:.3e})"
                )

        gamma = 1.0
        accepted = False
        for _ in range(cfg.line_search_max + 1):
            x_try = x + gamma * dx
            try:
                r_try = residual_packed(x_try)
            except ConstitutiveError:
                # trial step inverted an element: reject it like any other
                # failed sufficient-decrease check and shorten the step
                gamma *= 0.5
                continue
            rn_try = float(np.linalg.norm(r_try))
            if rn_try <= (1.0 - 1e-4 * gamma) * rnorm:
                accepted = True
                break
            gamma *= 0.5
        if not accepted:
            records.append(IterationRecord(
                increment, it, rnorm, inner, 0.0, time.perf_counter() - t_start))
            return op.unpack(x), False, (
                f"line search exhausted at Newton iteration {it} "
                f"(residual {rnorm:.3e})"
            )

        x, r, rnorm = x_try, r_try, rn_try
        records.append(IterationRecord(
            increment, it, rnorm, inner, gamma, time.perf_counter() - t_start))
        if rnorm <= cfg.newton_tol * r0_norm or rnorm <= atol:
            return op.unpack(x), True, f"converged in {it} Newton iterations"

    return op.unpack(x), False, (
        f"no convergence in {cfg.newton_max} Newton iterations "
        f"(residual ratio {rnorm / r0_norm:.3e})"
    )


def solve_case(op: ResidualOperator, cfg: SolverConfig) -> SolveReport:
    """Static solve with proportional load stepping and warm starts."""
    if op.config.dynamic:
        raise SolverError("solve_case is static; use time_march for dynamics")
    precond = build_preconditioner(op, cfg)
    records: list[IterationRecord] = []
    u = np.zeros((op.mesh.n_cells, 3))
    # residual of the undeformed state under full load sets the force scale;
    # if that state is already infeasible (ghost values invert elements),
    # each increment falls back to its own starting residual
    try:
        load_scale = float(np.linalg.norm(op.pack(op.residual(u, 1.0))))
    except ConstitutiveError:
        load_scale = None

    for i in range(1, cfg.increments + 1):
        lam = i / cfg.increments
        u, ok, msg = newton_solve(
            op, cfg, load_factor=lam, u0=u, precond=precond,
            increment=i, records=records, load_scale=load_scale,
        )
        if not ok:
            return SolveReport(
                u=u, converged=False,
                message=f"increment {i}/{cfg.increments} (load {lam:.3g}): {msg}",
                records=records, increments_done=i - 1,
            )
    return SolveReport(
        u=u, converged=True,
        message=f"{cfg.increments} increment(s) converged",
        records=records, increments_done=cfg.increments,
    )


def time_march(
    op: ResidualOperator,
    cfg: SolverConfig,
    *,
    dt: float,
    n_steps: int,
    u0: np.ndarray | None = None,
    v0: np.ndarray | None = None,
) -> SolveReport:
    """BDF2 time stepping at constant load; loads are held, not ramped.

    The missing pre-initial level is reconstructed as u(-dt) = u0 - dt v0,
    which makes the first step exact for constant-velocity motion.
    """
    if not op.config.dynamic:
        raise SolverError("time_march needs a dynamic residual configuration")
    if dt <= 0.0 or n_steps < 1:
        raise SolverError("time_march needs dt > 0 and n_steps >= 1")
    nc = op.mesh.n_cells
    u = np.zeros((nc, 3)) if u0 is None else u0.copy()
    v = np.zeros((nc, 3)) if v0 is None else v0.copy()
    state = DiscreteState(
        u_old=u.copy(), u_oldold=u - dt * v, v_old=v.copy(), v_oldold=v.copy(), dt=dt
    )
    precond = build_preconditioner(op, cfg)
    records: list[IterationRecord] = []
    load_scale = float(np.linalg.norm(op.pack(op.residual(u, 1.0, state)))) or None

    for step in range(1, n_steps + 1):
        u_new, ok, msg = newton_solve(
            op, cfg, load_factor=1.0, u0=u, state=state, precond=precond,
            increment=step, records=records, load_scale=load_scale,
        )
        if not ok:
            return SolveReport(
                u=u_new, converged=False,
                message=f"time step {step}/{n_steps}: {msg}",
                records=records, increments_done=step - 1,
            )
        v_new = state.velocity(u_new)
        state = DiscreteState(
            u_old=u_new, u_oldold=state.u_old,
            v_old=v_new, v_oldold=state.v_old, dt=dt,
        )
        u = u_new
    return SolveReport(
        u=u, converged=True,
        message=f"{n_steps} time step(s) completed",
        records=records, increments_done=n_steps,
    )
