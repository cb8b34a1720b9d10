"""Cone-constrained damped Newton and homotopy continuation in t.

The path starts at t = 0, where the equation collapses to

    (2n-2)/(n-2) lap(u) + (n-1) |grad u|^2 + 1 = e^{2u}

with the closed-form unique solution u = 0, and walks t up to 1 with a
zeroth-order predictor (reuse the previous u) and a damped Newton corrector.
Every accepted state keeps the curvature tensor strictly inside the case's
cone; the line search enforces that together with an Armijo-type residual
decrease, so a path either reaches t = 1 admissibly or fails loudly with the
partial trace attached.

Case C has no homotopy family: it gets a direct damped Newton solve from the
initial guess, labeled experimental (the estimates exist; an existence proof
does not).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator as ScipyOperator
from scipy.sparse.linalg import bicgstab, gmres

from .curvature import ProblemSpec
from .errors import (
    AdmissibilityError,
    ConeExitError,
    DomainError,
    LinearSolveError,
    NonConvergenceError,
    PathFailureError,
)
from .grid import ScalarField, hess
from .operators import (
    EllipticityReport,
    LinearOperator,
    StateData,
    ellipticity_certificate,
    linearize,
    prepare_state,
    residual,
)

# Largest linear system the dense fallback will take on (Newton matrix as a
# full array); beyond it an iterative failure is terminal.
DENSE_FALLBACK_SIZE = 4096

# Relative tolerance asked of the iterative solvers, and the looser guard the
# returned vector must actually meet (checked against the true residual).
LINEAR_RTOL = 1e-10
LINEAR_GUARD = 1e-8


@dataclass(frozen=True)
class Schedule:
    """Continuation and corrector knobs, with the library defaults."""

    dt_init: float = 0.1
    dt_max: float = 0.25
    dt_min: float = 1e-6
    newton_tol: float = 1e-10
    newton_max_iters: int = 30
    cone_factor: float = 0.1
    armijo_factor: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max <= 1.0):
            raise DomainError("need 0 < dt_min <= dt_init <= dt_max <= 1")
        if self.newton_tol <= 0.0 or self.newton_max_iters < 1:
            raise DomainError("newton_tol must be positive, max iters >= 1")
        if not (0.0 < self.cone_factor < 1.0 and 0.0 < self.armijo_factor < 1.0):
            raise DomainError("cone and Armijo factors must lie in (0, 1)")


@dataclass
class HomotopyState:
    """One accepted point on the continuation path."""

    t: float
    u: ScalarField
    residual_norm: float
    cone_margin: float
    newton_iters: int


@dataclass
class MonitorRecord:
    """The a priori quantities tracked along the path: the sup bounds the
    estimates control, the cone margin, and the ellipticity audit."""

    sup_u: float
    sup_grad_u_sq: float
    sup_hess_u: float
    cone_margin: float
    ellipticity: EllipticityReport


@dataclass
class TraceRow:
    step: int
    t: float
    newton_iters: int
    residual_norm: float
    cone_margin: float
    sup_u: float
    sup_grad_u_sq: float
    sup_hess_u: float

    def to_csv(self) -> str:
        return (f"{self.step},{self.t!r},{self.newton_iters},"
                f"{self.residual_norm!r},{self.cone_margin!r},"
                f"{self.sup_u!r},{self.sup_grad_u_sq!r},{self.sup_hess_u!r}")


TRACE_HEADER = ("step,t,newton_iters,residual_norm,cone_margin,"
                "sup_u,sup_grad_u_sq,sup_hess_u")


@dataclass
class ContinuationTrace:
    """Ordered record of accepted states plus their monitor values.

    Row summaries stay small on purpose; only the last accepted state keeps
    its full field (final_state), which downstream checks and the final dump
    read."""

    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)
    final_state: HomotopyState | None = None

    def append(self, state: HomotopyState, record: MonitorRecord) -> None:
        if self.rows and state.t <= self.rows[-1].t:
            raise DomainError("trace t values must be strictly increasing")
        self.final_state = state
        self.rows.append(TraceRow(
            step=len(self.rows), t=state.t,
            newton_iters=state.newton_iters,
            residual_norm=state.residual_norm,
            cone_margin=state.cone_margin,
            sup_u=record.sup_u, sup_grad_u_sq=record.sup_grad_u_sq,
            sup_hess_u=record.sup_hess_u))
        self.records.append(record)

    @property
    def final_t(self) -> float:
        return self.rows[-1].t if self.rows else float("nan")

    def to_csv(self) -> str:
        lines = [TRACE_HEADER] + [row.to_csv() for row in self.rows]
        return "\n".join(lines) + "\n"


def monitor(state: HomotopyState, spec: ProblemSpec,
            state_data: StateData | None = None) -> MonitorRecord:
    """Compute the monitored sup quantities and the ellipticity audit."""
    sd = state_data if state_data is not None else \
        prepare_state(state.u, state.t, spec)
    grad_sq = (sd.gv ** 2).sum(axis=-1)
    hmats = hess(state.u).as_matrices()
    spectral = np.abs(np.linalg.eigvalsh(hmats)).max(axis=-1)
    cert = ellipticity_certificate(state.u, state.t, spec, state=sd)
    return MonitorRecord(
        sup_u=float(np.abs(state.u.values).max()),
        sup_grad_u_sq=float(grad_sq.max()),
        sup_hess_u=float(spectral.max()),
        cone_margin=sd.cone_margin,
        ellipticity=cert)


def solve_linear(op: LinearOperator, rhs: np.ndarray) -> np.ndarray:
    """Solve L[delta] = rhs on the grid.

    Diagonally preconditioned BiCGSTAB first (the operator is nonsymmetric
    because of the first-order terms), GMRES on breakdown, and a dense direct
    solve as last resort for systems up to DENSE_FALLBACK_SIZE unknowns. The
    winner must pass a true-residual guard; otherwise LinearSolveError.
    """
    size = op.grid.size
    flat = np.ascontiguousarray(rhs, dtype=float).ravel()
    bnorm = float(np.abs(flat).max())
    if bnorm == 0.0:
        return np.zeros(op.grid.shape)
    diag = op.diagonal()
    safe = np.where(np.abs(diag) > 1e-300, diag, 1.0)
    precond = ScipyOperator((size, size), matvec=lambda x: x / safe)
    action = ScipyOperator((size, size), matvec=op.matvec)

    def good(x) -> bool:
        err = float(np.abs(op.matvec(x) - flat).max())
        return err <= LINEAR_GUARD * bnorm

    x, info = bicgstab(action, flat, rtol=LINEAR_RTOL, atol=0.0,
                       maxiter=10 * size, M=precond)
    if info == 0 and good(x):
        return x.reshape(op.grid.shape)
    x, info = gmres(action, flat, rtol=LINEAR_RTOL, atol=0.0,
                    restart=50, maxiter=10 * size, M=precond)
    if info == 0 and good(x):
        return x.reshape(op.grid.shape)
    if size <= DENSE_FALLBACK_SIZE:
        dense = op.as_csr().toarray()
        x = np.linalg.solve(dense, flat)
        if good(x):
            return x.reshape(op.grid.shape)
    raise LinearSolveError(
        f"linearized system not solved to guard {LINEAR_GUARD:.0e} "
        f"(size {size})")


def newton_correct(state: HomotopyState, spec: ProblemSpec, tol: float,
                   max_iters: int, cone_factor: float = 0.1,
                   armijo_factor: float = 0.25) -> HomotopyState:
    """Damped Newton on the multiplied residual at fixed t.

    Each step solves L[delta] = -residual and takes the largest step size
    s in {1, 1/2, ..., 2^-10} whose candidate (a) keeps the cone margin at or
    above cone_factor times the current margin at every node, and (b) cuts the
    residual max-norm to at most (1 - s * armijo_factor) of the current one.
    The tolerance is checked before the first iteration, so an already
    converged state returns unchanged with newton_iters = 0.
    """
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    t = state.t
    u = state.u
    sd = prepare_state(u, t, spec)
    margin = sd.cone_margin
    if margin <= 0.0:
        node, rep = sd.worst_node()
        raise ConeExitError(
            f"entry state outside Gamma_{spec.required_cone} at node {node} "
            f"(margin {rep.margin:.3e})")
    res = residual(u, t, spec, state=sd).values.values
    rnorm = float(np.abs(res).max())
    if rnorm <= tol:
        return HomotopyState(t=t, u=u, residual_norm=rnorm,
                             cone_margin=margin, newton_iters=0)
    for it in range(1, max_iters + 1):
        lin = linearize(u, t, spec, state=sd)
        delta = solve_linear(lin, -res)
        accepted = False
        for j in range(11):
            s = 2.0 ** (-j)
            cand = ScalarField(spec.grid, u.values + s * delta)
            sd_cand = prepare_state(cand, t, spec)
            m_cand = sd_cand.cone_margin
            if m_cand < cone_factor * margin:
                continue
            r_cand = residual(cand, t, spec, state=sd_cand).values.values
            rn_cand = float(np.abs(r_cand).max())
            if rn_cand <= (1.0 - s * armijo_factor) * rnorm:
                u, sd, margin = cand, sd_cand, m_cand
                res, rnorm = r_cand, rn_cand
                accepted = True
                break
        if not accepted:
            raise ConeExitError(
                f"line search found no admissible decreasing step at "
                f"t={t!r} (residual {rnorm:.3e}, margin {margin:.3e})")
        if rnorm <= tol:
            return HomotopyState(t=t, u=u, residual_norm=rnorm,
                                 cone_margin=margin, newton_iters=it)
    raise NonConvergenceError(
        f"Newton reached {max_iters} iterations at t={t!r} with residual "
        f"{rnorm:.3e} > tol {tol:.0e}")


def solve_t0(spec: ProblemSpec, u_init: ScalarField,
             tol: float = 1e-10, max_iters: int = 50) -> ScalarField:
    """Solve the t = 0 equation (unique solution u = 0) by the same corrector.

    The returned field should be zero to solver tolerance from any small
    initial guess; this anchors the continuation path.
    """
    if spec.case not in ("A", "B"):
        raise DomainError("the t = 0 endpoint belongs to the homotopy "
                          "cases A and B")
    start = HomotopyState(t=0.0, u=u_init, residual_norm=float("inf"),
                          cone_margin=0.0, newton_iters=0)
    return newton_correct(start, spec, tol, max_iters).u


def continue_path(spec: ProblemSpec,
                  schedule: Schedule | None = None) -> ContinuationTrace:
    """Walk t from 0 to 1 with adaptive steps; return the full trace.

    Step control: a corrector success in at most 4 iterations doubles dt (up
    to dt_max); a corrector failure halves dt and retries from the last
    accepted state; dt below dt_min raises PathFailureError carrying the
    trace accumulated so far, whose last row holds the final accepted t.
    """
    if spec.case not in ("A", "B"):
        raise DomainError("continuation is defined for cases A and B; "
                          "case C uses solve_caseC")
    spec.validate(strict=True)
    sched = schedule if schedule is not None else Schedule()
    trace = ContinuationTrace()

    start = HomotopyState(t=0.0, u=ScalarField.zeros(spec.grid),
                          residual_norm=float("inf"), cone_margin=0.0,
                          newton_iters=0)
    state = newton_correct(start, spec, sched.newton_tol,
                           sched.newton_max_iters, sched.cone_factor,
                           sched.armijo_factor)
    trace.append(state, monitor(state, spec))

    t = 0.0
    dt = sched.dt_init
    while t < 1.0:
        t_next = min(t + dt, 1.0)
        attempt = HomotopyState(t=t_next, u=state.u,
                                residual_norm=float("inf"), cone_margin=0.0,
                                newton_iters=0)
        try:
            accepted = newton_correct(attempt, spec, sched.newton_tol,
                                      sched.newton_max_iters,
                                      sched.cone_factor, sched.armijo_factor)
        except (ConeExitError, NonConvergenceError, LinearSolveError) as err:
            dt *= 0.5
            if dt < sched.dt_min:
                raise PathFailureError(
                    f"step size underflow below {sched.dt_min:.0e} at "
                    f"t={t!r}: {err}", trace=trace) from err
            continue
        state = accepted
        t = t_next
        trace.append(state, monitor(state, spec))
        if state.newton_iters <= 4:
            dt = min(2.0 * dt, sched.dt_max)
    return trace


def trace_for_state(state: HomotopyState, spec: ProblemSpec) -> ContinuationTrace:
    """Wrap a single solved state (a case C solve, typically) in a one-row
    trace so the reporting layer treats every solve uniformly."""
    trace = ContinuationTrace()
    trace.append(state, monitor(state, spec))
    return trace


def solve_caseC(spec: ProblemSpec, u_init: ScalarField | None = None,
                tol: float = 1e-10, max_iters: int = 50) -> HomotopyState:
    """Direct damped Newton for case C (experimental: the estimates exist,
    an existence theorem does not). Requires the background Schouten tensor
    strictly inside Gamma_{k-1} at every node."""
    if spec.case != "C":
        raise DomainError("solve_caseC only accepts case C problems")
    margins, node, report = spec.background.schouten0_admissibility(spec.k - 1)
    if float(margins.min()) <= 0.0:
        raise AdmissibilityError(
            f"background Schouten tensor must lie in Gamma_{spec.k - 1}",
            node=node, margin=report.margin)
    u0 = u_init if u_init is not None else ScalarField.zeros(spec.grid)
    start = HomotopyState(t=1.0, u=u0, residual_norm=float("inf"),
                          cone_margin=0.0, newton_iters=0)
    return newton_correct(start, spec, tol, max_iters)
