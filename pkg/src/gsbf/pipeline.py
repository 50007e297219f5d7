"""Three-stage group sparse beamforming pipeline and baselines.

Stage 1 drives groups of the beamformer toward zero with a proximal
iteratively reweighted loop on a log-sum sparsity surrogate; stage 2
ranks tasks by priority and finds the shortest feasible prefix; stage 3
re-optimizes transmit power on the fixed support. The coordinated
beamforming (CB) and mixed l1,2-norm baselines share stages 2-3.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import conic, diagnostics
from .netmodel import (
    BeamformingSolution,
    ChannelRealization,
    NetworkConfig,
    PowerBreakdown,
    TaskSelection,
    power_breakdown,
)


class InstanceInfeasible(Exception):
    """The QoS targets cannot be met even with every task active."""


class SolverFailure(Exception):
    """The conic solver broke down; a partial trace may be attached."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class AlgorithmParams:
    p: float = 100.0          # log-sum sharpness
    beta: float = 0.1         # proximal coefficient
    iter_max: int = 25
    eps: float = 1e-5         # l1 weight-change stopping tolerance
    zero_tol: float = 1e-6    # support detection threshold on group norms
    solver_tol: float = conic.DEFAULT_SOLVER_TOL

    def __post_init__(self):
        if min(self.p, self.beta, self.eps, self.zero_tol, self.solver_tol) <= 0:
            raise ValueError("algorithm parameters must be positive")
        if self.iter_max < 1:
            raise ValueError("iter_max must be positive")


@dataclass
class ConvergenceTrace:
    """Per-iteration record of the stage-1 loop.

    omega and weights have one entry per iterate (length iterations + 1);
    the step quantities have one entry per iteration.
    """

    omega: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    displacement: list = field(default_factory=list)
    delta_g: list = field(default_factory=list)
    residual_bound: list = field(default_factory=list)
    wall_s: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.displacement)

    @property
    def j_values(self) -> list:
        """J proxy: equals omega on feasible iterates."""
        return self.omega


@dataclass(frozen=True)
class PipelineResult:
    method: str
    stage1: BeamformingSolution
    trace: ConvergenceTrace | None
    selection: TaskSelection
    refined: BeamformingSolution
    power: PowerBreakdown
    timings_s: dict
    status: str = "ok"

    @property
    def task_count(self) -> int:
        return len(self.selection)

    @property
    def iterations(self) -> int:
        return self.trace.iterations if self.trace is not None else 1


def rho_weights(cfg: NetworkConfig) -> np.ndarray:
    """Group penalty coefficients sqrt(P^c_nk / eta_n); zero compute power
    leaves the group unpenalized."""
    return np.sqrt(cfg.p_compute / cfg.eta[:, None])


def update_weights(sol: BeamformingSolution, rho: np.ndarray, p: float) -> np.ndarray:
    """Reweighting rule w_nk = p * rho_nk / (p ||v_nk|| + 1)."""
    if p <= 0:
        raise ValueError("p must be positive")
    return p * rho / (p * sol.group_norms + 1.0)


def _solve_or_raise(prog, tol, context):
    res = conic.solve(prog, tol)
    if res.status == "infeasible":
        raise InstanceInfeasible(context)
    if not res.is_feasible_point:
        raise SolverFailure(f"solver failed during {context}")
    return res


def initial_point(ch: ChannelRealization, cfg: NetworkConfig,
                  params: AlgorithmParams) -> BeamformingSolution:
    """CB solution used as the feasible starting point; its infeasibility
    certifies infeasibility of the whole instance."""
    res = _solve_or_raise(conic.build_cb(ch, cfg), params.solver_tol, "CB start")
    return BeamformingSolution(v=res.v, zero_tol=params.zero_tol)


def prox_irw(ch: ChannelRealization, cfg: NetworkConfig,
             params: AlgorithmParams) -> tuple[BeamformingSolution, ConvergenceTrace]:
    """Proximal iteratively reweighted minimization of the log-sum surrogate.

    Starts from the CB solution with all-ones weights, alternates a weighted
    group-norm + proximal conic solve with the reweighting rule, and stops
    when the l1 change of the weights drops below eps or iter_max is hit.
    Every iterate is feasible by construction.
    """
    rho = rho_weights(cfg)
    cert = diagnostics.CertificateParams(kappa=float(rho.max()), p=params.p,
                                         beta=params.beta)
    sol = initial_point(ch, cfg, params)
    weights = np.ones((cfg.num_bs, cfg.num_users))
    trace = ConvergenceTrace()
    trace.omega.append(diagnostics.log_sum_objective(sol.v, rho, params.p))
    trace.weights.append(weights.copy())
    for _ in range(params.iter_max):
        t0 = time.perf_counter()
        prog = conic.build_stage1(weights, sol.v, params.beta, ch, cfg)
        res = conic.solve(prog, params.solver_tol)
        if not res.is_feasible_point:
            raise SolverFailure("stage-1 subproblem solve failed", trace=trace)
        nxt = BeamformingSolution(v=res.v, zero_tol=params.zero_tol)
        delta_g = diagnostics.model_reduction(sol.v, nxt.v, weights, params.beta)
        disp = float(np.linalg.norm((sol.v - nxt.v).ravel()))
        if delta_g < 0.5 * params.beta * disp ** 2:
            # An exact subproblem minimizer satisfies this with margin, so a
            # shortfall means solver noise exceeds the remaining progress:
            # the incumbent is already optimal to solver accuracy. Null step.
            break
        trace.omega.append(diagnostics.log_sum_objective(nxt.v, rho, params.p))
        trace.delta_g.append(delta_g)
        trace.displacement.append(disp)
        trace.residual_bound.append(diagnostics.residual_bound(sol.v, nxt.v, cert))
        trace.wall_s.append(time.perf_counter() - t0)
        new_weights = update_weights(nxt, rho, params.p)
        trace.weights.append(new_weights.copy())
        change = float(np.abs(new_weights - weights).sum())
        sol, weights = nxt, new_weights
        if change <= params.eps:
            break
    return sol, trace


def task_priorities(sol: BeamformingSolution, ch: ChannelRealization,
                    cfg: NetworkConfig) -> np.ndarray:
    """Priority score sqrt(||h_nk||^2 eta_n / P^c_nk) * ||v_nk|| per task.

    Tasks with zero compute power are never pruned: they get +inf.
    """
    gain = np.linalg.norm(ch.h, axis=-1) ** 2  # (N, K)
    with np.errstate(divide="ignore"):
        scale = np.sqrt(np.where(cfg.p_compute > 0,
                                 gain * cfg.eta[:, None] / cfg.p_compute,
                                 np.inf))
    with np.errstate(invalid="ignore"):
        theta = scale * sol.group_norms
    # 0 * inf from an exactly-zero beamformer on a free task: keep it +inf
    theta = np.where(np.isinf(scale), np.inf, theta)
    return theta


def _priority_order(theta: np.ndarray, cfg: NetworkConfig) -> list:
    """Tasks sorted by priority descending, ties by (n, k) ascending."""
    pairs = [(n, k) for n in range(cfg.num_bs) for k in range(cfg.num_users)]
    return sorted(pairs, key=lambda g: (-theta[g], g))


def select_tasks(priorities: np.ndarray, ch: ChannelRealization,
                 cfg: NetworkConfig,
                 solver_tol: float = conic.DEFAULT_SOLVER_TOL) -> TaskSelection:
    """Shortest feasible prefix of the priority ranking.

    Scans the cut linearly from K up to N*K, solving one feasibility
    probe per cut; feasibility is monotone in the cut, so the first
    feasible prefix is returned. The full cut reproduces the unrestricted
    problem, so a feasible instance always terminates.
    """
    order = _priority_order(priorities, cfg)
    total = cfg.num_bs * cfg.num_users
    for t in range(cfg.num_users, total + 1):
        inactive = frozenset(order[t:])
        res = conic.solve(conic.build_feasibility(inactive, ch, cfg), solver_tol)
        if res.is_feasible_point:
            return TaskSelection(pairs=frozenset(order[:t]), order=tuple(order),
                                 cut=t)
        if res.status == "failure":
            raise SolverFailure(f"feasibility probe failed at cut {t}")
    raise InstanceInfeasible("no prefix of the priority ranking is feasible")


def refine(selection: TaskSelection, ch: ChannelRealization, cfg: NetworkConfig,
           solver_tol: float = conic.DEFAULT_SOLVER_TOL,
           zero_tol: float = 1e-6) -> BeamformingSolution:
    """Minimum transmit power beamformer over the fixed support."""
    all_pairs = {(n, k) for n in range(cfg.num_bs) for k in range(cfg.num_users)}
    inactive = frozenset(all_pairs - selection.pairs)
    prog = conic.build_refinement(inactive, ch, cfg)
    res = conic.solve(prog, solver_tol)
    if not res.is_feasible_point:
        raise SolverFailure(f"refinement on a supposedly feasible support "
                            f"returned {res.status}")
    return BeamformingSolution(v=res.v, zero_tol=zero_tol)


def _finish(method, stage1, trace, selection, ch, cfg, params, timings):
    t0 = time.perf_counter()
    refined = refine(selection, ch, cfg, params.solver_tol, params.zero_tol)
    timings["refine"] = time.perf_counter() - t0
    power = power_breakdown(refined, selection, cfg)
    return PipelineResult(method=method, stage1=stage1, trace=trace,
                          selection=selection, refined=refined, power=power,
                          timings_s=timings)


def run_three_stage(ch: ChannelRealization, cfg: NetworkConfig,
                    params: AlgorithmParams | None = None) -> PipelineResult:
    """Log-sum stage 1, priority-driven selection, transmit-power refinement."""
    params = params or AlgorithmParams()
    timings = {}
    t0 = time.perf_counter()
    stage1, trace = prox_irw(ch, cfg, params)
    timings["stage1"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    theta = task_priorities(stage1, ch, cfg)
    selection = select_tasks(theta, ch, cfg, params.solver_tol)
    timings["select"] = time.perf_counter() - t0
    return _finish("logsum", stage1, trace, selection, ch, cfg, params, timings)


def run_cb(ch: ChannelRealization, cfg: NetworkConfig,
           params: AlgorithmParams | None = None) -> PipelineResult:
    """Coordinated beamforming: every BS performs every task."""
    params = params or AlgorithmParams()
    timings = {}
    t0 = time.perf_counter()
    stage1 = initial_point(ch, cfg, params)
    timings["stage1"] = time.perf_counter() - t0
    selection = TaskSelection.full(cfg.num_bs, cfg.num_users)
    power = power_breakdown(stage1, selection, cfg)
    return PipelineResult(method="cb", stage1=stage1, trace=None,
                          selection=selection, refined=stage1, power=power,
                          timings_s=timings)


def run_mixed_l12(ch: ChannelRealization, cfg: NetworkConfig,
                  params: AlgorithmParams | None = None) -> PipelineResult:
    """Convex mixed l1,2-norm stage 1; stages 2-3 as in the log-sum pipeline."""
    params = params or AlgorithmParams()
    timings = {}
    rho = rho_weights(cfg)
    t0 = time.perf_counter()
    prog = conic.build_mixed_l12(rho, ch, cfg)
    res = _solve_or_raise(prog, params.solver_tol, "mixed l1,2 stage 1")
    stage1 = BeamformingSolution(v=res.v, zero_tol=params.zero_tol)
    timings["stage1"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    theta = task_priorities(stage1, ch, cfg)
    selection = select_tasks(theta, ch, cfg, params.solver_tol)
    timings["select"] = time.perf_counter() - t0
    return _finish("mixed_l12", stage1, None, selection, ch, cfg, params, timings)
