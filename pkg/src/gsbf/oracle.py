"""Exhaustive ground-truth solver for desk-scale instances.

Enumerates every task-support pattern, solves the transmit-power
refinement program per pattern and returns the global minimizer of the
total (transmit + compute) network power. Intended as a lower-bound
oracle against which the heuristic pipelines are checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .netmodel import (
    BeamformingSolution,
    ChannelRealization,
    NetworkConfig,
    TaskSelection,
)
from .pipeline import InstanceInfeasible

MAX_TASKS = 12  # 2^12 refinement solves at most


@dataclass(frozen=True)
class OracleResult:
    best_support: frozenset
    best_v: np.ndarray
    best_total_w: float
    best_transmit_w: float
    patterns_enumerated: int
    patterns_feasible: int

    @property
    def selection(self) -> TaskSelection:
        return TaskSelection.from_support(self.best_support)

    def best_solution(self, zero_tol: float = 1e-6) -> BeamformingSolution:
        return BeamformingSolution(v=self.best_v, zero_tol=zero_tol)


def enumerate_supports(num_bs: int, num_users: int, prune_coverage: bool = True):
    """Yield candidate supports (frozensets of (n, k) pairs).

    Supports leaving some user with no serving task are certainly
    infeasible and pruned by default.
    """
    total = num_bs * num_users
    if total > MAX_TASKS:
        raise ValueError(f"instance too large for exhaustive search "
                         f"({total} tasks > {MAX_TASKS})")
    pairs = [(n, k) for n in range(num_bs) for k in range(num_users)]
    for mask in range(2 ** total):
        support = frozenset(pairs[i] for i in range(total) if mask >> i & 1)
        if prune_coverage:
            covered = {k for _, k in support}
            if len(covered) < num_users:
                continue
        yield support


def oracle_min_power(ch: ChannelRealization, cfg: NetworkConfig,
                     solver_tol: float = conic.DEFAULT_SOLVER_TOL) -> OracleResult:
    """Globally minimize total network power over all support patterns.

    Ties are broken toward the smaller support, then lexicographically.
    """
    all_pairs = {(n, k) for n in range(cfg.num_bs) for k in range(cfg.num_users)}
    best = None
    enumerated = feasible = 0
    for support in enumerate_supports(cfg.num_bs, cfg.num_users):
        enumerated += 1
        inactive = frozenset(all_pairs - support)
        res = conic.solve(conic.build_refinement(inactive, ch, cfg), solver_tol)
        if not res.is_feasible_point:
            continue
        feasible += 1
        compute = float(sum(cfg.p_compute[n, k] for n, k in support))
        total = res.objective + compute
        key = (total, len(support), tuple(sorted(support)))
        if best is None or key < best[0]:
            best = (key, support, total, res.objective, res.v)
    if best is None:
        raise InstanceInfeasible("no support pattern is feasible")
    _, support, total, transmit, v = best
    return OracleResult(best_support=frozenset(support), best_v=v,
                        best_total_w=total, best_transmit_w=transmit,
                        patterns_enumerated=enumerated,
                        patterns_feasible=feasible)
