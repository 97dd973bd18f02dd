"""Alternating optimization loop and the benchmark schemes.

One outer iteration runs the exact per-slot blocklength search, then one
convex trajectory step around the current iterate, then re-evaluates the true
(unapproximated) average secrecy throughput at the new point. The loop stops
when consecutive values differ by at most the scenario's convergence
threshold, or at the iteration cap.

Reported throughput always comes from the true rate expressions, never from
the surrogate bit counts. A candidate trajectory is accepted only if the true
value does not regress; a failed or regressive solve keeps the previous
trajectory, which preserves the monotone-convergence contract.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .blocklength_opt import optimize_plan
from .fbl_metrics import BlocklengthPlan, check_plan, east, secrecy_rate_dl, secrecy_rate_ul
from .sca_trajectory import (DegenerateSubproblemError, TrajectoryStepError,
                             solve_trajectory_step)
from .scenario import Scenario, Trajectory, check_trajectory

MAX_ITERATIONS = 50


class Scheme(enum.Enum):
    JTBD = "jtbd"          # joint blocklength and trajectory design
    TDFB = "tdfb"          # trajectory design, fixed blocklengths
    BDFT = "bdft"          # blocklength design, fixed trajectory
    BASELINE = "baseline"  # initial feasible point, no optimization


class Termination(enum.Enum):
    CONVERGED = "converged"
    ITERATION_CAP = "iteration_cap"
    FIXED_POINT = "fixed_point"
    BASELINE = "baseline"


@dataclass
class StepAudit:
    """Per-iteration record tying surrogate bit counts to recomputed true rates."""

    iteration: int
    slots: np.ndarray          # active slots of the accepted step
    tau: np.ndarray            # surrogate secure bits on those slots
    bits_ul: np.ndarray        # true uplink secure bits at the accepted trajectory
    bits_dl: np.ndarray
    accepted: bool
    solver_iterations: int


@dataclass
class RunRecord:
    """Everything one scheme run produced."""

    scheme: Scheme
    east_trace: list           # bits/second, entry 0 is the initial point
    trajectory: Trajectory
    plan: BlocklengthPlan
    slot_metrics: list
    iter_seconds: list
    termination: Termination
    step_audits: list = field(default_factory=list)

    @property
    def final_east(self) -> float:
        return self.east_trace[-1]

    @property
    def iterations(self) -> int:
        return len(self.east_trace) - 1


def initial_point(scn: Scenario) -> tuple[Trajectory, BlocklengthPlan]:
    """Straight constant-speed path plus an even blocklength split.

    The split gives the integer-division remainder to the downlink.
    """
    w = np.empty((scn.n_slots, 3))
    for d in range(3):
        w[:, d] = np.linspace(scn.q_i[d], scn.q_f[d], scn.n_slots)
    w[0, :] = scn.q_i
    w[-1, :] = scn.q_f
    traj = Trajectory(waypoints=w)
    check_trajectory(scn, traj)
    l_u = np.full(scn.n_slots, scn.l_max // 2, dtype=np.int64)
    l_d = np.full(scn.n_slots, scn.l_max - scn.l_max // 2, dtype=np.int64)
    plan = BlocklengthPlan(l_u=l_u, l_d=l_d)
    check_plan(scn, plan)
    return traj, plan


def _audit_step(scn, iteration, step, traj, plan, accepted) -> StepAudit:
    slots = np.flatnonzero(step.tau > 0.0)
    bits_ul = np.empty(slots.size)
    bits_dl = np.empty(slots.size)
    for j, n in enumerate(slots):
        q = traj.waypoints[n]
        bits_ul[j] = secrecy_rate_ul(scn, q, int(plan.l_u[n])) * plan.l_u[n]
        bits_dl[j] = secrecy_rate_dl(scn, q, int(plan.l_d[n])) * plan.l_d[n]
    return StepAudit(iteration=iteration, slots=slots, tau=step.tau[slots],
                     bits_ul=bits_ul, bits_dl=bits_dl, accepted=accepted,
                     solver_iterations=step.solver.iterations if step.solver else 0)


def _run_alternating(scn: Scenario, scheme: Scheme, optimize_blocklengths: bool,
                     optimize_trajectory: bool, max_iterations: int) -> RunRecord:
    traj, plan = initial_point(scn)
    value, metrics = east(scn, traj, plan)
    trace = [value]
    seconds: list = []
    audits: list = []
    termination = Termination.ITERATION_CAP
    for it in range(1, max_iterations + 1):
        tic = time.perf_counter()
        if optimize_blocklengths:
            plan = optimize_plan(scn, traj)
        if optimize_trajectory:
            try:
                step = solve_trajectory_step(scn, traj, plan)
                cand_value, cand_metrics = east(scn, step.trajectory, plan)
                base_value, base_metrics = east(scn, traj, plan)
                if cand_value >= base_value:
                    traj = step.trajectory
                    value, metrics = cand_value, cand_metrics
                    audits.append(_audit_step(scn, it, step, traj, plan, True))
                else:
                    value, metrics = base_value, base_metrics
                    audits.append(_audit_step(scn, it, step, step.trajectory, plan, False))
            except (TrajectoryStepError, DegenerateSubproblemError):
                value, metrics = east(scn, traj, plan)
        else:
            value, metrics = east(scn, traj, plan)
        check_trajectory(scn, traj)
        check_plan(scn, plan)
        seconds.append(time.perf_counter() - tic)
        trace.append(value)
        if abs(trace[-1] - trace[-2]) <= scn.eps_conv:
            termination = Termination.CONVERGED
            break
        if scheme is Scheme.BDFT:
            # slot-separable and exact: one pass is the fixed point
            termination = Termination.FIXED_POINT
            break
    return RunRecord(scheme=scheme, east_trace=trace, trajectory=traj, plan=plan,
                     slot_metrics=metrics, iter_seconds=seconds,
                     termination=termination, step_audits=audits)


def run_jtbd(scn: Scenario, max_iterations: int = MAX_ITERATIONS) -> RunRecord:
    """Joint design: alternate the exact blocklength search and trajectory steps."""
    return _run_alternating(scn, Scheme.JTBD, True, True, max_iterations)


def run_tdfb(scn: Scenario, max_iterations: int = MAX_ITERATIONS) -> RunRecord:
    """Trajectory-only design with the initial even blocklength split held fixed."""
    return _run_alternating(scn, Scheme.TDFB, False, True, max_iterations)


def run_bdft(scn: Scenario) -> RunRecord:
    """Blocklength-only design on the fixed straight-line trajectory.

    A second pass could not change anything, so exactly one pass runs.
    """
    return _run_alternating(scn, Scheme.BDFT, True, False, max_iterations=1)


def run_baseline(scn: Scenario) -> RunRecord:
    """Evaluate the initial feasible point without optimizing anything."""
    traj, plan = initial_point(scn)
    value, metrics = east(scn, traj, plan)
    return RunRecord(scheme=Scheme.BASELINE, east_trace=[value], trajectory=traj,
                     plan=plan, slot_metrics=metrics, iter_seconds=[],
                     termination=Termination.BASELINE)


def run_scheme(scn: Scenario, scheme: Scheme, max_iterations: int = MAX_ITERATIONS) -> RunRecord:
    if scheme is Scheme.JTBD:
        return run_jtbd(scn, max_iterations)
    if scheme is Scheme.TDFB:
        return run_tdfb(scn, max_iterations)
    if scheme is Scheme.BDFT:
        return run_bdft(scn)
    if scheme is Scheme.BASELINE:
        return run_baseline(scn)
    raise ValueError(f"unknown scheme {scheme!r}")
