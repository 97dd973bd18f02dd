"""One convex trajectory subproblem around a local point.

The per-slot secure-bit constraints are nonconvex in the relay position, so
each outer iteration rebuilds them from two global under-estimators anchored
at the previous iterate: a bilinear lower bound on 1/(x*y) and first-order
tangents of the concave map x -> 0.5*ln(x*(x+2)). Both bound from the safe
side, so any point feasible for the surrogate is feasible for the original
constraints and the reported per-slot secure bits never overstate what the
true rates deliver.

Slots whose current plan is silent, or whose tight secure bits are not
meaningfully positive, are excluded from the rate constraints: their bit
count is pinned to zero and only the motion constraints keep acting on their
waypoints. Rate constants are undefined at zero blocklength, and a slot with
nonpositive bits would make the subproblem infeasible at its own local point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import convex_solver as cs
from .fbl_metrics import (BlocklengthPlan, LOG2_E, check_plan, dispersion_root,
                          q_inv, secrecy_rate_dl, secrecy_rate_ul)
from .scenario import Link, Scenario, Trajectory, avg_eve_uplink_snr, check_trajectory, snr

LN2 = math.log(2.0)

# Slots below this many tight secure bits contribute nothing the solver could
# resolve at its duality-gap target; they are treated as silent.
ACTIVITY_MIN_BITS = 1e-2

_CUSHION = 1e-4          # relative interior cushion for the solver start
_TAU_SHAVE = 1e-3


class TrajectoryStepError(RuntimeError):
    """Trajectory subproblem could not be solved; keep the previous iterate."""

    def __init__(self, message: str, status=None):
        super().__init__(message)
        self.status = status


class DegenerateSubproblemError(ValueError):
    """Every slot is excluded; there is no rate constraint left to optimize."""


def f_lb(x, y, x0, y0):
    """Global lower bound on 1/(x*y) anchored at (x0, y0), all positive.

    Tight exactly at the anchor; affine in (x, y), which is what makes the
    product constraints convex after substitution.
    """
    x, y, x0, y0 = (np.asarray(v, dtype=float) for v in (x, y, x0, y0))
    if np.any(x <= 0) or np.any(y <= 0) or np.any(x0 <= 0) or np.any(y0 <= 0):
        raise ValueError("f_lb requires strictly positive arguments")
    out = -(x * y0 + x0 * y - 3.0 * x0 * y0) / (x0 ** 2 * y0 ** 2)
    return float(out) if out.ndim == 0 else out


def tangent_a0(x0):
    """Value term of the tangent to 0.5*ln(x*(x+2)) at x0 > 0."""
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("tangent_a0 requires x0 > 0")
    out = 0.5 * np.log(x0 * (2.0 + x0))
    return float(out) if out.ndim == 0 else out


def tangent_a1(x0):
    """Slope term of the tangent to 0.5*ln(x*(x+2)) at x0 > 0."""
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("tangent_a1 requires x0 > 0")
    out = (x0 + 1.0) / (x0 * (x0 + 2.0))
    return float(out) if out.ndim == 0 else out


def g_tangent(x, x0):
    """First-order expansion of 0.5*ln(x*(x+2)) around x0.

    The expanded map is concave, so this tangent dominates it everywhere and
    is exact at x0; using it on the greater-or-equal side of a constraint
    therefore shrinks, never grows, the feasible set.
    """
    x = np.asarray(x, dtype=float)
    out = tangent_a0(x0) + tangent_a1(x0) * (x - x0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SlackPoint:
    """Tight slack values at a local trajectory, per active slot.

    `slots` holds the indices of active slots; all arrays align with it.
    Products lambda1*lambda2, omega1*omega2, and u1*v2 equal one by
    construction, and tau carries the per-slot secure bits achievable at the
    local point.
    """

    slots: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    beta1: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    psi1: np.ndarray
    u1: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    tau: np.ndarray


@dataclass(frozen=True)
class SubproblemCoefficients:
    """Per-active-slot rate constants of the convex subproblem."""

    slots: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    d0_lo: np.ndarray


def _active_slots(scn: Scenario, traj: Trajectory, plan: BlocklengthPlan):
    """Indices, rates and tight secure bits of slots that enter the subproblem."""
    idx, r_u, r_d, bits = [], [], [], []
    for n in range(scn.n_slots):
        lu, ld = int(plan.l_u[n]), int(plan.l_d[n])
        if lu < 1 or ld < 1:
            continue
        q = traj.waypoints[n]
        ru = secrecy_rate_ul(scn, q, lu)
        rd = secrecy_rate_dl(scn, q, ld)
        secure = min(ru * lu, rd * ld)
        if secure <= ACTIVITY_MIN_BITS:
            continue
        idx.append(n); r_u.append(ru); r_d.append(rd); bits.append(secure)
    return (np.asarray(idx, dtype=int), np.asarray(r_u), np.asarray(r_d), np.asarray(bits))


def init_slacks(scn: Scenario, traj_lo: Trajectory, plan: BlocklengthPlan) -> SlackPoint:
    """Tight slack construction at the local trajectory.

    Every subproblem constraint holds at this point (with equality where the
    surrogates are tangent), so it anchors both the surrogate coefficients and
    the feasible solver start.
    """
    check_trajectory(scn, traj_lo)
    check_plan(scn, plan)
    slots, r_u, r_d, _ = _active_slots(scn, traj_lo, plan)
    k = slots.size
    lam1 = np.empty(k); om1 = np.empty(k); vv2 = np.empty(k)
    for j, n in enumerate(slots):
        q = traj_lo.waypoints[n]
        lam1[j] = snr(scn, q, Link.UPLINK_RELAY)
        om1[j] = snr(scn, q, Link.DOWNLINK_BOB)
        vv2[j] = snr(scn, q, Link.DOWNLINK_EVE)
    lu = plan.l_u[slots].astype(float) if k else np.zeros(0)
    ld = plan.l_d[slots].astype(float) if k else np.zeros(0)
    tau = (1.0 - scn.eps_dec) * np.maximum(0.0, np.minimum(r_u * lu, r_d * ld))
    return SlackPoint(
        slots=slots,
        lambda1=lam1, lambda2=1.0 / lam1 if k else np.zeros(0),
        beta1=dispersion_root(lam1) if k else np.zeros(0),
        omega1=om1, omega2=1.0 / om1 if k else np.zeros(0),
        psi1=dispersion_root(om1) if k else np.zeros(0),
        u1=1.0 / vv2 if k else np.zeros(0),
        v1=dispersion_root(vv2) if k else np.zeros(0),
        v2=vv2,
        tau=tau,
    )


def subproblem_coefficients(scn: Scenario, traj_lo: Trajectory,
                            plan: BlocklengthPlan, slots: np.ndarray) -> SubproblemCoefficients:
    """Rate-constraint constants for the given active slots."""
    qe_inv_eps = q_inv(scn.eps_dec)
    qe_inv_eta = q_inv(scn.eta_leak)
    g_ae = avg_eve_uplink_snr(scn)
    lu = plan.l_u[slots].astype(float)
    ld = plan.l_d[slots].astype(float)
    b0 = qe_inv_eps * LOG2_E / np.sqrt(lu)
    b2 = 1.0 / (lu * (1.0 - scn.eps_dec))
    # eavesdropper uplink term enters as a penalty, hence the plus sign
    b1 = np.log2(1.0 + g_ae) + qe_inv_eta * LOG2_E * dispersion_root(g_ae) / np.sqrt(lu)
    c0 = qe_inv_eps * LOG2_E / np.sqrt(ld)
    c1 = qe_inv_eta * LOG2_E / np.sqrt(ld)
    c2 = 1.0 / (ld * (1.0 - scn.eps_dec))
    q_lo = traj_lo.waypoints[slots]
    d0 = float(np.sum(scn.q_e ** 2)) - np.sum(q_lo ** 2, axis=1)
    return SubproblemCoefficients(slots=slots, b0=b0, b1=b1, b2=b2,
                                  c0=c0, c1=c1, c2=c2, d0_lo=d0)


def _tau_cap(scn: Scenario) -> float:
    # redundant box bound; never active but improves conditioning
    return scn.l_max * math.log2(1.0 + scn.rho_a / scn.altitude ** 2)


def build_subproblem(scn: Scenario, traj_lo: Trajectory, plan: BlocklengthPlan,
                     slacks_lo: SlackPoint, cushion: bool = True):
    """Assemble the convex trajectory subproblem and its feasible start.

    Returns (problem, start). With `cushion=True` the start backs off the
    tangency point just enough to sit strictly inside every constraint; with
    `cushion=False` it is the tight local point itself (boundary contact on
    the tangent rows, useful for feasibility audits).
    """
    n_slots = scn.n_slots
    slots = slacks_lo.slots
    k = slots.size
    if k == 0:
        raise DegenerateSubproblemError("no active slot: nothing to optimize")
    coef = subproblem_coefficients(scn, traj_lo, plan, slots)

    n_vars = 2 * n_slots + 10 * k
    blocks = {"x": slice(0, n_slots), "y": slice(n_slots, 2 * n_slots)}
    names = ("tau", "lambda1", "lambda2", "beta1", "omega1", "omega2",
             "psi1", "u1", "v1", "v2")
    off = 2 * n_slots
    for name in names:
        blocks[name] = slice(off, off + k)
        off += k

    def bi(name, j):
        return blocks[name].start + j

    objective = np.zeros(n_vars)
    objective[blocks["tau"]] = 1.0

    lb = np.full(n_vars, -np.inf)
    ub = np.full(n_vars, np.inf)
    for name in names:
        lb[blocks[name]] = 0.0
    ub[blocks["tau"]] = _tau_cap(scn)

    eqs = (
        cs.AffineEq((blocks["x"].start,), (1.0,), float(scn.q_i[0]), "start_x"),
        cs.AffineEq((blocks["y"].start,), (1.0,), float(scn.q_i[1]), "start_y"),
        cs.AffineEq((blocks["x"].start + n_slots - 1,), (1.0,), float(scn.q_f[0]), "end_x"),
        cs.AffineEq((blocks["y"].start + n_slots - 1,), (1.0,), float(scn.q_f[1]), "end_y"),
    )

    rows: list = []
    step_cap = scn.v_max * scn.delta_t
    for n in range(n_slots - 1):
        rows.append(cs.SecondOrderCone(
            a_idx=(blocks["x"].start + n + 1, blocks["y"].start + n + 1,
                   blocks["x"].start + n, blocks["y"].start + n),
            a_mat=((1.0, 0.0, -1.0, 0.0), (0.0, 1.0, 0.0, -1.0)),
            a_off=(0.0, 0.0),
            lin_idx=(), lin_coef=(), offset=step_cap,
            label=f"motion[{n + 1}]"))

    inv_ln2 = 1.0 / LN2
    h2 = scn.altitude ** 2
    for j, n in enumerate(slots):
        s_n = int(n)
        lam1o, lam2o = slacks_lo.lambda1[j], slacks_lo.lambda2[j]
        om1o, om2o = slacks_lo.omega1[j], slacks_lo.omega2[j]
        v2o = slacks_lo.v2[j]
        ix, iy = blocks["x"].start + s_n, blocks["y"].start + s_n

        rows.append(cs.LogAffine(
            terms=(cs.LogTerm(inv_ln2, (bi("lambda1", j),), (1.0,), 1.0),),
            lin_idx=(bi("beta1", j), bi("tau", j)),
            lin_coef=(float(coef.b0[j]), float(coef.b2[j])),
            rhs_const=float(coef.b1[j]),
            label=f"ul_rate[{s_n + 1}]"))

        rows.append(cs.QuadBall(
            a_idx=(ix, iy), a_mat=((1.0, 0.0), (0.0, 1.0)),
            a_off=(-float(scn.q_a[0]), -float(scn.q_a[1])),
            lin_idx=(bi("lambda2", j),), lin_coef=(scn.rho_a,), offset=-h2,
            label=f"ul_snr_dist[{s_n + 1}]"))

        p = lam1o * lam2o
        rows.append(cs.AffineIneq(
            idx=(bi("lambda1", j), bi("lambda2", j)),
            coef=(lam2o / p ** 2, lam1o / p ** 2), rhs=3.0 / p - 1.0,
            label=f"ul_product[{s_n + 1}]"))

        rows.append(cs.LogAffine(
            terms=(cs.LogTerm(1.0, (bi("beta1", j),), (1.0,), 0.0),
                   cs.LogTerm(1.0, (bi("lambda1", j),), (1.0,), 1.0)),
            lin_idx=(bi("lambda1", j),), lin_coef=(float(tangent_a1(lam1o)),),
            rhs_const=float(tangent_a0(lam1o) - tangent_a1(lam1o) * lam1o),
            label=f"ul_dispersion[{s_n + 1}]"))

        rows.append(cs.LogAffine(
            terms=(cs.LogTerm(inv_ln2, (bi("omega1", j),), (1.0,), 1.0),
                   cs.LogTerm(inv_ln2, (bi("u1", j),), (1.0,), 0.0),
                   cs.LogTerm(-inv_ln2, (bi("u1", j),), (1.0,), 1.0)),
            lin_idx=(bi("psi1", j), bi("v1", j), bi("tau", j)),
            lin_coef=(float(coef.c0[j]), float(coef.c1[j]), float(coef.c2[j])),
            rhs_const=0.0,
            label=f"dl_rate[{s_n + 1}]"))

        p = om1o * om2o
        rows.append(cs.AffineIneq(
            idx=(bi("omega1", j), bi("omega2", j)),
            coef=(om2o / p ** 2, om1o / p ** 2), rhs=3.0 / p - 1.0,
            label=f"dl_product[{s_n + 1}]"))

        rows.append(cs.QuadBall(
            a_idx=(ix, iy), a_mat=((1.0, 0.0), (0.0, 1.0)),
            a_off=(-float(scn.q_b[0]), -float(scn.q_b[1])),
            lin_idx=(bi("omega2", j),), lin_coef=(scn.rho_r,), offset=-h2,
            label=f"dl_snr_dist[{s_n + 1}]"))

        rows.append(cs.LogAffine(
            terms=(cs.LogTerm(1.0, (bi("psi1", j),), (1.0,), 0.0),
                   cs.LogTerm(1.0, (bi("omega1", j),), (1.0,), 1.0)),
            lin_idx=(bi("omega1", j),), lin_coef=(float(tangent_a1(om1o)),),
            rhs_const=float(tangent_a0(om1o) - tangent_a1(om1o) * om1o),
            label=f"dl_dispersion[{s_n + 1}]"))

        delta = traj_lo.waypoints[s_n] - scn.q_e
        rows.append(cs.AffineIneq(
            idx=(bi("u1", j), ix, iy),
            coef=(scn.rho_r, -2.0 * float(delta[0]), -2.0 * float(delta[1])),
            rhs=2.0 * float(delta[2]) * scn.altitude + float(coef.d0_lo[j]),
            label=f"eve_dl_snr[{s_n + 1}]"))

        rows.append(cs.LogAffine(
            terms=(cs.LogTerm(1.0, (bi("v1", j),), (1.0,), 0.0),
                   cs.LogTerm(1.0, (bi("v2", j),), (1.0,), 1.0)),
            lin_idx=(bi("v2", j),), lin_coef=(float(tangent_a1(v2o)),),
            rhs_const=float(tangent_a0(v2o) - tangent_a1(v2o) * v2o),
            label=f"eve_dispersion[{s_n + 1}]"))

        rows.append(cs.Reciprocal(bi("u1", j), bi("v2", j),
                                  label=f"eve_reciprocal[{s_n + 1}]"))

    start = np.zeros(n_vars)
    start[blocks["x"]] = traj_lo.waypoints[:, 0]
    start[blocks["y"]] = traj_lo.waypoints[:, 1]

    lu = plan.l_u[slots].astype(float)
    ld = plan.l_d[slots].astype(float)
    r_u_tight = (np.log2(1.0 + slacks_lo.lambda1) - coef.b0 * slacks_lo.beta1 - coef.b1)
    r_d_tight = (np.log2(1.0 + slacks_lo.omega1)
                 - np.log2(1.0 + 1.0 / slacks_lo.u1)
                 - coef.c0 * slacks_lo.psi1 - coef.c1 * slacks_lo.v1)
    if cushion:
        delta_c = np.minimum(_CUSHION, 0.02 * np.minimum(r_u_tight, r_d_tight))
        delta_c = np.maximum(delta_c, 0.0)
    else:
        delta_c = np.zeros(k)

    lam1 = slacks_lo.lambda1 * (1.0 - 2.0 * delta_c)
    lam2 = slacks_lo.lambda2 * (1.0 + delta_c)
    bet1 = slacks_lo.beta1 * (1.0 + delta_c)
    om1 = slacks_lo.omega1 * (1.0 - 2.0 * delta_c)
    om2 = slacks_lo.omega2 * (1.0 + delta_c)
    psi1 = slacks_lo.psi1 * (1.0 + delta_c)
    u1 = slacks_lo.u1 * (1.0 - delta_c)
    v2 = slacks_lo.v2 * (1.0 + 2.0 * delta_c)
    v1 = slacks_lo.v1 * (1.0 + 3.0 * delta_c)
    t1 = (np.log2(1.0 + lam1) - coef.b0 * bet1 - coef.b1) / coef.b2
    t2 = (np.log2(1.0 + om1) - np.log2(1.0 + 1.0 / u1)
          - coef.c0 * psi1 - coef.c1 * v1) / coef.c2
    if cushion:
        tau = (1.0 - _TAU_SHAVE) * np.minimum(t1, t2)
        if np.any(tau <= 0.0):
            raise TrajectoryStepError("interior start collapsed on a near-silent slot")
    else:
        tau = slacks_lo.tau

    for name, vals in (("tau", tau), ("lambda1", lam1), ("lambda2", lam2),
                       ("beta1", bet1), ("omega1", om1), ("omega2", om2),
                       ("psi1", psi1), ("u1", u1), ("v1", v1), ("v2", v2)):
        start[blocks[name]] = vals

    scale = np.ones(n_vars)
    scale[blocks["x"]] = 1000.0
    scale[blocks["y"]] = 1000.0
    for name in names:
        vals = np.abs(start[blocks[name]])
        scale[blocks[name]] = np.maximum(vals, 1e-12)
    scale[blocks["tau"]] = np.maximum(np.abs(start[blocks["tau"]]), 1.0)

    problem = cs.ConvexProblem(n=n_vars, objective=objective, rows=tuple(rows),
                               eqs=eqs, lb=lb, ub=ub, scale=scale, blocks=blocks)
    return problem, start


@dataclass
class StepResult:
    trajectory: Trajectory
    tau: np.ndarray          # (n_slots,) secure bits per slot, zeros on excluded slots
    objective: float         # sum of tau
    solver: cs.SolverResult | None


def solve_trajectory_step(scn: Scenario, traj_lo: Trajectory,
                          plan: BlocklengthPlan) -> StepResult:
    """Solve one surrogate subproblem and return the improved trajectory.

    The local point is feasible for its own surrogate, so the returned
    objective can never fall below the local one. Raises TrajectoryStepError
    when the solver fails; DegenerateSubproblemError when no slot is active.
    """
    slacks = init_slacks(scn, traj_lo, plan)
    if slacks.slots.size == 0:
        raise DegenerateSubproblemError("no active slot at the local trajectory")

    tau_full = np.zeros(scn.n_slots)
    steps = np.linalg.norm(np.diff(traj_lo.waypoints, axis=0), axis=1)
    cap = scn.v_max * scn.delta_t
    if steps.size and steps.max() >= cap * (1.0 - 1e-12):
        # motion-saturated path: the trajectory is fully determined
        tau_full[slacks.slots] = slacks.tau
        return StepResult(traj_lo, tau_full, float(tau_full.sum()), None)

    problem, start = build_subproblem(scn, traj_lo, plan, slacks)
    result = cs.solve(problem, start)
    if result.status is not cs.Status.OPTIMAL:
        raise TrajectoryStepError(
            f"trajectory subproblem solve failed: {result.status.value} "
            f"(kkt={result.kkt_residual:.3e})", status=result.status)

    w = np.empty((scn.n_slots, 3))
    w[:, 0] = result.x[problem.blocks["x"]]
    w[:, 1] = result.x[problem.blocks["y"]]
    w[:, 2] = scn.altitude
    w[0, :] = scn.q_i
    w[-1, :] = scn.q_f
    traj = Trajectory(waypoints=w)
    check_trajectory(scn, traj)

    tau_full[slacks.slots] = result.x[problem.blocks["tau"]]
    return StepResult(traj, tau_full, float(tau_full.sum()), result)


def dump_subproblem(problem: cs.ConvexProblem, start, path) -> None:
    """Write one audit row per constraint: kind, label, coefficients, start margin."""
    margins = cs.row_margins(problem, start)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("kind\tlabel\tcoefficients\tstart_margin\n")
        for eq in problem.eqs:
            fh.write(f"AffineEq\t{eq.label}\tidx={eq.idx} coef={eq.coef} rhs={eq.rhs!r}\t0\n")
        for row, m in zip(problem.rows, margins):
            kind = type(row).__name__
            parts = []
            for f_name in row.__dataclass_fields__:
                if f_name == "label":
                    continue
                parts.append(f"{f_name}={getattr(row, f_name)!r}")
            fh.write(f"{kind}\t{row.label}\t{' '.join(parts)}\t{m!r}\n")
