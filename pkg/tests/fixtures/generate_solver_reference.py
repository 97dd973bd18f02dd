"""Regenerate solver_reference.json: trusted optima for random small
trajectory subproblems, solved with cvxpy (Clarabel, SCS as fallback) as an
independent reference. Development-time tool only; cvxpy is not a package
dependency.

Run from the repository root:  python tests/fixtures/generate_solver_reference.py

Each entry records the scenario seed and slot count; the test regenerates the
identical subproblem through the package builders and compares its own
solver's objective against the frozen reference value.

Modeling notes. The mixed-sign log row is made DCP through the substitution
w = u1 / (1 + u1), a bijection from u1 > 0 onto (0, 1):

    -log2(1 + 1/u1)  ->  log2(w)
    rho_r * u1       ->  rho_r * (inv_pos(1 - w) - 1)
    u1 >= 1/v2       ->  w_scale * v2_scale * v2_t + w_scale >= inv_pos(w_t)

so the optimal objective is unchanged. Every variable is additionally
whitened by its local-point magnitude (positions by 1000) and every row is
divided by its dominant constant; without this the conic solvers lose the
problem at SNR-slack dynamic ranges of 1e12.
"""
import json
import math
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from _support import random_scenario  # noqa: E402

from eastopt.blocklength_opt import optimize_plan  # noqa: E402
from eastopt.bsca_driver import initial_point  # noqa: E402
from eastopt.sca_trajectory import (init_slacks, subproblem_coefficients,  # noqa: E402
                                    tangent_a0, tangent_a1, _tau_cap)

LN2 = math.log(2.0)
POS = 1000.0  # position scale, m


def _log1p_scaled(var_t, scale):
    """log(1 + scale * var_t) as log(scale) + log(var_t + 1/scale)."""
    return math.log(scale) + cp.log(var_t + 1.0 / scale)


def reference_objective(scn, traj, plan, slacks):
    n = scn.n_slots
    slots = slacks.slots
    k = slots.size
    coef = subproblem_coefficients(scn, traj, plan, slots)

    L1, L2, B1 = slacks.lambda1, slacks.lambda2, slacks.beta1
    O1, O2, P1 = slacks.omega1, slacks.omega2, slacks.psi1
    V1, V2, U1 = slacks.v1, slacks.v2, slacks.u1
    W = U1 / (1.0 + U1)
    TS = np.maximum(slacks.tau, 1.0)

    x = cp.Variable(n)           # position / POS
    y = cp.Variable(n)
    tau = cp.Variable(k, nonneg=True)
    lam1 = cp.Variable(k, nonneg=True)
    lam2 = cp.Variable(k, nonneg=True)
    bet1 = cp.Variable(k, nonneg=True)
    om1 = cp.Variable(k, nonneg=True)
    om2 = cp.Variable(k, nonneg=True)
    psi1 = cp.Variable(k, nonneg=True)
    ww = cp.Variable(k, nonneg=True)
    v1 = cp.Variable(k, nonneg=True)
    v2 = cp.Variable(k, nonneg=True)

    h2 = scn.altitude ** 2
    cons = [x[0] == scn.q_i[0] / POS, y[0] == scn.q_i[1] / POS,
            x[n - 1] == scn.q_f[0] / POS, y[n - 1] == scn.q_f[1] / POS]
    cap = _tau_cap(scn)
    cons.append(cp.multiply(TS, tau) <= cap)
    step = scn.v_max * scn.delta_t / POS
    for i in range(n - 1):
        cons.append(cp.norm(cp.hstack([x[i + 1] - x[i], y[i + 1] - y[i]])) <= step)

    for j, s in enumerate(slots):
        s = int(s)
        q_lo = traj.waypoints[s]
        d2a = scn.rho_a * L2[j]          # source distance squared at the anchor
        d2b = scn.rho_r * O2[j]
        d2e = scn.rho_r * U1[j]
        cons += [
            # uplink rate row
            _log1p_scaled(lam1[j], L1[j]) / LN2 - coef.b0[j] * B1[j] * bet1[j]
            >= coef.b2[j] * TS[j] * tau[j] + coef.b1[j],
            # uplink distance row, divided by its anchor distance squared
            (cp.square(x[s] - scn.q_a[0] / POS)
             + cp.square(y[s] - scn.q_a[1] / POS)) * (POS ** 2 / d2a)
            <= lam2[j] - h2 / d2a,
            # uplink product row (anchor product is ~1)
            (L2[j] * L1[j] * lam1[j] + L1[j] * L2[j] * lam2[j]) / (L1[j] * L2[j]) ** 2
            <= 3.0 / (L1[j] * L2[j]) - 1.0,
            # uplink dispersion tangent
            cp.log(bet1[j]) + math.log(B1[j]) + _log1p_scaled(lam1[j], L1[j])
            >= tangent_a0(L1[j]) + tangent_a1(L1[j]) * L1[j] * (lam1[j] - 1.0),
            # downlink rate row
            (_log1p_scaled(om1[j], O1[j]) + math.log(W[j]) + cp.log(ww[j])) / LN2
            >= coef.c0[j] * P1[j] * psi1[j] + coef.c1[j] * V1[j] * v1[j]
            + coef.c2[j] * TS[j] * tau[j],
            # downlink product row
            (O2[j] * O1[j] * om1[j] + O1[j] * O2[j] * om2[j]) / (O1[j] * O2[j]) ** 2
            <= 3.0 / (O1[j] * O2[j]) - 1.0,
            # downlink distance row
            (cp.square(x[s] - scn.q_b[0] / POS)
             + cp.square(y[s] - scn.q_b[1] / POS)) * (POS ** 2 / d2b)
            <= om2[j] - h2 / d2b,
            # downlink dispersion tangent
            cp.log(psi1[j]) + math.log(P1[j]) + _log1p_scaled(om1[j], O1[j])
            >= tangent_a0(O1[j]) + tangent_a1(O1[j]) * O1[j] * (om1[j] - 1.0),
            # eavesdropper distance row, in w and divided by its anchor value
            (cp.inv_pos(1.0 - W[j] * ww[j]) - 1.0) * (scn.rho_r / d2e)
            <= (2.0 * (q_lo[0] - scn.q_e[0]) * POS * x[s]
                + 2.0 * (q_lo[1] - scn.q_e[1]) * POS * y[s]
                + 2.0 * (q_lo[2] - scn.q_e[2]) * scn.altitude
                + coef.d0_lo[j]) / d2e,
            # eavesdropper dispersion tangent
            cp.log(v1[j]) + math.log(V1[j]) + _log1p_scaled(v2[j], V2[j])
            >= tangent_a0(V2[j]) + tangent_a1(V2[j]) * V2[j] * (v2[j] - 1.0),
            # reciprocal coupling: u1 >= 1/v2 in (w, v2) variables
            W[j] * V2[j] * v2[j] + W[j] >= cp.inv_pos(ww[j]),
            ww[j] <= 0.999999 / W[j],
        ]
    prob = cp.Problem(cp.Maximize(cp.sum(cp.multiply(TS, tau))), cons)
    attempts = (("CLARABEL", {}),
                ("SCS", {"eps": 1e-9, "max_iters": 200_000}))
    for solver, kwargs in attempts:
        try:
            prob.solve(solver=solver, **kwargs)
        except Exception:
            continue
        if prob.status == cp.OPTIMAL and prob.value is not None:
            return float(prob.value), solver
    return None, None


def main():
    entries = []
    seed = 0
    while len(entries) < 24 and seed < 400:
        seed += 1
        rng = np.random.default_rng(seed)
        n_slots = int(rng.integers(3, 6))
        try:
            scn = random_scenario(rng, n_slots=n_slots, l_max=200)
            traj, _ = initial_point(scn)
            plan = optimize_plan(scn, traj)
            slacks = init_slacks(scn, traj, plan)
        except Exception:
            continue
        if slacks.slots.size == 0:
            continue
        value, solver = reference_objective(scn, traj, plan, slacks)
        if value is None:
            print(f"seed {seed}: reference solve failed, skipped")
            continue
        entries.append({"seed": seed, "n_slots": n_slots,
                        "reference_objective": value, "reference_solver": solver})
        print(f"seed {seed}: N={n_slots} K={slacks.slots.size} "
              f"ref={value:.9f} ({solver})")
    out = Path(__file__).with_name("solver_reference.json")
    out.write_text(json.dumps({"description":
                               "reference optima for random small trajectory "
                               "subproblems (see generate_solver_reference.py)",
                               "entries": entries}, indent=2) + "\n")
    print(f"wrote {len(entries)} entries to {out}")


if __name__ == "__main__":
    main()
