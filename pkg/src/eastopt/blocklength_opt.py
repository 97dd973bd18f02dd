"""Exact per-slot blocklength split by exhaustive search.

With the trajectory fixed, slots decouple and the per-slot problem reduces to
picking the uplink share x of the latency budget. Secrecy throughput is
nondecreasing in the total blocklength, so the budget is spent fully whenever
any split earns positive throughput; otherwise the slot stays silent.
"""
from __future__ import annotations

import numpy as np

from .fbl_metrics import BlocklengthPlan, secrecy_rate_dl, secrecy_rate_ul
from .scenario import Scenario, Trajectory


def optimize_slot_blocklength(scn: Scenario, q_r) -> tuple[int, int, float]:
    """Best (l_u, l_d, throughput_bps) for one slot at relay position q_r.

    Evaluates every split l_u = x, l_d = l_max - x for x in {0, ..., l_max}.
    Ties take the smallest l_u. If no split earns positive throughput the slot
    is silent: (0, 0, 0.0).
    """
    big_l = scn.l_max
    x = np.arange(1, big_l, dtype=np.int64)
    r_u = secrecy_rate_ul(scn, q_r, x)
    r_d = secrecy_rate_dl(scn, q_r, big_l - x)
    # Same expression tree as slot_throughput so results agree bitwise.
    vals = (1.0 - scn.eps_dec) / scn.delta_t * np.maximum(
        0.0, np.minimum(r_u * x, r_d * (big_l - x)))
    best = int(np.argmax(vals))  # first maximum = smallest l_u
    if vals[best] <= 0.0:
        return 0, 0, 0.0
    return int(x[best]), int(big_l - x[best]), float(vals[best])


def optimize_plan(scn: Scenario, traj: Trajectory) -> BlocklengthPlan:
    """Apply the exhaustive per-slot search independently to every waypoint."""
    l_u = np.zeros(scn.n_slots, dtype=np.int64)
    l_d = np.zeros(scn.n_slots, dtype=np.int64)
    for n in range(scn.n_slots):
        l_u[n], l_d[n], _ = optimize_slot_blocklength(scn, traj.waypoints[n])
    return BlocklengthPlan(l_u=l_u, l_d=l_d)
