"""Secrecy-throughput optimizer for a short-packet UAV relay.

Joint per-slot coding-blocklength and trajectory design via alternating
exact blocklength search and convex trajectory steps.
"""

from .blocklength_opt import optimize_plan, optimize_slot_blocklength
from .bsca_driver import (RunRecord, Scheme, Termination, initial_point,
                          run_baseline, run_bdft, run_jtbd, run_scheme, run_tdfb)
from .cli import ExperimentConfig, load_scenario, run_experiment, validate_jensen
from .fbl_metrics import (BlocklengthPlan, SlotMetrics, dispersion, east,
                          gaussian_q, mc_secrecy_rate_ul, q_inv,
                          secrecy_rate_dl, secrecy_rate_ul, slot_throughput)
from .scenario import (Link, Scenario, ScenarioError, Trajectory,
                       avg_eve_uplink_snr, check_trajectory, los_gain,
                       sample_eve_uplink_snr, snr)

__version__ = "0.1.0"

__all__ = [
    "BlocklengthPlan", "ExperimentConfig", "Link", "RunRecord", "Scenario",
    "ScenarioError", "Scheme", "SlotMetrics", "Termination", "Trajectory",
    "avg_eve_uplink_snr", "check_trajectory", "dispersion", "east",
    "gaussian_q", "initial_point", "load_scenario", "los_gain",
    "mc_secrecy_rate_ul", "optimize_plan", "optimize_slot_blocklength",
    "q_inv", "run_baseline", "run_bdft", "run_experiment", "run_jtbd",
    "run_scheme", "run_tdfb", "sample_eve_uplink_snr", "secrecy_rate_dl",
    "secrecy_rate_ul", "slot_throughput", "snr", "validate_jensen",
    "__version__",
]
