"""Finite-blocklength secrecy rates and per-slot secrecy throughput.

At short blocklength the achievable secrecy rate of a link is the log-SNR gap
minus dispersion penalties that shrink like 1/sqrt(l):

    R = log2((1+g_main)/(1+g_eve)) - sqrt(V(g_main)/l)*Qinv(eps)
                                   - sqrt(V(g_eve)/l)*Qinv(eta)

with V the channel dispersion. Rates may be negative here; clamping to zero
happens only at the throughput level, where a slot with a zero blocklength is
a valid "no transmission" state worth zero throughput.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scenario import Link, Scenario, ScenarioError, Trajectory, avg_eve_uplink_snr, snr

LOG2_E = math.log2(math.e)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def dispersion(gamma):
    """Channel dispersion V(gamma) = (log2 e)^2 * (1 - (1+gamma)^-2), in (bits/use)^2.

    Strictly increasing in gamma, zero at gamma = 0, bounded by (log2 e)^2.
    Accepts scalars or arrays.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("dispersion requires gamma >= 0")
    out = (LOG2_E ** 2) * (1.0 - (1.0 + g) ** -2)
    return float(out) if np.isscalar(gamma) or out.ndim == 0 else out


def dispersion_root(gamma):
    """sqrt(1 - (1+gamma)^-2), the dispersion square root normalized by log2 e."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("dispersion_root requires gamma >= 0")
    out = np.sqrt(1.0 - (1.0 + g) ** -2)
    return float(out) if np.isscalar(gamma) or out.ndim == 0 else out


def gaussian_q(x: float) -> float:
    """Complementary Gaussian CDF Q(x) = 0.5 * erfc(x / sqrt(2))."""
    return 0.5 * math.erfc(x / _SQRT2)


@lru_cache(maxsize=64)
def q_inv(p: float) -> float:
    """Inverse of the complementary Gaussian CDF, bisection plus Newton polish.

    Accurate to well below 1e-10 in x; no special-function dependency beyond
    the standard library's erfc.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"q_inv requires p in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inv(1.0 - p)
    lo, hi = 0.0, 1.0
    while gaussian_q(hi) > p:
        hi *= 2.0
        if hi > 1e6:  # pragma: no cover - p this small underflows Q first
            break
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gaussian_q(mid) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    x = 0.5 * (lo + hi)
    for _ in range(60):
        pdf = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
        if pdf == 0.0:
            break
        step = (gaussian_q(x) - p) / pdf
        x += step
        if abs(step) <= 1e-13 * max(1.0, abs(x)):
            break
    return x


def secrecy_rate_ul(scn: Scenario, q_r, l_u) -> float:
    """Uplink secrecy rate (bits/channel use) with the eavesdropper fading
    replaced by its mean; may be negative. `l_u` may be an array of candidate
    blocklengths."""
    l = np.asarray(l_u, dtype=float)
    if np.any(l < 1):
        raise ValueError("secrecy_rate_ul requires l_u >= 1")
    g_r = snr(scn, q_r, Link.UPLINK_RELAY)
    g_ae = avg_eve_uplink_snr(scn)
    out = (np.log2((1.0 + g_r) / (1.0 + g_ae))
           - q_inv(scn.eps_dec) * np.sqrt(dispersion(g_r) / l)
           - q_inv(scn.eta_leak) * np.sqrt(dispersion(g_ae) / l))
    return float(out) if out.ndim == 0 else out


def secrecy_rate_dl(scn: Scenario, q_r, l_d) -> float:
    """Downlink secrecy rate (bits/channel use) against the eavesdropper's
    line-of-sight tap on the relay transmission; may be negative."""
    l = np.asarray(l_d, dtype=float)
    if np.any(l < 1):
        raise ValueError("secrecy_rate_dl requires l_d >= 1")
    g_b = snr(scn, q_r, Link.DOWNLINK_BOB)
    g_re = snr(scn, q_r, Link.DOWNLINK_EVE)
    out = (np.log2((1.0 + g_b) / (1.0 + g_re))
           - q_inv(scn.eps_dec) * np.sqrt(dispersion(g_b) / l)
           - q_inv(scn.eta_leak) * np.sqrt(dispersion(g_re) / l))
    return float(out) if out.ndim == 0 else out


def _rate_ul_under_fading(scn: Scenario, q_r, l_u: float, zeta: np.ndarray) -> np.ndarray:
    """Per-sample uplink secrecy rate for explicit eavesdropper fading draws."""
    g_r = snr(scn, q_r, Link.UPLINK_RELAY)
    g_ae = avg_eve_uplink_snr(scn) * np.asarray(zeta, dtype=float)
    return (np.log2((1.0 + g_r) / (1.0 + g_ae))
            - q_inv(scn.eps_dec) * np.sqrt(dispersion(g_r) / l_u)
            - q_inv(scn.eta_leak) * np.sqrt(dispersion(g_ae) / l_u))


def mc_secrecy_rate_ul(scn: Scenario, q_r, l_u, n_samples: int, rng_seed: int) -> float:
    """Monte-Carlo estimate of the exact expected uplink secrecy rate.

    Averages the bracketed rate expression over eavesdropper fading draws.
    This is the validation oracle for the mean-SNR approximation used by
    `secrecy_rate_ul`; the optimizer never calls it.
    """
    if l_u < 1:
        raise ValueError("mc_secrecy_rate_ul requires l_u >= 1")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    zeta = rng.exponential(scale=1.0, size=int(n_samples))
    return float(np.mean(_rate_ul_under_fading(scn, q_r, float(l_u), zeta)))


def slot_throughput(scn: Scenario, r_u: float, r_d: float, l_u: int, l_d: int) -> float:
    """Secrecy throughput of one slot, bits/second.

    Zero when either hop has no channel uses; otherwise the relay forwards
    min(r_u*l_u, r_d*l_d) secure bits (clamped at zero) once per slot.
    """
    if l_u < 0 or l_d < 0:
        raise ValueError("blocklengths must be nonnegative")
    if l_u == 0 or l_d == 0:
        return 0.0
    return (1.0 - scn.eps_dec) / scn.delta_t * max(0.0, min(r_u * l_u, r_d * l_d))


@dataclass(frozen=True)
class BlocklengthPlan:
    """Per-slot uplink/downlink channel-use counts under the latency cap."""

    l_u: np.ndarray    # (n_slots,) nonnegative ints
    l_d: np.ndarray

    def __post_init__(self):
        for name in ("l_u", "l_d"):
            arr = np.asarray(getattr(self, name))
            if arr.ndim != 1:
                raise ScenarioError(f"{name} must be one-dimensional")
            if not np.issubdtype(arr.dtype, np.integer):
                if not np.all(arr == np.round(arr)):
                    raise ScenarioError(f"{name} must be integral")
                arr = arr.astype(np.int64)
            else:
                arr = arr.astype(np.int64)
            if np.any(arr < 0):
                raise ScenarioError(f"{name} must be nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.l_u.shape != self.l_d.shape:
            raise ScenarioError("l_u and l_d must have the same length")

    @property
    def n_slots(self) -> int:
        return self.l_u.shape[0]


def check_plan(scn: Scenario, plan: BlocklengthPlan) -> None:
    """Validate slot count and the per-slot total-blocklength cap."""
    if plan.n_slots != scn.n_slots:
        raise ScenarioError(f"plan has {plan.n_slots} slots, scenario has {scn.n_slots}")
    total = plan.l_u + plan.l_d
    worst = int(np.argmax(total))
    if total[worst] > scn.l_max:
        raise ScenarioError(
            f"latency cap violated at slot {worst + 1}: "
            f"{total[worst]} channel uses > l_max = {scn.l_max}")


@dataclass(frozen=True)
class SlotMetrics:
    """Per-slot SNRs, secrecy rates, and secrecy throughput."""

    gamma_r: float
    gamma_bar_ae: float
    gamma_b: float
    gamma_re: float
    r_u: float          # bits/use; 0.0 recorded for a silent hop
    r_d: float
    b_s: float          # bits/second, clamped at zero


def east(scn: Scenario, traj: Trajectory, plan: BlocklengthPlan):
    """Effective average secrecy throughput of a (trajectory, plan) pair.

    Returns (east_bps, per_slot_metrics). The average runs over all slots,
    silent slots contributing zero.
    """
    if traj.n_slots != scn.n_slots or plan.n_slots != scn.n_slots:
        raise ScenarioError("trajectory/plan slot count does not match the scenario")
    g_ae = avg_eve_uplink_snr(scn)
    metrics = []
    total = 0.0
    for n in range(scn.n_slots):
        q = traj.waypoints[n]
        g_r = snr(scn, q, Link.UPLINK_RELAY)
        g_b = snr(scn, q, Link.DOWNLINK_BOB)
        g_re = snr(scn, q, Link.DOWNLINK_EVE)
        lu, ld = int(plan.l_u[n]), int(plan.l_d[n])
        if lu == 0 or ld == 0:
            r_u = r_d = b_s = 0.0
        else:
            r_u = secrecy_rate_ul(scn, q, lu)
            r_d = secrecy_rate_dl(scn, q, ld)
            b_s = slot_throughput(scn, r_u, r_d, lu, ld)
        total += b_s
        metrics.append(SlotMetrics(g_r, g_ae, g_b, g_re, r_u, r_d, b_s))
    return total / scn.n_slots, metrics
