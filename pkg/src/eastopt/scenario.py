"""Static mission geometry, radio constants, and per-position SNR evaluation.

A :class:`Scenario` pins down everything that does not change during a flight:
ground-node positions, relay endpoints and altitude, powers, noise, timing,
and the reliability/leakage targets. All quantities are stored linear-scale
(watts, linear gains); dB conversion happens once at file load, never here.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ScenarioError(ValueError):
    """A scenario, trajectory, or blocklength plan violates a validity rule."""


class Link(enum.Enum):
    """The three relay-centric links with position-dependent SNR."""

    UPLINK_RELAY = "uplink_relay"    # source -> relay
    DOWNLINK_BOB = "downlink_bob"    # relay -> destination
    DOWNLINK_EVE = "downlink_eve"    # relay -> eavesdropper


def _point3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ScenarioError(f"{name} must be a 3D point, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name} has non-finite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Scenario:
    """Immutable physical and system parameters of one relay mission.

    Positions are full 3D (meters): ground nodes at z = 0, relay endpoints at
    z = altitude. Powers in watts, gains linear, noise in watts.
    """

    q_a: np.ndarray          # source
    q_b: np.ndarray          # destination
    q_e: np.ndarray          # eavesdropper
    q_i: np.ndarray          # relay start waypoint
    q_f: np.ndarray          # relay final waypoint
    altitude: float          # fixed flight altitude, m
    p_a: float               # source transmit power, W
    p_r: float               # relay transmit power, W
    beta0: float             # reference channel gain at 1 m, linear
    alpha: float             # terrestrial path-loss exponent
    sigma2: float            # noise power, W
    bandwidth: float         # channel bandwidth, Hz
    delta_t: float           # timeslot duration, s
    t_total: float           # mission time, s
    n_slots: int             # timeslot count
    l_max: int               # max total channel uses per slot
    v_max: float             # max flight speed, m/s
    eps_dec: float           # decoding error probability target
    eta_leak: float          # information leakage target
    eps_conv: float          # convergence threshold for the outer loop, bps

    def __post_init__(self):
        for name in ("q_a", "q_b", "q_e", "q_i", "q_f"):
            object.__setattr__(self, name, _point3(getattr(self, name), name))
        for name in ("p_a", "p_r", "beta0", "sigma2", "bandwidth", "altitude",
                     "v_max", "delta_t", "t_total"):
            if not getattr(self, name) > 0.0:
                raise ScenarioError(f"{name} must be strictly positive")
        if not (isinstance(self.l_max, (int, np.integer)) and self.l_max > 0):
            raise ScenarioError("l_max must be a positive integer")
        if not (isinstance(self.n_slots, (int, np.integer)) and self.n_slots >= 2):
            raise ScenarioError("n_slots must be an integer >= 2")
        if abs(self.n_slots * self.delta_t - self.t_total) > 1e-9 * self.t_total:
            raise ScenarioError(
                f"n_slots * delta_t must equal t_total exactly "
                f"({self.n_slots} * {self.delta_t} != {self.t_total})")
        if not (2.0 < self.alpha <= 4.0):
            raise ScenarioError(f"path-loss exponent must satisfy 2 < alpha <= 4, got {self.alpha}")
        if not (0.0 < self.eps_dec < 0.5):
            raise ScenarioError("eps_dec must lie in (0, 0.5)")
        if not (0.0 < self.eta_leak < 0.5):
            raise ScenarioError("eta_leak must lie in (0, 0.5)")
        if self.eps_conv <= 0.0:
            raise ScenarioError("eps_conv must be strictly positive")
        for name in ("q_a", "q_b", "q_e"):
            if getattr(self, name)[2] != 0.0:
                raise ScenarioError(f"ground node {name} must have z = 0")
        for name in ("q_i", "q_f"):
            if abs(getattr(self, name)[2] - self.altitude) > 1e-9:
                raise ScenarioError(f"relay endpoint {name} must have z = altitude")
        reach = (self.n_slots - 1) * self.v_max * self.delta_t
        dist = float(np.linalg.norm(self.q_f - self.q_i))
        if dist > reach + 1e-9:
            raise ScenarioError(
                f"endpoints unreachable: |q_f - q_i| = {dist:.3f} m exceeds "
                f"(n_slots-1)*v_max*delta_t = {reach:.3f} m")

    @property
    def rho_a(self) -> float:
        """Source reference SNR p_a * beta0 / sigma2 (linear)."""
        return self.p_a * self.beta0 / self.sigma2

    @property
    def rho_r(self) -> float:
        """Relay reference SNR p_r * beta0 / sigma2 (linear)."""
        return self.p_r * self.beta0 / self.sigma2


@dataclass(frozen=True)
class Trajectory:
    """Ordered relay waypoints, one per timeslot, all at the mission altitude."""

    waypoints: np.ndarray    # (n_slots, 3), meters

    def __post_init__(self):
        arr = np.asarray(self.waypoints, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ScenarioError(f"waypoints must be (N, 3), got {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "waypoints", arr)

    @property
    def n_slots(self) -> int:
        return self.waypoints.shape[0]

    def speeds(self, delta_t: float) -> np.ndarray:
        """Per-slot speed |q[n+1]-q[n]|/delta_t; the last slot repeats the previous value."""
        steps = np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1) / delta_t
        if steps.size == 0:
            return np.zeros(1)
        return np.append(steps, steps[-1])


def check_trajectory(scn: Scenario, traj: Trajectory, tol: float = 1e-6) -> None:
    """Validate endpoint pinning, fixed altitude, and the per-slot speed limit.

    Raises ScenarioError naming the first violated rule.
    """
    w = traj.waypoints
    if w.shape[0] != scn.n_slots:
        raise ScenarioError(f"trajectory has {w.shape[0]} waypoints, scenario has {scn.n_slots} slots")
    if np.max(np.abs(w[:, 2] - scn.altitude)) > tol:
        raise ScenarioError("trajectory leaves the fixed flight altitude")
    if np.linalg.norm(w[0] - scn.q_i) > tol:
        raise ScenarioError("trajectory does not start at q_i")
    if np.linalg.norm(w[-1] - scn.q_f) > tol:
        raise ScenarioError("trajectory does not end at q_f")
    steps = np.linalg.norm(np.diff(w, axis=0), axis=1)
    limit = scn.v_max * scn.delta_t + tol
    worst = int(np.argmax(steps))
    if steps[worst] > limit:
        raise ScenarioError(
            f"speed limit violated between slots {worst + 1} and {worst + 2}: "
            f"step {steps[worst]:.6f} m > {limit:.6f} m")


def los_gain(q_r, q_j, beta0: float) -> float:
    """Line-of-sight channel power gain beta0 / |q_r - q_j|^2 (linear)."""
    d2 = float(np.sum((np.asarray(q_r, dtype=float) - np.asarray(q_j, dtype=float)) ** 2))
    if d2 <= 0.0:
        raise ScenarioError("coincident endpoints have no defined path gain")
    return beta0 / d2


def snr(scn: Scenario, q_r, link: Link) -> float:
    """Received SNR (linear) at the far end of `link` for relay position q_r."""
    q_r = np.asarray(q_r, dtype=float)
    if q_r[2] <= 0.0:
        raise ScenarioError("relay position must be strictly above ground")
    if link is Link.UPLINK_RELAY:
        return scn.rho_a / float(np.sum((q_r - scn.q_a) ** 2))
    if link is Link.DOWNLINK_BOB:
        return scn.rho_r / float(np.sum((q_r - scn.q_b) ** 2))
    if link is Link.DOWNLINK_EVE:
        return scn.rho_r / float(np.sum((q_r - scn.q_e) ** 2))
    raise ValueError(f"unknown link {link!r}")


def avg_eve_uplink_snr(scn: Scenario) -> float:
    """Mean eavesdropper SNR on the source uplink: rho_a / |q_a - q_e|^alpha.

    Constant over the mission since both nodes are static; the fading factor
    has unit mean.
    """
    d = float(np.linalg.norm(scn.q_a - scn.q_e))
    if d <= 0.0:
        raise ScenarioError("source and eavesdropper coincide")
    return scn.rho_a / d ** scn.alpha


def sample_eve_uplink_snr(scn: Scenario, rng_seed: int, n_samples: int = 1) -> np.ndarray:
    """Draw eavesdropper uplink SNR samples gamma_bar * zeta, zeta ~ Exp(mean 1).

    Deterministic for a fixed seed; used only by the Monte-Carlo validation
    path, never by the optimizer.
    """
    rng = np.random.default_rng(rng_seed)
    zeta = rng.exponential(scale=1.0, size=int(n_samples))
    return avg_eve_uplink_snr(scn) * zeta
