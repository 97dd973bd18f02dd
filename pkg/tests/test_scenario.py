"""Geometry, SNR, and validation behavior of the scenario layer."""
import numpy as np
import pytest

from eastopt.scenario import (Link, Scenario, ScenarioError, Trajectory,
                              avg_eve_uplink_snr, check_trajectory, los_gain,
                              sample_eve_uplink_snr, snr)

from _support import table1_printed_scenario


class TestLosGain:
    def test_reference_distance_identity(self):
        assert los_gain([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], beta0=1.0) == 1.0

    def test_overhead_position(self):
        # beta0 1e-7 at 60 m vertical separation
        assert los_gain([0, 0, 60.0], [0, 0, 0.0], 1e-7) == pytest.approx(
            1e-7 / 3600.0, rel=1e-12)

    def test_benchmark_start_to_source(self):
        g = los_gain([-500.0, -1000.0, 60.0], [-700.0, 0.0, 0.0], 1e-7)
        assert g == pytest.approx(9.582215408202376e-14, rel=1e-12)

    def test_coincident_points_rejected(self):
        with pytest.raises(ScenarioError):
            los_gain([1.0, 2.0, 0.0], [1.0, 2.0, 0.0], 1e-7)

    def test_strictly_decreasing_in_distance(self):
        gains = [los_gain([0, 0, z], [0, 0, 0], 1e-7) for z in (10, 20, 40, 80)]
        assert all(a > b for a, b in zip(gains, gains[1:]))
        # doubling the distance quarters the gain
        assert gains[0] / gains[1] == pytest.approx(4.0, rel=1e-12)


class TestSnr:
    def test_reference_snr_accessors(self):
        scn = table1_printed_scenario()
        assert scn.rho_a == pytest.approx(1e9, rel=1e-12)
        assert scn.rho_r == pytest.approx(1e9, rel=1e-12)

    def test_uplink_at_start_waypoint(self):
        scn = table1_printed_scenario()
        got = snr(scn, scn.q_i, Link.UPLINK_RELAY)
        assert got == pytest.approx(958.2215408202377, rel=1e-12)

    def test_downlink_overhead_destination(self):
        scn = table1_printed_scenario()
        got = snr(scn, [700.0, 0.0, 60.0], Link.DOWNLINK_BOB)
        assert got == pytest.approx(1e9 / 3600.0, rel=1e-12)

    def test_inverse_square_scaling(self):
        scn = table1_printed_scenario()
        near = snr(scn, [0.0, 0.0, 100.0], Link.DOWNLINK_EVE)
        # doubling the separation from the eavesdropper quarters the SNR
        q_near = np.array([0.0, 0.0, 100.0])
        far = scn.q_e + 2.0 * (q_near - scn.q_e)
        assert snr(scn, far, Link.DOWNLINK_EVE) == pytest.approx(near / 4.0, rel=1e-12)

    def test_link_independence(self):
        scn = table1_printed_scenario()
        moved = table1_printed_scenario(q_b=np.array([0.0, 500.0, 0.0]),
                                        q_e=np.array([300.0, -300.0, 0.0]))
        q = [10.0, 20.0, 60.0]
        assert snr(scn, q, Link.UPLINK_RELAY) == snr(moved, q, Link.UPLINK_RELAY)

    def test_ground_level_position_rejected(self):
        scn = table1_printed_scenario()
        with pytest.raises(ScenarioError):
            snr(scn, [0.0, 0.0, 0.0], Link.UPLINK_RELAY)


class TestAvgEveUplinkSnr:
    def test_benchmark_value(self):
        scn = table1_printed_scenario()
        assert avg_eve_uplink_snr(scn) == pytest.approx(1.2760615165803304, rel=1e-12)

    def test_identity_case(self):
        scn = table1_printed_scenario(
            q_e=np.array([-700.0, 1.0, 0.0]), alpha=2.001, p_a=1e-17 / 1e-7)
        # rho_a == 1, unit distance, alpha irrelevant at distance 1
        assert avg_eve_uplink_snr(scn) == pytest.approx(1.0, rel=1e-9)

    def test_linear_in_source_power(self):
        base = avg_eve_uplink_snr(table1_printed_scenario())
        doubled = avg_eve_uplink_snr(table1_printed_scenario(p_a=0.2))
        assert doubled == pytest.approx(2.0 * base, rel=1e-12)

    def test_coincident_nodes_rejected(self):
        scn = table1_printed_scenario(q_e=np.array([-700.0, 0.0, 0.0]))
        with pytest.raises(ScenarioError):
            avg_eve_uplink_snr(scn)


class TestEveSampling:
    def test_reproducible(self):
        scn = table1_printed_scenario()
        a = sample_eve_uplink_snr(scn, rng_seed=7, n_samples=100)
        b = sample_eve_uplink_snr(scn, rng_seed=7, n_samples=100)
        assert np.array_equal(a, b)

    def test_nonnegative_support(self):
        scn = table1_printed_scenario()
        assert np.all(sample_eve_uplink_snr(scn, 3, 10_000) >= 0.0)

    def test_sample_mean_matches_average(self):
        scn = table1_printed_scenario()
        mean = float(np.mean(sample_eve_uplink_snr(scn, 11, 1_000_000)))
        assert mean == pytest.approx(avg_eve_uplink_snr(scn), rel=5e-3)


class TestScenarioValidation:
    def test_alpha_range_enforced(self):
        with pytest.raises(ScenarioError, match="alpha"):
            table1_printed_scenario(alpha=5.0)
        with pytest.raises(ScenarioError, match="alpha"):
            table1_printed_scenario(alpha=2.0)
        table1_printed_scenario(alpha=4.0)  # boundary included

    def test_slot_timing_consistency(self):
        with pytest.raises(ScenarioError, match="delta_t"):
            table1_printed_scenario(n_slots=99)

    def test_probability_targets(self):
        with pytest.raises(ScenarioError, match="eps_dec"):
            table1_printed_scenario(eps_dec=0.5)
        with pytest.raises(ScenarioError, match="eta_leak"):
            table1_printed_scenario(eta_leak=0.0)

    def test_unreachable_endpoints_fail_fast(self):
        with pytest.raises(ScenarioError, match="unreachable"):
            table1_printed_scenario(v_max=0.1)

    def test_ground_nodes_must_be_at_zero(self):
        with pytest.raises(ScenarioError, match="q_e"):
            table1_printed_scenario(q_e=np.array([0.0, 0.0, 10.0]))

    def test_endpoints_must_be_at_altitude(self):
        with pytest.raises(ScenarioError, match="q_i"):
            table1_printed_scenario(q_i=np.array([-500.0, -1000.0, 50.0]))


class TestTrajectory:
    def _line(self, scn, n=None):
        n = n or scn.n_slots
        w = np.linspace(scn.q_i, scn.q_f, n)
        return Trajectory(waypoints=w)

    def test_valid_line_accepted(self):
        scn = table1_printed_scenario()
        check_trajectory(scn, self._line(scn))

    def test_wrong_endpoint_rejected(self):
        scn = table1_printed_scenario()
        w = np.linspace(scn.q_i, scn.q_f, scn.n_slots)
        w[-1, 0] += 5.0
        with pytest.raises(ScenarioError, match="end"):
            check_trajectory(scn, Trajectory(waypoints=w))

    def test_speed_limit_rejected(self):
        scn = table1_printed_scenario()
        w = np.linspace(scn.q_i, scn.q_f, scn.n_slots).copy()
        w[50, 0] += 100.0
        with pytest.raises(ScenarioError, match="speed limit"):
            check_trajectory(scn, Trajectory(waypoints=w))

    def test_altitude_enforced(self):
        scn = table1_printed_scenario()
        w = np.linspace(scn.q_i, scn.q_f, scn.n_slots).copy()
        w[10, 2] = 70.0
        with pytest.raises(ScenarioError, match="altitude"):
            check_trajectory(scn, Trajectory(waypoints=w))

    def test_waypoints_immutable(self):
        scn = table1_printed_scenario()
        traj = self._line(scn)
        with pytest.raises(ValueError):
            traj.waypoints[0, 0] = 1.0

    def test_speeds_shape_and_endpoint_convention(self):
        scn = table1_printed_scenario()
        sp = self._line(scn).speeds(scn.delta_t)
        assert sp.shape == (scn.n_slots,)
        assert sp[-1] == sp[-2]
