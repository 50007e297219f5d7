import numpy as np
import pytest

from gsbf import netmodel
from gsbf.netmodel import (
    BeamformingSolution,
    ChannelRealization,
    NetworkConfig,
    TaskSelection,
    Topology,
    generate_channels,
    generate_topology,
    path_loss_db,
    power_breakdown,
    sinr_per_user,
    validate,
)


def small_cfg(**kw):
    return NetworkConfig.broadcast(2, 2, 2, gamma=2.0, **kw)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss_db(1.0) == pytest.approx(128.1)
        assert 10 ** (-path_loss_db(1.0) / 20) == pytest.approx(3.936e-7, rel=1e-3)

    def test_half_km(self):
        assert path_loss_db(0.5) == pytest.approx(128.1 + 37.6 * np.log10(0.5))
        assert path_loss_db(0.5) == pytest.approx(116.781, abs=1e-3)

    def test_monotone(self):
        assert path_loss_db(0.1) < path_loss_db(1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            path_loss_db(0.0)
        with pytest.raises(ValueError):
            path_loss_db(-1.0)


class TestTopology:
    def test_deterministic(self):
        cfg = small_cfg()
        a = generate_topology(7, cfg)
        b = generate_topology(7, cfg)
        np.testing.assert_array_equal(a.bs_positions, b.bs_positions)
        np.testing.assert_array_equal(a.user_positions, b.user_positions)

    def test_inside_region(self):
        cfg = NetworkConfig.broadcast(5, 50, 2, gamma=1.0, region_half_width_km=0.5)
        topo = generate_topology(3, cfg)
        for pts in (topo.bs_positions, topo.user_positions):
            assert np.all(pts >= -0.5) and np.all(pts <= 0.5)

    def test_uniform_mean(self):
        # 10^5 coordinates should average out near the region center
        cfg = NetworkConfig.broadcast(2, 50000, 1, gamma=1.0)
        topo = generate_topology(0, cfg)
        assert abs(topo.user_positions.mean()) < 0.01


class TestChannels:
    def test_unit_fading_at_1km(self):
        cfg = NetworkConfig.broadcast(1, 1, 2, gamma=1.0, channel_mode="pathloss")
        topo = Topology(bs_positions=np.array([[0.0, 0.0]]),
                        user_positions=np.array([[1.0, 0.0]]))
        ch = generate_channels(0, topo, cfg, small_scale=False)
        expected = 10 ** (-128.1 / 20)
        np.testing.assert_allclose(ch.h, expected, rtol=1e-12)

    def test_mean_channel_power(self):
        # Monte Carlo oracle: E||h_nk||^2 = L * 10^(-L(d)/10)
        k, ell, d = 50000, 2, 0.3
        cfg = NetworkConfig.broadcast(1, k, ell, gamma=1.0, channel_mode="pathloss")
        topo = Topology(bs_positions=np.array([[0.0, 0.0]]),
                        user_positions=np.tile([d, 0.0], (k, 1)))
        ch = generate_channels(1, topo, cfg)
        measured = np.mean(np.abs(ch.h) ** 2) * ell
        expected = ell * 10 ** (-path_loss_db(d) / 10)
        assert measured == pytest.approx(expected, rel=0.02)

    def test_deterministic(self):
        cfg = small_cfg()
        topo = generate_topology(0, cfg)
        a = generate_channels(5, topo, cfg)
        b = generate_channels(5, topo, cfg)
        np.testing.assert_array_equal(a.h, b.h)

    def test_distance_clamp(self):
        # user on top of a BS must not produce unbounded gain
        cfg = NetworkConfig.broadcast(1, 1, 1, gamma=1.0, channel_mode="pathloss")
        topo = Topology(bs_positions=np.zeros((1, 2)), user_positions=np.zeros((1, 2)))
        ch = generate_channels(0, topo, cfg, small_scale=False)
        expected = 10 ** (-path_loss_db(netmodel.MIN_DISTANCE_KM) / 20)
        np.testing.assert_allclose(np.abs(ch.h), expected)

    def test_aggregated_view(self):
        cfg = small_cfg()
        topo = generate_topology(0, cfg)
        ch = generate_channels(0, topo, cfg)
        np.testing.assert_array_equal(ch.aggregated(1),
                                      np.concatenate([ch.h[0, 1], ch.h[1, 1]]))


def indicator_form_sinr(v, h, selection_pairs, noise):
    """Independent evaluation of the indicator-set SINR expression."""
    n_bs, kk, _ = h.shape
    out = np.zeros(kk)
    for k in range(kk):
        sig = sum(h[n, k].conj() @ v[n, k] for n in range(n_bs)
                  if (n, k) in selection_pairs)
        interf = 0.0
        for l in range(kk):
            if l == k:
                continue
            term = sum(h[n, k].conj() @ v[n, l] for n in range(n_bs)
                       if (n, l) in selection_pairs)
            interf += abs(term) ** 2
        out[k] = abs(sig) ** 2 / (interf + noise[k])
    return out


class TestSinr:
    def test_single_user_no_interference(self):
        cfg = NetworkConfig.broadcast(1, 1, 2, gamma=1.0, noise_power=1.0)
        ch = ChannelRealization(h=np.array([[[1.0 + 0j, 0.0]]]))
        sol = BeamformingSolution(v=np.array([[[2.0 + 0j, 0.0]]]))
        assert sinr_per_user(sol, ch, cfg)[0] == pytest.approx(4.0)

    def test_zero_beamformer(self):
        cfg = small_cfg()
        topo = generate_topology(0, cfg)
        ch = generate_channels(0, topo, cfg)
        sol = BeamformingSolution(v=np.zeros_like(ch.h))
        np.testing.assert_array_equal(sinr_per_user(sol, ch, cfg), 0.0)

    def test_matches_indicator_form(self):
        rng = np.random.default_rng(42)
        cfg = small_cfg()
        topo = generate_topology(0, cfg)
        ch = generate_channels(0, topo, cfg)
        for _ in range(20):
            v = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
            # zero a random group so supports vary
            v[rng.integers(2), rng.integers(2)] = 0.0
            sol = BeamformingSolution(v=v)
            expected = indicator_form_sinr(v, ch.h, sol.support, cfg.noise_power)
            np.testing.assert_allclose(sinr_per_user(sol, ch, cfg), expected,
                                       rtol=1e-10)

    def test_dimension_mismatch(self):
        cfg = small_cfg()
        topo = generate_topology(0, cfg)
        ch = generate_channels(0, topo, cfg)
        sol = BeamformingSolution(v=np.zeros((3, 2, 2), dtype=complex))
        with pytest.raises(ValueError):
            sinr_per_user(sol, ch, cfg)


class TestPowerBreakdown:
    def test_single_task(self):
        cfg = NetworkConfig.broadcast(1, 1, 1, eta=0.25, p_compute=0.45, gamma=1.0)
        v = np.array([[[np.sqrt(0.5) + 0j]]])
        sol = BeamformingSolution(v=v)
        sel = TaskSelection.full(1, 1)
        pb = power_breakdown(sol, sel, cfg)
        assert pb.transmit_w == pytest.approx(2.0)
        assert pb.compute_w == pytest.approx(0.45)
        assert pb.total_w == pytest.approx(2.45)

    def test_empty(self):
        cfg = small_cfg()
        sol = BeamformingSolution(v=np.zeros((2, 2, 2), dtype=complex))
        pb = power_breakdown(sol, TaskSelection(pairs=frozenset()), cfg)
        assert (pb.transmit_w, pb.compute_w, pb.total_w) == (0.0, 0.0, 0.0)

    def test_reference_scale_compute(self):
        cfg = NetworkConfig.broadcast(8, 15, 2, p_compute=0.45, gamma=1.0)
        sol = BeamformingSolution(v=np.zeros((8, 15, 2), dtype=complex))
        sel = TaskSelection.full(8, 15)
        assert len(sel) == 120
        assert power_breakdown(sol, sel, cfg).compute_w == pytest.approx(54.0)

    def test_selection_mismatch(self):
        cfg = small_cfg()
        v = np.zeros((2, 2, 2), dtype=complex)
        v[1, 1, 0] = 0.3
        sol = BeamformingSolution(v=v)
        with pytest.raises(ValueError):
            power_breakdown(sol, TaskSelection(pairs=frozenset({(0, 0)})), cfg)

    def test_additive_over_disjoint_selections(self):
        cfg = small_cfg()
        rng = np.random.default_rng(3)
        v = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        va, vb = np.zeros_like(v), np.zeros_like(v)
        va[0], vb[1] = v[0], v[1]
        sel_a = TaskSelection(pairs=frozenset({(0, 0), (0, 1)}))
        sel_b = TaskSelection(pairs=frozenset({(1, 0), (1, 1)}))
        total = power_breakdown(BeamformingSolution(v=v), TaskSelection.full(2, 2), cfg)
        pa = power_breakdown(BeamformingSolution(v=va), sel_a, cfg)
        pb = power_breakdown(BeamformingSolution(v=vb), sel_b, cfg)
        assert pa.total_w + pb.total_w == pytest.approx(total.total_w)


class TestValidate:
    def test_zero_beamformer_fails_sinr(self):
        cfg = small_cfg()
        topo = generate_topology(0, cfg)
        ch = generate_channels(0, topo, cfg)
        sol = BeamformingSolution(v=np.zeros_like(ch.h))
        report = validate(sol, TaskSelection.full(2, 2), ch, cfg)
        assert not report.sinr_ok
        assert report.sinr_shortfall_rel == pytest.approx(1.0)

    def test_power_violation_amount(self):
        cfg = NetworkConfig.broadcast(1, 1, 1, p_max=1.0, gamma=1e-9, noise_power=1e-6)
        ch = ChannelRealization(h=np.ones((1, 1, 1), dtype=complex))
        v = np.array([[[np.sqrt(1.01) + 0j]]])
        report = validate(BeamformingSolution(v=v), TaskSelection.full(1, 1), ch, cfg)
        assert report.power_violation_w == pytest.approx(0.01)
        assert not report.power_ok
