"""Rayleigh SIMO channel draws and the three receive pipelines."""

import dataclasses

import numpy as np
import pytest

import isea_sim as iz
from isea_sim.streams import substream


def _scenario(**overrides):
    base = dict(
        feature_dim=5,
        num_classes=5,
        num_sensors=10,
        num_antennas=12,
        observation_rank=1,
        sensing_covariance_scale=0.1,
        transmit_snr_db=10.0,
        master_seed=20240,
        mc_trials=1000,
    )
    base.update(overrides)
    return iz.build_scenario(iz.ScenarioConfig(**base))


def _align_phase(x, ref):
    """Rotate x by the global phase that best matches ref."""
    inner = np.vdot(ref, x)
    return x * np.exp(-1j * np.angle(inner))


# ------------------------------------------------------------- channel draws


def test_scalar_channel_eigenstructure():
    ch = iz.sample_channel(1, 1, substream(0, 0))
    h = ch.H[0, 0]
    assert abs(ch.lambda1 - abs(h) ** 2) < 1e-12
    # phase convention: the single entry of each eigenvector is +1
    np.testing.assert_allclose(ch.v, [1.0 + 0j], atol=1e-12)
    np.testing.assert_allclose(ch.q1, [1.0 + 0j], atol=1e-12)


def test_entry_variance_is_unit():
    rng = substream(1, 0)
    acc = 0.0
    for _ in range(100):
        ch = iz.sample_channel(100, 100, rng)
        acc += np.mean(np.abs(ch.H) ** 2)
    assert abs(acc / 100 - 1.0) < 0.01


def test_principal_pair_identity_up_to_phase():
    for i, (N, K) in enumerate([(2, 5), (5, 5), (9, 4), (1, 3), (6, 1)]):
        ch = iz.sample_channel(N, K, substream(2, 0, point_index=i))
        assert abs(np.linalg.norm(ch.v) - 1) < 1e-9
        assert abs(np.linalg.norm(ch.q1) - 1) < 1e-9
        lhs = ch.H @ ch.q1
        rhs = np.sqrt(ch.lambda1) * ch.v
        assert np.max(np.abs(_align_phase(lhs, rhs) - rhs)) < 1e-7


def test_top_eigenvalue_dominates():
    ch = iz.sample_channel(6, 4, substream(3, 0))
    evals = np.linalg.eigvalsh(ch.H.conj().T @ ch.H)
    assert ch.lambda1 >= evals[-1] - 1e-9 * evals[-1]


def test_large_matrix_eigenvalue_concentration():
    # lambda1 / K approaches (1 + sqrt(N/K))^2 = 4 for square matrices.
    rng = substream(20240, 31)
    vals = np.array([iz.sample_channel(200, 200, rng).lambda1 / 200 for _ in range(100)])
    assert np.all(np.abs(vals / 4.0 - 1.0) < 0.10)


def test_realization_from_matrix_matches_sampler():
    ch = iz.sample_channel(6, 4, substream(4, 0))
    rebuilt = iz.realization_from_matrix(ch.H)
    assert np.array_equal(ch.H, rebuilt.H)
    np.testing.assert_allclose(ch.v, rebuilt.v, atol=1e-12)
    np.testing.assert_allclose(ch.q1, rebuilt.q1, atol=1e-12)


# --------------------------------------------------------- beam-aligned SNR


def test_scalar_link_effective_snr():
    scen = _scenario(num_sensors=1, num_antennas=1)
    ch = iz.sample_channel(1, 1, substream(5, 0))
    snr = iz.aircomp_effective_snr(ch, scen)
    gamma = 10.0
    expected = 2 * gamma * abs(ch.H[0, 0]) ** 2 / scen.nu_sq
    assert abs(snr.gamma_air - expected) / expected < 1e-9


def test_effective_snr_quadratic_homogeneity():
    scen = _scenario(num_sensors=4, num_antennas=6)
    ch = iz.sample_channel(6, 4, substream(6, 0))
    base = iz.aircomp_effective_snr(ch, scen).gamma_air
    for c in (0.5, 2.0, 7.0):
        scaled = iz.aircomp_effective_snr(iz.realization_from_matrix(c * ch.H), scen)
        assert abs(scaled.gamma_air - c * c * base) / (c * c * base) < 1e-9


def test_effective_snr_power_budget_identity():
    # The min-quadratic-form expression must match 2 K^2 / (sigma^2 |b|^2)
    # on every draw, tall or wide.
    rng = substream(7, 0)
    for i in range(50):
        K = 2 + i % 7
        N = 1 + (i * 3) % 11
        scen = _scenario(num_sensors=K, num_antennas=N)
        ch = iz.sample_channel(N, K, rng)
        snr = iz.aircomp_effective_snr(ch, scen)
        alt = 2 * K * K / (scen.sigma_sq * snr.b_norm_sq)
        assert abs(snr.gamma_air - alt) / alt < 1e-6


def test_degenerate_channel_flagged():
    scen = _scenario(num_sensors=4, num_antennas=6)
    H = iz.sample_channel(6, 4, substream(8, 0)).H.copy()
    H[:, 2] = 0.0  # silence one sensor: its beam gain is exactly zero
    ch = iz.realization_from_matrix(H)
    snr = iz.aircomp_effective_snr(ch, scen)
    assert snr.degenerate
    assert snr.gamma_air == 0.0
    feats = iz.sample_local_features(scen, 0, substream(8, 1))
    out = iz.aircomp_receive(scen, ch, feats, substream(8, 2))
    assert out.degenerate


# ----------------------------------------------------------- aircomp receive


def test_noiseless_channel_receive_is_exact():
    scen = _scenario(transmit_snr_db=float("inf"))
    ch = iz.sample_channel(12, 10, substream(9, 0))
    feats = iz.sample_local_features(scen, 1, substream(9, 1))
    out = iz.aircomp_receive(scen, ch, feats, substream(9, 2))
    assert np.array_equal(out.f_tilde, iz.aggregate_noiseless(feats))
    assert out.noise_power_per_dim == 0.0


def test_receive_covariance_at_fixed_channel():
    scen = _scenario()
    ch = iz.sample_channel(12, 10, substream(10, 0))
    gamma_air = iz.aircomp_effective_snr(ch, scen).gamma_air
    rng = substream(10, 1)
    n = 100000
    out = np.empty((n, 5))
    for i in range(n):
        feats = iz.sample_local_features(scen, 2, rng)
        out[i] = iz.aircomp_receive(scen, ch, feats, rng).f_tilde
    ref = scen.C / 10 + np.eye(5) / gamma_air
    S = np.cov(out, rowvar=False)
    assert np.linalg.norm(S - ref) / np.linalg.norm(ref) < 0.05


def test_literal_matrix_noise_matches_direct_draw():
    # The per-antenna complex noise pushed through the beamformer must be
    # distribution-identical to the direct isotropic draw.
    scen = _scenario(num_sensors=3, num_antennas=4)
    ch = iz.sample_channel(4, 3, substream(11, 0))
    rng_a = substream(11, 1)
    rng_b = substream(11, 2)
    n = 100000
    direct = np.empty((n, 5))
    literal = np.empty((n, 5))
    for i in range(n):
        feats = iz.sample_local_features(scen, 0, rng_a)
        direct[i] = iz.aircomp_receive(scen, ch, feats, rng_a).f_tilde
        feats_b = iz.sample_local_features(scen, 0, rng_b)
        literal[i] = iz.aircomp_receive(scen, ch, feats_b, rng_b, literal=True).f_tilde
    Sd = np.cov(direct, rowvar=False)
    Sl = np.cov(literal, rowvar=False)
    assert np.linalg.norm(Sl - Sd) / np.linalg.norm(Sd) < 0.05
    assert np.max(np.abs(literal.mean(0) - direct.mean(0))) < 0.01


# ------------------------------------------------------------- zero forcing


def test_zf_on_orthonormal_columns_returns_channel():
    rng = substream(12, 0)
    G = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    Q, _ = np.linalg.qr(G)
    ch = iz.realization_from_matrix(Q)
    B = iz.zf_beamformers(ch)
    np.testing.assert_allclose(B, Q, atol=1e-10)


def test_zf_defining_property():
    rng = substream(13, 0)
    for i in range(20):
        K = 2 + i % 5
        N = K + i % 4  # includes the square case
        ch = iz.sample_channel(N, K, rng)
        B = iz.zf_beamformers(ch)
        gram = B.conj().T @ ch.H
        assert np.max(np.abs(gram - np.eye(K))) < 1e-8


def test_zf_infeasible_when_undersized():
    ch = iz.sample_channel(3, 5, substream(14, 0))
    with pytest.raises(iz.InfeasibleAccessError):
        iz.zf_beamformers(ch)


def test_zf_singular_gram_reported():
    H = iz.sample_channel(5, 3, substream(15, 0)).H.copy()
    H[:, 1] = 0.0
    with pytest.raises(iz.NumericalError):
        iz.zf_beamformers(iz.realization_from_matrix(H))


def test_zf_norm_distribution():
    # |b_k|^2 follows a scaled inverse chi-square with 2(N-K+1) degrees
    # of freedom; spot-check the exact reference CDF by simulation.
    scen = _scenario(num_sensors=10, num_antennas=16)
    rng = substream(16, 0)
    vals = np.empty(4000)
    for i in range(4000):
        ch = iz.sample_channel(16, 10, rng)
        vals[i] = float(np.sum(np.abs(iz.zf_beamformers(ch)[:, 0]) ** 2))
    ks = iz.ks_statistic(vals, iz.zf_norm_cdf(16, 10))
    assert ks < 0.03
    assert abs(vals.mean() - 1 / 6) / (1 / 6) < 0.05


def test_zf_norm_inverse_exponential_edge():
    # At N = K the degrees of freedom collapse to 2 and the norm is a
    # plain inverse exponential with CDF exp(-1/x).
    cdf = iz.zf_norm_cdf(3, 3)
    grid = np.array([0.2, 0.5, 1.0, 2.0, 10.0])
    np.testing.assert_allclose(cdf(grid), np.exp(-1.0 / grid), atol=1e-12)
    rng = substream(17, 0)
    vals = np.empty(10000)
    for i in range(10000):
        ch = iz.sample_channel(3, 3, rng)
        vals[i] = float(np.sum(np.abs(iz.zf_beamformers(ch)[:, 0]) ** 2))
    assert iz.ks_statistic(vals, cdf) < 0.02


# ------------------------------------------------------- orthogonal receive


def test_orthogonal_noiseless_receive_is_exact():
    scen = _scenario(transmit_snr_db=float("inf"))
    ch = iz.sample_channel(12, 10, substream(18, 0))
    feats = iz.sample_local_features(scen, 3, substream(18, 1))
    out = iz.orthogonal_receive(scen, ch, feats, substream(18, 2))
    assert np.array_equal(out.f_tilde, iz.aggregate_noiseless(feats))
    assert out.mode == "orthogonal"


def test_orthogonal_snr_collapses_at_square_channel():
    # With no spare antennas the ZF norms blow up and the per-sensor SNR
    # collapses; doubling the array restores it.
    med = {}
    for N in (50, 100):
        scen = _scenario(num_sensors=50, num_antennas=N)
        rng = substream(20240, 30, point_index=N)
        vals = np.empty(1000)
        for t in range(1000):
            ch = iz.sample_channel(N, 50, rng)
            vals[t] = iz.orthogonal_effective_snr(ch, scen)[0] / 50
        med[N] = np.median(vals)
    assert med[50] < 0.05 * med[100]


def test_orthogonal_snr_mean_matches_closed_form():
    scen = _scenario(num_sensors=50, num_antennas=100)
    rng = substream(19, 0)
    vals = np.empty(1000)
    for t in range(1000):
        ch = iz.sample_channel(100, 50, rng)
        vals[t] = iz.orthogonal_effective_snr(ch, scen)[0] / 50
    closed = 10.0 * (100 - 50) / scen.nu_sq
    assert abs(vals.mean() - closed) / closed < 0.05


# ---------------------------------------------------------------- adaptive


def test_adaptive_falls_back_when_orthogonal_infeasible():
    scen = _scenario(num_sensors=10, num_antennas=5)
    rng = substream(20, 0)
    for _ in range(10):
        ch = iz.sample_channel(5, 10, rng)
        feats = iz.sample_local_features(scen, 0, rng)
        out = iz.adaptive_receive(scen, ch, feats, rng)
        assert out.resolved_mode == "aircomp"
        assert out.mode == "adaptive-resolved"


def test_adaptive_selects_larger_snr():
    scen = _scenario(num_sensors=10, num_antennas=18)
    rng = substream(21, 0)
    seen = set()
    for _ in range(60):
        ch = iz.sample_channel(18, 10, rng)
        ga = iz.aircomp_effective_snr(ch, scen).gamma_air
        go = iz.orthogonal_effective_snr(ch, scen)[0]
        feats = iz.sample_local_features(scen, 0, rng)
        out = iz.adaptive_receive(scen, ch, feats, rng)
        want = "orthogonal" if go > ga else "aircomp"
        assert out.resolved_mode == want
        assert abs(out.effective_snr - max(ga, go)) / max(ga, go) < 1e-12
        seen.add(want)
    assert seen == {"aircomp", "orthogonal"}  # both branches exercised


def test_adaptive_mode_is_deterministic_per_draw():
    scen = _scenario(num_sensors=6, num_antennas=8)
    ch = iz.sample_channel(8, 6, substream(22, 0))
    feats = iz.sample_local_features(scen, 1, substream(22, 1))
    a = iz.adaptive_receive(scen, ch, feats, substream(22, 2))
    b = iz.adaptive_receive(scen, ch, feats, substream(22, 2))
    assert a.resolved_mode == b.resolved_mode
    assert np.array_equal(a.f_tilde, b.f_tilde)


def test_adaptive_mean_snr_dominates_both_modes():
    base = iz.ScenarioConfig(
        feature_dim=5, num_classes=5, num_sensors=10, num_antennas=2,
        observation_rank=1, sensing_covariance_scale=0.1,
        transmit_snr_db=10.0, master_seed=20240, mc_trials=1000,
    )
    rng = substream(23, 0)
    for N in range(2, 21):
        scen = iz.build_scenario(dataclasses.replace(base, num_antennas=N))
        air = np.empty(1000)
        orth = np.full(1000, -np.inf)
        ada = np.empty(1000)
        for t in range(1000):
            ch = iz.sample_channel(N, 10, rng)
            air[t] = iz.aircomp_effective_snr(ch, scen).gamma_air
            if N >= 10:
                orth[t] = iz.orthogonal_effective_snr(ch, scen)[0]
            ada[t] = max(air[t], orth[t])
        best = max(air.mean(), orth.mean() if N >= 10 else -np.inf)
        spread = max(air.std(ddof=1), orth.std(ddof=1) if N >= 10 else 0.0)
        assert ada.mean() >= best - 3 * spread / np.sqrt(1000)
