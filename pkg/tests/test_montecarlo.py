"""Sampled-emulation tests: counter-based generation, physical moments,
trusted-loss re-scaling, channel estimation, and batch export."""

import io
import math

import numpy as np
import pytest

from cvmdi import (
    BatchConfig,
    ChannelParams,
    CovarianceMatrix,
    DomainError,
    EstimationError,
    SampleBatch,
    apply_beamsplitter,
    build_protocol_state,
    direct_sum,
    empirical_iab,
    estimate_channel,
    numeric_iab,
    rate_asymptotic,
    rescale_detection,
    simulate_batch,
    write_batch_csv,
)
from cvmdi.channel import loss_block_update
from cvmdi.montecarlo import CSV_HEADER, round_normals

PURE_HALF = ChannelParams.pure_loss(0.5)


def small_config(**overrides):
    base = dict(mu=9.0, params=PURE_HALF, eta=1.0, n=2000, seed=11)
    base.update(overrides)
    return BatchConfig(**base)


class TestBatchConfig:
    def test_defaults(self):
        cfg = BatchConfig(mu=2.0, params=PURE_HALF)
        assert (cfg.eta, cfg.n, cfg.seed) == (1.0, 10000, 0)

    @pytest.mark.parametrize(
        "bad",
        [
            dict(mu=0.5),
            dict(mu=math.nan),
            dict(eta=0.0),
            dict(eta=1.5),
            dict(eta=-0.2),
            dict(n=0),
            dict(seed=-1),
        ],
    )
    def test_rejects_bad_values(self, bad):
        with pytest.raises(DomainError):
            small_config(**bad)


class TestRoundNormals:
    def test_sharding_is_bitwise(self):
        # Round r owns its own counter blocks, so any slice regenerates
        # identically no matter where generation starts.
        whole = round_normals(42, 0, 8)
        assert np.array_equal(round_normals(42, 5, 3), whole[5:8])
        assert np.array_equal(round_normals(42, 0, 4), whole[:4])

    def test_shape_and_standardness(self):
        z = round_normals(0, 0, 4000)
        assert z.shape == (4000, 12)
        flat = z.ravel()
        assert abs(flat.mean()) < 5.0 / math.sqrt(flat.size)
        assert abs(flat.std() - 1.0) < 5.0 / math.sqrt(2.0 * flat.size)

    def test_distinct_seeds_distinct_streams(self):
        assert not np.array_equal(round_normals(0, 0, 4), round_normals(1, 0, 4))

    def test_empty_range(self):
        assert round_normals(0, 7, 0).shape == (0, 12)

    def test_rejects_negative_range(self):
        with pytest.raises(Exception):
            round_normals(0, -1, 4)
        with pytest.raises(Exception):
            round_normals(0, 0, -4)


class TestSimulateBatch:
    def test_deterministic(self):
        a = simulate_batch(small_config())
        b = simulate_batch(small_config())
        assert np.array_equal(a.alpha, b.alpha)
        assert np.array_equal(a.gamma_raw, b.gamma_raw)

    def test_seed_changes_samples(self):
        a = simulate_batch(small_config(seed=1))
        b = simulate_batch(small_config(seed=2))
        assert not np.array_equal(a.alpha, b.alpha)

    def test_len_and_rounds_iterator(self):
        batch = simulate_batch(small_config(n=5))
        assert len(batch) == 5
        rounds = list(batch.rounds())
        assert [r.index for r in rounds] == [0, 1, 2, 3, 4]
        assert rounds[2].alpha == complex(batch.alpha[2])
        assert rounds[2].gamma == rounds[2].gamma_raw  # eta = 1, untouched

    def test_arrays_read_only(self):
        batch = simulate_batch(small_config())
        with pytest.raises(ValueError):
            batch.alpha[0] = 0.0

    def test_no_modulation_means_vacuum_broadcast(self):
        batch = simulate_batch(small_config(mu=1.0, n=50000))
        assert np.abs(batch.alpha).max() == 0.0
        # gamma = (q + ip)/sqrt(2) of pure vacuum noise: variance 1/2 per part.
        var = batch.gamma_raw.real.var()
        assert var == pytest.approx(0.5, rel=0.05)

    def test_gamma_moments_match_cm_pipeline(self):
        # The sampled second moments must agree with the covariance-matrix
        # route: modulated thermal ensembles through the same channel,
        # relay splitter, and detector model. Checked at 5 standard errors.
        mu, eta, n = 9.0, 0.8, 1_000_000
        params = ChannelParams.from_omega(0.5, 1.5)
        cfg = BatchConfig(mu=mu, params=params, eta=eta, n=n, seed=3)
        batch = rescale_detection(simulate_batch(cfg))

        thermal = CovarianceMatrix(mu * np.eye(2))
        ensemble = direct_sum(thermal, thermal)
        after, _ = loss_block_update(ensemble, None, 1, params.tau, params.omega)
        mixed, _ = apply_beamsplitter(after, None, 1, 0, 0.5)
        var_q_minus = mixed.mode_block(0, 0)[0, 0]
        var_p_plus = mixed.mode_block(1, 1)[1, 1]
        trusted = (1.0 - eta) / (2.0 * eta)
        expected_re = var_q_minus / 2.0 + trusted
        expected_im = var_p_plus / 2.0 + trusted

        re, im = batch.gamma.real, batch.gamma.imag
        se_mean = re.std() / math.sqrt(n)
        assert abs(re.mean()) < 5.0 * se_mean
        assert abs(im.mean()) < 5.0 * se_mean
        se_var = expected_re * math.sqrt(2.0 / (n - 1))
        assert abs(re.var() - expected_re) < 5.0 * se_var
        assert abs(im.var() - expected_im) < 5.0 * se_var
        se_cross = math.sqrt((re.var() * im.var() + np.cov(re, im)[0, 1] ** 2) / n)
        assert abs(np.cov(re, im)[0, 1]) < 5.0 * se_cross

        # gamma estimates alpha - sqrt(tau) beta*: the linear couplings.
        mod = (mu - 1.0) / 4.0
        st = math.sqrt(params.tau)
        for x, y, expected in [
            (batch.alpha.real, re, mod),
            (batch.alpha.imag, im, mod),
            (batch.beta.real, re, -st * mod),
            (batch.beta.imag, im, st * mod),
        ]:
            c = np.cov(x, y)[0, 1]
            se_c = math.sqrt((x.var() * y.var() + c * c) / n)
            assert abs(c - expected) < 5.0 * se_c


class TestRescaleDetection:
    def test_unit_efficiency_is_identity(self):
        batch = rescale_detection(simulate_batch(small_config(eta=1.0)))
        assert batch.rescaled
        assert np.array_equal(batch.gamma, batch.gamma_raw)

    def test_divides_by_root_eta(self):
        batch = rescale_detection(simulate_batch(small_config(eta=0.25)))
        assert np.array_equal(batch.gamma, batch.gamma_raw * 2.0)
        # Original detector record preserved.
        assert not np.array_equal(batch.gamma, batch.gamma_raw)

    def test_estimation_requires_rescale_below_unit_eta(self):
        raw = simulate_batch(small_config(eta=0.8))
        with pytest.raises(EstimationError):
            estimate_channel(raw)
        estimate_channel(rescale_detection(raw))  # must not raise


class TestEstimateChannel:
    def test_requires_minimum_rounds(self):
        with pytest.raises(EstimationError):
            estimate_channel(simulate_batch(small_config(n=999)))

    def test_rejects_unmodulated_batch(self):
        with pytest.raises(EstimationError):
            estimate_channel(simulate_batch(small_config(mu=1.0)))

    def test_recovers_channel_parameters(self):
        params = ChannelParams.from_omega(0.5, 1.5)
        cfg = BatchConfig(mu=9.0, params=params, eta=1.0, n=200_000, seed=5)
        est = estimate_channel(simulate_batch(cfg))
        assert est.n_rounds == 200_000
        assert abs(est.tau_hat - params.tau) < 5.0 * est.tau_se
        assert abs(est.epsilon_hat - params.epsilon) < 5.0 * est.epsilon_se
        state = build_protocol_state(9.0, params)
        assert est.iab_hat == pytest.approx(numeric_iab(state), rel=0.05)

    def test_standard_errors_shrink_as_root_n(self):
        # n = 1e4 versus 1e6: the mean reported SE must shrink by the
        # factor sqrt(100) within a 20 percent band. Each reported SE is
        # itself a 10-subbatch estimate with ~24% spread, so the law is
        # measured on fixed seed ensembles rather than a single draw.
        def mean_ses(n, n_seeds):
            rows = [
                estimate_channel(
                    simulate_batch(BatchConfig(mu=9.0, params=PURE_HALF, n=n, seed=s))
                )
                for s in range(n_seeds)
            ]
            return np.array([(e.tau_se, e.epsilon_se, e.iab_se) for e in rows]).mean(axis=0)

        ratios = mean_ses(10_000, 16) / mean_ses(1_000_000, 10)
        assert np.all(ratios >= 8.0)
        assert np.all(ratios <= 12.0)

    def test_reduction_order_invariance(self):
        # Reversing the rounds changes only float summation order; point
        # estimates must agree to 1e-9 relative.
        batch = simulate_batch(small_config(n=20_000))
        reversed_batch = SampleBatch(
            config=batch.config,
            alpha=batch.alpha[::-1],
            beta=batch.beta[::-1],
            gamma_raw=batch.gamma_raw[::-1],
            gamma=batch.gamma[::-1],
            rescaled=batch.rescaled,
        )
        a = estimate_channel(batch)
        b = estimate_channel(reversed_batch)
        assert b.tau_hat == pytest.approx(a.tau_hat, rel=1e-9)
        assert b.epsilon_hat == pytest.approx(a.epsilon_hat, rel=1e-9)
        assert b.iab_hat == pytest.approx(a.iab_hat, rel=1e-9)

    @pytest.mark.parametrize("eta", [0.5, 0.8])
    def test_trusted_loss_equivalence(self, eta):
        # Full pipeline at eta < 1 prices the link like the eta = 1
        # pipeline, within 3 combined standard errors of the rate.
        def rate_and_se(eta_value):
            cfg = BatchConfig(mu=9.0, params=PURE_HALF, eta=eta_value, n=200_000, seed=21)
            est = estimate_channel(rescale_detection(simulate_batch(cfg)))
            eps = max(est.epsilon_hat, 0.0)
            rate = rate_asymptotic(est.tau_hat, eps).rate
            dtau = 1e-6
            d_dtau = (
                rate_asymptotic(est.tau_hat + dtau, eps).rate
                - rate_asymptotic(est.tau_hat - dtau, eps).rate
            ) / (2.0 * dtau)
            deps = 1e-6
            d_deps = (rate_asymptotic(est.tau_hat, eps + deps).rate - rate) / deps
            se = math.hypot(d_dtau * est.tau_se, d_deps * est.epsilon_se)
            return rate, se

        rate_ideal, se_ideal = rate_and_se(1.0)
        rate_lossy, se_lossy = rate_and_se(eta)
        assert abs(rate_lossy - rate_ideal) < 3.0 * math.hypot(se_ideal, se_lossy)


class TestEmpiricalIab:
    def test_zero_modulation_returns_zero(self):
        batch = simulate_batch(small_config(mu=1.0))
        assert empirical_iab(batch) == 0.0

    def test_party_exchange_symmetry(self):
        batch = simulate_batch(small_config(n=20_000))
        swapped = SampleBatch(
            config=batch.config,
            alpha=batch.beta,
            beta=batch.alpha,
            gamma_raw=batch.gamma_raw,
            gamma=batch.gamma,
            rescaled=batch.rescaled,
        )
        assert empirical_iab(swapped) == pytest.approx(empirical_iab(batch), rel=1e-9)

    def test_converges_to_oracle(self):
        cfg = BatchConfig(mu=9.0, params=PURE_HALF, n=200_000, seed=9)
        estimate = empirical_iab(simulate_batch(cfg))
        oracle_value = numeric_iab(build_protocol_state(9.0, PURE_HALF))
        assert estimate == pytest.approx(oracle_value, rel=0.02)


class TestBatchCsv:
    def test_header_and_row_count(self):
        batch = simulate_batch(small_config(n=7))
        out = io.StringIO()
        write_batch_csv(batch, out)
        lines = out.getvalue().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 8

    def test_round_trip_is_lossless(self):
        batch = simulate_batch(small_config(n=64))
        out = io.StringIO()
        write_batch_csv(batch, out)
        rows = [line.split(",") for line in out.getvalue().splitlines()[1:]]
        for i, row in enumerate(rows):
            assert int(row[0]) == i
            assert complex(float(row[1]), float(row[2])) == batch.alpha[i]
            assert complex(float(row[3]), float(row[4])) == batch.beta[i]
            assert complex(float(row[5]), float(row[6])) == batch.gamma[i]

    def test_writes_to_path(self, tmp_path):
        batch = simulate_batch(small_config(n=3))
        target = tmp_path / "batch.csv"
        write_batch_csv(batch, target)
        assert target.read_text(encoding="utf-8").startswith(CSV_HEADER)
