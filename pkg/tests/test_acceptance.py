"""Acceptance suite: the eight release gates, one printed line each.

Run with -s to see the PASS/FAIL lines; each check also enforces a wall-time
budget so a regression in speed fails the gate alongside a regression in
value.
"""

import math
import time

import numpy as np
import pytest

from cvmdi import (
    BatchConfig,
    ChannelParams,
    apply_beamsplitter,
    build_protocol_state,
    direct_sum,
    empirical_iab,
    estimate_channel,
    heterodyne_condition,
    homodyne_condition,
    numeric_iab,
    numeric_rate,
    optimize_modulation,
    rate_asymptotic,
    rate_pure_loss,
    rescale_detection,
    security_threshold,
    simulate_batch,
    sweep,
    symplectic_eigenvalues,
    tmsv_cm,
    von_neumann_entropy,
)
from cvmdi.channel import loss_block_update

TAU_34DB = 10.0 ** -3.4


def run_criterion(number, description, budget_s, body):
    start = time.perf_counter()
    try:
        body()
        elapsed = time.perf_counter() - start
        assert elapsed < budget_s, f"took {elapsed:.1f} s, budget {budget_s:.0f} s"
    except BaseException:
        print(f"ACCEPTANCE {number} FAIL: {description}")
        raise
    print(f"ACCEPTANCE {number} PASS: {description} [{elapsed:.2f} s]")


def random_pure_pipeline(rng):
    # Two entangled pairs mixed on beam splitters: stays pure by construction.
    cm = direct_sum(tmsv_cm(rng.uniform(1.0, 100.0)), tmsv_cm(rng.uniform(1.0, 100.0)))
    for _ in range(int(rng.integers(1, 3))):
        i, j = (int(v) for v in rng.choice(cm.n_modes, size=2, replace=False))
        cm, _ = apply_beamsplitter(cm, None, i, j, rng.uniform(0.0, 1.0))
    return cm


def random_lossy_pipeline(rng):
    cm = direct_sum(tmsv_cm(rng.uniform(1.0, 100.0)), tmsv_cm(rng.uniform(1.0, 100.0)))
    for _ in range(int(rng.integers(1, 4))):
        op = int(rng.integers(0, 3))
        if op == 0:
            mode = int(rng.integers(0, cm.n_modes))
            tau = rng.uniform(1e-6, 1.0 - 1e-6)
            cm, _ = loss_block_update(cm, None, mode, tau, rng.uniform(1.0, 5.0))
        elif op == 1 and cm.n_modes >= 2:
            i, j = (int(v) for v in rng.choice(cm.n_modes, size=2, replace=False))
            cm, _ = apply_beamsplitter(cm, None, i, j, rng.uniform(0.0, 1.0))
        elif cm.n_modes >= 2:
            mode = int(rng.integers(0, cm.n_modes))
            if rng.integers(0, 2):
                cm = heterodyne_condition(cm, mode)
            else:
                cm = homodyne_condition(cm, mode, "q" if rng.integers(0, 2) else "p")
    return cm


class TestAcceptance:
    def test_1_zero_noise_identity(self):
        def body():
            taus = np.logspace(-4.0, math.log10(0.99), 1000)
            worst = max(
                abs(rate_asymptotic(t, 0.0).rate - rate_pure_loss(t).rate) for t in taus
            )
            assert worst <= 1e-12

        run_criterion(
            1,
            "asymptotic rate at zero excess noise equals the pure-loss rate "
            "on a 1000-point log grid (1e-12 absolute)",
            1.0,
            body,
        )

    def test_2_rate_at_34db(self):
        def body():
            assert rate_asymptotic(TAU_34DB, 0.0).rate == pytest.approx(2.87e-4, abs=1e-5)

        run_criterion(
            2, "pure-loss rate at 34 dB equals 2.87e-4 within 1e-5", 1.0, body
        )

    def test_3_excess_noise_robustness(self):
        def body():
            assert rate_asymptotic(TAU_34DB, 0.02).rate > 0.0
            result = security_threshold(0.02)
            assert result.status == "unbounded" or result.distance_km > 100.0

        run_criterion(
            3,
            "rate at 34 dB survives epsilon = 0.02 and the security threshold "
            "clears 100 km",
            5.0,
            body,
        )

    def test_4_optimized_rate_at_10db(self):
        def body():
            params = ChannelParams.from_epsilon(0.1, 0.02)
            mu_star, report = optimize_modulation(params, 0.97)
            assert 3e-3 <= report.rate <= 5e-2
            # Frozen regression values for the optimum itself.
            assert report.rate == pytest.approx(0.03269862781927674, abs=1e-9)
            assert mu_star == pytest.approx(11.533164833529504, rel=1e-4)

        run_criterion(
            4,
            "optimized modulation at 10 dB, epsilon = 0.02, xi = 0.97 yields a "
            "rate in [3e-3, 5e-2]",
            120.0,
            body,
        )

    def test_5_oracle_agreement(self):
        def body():
            for tau in (0.9, 0.5, 0.1):
                for eps in (0.0, 0.02, 0.05):
                    params = ChannelParams.from_epsilon(tau, eps)
                    reference = rate_asymptotic(tau, eps).rate
                    gaps = [
                        abs(reference - numeric_rate(m, params).rate)
                        for m in (1e3, 1e4, 1e5, 1e6)
                    ]
                    assert gaps[-1] <= 1e-3
                    assert all(a > b for a, b in zip(gaps, gaps[1:]))

        run_criterion(
            5,
            "covariance-matrix rate at mu = 1e6 matches the closed form within "
            "1e-3 on a 3x3 grid, converging monotonically in mu",
            60.0,
            body,
        )

    def test_6_bona_fide_suite(self):
        def body():
            rng = np.random.default_rng(20260813)
            worst_nu = math.inf
            worst_entropy = 0.0
            for i in range(10_000):
                if i % 5 == 0:
                    cm = random_pure_pipeline(rng)
                    worst_entropy = max(worst_entropy, von_neumann_entropy(cm))
                else:
                    cm = random_lossy_pipeline(rng)
                worst_nu = min(worst_nu, min(symplectic_eigenvalues(cm)))
            assert worst_nu >= 1.0 - 1e-9
            assert worst_entropy <= 1e-9

        run_criterion(
            6,
            "10^4 randomized pipelines never dip below nu = 1 - 1e-9 and pure "
            "constructions carry entropy <= 1e-9",
            60.0,
            body,
        )

    def test_7_sampling_cross_validation(self):
        def body():
            params = ChannelParams.pure_loss(0.5)

            def priced_pipeline(eta):
                cfg = BatchConfig(
                    mu=1.0e3, params=params, eta=eta, n=1_000_000, seed=2026
                )
                batch = rescale_detection(simulate_batch(cfg))
                est = estimate_channel(batch)
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
                return batch, est, rate, se

            batch, est, rate_ideal, se_ideal = priced_pipeline(1.0)
            assert abs(est.tau_hat - 0.5) <= 3.0 * est.tau_se
            assert abs(est.epsilon_hat) <= 3.0 * est.epsilon_se
            oracle_iab = numeric_iab(build_protocol_state(1.0e3, params))
            assert empirical_iab(batch) == pytest.approx(oracle_iab, rel=0.01)

            _, _, rate_lossy, se_lossy = priced_pipeline(0.8)
            assert abs(rate_lossy - rate_ideal) <= 3.0 * math.hypot(se_ideal, se_lossy)

        run_criterion(
            7,
            "sampled estimates at n = 1e6 match the oracle: iab within 1%, tau "
            "and epsilon within 3 SE, eta = 0.8 re-scaling equivalent within "
            "3 combined SE",
            120.0,
            body,
        )

    def test_8_sweep_shape(self):
        def body():
            distances = [float(d) for d in range(5, 171, 5)]
            clean = sweep(distances, 0.0)
            noisy = sweep(distances, 0.02)
            assert all(p.status == "ok" for p in clean + noisy)
            clean_rates = [p.report.rate for p in clean]
            noisy_rates = [p.report.rate for p in noisy]
            assert all(a > b for a, b in zip(clean_rates, clean_rates[1:]))
            assert all(a > b for a, b in zip(noisy_rates, noisy_rates[1:]))
            assert all(n < c for n, c in zip(noisy_rates, clean_rates))

        run_criterion(
            8,
            "rate-distance sweeps over 5..170 km decrease strictly and excess "
            "noise lowers every point",
            5.0,
            body,
        )
