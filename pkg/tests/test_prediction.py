import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scalar_ar1
from dirate.errors import NoConvergence
from dirate.model import autocovariance, psd_bounds, random_stable_var, select_autocov, validate_model
from dirate.prediction import (
    exact_di_rate,
    exact_residual_cov,
    finite_horizon_residual,
    joint_predictor_params,
    kalman_predictor_poles,
)
from oracles import brute_force_residual

seeds = st.integers(0, 2**32 - 1)


def white(n=3):
    return validate_model({
        "coeffs": np.zeros((1, n, n)).tolist(),
        "noise_cov": np.eye(n).tolist(),
        "partition": {"x": [0], "y": [1], "z": list(range(2, n))},
    })


class TestFiniteHorizon:
    @pytest.mark.parametrize("i", [1, 2, 5])
    def test_white(self, i):
        acov = autocovariance(white(), i)
        np.testing.assert_allclose(finite_horizon_residual(acov, i).S, np.eye(3), atol=1e-14)

    def test_w1_one_step(self, W1):
        S = finite_horizon_residual(autocovariance(W1, 1), 1).S
        np.testing.assert_allclose(S, np.eye(3), atol=1e-14)

    def test_scalar_ar1(self):
        S = finite_horizon_residual(autocovariance(scalar_ar1(0.9, 1.0), 1), 1).S
        assert S[0, 0] == pytest.approx(1.0, abs=1e-10)

    def test_bad_horizon(self, W1):
        with pytest.raises(ValueError):
            finite_horizon_residual(autocovariance(W1, 1), 0)

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_horizon(self, seed):
        m = random_stable_var(np.random.default_rng(seed), order=2, radius=0.9)
        acov = autocovariance(m, 12)
        prev = finite_horizon_residual(acov, 1).S
        for i in range(2, 13):
            S = finite_horizon_residual(acov, i).S
            assert np.linalg.eigvalsh(prev - S)[0] >= -1e-9
            prev = S


class TestExactResidual:
    def test_w1_full(self, W1):
        res = exact_residual_cov(autocovariance(W1, 64))
        np.testing.assert_allclose(res.full, np.eye(3), atol=1e-13)
        assert res.horizon == 8 and res.gap == pytest.approx(0.0, abs=1e-14)

    def test_w1_subprocess(self, W1):
        res = exact_residual_cov(select_autocov(autocovariance(W1, 64), [1, 2]))
        np.testing.assert_allclose(res.full, np.diag([2.0, 1.0]), atol=1e-13)

    def test_scalar_ar1(self):
        res = exact_residual_cov(select_autocov(autocovariance(scalar_ar1(0.9, 1.0), 64), [0]))
        assert res.full[0, 0] == pytest.approx(1.0, abs=1e-10)

    def test_no_convergence(self):
        # A slowly decaying subprocess cannot converge by horizon 16.
        m = validate_model({
            "coeffs": [[[0.99, 0.0], [1.0, 0.0]]],
            "noise_cov": [[1.0, 0.0], [0.0, 1.0]],
            "partition": {"x": [0], "y": [1]},
        })
        with pytest.raises(NoConvergence) as info:
            exact_residual_cov(select_autocov(autocovariance(m, 16), [1]), 1e-10, 16)
        assert info.value.gap > 1e-10

    def test_bad_tol(self, W1):
        with pytest.raises(ValueError):
            exact_residual_cov(autocovariance(W1, 16), 0.0)


class TestExactRate:
    def test_w1(self, W1):
        r = exact_di_rate(W1)
        assert r.value == pytest.approx(0.5 * np.log(2.0), abs=1e-12)
        assert r.value == pytest.approx(0.5 * (r.gamma_yy_logdet - r.sigma_yy_logdet), abs=0)

    def test_decoupled(self, decoupled):
        assert abs(exact_di_rate(decoupled).value) <= 1e-10

    def test_w2_matches_long_horizon_oracle(self, W2):
        F, Q = W2.coeffs[0], W2.noise_cov
        sigma = brute_force_residual(F, Q, [0, 1, 2], 512)
        gamma = brute_force_residual(F, Q, [1, 2], 512)
        oracle = 0.5 * (np.log(gamma[0, 0]) - np.log(sigma[1, 1]))
        assert exact_di_rate(W2).value == pytest.approx(oracle, abs=1e-8)

    def test_w2_frozen(self, W2):
        assert exact_di_rate(W2).value == pytest.approx(0.21292763480324853, abs=1e-10)

    def test_to_dict(self, W1):
        d = exact_di_rate(W1).to_dict()
        assert set(d) >= {"value_nats", "sigma_yy_logdet", "gamma_yy_logdet", "tol"}

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        m = random_stable_var(rng, n_w=int(rng.integers(2, 5)), order=int(rng.integers(1, 3)), radius=0.85)
        assert exact_di_rate(m).value >= -1e-10

    @given(seeds, st.floats(0.1, 10.0))
    @settings(max_examples=20, deadline=None)
    def test_scale_invariant(self, seed, s):
        m = random_stable_var(np.random.default_rng(seed), radius=0.85)
        assert exact_di_rate(m.scaled(s)).value == pytest.approx(exact_di_rate(m).value, abs=1e-9)

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_appended_white_z(self, seed):
        rng = np.random.default_rng(seed)
        m = random_stable_var(rng, n_w=2, order=1, radius=0.85,
                              partition={"x": [0], "y": [1], "z": []})
        F = np.zeros((3, 3))
        F[:2, :2] = m.coeffs[0]
        Q = np.eye(3)
        Q[:2, :2] = m.noise_cov
        ext = validate_model({"coeffs": [F.tolist()], "noise_cov": Q.tolist(),
                              "partition": {"x": [0], "y": [1], "z": [2]}})
        assert exact_di_rate(ext).value == pytest.approx(exact_di_rate(m).value, abs=1e-8)


class TestPredictorPoles:
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_full_process_deadbeat(self, order):
        m = random_stable_var(np.random.default_rng(order), order=order)
        pp = kalman_predictor_poles(m, range(m.n_w))
        # A nilpotent matrix of index q has eigenvalues of size eps**(1/q) in floating point.
        assert max(pp.pole_magnitudes) <= 1e-4
        assert pp.rho == pytest.approx(1e-3)

    def test_white_subprocess(self):
        pp = kalman_predictor_poles(white(), [1, 2])
        assert pp.b == 0.0

    def test_w2_subprocess(self, W2):
        pp = kalman_predictor_poles(W2, [1, 2])
        assert max(pp.pole_magnitudes) < 1
        assert pp.rho > max(pp.pole_magnitudes)
        assert pp.b > 0

    def test_rho_override_must_exceed_poles(self, W2):
        with pytest.raises(ValueError):
            kalman_predictor_poles(W2, [1, 2], rho=0.1)

    def test_joint_frozen_w2(self, W2):
        pp = joint_predictor_params(W2)
        assert pp.rho == pytest.approx(0.5996475830163955, rel=1e-9)
        assert pp.b == pytest.approx(5.76948071995778, rel=1e-6)

    def test_gain_bound_dominates_dense_circle(self, W2):
        # b carries a 10% margin over the 1024-point maximum; a 16x finer grid stays below it.
        from dirate.prediction import steady_state_predictor

        pp = kalman_predictor_poles(W2, [1, 2])
        Acl, K, C, _ = steady_state_predictor(W2, [1, 2])
        z = pp.rho * np.exp(2j * np.pi * np.arange(16384) / 16384)
        H = C @ np.linalg.solve(z[:, None, None] * np.eye(Acl.shape[0]) - Acl,
                                np.broadcast_to(K, (z.size,) + K.shape))
        assert np.linalg.svd(H, compute_uv=False).max() <= pp.b


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_finite_horizon_sandwich(seed):
    rng = np.random.default_rng(seed)
    m = random_stable_var(rng, n_w=3, order=int(rng.integers(1, 3)), radius=rng.uniform(0.2, 0.9))
    c_max = psd_bounds(m, 512).c_max
    acov = autocovariance(m, 256)
    for idx in (list(range(m.n_w)), list(m.partition.v)):
        sub = select_autocov(acov, idx)
        limit = exact_residual_cov(sub, 1e-12, 256).full
        pp = kalman_predictor_poles(m, idx)
        for i in (1, 2, 4, 8):
            S = finite_horizon_residual(sub, i).S
            D = S - limit
            assert np.linalg.eigvalsh(D)[0] >= -1e-8
            bound = c_max * pp.b**2 * pp.rho ** (2 * (i + 1)) / (1 - pp.rho) ** 2
            assert np.linalg.norm(D, 2) <= bound + 1e-8
