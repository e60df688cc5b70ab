import numpy as np
import pytest
from oracles import dlyap_iterate, residual_cov_direct_sum, transition_product

from pinsync import (
    LatticeParams,
    ctrb_matrix,
    ctrb_rank,
    jacobian,
    pin_matrix,
    residual_covariance,
    stochastic_ctrb_verdict,
    transition,
)


class TestCtrbRank:
    def test_identity_with_single_column(self):
        # every block of the controllability matrix is e_1
        assert ctrb_rank(np.eye(4), np.eye(4)[:, :1]) == 1

    def test_paper_five_site_model_is_controllable(self, lattice_71):
        A = jacobian(lattice_71)
        B = pin_matrix(5, [1, 5])
        assert ctrb_rank(A, B) == 5

    def test_pin_spacing_degeneracy(self):
        # pins {1, 3} on a 4-ring: the spacing 2 divides L, so the mode with
        # period 4 is invisible to both pins and the rank drops
        params = LatticeParams(a=3.0, epsilon=0.33, L=4, pin_sites=(1, 3))
        A = jacobian(params)
        B = pin_matrix(4, [1, 3])
        rank = ctrb_rank(A, B)
        assert rank < 4
        # independent oracle: default-threshold rank of the same stack
        assert np.linalg.matrix_rank(ctrb_matrix(A, B)) == rank

    def test_invariant_under_similarity(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            n, m = 4, 2
            A = rng.standard_normal((n, n))
            B = rng.standard_normal((n, m))
            T = rng.standard_normal((n, n)) + 3.0 * np.eye(n)  # well conditioned
            A2 = T @ A @ np.linalg.inv(T)
            B2 = T @ B
            assert ctrb_rank(A2, B2) == ctrb_rank(A, B)


class TestTransition:
    def test_empty_product_is_identity(self):
        A = np.diag([2.0, 3.0])
        np.testing.assert_array_equal(transition(A, 4, 4), np.eye(2))

    def test_constant_sequence_gives_power(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((3, 3))
        want = np.linalg.matrix_power(A, 3)
        np.testing.assert_allclose(transition(A, 0, 3), want, atol=1e-12)
        np.testing.assert_allclose(transition([A, A, A], 0, 3), want, atol=1e-12)

    def test_two_distinct_matrices(self):
        A0 = np.array([[1.0, 1.0], [0.0, 1.0]])
        A1 = np.array([[2.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(transition([A0, A1], 0, 2), A1 @ A0, atol=1e-15)

    def test_semigroup_property(self):
        rng = np.random.default_rng(9)
        A_list = [rng.standard_normal((3, 3)) for _ in range(6)]
        for a, b, c in [(0, 0, 0), (0, 2, 5), (1, 3, 6), (2, 2, 4)]:
            lhs = transition(A_list, a, c)
            rhs = transition(A_list, b, c) @ transition(A_list, a, b)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_missing_range_rejected(self):
        A = np.eye(2)
        with pytest.raises(ValueError):
            transition([A, A], 0, 3)
        with pytest.raises(ValueError):
            transition([A, A], 2, 1)


class TestResidualCovariance:
    def test_zero_noise_matrix(self):
        A = np.eye(3) * 0.5
        out = residual_covariance(A, np.zeros((3, 3)), np.eye(3), horizon=3)
        np.testing.assert_array_equal(out, np.zeros((3, 3)))

    def test_single_step_returns_sigma(self):
        rng = np.random.default_rng(2)
        S = rng.standard_normal((4, 4))
        Sigma = S @ S.T
        out = residual_covariance(rng.standard_normal((4, 4)), np.eye(4), Sigma, horizon=1)
        np.testing.assert_allclose(out, Sigma, atol=1e-14)

    def test_matches_direct_sum_stationary(self, model_71):
        H = 5
        out = residual_covariance(model_71.A, np.eye(5), 0.001 * np.eye(5), horizon=H)
        want = residual_cov_direct_sum(
            [model_71.A] * H, [np.eye(5)] * H, [0.001 * np.eye(5)] * H, H
        )
        np.testing.assert_allclose(out, want, atol=1e-14)

    def test_matches_direct_sum_time_varying(self):
        rng = np.random.default_rng(31)
        H, n = 6, 3
        A_list = [rng.standard_normal((n, n)) for _ in range(H)]
        E_list = [rng.standard_normal((n, n)) for _ in range(H)]
        Sig_list = []
        for _ in range(H):
            S = rng.standard_normal((n, n))
            Sig_list.append(S @ S.T)
        out = residual_covariance(A_list, E_list, Sig_list, horizon=H)
        want = residual_cov_direct_sum(A_list, E_list, Sig_list, H)
        np.testing.assert_allclose(out, want, rtol=1e-10, atol=1e-12)

    def test_monte_carlo_agreement(self, model_71):
        # empirical covariance of d_L = x_{t+L} - A^L x_t under zero control
        A = model_71.A
        Sigma = 0.001 * np.eye(5)
        horizon = 5
        n_samples = 10_000
        rng = np.random.default_rng(77)
        x = np.zeros((n_samples, 5))
        for _ in range(horizon):
            kappa = rng.multivariate_normal(np.zeros(5), Sigma, size=n_samples)
            x = x @ A.T + kappa
        empirical = x.T @ x / n_samples
        predicted = residual_covariance(A, np.eye(5), Sigma, horizon=horizon)
        rel = np.linalg.norm(empirical - predicted, "fro") / np.linalg.norm(predicted, "fro")
        assert rel < 0.10

    def test_symmetric_psd_for_random_models(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            A = rng.standard_normal((n, n)) * rng.uniform(0.2, 2.0)
            E = rng.standard_normal((n, n))
            S = rng.standard_normal((n, n))
            Sigma = S @ S.T
            out = residual_covariance(A, E, Sigma, horizon=int(rng.integers(1, 8)))
            np.testing.assert_allclose(out, out.T, atol=1e-10 * (1 + np.abs(out).max()))
            assert np.linalg.eigvalsh(out).min() > -1e-9 * (1 + np.abs(out).max())

    def test_asymmetric_sigma_rejected(self):
        bad = np.array([[1.0, 0.3], [0.0, 1.0]])
        with pytest.raises(ValueError):
            residual_covariance(np.eye(2), np.eye(2), bad, horizon=2)


class TestStochasticVerdict:
    def test_stable_model_is_controllable(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((4, 4))
        A *= 0.6 / max(abs(np.linalg.eigvals(A)))
        S = rng.standard_normal((4, 4))
        Sigma = S @ S.T + 0.1 * np.eye(4)
        report = stochastic_ctrb_verdict(A, np.eye(4), Sigma, max_horizon=300)
        assert report.psi_pd
        assert report.psi_bounded
        assert report.sc_rank == 4
        assert report.stochastically_controllable
        # partial sums must converge to the stationary covariance
        want = dlyap_iterate(A, Sigma)
        norms = report.psi_norm_sequence
        assert norms[-1] == pytest.approx(np.linalg.norm(want, 2), rel=1e-6)
        assert np.all(np.diff(norms) >= -1e-12)

    def test_unstable_model_unbounded(self):
        report = stochastic_ctrb_verdict(2.0 * np.eye(3), np.eye(3), np.eye(3))
        assert not report.psi_bounded
        assert not report.stochastically_controllable
        # each term grows fourfold, so the recorded norms blow up
        assert report.psi_norm_sequence[-1] > 1e6

    def test_zero_noise_matrix_not_pd(self):
        report = stochastic_ctrb_verdict(0.5 * np.eye(3), np.zeros((3, 3)), np.eye(3))
        assert not report.psi_pd
        assert report.sc_rank == 0
        assert not report.stochastically_controllable

    def test_marginal_lattice_mode_accumulates(self, model_71):
        # the uniform mode of the open-loop lattice sits on the unit circle,
        # so its noise accumulates linearly and boundedness must fail
        report = stochastic_ctrb_verdict(
            model_71.A, model_71.E, model_71.Sigma, B=model_71.B
        )
        assert report.psi_pd
        assert not report.psi_bounded
        assert report.sc_rank == 5
        assert report.det_rank == 5
        assert report.det_controllable
        assert not report.stochastically_controllable

    def test_det_fields_none_without_input_matrix(self):
        report = stochastic_ctrb_verdict(0.5 * np.eye(2), np.eye(2), np.eye(2))
        assert report.det_rank is None
        assert report.det_controllable is None

    def test_rejects_small_horizon(self):
        with pytest.raises(ValueError):
            stochastic_ctrb_verdict(np.eye(3), np.eye(3), np.eye(3), max_horizon=2)
