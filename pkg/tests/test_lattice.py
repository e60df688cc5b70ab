import numpy as np
import pytest
from oracles import single_site_step

from pinsync import LatticeParams, fixed_point, logistic_map, step


class TestLogisticMap:
    def test_fixed_point_of_map(self):
        assert logistic_map(2.0 / 3.0, 3.0) == pytest.approx(2.0 / 3.0)

    def test_parabola_vertex(self):
        assert logistic_map(0.5, 4.0) == 1.0

    def test_zero_is_fixed(self):
        for a in (0.5, 2.0, 3.7, 4.0):
            assert logistic_map(0.0, a) == 0.0

    def test_elementwise(self):
        z = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(logistic_map(z, 4.0), [0.0, 1.0, 0.0])


class TestFixedPoint:
    @pytest.mark.parametrize("a,expected", [(3.0, 2.0 / 3.0), (4.0, 0.75), (2.0, 0.5)])
    def test_values(self, a, expected):
        assert fixed_point(a) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("a", [1.0, 0.5, -2.0])
    def test_rejects_small_a(self, a):
        with pytest.raises(ValueError):
            fixed_point(a)

    def test_is_invariant_under_map(self):
        for a in (1.5, 3.0, 4.0):
            zstar = fixed_point(a)
            assert logistic_map(zstar, a) == pytest.approx(zstar, abs=1e-15)


class TestParams:
    def test_rejects_bad_epsilon(self):
        for eps in (0.0, 0.5, -0.1, 0.7):
            with pytest.raises(ValueError):
                LatticeParams(a=3.0, epsilon=eps, L=5, pin_sites=(1,))

    def test_rejects_bad_a(self):
        for a in (0.0, -1.0, 4.5):
            with pytest.raises(ValueError):
                LatticeParams(a=a, epsilon=0.3, L=5, pin_sites=(1,))

    def test_rejects_short_lattice(self):
        with pytest.raises(ValueError):
            LatticeParams(a=3.0, epsilon=0.3, L=1, pin_sites=(1,))

    def test_rejects_bad_pins(self):
        with pytest.raises(ValueError):
            LatticeParams(a=3.0, epsilon=0.3, L=5, pin_sites=(1, 1))
        with pytest.raises(ValueError):
            LatticeParams(a=3.0, epsilon=0.3, L=5, pin_sites=(0,))
        with pytest.raises(ValueError):
            LatticeParams(a=3.0, epsilon=0.3, L=5, pin_sites=(6,))
        with pytest.raises(ValueError):
            LatticeParams(a=3.0, epsilon=0.3, L=5, pin_sites=())

    def test_pin_count(self):
        params = LatticeParams(a=3.0, epsilon=0.3, L=5, pin_sites=(1, 5))
        assert params.M == 2


class TestStep:
    def test_homogeneous_fixed_point_invariant(self):
        params = LatticeParams(a=3.0, epsilon=0.33, L=5, pin_sites=(1, 5))
        z = np.full(5, fixed_point(3.0))
        np.testing.assert_allclose(step(z, params), z, atol=1e-15)

    def test_homogeneous_state_maps_uniformly(self):
        # (1 - 2 eps) c + 2 eps c = c, so a constant vector just applies f
        params = LatticeParams(a=3.7, epsilon=0.4, L=8, pin_sites=(2,))
        c = 0.37
        out = step(np.full(8, c), params)
        np.testing.assert_allclose(out, np.full(8, logistic_map(c, 3.7)), atol=1e-15)

    def test_matches_single_site_oracle_uniform(self):
        params = LatticeParams(a=3.0, epsilon=0.33, L=5, pin_sites=(1, 5))
        z = np.full(5, fixed_point(3.0) + 0.9)
        controls = np.zeros(2)
        noise = np.zeros(5)
        out = step(z, params, controls, noise)
        expected = [
            single_site_step(z, site, 3.0, 0.33, (1, 5), controls, noise)
            for site in range(1, 6)
        ]
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_matches_single_site_oracle_random(self):
        rng = np.random.default_rng(11)
        params = LatticeParams(a=3.9, epsilon=0.21, L=7, pin_sites=(2, 5, 7))
        for _ in range(20):
            z = rng.uniform(0, 1, 7)
            controls = rng.standard_normal(3)
            noise = 0.01 * rng.standard_normal(7)
            out = step(z, params, controls, noise)
            expected = [
                single_site_step(z, site, 3.9, 0.21, (2, 5, 7), controls, noise)
                for site in range(1, 8)
            ]
            np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_dimension_mismatch(self):
        params = LatticeParams(a=3.0, epsilon=0.33, L=5, pin_sites=(1, 5))
        with pytest.raises(ValueError):
            step(np.zeros(4), params)
        with pytest.raises(ValueError):
            step(np.zeros(5), params, controls=np.zeros(3))
        with pytest.raises(ValueError):
            step(np.zeros(5), params, noise=np.zeros(4))

    def test_translation_equivariance(self):
        rng = np.random.default_rng(5)
        L = 6
        pins = (1, 4)
        params = LatticeParams(a=3.8, epsilon=0.3, L=L, pin_sites=pins)
        for k in range(1, L):
            rotated_pins = tuple((p - 1 + k) % L + 1 for p in pins)
            params_k = LatticeParams(a=3.8, epsilon=0.3, L=L, pin_sites=rotated_pins)
            for _ in range(5):
                z = rng.uniform(0, 1, L)
                u = rng.standard_normal(2)
                out = step(z, params, u)
                out_rotated = step(np.roll(z, k), params_k, u)
                np.testing.assert_allclose(out_rotated, np.roll(out, k), atol=1e-14)

    def test_unit_interval_is_invariant(self):
        # uncontrolled, noiseless dynamics with a <= 4 cannot leave [0, 1]
        rng = np.random.default_rng(3)
        for a, eps, L in [(4.0, 0.25, 10), (3.0, 0.33, 5), (3.99, 0.49, 17)]:
            params = LatticeParams(a=a, epsilon=eps, L=L, pin_sites=(1,))
            z = rng.uniform(0, 1, L)
            for _ in range(500):
                z = step(z, params)
                assert z.min() >= 0.0 and z.max() <= 1.0
