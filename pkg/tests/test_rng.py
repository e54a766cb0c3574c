import numpy as np
import pytest

from combu.errors import ParameterError
from combu.rng import Discrete, ExpScaled, IntUniform, Normal, Rng, Uniform, sample


class TestDeterminism:
    def test_equal_seeds_equal_streams(self):
        a = Rng(12345)
        b = Rng(12345)
        np.testing.assert_array_equal(a.random(10_000), b.random(10_000))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).random(100), Rng(2).random(100))

    def test_children_are_deterministic(self):
        assert Rng(9).child(3).seed == Rng(9).child(3).seed

    def test_children_have_distinct_streams(self):
        parent = Rng(42)
        seeds = {parent.child(i).seed for i in range(100)}
        assert len(seeds) == 100
        a, b = parent.child(0), parent.child(1)
        assert not np.array_equal(a.random(50), b.random(50))

    def test_child_does_not_consume_parent_stream(self):
        a = Rng(7)
        a.child(0)
        b = Rng(7)
        np.testing.assert_array_equal(a.random(10), b.random(10))


class TestUniform:
    def test_mean_and_range(self):
        u = Rng(0).random(100_000)
        assert abs(u.mean() - 0.5) < 0.01
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_degenerate_interval(self):
        assert sample(Uniform(2.0, 2.0), Rng(0)) == 2.0

    def test_invalid_interval(self):
        with pytest.raises(ParameterError):
            Uniform(3.0, 1.0)


class TestNormal:
    def test_moments_within_three_standard_errors(self):
        n = 100_000
        mu, sigma = 2.5, 1.5
        z = Rng(17).normal(mu, sigma, size=n)
        se_mean = sigma / np.sqrt(n)
        se_std = sigma / np.sqrt(2 * n)
        assert abs(z.mean() - mu) < 3 * se_mean
        assert abs(z.std() - sigma) < 3 * se_std

    def test_scalar_draw_is_float(self):
        v = Rng(3).normal(0.0, 1.0)
        assert isinstance(v, float)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ParameterError):
            Normal(0.0, -1.0)


class TestIntUniform:
    def test_inclusive_endpoints(self):
        values = {int(sample(IntUniform(0, 10), Rng(i))) for i in range(500)}
        assert values == set(range(11))

    def test_integer_valued(self):
        r = Rng(4)
        draws = [sample(IntUniform(-2, 1), r) for _ in range(200)]
        assert all(v == int(v) for v in draws)
        assert set(draws) <= {-2.0, -1.0, 0.0, 1.0}


class TestDiscrete:
    def test_single_atom(self):
        assert sample(Discrete((5.0,), (1.0,)), Rng(0)) == 5.0

    def test_support(self):
        d = Discrete((1.0, 2.0, 3.0), (0.2, 0.3, 0.5))
        r = Rng(8)
        draws = {sample(d, r) for _ in range(1000)}
        assert draws == {1.0, 2.0, 3.0}

    def test_probs_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            Discrete((1.0, 2.0), (0.5, 0.6))

    def test_probs_must_be_in_unit_interval(self):
        with pytest.raises(ParameterError):
            Discrete((1.0, 2.0), (1.5, -0.5))


class TestExpScaled:
    def test_fixed_values(self):
        d = ExpScaled(Uniform(1.0, 1.0), IntUniform(3, 3))
        assert sample(d, Rng(0)) == 1000.0

    def test_range(self):
        d = ExpScaled(Uniform(1.0, 10.0), IntUniform(-3, 1))
        r = Rng(5)
        draws = np.array([sample(d, r) for _ in range(5000)])
        assert draws.min() >= 1e-3
        assert draws.max() < 1e2
