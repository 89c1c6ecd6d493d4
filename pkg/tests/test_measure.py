"""Ground types: construction invariants, KL, entropy, product plans."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ztot.errors import (DimensionError, FeasibilityError, ValidationError)
from ztot.measure import (CostModel, Marginal, MetricSample, TransportPlan,
                          kl_divergence, linear_cost, product_plan,
                          relative_entropy)

from conftest import (euclidean_metric, random_feasible_plan, random_marginal,
                      two_point_space, uniform2)

LOG2 = math.log(2.0)


def plan(table, mu, nu):
    return TransportPlan.from_table(table, mu, nu)


class TestConstruction:
    def test_metric_rejects_asymmetry(self):
        with pytest.raises(ValidationError):
            MetricSample(points=("a", "b"), dist=[[0.0, 1.0], [2.0, 0.0]])

    def test_metric_rejects_nonzero_diagonal(self):
        with pytest.raises(ValidationError):
            MetricSample(points=("a", "b"), dist=[[0.1, 1.0], [1.0, 0.0]])

    def test_metric_rejects_triangle_violation(self):
        d = [[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]]
        with pytest.raises(ValidationError):
            MetricSample(points=("a", "b", "c"), dist=d)

    def test_triangle_check_can_be_disabled(self):
        d = [[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]]
        space = MetricSample(points=("a", "b", "c"), dist=d,
                             validate_triangle=False)
        assert space.size == 3

    def test_metric_shape_mismatch(self):
        with pytest.raises(DimensionError):
            MetricSample(points=("a", "b"), dist=[[0.0]])

    def test_marginal_rejects_zero_weight(self):
        with pytest.raises(ValidationError):
            Marginal(weights=[0.0, 1.0])

    def test_marginal_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            Marginal(weights=[0.5, 0.6])

    def test_plan_rejects_negative_entry(self):
        with pytest.raises(ValidationError):
            plan([[0.6, -0.1], [0.2, 0.3]], uniform2(), uniform2())

    def test_plan_clamps_roundoff_negatives(self):
        p = plan([[0.5, -1e-15], [1e-15, 0.5 - 2e-15]], uniform2(), uniform2())
        assert np.min(p.p) == 0.0

    def test_plan_mass_must_be_one(self):
        with pytest.raises(ValidationError):
            plan([[0.25, 0.25], [0.25, 0.2]], uniform2(), uniform2())

    def test_plan_feasibility_flag(self):
        assert plan([[0.5, 0.0], [0.0, 0.5]], uniform2(), uniform2()).is_feasible
        skew = plan([[0.6, 0.0], [0.0, 0.4]], uniform2(), uniform2())
        assert not skew.is_feasible

    def test_cost_model_payoff_is_negation(self, rng):
        space = euclidean_metric(rng, 3)
        c = rng.uniform(0, 1, (3, 3))
        model = CostModel.from_table(c, space, space)
        assert np.array_equal(model.payoff, -model.c)
        assert model.lip_payoff >= 0.0

    def test_arrays_are_frozen(self):
        p = plan([[0.5, 0.0], [0.0, 0.5]], uniform2(), uniform2())
        with pytest.raises(ValueError):
            p.p[0, 0] = 1.0


class TestKL:
    def test_identity_is_zero(self, rng):
        mu = random_marginal(rng, 3)
        nu = random_marginal(rng, 4)
        pi = random_feasible_plan(rng, mu, nu)
        assert kl_divergence(pi, pi) == 0.0

    def test_diag_vs_uniform_is_log2(self):
        eta = plan([[0.5, 0.0], [0.0, 0.5]], uniform2(), uniform2())
        rho = plan([[0.25, 0.25], [0.25, 0.25]], uniform2(), uniform2())
        assert kl_divergence(eta, rho) == pytest.approx(LOG2, abs=1e-15)

    def test_absolute_continuity_failure_is_inf(self):
        eta = plan([[0.5, 0.0], [0.0, 0.5]], uniform2(), uniform2())
        rho = plan([[0.0, 0.5], [0.5, 0.0]], uniform2(), uniform2())
        assert kl_divergence(eta, rho) == math.inf

    def test_shape_mismatch(self, rng):
        mu2, mu3 = random_marginal(rng, 2), random_marginal(rng, 3)
        pi2 = random_feasible_plan(rng, mu2, mu2)
        pi3 = random_feasible_plan(rng, mu3, mu3)
        with pytest.raises(DimensionError):
            kl_divergence(pi2, pi3)

    @given(seed=st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_nonnegative(self, seed):
        r = np.random.default_rng(seed)
        mu = random_marginal(r, 3)
        nu = random_marginal(r, 3)
        eta = random_feasible_plan(r, mu, nu)
        rho = random_feasible_plan(r, mu, nu)
        assert kl_divergence(eta, rho) >= -1e-12


class TestProductPlan:
    def test_uniform_2x2(self):
        p = product_plan(uniform2(), uniform2())
        assert np.array_equal(p.p, np.full((2, 2), 0.25))
        assert p.row_residual <= 1e-15 and p.col_residual <= 1e-15

    def test_single_point_x(self):
        mu = Marginal(weights=[1.0])
        nu = Marginal(weights=[0.3, 0.7])
        assert np.allclose(product_plan(mu, nu).p, [[0.3, 0.7]], atol=0)

    def test_direct_multiplication(self):
        p = product_plan(Marginal(weights=[0.3, 0.7]),
                         Marginal(weights=[0.2, 0.8]))
        assert np.allclose(p.p, [[0.06, 0.24], [0.14, 0.56]], atol=1e-15)


class TestRelativeEntropy:
    def test_product_is_zero(self, rng):
        mu = random_marginal(rng, 4)
        nu = random_marginal(rng, 3)
        assert relative_entropy(product_plan(mu, nu), mu, nu) == 0.0

    def test_permutation_halves_give_minus_log2(self):
        mu = nu = uniform2()
        pi1 = plan([[0.5, 0.0], [0.0, 0.5]], mu, nu)
        pi2 = plan([[0.0, 0.5], [0.5, 0.0]], mu, nu)
        assert relative_entropy(pi1, mu, nu) == pytest.approx(-LOG2, abs=1e-15)
        assert relative_entropy(pi2, mu, nu) == pytest.approx(-LOG2, abs=1e-15)

    def test_matches_direct_double_sum(self, rng):
        mu = random_marginal(rng, 3)
        nu = random_marginal(rng, 4)
        pi = random_feasible_plan(rng, mu, nu)
        # independent direct-summation oracle
        expected = 0.0
        for i in range(3):
            for j in range(4):
                pij = pi.p[i, j]
                if pij > 0:
                    expected -= pij * math.log(pij / (mu.weights[i] * nu.weights[j]))
        assert relative_entropy(pi, mu, nu) == pytest.approx(expected, abs=1e-13)

    def test_requires_feasible_plan(self):
        skew = plan([[0.6, 0.0], [0.0, 0.4]], uniform2(), uniform2())
        with pytest.raises(FeasibilityError):
            relative_entropy(skew, uniform2(), uniform2())

    def test_nonpositive_and_zero_only_at_product(self, rng):
        mu = random_marginal(rng, 4)
        nu = random_marginal(rng, 4)
        assert relative_entropy(product_plan(mu, nu), mu, nu) == 0.0
        for _ in range(20):
            pi = random_feasible_plan(rng, mu, nu)
            h = relative_entropy(pi, mu, nu)
            assert h <= 0.0
            if np.max(np.abs(pi.p - np.outer(mu.weights, nu.weights))) > 1e-6:
                assert h < 0.0

    @given(seed=st.integers(0, 2 ** 32 - 1),
           lam=st.sampled_from([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
    @settings(max_examples=40, deadline=None)
    def test_concavity(self, seed, lam):
        r = np.random.default_rng(seed)
        mu = random_marginal(r, 3)
        nu = random_marginal(r, 3)
        pi1 = random_feasible_plan(r, mu, nu)
        pi2 = random_feasible_plan(r, mu, nu)
        mix = TransportPlan.from_table(lam * pi1.p + (1 - lam) * pi2.p, mu, nu)
        lhs = relative_entropy(mix, mu, nu)
        rhs = (lam * relative_entropy(pi1, mu, nu)
               + (1 - lam) * relative_entropy(pi2, mu, nu))
        assert lhs >= rhs - 1e-12

    def test_non_affinity_witness(self):
        # the 2x2 mixing example: H at the midpoint is 0, the average is -log 2
        mu = nu = uniform2()
        pi1 = plan([[0.5, 0.0], [0.0, 0.5]], mu, nu)
        pi2 = plan([[0.0, 0.5], [0.5, 0.0]], mu, nu)
        mid = TransportPlan.from_table(0.5 * pi1.p + 0.5 * pi2.p, mu, nu)
        assert relative_entropy(mid, mu, nu) == 0.0
        avg = 0.5 * relative_entropy(pi1, mu, nu) + 0.5 * relative_entropy(pi2, mu, nu)
        assert avg == pytest.approx(-LOG2, abs=1e-15)


class TestLinearCost:
    def test_constant_cost(self, rng):
        mu = random_marginal(rng, 3)
        nu = random_marginal(rng, 5)
        space_x = euclidean_metric(rng, 3)
        space_y = euclidean_metric(rng, 5)
        cost = CostModel.from_table(np.full((3, 5), 7.5), space_x, space_y)
        pi = random_feasible_plan(rng, mu, nu)
        assert linear_cost(pi, cost) == pytest.approx(7.5, abs=1e-12)

    def test_support_avoiding_cost(self):
        space = two_point_space()
        cost = CostModel.from_table([[0.0, 1.0], [1.0, 0.0]], space, space)
        pi = plan([[0.5, 0.0], [0.0, 0.5]], uniform2(), uniform2())
        assert linear_cost(pi, cost) == 0.0

    def test_matches_double_loop(self, rng):
        mu = random_marginal(rng, 4)
        nu = random_marginal(rng, 3)
        space_x = euclidean_metric(rng, 4)
        space_y = euclidean_metric(rng, 3)
        c = rng.uniform(0, 2, (4, 3))
        cost = CostModel.from_table(c, space_x, space_y)
        pi = random_feasible_plan(rng, mu, nu)
        expected = sum(c[i, j] * pi.p[i, j] for i in range(4) for j in range(3))
        assert linear_cost(pi, cost) == pytest.approx(expected, abs=1e-14)

    def test_shape_mismatch(self, rng):
        space = euclidean_metric(rng, 2)
        cost = CostModel.from_table(np.zeros((2, 2)), space, space)
        mu3 = random_marginal(rng, 3)
        pi = random_feasible_plan(rng, mu3, mu3)
        with pytest.raises(DimensionError):
            linear_cost(pi, cost)
