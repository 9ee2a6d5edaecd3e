import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubofoil.surrogate import (DesignSpace, DesignVariable, PolynomialSurrogate, RankDeficientError,
                                SampleSet, eval_rsm, fit_rsm, grad_rsm, monomial_basis, r_squared)

from _oracles import normal_equations_fit


def random_samples(rng, n, m, order, noise=0.0):
    x = rng.uniform(-2, 3, size=(m, n)) * rng.uniform(0.5, 20, size=n)
    basis = monomial_basis(n, order)
    beta = rng.normal(size=len(basis))
    y = np.array([sum(b * np.prod(row[list(k)]) for b, k in zip(beta, basis)) for row in x])
    y = y + noise * rng.normal(size=m)
    return SampleSet([f"v{i}" for i in range(n)], ["f"], x, y), dict(zip(basis, beta))


class TestDesignSpace:
    def test_step_and_grid(self):
        v = DesignVariable("T", 6.0, 20.0, 3)
        assert v.step == pytest.approx(2.0)
        np.testing.assert_allclose(v.grid(), [6, 8, 10, 12, 14, 16, 18, 20])

    def test_bad_bounds(self):
        with pytest.raises(ValueError, match="lower bound"):
            DesignVariable("x", 1.0, 1.0)
        with pytest.raises(ValueError, match="bit width"):
            DesignVariable("x", 0.0, 1.0, 0)

    def test_duplicate_names(self):
        with pytest.raises(ValueError, match="duplicate"):
            DesignSpace((DesignVariable("a", 0, 1), DesignVariable("a", 0, 2)))

    def test_per_variable_bits(self):
        sp = DesignSpace.from_bounds({"A": (0, 6), "T": (6, 20)}, {"A": 3, "T": 5})
        assert sp.total_bits == 8
        assert sp.names == ["A", "T"]

    def test_snap(self):
        sp = DesignSpace.from_bounds({"x": (0, 7)}, 3)
        np.testing.assert_allclose(sp.snap([2.4]), [2.0])
        np.testing.assert_allclose(sp.snap([99.0]), [7.0])

    def test_round_trip(self):
        sp = DesignSpace.from_bounds({"A": (0, 6), "B": (2, 5)}, {"A": 4, "B": 2})
        assert DesignSpace.from_dict(sp.to_dict()) == sp


class TestSampleSet:
    def test_csv_round_trip(self, tmp_path):
        s = SampleSet(["A", "T"], ["LD", "CL"], [[1.0, 6.5], [0.1, 7.25]], [[3.0, 0.5], [1e-17, 2.0]])
        s.to_csv(tmp_path / "s.csv")
        back = SampleSet.from_csv(tmp_path / "s.csv")
        assert back.variable_names == ("A", "T")
        np.testing.assert_array_equal(back.x, s.x)
        np.testing.assert_array_equal(back.y, s.y)

    def test_out_of_bounds_warns(self):
        s = SampleSet(["x"], ["f"], [[0.0], [5.0]], [1.0, 2.0])
        with pytest.warns(UserWarning, match="1 sample rows"):
            assert s.check_bounds(DesignSpace.from_bounds({"x": (0, 4)})) == 1

    def test_bad_header(self, tmp_path):
        (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            SampleSet.from_csv(tmp_path / "bad.csv")


class TestFit:
    @pytest.mark.parametrize("n,order", [(1, 2), (1, 4), (2, 2), (2, 4), (3, 2), (3, 4)])
    def test_matches_normal_equations(self, n, order):
        rng = np.random.default_rng(10 * n + order)
        s, _ = random_samples(rng, n, 3 * len(monomial_basis(n, order)), order, noise=0.3)
        model = fit_rsm(s, 0, order)
        ref = normal_equations_fit(s.x, s.y[:, 0], order)
        xs = rng.uniform(-1, 2, size=(20, n))
        want = [sum(c * np.prod(row[list(k)]) for k, c in ref.items()) for row in xs]
        np.testing.assert_allclose(eval_rsm(model, xs), want, rtol=1e-7, atol=1e-7)

    def test_exact_recovery(self):
        rng = np.random.default_rng(3)
        s, beta = random_samples(rng, 2, 40, 4)
        model = fit_rsm(s, "f", 4)
        for k, b in beta.items():
            assert model.coefficients[k] == pytest.approx(b, rel=1e-6, abs=1e-6)
        assert model.r_squared == pytest.approx(1.0, abs=1e-10)

    def test_quartic_needs_order_four(self):
        t = np.arange(6.0, 21.0)
        s = SampleSet(["T"], ["f"], t[:, None], (t - 6) * (20 - t) ** 3)
        assert fit_rsm(s, 0, 2).r_squared < 0.99
        assert fit_rsm(s, 0, 4).r_squared == pytest.approx(1.0, abs=1e-10)

    def test_underdetermined(self):
        s = SampleSet(["x", "y"], ["f"], np.eye(2), [1.0, 2.0])
        with pytest.raises(ValueError, match="underdetermined"):
            fit_rsm(s, 0, 2)

    def test_rank_deficient_names_terms(self):
        # x only takes two values, so x**2 cannot be told apart from x and 1
        x = np.array([[0.0, y] for y in range(5)] + [[1.0, y] for y in range(5)])
        s = SampleSet(["a", "b"], ["f"], x, x[:, 0] + x[:, 1])
        with pytest.raises(RankDeficientError) as err:
            fit_rsm(s, 0, 2)
        assert err.value.terms
        assert "a" in str(err.value)

    def test_unknown_objective(self):
        s = SampleSet(["x"], ["f"], np.arange(5.0)[:, None], np.arange(5.0))
        with pytest.raises(KeyError, match="unknown objective"):
            fit_rsm(s, "g", 2)

    def test_bad_order(self):
        s = SampleSet(["x"], ["f"], np.arange(9.0)[:, None], np.arange(9.0))
        with pytest.raises(ValueError, match="order"):
            fit_rsm(s, 0, 3)

    def test_constant_response(self):
        s = SampleSet(["x"], ["f"], np.arange(5.0)[:, None], np.full(5, 2.5))
        m = fit_rsm(s, 0, 2)
        assert m.r_squared == 1.0
        assert eval_rsm(m, [1.3]) == pytest.approx(2.5)

    def test_serialization(self):
        rng = np.random.default_rng(0)
        s, _ = random_samples(rng, 2, 30, 2, noise=0.1)
        m = fit_rsm(s, 0, 2)
        back = PolynomialSurrogate.from_dict(m.to_dict())
        assert back.coefficients == m.coefficients
        assert back.r_squared == m.r_squared


def test_r_squared_conventions():
    assert r_squared(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 1.0
    assert r_squared(np.array([1.0, 1.0]), np.array([1.0, 2.0])) == 0.0
    assert r_squared(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 2.0])) == pytest.approx(0.0)


class TestEvaluation:
    def test_single_and_batch(self):
        m = PolynomialSurrogate(2, 2, {(): 1.0, (0,): 2.0, (0, 1): -1.0, (1, 1): 0.5})
        assert isinstance(eval_rsm(m, [1.0, 2.0]), float)
        assert eval_rsm(m, [1.0, 2.0]) == pytest.approx(1 + 2 - 2 + 2)
        np.testing.assert_allclose(eval_rsm(m, [[1.0, 2.0], [0.0, 0.0]]), [3.0, 1.0])

    def test_dimension_check(self):
        m = PolynomialSurrogate(2, 2, {(): 1.0})
        with pytest.raises(ValueError, match="expected 2"):
            eval_rsm(m, [1.0])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([2, 4]))
    def test_gradient_matches_finite_differences(self, seed, order):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        basis = monomial_basis(n, order)
        m = PolynomialSurrogate(order, n, dict(zip(basis, rng.normal(size=len(basis)))))
        x = rng.uniform(-1.5, 1.5, n)
        h = 1e-6
        fd = np.array([(eval_rsm(m, x + h * e) - eval_rsm(m, x - h * e)) / (2 * h) for e in np.eye(n)])
        np.testing.assert_allclose(grad_rsm(m, x), fd, rtol=1e-6, atol=1e-6)
