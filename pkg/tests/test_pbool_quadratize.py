import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubofoil.pbool import (DESIGN_BIT, ROSENBERG_AUX, PseudoBooleanPolynomial, VariableRegistry,
                            compile_hubo, decode_point, encode_value, eval_pbp, multilinear_product,
                            value_to_bits)
from qubofoil.quadratize import (IsingModel, PenaltyPolicy, QuboProblem, UnsupportedDegreeError,
                                 flip_bounds, ising_to_qubo, plan_substitutions, qubo_from_quadratic,
                                 qubo_to_ising, rosenberg_reduce, select_lambda)
from qubofoil.surrogate import DesignSpace, PolynomialSurrogate, monomial_basis

from _oracles import all_bits, fixed_point, hubo_energies, qubo_energies


def random_pbp(rng, n, degree, terms):
    out = {}
    for _ in range(terms):
        d = int(rng.integers(1, degree + 1))
        idx = tuple(sorted(rng.choice(n, size=d, replace=False)))
        out[idx] = out.get(idx, 0.0) + float(rng.normal() * rng.choice([1, 10]))
    out[tuple(sorted(rng.choice(n, size=degree, replace=False)))] = float(rng.normal() + 3)
    return PseudoBooleanPolynomial(n, out)


class TestPolynomial:
    def test_idempotent_collapse(self):
        p = PseudoBooleanPolynomial(3, [((0, 0, 1), 2.0), ((1, 0), 1.0), ((2, 2), -1.0)])
        assert p.terms == {(0, 1): 3.0, (2,): -1.0}

    def test_prunes_tiny(self):
        p = PseudoBooleanPolynomial(2, {(0,): 1.0, (1,): 1e-17})
        assert p.terms == {(0,): 1.0}

    def test_index_range(self):
        with pytest.raises(ValueError, match="outside"):
            PseudoBooleanPolynomial(2, {(0, 2): 1.0})

    def test_product_is_multilinear(self):
        a = {(): 1.0, (0,): 2.0}
        sq = multilinear_product(a, a)
        assert sq == {(): 1.0, (0,): 8.0}  # (1 + 2q)^2 = 1 + 8q for binary q

    def test_eval_batch(self):
        p = PseudoBooleanPolynomial(3, {(): 1.0, (0, 2): 2.0, (1,): -1.0})
        q, e = hubo_energies(p.terms, 3)
        np.testing.assert_allclose(eval_pbp(p, q), e)

    def test_round_trip(self):
        p = PseudoBooleanPolynomial(4, {(0, 1, 3): 1.5, (2,): -2.0})
        assert PseudoBooleanPolynomial.from_dict(json.loads(p.to_json())) == p


class TestEncoding:
    @pytest.mark.parametrize("bits", [1, 3, 5])
    def test_every_pattern(self, bits):
        sp = DesignSpace.from_bounds({"T": (6.0, 20.0)}, bits)
        want = fixed_point(6.0, 20.0, bits)
        for level in range(2 ** bits):
            pattern = [(level >> k) & 1 for k in range(bits)]
            assert encode_value(sp, 0, pattern) == pytest.approx(want[level], abs=1e-12)
            np.testing.assert_array_equal(value_to_bits(sp, 0, want[level]), pattern)

    def test_lsb_first(self):
        sp = DesignSpace.from_bounds({"x": (0.0, 7.0)}, 3)
        assert encode_value(sp, 0, [1, 0, 0]) == 1.0
        assert encode_value(sp, 0, [0, 0, 1]) == 4.0

    def test_wrong_width(self):
        sp = DesignSpace.from_bounds({"x": (0.0, 7.0)}, 3)
        with pytest.raises(ValueError, match="3 bits"):
            encode_value(sp, 0, [1, 0])

    def test_registry_layout(self):
        sp = DesignSpace.from_bounds({"A": (0, 6), "T": (6, 20)}, {"A": 2, "T": 3})
        reg = VariableRegistry.for_space(sp)
        assert [(e.variable, e.bit) for e in reg] == [("A", 1), ("A", 2), ("T", 1), ("T", 2), ("T", 3)]
        assert reg.count(DESIGN_BIT) == 5
        assert VariableRegistry.from_list(reg.to_list()) == reg


def random_model(rng, space, order):
    basis = monomial_basis(len(space), order)
    return PolynomialSurrogate(order, len(space), dict(zip(basis, rng.normal(size=len(basis)))))


class TestCompile:
    @pytest.mark.parametrize("order,bits", [(2, {"a": 3, "b": 4}), (4, {"a": 2, "b": 3}), (4, {"a": 4, "b": 1})])
    def test_matches_surrogate_everywhere(self, order, bits):
        rng = np.random.default_rng(order + sum(bits.values()))
        sp = DesignSpace.from_bounds({"a": (-1.0, 2.0), "b": (6.0, 20.0)}, bits)
        model = random_model(rng, sp, order)
        p, reg = compile_hubo(model, sp)
        assert p.degree <= order
        ga, gb = fixed_point(-1.0, 2.0, bits["a"]), fixed_point(6.0, 20.0, bits["b"])
        q = all_bits(sp.total_bits)
        for row in q:
            la = int(row[:bits["a"]] @ (1 << np.arange(bits["a"])))
            lb = int(row[bits["a"]:] @ (1 << np.arange(bits["b"])))
            want = model([ga[la], gb[lb]])
            assert eval_pbp(p, row) == pytest.approx(want, rel=1e-9, abs=1e-9)
            np.testing.assert_allclose(decode_point(sp, reg, row), [ga[la], gb[lb]])

    def test_maximize_negates(self):
        rng = np.random.default_rng(1)
        sp = DesignSpace.from_bounds({"x": (0.0, 1.0)}, 3)
        model = random_model(rng, sp, 4)
        pmin, _ = compile_hubo(model, sp, "minimize")
        pmax, _ = compile_hubo(model, sp, "maximize")
        assert pmax == pmin.scaled(-1.0)

    def test_dimension_mismatch(self):
        sp = DesignSpace.from_bounds({"x": (0.0, 1.0)}, 3)
        with pytest.raises(ValueError, match="variables"):
            compile_hubo(PolynomialSurrogate(2, 2, {(): 1.0}), sp)

    def test_bad_sense(self):
        sp = DesignSpace.from_bounds({"x": (0.0, 1.0)}, 3)
        with pytest.raises(ValueError, match="sense"):
            compile_hubo(PolynomialSurrogate(2, 1, {(): 1.0}), sp, "largest")


def exact_max_flip(p):
    q, e = hubo_energies(p.terms, p.num_vars)
    idx = np.arange(len(q))
    worst = 0.0
    for k in range(p.num_vars):
        # row order of all_bits puts variable k at bit k of the row index
        worst = max(worst, float(np.max(np.abs(e - e[idx ^ (1 << k)]))))
    return worst


class TestRosenberg:
    def test_flip_bound_dominates(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = random_pbp(rng, 6, 4, 12)
            assert np.max(flip_bounds(p)) >= exact_max_flip(p) - 1e-9
            assert select_lambda(p) >= 1.25 * exact_max_flip(p) - 1e-9

    def test_degree_four_uses_two_aux(self):
        p = PseudoBooleanPolynomial(4, {(0, 1, 2, 3): 1.0})
        q = rosenberg_reduce(p)
        assert q.n == 6
        assert [e.role for e in q.registry][4:] == [ROSENBERG_AUX, ROSENBERG_AUX]

    def test_shared_pair_reused(self):
        plan = plan_substitutions([(0, 1, 2), (0, 1, 3), (0, 1, 2, 3)])
        assert plan[0] == (0, 1)
        assert len(plan) == 2

    def test_degree_five_rejected(self):
        with pytest.raises(UnsupportedDegreeError):
            rosenberg_reduce(PseudoBooleanPolynomial(5, {(0, 1, 2, 3, 4): 1.0}))

    def test_quadratic_passthrough(self):
        p = PseudoBooleanPolynomial(3, {(): 2.0, (0,): 1.0, (0, 2): -3.0})
        q = qubo_from_quadratic(p)
        assert q.n == 3 and q.offset == 2.0 and not q.penalties
        with pytest.raises(UnsupportedDegreeError):
            qubo_from_quadratic(PseudoBooleanPolynomial(3, {(0, 1, 2): 1.0}))

    def test_consistent_assignments_reproduce_hubo(self):
        rng = np.random.default_rng(8)
        p = random_pbp(rng, 5, 4, 10)
        q = rosenberg_reduce(p)
        for bits in all_bits(5):
            full = list(bits) + [bits[i] * bits[j] for i, j in (r.parents for r in q.penalties)]
            assert q.energy(full) == pytest.approx(eval_pbp(p, bits), abs=1e-9)

    def test_objective_entries_strip_penalties(self):
        p = PseudoBooleanPolynomial(3, {(0, 1, 2): 2.0})
        q = rosenberg_reduce(p)
        obj = {k: v for k, v in q.objective_entries().items() if abs(v) > 1e-12}
        assert obj == {(2, 3): 2.0}

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_minima_agree(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 7))
        p = random_pbp(rng, n, int(rng.integers(3, 5)), int(rng.integers(2, 9)))
        q = rosenberg_reduce(p)
        if q.n > 12:
            return
        _, eh = hubo_energies(p.terms, n)
        qa, eq = qubo_energies(q.coefficients, q.n, q.offset)
        assert eq.min() == pytest.approx(eh.min(), abs=1e-9)
        for row in qa[eq <= eq.min() + 1e-9]:
            for r in q.penalties:
                assert row[r.aux] == row[r.parents[0]] * row[r.parents[1]]

    def test_fixed_policy(self):
        p = PseudoBooleanPolynomial(3, {(0, 1, 2): 1.0})
        q = rosenberg_reduce(p, PenaltyPolicy(mode="fixed", lam=7.0))
        assert q.penalties[0].lam == 7.0
        with pytest.raises(ValueError):
            PenaltyPolicy(eta=1.0)


class TestQuboProblem:
    def test_lower_entries_fold(self):
        q = QuboProblem(2, {(1, 0): 2.0, (0, 1): 1.0})
        assert q.coefficients == {(0, 1): 3.0}

    def test_energy_matches_enumeration(self):
        q = QuboProblem(3, {(0, 0): 1.0, (0, 2): -2.0, (1, 2): 0.5}, offset=0.25)
        bits, e = qubo_energies(q.coefficients, 3, 0.25)
        np.testing.assert_allclose(q.energy(bits), e)

    def test_json_round_trip(self):
        p = PseudoBooleanPolynomial(4, {(0, 1, 2): 1.5, (3,): -1.0})
        q = rosenberg_reduce(p)
        back = QuboProblem.from_json(q.to_json())
        assert back.coefficients == q.coefficients
        assert back.registry == q.registry
        assert back.penalties == q.penalties

    def test_version_mismatch(self):
        doc = QuboProblem(1, {(0, 0): 1.0}).to_dict()
        doc["version"] = 99
        with pytest.raises(ValueError, match="version"):
            QuboProblem.from_dict(doc)


class TestIsing:
    def test_two_spin_example(self):
        model = qubo_to_ising(QuboProblem(2, {(0, 1): 4.0}))
        assert model.couplings == {(0, 1): -1.0}
        np.testing.assert_allclose(model.fields, [-1.0, -1.0])
        assert model.offset == 1.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_energy_equality(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        entries = {(i, j): float(rng.normal()) for i in range(n) for j in range(i, n) if rng.random() < 0.6}
        q = QuboProblem(n, entries, float(rng.normal()))
        model = qubo_to_ising(q)
        bits, e = qubo_energies(q.coefficients, n, q.offset)
        np.testing.assert_allclose(model.energy(2 * bits - 1), e, atol=1e-12)
        back = ising_to_qubo(model)
        np.testing.assert_allclose(back.energy(bits), e, atol=1e-12)

    def test_isingmodel_energy(self):
        m = IsingModel({(0, 1): 2.0}, np.array([1.0, 0.0]), 0.5)
        assert m.energy([1, 1]) == pytest.approx(-2.0 - 1.0 + 0.5)
