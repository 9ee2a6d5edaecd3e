import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubofoil.hwadapt import (CapacityError, HardwareProfile, InfeasibleSplitError, adapt, even_split,
                              merge_copies, pas_split, quantize, spin_budget)
from qubofoil.pbool import ROSENBERG_AUX, SPLIT_COPY, PseudoBooleanPolynomial
from qubofoil.quadratize import QuboProblem, rosenberg_reduce

from _oracles import qubo_energies


def random_int_qubo(rng, n, r_max, scale=8, density=0.7):
    entries = {}
    for i in range(n):
        for j in range(i, n):
            if rng.random() < density:
                entries[(i, j)] = int(rng.integers(-scale * r_max, scale * r_max + 1))
    return QuboProblem(n, entries)


def minimizer_set(entries, n, offset=0.0, keep=None):
    bits, e = qubo_energies(entries, n, offset)
    best = e.min()
    rows = bits[e <= best + 1e-9]
    if keep is not None:
        rows = rows[:, :keep]
    return best, {tuple(int(v) for v in r) for r in rows}, bits[e <= best + 1e-9]


class TestQuantize:
    def test_rounding_and_scale(self):
        q = QuboProblem(2, {(0, 0): 1.0, (0, 1): -2.5, (1, 1): 0.26}, offset=3.0)
        qi, eps = quantize(q, HardwareProfile(epsilon=0.5))
        assert eps == 0.5
        assert qi.coefficients == {(0, 0): 2, (0, 1): -5, (1, 1): 1}
        assert qi.offset == 6.0

    def test_default_epsilon(self):
        q = QuboProblem(1, {(0, 0): -4.0})
        _, eps = quantize(q)
        assert eps == pytest.approx(4e-3)

    def test_dropped_entries_warn(self):
        q = QuboProblem(2, {(0, 0): 1.0, (1, 1): 0.1})
        with pytest.warns(UserWarning, match="1 coefficients rounded to zero"):
            qi, _ = quantize(q, HardwareProfile(epsilon=0.5))
        assert qi.coefficients == {(0, 0): 2}

    def test_all_zero_is_error(self):
        with pytest.raises(ValueError, match="every coefficient"):
            quantize(QuboProblem(1, {(0, 0): 0.1}), HardwareProfile(epsilon=1.0))

    @pytest.mark.filterwarnings("ignore:.*rounded to zero")
    def test_argmin_preserved(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            entries = {(i, j): float(rng.integers(-20, 21)) + 0.01 * rng.normal()
                       for i in range(6) for j in range(i, 6)}
            q = QuboProblem(6, entries)
            qi, _ = quantize(q, HardwareProfile(epsilon=0.25))
            _, a, _ = minimizer_set(q.coefficients, 6)
            _, b, _ = minimizer_set(qi.coefficients, 6)
            assert a <= b

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            HardwareProfile(r_max=0)
        with pytest.raises(ValueError):
            HardwareProfile(epsilon=-1.0)


@pytest.mark.parametrize("c,parts", [(300, 3), (-7, 2), (5, 5), (0, 4), (128, 2)])
def test_even_split(c, parts):
    w = even_split(c, parts)
    assert sum(w) == c
    assert max(w) - min(w) <= 1


class TestPas:
    def test_single_large_linear(self):
        q = QuboProblem(1, {(0, 0): 300})
        split, report = pas_split(q, HardwareProfile(r_max=127))
        s = report.splits[0]
        assert (s.copies, s.weights, s.mu) == (3, (100, 100, 100), 1)
        assert split.n == 3
        assert max(abs(v) for v in split.coefficients.values()) <= 127
        assert spin_budget(report) == {"logical": 1, "qubo_aux": 0, "physical_aux": 2, "total": 3}

    def test_in_range_is_untouched(self):
        q = QuboProblem(3, {(0, 0): 5, (0, 2): -127, (1, 1): 100})
        split, report = pas_split(q, HardwareProfile(r_max=127))
        assert split.n == 3
        assert split.coefficients == q.coefficients
        assert report.physical_aux == 0

    def test_large_coupling(self):
        q = QuboProblem(2, {(0, 1): -1000, (0, 0): 400, (1, 1): 450})
        split, _ = pas_split(q, HardwareProfile(r_max=127))
        assert max(abs(v) for v in split.coefficients.values()) <= 127
        best, mins, _ = minimizer_set(q.coefficients, 2)
        sbest, smins, _ = minimizer_set(split.coefficients, split.n, keep=2)
        assert sbest == best and smins == mins

    def test_registry_roles(self):
        p = PseudoBooleanPolynomial(3, {(0, 1, 2): 900.0, (0,): -5.0})
        q, _ = quantize(rosenberg_reduce(p), HardwareProfile(epsilon=1.0))
        split, report = pas_split(q)
        assert split.registry.count(SPLIT_COPY) == report.physical_aux > 0
        assert split.registry.count(ROSENBERG_AUX) == 1
        for e in split.registry:
            if e.role == SPLIT_COPY:
                assert e.parents[0] < q.n and e.spin >= q.n

    def test_needs_integers(self):
        with pytest.raises(ValueError, match="integer"):
            pas_split(QuboProblem(1, {(0, 0): 1.5}))

    def test_range_too_small(self):
        # every extra copy adds mu to each copy's diagonal, so tiny ranges cannot absorb large weights
        with pytest.raises(InfeasibleSplitError, match="linear coefficient"):
            pas_split(QuboProblem(1, {(0, 0): 24}), HardwareProfile(r_max=3))

    def test_copy_limit(self):
        with pytest.raises(InfeasibleSplitError) as err:
            pas_split(QuboProblem(1, {(0, 0): 10_000}), HardwareProfile(r_max=3, max_copies=8))
        assert err.value.spins == (0,)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([31, 63, 127]))
    def test_exact_under_copy_identification(self, seed, r_max):
        rng = np.random.default_rng(seed)
        q = random_int_qubo(rng, int(rng.integers(1, 5)), r_max)
        split, _ = pas_split(q, HardwareProfile(r_max=r_max))
        if split.n > 14:
            return
        assert all(abs(v) <= r_max for v in split.coefficients.values())
        best, mins, _ = minimizer_set(q.coefficients, q.n)
        sbest, smins, rows = minimizer_set(split.coefficients, split.n, keep=q.n)
        assert sbest == best
        assert smins == mins
        for row in rows:
            merged, bad = merge_copies(row.astype(int), split.registry)
            assert bad == 0


class TestAdapt:
    def test_capacity(self):
        q = QuboProblem(2, {(0, 0): 1.0, (0, 1): -1000.0})
        with pytest.raises(CapacityError, match="hardware holds"):
            adapt(q, HardwareProfile(r_max=127, epsilon=1.0, max_spins=4))

    def test_round_trip_energy_scale(self):
        q = QuboProblem(2, {(0, 0): 2.0, (0, 1): -3.0})
        split, report, eps = adapt(q, HardwareProfile(epsilon=0.01))
        bits, e = qubo_energies(q.coefficients, 2)
        for row, want in zip(bits, e):
            full = np.zeros(split.n)
            full[:2] = row
            merged, _ = merge_copies(full, split.registry)
            assert split.energy(merged) * eps == pytest.approx(want)


def test_merge_copies_majority():
    q = QuboProblem(1, {(0, 0): 300})
    split, _ = pas_split(q)
    merged, bad = merge_copies([0, 1, 1], split.registry)
    assert bad == 1
    np.testing.assert_array_equal(merged, [1, 1, 1])
