"""Reference computations that share no code with the package under test."""
import itertools

import numpy as np


def all_bits(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=float)[:, ::-1]


def qubo_energies(entries, n, offset=0.0):
    """Energy of every assignment from a plain {(i, j): value} dict."""
    q = all_bits(n)
    e = np.full(len(q), float(offset))
    for (i, j), v in entries.items():
        e += v * q[:, i] * q[:, j]
    return q, e


def hubo_energies(terms, n):
    q = all_bits(n)
    e = np.zeros(len(q))
    for idx, c in terms.items():
        e += c * (np.prod(q[:, list(idx)], axis=1) if idx else 1.0)
    return q, e


def monomial_value(x, idx):
    return np.prod([x[i] for i in idx]) if idx else 1.0


def normal_equations_fit(x, y, order):
    """Plain least squares on raw (unscaled) monomials via the normal equations."""
    n = x.shape[1]
    basis = [m for d in range(order + 1) for m in itertools.combinations_with_replacement(range(n), d)]
    a = np.array([[monomial_value(row, m) for m in basis] for row in x])
    beta = np.linalg.solve(a.T @ a, a.T @ y)
    return dict(zip(basis, beta))


def fixed_point(lower, upper, bits):
    """Value of every bit pattern for one variable, LSB first."""
    levels = np.arange(2 ** bits)
    return lower + (upper - lower) * levels / (2 ** bits - 1)


def naca_thickness(x, t):
    """Closed trailing edge half-thickness of the 4-digit series."""
    return 5 * t * (0.2969 * np.sqrt(x) - 0.1260 * x - 0.3516 * x ** 2 + 0.2843 * x ** 3 - 0.1036 * x ** 4)


def first_at_or_below(values, threshold):
    for k, v in enumerate(values):
        if v <= threshold:
            return k
    return None


def hubo_energies_masked(terms, n):
    """Like hubo_energies, but reads bits straight from the row index; scales to 16 variables."""
    idx = np.arange(2 ** n)
    e = np.zeros(len(idx))
    for term, c in terms.items():
        mask = sum(1 << i for i in term)
        e += c * ((idx & mask) == mask)
    return e


def naca_objectives(a, b, t, skew=0.75):
    """Synthetic LD, CL and CD of the quartic NACA family, written out longhand."""
    ua, ub, ut = a / 6.0, (b - 2.0) / 3.0, (t - 6.0) / 14.0
    sym = 16.0 * ut ** 2 * (1.0 - ut) ** 2
    lop = 256.0 / 27.0 * ut * (1.0 - ut) ** 3
    ld = (40.0 + 45.0 * ua - 10.0 * ua ** 2 + 8.0 * ub - 14.0 * (ub - 0.55) ** 2
          + 60.0 * ((1.0 - skew) * sym + skew * lop) + 6.0 * ua * ut - 4.0 * ub * ut)
    d = t - 10.0
    cl = 0.45 + 0.09 * a + 0.02 * (b - 4.0) + 0.1 * d - 0.005 * d ** 2
    cd = 0.0065 + 0.0004 * a + 0.0002 * (b - 4.0) ** 2 + 1e-4 * d ** 2 + skew * 2e-6 * d ** 3 + 1e-7 * d ** 4
    return ld, cl, cd


def pairwise_nondominated(vals, senses):
    """O(n^2) scan; senses are +1 for maximize and -1 for minimize."""
    v = np.asarray(vals, float) * np.asarray(senses, float)
    out = []
    for i in range(len(v)):
        out.append(not any(np.all(v[j] >= v[i]) and np.any(v[j] > v[i]) for j in range(len(v))))
    return out
