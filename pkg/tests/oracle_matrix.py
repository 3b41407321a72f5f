"""Independent matrix-representation oracle for the moment equations.

Builds d<o>/dt directly from dense 2^n x 2^n matrices: the adjoint
Liouvillian of o is decomposed in the product operator basis, and the
resulting linear combination of expectation values is evaluated against a
given moment table (closing three-site terms with the same vanishing
third-cumulant rule, transcribed here independently of the symbolic engine).
"""

import itertools

import numpy as np

from nanoemit import algebra as alg


def basis_products(n):
    kinds = [None, alg.LOWER, alg.RAISE, alg.PROJECT]
    prods = []
    for combo in itertools.product(kinds, repeat=n):
        factors = tuple((s, k) for s, k in enumerate(combo) if k is not None)
        prods.append(alg.OpProduct(factors))
    return prods


def adjoint_liouvillian_matrix(o_matrix, h_matrix, gamma_rates, n):
    out = 1j * (h_matrix @ o_matrix - o_matrix @ h_matrix)
    for s in range(n):
        for sp in range(n):
            g = gamma_rates[s][sp]
            if g == 0.0:
                continue
            r_s = alg.product_matrix(alg.raise_(s), n)
            l_sp = alg.product_matrix(alg.lower(sp), n)
            out += 0.5 * g * (
                2.0 * r_s @ o_matrix @ l_sp - r_s @ l_sp @ o_matrix - o_matrix @ r_s @ l_sp
            )
    return out


def decompose_in_basis(matrix, basis, n):
    cols = np.stack([alg.product_matrix(p, n).reshape(-1) for p in basis], axis=1)
    coefs, *_ = np.linalg.lstsq(cols, matrix.reshape(-1), rcond=None)
    return coefs


def lookup_moment(product, values, index):
    if product in index:
        return values[index[product]]
    adj = product.adjoint()
    if adj in index:
        return np.conj(values[index[adj]])
    raise KeyError(f"moment {product!r} not resolvable")


def basis_expectation(product, values, index):
    k = product.n_sites
    if k == 0:
        return 1.0 + 0.0j
    if k <= 2:
        return lookup_moment(product, values, index)
    if k != 3:
        raise ValueError("only products of up to three sites occur")
    f = product.factors
    one = [alg.OpProduct((fi,)) for fi in f]
    ab = alg.OpProduct(f[0:2])
    ac = alg.OpProduct((f[0], f[2]))
    bc = alg.OpProduct(f[1:3])
    return (
        lookup_moment(ab, values, index) * lookup_moment(one[2], values, index)
        + lookup_moment(ac, values, index) * lookup_moment(one[1], values, index)
        + lookup_moment(bc, values, index) * lookup_moment(one[0], values, index)
        - 2.0
        * lookup_moment(one[0], values, index)
        * lookup_moment(one[1], values, index)
        * lookup_moment(one[2], values, index)
    )


class MatrixOracle:
    """Closed moment-equation right-hand side derived purely from matrices."""

    def __init__(self, moments, h_matrix, gamma_rates, n):
        self.moments = list(moments)
        self.index = {m: i for i, m in enumerate(self.moments)}
        self.basis = basis_products(n)
        self.decompositions = []
        for mom in self.moments:
            o_mat = alg.product_matrix(mom, n)
            l_mat = adjoint_liouvillian_matrix(o_mat, h_matrix, gamma_rates, n)
            self.decompositions.append(decompose_in_basis(l_mat, self.basis, n))

    def rhs(self, values):
        out = np.zeros(len(self.moments), dtype=complex)
        for i, coefs in enumerate(self.decompositions):
            total = 0.0 + 0.0j
            for coef, product in zip(coefs, self.basis):
                if abs(coef) < 1e-13:
                    continue
                total += coef * basis_expectation(product, values, self.index)
            out[i] = total
        return out


def random_factorized_values(moments, index, n, rng):
    values = np.zeros(len(moments), dtype=complex)
    pops = rng.uniform(0.0, 1.0, n)
    cohs = 0.35 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    for s in range(n):
        values[index[alg.project(s)]] = pops[s]
        values[index[alg.lower(s)]] = cohs[s]

    def single(product):
        rep, conj = alg.resolve_moment(product)
        v = values[index[rep]]
        return np.conj(v) if conj else v

    for m in moments:
        if m.n_sites == 2:
            (a, ka), (b, kb) = m.factors
            values[index[m]] = single(alg.op(a, ka)) * single(alg.op(b, kb))
    return values


def random_correlated_values(moments, rng):
    return 0.3 * (rng.normal(size=len(moments)) + 1j * rng.normal(size=len(moments)))
