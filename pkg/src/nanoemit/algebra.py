"""Symbolic algebra of site-indexed two-level operators.

Each site carries the three non-trivial operators sigma^12 (lower),
sigma^21 (raise) and sigma^22 (project onto the upper state).  Products are
kept in a canonical form: factors sorted by ascending site with at most one
factor per site; same-site pairs reduce through the projector composition
table.  Operators on different sites commute.

On top of the plain algebra this module derives equations of motion for
expectation values under a Hamiltonian plus pairwise-decay dissipator, and
closes them with a mean-field (order 1) or third-cumulant (order 2)
truncation.  Coefficients may be numbers or LinExpr instances that stay
linear in the named model parameters (detunings, drive amplitudes, coherent
and dissipative couplings), which lets one symbolic derivation serve every
numeric scenario of the same size.
"""

from dataclasses import dataclass, field

import numpy as np

LOWER = "l"   # sigma^12 = |1><2|
RAISE = "r"   # sigma^21 = |2><1|
PROJECT = "p"  # sigma^22 = |2><2|

_KINDS = (LOWER, RAISE, PROJECT)

# same-site composition a*b -> sum of (coefficient, kind or None=identity)
_ONSITE = {
    (LOWER, LOWER): (),
    (RAISE, RAISE): (),
    (LOWER, RAISE): ((1.0, None), (-1.0, PROJECT)),
    (RAISE, LOWER): ((1.0, PROJECT),),
    (PROJECT, PROJECT): ((1.0, PROJECT),),
    (PROJECT, LOWER): (),
    (LOWER, PROJECT): ((1.0, LOWER),),
    (RAISE, PROJECT): (),
    (PROJECT, RAISE): ((1.0, RAISE),),
}

_ADJOINT_KIND = {LOWER: RAISE, RAISE: LOWER, PROJECT: PROJECT}


@dataclass(frozen=True)
class OpSymbol:
    site: int
    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.site < 0:
            raise ValueError("site index must be non-negative")


@dataclass(frozen=True)
class OpProduct:
    """Canonical product of per-site operators; the empty product is identity."""

    factors: tuple  # tuple of (site, kind), ascending site, one per site

    def __post_init__(self):
        sites = [s for s, _ in self.factors]
        if sites != sorted(sites) or len(set(sites)) != len(sites):
            raise ValueError("factors must be site-sorted with one factor per site")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def sites(self):
        return tuple(s for s, _ in self.factors)

    @property
    def n_sites(self):
        return len(self.factors)

    def is_identity(self):
        return not self.factors

    def adjoint(self):
        return OpProduct(tuple((s, _ADJOINT_KIND[k]) for s, k in self.factors))

    def __repr__(self):
        if not self.factors:
            return "1"
        names = {LOWER: "s12", RAISE: "s21", PROJECT: "s22"}
        return "*".join(f"{names[k]}[{s}]" for s, k in self.factors)


IDENTITY = OpProduct(())


def op(site, kind):
    return OpProduct(((site, kind),))


def lower(site):
    return op(site, LOWER)


def raise_(site):
    return op(site, RAISE)


def project(site):
    return op(site, PROJECT)


# ---------------------------------------------------------------------------
# Linear parameter expressions (symbolic coefficients)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinExpr:
    """Linear combination of model parameters with complex prefactors.

    Parameter keys: ("delta", s), ("v", s), ("vc", s), ("omega", a, b),
    ("gamma", a, b).  delta/omega/gamma are real-valued parameters; "vc"
    denotes the conjugate of the complex drive amplitude "v".
    """

    terms: tuple  # tuple of (key, complex)

    @staticmethod
    def param(*key):
        return LinExpr(((tuple(key), 1.0 + 0.0j),))

    def _as_dict(self):
        d = {}
        for key, c in self.terms:
            d[key] = d.get(key, 0.0) + c
        return {k: v for k, v in d.items() if v != 0.0}

    def __add__(self, other):
        if isinstance(other, LinExpr):
            d = self._as_dict()
            for key, c in other.terms:
                d[key] = d.get(key, 0.0) + c
            return LinExpr(tuple(sorted((k, v) for k, v in d.items() if v != 0.0)))
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, LinExpr):
            raise TypeError("product of two parameter expressions is not linear")
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        c = complex(scalar)
        return LinExpr(tuple((k, v * c) for k, v in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def conjugate(self):
        swap = {"v": "vc", "vc": "v"}
        out = []
        for key, c in self.terms:
            name = key[0]
            new_key = (swap.get(name, name),) + tuple(key[1:])
            out.append((new_key, c.conjugate()))
        return LinExpr(tuple(sorted(LinExpr(tuple(out))._as_dict().items())))

    def is_zero(self, tol=0.0):
        return all(abs(c) <= tol for _, c in self._as_dict().items())

    def items(self):
        return sorted(self._as_dict().items())

    def __repr__(self):
        if self.is_zero():
            return "0"
        return " + ".join(f"({c:.3g})*{key}" for key, c in self.items())


def _coef_conj(c):
    return c.conjugate()


def _coef_is_zero(c, tol=1e-14):
    if isinstance(c, LinExpr):
        return c.is_zero(tol)
    return abs(c) <= tol


def _coef_close(a, b, tol=1e-12):
    if isinstance(a, LinExpr) or isinstance(b, LinExpr):
        if not isinstance(a, LinExpr) or not isinstance(b, LinExpr):
            return False
        da, db = a._as_dict(), b._as_dict()
        keys = set(da) | set(db)
        return all(abs(da.get(k, 0.0) - db.get(k, 0.0)) <= tol for k in keys)
    return abs(a - b) <= tol


# ---------------------------------------------------------------------------
# Operator sums
# ---------------------------------------------------------------------------


class OpSum:
    """Sparse sum of canonical operator products with scalar coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms or {})

    @staticmethod
    def of(product, coeff=1.0 + 0.0j):
        return OpSum({product: coeff})

    def copy(self):
        return OpSum(self.terms)

    def _accumulate(self, product, coeff):
        if product in self.terms:
            s = self.terms[product] + coeff
        else:
            s = coeff
        if _coef_is_zero(s):
            self.terms.pop(product, None)
        else:
            self.terms[product] = s

    def __add__(self, other):
        out = self.copy()
        for p, c in other.terms.items():
            out._accumulate(p, c)
        return out

    def __sub__(self, other):
        out = self.copy()
        for p, c in other.terms.items():
            out._accumulate(p, -1.0 * c)
        return out

    def __mul__(self, other):
        if isinstance(other, OpSum):
            return multiply(self, other)
        out = OpSum()
        for p, c in self.terms.items():
            val = c * other if not isinstance(other, LinExpr) else other * c
            if not _coef_is_zero(val):
                out.terms[p] = val
        return out

    def __rmul__(self, other):
        return self.__mul__(other)

    def adjoint(self):
        out = OpSum()
        for p, c in self.terms.items():
            cc = _coef_conj(c)
            out._accumulate(p.adjoint(), cc)
        return out

    def equals(self, other, tol=1e-12):
        keys = set(self.terms) | set(other.terms)
        for k in keys:
            a = self.terms.get(k)
            b = other.terms.get(k)
            if a is None:
                a = 0.0 if not isinstance(b, LinExpr) else LinExpr(())
            if b is None:
                b = 0.0 if not isinstance(a, LinExpr) else LinExpr(())
            if not _coef_close(a, b, tol):
                return False
        return True

    def __repr__(self):
        if not self.terms:
            return "OpSum(0)"
        parts = [f"({c!r})*{p!r}" for p, c in self.terms.items()]
        return "OpSum(" + " + ".join(parts) + ")"


ZERO = OpSum()


def reduce_onsite(a, b):
    """Product of two same-site operators as an OpSum (9-entry table)."""
    if a.site != b.site:
        raise ValueError("reduce_onsite needs two operators on the same site")
    out = OpSum()
    for coeff, kind in _ONSITE[(a.kind, b.kind)]:
        prod = IDENTITY if kind is None else op(a.site, kind)
        out._accumulate(prod, complex(coeff))
    return out


def _merge_products(pa, pb):
    """Product of two canonical OpProducts -> list of (complex, OpProduct)."""
    per_site = {}
    for s, k in pa.factors:
        per_site.setdefault(s, []).append(k)
    for s, k in pb.factors:
        per_site.setdefault(s, []).append(k)
    results = [(1.0 + 0.0j, [])]
    for site in sorted(per_site):
        kinds = per_site[site]
        if len(kinds) == 1:
            alts = ((1.0, kinds[0]),)
        else:
            alts = _ONSITE[(kinds[0], kinds[1])]
            if not alts:
                return []
        new = []
        for coeff, factors in results:
            for acoef, akind in alts:
                nf = factors if akind is None else factors + [(site, akind)]
                new.append((coeff * acoef, nf))
        results = new
    return [(c, OpProduct(tuple(f))) for c, f in results]


def multiply(a, b):
    """Distributive product of two OpSums in canonical form."""
    out = OpSum()
    for pa, ca in a.terms.items():
        for pb, cb in b.terms.items():
            if isinstance(cb, LinExpr):
                coeff = cb * ca if not isinstance(ca, LinExpr) else None
            else:
                coeff = ca * cb
            if coeff is None:
                raise TypeError("cannot multiply two parameter-valued sums")
            for scalar, prod in _merge_products(pa, pb):
                out._accumulate(prod, coeff * scalar)
    return out


def commutator(a, b):
    return multiply(a, b) - multiply(b, a)


# ---------------------------------------------------------------------------
# Equations of motion
# ---------------------------------------------------------------------------


def adjoint_eom(o, hamiltonian, gamma):
    """d<o>/dt as an OpSum, for hbar = 1 (energies given as angular rates).

    Implements i[H, o] plus the adjoint dissipator
    sum_{s,s'} (gamma[s][s']/2) (2 s21_s o s12_s' - s21_s s12_s' o - o s21_s s12_s').
    gamma may hold numbers or LinExpr entries.  H must be Hermitian.
    """
    if isinstance(o, OpProduct):
        o = OpSum.of(o)
    if not hamiltonian.adjoint().equals(hamiltonian):
        raise ValueError("Hamiltonian is not Hermitian")
    rhs = commutator(hamiltonian, o) * 1j

    o_sites = set()
    for p in o.terms:
        o_sites.update(p.sites)
    n = len(gamma)
    for s in range(n):
        for sp in range(n):
            g = gamma[s][sp]
            if _coef_is_zero(g):
                continue
            # pairs not touching o commute through and cancel exactly
            if s not in o_sites and sp not in o_sites:
                continue
            r_s = OpSum.of(raise_(s))
            l_sp = OpSum.of(lower(sp))
            sandwich = multiply(multiply(r_s, o), l_sp)
            hop = multiply(r_s, l_sp)
            anti = multiply(hop, o) + multiply(o, hop)
            rhs = rhs + (0.5 * g) * (2.0 * sandwich - anti)
    return rhs


# ---------------------------------------------------------------------------
# Moment bookkeeping and cumulant closure
# ---------------------------------------------------------------------------

# representative operator kinds for tracked two-site moments, in storage order
PAIR_KINDS = (
    (RAISE, LOWER),    # <s21_a s12_b>
    (PROJECT, PROJECT),  # <s22_a s22_b>
    (PROJECT, LOWER),  # <s22_a s12_b>
    (LOWER, PROJECT),  # <s12_a s22_b>
    (LOWER, LOWER),    # <s12_a s12_b>
)

_PAIR_REPS = frozenset(PAIR_KINDS)


def tracked_moments(n_sites, order):
    """Ordered list of tracked OpProducts for a given closure order."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    moments = [project(s) for s in range(n_sites)]
    moments += [lower(s) for s in range(n_sites)]
    if order == 2:
        for a in range(n_sites):
            for b in range(a + 1, n_sites):
                for ka, kb in PAIR_KINDS:
                    moments.append(OpProduct(((a, ka), (b, kb))))
    return moments


def resolve_moment(product):
    """Map a canonical 1- or 2-site product onto a tracked representative.

    Returns (representative OpProduct, conjugate_flag).  Every non-identity
    product of at most two sites is either tracked or the adjoint of a
    tracked one.
    """
    if product.n_sites == 1:
        kind = product.factors[0][1]
        if kind in (PROJECT, LOWER):
            return product, False
        return product.adjoint(), True
    if product.n_sites == 2:
        kinds = tuple(k for _, k in product.factors)
        if kinds in _PAIR_REPS:
            return product, False
        adj = product.adjoint()
        kinds = tuple(k for _, k in adj.factors)
        if kinds in _PAIR_REPS:
            return adj, True
        raise ValueError(f"unresolvable product {product!r}")
    raise ValueError("resolve_moment handles products of at most two sites")


def cumulant_close(expr, order):
    """Close an OpSum over moments of at most `order` sites.

    Returns a list of (coefficient, refs) terms where refs is a tuple of
    OpProducts of <= order sites whose expectation values multiply together.
    Three-site products expand with the vanishing-third-cumulant rule
    <abc> = <ab><c> + <ac><b> + <bc><a> - 2<a><b><c>.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    out = []
    for product, coeff in expr.terms.items():
        k = product.n_sites
        if k > 3:
            raise ValueError("products over more than three sites cannot occur here")
        if k <= 1 or (order == 2 and k == 2):
            out.append((coeff, (product,) if k else ()))
            continue
        factors = [OpProduct((f,)) for f in product.factors]
        if order == 1:
            out.append((coeff, tuple(factors)))
            continue
        # order 2, three distinct sites
        a, b, c = factors
        ab = OpProduct(product.factors[0:2])
        ac = OpProduct((product.factors[0], product.factors[2]))
        bc = OpProduct(product.factors[1:3])
        out.append((coeff, (ab, c)))
        out.append((coeff, (ac, b)))
        out.append((coeff, (bc, a)))
        out.append((-2.0 * coeff, (a, b, c)))
    return out


# ---------------------------------------------------------------------------
# Symbolic ODE system generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ODESystem:
    """Closed symbolic moment equations for N emitters at a closure order.

    equations[i] lists (LinExpr coefficient, refs) terms for d<moment_i>/dt,
    each ref being (tracked moment position, conjugate flag).
    """

    n_sites: int
    order: int
    moments: tuple
    equations: tuple
    index: dict = field(repr=False, default=None)

    def moment_index(self):
        return {m: i for i, m in enumerate(self.moments)}


def symbolic_hamiltonian(n_sites):
    """H/hbar with parameter coefficients, in the rotating frame.

    H = sum_s delta_s s22_s - sum_{a,b} omega_ab s21_a s12_b
        + sum_s (v_s s21_s + conj(v_s) s12_s)
    The drive terms carry the "v"/"vc" parameters; any time envelope is a
    real factor applied at evaluation time.  omega symbols are stored with
    sorted indices (the coherent matrix is symmetric for real dipoles).
    """
    h = OpSum()
    for s in range(n_sites):
        h = h + OpSum.of(project(s), LinExpr.param("delta", s))
    for a in range(n_sites):
        for b in range(n_sites):
            hop = multiply(OpSum.of(raise_(a)), OpSum.of(lower(b)))
            h = h + hop * (-1.0 * LinExpr.param("omega", min(a, b), max(a, b)))
    for s in range(n_sites):
        h = h + OpSum.of(raise_(s), LinExpr.param("v", s))
        h = h + OpSum.of(lower(s), LinExpr.param("vc", s))
    return h


def symbolic_gamma(n_sites):
    """Symmetric symbolic dissipative matrix (gamma symbols carry sorted indices)."""
    return [
        [LinExpr.param("gamma", min(s, sp), max(s, sp)) for sp in range(n_sites)]
        for s in range(n_sites)
    ]


def generate_ode_system(n_sites, order):
    """Derive and close the moment equations for N emitters symbolically."""
    if n_sites < 1:
        raise ValueError("need at least one site")
    moments = tracked_moments(n_sites, order)
    index = {m: i for i, m in enumerate(moments)}
    h = symbolic_hamiltonian(n_sites)
    gamma = symbolic_gamma(n_sites)

    equations = []
    for mom in moments:
        rhs = adjoint_eom(mom, h, gamma)
        closed = cumulant_close(rhs, order)
        terms = []
        for coeff, refs in closed:
            resolved = []
            for ref in refs:
                rep, conj = resolve_moment(ref)
                resolved.append((index[rep], conj))
            if not isinstance(coeff, LinExpr):
                raise AssertionError("symbolic generation produced numeric coefficient")
            terms.append((coeff, tuple(sorted(resolved))))
        equations.append(tuple(terms))
    return ODESystem(
        n_sites=n_sites,
        order=order,
        moments=tuple(moments),
        equations=tuple(equations),
        index=index,
    )


# ---------------------------------------------------------------------------
# Pretty printer (documentation / golden-file aid)
# ---------------------------------------------------------------------------


def format_equations(system):
    """Render the generated equations as plain-text math, one per line."""
    lines = []
    names = {"delta": "Delta", "v": "v", "vc": "v*", "omega": "Omega", "gamma": "Gamma"}

    def fmt_coeff(c):
        parts = []
        for key, val in c.items():
            idx = ",".join(str(i) for i in key[1:])
            parts.append(f"({val.real:+.3g}{val.imag:+.3g}i)*{names[key[0]]}[{idx}]")
        return " + ".join(parts) if parts else "0"

    for mom, eq in zip(system.moments, system.equations):
        pieces = []
        for coeff, refs in eq:
            factors = "*".join(
                ("conj" if conj else "") + f"<{system.moments[i]!r}>" for i, conj in refs
            )
            pieces.append(f"[{fmt_coeff(coeff)}]" + ("*" + factors if factors else ""))
        lines.append(f"d<{mom!r}>/dt = " + (" + ".join(pieces) if pieces else "0"))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Dense matrix representation (small-N verification aid)
# ---------------------------------------------------------------------------

_MATS = {
    LOWER: np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),   # |1><2|
    RAISE: np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex),   # |2><1|
    PROJECT: np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex),  # |2><2|
}


def product_matrix(product, n_sites):
    """Dense 2^n x 2^n matrix of a product; site 0 is the least significant bit.

    Basis state index x has emitter s excited when bit s of x is set.
    """
    out = np.eye(1, dtype=complex)
    kind_by_site = dict(product.factors)
    for s in range(n_sites - 1, -1, -1):
        m = _MATS[kind_by_site[s]] if s in kind_by_site else np.eye(2, dtype=complex)
        out = np.kron(out, m)
    return out


def opsum_matrix(opsum, n_sites):
    dim = 2**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in opsum.terms.items():
        if isinstance(c, LinExpr):
            raise TypeError("cannot build a matrix from parameter coefficients")
        out += c * product_matrix(p, n_sites)
    return out
