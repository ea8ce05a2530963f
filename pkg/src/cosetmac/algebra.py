"""Finite fields, finite Abelian groups and nested coset codes.

Field and group elements are small non-negative integers.  Matrices are
dense row-major numpy integer arrays.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

FIELD_CAP = 256
ENUM_CAP = 2 ** 20


class CapExceeded(ValueError):
    """An exhaustive enumeration would exceed the configured cap."""

    def __init__(self, what, required, cap):
        super().__init__(f"{what}: {required} elements required, cap is {cap}")
        self.required = required
        self.cap = cap


def is_prime(p):
    p = int(p)
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


def prime_power(q):
    """Return (p, e) with q = p**e, or None if q is not a prime power."""
    q = int(q)
    if q < 2:
        return None
    for p in range(2, q + 1):
        if q % p == 0:
            if not is_prime(p):
                return None
            e = 0
            while q % p == 0:
                q //= p
                e += 1
            return (p, e) if q == 1 else None
    return None


def smallest_prime_power_geq(a):
    a = int(a)
    if a < 1:
        raise ValueError("a must be a positive integer")
    k = max(a, 2)
    while prime_power(k) is None:
        k += 1
    return k


# polynomials are coefficient tuples, lowest degree first, monic
DEFAULT_POLYS = {
    (2, 2): (1, 1, 1),        # x^2 + x + 1
    (2, 3): (1, 1, 0, 1),     # x^3 + x + 1
    (2, 4): (1, 1, 0, 0, 1),  # x^4 + x + 1
    (3, 2): (1, 0, 1),        # x^2 + 1
    (3, 3): (1, 2, 0, 1),     # x^3 + 2x + 1
}


def _poly_mulmod(a, b, poly, p):
    e = len(poly) - 1
    prod = [0] * (2 * e - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            prod[i + j] = (prod[i + j] + ai * bj) % p
    for d in range(len(prod) - 1, e - 1, -1):
        c = prod[d]
        if c:
            for t in range(e + 1):
                prod[d - e + t] = (prod[d - e + t] - c * poly[t]) % p
    return prod[:e]


def _digits(x, p, e):
    return [(x // p ** i) % p for i in range(e)]


def _undigits(d, p):
    return sum(int(c) * p ** i for i, c in enumerate(d))


def _is_irreducible(poly, p):
    # no roots is enough for degree <= 3; otherwise test all monic factors
    e = len(poly) - 1
    for d in range(1, e // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            f = list(low) + [1]
            # polynomial remainder of poly by f
            r = list(poly)
            for k in range(len(r) - 1, d - 1, -1):
                c = r[k]
                if c:
                    for t in range(d + 1):
                        r[k - d + t] = (r[k - d + t] - c * f[t]) % p
            if not any(r[:d]):
                return False
    return True


def _find_poly(p, e):
    for low in itertools.product(range(p), repeat=e):
        poly = tuple(low) + (1,)
        if poly[0] and _is_irreducible(poly, p):
            return poly
    raise ValueError(f"no irreducible polynomial of degree {e} over GF({p})")


@dataclass(frozen=True)
class FieldSpec:
    """Finite field GF(p**e).

    For e > 1 the element x encodes the polynomial whose coefficients are the
    base-p digits of x (least significant first), so for GF(4) with x^2+x+1
    the codes 0, 1, 2, 3 stand for 0, 1, x, x+1.
    """

    p: int
    e: int
    poly: tuple = ()
    add_tab: np.ndarray = field(repr=False, compare=False, default=None)
    mul_tab: np.ndarray = field(repr=False, compare=False, default=None)
    neg_tab: np.ndarray = field(repr=False, compare=False, default=None)
    inv_tab: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def q(self):
        return self.p ** self.e

    @property
    def order(self):
        return self.q

    def add_table(self):
        return self.add_tab

    def add(self, x, y):
        return self.add_tab[x, y]

    def sub(self, x, y):
        return self.add_tab[x, self.neg_tab[y]]

    def neg(self, x):
        return self.neg_tab[x]

    def mul(self, x, y):
        return self.mul_tab[x, y]

    def inv(self, x):
        if np.any(np.asarray(x) == 0):
            raise ZeroDivisionError("zero has no inverse")
        return self.inv_tab[x]

    def matmul(self, a, b):
        """Matrix product over the field; a is (r, t), b is (t, n)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.shape[-1] != b.shape[0]:
            raise ValueError(f"dimension mismatch {a.shape} x {b.shape}")
        if self.e == 1:
            if a.shape[-1] * (self.p - 1) ** 2 < 2 ** 53:
                # float products are exact here and go through BLAS
                return (a.astype(float) @ b.astype(float)).astype(np.int64) % self.p
            return (a @ b) % self.p
        out = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        for t in range(b.shape[0]):
            term = self.mul_tab[a[..., t, None], b[t]]
            out = self.add_tab[out, term]
        return out

    def vadd(self, x, y):
        return self.add_tab[np.asarray(x), np.asarray(y)]


def field_make(p, e=1, poly=None):
    p, e = int(p), int(e)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if e < 1:
        raise ValueError("extension degree must be >= 1")
    q = p ** e
    if q > FIELD_CAP:
        raise ValueError(f"GF({p}^{e}) exceeds the supported order {FIELD_CAP}")
    els = np.arange(q)
    if e == 1:
        poly = ()
        add = (els[:, None] + els[None, :]) % p
        mul = (els[:, None] * els[None, :]) % p
    else:
        if poly is None:
            poly = DEFAULT_POLYS.get((p, e)) or _find_poly(p, e)
        poly = tuple(int(c) % p for c in poly)
        if len(poly) != e + 1 or poly[-1] != 1 or not _is_irreducible(poly, p):
            raise ValueError(f"{poly} is not a monic irreducible polynomial of degree {e}")
        digs = [_digits(x, p, e) for x in range(q)]
        add = np.array([[_undigits([(a + b) % p for a, b in zip(digs[x], digs[y])], p)
                         for y in range(q)] for x in range(q)])
        mul = np.array([[_undigits(_poly_mulmod(digs[x], digs[y], poly, p), p)
                         for y in range(q)] for x in range(q)])
    neg = np.array([int(np.flatnonzero(add[x] == 0)[0]) for x in range(q)])
    inv = np.zeros(q, dtype=np.int64)
    for x in range(1, q):
        hits = np.flatnonzero(mul[x] == 1)
        if len(hits) != 1:
            raise ValueError(f"element {x} has no inverse")
        inv[x] = hits[0]
    tabs = [np.asarray(t, dtype=np.int64) for t in (add, mul, neg, inv)]
    for t in tabs:
        t.setflags(write=False)
    return FieldSpec(p, e, poly, *tabs)


def field_of_order(q):
    pe = prime_power(q)
    if pe is None:
        raise ValueError(f"{q} is not a prime power")
    return field_make(*pe)


def check_field_axioms(f):
    """Exhaustive axiom check; returns a list of violated axioms."""
    q = f.q
    A, M = f.add_tab, f.mul_tab
    x, y, z = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    bad = []
    if not np.array_equal(A, A.T):
        bad.append("additive commutativity")
    if not np.array_equal(M, M.T):
        bad.append("multiplicative commutativity")
    if not np.array_equal(A[A[x, y], z], A[x, A[y, z]]):
        bad.append("additive associativity")
    if not np.array_equal(M[M[x, y], z], M[x, M[y, z]]):
        bad.append("multiplicative associativity")
    if not np.array_equal(M[x, A[y, z]], A[M[x, y], M[x, z]]):
        bad.append("distributivity")
    if not np.array_equal(A[:, 0], np.arange(q)) or not np.array_equal(M[:, 1], np.arange(q)):
        bad.append("identities")
    if np.any(A[np.arange(q), f.neg_tab] != 0):
        bad.append("additive inverses")
    if np.any(M[np.arange(1, q), f.inv_tab[1:]] != 1):
        bad.append("multiplicative inverses")
    return bad


# ---------------------------------------------------------------- groups

@dataclass(frozen=True)
class GroupSpec:
    """Direct sum of cyclic groups Z_{p_i^r_i}; elements are tuples."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a group needs at least one cyclic factor")
        for p, r in self.factors:
            if not is_prime(p) or int(r) < 1:
                raise ValueError(f"bad cyclic factor Z_{p}^{r}")

    @property
    def moduli(self):
        return tuple(p ** r for p, r in self.factors)

    @property
    def order(self):
        return int(np.prod(self.moduli))

    def elements(self):
        return list(itertools.product(*[range(m) for m in self.moduli]))

    def encode(self, x):
        """Mixed-radix integer code of a tuple (first factor most significant)."""
        x = self._check(x)
        code = 0
        for xi, m in zip(x, self.moduli):
            code = code * m + xi
        return code

    def decode(self, code):
        out = []
        for m in reversed(self.moduli):
            out.append(int(code) % m)
            code = int(code) // m
        return tuple(reversed(out))

    def add_table(self):
        els = self.elements()
        return np.array([[self.encode(group_add(self, x, y)) for y in els] for x in els])

    def subgroup_indices(self):
        return list(itertools.product(*[range(r + 1) for _, r in self.factors]))

    def _check(self, x):
        x = tuple(int(v) for v in np.atleast_1d(x))
        if len(x) != len(self.factors):
            raise ValueError(f"element {x} has wrong arity for {self}")
        for xi, m in zip(x, self.moduli):
            if not 0 <= xi < m:
                raise ValueError(f"element {x} out of range for {self}")
        return x


def cyclic(p, r=1):
    return GroupSpec(((p, r),))


def parse_group(text):
    """Parse 'Z4', 'Z2+Z4', '4' or '2,4' into a GroupSpec."""
    parts = [t.strip().lstrip("Zz") for t in text.replace("+", ",").replace("x", ",").split(",")]
    factors = []
    for t in parts:
        if not t:
            continue
        pe = prime_power(int(t))
        if pe is None:
            raise ValueError(f"Z_{t} is not a cyclic group of prime-power order")
        factors.append(pe)
    return GroupSpec(tuple(factors))


def group_add(g, x, y):
    x, y = g._check(x), g._check(y)
    return tuple((a + b) % m for a, b, m in zip(x, y, g.moduli))


def group_neg(g, x):
    return tuple((-a) % m for a, m in zip(g._check(x), g.moduli))


def _check_theta(g, theta):
    theta = tuple(int(t) for t in np.atleast_1d(theta))
    if len(theta) != len(g.factors) or any(not 0 <= t <= r for t, (_, r) in zip(theta, g.factors)):
        raise ValueError(f"invalid subgroup index {theta} for {g}")
    return theta


def subgroup(g, theta):
    """Elements of H_theta = sum_i p_i^theta_i Z_{p_i^r_i}."""
    theta = _check_theta(g, theta)
    return [x for x in g.elements()
            if all(xi % p ** t == 0 for xi, (p, _), t in zip(x, g.factors, theta))]


def coset_label(g, theta, x):
    """Integer label of the coset x + H_theta (residues x_i mod p_i^theta_i)."""
    theta = _check_theta(g, theta)
    x = g._check(x)
    label = 0
    for xi, (p, _), t in zip(x, g.factors, theta):
        label = label * p ** t + xi % p ** t
    return label


def coset_labels(g, theta):
    """Label of every element, indexed by the element's integer code."""
    return np.array([coset_label(g, theta, g.decode(c)) for c in range(g.order)])


def num_cosets(g, theta):
    theta = _check_theta(g, theta)
    return int(np.prod([p ** t for (p, _), t in zip(g.factors, theta)]))


# ---------------------------------------------------------- coset codes

@dataclass(frozen=True)
class NestedCosetCode:
    """Nested coset code v(a, m) = a g_I + m g_OI + b over a finite field."""

    field: FieldSpec
    g_inner: np.ndarray
    g_outer: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        n = len(self.bias)
        gi = np.asarray(self.g_inner, dtype=np.int64).reshape(-1, n)
        go = np.asarray(self.g_outer, dtype=np.int64).reshape(-1, n)
        object.__setattr__(self, "g_inner", gi)
        object.__setattr__(self, "g_outer", go)
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=np.int64))
        for arr in (gi, go, self.bias):
            if arr.size and (arr.min() < 0 or arr.max() >= self.field.q):
                raise ValueError("code entries must be field elements")

    @property
    def n(self):
        return len(self.bias)

    @property
    def k(self):
        return self.g_inner.shape[0]

    @property
    def l(self):
        return self.g_outer.shape[0]

    def stacked(self):
        return np.vstack([self.g_inner, self.g_outer])


def codeword(code, a, m):
    a = np.asarray(a, dtype=np.int64).reshape(-1)
    m = np.asarray(m, dtype=np.int64).reshape(-1)
    if len(a) != code.k or len(m) != code.l:
        raise ValueError(f"need a in F^{code.k} and m in F^{code.l}")
    f = code.field
    v = code.bias
    if code.k:
        v = f.vadd(v, f.matmul(a[None, :], code.g_inner)[0])
    if code.l:
        v = f.vadd(v, f.matmul(m[None, :], code.g_outer)[0])
    return v


def all_vectors(q, k, cap=ENUM_CAP):
    """All q**k vectors in lexicographic order as a (q**k, k) array."""
    if q ** k > cap:
        raise CapExceeded(f"F_{q}^{k}", q ** k, cap)
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((q,) * k).reshape(k, -1).T
    return grids.astype(np.int64)


def coset_members(code, m, cap=ENUM_CAP):
    """All q**k codewords v(a, m) (with repetitions), one row per a."""
    f = code.field
    base = codeword(code, np.zeros(code.k, dtype=np.int64), m)
    if code.k == 0:
        return base[None, :]
    if f.q ** code.k > cap:
        raise CapExceeded(f"F_{f.q}^{code.k}", f.q ** code.k, cap)
    # grow the coset one generator row at a time; row 0 ends up most significant
    out = base[None, :]
    for g in code.g_inner[::-1]:
        shifts = f.mul_tab[np.arange(f.q)[:, None], g[None, :]]  # (q, n)
        out = f.add_tab[shifts[:, None, :], out[None, :, :]].reshape(-1, out.shape[1])
    return out


def enumerate_coset(code, m, cap=ENUM_CAP):
    """Distinct members of the coset c(m) as a set of tuples."""
    return {tuple(int(x) for x in row) for row in coset_members(code, m, cap)}


# ------------------------------------------------------- linear algebra

@dataclass
class LeftSolver:
    """Solve x G = t over a field for many targets t.

    Built by row-reducing [G | I]; rows whose G-part vanishes span the left
    null space of G.
    """

    field: FieldSpec
    pivots: list
    echelon: np.ndarray
    transform: np.ndarray
    null_basis: np.ndarray

    def solve(self, t):
        """Return (x, ok) for targets t of shape (N, n)."""
        f = self.field
        t = np.atleast_2d(np.asarray(t, dtype=np.int64))
        r = len(self.pivots)
        if r == 0:
            x = np.zeros((len(t), self.transform.shape[1]), dtype=np.int64)
            return x, ~np.any(t, axis=1)
        coef = t[:, self.pivots]
        recon = f.matmul(coef, self.echelon)
        ok = np.all(recon == t, axis=1)
        x = f.matmul(coef, self.transform)
        return x, ok


def left_solver(f, g):
    g = np.asarray(g, dtype=np.int64)
    rows, n = g.shape
    aug = np.hstack([g, np.eye(rows, dtype=np.int64)])
    pivots = []
    r = 0
    for c in range(n):
        if r == rows:
            break
        nz = np.flatnonzero(aug[r:, c])
        if len(nz) == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            aug[[r, piv]] = aug[[piv, r]]
        aug[r] = f.mul_tab[f.inv_tab[aug[r, c]], aug[r]]
        factor = f.neg_tab[aug[:, c]]
        factor[r] = 0
        aug = f.add_tab[aug, f.mul_tab[factor[:, None], aug[r][None, :]]]
        pivots.append(c)
        r += 1
    return LeftSolver(f, pivots, aug[:r, :n], aug[:r, n:], aug[r:, n:])


def rank(f, g):
    g = np.asarray(g, dtype=np.int64)
    if g.size == 0:
        return 0
    return len(left_solver(f, g).pivots)
