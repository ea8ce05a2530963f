"""Dense joint pmfs, Shannon quantities, robust typicality, concave
envelopes and the group information quantities.

All logarithms are base 2.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import GroupSpec, coset_labels, num_cosets

PMF_CAP = 10 ** 7
ZERO = 1e-15


class JointPmf:
    """Joint pmf over named finite alphabets, stored as a dense array."""

    def __init__(self, names, table, check=True):
        table = np.asarray(table, dtype=float)
        names = tuple(names)
        if table.ndim != len(names) or len(set(names)) != len(names):
            raise ValueError("need one distinct name per table axis")
        if table.size > PMF_CAP:
            raise ValueError(f"pmf has {table.size} entries, cap is {PMF_CAP}")
        if check:
            if np.any(table < -ZERO):
                raise ValueError("pmf has negative entries")
            if abs(table.sum() - 1.0) > 1e-12:
                raise ValueError(f"pmf sums to {table.sum()!r}, not 1")
        table = np.where(table < ZERO, 0.0, table)
        self.names = names
        self.table = table

    @property
    def sizes(self):
        return dict(zip(self.names, self.table.shape))

    def axes(self, names):
        names = _as_names(names)
        missing = [v for v in names if v not in self.names]
        if missing:
            raise KeyError(f"unknown variables {missing}")
        return [self.names.index(v) for v in names]

    def marginal(self, names):
        """Marginal table with axes in the requested order."""
        names = _as_names(names)
        ax = self.axes(names)
        drop = tuple(i for i in range(self.table.ndim) if i not in ax)
        t = self.table.sum(axis=drop)
        kept = [i for i in range(self.table.ndim) if i in ax]
        return np.transpose(t, [kept.index(i) for i in ax])

    def marginal_pmf(self, names):
        names = _as_names(names)
        return JointPmf(names, self.marginal(names), check=False)

    def pushforward(self, name, size, fn, inputs, keep=None):
        """New pmf over keep + (name,) where name = fn(*inputs).

        fn is applied to integer index arrays of the input variables.
        """
        inputs = _as_names(inputs)
        keep = [v for v in (self.names if keep is None else _as_names(keep)) if v not in inputs]
        src = self.marginal(keep + inputs)
        shp = src.shape
        k = len(keep)
        idx = np.indices(shp[k:]).reshape(len(inputs), -1)
        out_idx = np.asarray(fn(*idx)).reshape(-1)
        flat = src.reshape(int(np.prod(shp[:k], dtype=int)), -1)
        out = np.zeros((flat.shape[0], size))
        for j in range(size):
            out[:, j] = flat[:, out_idx == j].sum(axis=1)
        return JointPmf(keep + [name], out.reshape(shp[:k] + (size,)), check=False)

    def sample(self, n, rng):
        """n iid draws as an (n, nvars) integer array."""
        flat = self.table.reshape(-1)
        draws = rng.choice(flat.size, size=n, p=flat / flat.sum())
        return np.stack(np.unravel_index(draws, self.table.shape), axis=1)

    def support_size(self):
        return int(np.count_nonzero(self.table))

    def __repr__(self):
        return f"JointPmf({', '.join(f'{k}:{v}' for k, v in self.sizes.items())})"


def _as_names(names):
    if isinstance(names, str):
        return [names]
    return list(names)


def pmf(p, name="X"):
    """Single-variable pmf from a probability vector."""
    return JointPmf([name], p)


def _h(t):
    t = np.asarray(t, dtype=float).reshape(-1)
    t = t[t > ZERO]
    return float(-(t * np.log2(t)).sum())


def entropy(p, names):
    names = _as_names(names)
    if not names:
        raise ValueError("entropy needs a nonempty set of variables")
    return _h(p.marginal(names))


def _disjoint(*groups):
    seen = set()
    for g in groups:
        g = set(_as_names(g))
        if seen & g:
            raise ValueError(f"variable sets overlap on {sorted(seen & g)}")
        seen |= g


def _hj(p, names):
    names = _as_names(names)
    return entropy(p, names) if names else 0.0


def conditional_entropy(p, a, b=()):
    _disjoint(a, b)
    return _hj(p, _as_names(a) + _as_names(b)) - _hj(p, b)


def mutual_information(p, a, b):
    _disjoint(a, b)
    a, b = _as_names(a), _as_names(b)
    return _hj(p, a) + _hj(p, b) - _hj(p, a + b)


def conditional_mi(p, a, b, c=()):
    _disjoint(a, b, c)
    a, b, c = _as_names(a), _as_names(b), _as_names(c)
    return _hj(p, a + c) + _hj(p, b + c) - _hj(p, a + b + c) - _hj(p, c)


def binary_entropy(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("binary_entropy needs 0 <= x <= 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    h = np.where((x == 0) | (x == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


# ------------------------------------------------------------ typicality

@dataclass(frozen=True)
class TypicalityContext:
    """Robust typicality against a reference pmf.

    Sequences are given as flat symbol indices into the pmf table, or as an
    (n, nvars) array of per-variable indices.
    """

    p: JointPmf
    delta: float
    probs: np.ndarray = field(init=False, repr=False)
    slack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = self.p.table.reshape(-1)
        size = probs.size
        slack = np.full(size, np.inf) if size < 2 else self.delta * probs / np.log2(size)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "slack", slack)

    def flat(self, x):
        x = np.asarray(x, dtype=np.int64)
        shape = self.p.table.shape
        if x.ndim >= 2 and x.shape[-1] == len(shape) and len(shape) > 1:
            if np.any(x < 0) or np.any(x >= np.array(shape)):
                raise ValueError("sequence symbol outside the alphabet")
            return np.ravel_multi_index(np.moveaxis(x, -1, 0), shape)
        if np.any(x < 0) or np.any(x >= self.probs.size):
            raise ValueError("sequence symbol outside the alphabet")
        return x

    def counts(self, x):
        """Symbol counts for one sequence (n,) or a batch (N, n)."""
        x = self.flat(x)
        a = self.probs.size
        if x.ndim == 1:
            return np.bincount(x, minlength=a)
        rows = x.shape[0]
        off = x + a * np.arange(rows)[:, None]
        return np.bincount(off.reshape(-1), minlength=a * rows).reshape(rows, a)

    def check_counts(self, counts, n):
        dev = np.abs(counts / n - self.probs)
        return np.all(dev <= self.slack + 1e-12, axis=-1)

    def typical(self, x):
        x = self.flat(x)
        return self.check_counts(self.counts(x), x.shape[-1])


def is_typical(ctx, x):
    return bool(ctx.typical(x))


def sanov_bound(p, delta, n):
    probs = p.table.reshape(-1)
    pos = probs[probs > ZERO]
    if pos.size == 0:
        raise ValueError("pmf has empty support")
    if probs.size < 2:
        return 0.0 if delta > 0 else 1.0
    lam = pos.min() ** 2 / np.log2(probs.size) ** 2
    return float(min(1.0, max(0.0, 2.0 ** (-n * lam * delta ** 2))))


# ------------------------------------------------------------- envelopes

@dataclass(frozen=True)
class PiecewiseLinear:
    xs: np.ndarray
    ys: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.xs[0] - 1e-12) or np.any(x > self.xs[-1] + 1e-12):
            raise ValueError("envelope evaluated outside its domain")
        return np.interp(x, self.xs, self.ys)


def upper_convex_envelope(points):
    """Least concave majorant of a finite point set (monotone chain)."""
    pts = sorted((float(x), float(y)) for x, y in points)
    if not pts:
        raise ValueError("no points")
    # keep the highest y per x
    dedup = {}
    for x, y in pts:
        dedup[x] = max(y, dedup.get(x, -np.inf))
    pts = sorted(dedup.items())
    hull = []
    for x, y in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point when it lies on or below the chord
            if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append((x, y))
    xs, ys = map(np.array, zip(*hull))
    return PiecewiseLinear(xs, ys)


@dataclass
class RateCurve:
    method: str
    taus: np.ndarray
    values: np.ndarray
    envelope: PiecewiseLinear = None

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.taus) < 0):
            raise ValueError("cost grid must be nondecreasing")
        if self.envelope is None and len(self.taus):
            self.envelope = upper_convex_envelope(zip(self.taus, self.values))

    def enveloped(self):
        return self.envelope(self.taus)


# ---------------------------------------------------- group quantities
#
# For a coset variable [V]_theta taking |V/H_theta| values, the per-subgroup
# term is log|V/H_theta| - H([V]_theta | S).  It equals I([V]_theta; S)
# whenever [V]_theta is uniform, which is the case for every test channel
# built from uniformly distributed group codewords.  form="mi" uses the
# mutual information instead.


def _vs_table(p, v, s):
    if isinstance(s, str):
        s = [s]
    t = p.marginal([v] + list(s))
    return t.reshape(t.shape[0], -1)


def _coset_joint(tab, labels, ncos):
    out = np.zeros((ncos, tab.shape[1]))
    for c in range(ncos):
        out[c] = tab[labels == c].sum(axis=0)
    return out


def _joint_mi(t):
    return _h(t.sum(axis=1)) + _h(t.sum(axis=0)) - _h(t)


def _cond_h(t):
    return _h(t) - _h(t.sum(axis=0))


def _theta_term(tab, g, theta, form):
    ncos = num_cosets(g, theta)
    t = _coset_joint(tab, coset_labels(g, theta), ncos)
    if form == "mi":
        return _joint_mi(t)
    if form == "entropy":
        return np.log2(ncos) - _cond_h(t)
    raise ValueError(f"unknown form {form!r}")


def _check_group(p, v, g):
    if not isinstance(g, GroupSpec):
        raise TypeError("expected a GroupSpec")
    if p.sizes[v] != g.order:
        raise ValueError(f"alphabet of {v} has {p.sizes[v]} symbols, group has {g.order}")


def group_mi_source_zpr(p, g, v="V", s="S", form="entropy"):
    _check_group(p, v, g)
    if len(g.factors) != 1:
        raise ValueError("expected a single cyclic factor Z_{p^r}")
    r = g.factors[0][1]
    tab = _vs_table(p, v, s)
    return max((r / t) * _theta_term(tab, g, (t,), form) for t in range(1, r + 1))


def simplex_grid(dim, points):
    """Weight vectors with coordinates in {0, 1/(points-1), ..., 1} summing to 1."""
    if points < 2:
        raise ValueError("grid resolution must be >= 2")
    m = points - 1
    out = []
    for c in itertools.combinations(range(m + dim - 1), dim - 1):
        bars = (-1,) + c + (m + dim - 1,)
        out.append([bars[i + 1] - bars[i] - 1 for i in range(dim)])
    return np.array(out, dtype=float) / m


def group_mi_source_abelian(p, g, v="V", s="S", points=201, form="entropy", return_weights=False):
    _check_group(p, v, g)
    tab = _vs_table(p, v, s)
    rs = np.array([r for _, r in g.factors], dtype=float)
    thetas = [t for t in g.subgroup_indices() if any(t)]
    terms = np.array([_theta_term(tab, g, t, form) for t in thetas])
    terms = np.where(np.abs(terms) < 1e-13, 0.0, terms)
    W = simplex_grid(len(rs), points)
    # w_theta = sum_i ((r_i - theta_i) / r_i) w_i
    coef = (rs[None, :] - np.array(thetas, dtype=float)) / rs[None, :]
    wth = W @ coef.T
    denom = 1.0 - wth
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = terms[None, :] / denom
    ratio = np.where(denom <= 1e-12, np.where(terms[None, :] == 0, 0.0, np.inf), ratio)
    worst = ratio.max(axis=1)
    i = int(np.argmin(worst))
    if return_weights:
        return float(worst[i]), W[i]
    return float(worst[i])


def group_mi_source(p, g, v="V", s="S", points=201, form="entropy"):
    if len(g.factors) == 1:
        return group_mi_source_zpr(p, g, v, s, form)
    return group_mi_source_abelian(p, g, v, s, points, form)


def group_entropy_source(p, g, v="V", s="S", points=201, form="entropy"):
    """log|V| minus the group source-coding information."""
    s = _as_names(s)
    if not s:
        tab = p.marginal([v])[:, None]
        p = JointPmf([v, "_const"], tab, check=False)
        s = ["_const"]
    return float(np.log2(g.order) - group_mi_source(p, g, v, s, points, form))


def group_mi_channel_zpr(p, g, v="V", y="Y", form="entropy"):
    _check_group(p, v, g)
    if len(g.factors) != 1:
        raise ValueError("expected a single cyclic factor Z_{p^r}")
    pr, r = g.factors[0]
    tab = _vs_table(p, v, y)
    best = np.inf
    for t in range(r):
        labels = coset_labels(g, (t,))
        # joint of ([V]_theta, V, Y); V determines the coset
        h_v_given = 0.0
        mi = 0.0
        for c in range(num_cosets(g, (t,))):
            sub = tab[labels == c]
            mass = sub.sum()
            if mass <= ZERO:
                continue
            cond = sub / mass
            h_v_given += mass * _cond_h(cond)
            mi += mass * _joint_mi(cond)
        if form == "mi":
            term = mi
        elif form == "entropy":
            term = (r - t) * np.log2(pr) - h_v_given
        else:
            raise ValueError(f"unknown form {form!r}")
        best = min(best, r / (r - t) * term)
    return float(best)
