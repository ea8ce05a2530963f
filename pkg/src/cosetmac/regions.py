"""Achievable-region evaluators for the two-user MAC with distributed
states, test-channel enumeration and the cost-constrained grid search.
"""

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algebra import FieldSpec, GroupSpec, cyclic, field_of_order, smallest_prime_power_geq
from .channels import ChannelSpec, channel_catalog
from .info import (JointPmf, RateCurve, binary_entropy, conditional_entropy,
                   group_entropy_source, mutual_information)

NAMES = ("U1", "V1", "U2", "V2", "S1", "S2", "X1", "X2", "Y")
SEARCH_BUDGET = 5 * 10 ** 8
USER_BUDGET = 2 * 10 ** 6


class BudgetExceeded(RuntimeError):
    def __init__(self, what, required, budget):
        super().__init__(f"{what} requires {required:,} evaluations, budget is {budget:,}")
        self.required = required
        self.budget = budget


class StructureError(ValueError):
    """A test channel violates the required factorization."""


@dataclass
class TestChannel:
    """Per-user conditionals p(u, v, x | s), indexed [u, v, x, s].

    The joint over (U1, V1, U2, V2, S1, S2, X1, X2, Y) is
    W_S(s1, s2) p1(u1, v1, x1 | s1) p2(u2, v2, x2 | s2) W(y | x1, x2, s1, s2),
    so the state marginal, the channel law and the cross-user conditional
    independence hold by construction.
    """

    __test__ = False

    channel: ChannelSpec
    cond1: np.ndarray
    cond2: np.ndarray
    vspace: object = None

    def __post_init__(self):
        ch = self.channel
        for j, c in ((1, self.cond1), (2, self.cond2)):
            c = np.asarray(c, dtype=float)
            if c.ndim != 4:
                raise StructureError(f"user {j}: conditional must be indexed [u, v, x, s]")
            nx, ns = ch.cost(j).shape
            if c.shape[2:] != (nx, ns):
                raise StructureError(f"user {j}: expected x, s sizes {(nx, ns)}, got {c.shape[2:]}")
            if np.any(c < -1e-15):
                raise StructureError(f"user {j}: negative probability")
            sums = c.sum(axis=(0, 1, 2))
            if np.max(np.abs(sums - 1)) > 1e-9:
                raise StructureError(f"user {j}: conditional does not sum to 1 for every state")
            setattr(self, f"cond{j}", np.clip(c, 0, None))
        if self.cond1.shape[1] != self.cond2.shape[1]:
            raise StructureError("both users must share the V alphabet")
        nv = self.cond1.shape[1]
        if self.vspace is not None and self.vspace.order != nv:
            raise StructureError(f"V alphabet has {nv} symbols but the algebra has order {self.vspace.order}")

    @property
    def nv(self):
        return self.cond1.shape[1]

    def is_deterministic(self):
        for c in (self.cond1, self.cond2):
            mass = c.sum(axis=2)
            top = c.max(axis=2)
            if np.any((mass > 1e-15) & (np.abs(top - mass) > 1e-12)):
                return False
        return True

    def costs(self):
        ch = self.channel
        out = []
        for j, c in ((1, self.cond1), (2, self.cond2)):
            pxs = c.sum(axis=(0, 1)) * ch.state_marginal(j)[None, :]
            out.append(float((pxs * ch.cost(j)).sum()))
        return tuple(out)

    def check(self, tau=None, deterministic=True):
        if deterministic and not self.is_deterministic():
            raise StructureError("inputs must be deterministic functions of (U, V, S)")
        if tau is not None:
            t1, t2 = _pair(tau)
            c1, c2 = self.costs()
            if c1 > t1 + 1e-12 or c2 > t2 + 1e-12:
                raise StructureError(f"expected costs {(c1, c2)} exceed {(t1, t2)}")
        return self

    def joint(self):
        ch = self.channel
        t = np.einsum("ab,uvxa,UVXb,abxXy->uvUVabxXy", ch.state, self.cond1, self.cond2,
                      ch.kernel, optimize=True)
        return JointPmf(NAMES, t, check=False)

    def joint_with_sum(self, keep=("U1", "U2", "S1", "S2", "Y")):
        """Joint of keep + W where W = V1 + V2 in the V algebra."""
        if self.vspace is None:
            raise StructureError("V carries no algebraic structure")
        add = self.vspace.add_table()
        return self.joint().pushforward("W", self.nv, lambda a, b: add[a, b], ["V1", "V2"], keep)


def _pair(tau):
    if np.ndim(tau) == 0:
        return float(tau), float(tau)
    t1, t2 = tau
    return float(t1), float(t2)


def _clamp(vals, clamp):
    return tuple(max(0.0, v) for v in vals) if clamp else tuple(vals)


# -------------------------------------------------------------- bounds

def gp_rate(tc, clamp=True):
    """I(V;Y) - I(V;S) for a single-user test channel; aux is (U1, V1)."""
    if not tc.channel.single_user:
        raise StructureError("gp_rate needs a single-user channel")
    p = tc.joint()
    aux = ["U1", "V1"]
    r = mutual_information(p, aux, ["Y"]) - mutual_information(p, aux, ["S1"])
    return max(0.0, r) if clamp else r


def alpha_bounds(tc, clamp=True):
    p = tc.joint()
    i1 = mutual_information(p, ["U1"], ["S1"])
    i2 = mutual_information(p, ["U2"], ["S2"])
    r1 = mutual_information(p, ["U1"], ["Y", "U2"]) - i1
    r2 = mutual_information(p, ["U2"], ["Y", "U1"]) - i2
    rs = (mutual_information(p, ["U1", "U2"], ["Y"]) + mutual_information(p, ["U1"], ["U2"])
          - i1 - i2)
    return _clamp((r1, r2, rs), clamp)


def _require(tc, kind):
    if not isinstance(tc.vspace, kind):
        raise StructureError(f"V must be a {kind.__name__}")


def beta_f_sum_rate(tc, clamp=True):
    _require(tc, FieldSpec)
    p = tc.joint()
    q = tc.joint_with_sum(keep=["Y"])
    r = (min(conditional_entropy(p, ["V1"], ["S1"]), conditional_entropy(p, ["V2"], ["S2"]))
         - conditional_entropy(q, ["W"], ["Y"]))
    return max(0.0, r) if clamp else r


def _structured(tc, m):
    p = tc.joint()
    q = tc.joint_with_sum(keep=["U1", "U2", "Y"])
    hw = conditional_entropy(q, ["W"], ["U1", "U2", "Y"])
    i1 = mutual_information(p, ["U1"], ["S1"])
    i2 = mutual_information(p, ["U2"], ["S2"])
    r1 = mutual_information(p, ["U1"], ["U2", "Y"]) - i1 + m - hw
    r2 = mutual_information(p, ["U2"], ["U1", "Y"]) - i2 + m - hw
    rs = (mutual_information(p, ["U1", "U2"], ["Y"]) + mutual_information(p, ["U1"], ["U2"])
          - i1 - i2 + m - hw)
    return r1, r2, rs


def rsf_bounds(tc, clamp=True):
    _require(tc, FieldSpec)
    p = tc.joint()
    m = min(conditional_entropy(p, ["V1"], ["U1", "S1"]), conditional_entropy(p, ["V2"], ["U2", "S2"]))
    return _clamp(_structured(tc, m), clamp)


def rsg_bounds(tc, clamp=True, points=201):
    _require(tc, GroupSpec)
    p = tc.joint()
    m = min(group_entropy_source(p, tc.vspace, "V1", ["U1", "S1"], points),
            group_entropy_source(p, tc.vspace, "V2", ["U2", "S2"], points))
    return _clamp(_structured(tc, m), clamp)


def qdd_input_entropy(tau):
    """-tau log(tau/3) - (1-tau) log(1-tau), the entropy of X given S."""
    tau = float(tau)
    g = -tau * np.log2(tau / 3) if tau > 0 else 0.0
    return g - (1 - tau) * np.log2(1 - tau) if tau < 1 else g


def qdd_closed_forms(tau):
    tau = float(tau)
    if not 0 <= tau <= 0.75:
        raise ValueError("closed forms hold for 0 <= tau <= 3/4")
    g = qdd_input_entropy(tau)
    alpha = max(2 * g - 2, 0.0)
    beta_f = max(g - 0.5, 0.0)
    beta_g = max(min(g, 2 * binary_entropy(2 * tau / 3)), 0.0)
    return float(alpha), float(beta_f), float(beta_g)


# --------------------------------------------------------- test channels

def _cond_from_map(pa_s, fmap, nx):
    """p(a, x | s) = p(a | s) 1{x = f(a, s)}; pa_s is (A, S), fmap is (A, S)."""
    na, ns = pa_s.shape
    c = np.zeros((na, nx, ns))
    for a, s in itertools.product(range(na), range(ns)):
        c[a, fmap[a, s], s] = pa_s[a, s]
    return c


def _as_u(c):
    return c[:, None, :, :]


def _as_v(c):
    return c[None, :, :, :]


def _binary_dpc_cond(tau):
    # V = X + S with P(X = 1 | S = s) = tau
    return _cond_from_map(np.array([[1 - tau, tau], [tau, 1 - tau]]),
                          np.array([[0, 1], [1, 0]]), 2)


def bdd_test_channel(tau):
    """BDD with V_j = X_j + S_j and X_j ~ Bernoulli(tau) independent of S_j."""
    c = _as_v(_binary_dpc_cond(tau))
    return TestChannel(channel_catalog("bdd"), c, c.copy(), field_of_order(2))


def pz_test_channel(tau):
    """Same law as bdd_test_channel with the auxiliary in the U slot."""
    c = _as_u(_binary_dpc_cond(tau))
    return TestChannel(channel_catalog("bdd"), c, c.copy())


def example1_test_channel(tau, slot="v"):
    t = min(2 * float(tau), 0.5)
    c = _cond_from_map(np.array([[1 - t, 0.0], [t, 1.0]]), np.array([[0, 0], [1, 0]]), 2)
    c = _as_v(c) if slot == "v" else _as_u(c)
    return TestChannel(channel_catalog("example1"), c, c.copy(),
                       field_of_order(2) if slot == "v" else None)


# p(u, s, x) for both users; u takes values in {0, 1} inside F_3
EXAMPLE3_PMF = {(0, 0, 0): 0.1472, (1, 0, 1): 0.3528, (0, 1, 1): 0.50}


def example3_test_channel(slot="v"):
    c = np.zeros((3, 2, 2))
    for (u, s, x), pr in EXAMPLE3_PMF.items():
        c[u, x, s] = pr / 0.5
    if slot == "v":
        c = _as_v(c)
        return TestChannel(channel_catalog("example3"), c, c.copy(), field_of_order(3))
    c = _as_u(c[:2])
    return TestChannel(channel_catalog("example3"), c, c.copy())


def qdd_test_channel(tau, slot="v", algebra="group"):
    """Inputs X with P(X=0|S)=1-tau and P(X=x|S)=tau/3 otherwise; aux = X+S mod 4."""
    tau = float(tau)
    c = np.zeros((4, 4, 4))
    for s, x in itertools.product(range(4), range(4)):
        c[(x + s) % 4, x, s] = 1 - tau if x == 0 else tau / 3
    if slot == "u":
        c = _as_u(c)
        return TestChannel(channel_catalog("qdd"), c, c.copy())
    c = _as_v(c)
    vs = cyclic(2, 2) if algebra == "group" else field_of_order(4)
    return TestChannel(channel_catalog("qdd"), c, c.copy(), vs)


NAMED_TEST_CHANNELS = {
    "bdd": (bdd_test_channel, "bdd"),
    "pz": (pz_test_channel, "bdd"),
    "example1": (example1_test_channel, "example1"),
    "qdd_group": (lambda t: qdd_test_channel(t, "v", "group"), "qdd"),
    "qdd_field": (lambda t: qdd_test_channel(t, "v", "field"), "qdd"),
    "qdd_u": (lambda t: qdd_test_channel(t, "u"), "qdd"),
}


# ------------------------------------------------------------ enumeration

def simplex_points(size, step):
    """pmfs on `size` symbols whose first size-1 coordinates are multiples of step."""
    if not 0 < step <= 0.5:
        raise ValueError("step must lie in (0, 0.5]")
    m = int(np.floor(1 / step + 1e-9))
    pts = []
    for c in itertools.product(range(m + 1), repeat=size - 1):
        head = np.array(c, dtype=float) * step
        if head.sum() <= 1 + 1e-9:
            pts.append(np.append(head, max(0.0, 1 - head.sum())))
    return np.array(pts)


def _family_sizes(ch, family, aux_sizes):
    if family == "alpha":
        a = aux_sizes or (2, 2)
        return tuple(a), None
    if family == "beta_f":
        q = aux_sizes[0] if aux_sizes else smallest_prime_power_geq(max(ch.sizes["X1"], ch.sizes["X2"]))
        f = field_of_order(q)
        return (q, q), f
    raise ValueError(f"unknown family {family!r}; expected alpha or beta_f")


def user_candidate_count(ch, j, na, step):
    nx, ns = ch.cost(j).shape
    return len(simplex_points(na, step)) ** ns * nx ** (na * ns)


def _user_candidates(ch, j, na, step, budget=USER_BUDGET):
    """All (pmf grid point, map) combinations for one user.

    Returns conditionals p(a, x | s) of shape (N, A, X, S) and expected costs.
    """
    nx, ns = ch.cost(j).shape
    count = user_candidate_count(ch, j, na, step)
    if count > budget:
        raise BudgetExceeded(f"user {j} candidate list", count, budget)
    pts = simplex_points(na, step)
    npts = len(pts)
    # p(a | s) for every choice of grid point per state
    choice = np.indices((npts,) * ns).reshape(ns, -1).T
    pa_s = np.stack([pts[choice[:, s]] for s in range(ns)], axis=-1)  # (P, A, S)
    maps = np.indices((nx,) * (na * ns)).reshape(na * ns, -1).T.reshape(-1, na, ns)  # (M, A, S)
    onehot = (maps[:, :, None, :] == np.arange(nx)[None, None, :, None]).astype(float)  # (M, A, X, S)
    cond = pa_s[:, None, :, None, :] * onehot[None]  # (P, M, A, X, S)
    cond = cond.reshape(-1, na, nx, ns)
    ps = ch.state_marginal(j)
    cost = np.einsum("naxs,xs,s->n", cond, ch.cost(j), ps)
    return cond, cost


def _pack(c, family, j):
    return _as_u(c) if family == "alpha" else _as_v(c)


def enumerate_test_channels(ch, family="alpha", aux_sizes=None, tau=None, step=0.05,
                            budget=SEARCH_BUDGET):
    """Stream every grid test channel of the family whose costs satisfy tau."""
    sizes, vs = _family_sizes(ch, family, aux_sizes)
    c1, k1 = _user_candidates(ch, 1, sizes[0], step)
    c2, k2 = _user_candidates(ch, 2, sizes[1], step)
    if tau is not None:
        t1, t2 = _pair(tau)
        c1, k1 = c1[k1 <= t1 + 1e-12], k1[k1 <= t1 + 1e-12]
        c2, k2 = c2[k2 <= t2 + 1e-12], k2[k2 <= t2 + 1e-12]
    total = len(c1) * len(c2)
    if total > budget:
        raise BudgetExceeded("test-channel stream", total, budget)
    for a in c1:
        for b in c2:
            yield TestChannel(ch, _pack(a, family, 1), _pack(b, family, 2), vs)


def raw_pair_count(ch, family="alpha", aux_sizes=None, step=0.05):
    sizes, _ = _family_sizes(ch, family, aux_sizes)
    return (user_candidate_count(ch, 1, sizes[0], step)
            * user_candidate_count(ch, 2, sizes[1], step))


# ---------------------------------------------------- vectorized search

def _symmetries(family, na, vs):
    if family == "alpha":
        return [np.array(p) for p in itertools.permutations(range(na))]
    add = vs.add_table()
    return [add[c] for c in range(na)]  # translations v -> v + c


def _dedup(cond, cost, perms):
    """Drop candidates equal up to a relabeling of the auxiliary."""
    keys = np.round(cond * 1e12).astype(np.int64)
    seen = {}
    for i in range(len(cond)):
        variants = []
        for p in perms:
            permuted = np.empty_like(keys[i])
            permuted[p] = keys[i]
            variants.append(permuted.tobytes())
        k = min(variants)
        if k not in seen:
            seen[k] = i
    idx = np.array(sorted(seen.values()), dtype=np.int64)
    return cond[idx], cost[idx]


def _xlogx_sum(t, axes):
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(t > 0, t * np.log2(np.where(t > 0, t, 1.0)), 0.0)
    return -v.sum(axis=axes)


def _user_stats(cond, ps):
    """H(A) and H(A | S) for each candidate."""
    joint = cond.sum(axis=2) * ps[None, None, :]  # (N, A, S)
    ha = _xlogx_sum(joint.sum(axis=2), (1,))
    has = _xlogx_sum(joint, (1, 2)) - _xlogx_sum(ps[None, :], (1,))
    return ha, has


@dataclass
class _SearchProblem:
    family: str
    state: np.ndarray
    kernel: np.ndarray
    c1: np.ndarray
    k1: np.ndarray
    ha1: np.ndarray
    has1: np.ndarray
    c2: np.ndarray
    k2: np.ndarray
    ha2: np.ndarray
    has2: np.ndarray
    add: np.ndarray
    taus: np.ndarray


def _k2_tensor(prob):
    # K[j2, a2, y, x1, s1, s2] = sum_x2 c2[j2, a2, x2, s2] W_S(s1, s2) W(y | x1, x2, s1, s2)
    return np.einsum("nbds,rs,rscdy->nbycrs", prob.c2, prob.state, prob.kernel, optimize=True)


def _eval_block(prob, lo, hi, K=None):
    """Best value per tau over user-1 candidates lo:hi against all user-2 candidates."""
    if K is None:
        K = _k2_tensor(prob)
    c1 = prob.c1[lo:hi]
    B, A1, X1, S1 = c1.shape
    N2, A2, Y = K.shape[:3]
    S2 = K.shape[-1]
    left = np.broadcast_to(c1[..., None], (B, A1, X1, S1, S2)).reshape(B * A1, -1)
    right = K.reshape(N2 * A2 * Y, -1).T
    P = (left @ right).reshape(B, A1, N2, A2, Y).transpose(0, 2, 1, 3, 4)  # (B, N2, A1, A2, Y)

    h_all = _xlogx_sum(P, (2, 3, 4))
    h_y = _xlogx_sum(P.sum(axis=(2, 3)), (2,))
    if prob.family == "alpha":
        i1 = (prob.ha1 - prob.has1)[lo:hi, None]
        i2 = (prob.ha2 - prob.has2)[None, :]
        ha1 = prob.ha1[lo:hi, None]
        ha2 = prob.ha2[None, :]
        h_a2y = _xlogx_sum(P.sum(axis=2), (2, 3))
        h_a1y = _xlogx_sum(P.sum(axis=3), (2, 3))
        r1 = np.maximum(ha1 + h_a2y - h_all - i1, 0)
        r2 = np.maximum(ha2 + h_a1y - h_all - i2, 0)
        rs = np.maximum(h_y + ha1 + ha2 - h_all - i1 - i2, 0)
        val = np.minimum(rs, r1 + r2)
    else:
        q = prob.add.shape[0]
        Pw = np.zeros(P.shape[:2] + (q, Y))
        for a, b in itertools.product(range(A1), range(A2)):
            Pw[:, :, prob.add[a, b]] += P[:, :, a, b]
        hw_y = _xlogx_sum(Pw, (2, 3)) - h_y
        m = np.minimum(prob.has1[lo:hi, None], prob.has2[None, :])
        val = np.maximum(m - hw_y, 0)
    cost = np.maximum(prob.k1[lo:hi, None], prob.k2[None, :])
    taus = prob.taus
    best = np.full(len(taus), -np.inf)
    bucket = np.searchsorted(taus, cost.reshape(-1) - 1e-12, side="left")
    v = val.reshape(-1)
    ok = bucket < len(taus)
    np.maximum.at(best, bucket[ok], v[ok])
    return best


def _eval_chunk(args):
    prob, ranges = args
    K = _k2_tensor(prob)
    best = np.full(len(prob.taus), -np.inf)
    for lo, hi in ranges:
        best = np.maximum(best, _eval_block(prob, lo, hi, K))
    return best


def default_workers():
    try:
        return max(1, int(os.environ.get("COSETMAC_WORKERS", "1")))
    except ValueError:
        return 1


def best_sum_rate(ch, family="alpha", taus=None, step=0.05, aux_sizes=None,
                  budget=SEARCH_BUDGET, workers=None, block_entries=4_000_000):
    """Grid search of the family's sum rate under a symmetric cost constraint.

    For alpha the sum rate of a test channel is min(R_sum, R1 + R2) of its
    pentagon; for beta_f it is the structured sum bound.  The curve is the
    running maximum over costs <= tau, followed by the upper concave envelope
    in the (tau, R) plane.
    """
    if taus is None:
        taus = np.round(np.arange(0, 0.5 + 1e-9, 0.05), 12)
    if len(taus) == 0:
        raise ValueError("empty cost grid")
    taus = np.asarray(sorted(set(float(t) for t in taus) | {0.0}))
    sizes, vs = _family_sizes(ch, family, aux_sizes)
    c1, k1 = _user_candidates(ch, 1, sizes[0], step)
    c2, k2 = _user_candidates(ch, 2, sizes[1], step)
    tmax = taus[-1] + 1e-12
    c1, k1 = c1[k1 <= tmax], k1[k1 <= tmax]
    c2, k2 = c2[k2 <= tmax], k2[k2 <= tmax]
    c1, k1 = _dedup(c1, k1, _symmetries(family, sizes[0], vs))
    c2, k2 = _dedup(c2, k2, _symmetries(family, sizes[1], vs))
    total = len(c1) * len(c2)
    if total > budget:
        raise BudgetExceeded(f"{family} search", total, budget)
    ha1, has1 = _user_stats(c1, ch.state_marginal(1))
    ha2, has2 = _user_stats(c2, ch.state_marginal(2))
    add = vs.add_table() if vs is not None else None
    prob = _SearchProblem(family, np.asarray(ch.state), np.asarray(ch.kernel), c1, k1, ha1, has1,
                          c2, k2, ha2, has2, add, taus)

    per_row = max(1, len(c2) * sizes[0] * sizes[1] * ch.sizes["Y"])
    bsz = max(1, block_entries // per_row)
    ranges = [(lo, min(lo + bsz, len(c1))) for lo in range(0, len(c1), bsz)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(ranges) == 1:
        parts = [_eval_chunk((prob, ranges))]
    else:
        chunks = [ranges[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_eval_chunk, [(prob, c) for c in chunks if c]))
    best = np.max(parts, axis=0)
    best = np.maximum.accumulate(np.where(np.isfinite(best), best, -np.inf))
    best = np.where(np.isfinite(best), best, 0.0)
    # time sharing with the zero-cost operating point
    return RateCurve(family, taus, best)
