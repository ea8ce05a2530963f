"""Random nested coset codes, joint-typicality encoding and sum decoding
for the two-user MAC, Monte Carlo error estimation, the analytic error
bounds and exhaustive checks of the ensemble independence properties.
"""

import itertools
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import (ENUM_CAP, CapExceeded, FieldSpec, NestedCosetCode, all_vectors,
                      codeword, coset_members, left_solver, rank)
from .info import TypicalityContext, conditional_entropy
from .regions import StructureError, TestChannel

SIM_COLUMNS = ("n", "rate_sum", "trials", "enc_fail_1", "enc_fail_2", "dec_err",
               "cost_1", "cost_2", "seed")


# --------------------------------------------------------------- codes

def sample_nested_code(f, n, k, l, rng, cap=ENUM_CAP):
    if f.q ** k > cap:
        raise CapExceeded("coset enumeration", f.q ** k, cap)
    g_inner = rng.integers(0, f.q, size=(k, n))
    g_outer = rng.integers(0, f.q, size=(l, n))
    bias = rng.integers(0, f.q, size=n)
    return NestedCosetCode(f, g_inner, g_outer, bias)


@dataclass(frozen=True)
class MacCodePair:
    """Two nested coset codes whose inner generators share leading rows.

    User j uses the first k_j rows of g_inner and rows off_j:off_j+l_j of
    g_outer, where user 1's message rows come first.
    """

    field: FieldSpec
    k1: int
    k2: int
    l1: int
    l2: int
    g_inner: np.ndarray
    g_outer: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    @property
    def n(self):
        return len(self.b1)

    @property
    def k(self):
        return max(self.k1, self.k2)

    @property
    def l(self):
        return self.l1 + self.l2

    def user(self, j):
        if j == 1:
            return NestedCosetCode(self.field, self.g_inner[:self.k1], self.g_outer[:self.l1], self.b1)
        return NestedCosetCode(self.field, self.g_inner[:self.k2], self.g_outer[self.l1:], self.b2)

    def decoder_code(self):
        return NestedCosetCode(self.field, self.g_inner, self.g_outer,
                               self.field.vadd(self.b1, self.b2))


def mac_pair_from_codes(f, g_inner, g_outer, b1, b2, k1, k2, l1):
    return MacCodePair(f, k1, k2, l1, len(g_outer) - l1, np.asarray(g_inner).reshape(-1, len(b1)),
                       np.asarray(g_outer).reshape(-1, len(b1)), np.asarray(b1), np.asarray(b2))


def sample_mac_pair(f, n, k1, k2, l1, l2, rng, cap=ENUM_CAP):
    if f.q ** max(k1, k2) > cap:
        raise CapExceeded("coset enumeration", f.q ** max(k1, k2), cap)
    k = max(k1, k2)
    return MacCodePair(f, k1, k2, l1, l2,
                       rng.integers(0, f.q, size=(k, n)), rng.integers(0, f.q, size=(l1 + l2, n)),
                       rng.integers(0, f.q, size=n), rng.integers(0, f.q, size=n))


def pad_inner(pair, a, j):
    """Embed user j's inner index into the decoder code's inner index."""
    out = np.zeros(pair.k, dtype=np.int64)
    out[:len(a)] = a
    return out


# ------------------------------------------------------------ parameters

def _field_of(tc):
    if not isinstance(tc.vspace, FieldSpec):
        raise StructureError("simulation needs V to be a finite field")
    return tc.vspace


def gp_code_params(tc, n, eta):
    """(k, l, clamped) for a single-user test channel."""
    f = _field_of(tc)
    p = tc.joint()
    lq = math.log2(f.q)
    h_vs = conditional_entropy(p, ["V1"], ["S1"])
    h_vy = conditional_entropy(p, ["V1"], ["Y"])
    k = math.ceil(n * (1 - h_vs / lq + eta / (8 * lq)) - 1e-9)
    top = math.floor(n * (1 - h_vy / lq - eta / (8 * lq)) + 1e-9)
    l = top - k
    return k, max(l, 0), l < 0


def mac_code_params(tc, n, sum_rate, margin=0.05):
    """Raw (k1, k2, l1, l2) for a target sum rate in bits per channel use.

    k_j = ceil(n (1 - H(V_j|S_j)/log q + margin)) and l1 + l2 = floor(n R / log q),
    split as evenly as possible.
    """
    f = _field_of(tc)
    p = tc.joint()
    lq = math.log2(f.q)
    ks = [math.ceil(n * (1 - conditional_entropy(p, [f"V{j}"], [f"S{j}"]) / lq + margin) - 1e-9)
          for j in (1, 2)]
    ks = [min(max(k, 0), n) for k in ks]
    lt = math.floor(n * sum_rate / lq + 1e-9)
    return ks[0], ks[1], lt // 2, lt - lt // 2


def _clamp01(x):
    return float(min(1.0, max(0.0, x)))


def encoder_failure_bound(tc, n, k, delta, user=1):
    """Chebyshev bound on an empty encoding list given a typical state.

    2^(-n log q (k/n - (1 - H(V|S)/log q + 3 delta / (2 log q)))), clamped to [0, 1].
    """
    f = _field_of(tc)
    lq = math.log2(f.q)
    h = conditional_entropy(tc.joint(), [f"V{user}"], [f"S{user}"])
    expo = -n * lq * (k / n - (1 - h / lq + 3 * delta / (2 * lq)))
    return _clamp01(2.0 ** min(expo, 0.0))


def _compositions(total, parts):
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        yield tuple(edges[i + 1] - edges[i] - 1 for i in range(parts))


def _log2_multinomial(counts):
    return (math.lgamma(sum(counts) + 1) - sum(math.lgamma(c + 1) for c in counts)) / math.log(2)


def encoder_failure_bound_exact(tc, n, k, delta, user=1, cap=ENUM_CAP):
    """The Chebyshev argument behind encoder_failure_bound with exact counts.

    Pairwise independence gives P(no typical codeword | s) <= 1 / E[N(s)] with
    E[N(s)] = q^k |T(V|s)| / q^n.  Averaged over state types that pass the
    delta/2 state check, as in the simulator.  No asymptotic estimate of the
    typical set size is used, so the result holds at every block length.
    """
    f = _field_of(tc)
    p = tc.joint()
    ctx = TypicalityContext(p.marginal_pmf([f"V{user}", f"S{user}"]), delta)
    ctx_s = TypicalityContext(p.marginal_pmf([f"S{user}"]), delta / 2)
    pvs = ctx.p.table
    q, ns = pvs.shape
    ps = pvs.sum(axis=0)
    lo = pvs * n - ctx.slack.reshape(q, ns) * n - 1e-9
    hi = pvs * n + ctx.slack.reshape(q, ns) * n + 1e-9
    work = math.comb(n + ns - 1, ns - 1) * math.comb(n + q - 1, q - 1)
    if work > cap:
        raise CapExceeded("joint type enumeration", work, cap)
    # log2 |T(V|s)| split by state symbol and state count, cached
    cache = {}

    def log_cell(b, c):
        if (b, c) not in cache:
            tot = [_log2_multinomial(split) for split in _compositions(c, q)
                   if all(lo[v, b] <= split[v] <= hi[v, b] for v in range(q))]
            cache[(b, c)] = np.logaddexp2.reduce(tot) if tot else -np.inf
        return cache[(b, c)]

    out = 0.0
    for ctype in _compositions(n, ns):
        if not ctx_s.check_counts(np.array(ctype), n):
            continue
        if any(c and ps[b] <= 0 for b, c in enumerate(ctype)):
            continue
        logp = _log2_multinomial(ctype) + sum(c * math.log2(ps[b]) for b, c in enumerate(ctype) if c)
        log_t = sum(log_cell(b, c) for b, c in enumerate(ctype))
        log_en = k * math.log2(q) + log_t - n * math.log2(q)
        out += 2.0 ** logp * min(1.0, 2.0 ** -log_en) if np.isfinite(log_en) else 2.0 ** logp
    return _clamp01(out)


def decoder_error_bound(tc, n, k, l, delta):
    """Bound on a competing coset holding a typical codeword.

    2^(-n log q (1 - H(V|Y)/log q - 3 delta / (2 log q) - (k+l)/n)); for a
    two-user test channel H(V|Y) is replaced by H(V1 + V2 | Y).
    """
    f = _field_of(tc)
    lq = math.log2(f.q)
    if tc.channel.single_user:
        h = conditional_entropy(tc.joint(), ["V1"], ["Y"])
    else:
        h = conditional_entropy(tc.joint_with_sum(keep=["Y"]), ["W"], ["Y"])
    expo = -n * lq * (1 - h / lq - 3 * delta / (2 * lq) - (k + l) / n)
    return _clamp01(2.0 ** min(expo, 0.0))


# ------------------------------------------------------------- contexts

@dataclass
class SimContext:
    """Everything a trial needs, derived once from the test channel."""

    tc: TestChannel
    delta: float
    ctx_vs: list = field(default_factory=list)
    ctx_s: list = field(default_factory=list)
    ctx_wy: TypicalityContext = None
    x_kernel: list = field(default_factory=list)

    def __post_init__(self):
        tc = self.tc
        _field_of(tc)
        if tc.cond1.shape[0] != 1 or tc.cond2.shape[0] != 1:
            raise StructureError("simulation supports test channels without a U component")
        p = tc.joint()
        for j in (1, 2):
            self.ctx_vs.append(TypicalityContext(p.marginal_pmf([f"V{j}", f"S{j}"]), self.delta / 2))
            self.ctx_s.append(TypicalityContext(p.marginal_pmf([f"S{j}"]), self.delta / 4))
            c = getattr(tc, f"cond{j}")[0]  # (V, X, S)
            mass = c.sum(axis=1, keepdims=True)
            kern = np.where(mass > 0, c / np.where(mass > 0, mass, 1), 1.0 / c.shape[1])
            self.x_kernel.append(np.cumsum(np.transpose(kern, (0, 2, 1)), axis=-1))  # [v, s, x]
        self.ctx_wy = TypicalityContext(tc.joint_with_sum(keep=["Y"]).marginal_pmf(["W", "Y"]), self.delta)


def typicality_encode(code, ctx, m, s, rng, cap=ENUM_CAP):
    """Pick uniformly among coset members jointly typical with s.

    Returns (codeword, failed).  On failure a uniform coset member is returned.
    """
    members = coset_members(code, m, cap)
    ns = ctx.p.table.shape[1]
    ok = ctx.typical(members * ns + np.asarray(s)[None, :])
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        return members[rng.integers(len(members))], True
    return members[idx[rng.integers(len(idx))]], False


@dataclass
class DecodeResult:
    size: int
    messages: set
    route: str

    @property
    def message(self):
        if self.size == 1 and self.messages is not None:
            return next(iter(self.messages))
        return None


def _typical_candidates(ctx, y, cap):
    """All w with (w, y) typical, by enumerating symbols of positive joint mass."""
    tab = ctx.p.table  # [w, y]
    nw = tab.shape[0]
    allowed = [np.flatnonzero(tab[:, b] > 0) for b in range(tab.shape[1])]
    opts = [allowed[b] for b in y]
    if any(len(o) == 0 for o in opts):
        return np.zeros((0, len(y)), dtype=np.int64)
    count = math.prod(len(o) for o in opts)
    if count > cap:
        raise CapExceeded("typical-candidate enumeration", count, cap)
    free = [i for i, o in enumerate(opts) if len(o) > 1]
    base = np.array([o[0] for o in opts], dtype=np.int64)
    if free:
        choice = np.indices([len(opts[i]) for i in free]).reshape(len(free), -1).T
        cands = np.repeat(base[None, :], len(choice), axis=0)
        for c, i in enumerate(free):
            cands[:, i] = opts[i][choice[:, c]]
    else:
        cands = base[None, :]
    ok = ctx.typical(cands * tab.shape[1] + np.asarray(y)[None, :])
    return cands[ok]


def _route_linear(dcode, ctx, y, cap):
    f = dcode.field
    cands = _typical_candidates(ctx, y, cap)
    if len(cands) == 0:
        return DecodeResult(0, set(), "linear")
    g = dcode.stacked()
    if g.shape[0] == 0:
        hit = np.all(cands == dcode.bias[None, :], axis=1)
        return DecodeResult(int(hit.any()), {()} if hit.any() else set(), "linear")
    solver = left_solver(f, g)
    t = f.add_tab[cands, f.neg_tab[dcode.bias][None, :]]
    x, ok = solver.solve(t)
    if not ok.any():
        return DecodeResult(0, set(), "linear")
    k = dcode.k
    m0 = x[ok][:, k:]
    null_m = solver.null_basis[:, k:] if len(solver.null_basis) else np.zeros((0, dcode.l), dtype=np.int64)
    r = rank(f, null_m) if null_m.size else 0
    if r == 0:
        msgs = {tuple(int(v) for v in row) for row in m0}
        return DecodeResult(len(msgs), msgs, "linear")
    # every solution class contributes q^r messages; reduce m0 modulo the null span
    coset_reps = set()
    span = f.matmul(all_vectors(f.q, r, cap), left_solver(f, null_m).echelon) if f.q ** r <= cap else None
    for row in m0:
        if span is None:
            coset_reps.add(None)
            break
        shifted = f.add_tab[row[None, :], span]
        coset_reps.add(min(tuple(int(v) for v in s) for s in shifted))
    size = len(coset_reps) * f.q ** r
    msgs = None
    if span is not None and size <= 4096:
        msgs = set()
        for row in m0:
            msgs |= {tuple(int(v) for v in s) for s in f.add_tab[row[None, :], span]}
    return DecodeResult(size, msgs, "linear")


def _route_enumerate(dcode, ctx, y, cap):
    f = dcode.field
    total = f.q ** (dcode.k + dcode.l)
    if total > cap:
        raise CapExceeded("decoder-code enumeration", total, cap)
    idx = all_vectors(f.q, dcode.k + dcode.l, cap)
    g = dcode.stacked()
    words = f.add_tab[f.matmul(idx, g), dcode.bias[None, :]] if len(g) else np.repeat(dcode.bias[None, :], len(idx), 0)
    ny = ctx.p.table.shape[1]
    ok = ctx.typical(words * ny + np.asarray(y)[None, :])
    msgs = {tuple(int(v) for v in row[dcode.k:]) for row in idx[ok]}
    return DecodeResult(len(msgs), msgs, "enumerate")


def decode_set(pair, ctx, y, cap=ENUM_CAP, route="auto"):
    """The set D of messages whose coset holds a codeword typical with y."""
    dcode = pair.decoder_code() if isinstance(pair, MacCodePair) else pair
    f = dcode.field
    tab = ctx.p.table
    y = np.asarray(y, dtype=np.int64)
    if route == "auto":
        log_b = sum(math.log2(max(1, np.count_nonzero(tab[:, b] > 0))) for b in y)
        log_a = (dcode.k + dcode.l) * math.log2(f.q)
        lc = math.log2(cap)
        if log_b <= min(log_a, lc):
            route = "linear"
        elif log_a <= lc:
            route = "enumerate"
        elif log_b <= lc:
            route = "linear"
        else:
            raise CapExceeded("sum decoding", int(2 ** min(log_a, log_b)), cap)
    if route == "linear":
        return _route_linear(dcode, ctx, y, cap)
    if route == "enumerate":
        return _route_enumerate(dcode, ctx, y, cap)
    raise ValueError(f"unknown route {route!r}")


def decode_sum(pair, ctx, y, cap=ENUM_CAP, route="auto"):
    """Unique message tuple (m1 followed by m2), or None for an error."""
    return decode_set(pair, ctx, y, cap, route).message


# ------------------------------------------------------------ simulation

@dataclass
class SimReport:
    n: int
    k1: int
    k2: int
    l1: int
    l2: int
    q: int
    delta: float
    seed: int
    trials: int = 0
    enc_fail: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    enc_fail_typical_state: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    dec_err: int = 0
    competing: int = 0
    missed: int = 0
    cost_sum: np.ndarray = field(default_factory=lambda: np.zeros(2))
    joint_hist: np.ndarray = None

    @property
    def rate_sum(self):
        return (self.l1 + self.l2) * math.log2(self.q) / self.n

    @property
    def cost(self):
        return self.cost_sum / max(self.trials, 1)

    def rate(self, what):
        count = {"dec_err": self.dec_err, "competing": self.competing, "missed": self.missed}
        if what in count:
            return count[what] / self.trials
        if what.startswith("enc_fail_typ"):
            return self.enc_fail_typical_state[int(what[-1]) - 1] / self.trials
        return self.enc_fail[int(what[-1]) - 1] / self.trials

    def merge(self, other):
        self.trials += other.trials
        self.enc_fail += other.enc_fail
        self.enc_fail_typical_state += other.enc_fail_typical_state
        self.dec_err += other.dec_err
        self.competing += other.competing
        self.missed += other.missed
        self.cost_sum += other.cost_sum
        self.joint_hist = other.joint_hist if self.joint_hist is None else self.joint_hist + other.joint_hist
        return self

    def csv_row(self):
        return {"n": self.n, "rate_sum": f"{self.rate_sum:.6f}", "trials": self.trials,
                "enc_fail_1": int(self.enc_fail[0]), "enc_fail_2": int(self.enc_fail[1]),
                "dec_err": self.dec_err, "cost_1": f"{self.cost[0]:.6f}",
                "cost_2": f"{self.cost[1]:.6f}", "seed": self.seed}

    def markov_tv(self, tc):
        """Total variation between the empirical (V1, S1, S2, V2) type of
        successful encodings and p(v1|s1) W_S(s1, s2) p(v2|s2)."""
        p = tc.joint().marginal(["V1", "S1", "S2", "V2"])
        h = self.joint_hist
        if h is None or h.sum() == 0:
            return float("nan")
        return 0.5 * float(np.abs(h / h.sum() - p).sum())

    def markov_gap(self):
        """Total variation between the empirical (V1, S1, S2, V2) type and the
        chain V1 - S1 - S2 - V2 built from its own pairwise marginals."""
        h = self.joint_hist
        if h is None or h.sum() == 0:
            return float("nan")
        h = h / h.sum()
        vs1 = h.sum(axis=(2, 3))
        ss = h.sum(axis=(0, 3))
        sv2 = h.sum(axis=(0, 1))
        s1, s2 = ss.sum(axis=1), ss.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(s1 > 0, vs1 / s1, 0.0)
            b = np.where(s2[:, None] > 0, sv2 / s2[:, None], 0.0)
        chain = np.einsum("vs,st,tw->vstw", a, ss, b)
        return 0.5 * float(np.abs(h - chain).sum())


def trial_rng(seed, n, trial):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(trial)]))


def _run_trials(args):
    ctx, n, k1, k2, l1, l2, seed, lo, hi, cap, fixed_code = args
    tc = ctx.tc
    f = tc.vspace
    ch = tc.channel
    rep = SimReport(n, k1, k2, l1, l2, f.q, ctx.delta, seed)
    nv = tc.nv
    ns1, ns2 = ch.state.shape
    hist = np.zeros((nv, ns1, ns2, nv))
    state_cdf = np.cumsum(ch.state.reshape(-1))
    kern_cdf = np.cumsum(ch.kernel, axis=-1)
    fixed = None
    if fixed_code:
        # a stream of its own, disjoint from every per-trial stream
        code_rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(n)], spawn_key=(1,)))
        fixed = sample_mac_pair(f, n, k1, k2, l1, l2, code_rng, cap)
    for t in range(lo, hi):
        rng = trial_rng(seed, n, t)
        pair = fixed if fixed is not None else sample_mac_pair(f, n, k1, k2, l1, l2, rng, cap)
        st = np.minimum(np.searchsorted(state_cdf, rng.random(n), side="right"), state_cdf.size - 1)
        s1, s2 = np.unravel_index(st, (ns1, ns2))
        m = [rng.integers(0, f.q, size=l1), rng.integers(0, f.q, size=l2)]
        vs, xs, ok = [], [], []
        for j, s in ((1, s1), (2, s2)):
            v, failed = typicality_encode(pair.user(j), ctx.ctx_vs[j - 1], m[j - 1], s, rng, cap)
            if failed:
                rep.enc_fail[j - 1] += 1
                if ctx.ctx_s[j - 1].typical(s):
                    rep.enc_fail_typical_state[j - 1] += 1
            cdf = ctx.x_kernel[j - 1][v, s]  # (n, X)
            x = np.minimum((rng.random(n)[:, None] >= cdf).sum(axis=1), cdf.shape[1] - 1)
            rep.cost_sum[j - 1] += ch.cost(j)[x, s].mean()
            vs.append(v)
            xs.append(x)
            ok.append(not failed)
        if all(ok):
            np.add.at(hist, (vs[0], s1, s2, vs[1]), 1)
        cdf = kern_cdf[s1, s2, xs[0], xs[1]]
        y = np.minimum((rng.random(n)[:, None] >= cdf).sum(axis=1), cdf.shape[1] - 1)
        res = decode_set(pair, ctx.ctx_wy, y, cap)
        truth = tuple(int(v) for v in np.concatenate(m))
        correct = res.size == 1 and res.messages == {truth}
        has_truth = res.messages is not None and truth in res.messages
        if res.messages is None:
            has_truth = res.size > 0  # very large D; membership is immaterial to the error
        rep.trials += 1
        if not correct:
            rep.dec_err += 1
        if res.size > (1 if has_truth else 0):
            rep.competing += 1
        if not has_truth:
            rep.missed += 1
    rep.joint_hist = hist
    return rep


def simulate_mac(tc, n, k1, k2, l1, l2, delta, trials, seed=0, workers=None,
                 cap=ENUM_CAP, fixed_code=False):
    """Monte Carlo over codes, states, messages and channel noise.

    Every trial draws from its own counter-derived generator, so the report
    depends only on the arguments and not on the worker count.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if n < 1 or min(k1, k2, l1, l2) < 0:
        raise ValueError("need n >= 1 and nonnegative code dimensions")
    ctx = SimContext(tc, delta)
    f = tc.vspace
    if f.q ** max(k1, k2) > cap:
        raise CapExceeded("coset enumeration", f.q ** max(k1, k2), cap)
    if workers is None:
        try:
            workers = max(1, int(os.environ.get("COSETMAC_WORKERS", "1")))
        except ValueError:
            workers = 1
    workers = max(1, min(int(workers), trials))
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(ctx, n, k1, k2, l1, l2, seed, lo, hi, cap, fixed_code)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if workers == 1:
        parts = [_run_trials(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_run_trials, jobs))
    rep = SimReport(n, k1, k2, l1, l2, f.q, delta, seed)
    for p in parts:
        rep.merge(p)
    return rep


# ------------------------------------------------ exhaustive verification

@dataclass
class CheckReport:
    name: str
    passed: bool
    cases: int
    detail: str = ""

    def __bool__(self):
        return self.passed


def _ensemble(f, n, k, l, bias, cap):
    dims = n * (k + l + (1 if bias else 0))
    if f.q ** dims > cap:
        raise CapExceeded("code ensemble", f.q ** dims, cap)
    for flat in itertools.product(range(f.q), repeat=dims):
        arr = np.array(flat, dtype=np.int64)
        gi = arr[:k * n].reshape(k, n)
        go = arr[k * n:(k + l) * n].reshape(l, n)
        b = arr[(k + l) * n:] if bias else np.zeros(n, dtype=np.int64)
        yield NestedCosetCode(f, gi, go, b)


def _indices(f, k, l):
    return [(tuple(a), tuple(m)) for a in itertools.product(range(f.q), repeat=k)
            for m in itertools.product(range(f.q), repeat=l)]


def check_pairwise_independence(f, n, k, l, bias=True, cap=ENUM_CAP):
    """Exact check that codewords are uniform and pairwise independent."""
    idx = _indices(f, k, l)
    marg = [Counter() for _ in idx]
    pairs = {(i, j): Counter() for i in range(len(idx)) for j in range(i + 1, len(idx))}
    total = 0
    for code in _ensemble(f, n, k, l, bias, cap):
        words = [tuple(int(v) for v in codeword(code, a, m)) for a, m in idx]
        total += 1
        for i, w in enumerate(words):
            marg[i][w] += 1
        for (i, j), c in pairs.items():
            c[(words[i], words[j])] += 1
    qn = f.q ** n
    bad = []
    for i, c in enumerate(marg):
        if len(c) != qn or any(v * qn != total for v in c.values()):
            bad.append(f"codeword {idx[i]} not uniform")
    for (i, j), c in pairs.items():
        if len(c) != qn * qn or any(v * qn * qn != total for v in c.values()):
            bad.append(f"codewords {idx[i]}, {idx[j]} not independent")
    return CheckReport(f"pairwise independence q={f.q} n={n} k={k} l={l} bias={bias}",
                       not bad, total, "; ".join(bad[:3]))


def _independent(joint, total):
    left, right = Counter(), Counter()
    for (a, b), c in joint.items():
        left[a] += c
        right[b] += c
    if len(joint) != len(left) * len(right):
        return False
    return all(c * total == left[a] * right[b] for (a, b), c in joint.items())


def check_coset_independence(f, n, k, l, same_coset=False, cap=ENUM_CAP):
    """Exact check that a coset is independent of a codeword in another coset.

    With same_coset=True the competing codeword is taken from the same coset
    (a different inner index), where independence must fail.
    """
    if l < 1 and not same_coset:
        raise ValueError("need l >= 1 for distinct cosets")
    m = (0,) * l
    a_hat = tuple([1] + [0] * (k - 1)) if k else ()
    if same_coset:
        if k < 1:
            raise ValueError("need k >= 1 for a same-coset control")
        m_hat = m
    else:
        m_hat = tuple([1] + [0] * (l - 1))
    joint = Counter()
    total = 0
    for code in _ensemble(f, n, k, l, True, cap):
        members = tuple(tuple(int(v) for v in row) for row in coset_members(code, m, cap))
        other = tuple(int(v) for v in codeword(code, a_hat, m_hat))
        joint[(members, other)] += 1
        total += 1
    ok = _independent(joint, total)
    tag = "same-coset control" if same_coset else "coset independence"
    return CheckReport(f"{tag} q={f.q} n={n} k={k} l={l}", ok, total)


def _mac_ensemble(f, n, k1, k2, l1, l2, cap):
    k = max(k1, k2)
    dims = n * (k + l1 + l2 + 2)
    if f.q ** dims > cap:
        raise CapExceeded("MAC code ensemble", f.q ** dims, cap)
    for flat in itertools.product(range(f.q), repeat=dims):
        arr = np.array(flat, dtype=np.int64).reshape(-1, n)
        yield MacCodePair(f, k1, k2, l1, l2, arr[:k], arr[k:k + l1 + l2],
                          arr[k + l1 + l2], arr[k + l1 + l2 + 1])


def check_mac_coset_independence(f, n, k1, k2, l1, l2, cap=ENUM_CAP):
    """Exact check that (C1(m1), C2(m2)) is independent of a decoder-code
    codeword in a competing coset."""
    m1, m2 = (0,) * l1, (0,) * l2
    m_hat = tuple([1] + [0] * (l1 + l2 - 1))
    a_hat = (0,) * max(k1, k2)
    joint = Counter()
    total = 0
    for pair in _mac_ensemble(f, n, k1, k2, l1, l2, cap):
        c1 = tuple(tuple(int(v) for v in r) for r in coset_members(pair.user(1), m1, cap))
        c2 = tuple(tuple(int(v) for v in r) for r in coset_members(pair.user(2), m2, cap))
        other = tuple(int(v) for v in codeword(pair.decoder_code(), a_hat, m_hat))
        joint[((c1, c2), other)] += 1
        total += 1
    return CheckReport(f"MAC coset independence q={f.q} n={n} k=({k1},{k2}) l=({l1},{l2})",
                       _independent(joint, total), total)


def check_sum_identity(pair):
    """v1(a1, m1) + v2(a2, m2) = v(pad(a1) + pad(a2), (m1, m2)) for all arguments."""
    f = pair.field
    c1, c2, cd = pair.user(1), pair.user(2), pair.decoder_code()
    bad = 0
    cases = 0
    for a1 in itertools.product(range(f.q), repeat=pair.k1):
        for a2 in itertools.product(range(f.q), repeat=pair.k2):
            a = f.vadd(pad_inner(pair, a1, 1), pad_inner(pair, a2, 2))
            for m1 in itertools.product(range(f.q), repeat=pair.l1):
                for m2 in itertools.product(range(f.q), repeat=pair.l2):
                    lhs = f.vadd(codeword(c1, a1, m1), codeword(c2, a2, m2))
                    rhs = codeword(cd, a, m1 + m2)
                    bad += not np.array_equal(lhs, rhs)
                    cases += 1
    return CheckReport("sum identity", bad == 0, cases, f"{bad} mismatches" if bad else "")
