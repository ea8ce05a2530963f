import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosetmac.algebra import cyclic, field_of_order
from cosetmac.channels import (CATALOG, ChannelSpec, ConfigError, channel_catalog,
                               format_channel_config, load_channel, parse_channel_config)
from cosetmac.info import binary_entropy
from cosetmac.regions import (BudgetExceeded, StructureError, TestChannel, alpha_bounds,
                              beta_f_sum_rate, best_sum_rate, enumerate_test_channels,
                              example1_test_channel, gp_rate, pz_test_channel, qdd_closed_forms,
                              qdd_test_channel, raw_pair_count, bdd_test_channel, rsf_bounds,
                              rsg_bounds, example3_test_channel)

# 30-digit evaluations of the three closed forms at tau = 0.3
QDD_03 = (0.713559298894078945321881814854, 0.856779649447039472660940907427,
          1.35677964944703947266094090743)

BDD_CFG = """
# binary doubly dirty MAC
[alphabets]
S1 = 2
S2 = 2
X1 = 2
X2 = 2
Y = 2
[state]
0 0 = 0.25
0 1 = 0.25
1 0 = 0.25
1 1 = 0.25
[kernel]
"""


def _bdd_text():
    rows = []
    for s2, x2, s1, x1 in itertools.product(range(2), repeat=4):
        rows.append(f"{s2}{x2}{s1}{x1} = {1 - (s1 ^ s2 ^ x1 ^ x2)}")
    return BDD_CFG + "\n".join(rows) + "\n[cost1]\n1 0 = 1\n1 1 = 1\n[cost2]\n1 0 = 1\n1 1 = 1\n"


# ------------------------------------------------------------ catalog

def test_catalog_entries():
    b = channel_catalog("bdd")
    assert np.allclose(b.state, 0.25)
    for s1, s2, x1, x2 in itertools.product(range(2), repeat=4):
        assert b.kernel[s1, s2, x1, x2, s1 ^ s2 ^ x1 ^ x2] == 1.0
    e5 = channel_catalog("example5")
    assert e5.kernel[1, 0, 0, 0, 0] == 0.06  # row s2 x2 s1 x1 = 0010
    assert e5.kernel[0, 0, 0, 0, 0] == 0.92
    assert np.array_equal(e5.kernel, channel_catalog("example2").kernel)
    q = channel_catalog("qdd")
    assert q.cost1[2, 3] == 1 and q.cost1[0, 1] == 0
    assert np.allclose(q.state, 1 / 16)
    assert channel_catalog("dpc").single_user
    with pytest.raises(KeyError):
        channel_catalog("nope")


def test_catalog_kernels_normalized():
    for name in CATALOG:
        ch = channel_catalog(name)
        assert np.allclose(ch.kernel.sum(axis=-1), 1, atol=1e-12)
        assert abs(ch.state.sum() - 1) < 1e-12


def test_blackwell_and_example3_rows():
    bw = channel_catalog("blackwell")
    # g = 0 when both states are 0
    assert bw.kernel[0, 0, 1, 1, 1] == pytest.approx(0.02)
    # s1 = 1, x1 = 0 gives g = 1
    assert bw.kernel[1, 0, 0, 0, 0] == pytest.approx(0.04)
    e3 = channel_catalog("example3")
    assert e3.kernel[1, 0, 1, 0, 0] == 1.0
    assert e3.kernel[1, 0, 0, 0, 1] == 1.0


# ------------------------------------------------------------ config

def test_parse_matches_catalog():
    ch = parse_channel_config(_bdd_text(), "bdd")
    ref = channel_catalog("bdd")
    assert np.array_equal(ch.kernel, ref.kernel)
    assert np.array_equal(ch.cost1, ref.cost1)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_config_round_trip(name):
    ch = channel_catalog(name)
    back = parse_channel_config(format_channel_config(ch), name)
    for attr in ("state", "kernel", "cost1", "cost2"):
        assert np.array_equal(getattr(back, attr), getattr(ch, attr))


def test_load_channel(tmp_path):
    path = tmp_path / "bdd.cfg"
    path.write_text(_bdd_text())
    assert np.array_equal(load_channel(str(path)).kernel, channel_catalog("bdd").kernel)
    assert load_channel("qdd").sizes["Y"] == 4
    with pytest.raises(ConfigError):
        load_channel(str(tmp_path / "missing.cfg"))


def test_exact_decimal_sums():
    text = _bdd_text().replace("0000 = 1", "0000 = 0.1 0.2")
    with pytest.raises(ConfigError, match="sums"):
        parse_channel_config(text)
    ok = _bdd_text().replace("[state]\n0 0 = 0.25\n0 1 = 0.25", "[state]\n0 0 = 0.1\n0 1 = 0.4")
    assert parse_channel_config(ok).state[0, 0] == 0.1


@pytest.mark.parametrize("edit,match", [
    (lambda t: t.replace("[state]", "[stat]"), "section"),
    (lambda t: t.replace("0000 = 1\n", ""), "missing row"),
    (lambda t: t.replace("0000 = 1", "0000 = -0.5 1.5"), "negative"),
    (lambda t: t.replace("0000 = 1", "0000 = abc"), "decimal"),
    (lambda t: t.replace("0000 = 1", "2000 = 1"), "out of range"),
    (lambda t: t.replace("Y = 2", "Y = two"), "integer"),
    (lambda t: t.replace("0 0 = 0.25", "0 0 = 0.5"), "sum"),
    (lambda t: t.replace("S1 = 2\n", ""), "missing"),
    (lambda t: t.replace("1 0 = 1\n1 1 = 1\n[cost2]", "1 0 = -1\n[cost2]"), "negative cost"),
    (lambda t: "0 0 = 1\n" + t, "outside"),
])
def test_config_errors(edit, match):
    with pytest.raises(ConfigError, match=match):
        parse_channel_config(edit(_bdd_text()))


def test_channelspec_validation():
    with pytest.raises(ValueError):
        ChannelSpec("bad", np.full((2, 2), 0.25), np.full((2, 2, 2, 2, 2), 0.6), np.zeros((2, 2)), np.zeros((2, 2)))


# ------------------------------------------------------------ bounds

def _bsc():
    # state-free binary symmetric channel with crossover 0.1
    kern = np.zeros((1, 1, 2, 1, 2))
    kern[0, 0, 0, 0] = [0.9, 0.1]
    kern[0, 0, 1, 0] = [0.1, 0.9]
    return ChannelSpec("bsc", np.ones((1, 1)), kern, np.zeros((2, 1)), np.zeros((1, 1)))


def test_gp_rate_examples():
    ch = _bsc()
    c1 = np.zeros((1, 2, 2, 1))
    c1[0, 0, 0, 0] = c1[0, 1, 1, 0] = 0.5
    assert gp_rate(TestChannel(ch, c1, np.ones((1, 2, 1, 1)) / 2)) == pytest.approx(1 - binary_entropy(0.1), abs=1e-12)
    dpc = channel_catalog("dpc")
    for tau in [0.1, 0.25, 0.4]:
        c = np.zeros((1, 2, 2, 2))
        for s, x in itertools.product(range(2), repeat=2):
            c[0, x ^ s, x, s] = tau if x else 1 - tau
        # Y = V here, so I(V;Y) - I(V;S) = H(V) - 1 + H(V|S) = h_b(tau)
        tc = TestChannel(dpc, c, np.ones((1, 2, 1, 1)) / 2)
        assert gp_rate(tc) == pytest.approx(binary_entropy(tau), abs=1e-12)
    indep = np.full((1, 2, 2, 2), 0.25)
    assert gp_rate(TestChannel(dpc, indep, np.ones((1, 2, 1, 1)) / 2)) == 0.0
    with pytest.raises(StructureError):
        gp_rate(bdd_test_channel(0.2))


def test_alpha_examples():
    ch = channel_catalog("bdd")
    const = np.zeros((1, 1, 2, 2))
    const[0, 0, 0, :] = 1
    assert alpha_bounds(TestChannel(ch, const, const.copy())) == (0.0, 0.0, 0.0)
    for tau in [0.05, 0.2, 0.35, 0.5]:
        rs = alpha_bounds(pz_test_channel(tau), clamp=False)[2]
        assert rs == pytest.approx(2 * binary_entropy(tau) - 1, abs=1e-12)
    for tau in [0.1, 0.4, 0.7]:
        rs = alpha_bounds(qdd_test_channel(tau, "u"), clamp=False)[2]
        g = -tau * np.log2(tau / 3) - (1 - tau) * np.log2(1 - tau)
        assert rs == pytest.approx(2 * g - 2, abs=1e-12)


def test_beta_f_examples():
    for tau in np.arange(0.05, 0.5, 0.05):
        assert beta_f_sum_rate(bdd_test_channel(tau)) == pytest.approx(binary_entropy(tau), abs=1e-12)
    for tau in [0.05, 0.1, 0.15, 0.2, 0.24]:
        assert beta_f_sum_rate(example1_test_channel(tau)) == pytest.approx(binary_entropy(2 * tau) / 2, abs=1e-12)
    assert beta_f_sum_rate(example3_test_channel()) == pytest.approx(0.0017, abs=1e-4)
    assert alpha_bounds(example3_test_channel("u"), clamp=False)[2] < 0
    with pytest.raises(StructureError):
        beta_f_sum_rate(qdd_test_channel(0.3))


def test_qdd_closed_forms_examples():
    assert qdd_closed_forms(0.0) == (0.0, 0.0, 0.0)
    # uniform inputs: -2(3/4)log(1/4) - 2(1/4)log(1/4) - 2 = 2
    assert qdd_closed_forms(0.75)[0] == pytest.approx(2.0, abs=1e-12)
    assert qdd_closed_forms(0.3) == pytest.approx(QDD_03, abs=1e-12)
    a, bf, bg = qdd_closed_forms(0.3)
    assert bg > max(a, bf)
    with pytest.raises(ValueError):
        qdd_closed_forms(0.8)


@pytest.mark.parametrize("tau", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
def test_qdd_closed_forms_vs_evaluators(tau):
    a, bf, bg = qdd_closed_forms(tau)
    assert alpha_bounds(qdd_test_channel(tau, "u"))[2] == pytest.approx(a, abs=1e-9)
    assert beta_f_sum_rate(qdd_test_channel(tau, "v", "field")) == pytest.approx(bf, abs=1e-9)
    assert rsg_bounds(qdd_test_channel(tau, "v", "group"))[2] == pytest.approx(bg, abs=1e-9)


# independent evaluator: explicit loops for the joint, axis sums for entropies

def _loop_joint(tc):
    ch = tc.channel
    nu1, nv, nx1, ns1 = tc.cond1.shape
    nu2, _, nx2, ns2 = tc.cond2.shape
    ny = ch.kernel.shape[-1]
    add = tc.vspace.add_table()
    out = {}
    for u1, v1, x1, s1, u2, v2, x2, s2, y in itertools.product(
            range(nu1), range(nv), range(nx1), range(ns1), range(nu2), range(nv), range(nx2),
            range(ns2), range(ny)):
        pr = (ch.state[s1, s2] * tc.cond1[u1, v1, x1, s1] * tc.cond2[u2, v2, x2, s2]
              * ch.kernel[s1, s2, x1, x2, y])
        key = dict(U1=u1, V1=v1, S1=s1, U2=u2, V2=v2, S2=s2, Y=y, W=int(add[v1, v2]))
        out[tuple(sorted(key.items()))] = out.get(tuple(sorted(key.items())), 0.0) + pr
    return out


def _H(joint, names):
    marg = {}
    for key, pr in joint.items():
        d = dict(key)
        k = tuple(d[n] for n in names)
        marg[k] = marg.get(k, 0.0) + pr
    return -sum(p * np.log2(p) for p in marg.values() if p > 0)


def _rsf_reference(tc):
    J = _loop_joint(tc)
    H = lambda *a: _H(J, list(a)) if a else 0.0
    I = lambda a, b: H(*a) + H(*b) - H(*(a + b))
    m = min(H("V1", "U1", "S1") - H("U1", "S1"), H("V2", "U2", "S2") - H("U2", "S2"))
    hw = H("W", "U1", "U2", "Y") - H("U1", "U2", "Y")
    i1, i2 = I(["U1"], ["S1"]), I(["U2"], ["S2"])
    r1 = I(["U1"], ["U2", "Y"]) - i1 + m - hw
    r2 = I(["U2"], ["U1", "Y"]) - i2 + m - hw
    rs = I(["U1", "U2"], ["Y"]) + I(["U1"], ["U2"]) - i1 - i2 + m - hw
    return tuple(max(0.0, v) for v in (r1, r2, rs))


def _random_tc(seed, nu=2, q=2, channel="bdd", vspace=None):
    rng = np.random.default_rng(seed)
    ch = channel_catalog(channel)
    conds = []
    for j in (1, 2):
        nx, ns = ch.cost(j).shape
        c = rng.dirichlet(np.ones(nu * q * nx) * 0.5, size=ns).T.reshape(nu, q, nx, ns)
        conds.append(c)
    return TestChannel(ch, conds[0], conds[1], vspace or field_of_order(q))


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("q", [2, 3])
def test_rsf_independent_evaluator(seed, q):
    tc = _random_tc(seed, q=q)
    assert rsf_bounds(tc) == pytest.approx(_rsf_reference(tc), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_rsf_reductions(seed):
    rng = np.random.default_rng(seed)
    ch = channel_catalog("example2")
    # constant V: rsf collapses to alpha
    conds = [rng.dirichlet(np.ones(4), size=2).T.reshape(2, 1, 2, 2) for _ in range(2)]
    padded = [np.concatenate([c, np.zeros_like(c)], axis=1) for c in conds]
    tc_u = TestChannel(ch, padded[0], padded[1], field_of_order(2))
    assert rsf_bounds(tc_u) == pytest.approx(alpha_bounds(tc_u), abs=1e-12)
    # constant U: the sum bound is beta_f
    conds = [rng.dirichlet(np.ones(6), size=2).T.reshape(1, 3, 2, 2) for _ in range(2)]
    tc_v = TestChannel(ch, conds[0], conds[1], field_of_order(3))
    assert rsf_bounds(tc_v)[2] == pytest.approx(beta_f_sum_rate(tc_v), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_rsg_matches_rsf_for_z2(seed):
    tc_f = _random_tc(seed, channel="example2")
    tc_g = TestChannel(tc_f.channel, tc_f.cond1, tc_f.cond2, cyclic(2, 1))
    assert rsg_bounds(tc_g) == pytest.approx(rsf_bounds(tc_f), abs=1e-12)


def test_rsg_independent_v_is_zero():
    ch = channel_catalog("qdd")
    c = np.zeros((1, 4, 4, 4))
    c[0, :, 0, :] = 0.25  # V uniform and independent of everything, X = 0
    assert rsg_bounds(TestChannel(ch, c, c.copy(), cyclic(2, 2))) == (0.0, 0.0, 0.0)


def test_testchannel_structure_errors():
    ch = channel_catalog("bdd")
    good = bdd_test_channel(0.2).cond1
    with pytest.raises(StructureError):
        TestChannel(ch, good[0], good)
    with pytest.raises(StructureError):
        TestChannel(ch, good * 2, good)
    bad = good.copy()
    bad[0, 0, 0, 0] = -0.1
    with pytest.raises(StructureError):
        TestChannel(ch, bad, good)
    with pytest.raises(StructureError):
        TestChannel(ch, good, good, field_of_order(3))
    with pytest.raises(StructureError):
        TestChannel(ch, good, np.ones((1, 3, 2, 2)) / 6)
    with pytest.raises(StructureError):
        bdd_test_channel(0.3).check(tau=0.2)
    bdd_test_channel(0.3).check(tau=0.3)
    noisy = np.full((1, 2, 2, 2), 0.25)
    with pytest.raises(StructureError):
        TestChannel(ch, noisy, noisy, field_of_order(2)).check()
    with pytest.raises(StructureError):
        pz_test_channel(0.2).joint_with_sum()


def test_joint_factorization():
    tc = _random_tc(5, channel="example2")
    p = tc.joint()
    assert np.allclose(p.marginal(["S1", "S2"]), tc.channel.state)
    # U1 V1 - S1 - S2 U2 V2
    j = p.marginal(["U1", "V1", "S1", "S2", "U2", "V2"])
    a = j.sum(axis=(3, 4, 5))
    b = j.sum(axis=(0, 1, 2))
    s = j.sum(axis=(0, 1, 4, 5))
    ps1 = s.sum(axis=1)
    ps2 = s.sum(axis=0)
    pred = np.einsum("uvs,st,tUV->uvstUV", a / ps1, s, b / ps2[:, None, None])
    assert np.allclose(j, pred, atol=1e-12)


# ------------------------------------------------------------ enumeration

def test_enumeration_counts():
    ch = channel_catalog("bdd")
    assert raw_pair_count(ch, "alpha", step=0.5) == (3 ** 2 * 16) ** 2
    assert sum(1 for _ in enumerate_test_channels(ch, "alpha", step=0.5, tau=1.0)) == (3 ** 2 * 16) ** 2


def test_zero_cost_filter():
    ch = channel_catalog("bdd")
    n = 0
    for tc in enumerate_test_channels(ch, "beta_f", step=0.5, tau=0):
        assert tc.costs() == (0.0, 0.0)
        assert tc.is_deterministic()
        n += 1
    assert n == 625


def _contains(stream, target):
    return any(np.allclose(tc.cond1, target.cond1) and np.allclose(tc.cond2, target.cond2)
               for tc in stream)


def test_grid_contains_known_test_channels():
    ch = channel_catalog("bdd")
    assert _contains(enumerate_test_channels(ch, "alpha", step=0.25, tau=0.25), pz_test_channel(0.25))
    assert _contains(enumerate_test_channels(ch, "beta_f", step=0.25, tau=0.25), bdd_test_channel(0.25))
    # the step 0.05 grid for one user, via the point-to-point channel with the same user-1 law
    dpc = channel_catalog("dpc")
    target = np.zeros((2, 1, 2, 2))
    target[:, 0] = pz_test_channel(0.25).cond1[:, 0]
    stream = enumerate_test_channels(dpc, "alpha", step=0.05, tau=0.25)
    assert any(np.allclose(tc.cond1, target) for tc in stream)


def test_enumeration_budget():
    ch = channel_catalog("qdd")
    with pytest.raises(BudgetExceeded) as err:
        next(enumerate_test_channels(ch, "alpha", step=0.05))
    assert err.value.required > 0


def _brute_best(ch, family, tau, step):
    best = 0.0
    for tc in enumerate_test_channels(ch, family, step=step, tau=tau):
        if family == "alpha":
            r1, r2, rs = alpha_bounds(tc)
            val = min(rs, r1 + r2)
        else:
            val = beta_f_sum_rate(tc)
        best = max(best, val)
    return best


@pytest.mark.parametrize("name,family", [("bdd", "alpha"), ("example2", "alpha"), ("example2", "beta_f"),
                                         ("blackwell", "beta_f")])
def test_best_sum_rate_matches_brute_force(name, family):
    ch = channel_catalog(name)
    curve = best_sum_rate(ch, family, taus=[0, 0.25], step=0.5, workers=1)
    for i, tau in enumerate(curve.taus):
        assert curve.values[i] == pytest.approx(_brute_best(ch, family, tau, 0.5), abs=1e-12)


def test_best_sum_rate_bdd_beta_f():
    curve = best_sum_rate(channel_catalog("bdd"), "beta_f", taus=[0.1, 0.25], step=0.05)
    assert curve.values[-1] >= binary_entropy(0.25) - 0.02
    assert curve.values[0] == 0.0


def test_best_sum_rate_properties():
    ch = channel_catalog("example2")
    taus = np.round(np.arange(0, 0.51, 0.05), 12)
    a = best_sum_rate(ch, "alpha", taus, step=0.25, workers=1)
    b = best_sum_rate(ch, "alpha", taus, step=0.25, workers=2)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.values, best_sum_rate(ch, "alpha", taus, step=0.25, workers=1).values)
    assert np.all(np.diff(a.enveloped()) >= -1e-12)
    assert np.all(np.diff(a.values) >= 0)
    assert np.all(a.enveloped() >= a.values - 1e-12)


def test_best_sum_rate_errors():
    ch = channel_catalog("bdd")
    with pytest.raises(BudgetExceeded):
        best_sum_rate(ch, "alpha", [0.25], step=0.25, budget=10)
    with pytest.raises(ValueError):
        best_sum_rate(ch, "rsf", [0.25])
    with pytest.raises(ValueError):
        best_sum_rate(ch, "alpha", [])
