"""Command-line entry point: region curves, simulation, group entropies, verification.

Exit codes: 0 success, 1 invalid input, 2 budget or cap exceeded, 3 failed verification.
"""

import argparse
import csv
import io
import sys

import numpy as np

from .algebra import ENUM_CAP, CapExceeded, parse_group
from .channels import ConfigError, load_channel
from .codesim import SIM_COLUMNS, mac_code_params, simulate_mac
from .info import (JointPmf, RateCurve, binary_entropy, group_mi_channel_zpr, group_mi_source,
                   group_mi_source_abelian)
from .regions import (NAMED_TEST_CHANNELS, SEARCH_BUDGET, BudgetExceeded, alpha_bounds,
                      best_sum_rate, beta_f_sum_rate, qdd_closed_forms, bdd_test_channel,
                      rsf_bounds, rsg_bounds)

REGION_COLUMNS = ("tau", "sum_rate", "method", "pre_envelope")
FAMILIES = ("alpha", "beta_f", "rsf", "rsg", "closed_form")
EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_VERIFY = 0, 1, 2, 3


class InvalidConfig(ValueError):
    pass


def _fail(key, msg):
    raise InvalidConfig(f"{key}: {msg}")


# ---------------------------------------------------------------- parsing

def parse_tau_grid(text):
    """'start:stop:step' (stop included) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                _fail("--tau", "step must be positive")
            m = int(np.floor((stop - start) / step + 1e-9))
            vals = [round(start + i * step, 12) for i in range(m + 1)] if m >= 0 else []
        else:
            vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        _fail("--tau", f"cannot parse {text!r}")
    if not vals:
        _fail("--tau", f"grid {text!r} is empty")
    if any(not 0 <= v <= 1 for v in vals):
        _fail("--tau", "costs must lie in [0, 1]")
    return sorted(set(vals))


def _int_list(text, key):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        _fail(key, f"cannot parse {text!r}")
    if not vals:
        _fail(key, "empty list")
    return vals


def _positive(value, key, allow_zero=False):
    if value < 0 or (value == 0 and not allow_zero):
        _fail(key, f"must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    return value


def read_group_pmf(text, order):
    """Rows 'v s prob'; v indexes group elements, s any non-negative label."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 3:
            _fail("pmf", f"line {lineno}: expected 'v s prob', got {line!r}")
        try:
            v, s, pr = int(toks[0]), int(toks[1]), float(toks[2])
        except ValueError:
            _fail("pmf", f"line {lineno}: malformed row {line!r}")
        if not 0 <= v < order:
            _fail("pmf", f"line {lineno}: v={v} outside the group of order {order}")
        if s < 0:
            _fail("pmf", f"line {lineno}: negative state label {s}")
        if not np.isfinite(pr) or pr < 0:
            _fail("pmf", f"line {lineno}: negative or non-finite probability {toks[2]}")
        rows.append((v, s, pr))
    if not rows:
        _fail("pmf", "no rows")
    t = np.zeros((order, max(s for _, s, _ in rows) + 1))
    for v, s, pr in rows:
        t[v, s] += pr
    total = t.sum()
    if abs(total - 1) > 1e-9:
        _fail("pmf", f"probabilities sum to {total:.12g}, not 1")
    return JointPmf(["V", "S"], t)


# -------------------------------------------------------------- commands

def _write_csv(rows, columns, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    if out:
        with open(out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _fmt(x):
    return repr(float(x))


def _test_channel_sum_rate(family, tc):
    if family == "beta_f":
        return beta_f_sum_rate(tc)
    r1, r2, rs = {"alpha": alpha_bounds, "rsf": rsf_bounds, "rsg": rsg_bounds}[family](tc)
    return min(rs, r1 + r2)


def region_rows(args):
    if args.family not in FAMILIES:
        _fail("--family", f"unknown family {args.family!r}; expected one of {', '.join(FAMILIES)}")
    if args.family == "closed_form":
        if args.channel != "qdd":
            _fail("--channel", "closed forms exist for qdd only")
        taus = parse_tau_grid(args.tau or "0:0.75:0.05")
        if taus[-1] > 0.75:
            _fail("--tau", "closed forms hold for tau <= 0.75")
        vals = np.array([qdd_closed_forms(t) for t in taus])
        rows = []
        for j, name in enumerate(("alpha", "beta_f", "beta_g")):
            curve = RateCurve(name, taus, vals[:, j])
            rows += [(t, e, name, v) for t, e, v in zip(taus, curve.enveloped(), vals[:, j])]
        return sorted(rows, key=lambda r: r[0])
    taus = parse_tau_grid(args.tau or "0:0.5:0.05")
    if args.test_channel:
        if args.test_channel not in NAMED_TEST_CHANNELS:
            _fail("--test-channel", f"unknown test channel {args.test_channel!r}; known: "
                  + ", ".join(sorted(NAMED_TEST_CHANNELS)))
        build, chan = NAMED_TEST_CHANNELS[args.test_channel]
        if args.channel not in (None, chan):
            _fail("--channel", f"test channel {args.test_channel} lives on {chan}")
        vals = [_test_channel_sum_rate(args.family, build(t)) for t in taus]
        curve = RateCurve(args.family, taus, vals)
        return [(t, e, args.family, v) for t, e, v in zip(taus, curve.enveloped(), vals)]
    if args.family not in ("alpha", "beta_f"):
        _fail("--family", f"{args.family} needs --test-channel; the grid search covers alpha and beta_f")
    if not args.channel:
        _fail("--channel", "required")
    ch = load_channel(args.channel)
    _positive(args.step, "--step")
    aux = tuple(_int_list(args.aux, "--aux")) if args.aux else None
    if aux is not None and len(aux) != 2:
        _fail("--aux", "expected two sizes, e.g. 2,2")
    curve = best_sum_rate(ch, args.family, taus, args.step, aux, args.budget, args.workers)
    env = curve.enveloped()
    keep = set(taus)
    return [(t, e, args.family, v) for t, e, v in zip(curve.taus, env, curve.values) if t in keep]


def cmd_region(args):
    rows = region_rows(args)
    _write_csv([(_fmt(t), _fmt(e), m, _fmt(v)) for t, e, m, v in rows], REGION_COLUMNS, args.out)
    return EXIT_OK


def cmd_simulate(args):
    if args.channel != "bdd":
        _fail("--channel", "simulation is wired for the binary doubly dirty MAC (bdd)")
    if not 0 < args.tau < 0.5:
        _fail("--tau", "must lie in (0, 0.5)")
    ns = _int_list(args.n, "--n")
    for n in ns:
        _positive(n, "--n")
    _positive(args.trials, "--trials")
    _positive(args.delta, "--delta")
    _positive(args.margin, "--margin", allow_zero=True)
    if args.sum_rate is not None and args.rate_fraction is not None:
        _fail("--sum-rate", "give either --sum-rate or --rate-fraction")
    tc = bdd_test_channel(args.tau)
    if args.sum_rate is not None:
        rate = _positive(args.sum_rate, "--sum-rate", allow_zero=True)
    else:
        frac = 0.6 if args.rate_fraction is None else args.rate_fraction
        rate = _positive(frac, "--rate-fraction", allow_zero=True) * binary_entropy(args.tau)
    rows = []
    for n in ns:
        k1, k2, l1, l2 = mac_code_params(tc, n, rate, args.margin)
        rep = simulate_mac(tc, n, k1, k2, l1, l2, args.delta, args.trials, seed=args.seed,
                           workers=args.workers, cap=args.cap)
        row = rep.csv_row()
        rows.append([row[c] for c in SIM_COLUMNS])
    _write_csv(rows, SIM_COLUMNS, args.out)
    return EXIT_OK


def group_entropy_table(g, p, points=201):
    """Rows (conditioning, I_s, H_s, I_c, I_s via the direct-sum route)."""
    const = JointPmf(["V", "S"], p.marginal(["V"])[:, None])
    out = []
    for label, q in (("S", p), ("none", const)):
        i_s = group_mi_source(q, g, "V", "S", points)
        h_s = float(np.log2(g.order) - i_s)
        if len(g.factors) == 1:
            i_c = group_mi_channel_zpr(q, g, "V", "S")
            check = group_mi_source_abelian(q, g, "V", "S", points)
        else:
            i_c = check = float("nan")
        out.append((label, i_s, h_s, i_c, check))
    return out


def cmd_group_entropy(args):
    try:
        g = parse_group(args.group)
    except ValueError as e:
        _fail("--group", str(e))
    if args.points < 2:
        _fail("--points", "grid resolution must be >= 2")
    try:
        with open(args.pmf) as fh:
            text = fh.read()
    except OSError as e:
        _fail("--pmf", str(e))
    p = read_group_pmf(text, g.order)
    rows = group_entropy_table(g, p, args.points)
    cols = ("conditioning", "I_s", "H_s", "I_c", "I_s_direct_sum")
    _write_csv([(r[0],) + tuple("n/a" if np.isnan(x) else _fmt(x) for x in r[1:]) for r in rows],
               cols, args.out)
    return EXIT_OK


def cmd_verify(args):
    from .verify import battery
    _positive(args.cap, "--cap")
    items = battery(cap=args.cap, negative_controls=args.negative_controls)
    width = max(len(it.name) for it in items)
    for it in items:
        extra = f"skipped: {it.skipped}" if it.skipped else f"{it.report.cases} cases"
        if it.report is not None and it.report.detail and not it.ok:
            extra += f" ({it.report.detail})"
        print(f"{it.status:<16} {it.name:<{width}}  {extra}")
    failed = [it for it in items if not it.ok]
    print(f"{len(items) - len(failed)}/{len(items)} checks as expected")
    return EXIT_VERIFY if failed else EXIT_OK


# ------------------------------------------------------------------ main

class _Parser(argparse.ArgumentParser):
    # argparse uses status 2 for usage errors, which is reserved for budgets here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="cosetmac", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("region", help="sum-rate curve of a coding family")
    r.add_argument("--channel", help="catalog name or channel config path")
    r.add_argument("--family", default="alpha", help="alpha, beta_f, rsf, rsg or closed_form")
    r.add_argument("--test-channel", help="evaluate a named test channel instead of searching")
    r.add_argument("--step", type=float, default=0.05, help="pmf grid resolution")
    r.add_argument("--tau", help="cost grid, start:stop:step or a comma list")
    r.add_argument("--aux", help="auxiliary alphabet sizes, e.g. 2,2")
    r.add_argument("--budget", type=int, default=SEARCH_BUDGET)
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--out")
    r.set_defaults(func=cmd_region)

    s = sub.add_parser("simulate", help="Monte Carlo run of the nested coset scheme")
    s.add_argument("--channel", default="bdd")
    s.add_argument("--tau", type=float, default=0.25)
    s.add_argument("--n", default="12,24,36", help="comma separated block lengths")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delta", type=float, default=2.0)
    s.add_argument("--rate-fraction", type=float, default=None, help="sum rate as a fraction of h_b(tau)")
    s.add_argument("--sum-rate", type=float, default=None, help="sum rate in bits per symbol")
    s.add_argument("--margin", type=float, default=0.05)
    s.add_argument("--cap", type=int, default=ENUM_CAP)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("group-entropy", help="group information quantities of a pmf")
    g.add_argument("--group", required=True, help="e.g. Z4 or Z2+Z4")
    g.add_argument("--pmf", required=True, help="file with rows 'v s prob'")
    g.add_argument("--points", type=int, default=201, help="weight grid for direct sums")
    g.add_argument("--out")
    g.set_defaults(func=cmd_group_entropy)

    v = sub.add_parser("verify", help="exhaustive and statistical check battery")
    v.add_argument("--negative-controls", action="store_true")
    v.add_argument("--cap", type=int, default=ENUM_CAP)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, CapExceeded) as e:
        print(f"error: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvalidConfig, ConfigError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
