"""Two-user state-dependent MACs: the built-in catalog and a plain-text
config format.

Config grammar (``#`` starts a comment, blank lines ignored)::

    [alphabets]
    S1 = 2
    S2 = 2
    X1 = 2
    X2 = 2
    Y = 2

    [state]            # s1 s2 = probability; missing pairs are 0
    0 0 = 0.25
    ...

    [kernel]           # s2 x2 s1 x1 = p(y=0) p(y=1) ...
    0000 = 0.92 0.08   # keys may be packed digits or space separated
    0001 = 0.08        # binary Y only: a single value is p(y=0)

    [cost1]            # x s = cost; missing entries are 0
    1 0 = 1
    [cost2]
    1 0 = 1

Every kernel row must be present.  Probabilities are parsed as exact
decimals and checked to sum to 1 (within 1e-12) before conversion to
floats.
"""

import itertools
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

import numpy as np

SIZE_KEYS = ("S1", "S2", "X1", "X2", "Y")
TOL = Decimal("1e-12")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    """Kernel is indexed [s1, s2, x1, x2, y]; costs are indexed [x, s]."""

    name: str
    state: np.ndarray
    kernel: np.ndarray
    cost1: np.ndarray
    cost2: np.ndarray

    def __post_init__(self):
        st = np.asarray(self.state, dtype=float)
        W = np.asarray(self.kernel, dtype=float)
        c1 = np.asarray(self.cost1, dtype=float)
        c2 = np.asarray(self.cost2, dtype=float)
        if st.ndim != 2 or W.ndim != 5 or W.shape[:2] != st.shape:
            raise ValueError("state pmf must be (S1, S2) and kernel (S1, S2, X1, X2, Y)")
        if np.any(st < 0) or abs(st.sum() - 1) > 1e-12:
            raise ValueError("state pmf must be a probability table")
        if np.any(W < 0) or np.max(np.abs(W.sum(axis=-1) - 1)) > 1e-12:
            raise ValueError("kernel rows must sum to 1")
        if c1.shape != (W.shape[2], W.shape[0]) or c2.shape != (W.shape[3], W.shape[1]):
            raise ValueError("cost tables must be (X_j, S_j)")
        if np.any(c1 < 0) or np.any(c2 < 0):
            raise ValueError("costs must be nonnegative")
        for name, arr in (("state", st), ("kernel", W), ("cost1", c1), ("cost2", c2)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def sizes(self):
        s1, s2, x1, x2, y = self.kernel.shape
        return dict(S1=s1, S2=s2, X1=x1, X2=x2, Y=y)

    @property
    def single_user(self):
        return self.kernel.shape[1] == 1 and self.kernel.shape[3] == 1

    def state_marginal(self, j):
        return self.state.sum(axis=1) if j == 1 else self.state.sum(axis=0)

    def cost(self, j):
        return self.cost1 if j == 1 else self.cost2


def _from_function(name, sizes, state, fn, cost1, cost2):
    s1, s2, x1, x2, y = sizes
    W = np.zeros(sizes)
    for a, b, c, d in itertools.product(range(s1), range(s2), range(x1), range(x2)):
        out = fn(a, b, c, d)
        if isinstance(out, (int, np.integer)):
            W[a, b, c, d, out] = 1.0
        else:
            W[a, b, c, d] = out
    return ChannelSpec(name, state, W, cost1, cost2)


def _hamming(nx, ns):
    return np.repeat((np.arange(nx) != 0).astype(float)[:, None], ns, axis=1)


def _uniform_states(n1, n2):
    return np.full((n1, n2), 1.0 / (n1 * n2))


def bdd():
    return _from_function("bdd", (2, 2, 2, 2, 2), _uniform_states(2, 2),
                          lambda s1, s2, x1, x2: x1 ^ s1 ^ x2 ^ s2,
                          _hamming(2, 2), _hamming(2, 2))


def example1():
    return _from_function("example1", (2, 2, 2, 2, 2), _uniform_states(2, 2),
                          lambda s1, s2, x1, x2: (x1 | s1) ^ (x2 | s2),
                          _hamming(2, 2), _hamming(2, 2))


# W(Y=0 | s2 x2 s1 x1), keyed by the four input and state bits in that order
EXAMPLE2_KERNEL = {
    "0000": 0.92, "0001": 0.08, "0010": 0.06, "0011": 0.94,
    "1000": 0.07, "1001": 0.92, "1010": 0.96, "1011": 0.10,
    "0100": 0.10, "0101": 0.92, "0110": 0.95, "0111": 0.06,
    "1100": 0.88, "1101": 0.08, "1110": 0.11, "1111": 0.91,
}


def example2():
    def row(s1, s2, x1, x2):
        p0 = EXAMPLE2_KERNEL[f"{s2}{x2}{s1}{x1}"]
        return [p0, 1.0 - p0]
    return _from_function("example2", (2, 2, 2, 2, 2), _uniform_states(2, 2), row,
                          _hamming(2, 2), _hamming(2, 2))


def example3():
    return _from_function("example3", (2, 2, 2, 2, 2), _uniform_states(2, 2),
                          lambda s1, s2, x1, x2: (s1 ^ x1) | (s2 ^ x2),
                          _hamming(2, 2), _hamming(2, 2))


def blackwell(p10=0.02, p01=0.04):
    def row(s1, s2, x1, x2):
        g = (s1 & (s1 ^ x1)) ^ (s2 & (s2 ^ x2))
        return [1 - p10, p10] if g == 0 else [p01, 1 - p01]
    return _from_function("blackwell", (2, 2, 2, 2, 2), _uniform_states(2, 2), row,
                          _hamming(2, 2), _hamming(2, 2))


def qdd():
    return _from_function("qdd", (4, 4, 4, 4, 4), _uniform_states(4, 4),
                          lambda s1, s2, x1, x2: (x1 + s1 + x2 + s2) % 4,
                          _hamming(4, 4), _hamming(4, 4))


def dirty_paper_ptp():
    """Binary point-to-point channel Y = X + S with uniform state."""
    return _from_function("dpc", (2, 1, 2, 1, 2), _uniform_states(2, 1),
                          lambda s1, s2, x1, x2: x1 ^ s1,
                          _hamming(2, 2), np.zeros((1, 1)))


CATALOG = {
    "bdd": bdd,
    "example1": example1,
    "example2": example2,
    "example5": example2,
    "example3": example3,
    "blackwell": blackwell,
    "qdd": qdd,
    "dpc": dirty_paper_ptp,
}


def channel_catalog(name):
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown channel {name!r}; known: {', '.join(sorted(CATALOG))}") from None


# ------------------------------------------------------------- config

def _dec(tok, where):
    try:
        d = Decimal(tok)
    except InvalidOperation:
        raise ConfigError(f"{where}: {tok!r} is not a decimal number") from None
    if not d.is_finite():
        raise ConfigError(f"{where}: {tok!r} is not finite")
    return d


def _key(text, arity, where):
    toks = text.split()
    if len(toks) == 1 and len(toks[0]) == arity and toks[0].isdigit():
        toks = list(toks[0])
    if len(toks) != arity:
        raise ConfigError(f"{where}: expected {arity} symbols in key {text!r}")
    try:
        return tuple(int(t) for t in toks)
    except ValueError:
        raise ConfigError(f"{where}: non-integer symbol in key {text!r}") from None


def parse_channel_config(text, name="config"):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: entry outside any section")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        sections[current].append((lineno, k.strip(), v.strip()))

    for sec in ("alphabets", "state", "kernel"):
        if sec not in sections:
            raise ConfigError(f"missing section [{sec}]")
    unknown = set(sections) - {"alphabets", "state", "kernel", "cost1", "cost2"}
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")

    sizes = {}
    for lineno, k, v in sections["alphabets"]:
        if k not in SIZE_KEYS:
            raise ConfigError(f"line {lineno}: unknown alphabet {k!r}")
        try:
            sizes[k] = int(v)
        except ValueError:
            raise ConfigError(f"line {lineno}: alphabet size {v!r} is not an integer") from None
        if sizes[k] < 1:
            raise ConfigError(f"line {lineno}: alphabet {k} must be nonempty")
    missing = [k for k in SIZE_KEYS if k not in sizes]
    if missing:
        raise ConfigError(f"[alphabets] missing {missing}")
    s1, s2, x1, x2, y = (sizes[k] for k in SIZE_KEYS)

    def in_range(key, bounds, lineno, sec):
        if any(not 0 <= a < b for a, b in zip(key, bounds)):
            raise ConfigError(f"line {lineno}: [{sec}] key {key} out of range")

    state = {}
    for lineno, k, v in sections["state"]:
        key = _key(k, 2, f"line {lineno}")
        in_range(key, (s1, s2), lineno, "state")
        if key in state:
            raise ConfigError(f"line {lineno}: duplicate state entry {key}")
        state[key] = _dec(v, f"line {lineno}")
        if state[key] < 0:
            raise ConfigError(f"line {lineno}: negative state probability")
    if abs(sum(state.values(), Decimal(0)) - 1) > TOL:
        raise ConfigError(f"[state] probabilities sum to {sum(state.values(), Decimal(0))}, not 1")

    rows = {}
    for lineno, k, v in sections["kernel"]:
        key = _key(k, 4, f"line {lineno}")
        in_range(key, (s2, x2, s1, x1), lineno, "kernel")
        if key in rows:
            raise ConfigError(f"line {lineno}: duplicate kernel row {key}")
        vals = [_dec(t, f"line {lineno}") for t in v.split()]
        if len(vals) == 1 and y == 2:
            vals.append(Decimal(1) - vals[0])
        if len(vals) != y:
            raise ConfigError(f"line {lineno}: kernel row needs {y} probabilities")
        if any(p < 0 for p in vals):
            raise ConfigError(f"line {lineno}: negative kernel probability")
        if abs(sum(vals, Decimal(0)) - 1) > TOL:
            raise ConfigError(f"line {lineno}: kernel row sums to {sum(vals, Decimal(0))}, not 1")
        rows[key] = vals
    W = np.zeros((s1, s2, x1, x2, y))
    for key in itertools.product(range(s2), range(x2), range(s1), range(x1)):
        if key not in rows:
            raise ConfigError(f"[kernel] missing row s2 x2 s1 x1 = {''.join(map(str, key))}")
        b, d, a, c = key
        W[a, b, c, d] = [float(p) for p in rows[key]]

    costs = []
    for sec, nx, ns in (("cost1", x1, s1), ("cost2", x2, s2)):
        c = np.zeros((nx, ns))
        for lineno, k, v in sections.get(sec, []):
            key = _key(k, 2, f"line {lineno}")
            in_range(key, (nx, ns), lineno, sec)
            val = _dec(v, f"line {lineno}")
            if val < 0:
                raise ConfigError(f"line {lineno}: negative cost")
            c[key] = float(val)
        costs.append(c)

    st = np.zeros((s1, s2))
    for key, p in state.items():
        st[key] = float(p)
    return ChannelSpec(name, st, W, costs[0], costs[1])


def load_channel(path_or_name):
    if path_or_name in CATALOG:
        return channel_catalog(path_or_name)
    try:
        with open(path_or_name) as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"channel {path_or_name!r} is neither a catalog name nor a file") from None
    return parse_channel_config(text, name=str(path_or_name))


def format_channel_config(ch):
    """Inverse of parse_channel_config (floats printed with repr)."""
    s1, s2, x1, x2, y = ch.kernel.shape
    out = ["[alphabets]"]
    out += [f"{k} = {v}" for k, v in ch.sizes.items()]
    out.append("[state]")
    for a, b in itertools.product(range(s1), range(s2)):
        out.append(f"{a} {b} = {float(ch.state[a, b])!r}")
    out.append("[kernel]")
    for b, d, a, c in itertools.product(range(s2), range(x2), range(s1), range(x1)):
        vals = " ".join(repr(float(p)) for p in ch.kernel[a, b, c, d])
        out.append(f"{b} {d} {a} {c} = {vals}")
    for j, cost in ((1, ch.cost1), (2, ch.cost2)):
        out.append(f"[cost{j}]")
        for x, s in itertools.product(*map(range, cost.shape)):
            out.append(f"{x} {s} = {float(cost[x, s])!r}")
    return "\n".join(out) + "\n"
