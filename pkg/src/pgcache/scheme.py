"""Closed-form parameters of the projective-geometry caching scheme.

Everything here is exact (ints and ``Fraction``); only the log-domain bound
checks go through ``mpmath`` at high precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from math import comb, factorial

import mpmath

from .errors import InvalidParameters
from .gf import make_field
from .projective import gaussian_binomial


def _gb1(n, q):
    return gaussian_binomial(n, 1, q)


def check_parameters(q, k, m, t):
    for name, v in (("q", q), ("k", k), ("m", m), ("t", t)):
        if not isinstance(v, int) or isinstance(v, bool):
            raise InvalidParameters(f"{name} must be an integer, got {v!r}")
    try:
        make_field(q)
    except Exception as exc:
        raise InvalidParameters(str(exc)) from exc
    if m < 1 or t < 1:
        raise InvalidParameters(f"m and t must be >= 1 (got m={m}, t={t})")
    if m + t + 2 > k:
        raise InvalidParameters(f"need m + t + 2 <= k (got {m}+{t}+2 = {m + t + 2} > {k})")


def _as_int(x, what):
    x = Fraction(x)
    if x.denominator != 1:
        raise AssertionError(f"{what} = {x} is not an integer")
    return x.numerator


def num_users(q, k, t):
    return _as_int(Fraction(q, 2) * _gb1(k - t + 1, q) * _gb1(k - t, q), "K")


def subpacketization(q, k, m, t):
    num = gaussian_binomial(k - t + 1, m + 1, q)
    for i in range(m + 1):
        num *= q ** (m + 1) - q**i
    return _as_int(Fraction(num, factorial(m + 1) * (q - 1) ** (m + 1)), "F")


def user_clique_size(q, k, m, t):
    """|C_X|: subfiles a user does not cache (D)."""
    prod = 1
    for i in range(1, m + 2):
        prod *= _gb1(k - t - i, q)
    return _as_int(Fraction(q ** ((m + 1) * (m + 4) // 2) * prod, factorial(m + 1)), "|C_X|")


def subfile_clique_size(q, k, m, t):
    """|C_Y|: users not caching a given subfile (c)."""
    return _as_int(Fraction(q ** (2 * m + 3), 2) * _gb1(k - m - t, q) * _gb1(k - m - t - 1, q), "|C_Y|")


def transmission_clique_size(m):
    return comb(m + 3, 2)


def _frac_str(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _jsonable(d):
    out = {}
    for key, v in d.items():
        if isinstance(v, Fraction):
            out[key] = _frac_str(v)
            out[key + "_float"] = float(v)
        else:
            out[key] = v
    return out


@dataclass(frozen=True)
class SchemeParams:
    q: int
    k: int
    m: int
    t: int
    K: int
    F: int
    D: int
    c: int
    gain: int
    S: int
    Z: int
    cache_fraction: Fraction
    uncached_fraction: Fraction
    rate: Fraction

    def to_dict(self):
        d = _jsonable(asdict(self))
        d["F_log10"] = math.log10(self.F)
        return d


@dataclass(frozen=True)
class D2DParams:
    q: int
    k: int
    m: int
    t: int
    K_D: int
    F_D: int
    g: int
    cache_fraction_D: Fraction
    uncached_fraction_D: Fraction
    rate_D: Fraction

    def to_dict(self):
        return _jsonable(asdict(self))


def scheme_params(q, k, m, t):
    """Broadcast-scheme parameters from the closed forms (no enumeration)."""
    check_parameters(q, k, m, t)
    K = num_users(q, k, t)
    F = subpacketization(q, k, m, t)
    D = user_clique_size(q, k, m, t)
    c = subfile_clique_size(q, k, m, t)
    d = transmission_clique_size(m)
    a1, a2 = _gb1(k - m - t, q), _gb1(k - m - t - 1, q)
    b1, b2 = _gb1(k - t + 1, q), _gb1(k - t, q)
    cache = 1 - Fraction(q ** (2 * (m + 1)) * a1 * a2, b1 * b2)
    rate = Fraction(q ** (2 * m + 3), (m + 2) * (m + 3)) * a1 * a2
    # the direct closed forms must agree with the clique-size route
    if cache != 1 - Fraction(c, K) or rate != Fraction(c, d) or K * D != F * c:
        raise AssertionError(f"inconsistent closed forms for {(q, k, m, t)}")
    S = _as_int(Fraction(K * D, d), "S")
    return SchemeParams(
        q=q, k=k, m=m, t=t, K=K, F=F, D=D, c=c, gain=d, S=S, Z=F - D,
        cache_fraction=cache, uncached_fraction=1 - cache, rate=rate,
    )


def d2d_params(q, k, m, t):
    """D2D adaptation: F_D = (g-1) F, R_D = g/(g-1) * S/F with g = C(m+3, 2)."""
    p = scheme_params(q, k, m, t)
    g = p.gain
    F_D = (m + 1) * (m + 4) // 2 * p.F
    rate_D = Fraction(q ** (2 * m + 3), (m + 1) * (m + 4)) * _gb1(k - m - t, q) * _gb1(k - m - t - 1, q)
    if F_D != (g - 1) * p.F or rate_D != Fraction(g, g - 1) * Fraction(p.S, p.F):
        raise AssertionError(f"inconsistent D2D forms for {(q, k, m, t)}")
    return D2DParams(
        q=q, k=k, m=m, t=t, K_D=p.K, F_D=F_D, g=g,
        cache_fraction_D=p.cache_fraction, uncached_fraction_D=p.uncached_fraction, rate_D=rate_D,
    )


# ---------------------------------------------------------------------------
# Baselines


@dataclass
class ComparisonRow:
    """One scheme's column values. ``F`` is exact when the inputs allow it."""

    scheme: str
    K: int
    uncached: object
    F: object
    F_log10: float
    gain: object = None
    rate: object = None
    args: dict = field(default_factory=dict)

    @property
    def F_pow10(self):
        """Exponent of F after rounding it to one significant figure."""
        return pow10_exponent(self.F, self.F_log10)

    def to_dict(self):
        d = {"scheme": self.scheme, "K": self.K}
        for name in ("uncached", "F", "gain", "rate"):
            v = getattr(self, name)
            if isinstance(v, Fraction):
                d[name] = _frac_str(v)
                d[name + "_float"] = float(v)
            elif isinstance(v, int) and v.bit_length() > 60:
                d[name] = str(v)
            else:
                d[name] = v
        d["F_log10"] = self.F_log10
        d["F_pow10"] = self.F_pow10
        d["args"] = {a: (_frac_str(v) if isinstance(v, Fraction) else v) for a, v in self.args.items()}
        return d


def pow10_exponent(value, log10_value=None):
    """Exponent n of ``value`` written as a x 10^n with a rounded to one digit.

    9.92e6 -> 7 and 6.9e69 -> 69. Exact for integers; floats use ``log10_value``.
    """
    if isinstance(value, int) and not isinstance(value, bool):
        n = len(str(value)) - 1
        return n + 1 if 2 * value >= 19 * 10**n else n
    lg = log10_value if log10_value is not None else math.log10(value)
    n = math.floor(lg)
    return n + 1 if lg - n >= math.log10(9.5) else n


def _log10(x):
    if isinstance(x, Fraction):
        return math.log10(x.numerator) - math.log10(x.denominator)
    return math.log10(x)


def _pos_int(v, name):
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise InvalidParameters(f"{name} must be a positive integer, got {v!r}")


def _fraction_in_unit(v, name):
    try:
        v = Fraction(v)
    except (TypeError, ValueError) as exc:
        raise InvalidParameters(f"{name} must be a rational number") from exc
    if not 0 <= v <= 1:
        raise InvalidParameters(f"{name} must lie in [0, 1], got {v}")
    return v


def yctcpda_row(q_prime, m_prime):
    """PDA family with K = q'(m'+1), 1 - M/N = 1 - 1/q', F = q'^m'."""
    _pos_int(m_prime, "m'")
    if not isinstance(q_prime, int) or q_prime < 2:
        raise InvalidParameters(f"q' must be an integer >= 2, got {q_prime!r}")
    K = q_prime * (m_prime + 1)
    U = 1 - Fraction(1, q_prime)
    F = q_prime**m_prime
    gain = K * U / (q_prime - 1)
    return ComparisonRow("YCTCPDA", K, U, F, m_prime * math.log10(q_prime), gain=gain,
                         rate=K * U / gain, args={"q_prime": q_prime, "m_prime": m_prime})


def man_row(K, memory_ratio):
    """Uncoded-placement broadcast scheme: F = C(K, KM/N)."""
    _pos_int(K, "K")
    mr = _fraction_in_unit(memory_ratio, "M/N")
    tt = K * mr
    if tt.denominator != 1:
        raise InvalidParameters(f"K*M/N = {tt} must be an integer")
    tt = int(tt)
    F = comb(K, tt)
    return ComparisonRow("MaN", K, 1 - mr, F, _log10(F), gain=1 + tt,
                         rate=Fraction(K) * (1 - mr) / (1 + tt), args={"K": K, "M/N": mr})


def hypercube_d2d_row(K, y1=None):
    """D2D scheme with y1 = sqrt(K): 1 - M/N = 1 - 1/y1, F = y1^y1, R = y1.

    ``y1`` defaults to sqrt(K) (exact when K is a perfect square, float otherwise).
    """
    _pos_int(K, "K")
    if y1 is None:
        r = math.isqrt(K)
        y1 = r if r * r == K else math.sqrt(K)
    if y1 <= 1:
        raise InvalidParameters(f"y1 must exceed 1, got {y1}")
    if isinstance(y1, int):
        U = 1 - Fraction(1, y1)
        F = y1**y1
    else:
        U = 1 - 1 / y1
        try:
            F = y1**y1
        except OverflowError:
            F = math.inf
    return ComparisonRow("HypercubeD2D", K, U, F, y1 * math.log10(y1), rate=y1, args={"K": K, "y1": y1})


def man_d2d_row(K, memory_ratio):
    """Serverless MaN-style scheme: y2 = floor(MK/N), F = y2 C(K, y2), R = N/M - 1."""
    _pos_int(K, "K")
    mr = _fraction_in_unit(memory_ratio, "M/N")
    if mr == 0:
        raise InvalidParameters("M/N must be positive")
    y2 = math.floor(K * mr)
    F = y2 * comb(K, y2)
    if F == 0:
        raise InvalidParameters(f"floor(K M/N) = {y2} gives empty subpacketization")
    return ComparisonRow("MaND2D", K, 1 - mr, F, _log10(F), rate=1 / mr - 1,
                         args={"K": K, "M/N": mr, "y2": y2})


_BASELINES = {
    "yctcpda": yctcpda_row,
    "man": man_row,
    "hypercubed2d": hypercube_d2d_row,
    "mand2d": man_d2d_row,
}


def baseline_params(kind, **args):
    try:
        fn = _BASELINES[kind.lower().replace("-", "").replace("_", "")]
    except KeyError:
        raise InvalidParameters(f"unknown baseline {kind!r}; choose from YCTCPDA, MaN, HypercubeD2D, MaND2D") from None
    try:
        return fn(**args)
    except TypeError as exc:
        raise InvalidParameters(str(exc)) from exc


def ours_row(q, k, m, t, d2d=False):
    if d2d:
        p = d2d_params(q, k, m, t)
        return ComparisonRow("ours-D2D", p.K_D, p.uncached_fraction_D, p.F_D, math.log10(p.F_D),
                             rate=p.rate_D, args={"q": q, "k": k, "m": m, "t": t})
    p = scheme_params(q, k, m, t)
    return ComparisonRow("ours", p.K, p.uncached_fraction, p.F, math.log10(p.F), gain=p.gain,
                         rate=p.rate, args={"q": q, "k": k, "m": m, "t": t})


# ---------------------------------------------------------------------------
# Bounds


@dataclass
class BoundReport:
    q: int
    k: int
    m: int
    t: int
    alpha: int
    cache_fraction: Fraction
    cache_bound: Fraction
    cache_ok: bool
    log_q_2K: float
    eq4_lower_ok: bool
    eq4_upper_ok: bool
    eq5_lower_ok: bool
    eq5_upper_ok: bool
    log_q_F: float
    log_q_F_envelope: float
    envelope_ok: bool
    rate_ratio: float
    rate_lower: float
    rate_upper: float
    rate_sandwich_ok: bool

    @property
    def ok(self):
        return all((self.cache_ok, self.eq4_lower_ok, self.eq4_upper_ok, self.eq5_lower_ok,
                    self.eq5_upper_ok, self.envelope_ok, self.rate_sandwich_ok))

    def to_dict(self):
        d = _jsonable(asdict(self))
        d["ok"] = self.ok
        return d


def _floor_half_log(q, two_k):
    # largest j with q^(2j) <= 2K
    j = 0
    while q ** (2 * (j + 1)) <= two_k:
        j += 1
    return j


def bound_report(q, k, m, t, dps=60):
    """Check the cache-fraction bound and the K/F/R sandwiches for one instance.

    Inequalities in log_q(2K) are decided exactly by exponentiating both sides;
    the subpacketization envelope and rate sandwich are compared in the log
    domain at ``dps`` decimal digits.
    """
    p = scheme_params(q, k, m, t)
    alpha = k - m - t
    two_k = 2 * p.K
    kt = k - t
    cache_bound = Fraction(2, q ** (alpha - 1))
    # log_q 2K in [2(k-t), 2(k-t+1)]
    eq4_upper = q ** (2 * kt) <= two_k
    eq4_lower = two_k <= q ** (2 * (kt + 1))
    # (L/2 - 1)^2 <= (k-t)^2  <=>  -(k-t) <= L/2 - 1 <= k-t
    eq5_lower = eq4_lower and Fraction(two_k) >= Fraction(q) ** (2 * (1 - kt))
    eq5_upper = eq4_upper
    with mpmath.workdps(dps):
        L = mpmath.log(two_k, q)
        n = _floor_half_log(q, two_k) - alpha
        log_f = mpmath.log(p.F, q)
        env = L + L**2 / 4 - alpha * L / 2 - alpha - 1 - (mpmath.log(mpmath.factorial(n), q) if n > 0 else 0)
        envelope_ok = n >= 0 and log_f <= env
        rate = mpmath.mpf(p.rate.numerator) / p.rate.denominator
        u = mpmath.mpf(p.uncached_fraction.numerator) / p.uncached_fraction.denominator
        lo = 2 * p.K * u / (L**2 / 4 + (5 - 2 * alpha) * L / 2 + alpha**2 - 5 * alpha + 6)
        hi_den = L**2 / 4 + (3 - 2 * alpha) * L / 2 + alpha**2 - 3 * alpha + 2
        hi = 2 * p.K * u / hi_den if hi_den > 0 else mpmath.inf
        ratio = rate * L**2 / p.K
        return BoundReport(
            q=q, k=k, m=m, t=t, alpha=alpha,
            cache_fraction=p.cache_fraction, cache_bound=cache_bound,
            cache_ok=p.cache_fraction <= cache_bound,
            log_q_2K=float(L),
            eq4_lower_ok=eq4_lower, eq4_upper_ok=eq4_upper,
            eq5_lower_ok=eq5_lower, eq5_upper_ok=eq5_upper,
            log_q_F=float(log_f), log_q_F_envelope=float(env), envelope_ok=bool(envelope_ok),
            rate_ratio=float(ratio), rate_lower=float(lo), rate_upper=float(hi),
            rate_sandwich_ok=bool(lo <= rate <= hi),
        )


def gaussian_sandwich(a, b, q):
    """q^((a-b)b) <= [a choose b]_q <= q^((a-b+1)b)."""
    v = gaussian_binomial(a, b, q)
    return q ** ((a - b) * b) <= v <= q ** ((a - b + 1) * b)


# ---------------------------------------------------------------------------
# Parameter discovery and tables


def iter_parameter_grid(qs=(2, 3, 4, 5, 7, 8, 9), k_max=12):
    for q in qs:
        for k in range(4, k_max + 1):
            for t in range(1, k - 2):
                for m in range(1, k - t - 1):
                    yield q, k, m, t


def select_parameters(target_users, target_memory, qs=(2, 3, 4, 5, 7, 8, 9), k_max=12):
    """Smallest (K - K', M'/N' - M/N), both >= 0, over a bounded (q,k,m,t) box.

    Returns the ``SchemeParams`` of the lexicographically best candidate or
    None when no instance satisfies both constraints.
    """
    target_memory = Fraction(target_memory)
    best = None
    for q, k, m, t in iter_parameter_grid(qs, k_max):
        p = scheme_params(q, k, m, t)
        du, dm = p.K - target_users, target_memory - p.cache_fraction
        if du < 0 or dm < 0:
            continue
        cand = (du, dm, p.F, (q, k, m, t))
        if best is None or cand < best[0]:
            best = (cand, p)
    return None if best is None else best[1]


def load_table_fixture():
    text = resources.files("pgcache").joinpath("data/tables.json").read_text()
    return json.loads(text)


def table_rows(which):
    """Rows of comparison table ``which`` (1: broadcast, 2: D2D).

    Each row holds our formula-derived columns, the formula-derived baseline
    columns and the quoted values for schemes that are ingested from fixture.
    """
    fx = load_table_fixture()
    rows = []
    if which == 1:
        for r in fx["table1"]:
            q, k, m, t = r["ours"]
            ours = ours_row(q, k, m, t)
            yct = yctcpda_row(*r["yctcpda"])
            rows.append({"ours": ours, "prior_linegraph": r["prior_linegraph"], "yctcpda": yct, "quoted": r["quoted"]})
    elif which == 2:
        for r in fx["table2"]:
            q, k, m, t = r["ours"]
            ours = ours_row(q, k, m, t, d2d=True)
            p = scheme_params(q, k, m, t)
            hyp = hypercube_d2d_row(p.K)
            mand = man_d2d_row(p.K, p.cache_fraction)
            rows.append({"ours": ours, "hypercube": hyp, "man_d2d": mand, "quoted": r["quoted"]})
    else:
        raise InvalidParameters(f"unknown table {which!r}; choose 1 or 2")
    return rows
