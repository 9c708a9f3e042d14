import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgcache import scheme
from pgcache.errors import InvalidParameters
from pgcache.projective import gaussian_binomial


def printed_match(value, text, tol=None):
    """Does ``value`` agree with a printed table cell (rounded or truncated)?"""
    if text == "inf":
        return scheme.pow10_exponent(value) > 308 if not isinstance(value, float) else value > 1.7e308
    if text.startswith("10^"):
        n = int(text[3:])
        exp = scheme.pow10_exponent(value) if not isinstance(value, float) else scheme.pow10_exponent(value, math.log10(value))
        return exp == n
    decimals = len(text.split(".")[1]) if "." in text else 0
    v, printed = float(value), float(text)
    if tol is not None:
        return abs(v - printed) <= tol
    scale = 10**decimals
    return round(v, decimals) == printed or math.floor(v * scale + 1e-9) / scale == printed


def test_params_2411():
    p = scheme.scheme_params(2, 4, 1, 1)
    assert (p.K, p.F, p.gain, p.rate) == (105, 105, 6, 8)
    assert p.uncached_fraction == Fraction(48, 105)
    assert f"{float(p.uncached_fraction):.2f}" == "0.46"
    assert (p.D, p.c, p.S, p.Z) == (48, 48, 840, 57)


def test_params_2511():
    p = scheme.scheme_params(2, 5, 1, 1)
    assert (p.K, p.F, p.gain) == (465, 465, 6)
    assert p.uncached_fraction == Fraction(336, 465)
    assert f"{float(p.uncached_fraction):.2f}" == "0.72"


def test_params_2621_closed_forms():
    p = scheme.scheme_params(2, 6, 2, 1)
    assert p.K == 1 * gaussian_binomial(6, 1, 2) * gaussian_binomial(5, 1, 2) == 1953
    assert p.gain == 10


def test_invalid_parameters():
    for args in [(2, 4, 1, 2), (2, 5, 0, 1), (6, 5, 1, 1), (2, 5, 1, 0), (2, 5.0, 1, 1), (True, 5, 1, 1)]:
        with pytest.raises(InvalidParameters):
            scheme.scheme_params(*args)


def test_d2d_values():
    a = scheme.d2d_params(2, 4, 1, 1)
    assert (a.K_D, a.F_D, a.rate_D) == (105, 525, Fraction(48, 5))
    assert a.uncached_fraction_D == Fraction(48, 105)
    b = scheme.d2d_params(2, 5, 1, 1)
    assert (b.F_D, b.rate_D) == (2325, Fraction(336, 5))


def test_baselines():
    man = scheme.baseline_params("MaN", K=4, memory_ratio=Fraction(1, 2))
    assert (man.F, man.rate) == (6, Fraction(2, 3))
    y = scheme.baseline_params("YCTCPDA", q_prime=2, m_prime=51)
    assert (y.K, y.uncached, y.gain, scheme.pow10_exponent(y.F)) == (104, Fraction(1, 2), 52, 15)
    h = scheme.baseline_params("hypercube-d2d", K=105)
    assert math.isclose(h.rate, 10.2469, rel_tol=1e-4)
    h16 = scheme.baseline_params("HypercubeD2D", K=16)
    assert (h16.F, h16.rate, h16.uncached) == (256, 4, Fraction(3, 4))
    d = scheme.baseline_params("MaND2D", K=105, memory_ratio=Fraction(19, 35))
    assert d.args["y2"] == 57 and d.F == 57 * math.comb(105, 57)
    assert d.rate == Fraction(35, 19) - 1


def test_baseline_errors():
    with pytest.raises(InvalidParameters):
        scheme.baseline_params("MaN", K=5, memory_ratio=Fraction(1, 2))
    with pytest.raises(InvalidParameters):
        scheme.baseline_params("nope", K=5)
    with pytest.raises(InvalidParameters):
        scheme.baseline_params("MaN", K=5)
    with pytest.raises(InvalidParameters):
        scheme.baseline_params("YCTCPDA", q_prime=1, m_prime=3)
    with pytest.raises(InvalidParameters):
        scheme.baseline_params("MaND2D", K=5, memory_ratio=0)


def test_pow10_exponent():
    assert scheme.pow10_exponent(9921240) == 7
    assert scheme.pow10_exponent(94) == 1
    assert scheme.pow10_exponent(95) == 2
    assert scheme.pow10_exponent(949) == 2
    assert scheme.pow10_exponent(950) == 3
    assert scheme.pow10_exponent(2251799813685248) == 15
    assert scheme.pow10_exponent(9.6e9, math.log10(9.6e9)) == 10


def test_table1_reproduction():
    rows = scheme.table_rows(1)
    assert len(rows) == 5
    for r in rows:
        q = r["quoted"]
        ours, yct = r["ours"], r["yctcpda"]
        assert ours.K == q["K"][0] and yct.K == q["K"][2]
        assert printed_match(ours.uncached, q["U"][0])
        assert printed_match(yct.uncached, q["U"][2])
        assert printed_match(ours.F, q["F"][0])
        assert printed_match(yct.F, q["F"][2])
        assert str(ours.gain) == q["gain"][0]
        assert printed_match(yct.gain, q["gain"][2])
        # fixture columns are passed through untouched
        assert r["prior_linegraph"]["K"] == q["K"][1]


def test_table2_reproduction():
    rows = scheme.table_rows(2)
    assert len(rows) == 6
    for r in rows:
        q = r["quoted"]
        ours, hyp, mand = r["ours"], r["hypercube"], r["man_d2d"]
        assert ours.K == hyp.K == mand.K == q["K"][0]
        assert printed_match(ours.uncached, q["U"][0])
        assert printed_match(hyp.uncached, q["U"][1])
        assert printed_match(mand.uncached, q["U"][2])
        assert printed_match(ours.F, q["F"][0])
        assert printed_match(hyp.F, q["F"][1])
        assert printed_match(mand.F, q["F"][2])
        assert printed_match(ours.rate, q["R"][0])
        assert printed_match(hyp.rate, q["R"][1])
        assert printed_match(mand.rate, q["R"][2], tol=0.03)


def test_table_unknown():
    with pytest.raises(InvalidParameters):
        scheme.table_rows(3)


def test_bound_report_2411():
    b = scheme.bound_report(2, 4, 1, 1)
    assert b.alpha == 2 and b.cache_fraction == Fraction(57, 105) and b.cache_bound == 1
    assert b.ok


@pytest.mark.parametrize("k", range(4, 13))
def test_bounds_grid(k):
    b = scheme.bound_report(2, k, k - 3, 1)
    assert b.ok, b.to_dict()
    assert 1 <= b.rate_ratio <= 8


def test_bound_envelope_2_10_7_1_exact_sides():
    b = scheme.bound_report(2, 10, 7, 1)
    assert b.envelope_ok and b.log_q_F < b.log_q_F_envelope


def test_select_parameters():
    p = scheme.select_parameters(100, Fraction(1, 2), qs=(2, 3), k_max=6)
    assert p.K >= 100 and p.cache_fraction <= Fraction(1, 2)
    for q, k, m, t in scheme.iter_parameter_grid((2, 3), 6):
        o = scheme.scheme_params(q, k, m, t)
        if o.K >= 100 and o.cache_fraction <= Fraction(1, 2):
            assert (o.K - 100, Fraction(1, 2) - o.cache_fraction) >= (p.K - 100, Fraction(1, 2) - p.cache_fraction)
    assert scheme.select_parameters(10**12, Fraction(1, 2), qs=(2,), k_max=5) is None


valid = st.tuples(st.sampled_from([2, 3, 4, 5, 7, 8, 9]), st.integers(4, 11), st.integers(1, 6), st.integers(1, 6)).filter(
    lambda p: p[2] + p[3] + 2 <= p[1]
)


@given(valid)
@settings(max_examples=200, deadline=None)
def test_scheme_identities(p):
    q, k, m, t = p
    s = scheme.scheme_params(q, k, m, t)
    assert s.gain == math.comb(m + 3, 2)
    assert s.rate == Fraction(s.c, s.gain)
    assert s.cache_fraction == 1 - Fraction(s.c, s.K)
    assert Fraction(s.K) * (1 - s.cache_fraction) / s.rate == s.gain
    assert s.K * s.D == s.F * s.c == s.S * s.gain
    assert Fraction(s.Z, s.F) == s.cache_fraction
    d = scheme.d2d_params(q, k, m, t)
    g = s.gain
    assert d.F_D == (g - 1) * s.F
    assert d.rate_D == Fraction(g, g - 1) * Fraction(s.S, s.F)
    b = scheme.bound_report(q, k, m, t)
    assert b.cache_ok


def test_to_dict_serialises():
    import json

    json.dumps(scheme.scheme_params(3, 6, 2, 1).to_dict())
    json.dumps(scheme.d2d_params(3, 6, 2, 1).to_dict())
    json.dumps(scheme.bound_report(3, 6, 2, 1).to_dict())
    for r in scheme.table_rows(2):
        json.dumps(r["man_d2d"].to_dict())
