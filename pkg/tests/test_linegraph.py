import itertools
import json

import numpy as np
import pytest

from pgcache import gf, linegraph as lg, scheme
from pgcache.errors import InstanceTooLarge, InternalInconsistency, InvalidInput, InvalidParameters, UnknownVertex


def test_geometry_2411_sizes(instance_2411):
    ctx, L, cover, _ = instance_2411
    assert (len(ctx.X_set), len(ctx.Y_set), len(ctx.Z_set)) == (105, 105, 840)
    assert ctx.W.dim == 0 and len(ctx.V) == 15


def test_invalid_parameters():
    with pytest.raises(InvalidParameters):
        lg.build_geometry(2, 4, 1, 2)
    with pytest.raises(InvalidParameters):
        lg.build_geometry(2, 5, 0, 1)
    with pytest.raises(InvalidParameters):
        lg.build_geometry(6, 5, 1, 1)


def test_instance_cap(monkeypatch):
    with pytest.raises(InstanceTooLarge):
        lg.build_geometry(2, 5, 1, 1, max_vertices=1000)
    monkeypatch.setenv("PGCACHE_MAX_VERTICES", "100")
    with pytest.raises(InstanceTooLarge):
        lg.build_geometry(2, 4, 1, 1)


def test_family_members_contain_anchor():
    ctx = lg.build_geometry(2, 5, 1, 2)
    assert ctx.W.dim == 1
    for v in ctx.V:
        assert v.dim == 2 and gf.is_subspace_of(ctx.W, v)
    for fam, dim in ((ctx.X_set, 3), (ctx.Y_set, 3), (ctx.Z_set[:200], 5)):
        for members in fam[:200]:
            assert ctx.span_of(members).dim == dim


def test_line_graph_2411(instance_2411):
    ctx, L, cover, _ = instance_2411
    assert (L.K, L.F, L.D, L.c, L.num_vertices) == (105, 105, 48, 48, 5040)
    rep = lg.verify_caching_line_graph(L)
    assert rep.ok, rep.failed


def test_vertex_rule_against_direct_rank(instance_2411):
    ctx, L, _, _ = instance_2411
    rng = np.random.default_rng(0)
    for _ in range(200):
        u, f = int(rng.integers(L.K)), int(rng.integers(L.F))
        dim = ctx.span_of(L.users[u] + L.subfiles[f]).dim
        assert L.incidence[u, f] == (dim == ctx.m + ctx.t + 2)


@pytest.mark.parametrize("params", [(2, 5, 1, 1), (2, 5, 1, 2), (3, 4, 1, 1), (2, 6, 1, 2)])
def test_closed_forms_match_construction(params):
    ctx = lg.build_geometry(*params)
    L = lg.build_line_graph(ctx)
    rep = lg.verify_caching_line_graph(L)
    assert rep.ok, rep.failed
    sp = scheme.scheme_params(*params)
    assert (L.K, L.F, L.D, L.c) == (sp.K, sp.F, sp.D, sp.c)
    assert L.K * L.D == L.F * L.c
    cover = lg.transmission_cover(ctx, L)
    assert len(cover) == sp.S and cover.sizes == {sp.gain}


def test_example_graph_properties(example):
    L, cover = example
    rep = lg.verify_caching_line_graph(L)
    assert rep.ok
    assert (L.K, L.F, L.D, L.c) == (4, 4, 2, 2)
    lg.check_cover(L, cover)


def test_deleting_a_vertex_breaks_p1_p2(instance_2411):
    _, L, _, _ = instance_2411
    L2 = L.without_vertex(L.vertices()[17])
    rep = lg.verify_caching_line_graph(L2)
    assert not rep.checks["P1_user_cliques_equal"]
    assert not rep.checks["P2_subfile_cliques_equal"]
    assert not rep.ok


def test_edge_predicate_example(example):
    L, _ = example
    v = {("u", u, f): (u - 1, int(f[1]) - 1) for u in range(1, 5) for f in ("f1", "f2", "f3", "f4")}
    a, b = v[("u", 1, "f2")], v[("u", 2, "f3")]
    assert lg.is_edge_complement_square(L, a, b)
    assert not lg.is_edge_complement_square(L, a, a)
    assert not lg.is_edge_complement_square(L, v[("u", 1, "f1")], v[("u", 1, "f2")])
    with pytest.raises(UnknownVertex):
        lg.is_edge_complement_square(L, a, v[("u", 1, "f3")])


def test_cover_2411(instance_2411):
    ctx, L, cover, _ = instance_2411
    assert len(cover) == 840 and cover.sizes == {6}
    flat = [v for c in cover.cliques for v in c]
    assert len(flat) == len(set(flat)) == 5040
    rng = np.random.default_rng(1)
    for s in rng.choice(len(cover), 40, replace=False):
        for a, b in itertools.combinations(cover.cliques[s], 2):
            assert lg.is_edge_complement_square(L, a, b)


def test_cross_clique_pairs_in_one_user_clique_fail(instance_2411):
    _, L, cover, _ = instance_2411
    owner = {v: s for s, c in enumerate(cover.cliques) for v in c}
    for u in range(0, L.K, 7):
        row = L.user_clique(u)
        for a, b in itertools.combinations(row[:8], 2):
            assert owner[a] != owner[b]
            assert not lg.is_edge_complement_square(L, a, b)


def test_check_cover_rejects_bad_covers(example):
    L, cover = example
    with pytest.raises(InvalidInput):
        lg.check_cover(L, lg.TransmissionCover(cover.cliques[:3]))
    dup = [list(c) for c in cover.cliques]
    dup[0] = [dup[0][0], dup[1][1]]
    with pytest.raises(InvalidInput):
        lg.check_cover(L, lg.TransmissionCover(dup))
    merged = [cover.cliques[0] + cover.cliques[1], cover.cliques[2], cover.cliques[3]]
    with pytest.raises(InvalidInput):
        lg.check_cover(L, lg.TransmissionCover(merged))
    with pytest.raises(InvalidInput):
        lg.check_cover(L, lg.TransmissionCover([[(9, 9), (0, 0)]] + cover.cliques[1:]))


def test_transmission_cover_detects_tampered_graph(instance_2411):
    ctx, L, _, _ = instance_2411
    with pytest.raises(InternalInconsistency):
        lg.transmission_cover(ctx, L.without_vertex(L.vertices()[0]))


def test_anchor_independence():
    """Counts do not depend on which (t-1)-dim anchor is fixed."""
    q, k, m, t = 2, 5, 1, 2
    base = lg.build_line_graph(lg.build_geometry(q, k, m, t))
    f = gf.make_field(q)
    rng = np.random.default_rng(11)
    M = gf.random_invertible(f, k, rng)
    default_anchor = gf.standard_span(f, k, [k - 1])
    anchor = gf.transform(default_anchor, M)
    other = lg.build_line_graph(lg.build_geometry(q, k, m, t, anchor=anchor))
    assert (other.K, other.F, other.D, other.c) == (base.K, base.F, base.D, base.c)
    assert lg.verify_caching_line_graph(other).ok
    with pytest.raises(InvalidInput):
        lg.build_geometry(q, k, m, t, anchor=gf.zero_subspace(f, k))


def test_uncached_fraction_identity(instance_2411):
    _, L, _, _ = instance_2411
    from fractions import Fraction

    assert Fraction(L.D, L.F) == Fraction(L.c, L.K) == 1 - scheme.scheme_params(2, 4, 1, 1).cache_fraction


def test_json_export_is_deterministic(instance_2411):
    ctx, L, cover, _ = instance_2411
    a = json.dumps(lg.line_graph_to_json(ctx, L, cover))
    ctx2 = lg.build_geometry(2, 4, 1, 1)
    L2 = lg.build_line_graph(ctx2)
    b = json.dumps(lg.line_graph_to_json(ctx2, L2, lg.transmission_cover(ctx2, L2)))
    assert a == b
    data = json.loads(a)
    assert data["K"] == 105 and len(data["cliques"]) == 840 and len(data["vertices"]) == 5040


def test_user_family_only_for_larger_instance():
    """(2,6,2,1): only X and Y are enumerated (the full graph is above the default cap)."""
    ctx = lg.build_geometry(2, 6, 2, 1, max_vertices=10**8)
    sp = scheme.scheme_params(2, 6, 2, 1)
    assert len(ctx.X_set) == sp.K
    assert len(ctx.Y_set) == sp.F
