"""The caching line graph built from subspaces of F_q^k and its transmission cover.

Users are unordered pairs of t-dim superspaces of a fixed (t-1)-dim anchor W,
subfiles are (m+1)-sets, and a user/subfile pair is a vertex (the user does
not cache that subfile) when all m+3 subspaces together span an
(m+t+2)-dim space. Every such spanning (m+3)-set indexes one coded
transmission serving C(m+3, 2) vertices.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels, scheme
from .errors import InstanceTooLarge, InternalInconsistency, InvalidInput, UnknownVertex
from .gf import make_field, standard_span, sum_all
from .projective import enumerate_superspaces

DEFAULT_MAX_VERTICES = 10**6


def max_vertices_default():
    env = os.environ.get("PGCACHE_MAX_VERTICES")
    return int(env) if env else DEFAULT_MAX_VERTICES


class GeometryContext:
    """Anchor W, the t-dim superspaces ``V`` of W, and the families X, Y, Z.

    Family members are sorted tuples of indices into ``V`` (itself sorted by
    canonical key), so every list here is in canonical order.
    """

    def __init__(self, q, k, m, t, W, V):
        self.q, self.k, self.m, self.t = q, k, m, t
        self.field = W.field
        self.W = W
        self.V = V
        self._blocks = np.asarray([v.basis for v in V], dtype=np.int32).reshape(len(V), t, k)

    def __repr__(self):
        return f"GeometryContext(q={self.q}, k={self.k}, m={self.m}, t={self.t}, |V|={len(self.V)})"

    def _families(self, size):
        """Sorted index tuples of ``size`` members whose sum has dim t-1+size."""
        f, k, n = self.field, self.k, len(self.V)
        blocks = self._blocks
        out = []

        def grow(members, rows, dim):
            if len(members) == size:
                out.append(tuple(members))
                return
            start = members[-1] + 1 if members else 0
            if n - start < size - len(members):
                return
            ranks = kernels.stacked_ranks(f, rows, blocks[start:], k)
            for off in np.flatnonzero(ranks == dim + 1):
                j = start + int(off)
                grow(members + [j], rows + list(self.V[j].basis), dim + 1)

        grow([], list(self.W.basis), self.W.dim)
        return out

    @cached_property
    def X_set(self):
        return self._families(2)

    @cached_property
    def Y_set(self):
        return self._families(self.m + 1)

    @cached_property
    def Z_set(self):
        return self._families(self.m + 3)

    def span_of(self, members):
        return sum_all([self.V[i] for i in members], self.field, self.k)

    def member_bases(self, members):
        return [[list(r) for r in self.V[i].basis] for i in members]


def build_geometry(q, k, m, t, anchor=None, max_vertices=None):
    """Enumerate W's superspaces and the user/subfile families for (q, k, m, t).

    ``anchor`` replaces the default W (span of the last t-1 standard basis
    vectors). The transmission family Z is enumerated lazily on first access.
    Raises InstanceTooLarge when the closed-form vertex count exceeds
    ``max_vertices`` (default 10^6 or ``PGCACHE_MAX_VERTICES``).
    """
    scheme.check_parameters(q, k, m, t)
    cap = max_vertices_default() if max_vertices is None else max_vertices
    n_vertices = scheme.num_users(q, k, t) * scheme.user_clique_size(q, k, m, t)
    if n_vertices > cap:
        raise InstanceTooLarge(f"(q,k,m,t)={(q, k, m, t)} has {n_vertices} vertices, cap is {cap}")
    fld = make_field(q)
    if anchor is None:
        anchor = standard_span(fld, k, range(k - t + 1, k))
    elif anchor.dim != t - 1 or anchor.ambient_dim != k or anchor.field != fld:
        raise InvalidInput(f"anchor must be a {t - 1}-dim subspace of F_{q}^{k}")
    V = enumerate_superspaces(anchor, t)
    return GeometryContext(q, k, m, t, anchor, V)


@dataclass
class CachingLineGraph:
    """Vertices are (user index, subfile index) pairs with ``incidence[u, f]`` True."""

    users: list
    subfiles: list
    incidence: np.ndarray
    params: tuple = None  # (q, k, m, t) when built from a geometry

    @property
    def K(self):
        return len(self.users)

    @property
    def F(self):
        return len(self.subfiles)

    @cached_property
    def user_clique_sizes(self):
        return self.incidence.sum(axis=1)

    @cached_property
    def subfile_clique_sizes(self):
        return self.incidence.sum(axis=0)

    @property
    def D(self):
        s = np.unique(self.user_clique_sizes)
        return int(s[0]) if len(s) == 1 else None

    @property
    def c(self):
        s = np.unique(self.subfile_clique_sizes)
        return int(s[0]) if len(s) == 1 else None

    @property
    def num_vertices(self):
        return int(self.incidence.sum())

    def vertices(self):
        return [(int(u), int(f)) for u, f in np.argwhere(self.incidence)]

    def has_vertex(self, v):
        u, f = v
        return 0 <= u < self.K and 0 <= f < self.F and bool(self.incidence[u, f])

    def user_clique(self, u):
        return [(u, int(f)) for f in np.flatnonzero(self.incidence[u])]

    def subfile_clique(self, f):
        return [(int(u), f) for u in np.flatnonzero(self.incidence[:, f])]

    @classmethod
    def from_vertices(cls, users, subfiles, vertices, params=None):
        """Hand-built graph from labelled vertices ``(user_label, subfile_label)``."""
        uidx = {u: i for i, u in enumerate(users)}
        fidx = {f: i for i, f in enumerate(subfiles)}
        inc = np.zeros((len(users), len(subfiles)), dtype=bool)
        for u, f in vertices:
            if u not in uidx or f not in fidx:
                raise UnknownVertex(f"vertex {(u, f)} uses an unknown user or subfile")
            inc[uidx[u], fidx[f]] = True
        return cls(list(users), list(subfiles), inc, params)

    def without_vertex(self, v):
        inc = self.incidence.copy()
        inc[v] = False
        return CachingLineGraph(self.users, self.subfiles, inc, self.params)


def build_line_graph(ctx, max_vertices=None):
    """Vertex (X, Y) exists iff the subspaces of X and Y together span dim m+t+2."""
    cap = max_vertices_default() if max_vertices is None else max_vertices
    K, F = len(ctx.X_set), len(ctx.Y_set)
    f, k = ctx.field, ctx.k
    target = ctx.m + ctx.t + 2
    s_blocks = np.asarray([ctx.span_of(y).basis for y in ctx.Y_set], dtype=np.int32).reshape(F, ctx.m + ctx.t, k)
    inc = np.zeros((K, F), dtype=bool)
    total = 0
    for i, x in enumerate(ctx.X_set):
        rx = ctx.span_of(x)
        inc[i] = kernels.stacked_ranks(f, rx.basis, s_blocks, k) == target
        total += int(inc[i].sum())
        if total > cap:
            raise InstanceTooLarge(f"line graph exceeds {cap} vertices")
    return CachingLineGraph(list(ctx.X_set), list(ctx.Y_set), inc, (ctx.q, ctx.k, ctx.m, ctx.t))


@dataclass
class VerificationReport:
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())

    @property
    def failed(self):
        return [name for name, passed in self.checks.items() if not passed]

    def to_dict(self):
        return {"ok": self.ok, "checks": dict(self.checks), "failed": self.failed, "details": self.details}


def verify_caching_line_graph(L):
    """Check the three line-graph properties and, for built graphs, the closed forms."""
    rep = VerificationReport()
    us, fs = L.user_clique_sizes, L.subfile_clique_sizes
    rep.checks["P1_user_cliques_equal"] = L.K > 0 and len(np.unique(us)) == 1 and us[0] > 0
    rep.checks["P2_subfile_cliques_equal"] = L.F > 0 and len(np.unique(fs)) == 1 and fs[0] > 0
    if not rep.checks["P1_user_cliques_equal"]:
        rep.details["P1_sizes"] = sorted({int(x) for x in us})
    if not rep.checks["P2_subfile_cliques_equal"]:
        rep.details["P2_sizes"] = sorted({int(x) for x in fs})
    # P3: edges only inside user or subfile cliques -> each vertex carries one
    # user and one subfile label; labels must be unique for that to hold.
    rep.checks["P3_unique_labels"] = (
        len(set(map(_hashable, L.users))) == L.K and len(set(map(_hashable, L.subfiles))) == L.F
        and L.incidence.shape == (L.K, L.F)
    )
    rep.checks["double_count_KD_eq_Fc"] = int(us.sum()) == int(fs.sum()) == L.num_vertices
    rep.details.update(K=L.K, F=L.F, D=L.D, c=L.c, vertices=L.num_vertices)
    if L.params is not None:
        q, k, m, t = L.params
        expect = {
            "K": scheme.num_users(q, k, t),
            "F": scheme.subpacketization(q, k, m, t),
            "D": scheme.user_clique_size(q, k, m, t),
            "c": scheme.subfile_clique_size(q, k, m, t),
        }
        measured = {"K": L.K, "F": L.F, "D": L.D, "c": L.c}
        for name in expect:
            rep.checks[f"closed_form_{name}"] = measured[name] == expect[name]
        rep.details["closed_form"] = expect
    return rep


def _hashable(x):
    return tuple(x) if isinstance(x, list) else x


def is_edge_complement_square(L, v1, v2):
    """Adjacency in the complement of L^2: distinct users and subfiles, both cross pairs absent."""
    for v in (v1, v2):
        if not L.has_vertex(v):
            raise UnknownVertex(f"{v} is not a vertex of the line graph")
    (u1, f1), (u2, f2) = v1, v2
    return u1 != u2 and f1 != f2 and not L.incidence[u1, f2] and not L.incidence[u2, f1]


@dataclass
class TransmissionCover:
    """Disjoint cliques of the complement of L^2; ``keys[s]`` names clique s."""

    cliques: list
    keys: list = None

    @property
    def sizes(self):
        return {len(c) for c in self.cliques}

    def __len__(self):
        return len(self.cliques)


def check_cover(L, cover):
    """Raise InvalidInput unless ``cover`` partitions V(L) into cliques of the complement square."""
    sizes = cover.sizes
    if len(sizes) == 1 and cover.cliques:
        try:
            arr = np.asarray(cover.cliques, dtype=np.int64).reshape(len(cover.cliques), -1, 2)
        except ValueError as exc:
            raise InvalidInput(f"malformed cover: {exc}") from None
        if arr.min() < 0 or (arr[:, :, 0] >= L.K).any() or (arr[:, :, 1] >= L.F).any():
            raise InvalidInput("cover references vertices outside the graph")
        _check_cover_fast(L, arr, InvalidInput)
        return
    seen = np.zeros(L.incidence.shape, dtype=np.int64)
    for s, clique in enumerate(cover.cliques):
        for v in clique:
            if not L.has_vertex(v):
                raise InvalidInput(f"clique {s} contains non-vertex {v}")
            seen[v] += 1
        for a, b in itertools.combinations(clique, 2):
            if not is_edge_complement_square(L, a, b):
                raise InvalidInput(f"clique {s}: {a} and {b} are not adjacent in the complement square")
    if (seen > 1).any():
        u, f = np.argwhere(seen > 1)[0]
        raise InvalidInput(f"vertex {(int(u), int(f))} is covered more than once")
    if (seen != L.incidence).any():
        u, f = np.argwhere(seen != L.incidence)[0]
        raise InvalidInput(f"vertex {(int(u), int(f))} is not covered")


def transmission_cover(ctx, L):
    """One clique per Z: every split of Z into a pair (user) and the rest (subfile)."""
    uidx = {x: i for i, x in enumerate(L.users)}
    fidx = {y: j for j, y in enumerate(L.subfiles)}
    cliques = []
    for z in ctx.Z_set:
        clique = []
        for a, b in itertools.combinations(z, 2):
            rest = tuple(v for v in z if v != a and v != b)
            try:
                clique.append((uidx[(a, b)], fidx[rest]))
            except KeyError:
                raise InternalInconsistency(f"Z={z}: split {(a, b)}|{rest} is not a user/subfile pair") from None
        cliques.append(clique)
    arr = np.asarray(cliques, dtype=np.int64).reshape(len(cliques), -1, 2)
    _check_cover_fast(L, arr, InternalInconsistency)
    return TransmissionCover(cliques, list(ctx.Z_set))


def _check_cover_fast(L, arr, exc):
    # arr: (S, d, 2) vertex array; vectorised partition and clique checks
    inc = L.incidence
    if arr.size == 0:
        if inc.any():
            raise exc("empty cover for a non-empty graph")
        return
    U, Fs = arr[:, :, 0], arr[:, :, 1]
    if not inc[U, Fs].all():
        raise exc("a clique member is not a vertex")
    counts = np.zeros(inc.shape, dtype=np.int64)
    np.add.at(counts, (U.ravel(), Fs.ravel()), 1)
    if (counts != inc).any():
        raise exc("cover cliques do not partition the vertex set")
    d = arr.shape[1]
    off = ~np.eye(d, dtype=bool)
    cross = inc[U[:, :, None], Fs[:, None, :]]  # (S, d, d): is (u_i, f_j) a vertex
    same_u = U[:, :, None] == U[:, None, :]
    same_f = Fs[:, :, None] == Fs[:, None, :]
    bad = (cross | same_u | same_f) & off
    if bad.any():
        s, i, j = np.argwhere(bad)[0]
        raise exc(f"clique {s}: members {i},{j} are not adjacent in the complement square")


def line_graph_to_json(ctx, L, cover=None):
    """Parameters, subspace tables, vertex list and cover cliques as plain JSON data."""
    out = {
        "params": {"q": ctx.q, "k": ctx.k, "m": ctx.m, "t": ctx.t},
        "anchor": [list(r) for r in ctx.W.basis],
        "subspaces": [[list(r) for r in v.basis] for v in ctx.V],
        "users": [list(x) for x in L.users],
        "subfiles": [list(y) for y in L.subfiles],
        "K": L.K, "F": L.F, "D": L.D, "c": L.c,
        "vertices": [list(v) for v in L.vertices()],
    }
    if cover is not None:
        out["cliques"] = [[list(v) for v in c] for c in cover.cliques]
        out["clique_keys"] = [list(z) for z in cover.keys] if cover.keys is not None else None
    return out


def example_graph():
    """The four-user, four-subfile illustration: each user misses two subfiles.

    Returns the graph and its cover of four 2-cliques.
    """
    users = [1, 2, 3, 4]
    subfiles = ["f1", "f2", "f3", "f4"]
    missing = {1: ("f1", "f2"), 2: ("f3", "f4"), 3: ("f1", "f3"), 4: ("f2", "f4")}
    L = CachingLineGraph.from_vertices(users, subfiles, [(u, f) for u, fs in missing.items() for f in fs])
    ui = {u: i for i, u in enumerate(users)}
    fi = {f: i for i, f in enumerate(subfiles)}
    pairs = [((1, "f2"), (2, "f3")), ((1, "f1"), (2, "f4")), ((3, "f1"), (4, "f4")), ((3, "f3"), (4, "f2"))]
    cliques = [[(ui[u], fi[f]) for u, f in pair] for pair in pairs]
    return L, TransmissionCover(cliques, keys=[f"T{i + 1}" for i in range(4)])
