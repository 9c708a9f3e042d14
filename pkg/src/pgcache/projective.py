"""Counting and enumeration over projective geometries PG(k-1, q)."""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from . import kernels
from .errors import OutOfRange
from .gf import Subspace, span


def theta(k, q):
    """Number of 1-dim subspaces of F_q^k; theta(0) = 0."""
    if k < 0:
        raise OutOfRange(f"k must be >= 0, got {k}")
    return (q**k - 1) // (q - 1)


def gaussian_binomial(k, m, q):
    """Number of m-dim subspaces of F_q^k, exact."""
    if m < 0 or k < 0 or m > k:
        raise OutOfRange(f"need 0 <= m <= k, got k={k}, m={m}")
    num = den = 1
    for i in range(m):
        num *= q ** (k - i) - 1
        den *= q ** (m - i) - 1
    value, rem = divmod(num, den)
    assert rem == 0
    return value


def count_extension_sets(a, b, k, q):
    """Unordered b-sets of lines T_i with A ⊕ T_1 ⊕ ... ⊕ T_b of dim a+b, dim A = a."""
    if a < 0 or b < 0 or a + b > k or a + b < 1:
        raise OutOfRange(f"need 1 <= a+b <= k with a,b >= 0; got a={a}, b={b}, k={k}")
    tk = theta(k, q)
    num = 1
    for i in range(b):
        num *= tk - theta(a + i, q)
    value, rem = divmod(num, factorial(b))
    assert rem == 0
    return value


def count_line_completions(a, q):
    """Lines T with A' ⊕ T = A for a fixed hyperplane A' of an a-dim A."""
    if a < 1:
        raise OutOfRange(f"a must be >= 1, got {a}")
    return q ** (a - 1)


def projective_points(field, k):
    """One normalized representative (first nonzero coordinate 1) per line of F_q^k.

    Returned as an int32 array of shape (theta(k), k), in lexicographic order.
    """
    q = field.q
    pts = []
    for lead in range(k):
        for tail in itertools.product(range(q), repeat=k - lead - 1):
            pts.append((0,) * lead + (1,) + tail)
    return np.asarray(pts, dtype=np.int32).reshape(len(pts), k)


def _line_superspaces(space, points):
    """All (dim+1)-superspaces of ``space`` obtained by adding one line."""
    f, k = space.field, space.ambient_dim
    blocks = points[:, None, :]
    ranks = kernels.stacked_ranks(f, space.basis, blocks, k)
    todo = ranks > space.dim
    out = []
    for idx in np.flatnonzero(todo):
        if not todo[idx]:
            continue
        bigger = span(f, space.basis + (tuple(points[idx].tolist()),), k)
        out.append(bigger)
        inside = kernels.stacked_ranks(f, bigger.basis, blocks, k) == bigger.dim
        todo &= ~inside
    return out


def enumerate_superspaces(w, d):
    """All d-dim subspaces containing ``w``, sorted by canonical key.

    Grows ``w`` one line at a time and deduplicates on the canonical basis.
    """
    k = w.ambient_dim
    if not (w.dim <= d <= k):
        raise OutOfRange(f"need dim W ({w.dim}) <= d ({d}) <= k ({k})")
    points = projective_points(w.field, k)
    layer = {w}
    for _ in range(d - w.dim):
        nxt = set()
        for s in layer:
            nxt.update(_line_superspaces(s, points))
        layer = nxt
    return sorted(layer, key=lambda s: s.key)


def lines(field, k):
    """All 1-dim subspaces of F_q^k as Subspace objects."""
    return [Subspace(field, k, (tuple(p),), (p.index(1),)) for p in map(tuple, projective_points(field, k).tolist())]
