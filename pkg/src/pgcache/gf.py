"""Finite fields F_q and subspaces of F_q^k in canonical form.

Field elements are the integers ``0..q-1``; for ``q = p^e`` with ``e > 1``
the base-``p`` digits of an element are its polynomial coefficients, lowest
degree first. Subspaces are stored by their reduced row echelon basis, which
makes equality of subspaces equality of stored bases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import kernels
from .errors import DimensionMismatch, NotPrimePower, OutOfRange

MAX_ORDER = 1 << 16
TABLE_LIMIT = 256


def _factor_prime_power(q):
    if q < 2:
        raise OutOfRange(f"field order must be >= 2, got {q}")
    p = next(d for d in itertools.chain([2], range(3, q + 1, 2)) if q % d == 0)
    e, r = 0, q
    while r % p == 0:
        r //= p
        e += 1
    if r != 1:
        raise NotPrimePower(f"{q} is not a prime power")
    return p, e


def _digits(a, p, e):
    out = []
    for _ in range(e):
        a, d = divmod(a, p)
        out.append(d)
    return out


def _undigits(ds, p):
    a = 0
    for d in reversed(ds):
        a = a * p + d
    return a


def _poly_mod(num, den, p):
    # num, den: coefficient lists, low degree first; den monic
    num = list(num)
    dd = len(den) - 1
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i] % p
        if c:
            for j in range(dd + 1):
                num[i - dd + j] = (num[i - dd + j] - c * den[j]) % p
    return [x % p for x in num[:dd]] if len(num) >= dd else [x % p for x in num] + [0] * (dd - len(num))


def _poly_mulmod(a, b, mod, p):
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    return _poly_mod(prod, mod, p)


def _is_irreducible(poly, p):
    e = len(poly) - 1
    for d in range(1, e // 2 + 1):
        for low in range(p**d):
            divisor = _digits(low, p, d) + [1]
            rem = _poly_mod(poly, divisor, p)
            if not any(rem):
                return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(p, e):
    """Smallest monic irreducible of degree ``e`` over F_p.

    Candidates are ordered by their coefficient sequence read from degree
    ``e-1`` down to the constant term. Returned low degree first.
    """
    if e == 1:
        return (0, 1)
    for low in range(p**e):
        poly = _digits(low, p, e) + [1]
        if poly[0] and _is_irreducible(poly, p):
            return tuple(poly)
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


class _LazyTable:
    """``t[a][b]`` view over a binary function, for fields too big to tabulate."""

    def __init__(self, fn):
        self._fn = fn

    def __getitem__(self, a):
        fn = self._fn
        return _LazyRow(lambda b: fn(a, b))


class _LazyRow:
    def __init__(self, fn):
        self._fn = fn

    def __getitem__(self, b):
        return self._fn(b)


class _LazyVec:
    def __init__(self, fn):
        self._fn = fn

    def __getitem__(self, a):
        return self._fn(a)


class FieldContext:
    """Arithmetic in F_q, q = p^e."""

    def __init__(self, p, e, modulus):
        self.p = p
        self.e = e
        self.q = p**e
        self.modulus = tuple(modulus)
        if e > 1:
            self._build_log_tables()

    def __repr__(self):
        return f"FieldContext(q={self.q}, p={self.p}, e={self.e})"

    def __eq__(self, other):
        return isinstance(other, FieldContext) and (self.p, self.e, self.modulus) == (
            other.p,
            other.e,
            other.modulus,
        )

    def __hash__(self):
        return hash((self.p, self.e, self.modulus))

    def _build_log_tables(self):
        q, p, e = self.q, self.p, self.e
        for g in range(2, q):
            exp = [1]
            gd = _digits(g, p, e)
            cur = [1] + [0] * (e - 1)
            for _ in range(q - 2):
                cur = _poly_mulmod(cur, gd, self.modulus, p)
                v = _undigits(cur, p)
                if v == 1:
                    break
                exp.append(v)
            if len(exp) == q - 1:
                break
        else:  # pragma: no cover
            raise AssertionError("no primitive element")
        log = [0] * q
        for i, v in enumerate(exp):
            log[v] = i
        self._exp = exp
        self._log = log

    # -- scalar arithmetic ---------------------------------------------------
    def add(self, a, b):
        if self.e == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        p = self.p
        out, scale = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            out += ((x + y) % p) * scale
            scale *= p
        return out

    def neg(self, a):
        if self.e == 1:
            return (-a) % self.p
        if self.p == 2:
            return a
        return _undigits([(-d) % self.p for d in _digits(a, self.p, self.e)], self.p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.e == 1:
            return (a * b) % self.p
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in F_q")
        if self.e == 1:
            return pow(a, self.p - 2, self.p)
        return self._exp[(-self._log[a]) % (self.q - 1)]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def elements(self):
        return range(self.q)

    # -- tables for the elimination kernels ----------------------------------
    @cached_property
    def np_tables(self):
        """(add, mul, neg, inv) as int32 arrays, or None when q > TABLE_LIMIT."""
        if self.q > TABLE_LIMIT:
            return None
        q = self.q
        idx = np.arange(q)
        if self.e == 1:
            add = (idx[:, None] + idx[None, :]) % q
            mul = (idx[:, None] * idx[None, :]) % q
        else:
            add = np.array([[self.add(a, b) for b in range(q)] for a in range(q)])
            mul = np.array([[self.mul(a, b) for b in range(q)] for a in range(q)])
        neg = np.array([self.neg(a) for a in range(q)])
        inv = np.array([0] + [self.inv(a) for a in range(1, q)])
        return tuple(np.ascontiguousarray(t, dtype=np.int32) for t in (add, mul, neg, inv))

    @cached_property
    def py_tables(self):
        if self.np_tables is None:
            return (
                _LazyTable(self.add),
                _LazyTable(self.mul),
                _LazyVec(self.neg),
                _LazyVec(lambda a: self.inv(a) if a else 0),
            )
        return tuple(t.tolist() for t in self.np_tables)


@lru_cache(maxsize=None)
def make_field(q):
    """Return the field of order ``q``; raises NotPrimePower otherwise."""
    if not isinstance(q, (int, np.integer)) or isinstance(q, bool):
        raise OutOfRange(f"field order must be an integer, got {q!r}")
    q = int(q)
    if q > MAX_ORDER:
        raise OutOfRange(f"field order {q} exceeds supported maximum {MAX_ORDER}")
    p, e = _factor_prime_power(q)
    return FieldContext(p, e, smallest_irreducible(p, e))


# ---------------------------------------------------------------------------
# Subspaces


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of F_q^k stored by its reduced row echelon basis."""

    field: FieldContext
    ambient_dim: int
    basis: tuple
    pivots: tuple

    @property
    def dim(self):
        return len(self.basis)

    @cached_property
    def key(self):
        """Row-major element sequence of the basis; canonical hash/sort key."""
        return tuple(x for row in self.basis for x in row)

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return (
            self.field.q == other.field.q
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.field.q, self.ambient_dim, self.basis))

    def __lt__(self, other):
        return (self.dim, self.key) < (other.dim, other.key)

    def __contains__(self, v):
        return subspace_contains(self, v)

    def __repr__(self):
        rows = ", ".join("(" + ",".join(map(str, r)) + ")" for r in self.basis)
        return f"Subspace(q={self.field.q}, k={self.ambient_dim}, dim={self.dim}, [{rows}])"

    def as_array(self):
        return np.asarray(self.basis, dtype=np.int32).reshape(self.dim, self.ambient_dim)

    def vectors(self):
        """Every vector of the subspace (q^dim of them)."""
        f, k = self.field, self.ambient_dim
        for coeffs in itertools.product(range(f.q), repeat=self.dim):
            v = [0] * k
            for c, row in zip(coeffs, self.basis):
                if c:
                    v = [f.add(x, f.mul(c, y)) for x, y in zip(v, row)]
            yield tuple(v)


def _check_vectors(vectors, k):
    out = []
    for v in vectors:
        v = tuple(int(x) for x in v)
        if len(v) != k:
            raise DimensionMismatch(f"vector of length {len(v)} in ambient dimension {k}")
        out.append(v)
    return out


def span(field, vectors, k):
    """Canonical subspace spanned by ``vectors`` in F_q^k."""
    vecs = _check_vectors(vectors, k)
    for v in vecs:
        if any(x < 0 or x >= field.q for x in v):
            raise OutOfRange(f"vector {v} has entries outside F_{field.q}")
    basis, pivots = kernels.rref(field, vecs, k)
    return Subspace(field, k, tuple(basis), tuple(pivots))


def zero_subspace(field, k):
    return Subspace(field, k, (), ())


def standard_span(field, k, indices):
    """Span of the standard basis vectors e_i, i in ``indices`` (0-based)."""
    rows = []
    for i in indices:
        v = [0] * k
        v[i] = 1
        rows.append(v)
    return span(field, rows, k)


def _same_space(a, b):
    if a.field != b.field or a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch(
            f"subspaces live in different spaces (q={a.field.q},k={a.ambient_dim}) vs "
            f"(q={b.field.q},k={b.ambient_dim})"
        )


def subspace_sum(a, b):
    _same_space(a, b)
    if b.dim == 0:
        return a
    if a.dim == 0:
        return b
    return span(a.field, a.basis + b.basis, a.ambient_dim)


def sum_all(spaces, field, k):
    rows = []
    for s in spaces:
        rows.extend(s.basis)
    return span(field, rows, k)


def subspace_contains(a, v):
    v = tuple(int(x) for x in v)
    if len(v) != a.ambient_dim:
        raise DimensionMismatch(f"vector of length {len(v)} vs ambient dimension {a.ambient_dim}")
    if not any(v):
        return True
    r = kernels.stacked_ranks(a.field, a.basis, [[v]], a.ambient_dim)
    return int(r[0]) == a.dim


def intersection_dim(a, b):
    """dim(A ∩ B) from dim A + dim B - dim(A + B)."""
    return a.dim + b.dim - subspace_sum(a, b).dim


def is_subspace_of(a, b):
    _same_space(a, b)
    return subspace_sum(a, b).dim == b.dim


def transform(a, matrix):
    """Image of ``a`` under the right action v -> v @ matrix (k x k over F_q)."""
    f, k = a.field, a.ambient_dim
    rows = []
    for row in a.basis:
        out = [0] * k
        for c, mrow in zip(row, matrix):
            if c:
                out = [f.add(x, f.mul(c, y)) for x, y in zip(out, mrow)]
        rows.append(out)
    return span(f, rows, k)


def random_invertible(field, k, rng):
    """Uniformly random element of GL_k(F_q) drawn with ``rng`` (numpy Generator)."""
    while True:
        m = rng.integers(0, field.q, size=(k, k)).tolist()
        if span(field, m, k).dim == k:
            return m
