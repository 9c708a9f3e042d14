"""Byte-level placement and delivery simulation for PDA-based coded caching.

Subfiles are contiguous slices of a file; coded symbols are bytewise XOR.
Two delivery modes are provided: a central server broadcasting one coded
subfile per PDA label, and device-to-device delivery where every occurrence
of a label splits its subfile into g-1 parts sent by the other g-1 users.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DecodeFailure, InvalidDemand, NotRegular, SizeMismatch
from .pda import PDA, STAR


def _digest(buf):
    return hashlib.sha256(bytes(buf)).hexdigest()


class FileLibrary:
    """N files of ``file_size`` pseudo-random bytes drawn from ``seed``."""

    def __init__(self, N, file_size, seed=0):
        if N < 1 or file_size < 1:
            raise SizeMismatch("library needs at least one file of at least one byte")
        self.N = int(N)
        self.file_size = int(file_size)
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self.files = rng.integers(0, 256, size=(self.N, self.file_size), dtype=np.uint8)
        self.files.setflags(write=False)
        self.digests = [_digest(f) for f in self.files]

    def subfiles(self, F):
        """View of shape (N, F, file_size // F)."""
        if self.file_size % F:
            raise SizeMismatch(f"file size {self.file_size} is not a multiple of F={F}")
        return self.files.reshape(self.N, F, self.file_size // F)

    def subfile_size(self, F):
        return self.subfiles(F).shape[2]


@dataclass
class CacheState:
    """What each user stores: rows[k] are the subfile indices, data[k] has shape (N, len(rows[k]), size)."""

    rows: list
    data: list
    subfile_size: int

    def lookup(self, user, file, subfile):
        """Cached copy of W_{file, subfile} at ``user``, or None."""
        rows = self.rows[user]
        i = np.searchsorted(rows, subfile)
        if i < len(rows) and rows[i] == subfile:
            return self.data[user][file, i]
        return None

    def bytes_used(self, user):
        return int(self.data[user].nbytes)


def place(pda, library):
    """User k stores W_{i,f} for every file i whenever a[f, k] is a star."""
    sub = library.subfiles(pda.F)
    rows, data = [], []
    for k in range(pda.K):
        r = np.flatnonzero(pda.entries[:, k] == STAR)
        rows.append(r)
        data.append(np.ascontiguousarray(sub[:, r, :]))
    return CacheState(rows, data, sub.shape[2])


def _check_demands(demands, K, N):
    d = np.asarray(demands)
    if d.shape != (K,) or not np.issubdtype(d.dtype, np.integer):
        raise InvalidDemand(f"expected {K} integer demands")
    if (d < 0).any() or (d >= N).any():
        raise InvalidDemand(f"demands must lie in [0, {N})")
    return d.astype(np.int64)


@dataclass
class D2DTransmission:
    sender: int
    label: int
    part: int  # index j of the occurrence whose user sends this
    payload: np.ndarray


@dataclass
class TransmissionLog:
    mode: str
    demands: np.ndarray
    file_size: int
    payloads: object = None  # broadcast: (S, size) array, row s-1 for label s
    transmissions: list = field(default_factory=list)  # d2d only

    def total_bytes(self):
        if self.mode == "broadcast":
            return int(self.payloads.size)
        return sum(int(t.payload.size) for t in self.transmissions)

    @property
    def rate(self):
        return Fraction(self.total_bytes(), self.file_size)

    def per_user_rates(self, K):
        sent = [0] * K
        if self.mode == "d2d":
            for t in self.transmissions:
                sent[t.sender] += t.payload.size
        return [Fraction(b, self.file_size) for b in sent]

    def to_bytes(self):
        if self.mode == "broadcast":
            return self.payloads.tobytes()
        return b"".join(t.payload.tobytes() for t in self.transmissions)


def deliver_broadcast(pda, library, demands):
    """One coded subfile per label s: XOR of W_{d_k, f} over the occurrences (f, k) of s."""
    d = _check_demands(demands, pda.K, library.N)
    sub = library.subfiles(pda.F)
    payloads = np.zeros((pda.S, sub.shape[2]), dtype=np.uint8)
    g = pda.g
    if g is not None:
        flat = pda.entries.ravel()
        idx = np.flatnonzero(flat)
        idx = idx[np.argsort(flat[idx], kind="stable")].reshape(-1, g)
        R, C = np.divmod(idx, pda.K)
        payloads[:] = np.bitwise_xor.reduce(sub[d[C], R], axis=1)
    else:
        for s, pos in pda.grouped_positions().items():
            for f, k in pos:
                payloads[s - 1] ^= sub[d[k], f]
    return TransmissionLog("broadcast", d, library.file_size, payloads=payloads)


def decode_broadcast(user, pda, cache, log, groups=None):
    """Rebuild the file demanded by ``user`` from its cache and the broadcast log.

    ``groups`` may carry a precomputed ``pda.grouped_positions()``.
    """
    d = log.demands
    want = int(d[user])
    size = cache.subfile_size
    out = np.empty((pda.F, size), dtype=np.uint8)
    col = pda.entries[:, user]
    for f in range(pda.F):
        s = int(col[f])
        if s == STAR:
            out[f] = cache.lookup(user, want, f)
            continue
        if groups is None:
            groups = pda.grouped_positions()
        acc = log.payloads[s - 1].copy()
        for f2, k2 in groups[s]:
            if (f2, k2) == (f, user):
                continue
            piece = cache.lookup(user, int(d[k2]), f2)
            if piece is None:
                raise DecodeFailure(
                    f"user {user} lacks W[{int(d[k2])},{f2}] needed for subfile {f}", user=user, subfile=f
                )
            acc ^= piece
        out[f] = acc
    return out.reshape(-1)


def _split_parts(g):
    """For occurrence i, map sender index j != i to its part number 0..g-2."""
    return [{j: (j if j < i else j - 1) for j in range(g) if j != i} for i in range(g)]


def deliver_d2d(pda, cache, demands, N):
    """Users multicast among themselves; no server.

    For label s at occurrences (f_i, k_i), i = 0..g-1, subfile W_{d_{k_i}, f_i}
    is cut into g-1 parts indexed by j != i. User k_j sends the XOR over
    i != j of part j of W_{d_{k_i}, f_i}, which it holds because a[f_i, k_j] is a star.
    """
    g = pda.g
    if g is None or g < 2:
        raise NotRegular("D2D delivery needs a g-regular PDA with g >= 2")
    if cache.subfile_size % (g - 1):
        raise SizeMismatch(f"subfile size {cache.subfile_size} is not a multiple of g-1={g - 1}")
    d = _check_demands(demands, pda.K, N)
    psize = cache.subfile_size // (g - 1)
    parts = _split_parts(g)
    log = TransmissionLog("d2d", d, cache.subfile_size * pda.F)
    for s, pos in sorted(pda.grouped_positions().items()):
        for j, (_, kj) in enumerate(pos):
            acc = np.zeros(psize, dtype=np.uint8)
            for i, (fi, ki) in enumerate(pos):
                if i == j:
                    continue
                piece = cache.lookup(kj, int(d[ki]), fi)
                if piece is None:
                    raise DecodeFailure(f"sender {kj} lacks W[{int(d[ki])},{fi}]", user=kj, subfile=fi)
                p = parts[i][j]
                acc ^= piece[p * psize:(p + 1) * psize]
            log.transmissions.append(D2DTransmission(kj, s, j, acc))
    return log


def decode_d2d(user, pda, cache, log, groups=None):
    """Rebuild the file demanded by ``user`` from its cache and the D2D transmissions."""
    g = pda.g
    d = log.demands
    want = int(d[user])
    size = cache.subfile_size
    psize = size // (g - 1)
    parts = _split_parts(g)
    groups = pda.grouped_positions() if groups is None else groups
    by_label = {}
    for t in log.transmissions:
        by_label.setdefault(t.label, {})[t.part] = t.payload
    out = np.empty((pda.F, size), dtype=np.uint8)
    col = pda.entries[:, user]
    for f in range(pda.F):
        s = int(col[f])
        if s == STAR:
            out[f] = cache.lookup(user, want, f)
            continue
        pos = groups[s]
        i = pos.index((f, user))
        sent = by_label.get(s, {})
        for j in range(g):
            if j == i:
                continue
            if j not in sent:
                raise DecodeFailure(f"missing transmission for label {s} from slot {j}", user=user, subfile=f)
            acc = sent[j].copy()
            for l, (fl, kl) in enumerate(pos):
                if l in (i, j):
                    continue
                piece = cache.lookup(user, int(d[kl]), fl)
                if piece is None:
                    raise DecodeFailure(
                        f"user {user} lacks W[{int(d[kl])},{fl}] needed for subfile {f}", user=user, subfile=f
                    )
                p = parts[l][j]
                acc ^= piece[p * psize:(p + 1) * psize]
            p = parts[i][j]
            out[f, p * psize:(p + 1) * psize] = acc
    return out.reshape(-1)


# -- end-to-end ---------------------------------------------------------------


def size_unit(pda, mode):
    """File sizes must be multiples of this."""
    if mode == "d2d":
        g = pda.g
        if g is None or g < 2:
            raise NotRegular("D2D delivery needs a g-regular PDA with g >= 2")
        return pda.F * math.lcm(1, g - 1)
    return pda.F


def formula_rate(pda, mode):
    S, F = pda.S, pda.F
    if mode == "d2d":
        g = pda.g
        return Fraction(g, g - 1) * Fraction(S, F)
    return Fraction(S, F)


def _fmt_rate(r):
    return {"exact": str(r), "value": float(r)}


@dataclass
class SimulationReport:
    mode: str
    source: dict
    K: int
    F: int
    S: int
    g: object
    N: int
    file_size: int
    padding: int
    seed: int
    trials: int
    measured_rate: Fraction
    formula_rate: Fraction
    closed_form_rate: Fraction | None
    per_user_rates: list
    decoded_ok: bool
    failures: list
    cache_ok: bool
    runtime_ms: float | None = None

    @property
    def ok(self):
        rates = self.measured_rate == self.formula_rate
        if self.closed_form_rate is not None:
            rates = rates and self.measured_rate == self.closed_form_rate
        return self.decoded_ok and self.cache_ok and rates

    def to_dict(self, timing=False):
        out = {"mode": self.mode, **self.source}
        out.update(
            K=self.K, F=self.F, S=self.S, g=self.g, N=self.N,
            file_size=self.file_size, padding=self.padding, seed=self.seed, trials=self.trials,
            measured_rate=_fmt_rate(self.measured_rate),
            formula_rate=_fmt_rate(self.formula_rate),
        )
        if self.closed_form_rate is not None:
            out["closed_form_rate"] = _fmt_rate(self.closed_form_rate)
        if self.mode == "d2d":
            rates = sorted(set(self.per_user_rates))
            out["per_user_rates"] = [str(r) for r in self.per_user_rates] if len(rates) > 1 else str(rates[0])
        out.update(decoded_ok=self.decoded_ok, cache_ok=self.cache_ok, failures=self.failures[:20], ok=self.ok)
        if timing and self.runtime_ms is not None:
            out["runtime_ms"] = round(self.runtime_ms, 3)
        return out


def verify_roundtrip(mode, pda, seed=0, N=None, file_size=None, trials=1, demands=None, params=None):
    """Place, deliver and decode for every user; compare digests and rates.

    ``file_size`` is padded up to a multiple of the size unit; the padding is
    reported. ``demands`` (a list of vectors) overrides the random ones drawn
    from ``seed``. With ``params=(q, k, m, t)`` the rate is also checked
    against the closed form.
    """
    if mode not in ("broadcast", "d2d"):
        raise ValueError(f"unknown mode {mode!r}")
    start = time.perf_counter()
    N = pda.K if N is None else int(N)
    unit = size_unit(pda, mode)
    requested = unit if file_size is None else int(file_size)
    size = max(unit, -(-requested // unit) * unit)
    lib = FileLibrary(N, size, seed)
    cache = place(pda, lib)
    budget = Fraction(pda.Z or 0, pda.F) * N * size if pda.Z is not None else None
    cache_ok = budget is not None and all(cache.bytes_used(k) <= budget for k in range(pda.K))
    rng = np.random.default_rng(seed + 1)
    if demands is None:
        demand_list = [rng.integers(0, N, size=pda.K) for _ in range(trials)]
    else:
        demand_list = [np.asarray(x) for x in demands]
    groups = pda.grouped_positions()
    failures, rate, user_rates = [], None, None
    for trial, d in enumerate(demand_list):
        if mode == "broadcast":
            log = deliver_broadcast(pda, lib, d)
            decode = decode_broadcast
        else:
            log = deliver_d2d(pda, cache, d, N)
            decode = decode_d2d
        r = log.rate
        if rate is not None and r != rate:
            failures.append({"trial": trial, "reason": "rate depends on demands"})
        rate = r
        user_rates = log.per_user_rates(pda.K)
        for k in range(pda.K):
            try:
                got = decode(k, pda, cache, log, groups)
            except DecodeFailure as exc:
                failures.append({"trial": trial, "user": k, "subfile": exc.subfile, "reason": str(exc)})
                continue
            if _digest(got) != lib.digests[int(log.demands[k])]:
                failures.append({"trial": trial, "user": k, "reason": "digest mismatch"})
    closed = None
    source = {"source": pda.meta.get("source", "pda")}
    if params is not None:
        from .scheme import d2d_params, scheme_params

        q, k, m, t = params
        source = dict(q=q, k=k, m=m, t=t)
        closed = scheme_params(q, k, m, t).rate if mode == "broadcast" else d2d_params(q, k, m, t).rate_D
    elapsed = (time.perf_counter() - start) * 1000
    return SimulationReport(
        mode=mode, source=source, K=pda.K, F=pda.F, S=pda.S, g=pda.g if pda.g is not None else "irregular",
        N=N, file_size=size, padding=size - requested if requested <= size else 0, seed=seed,
        trials=len(demand_list), measured_rate=rate, formula_rate=formula_rate(pda, mode) if mode == "broadcast" or pda.g else None,
        closed_form_rate=closed, per_user_rates=user_rates, decoded_ok=not failures, failures=failures,
        cache_ok=cache_ok, runtime_ms=elapsed,
    )
