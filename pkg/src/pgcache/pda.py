"""Placement delivery arrays: model, validation, construction from a line graph, file I/O.

An F x K array (rows = subfiles, columns = users) over {*} and integers
1..S. In memory ``*`` is stored as 0.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidInput, ParseError
from .linegraph import check_cover

STAR = 0
_MAX_REPORTED = 20


@dataclass
class PDA:
    entries: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.int64)
        if self.entries.ndim != 2:
            raise InvalidInput("PDA entries must form a 2-d array")
        if (self.entries < 0).any():
            raise InvalidInput("PDA integers must be positive")

    @property
    def F(self):
        return self.entries.shape[0]

    @property
    def K(self):
        return self.entries.shape[1]

    @property
    def S(self):
        return int(self.entries.max()) if self.entries.size else 0

    @property
    def Z(self):
        stars = (self.entries == STAR).sum(axis=0)
        return int(stars[0]) if len(stars) and (stars == stars[0]).all() else None

    @property
    def g(self):
        counts = self.label_counts()
        return int(counts[0]) if len(counts) and (counts == counts[0]).all() and counts[0] > 0 else None

    def label_counts(self):
        return np.bincount(self.entries.ravel(), minlength=self.S + 1)[1:]

    @property
    def memory_ratio(self):
        z = self.Z
        return None if z is None else Fraction(z, self.F)

    def positions(self, s):
        """(row, col) pairs holding integer ``s``, row-major order."""
        return [(int(r), int(c)) for r, c in np.argwhere(self.entries == s)]

    def grouped_positions(self):
        """Dict s -> list of (row, col), built in one pass."""
        flat = self.entries.ravel()
        idx = np.flatnonzero(flat)
        order = np.argsort(flat[idx], kind="stable")
        idx = idx[order]
        labels = flat[idx]
        rows, cols = np.divmod(idx, self.K)
        out = {}
        for s, r, c in zip(labels.tolist(), rows.tolist(), cols.tolist()):
            out.setdefault(s, []).append((r, c))
        return out

    def copy(self):
        return PDA(self.entries.copy(), dict(self.meta))

    def __eq__(self, other):
        return isinstance(other, PDA) and self.entries.shape == other.entries.shape and bool(
            (self.entries == other.entries).all()
        )


@dataclass
class PdaReport:
    checks: dict
    K: int
    F: int
    Z: int | None
    S: int
    g: object
    violations: dict

    @property
    def ok(self):
        return all(self.checks.values())

    def to_dict(self):
        return {
            "ok": self.ok,
            "checks": dict(self.checks),
            "K": self.K, "F": self.F, "Z": self.Z, "S": self.S, "g": self.g,
            "violations": {k: [list(map(int, p)) for p in v] for k, v in self.violations.items()},
        }


def validate_pda(A):
    """Check C1 (equal stars per column), C2 (every label 1..S used), C3 (label placement).

    Offending coordinates are 0-based (row, col) and capped at 20 per check.
    """
    E = A.entries
    F, K = E.shape
    viol = {}
    stars = (E == STAR).sum(axis=0)
    c1 = K > 0 and bool((stars == stars[0]).all())
    if not c1 and K > 0:
        mode = np.bincount(stars).argmax()
        viol["C1"] = [(-1, int(c)) for c in np.flatnonzero(stars != mode)][:_MAX_REPORTED]
    S = A.S
    counts = A.label_counts()
    c2 = S >= 1 and bool((counts > 0).all())
    if not c2:
        viol["C2"] = [(-1, int(s) + 1) for s in np.flatnonzero(counts == 0)][:_MAX_REPORTED] or [(-1, 0)]
    c31, c32 = [], []
    if S >= 1:
        _c3_check(E, counts, c31, c32)
    checks = {"C1": c1, "C2": c2, "C3_1": not c31, "C3_2": not c32}
    if c31:
        viol["C3_1"] = c31[:_MAX_REPORTED]
    if c32:
        viol["C3_2"] = c32[:_MAX_REPORTED]
    g = A.g
    return PdaReport(checks, K, F, A.Z, S, g if g is not None else "irregular", viol)


def _c3_check(E, counts, c31, c32):
    """Vectorised C3 over label groups padded to the largest group size."""
    flat = E.ravel()
    idx = np.flatnonzero(flat)
    idx = idx[np.argsort(flat[idx], kind="stable")]
    g = int(counts.max())
    S = len(counts)
    if S * g * g > 20_000_000:
        _c3_by_group(E, idx, counts, c31, c32)
        return
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    slot = np.arange(len(idx)) - np.repeat(starts, counts)
    label = np.repeat(np.arange(S), counts)
    R = np.full((S, g), -1, dtype=np.int64)
    C = np.full((S, g), -1, dtype=np.int64)
    R[label, slot], C[label, slot] = np.divmod(idx, E.shape[1])
    valid = R >= 0
    pair = valid[:, :, None] & valid[:, None, :] & ~np.eye(g, dtype=bool)
    same = ((R[:, :, None] == R[:, None, :]) | (C[:, :, None] == C[:, None, :])) & pair
    if same.any():
        upper = np.arange(g)[:, None] < np.arange(g)[None, :]
        for s, i, j in np.argwhere(same & upper)[:_MAX_REPORTED]:
            c31.append((int(R[s, j]), int(C[s, j])))
    cross = (E[np.maximum(R, 0)[:, :, None], np.maximum(C, 0)[:, None, :]] != STAR) & pair & ~same
    if cross.any():
        for s, i, j in np.argwhere(cross)[:_MAX_REPORTED]:
            c32.append((int(R[s, i]), int(C[s, j])))


def _c3_by_group(E, idx, counts, c31, c32):
    """One label at a time on the submatrix spanned by its rows and columns.

    A non-star cell (r, k) there is a crossing of two equal labels exactly when
    row r holds the label outside column k and column k holds it outside row r.
    """
    K = E.shape[1]
    bounds = np.concatenate(([0], np.cumsum(counts)))
    for a, b in zip(bounds[:-1], bounds[1:]):
        R, C = np.divmod(idx[a:b], K)
        rows, ri = np.unique(R, return_inverse=True)
        cols, ci = np.unique(C, return_inverse=True)
        member = np.zeros((len(rows), len(cols)), dtype=bool)
        member[ri, ci] = True
        rcnt, ccnt = member.sum(axis=1), member.sum(axis=0)
        if len(c31) < _MAX_REPORTED:
            dup = (rcnt[ri] > 1) | (ccnt[ci] > 1)
            c31.extend((int(r), int(c)) for r, c in zip(R[dup], C[dup]))
            del c31[_MAX_REPORTED:]
        filled = E[np.ix_(rows, cols)] != STAR
        other_r = (rcnt[:, None] - member) > 0
        other_c = (ccnt[None, :] - member) > 0
        bad = filled & other_r & other_c
        if len(c32) < _MAX_REPORTED:
            c32.extend((int(rows[i]), int(cols[j])) for i, j in np.argwhere(bad)[:_MAX_REPORTED])
            del c32[_MAX_REPORTED:]


def line_graph_to_pda(L, cover):
    """a[f, k] = * when (k, f) is not a vertex, else the 1-based index of its clique."""
    check_cover(L, cover)
    E = np.zeros((L.F, L.K), dtype=np.int64)
    for s, clique in enumerate(cover.cliques, start=1):
        for u, f in clique:
            E[f, u] = s
    meta = {}
    if L.params is not None:
        meta.update(zip("qkmt", L.params))
    A = PDA(E, meta)
    meta.update(K=A.K, F=A.F, Z=A.Z, S=A.S, g=A.g)
    return A


# -- file formats -------------------------------------------------------------


def dumps_csv(A):
    buf = io.StringIO()
    buf.write(f"{A.K},{A.F}\n")
    for row in A.entries:
        buf.write(",".join("*" if x == STAR else str(int(x)) for x in row))
        buf.write("\n")
    return buf.getvalue()


def loads_csv(text):
    lines = [ln for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("empty PDA file", line=1)
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    if len(header) != 2 or not all(h.isdigit() and int(h) > 0 for h in header):
        raise ParseError("header must be 'K,F' with positive integers", line=1)
    K, F = map(int, header)
    if len(rows) - 1 != F:
        raise ParseError(f"expected {F} rows, found {len(rows) - 1}", line=len(rows))
    E = np.zeros((F, K), dtype=np.int64)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != K:
            raise ParseError(f"expected {K} entries, found {len(row)}", line=i)
        for j, cell in enumerate(row, start=1):
            cell = cell.strip()
            if cell == "*":
                continue
            if not cell.isdigit():
                raise ParseError(f"entry {cell!r} is neither '*' nor a positive integer", line=i, column=j)
            v = int(cell)
            if v < 1:
                raise ParseError("integer entries are 1-based", line=i, column=j)
            E[i - 2, j - 1] = v
    return PDA(E)


def pda_to_json(A):
    out = {key: A.meta[key] for key in "qkmt" if key in A.meta}
    out.update(K=A.K, F=A.F, Z=A.Z, S=A.S, g=A.g)
    out["entries"] = [["*" if x == STAR else int(x) for x in row] for row in A.entries]
    return out


def pda_from_json(data):
    try:
        rows = data["entries"]
    except (KeyError, TypeError):
        raise ParseError("JSON PDA needs an 'entries' array") from None
    K = len(rows[0]) if rows else 0
    E = np.zeros((len(rows), K), dtype=np.int64)
    for i, row in enumerate(rows, start=1):
        if len(row) != K:
            raise ParseError(f"expected {K} entries, found {len(row)}", line=i)
        for j, cell in enumerate(row, start=1):
            if cell == "*":
                continue
            if not isinstance(cell, int) or isinstance(cell, bool) or cell < 1:
                raise ParseError(f"entry {cell!r} is neither '*' nor a positive integer", line=i, column=j)
            E[i - 1, j - 1] = cell
    return PDA(E, {key: data[key] for key in "qkmt" if key in data})


def save_pda(A, path):
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(pda_to_json(A), separators=(",", ":")) + "\n")
    else:
        path.write_text(dumps_csv(A))


def load_pda(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
        return pda_from_json(data)
    return loads_csv(text)


def example_pda():
    """The 2-(4, 4, 2, 4) array of the four-user illustration."""
    from .linegraph import example_graph

    L, cover = example_graph()
    return line_graph_to_pda(L, cover)
