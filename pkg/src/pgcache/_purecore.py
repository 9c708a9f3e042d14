"""Pure-Python elimination kernels over F_q.

Mirror of ``_fastcore.pyx``. Field arithmetic is passed in as lookup tables
indexable as ``add[a][b]``, ``mul[a][b]``, ``neg[a]``, ``inv[a]``.
"""


def _eliminate(rows, ncols, add, mul, neg, inv, full=True):
    # in place; returns pivot columns
    rank = 0
    pivots = []
    nrows = len(rows)
    for col in range(ncols):
        if rank == nrows:
            break
        piv = -1
        for i in range(rank, nrows):
            if rows[i][col]:
                piv = i
                break
        if piv < 0:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        prow = rows[rank]
        lead = prow[col]
        if lead != 1:
            s = inv[lead]
            ms = mul[s]
            prow = [ms[x] for x in prow]
            rows[rank] = prow
        start = 0 if full else rank + 1
        for i in range(start, nrows):
            if i == rank:
                continue
            row = rows[i]
            f = row[col]
            if f:
                nf = neg[f]
                mf = mul[nf]
                rows[i] = [add[x][mf[y]] for x, y in zip(row, prow)]
        pivots.append(col)
        rank += 1
    return pivots


def rref(rows, ncols, add, mul, neg, inv):
    work = [list(r) for r in rows]
    pivots = _eliminate(work, ncols, add, mul, neg, inv)
    return [tuple(r) for r in work[: len(pivots)]], pivots


def _reduce(row, basis, pivots, add, mul, neg):
    for prow, col in zip(basis, pivots):
        f = row[col]
        if f:
            mf = mul[neg[f]]
            row = [add[x][mf[y]] for x, y in zip(row, prow)]
    return row


def stacked_ranks(prefix, blocks, ncols, add, mul, neg, inv):
    """rank([prefix; block]) for every block in ``blocks``."""
    basis, pivots = rref(prefix, ncols, add, mul, neg, inv)
    base = len(pivots)
    out = []
    for block in blocks:
        reduced = []
        for row in block:
            r = _reduce(list(row), basis, pivots, add, mul, neg)
            if any(r):
                reduced.append(r)
        if len(reduced) <= 1:
            out.append(base + len(reduced))
        else:
            out.append(base + len(_eliminate(reduced, ncols, add, mul, neg, inv, full=False)))
    return out
