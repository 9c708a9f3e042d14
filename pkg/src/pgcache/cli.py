"""Command-line interface: ``pgcache <command> ...``.

Exit status is 0 when every requested check passes, 1 when a verification
fails, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import linegraph as lg
from . import pda as pdamod
from . import scheme
from .errors import InstanceTooLarge, ParseError, PgCacheError
from .simulator import verify_roundtrip


class UsageError(Exception):
    pass


# -- output helpers -----------------------------------------------------------


def _default(o):
    if isinstance(o, Fraction):
        return str(o)
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False, default=_default) + "\n"


def rows_to_csv(rows):
    """Flatten a list of dicts (one level of nesting joined with '.') into CSV text."""
    flat = []
    for r in rows:
        f = {}
        for key, val in r.items():
            if isinstance(val, dict):
                for k2, v2 in val.items():
                    f[f"{key}.{k2}"] = v2
            else:
                f[key] = val
        flat.append(f)
    cols = []
    for f in flat:
        cols.extend(c for c in f if c not in cols)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for f in flat:
        w.writerow({c: ("" if f.get(c) is None else _cell(f.get(c))) for c in cols})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (list, tuple)):
        return " ".join(map(str, v))
    return str(v)


def emit(args, obj, rows=None):
    """Write JSON (or CSV of ``rows``) to ``args.output`` or stdout."""
    if getattr(args, "format", "json") == "csv":
        text = rows_to_csv(rows if rows is not None else [obj])
    else:
        text = dumps(obj)
    out = getattr(args, "output", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- shared argument groups -------------------------------------------------


def _add_params(p, required=True):
    p.add_argument("-q", type=int, required=required, help="field order (prime power)")
    p.add_argument("-k", type=int, required=required, help="ambient dimension")
    p.add_argument("-m", type=int, required=required)
    p.add_argument("-t", type=int, required=required)


def _add_output(p, formats=("json",)):
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    p.add_argument("--format", choices=formats, default="json")


def _add_source(p):
    _add_params(p, required=False)
    p.add_argument("--pda", help="PDA file (.csv or .json) instead of parameters")
    p.add_argument("--example", action="store_true", help="use the four-user example graph")
    p.add_argument("--max-vertices", type=int, help="instance cap (overrides PGCACHE_MAX_VERTICES)")


def _params_of(args):
    vals = (args.q, args.k, args.m, args.t)
    if all(v is None for v in vals):
        return None
    if any(v is None for v in vals):
        raise UsageError("give all of -q -k -m -t")
    return vals


def _source(args):
    """Resolve exactly one of --pda, --example, parameters."""
    params = _params_of(args)
    chosen = sum(x is not None and x is not False for x in (params, args.pda, args.example or None))
    if chosen != 1:
        raise UsageError("choose exactly one of -q/-k/-m/-t, --pda, --example")
    return params


def _construct(params, max_vertices=None):
    ctx = lg.build_geometry(*params, max_vertices=max_vertices)
    L = lg.build_line_graph(ctx, max_vertices=max_vertices)
    cover = lg.transmission_cover(ctx, L)
    return ctx, L, cover


# -- commands -------------------------------------------------------------------


def cmd_params(args):
    p = scheme.scheme_params(args.q, args.k, args.m, args.t)
    d = scheme.d2d_params(args.q, args.k, args.m, args.t)
    out = {"broadcast": p.to_dict(), "d2d": d.to_dict()}
    emit(args, out, rows=[{**p.to_dict(), **{k: v for k, v in d.to_dict().items() if k not in "qkmt"}}])
    return 0


def cmd_build(args):
    params = (args.q, args.k, args.m, args.t)
    ctx, L, cover = _construct(params, args.max_vertices)
    A = pdamod.line_graph_to_pda(L, cover)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = "pda_q{}_k{}_m{}_t{}".format(*params)
    pdamod.save_pda(A, outdir / f"{stem}.csv")
    pdamod.save_pda(A, outdir / f"{stem}.json")
    files = [f"{stem}.csv", f"{stem}.json"]
    if args.graph:
        (outdir / f"graph_q{params[0]}_k{params[1]}_m{params[2]}_t{params[3]}.json").write_text(
            json.dumps(lg.line_graph_to_json(ctx, L, cover), separators=(",", ":")) + "\n"
        )
        files.append("graph_q{}_k{}_m{}_t{}.json".format(*params))
    report = pdamod.validate_pda(A)
    summary = {
        "params": dict(zip("qkmt", params)),
        "K": A.K, "F": A.F, "Z": A.Z, "S": A.S, "g": A.g,
        "pda_valid": report.ok,
        "files": files,
    }
    sys.stdout.write(dumps(summary))
    return 0 if report.ok else 1


def _verify_params(params, max_vertices):
    ctx, L, cover = _construct(params, max_vertices)
    graph = lg.verify_caching_line_graph(L)
    A = pdamod.line_graph_to_pda(L, cover)
    rep = pdamod.validate_pda(A)
    sp = scheme.scheme_params(*params)
    cross = {
        "K": A.K == sp.K,
        "F": A.F == sp.F,
        "Z": A.Z == sp.F - sp.D,
        "S": A.S == sp.S,
        "g": A.g == sp.gain,
        "cache_fraction": Fraction(A.Z, A.F) == sp.cache_fraction,
        "rate": Fraction(A.S, A.F) == sp.rate,
    }
    out = {
        "params": dict(zip("qkmt", params)),
        "line_graph": graph.to_dict(),
        "pda": rep.to_dict(),
        "closed_forms": cross,
    }
    out["ok"] = graph.ok and rep.ok and all(cross.values())
    return out


def cmd_verify(args):
    params = _source(args)
    if params is not None:
        out = _verify_params(params, args.max_vertices)
    else:
        if args.example:
            L, cover = lg.example_graph()
            graph = lg.verify_caching_line_graph(L)
            A = pdamod.line_graph_to_pda(L, cover)
            out = {"source": "example", "line_graph": graph.to_dict()}
        else:
            A = pdamod.load_pda(args.pda)
            graph = None
            out = {"source": str(args.pda)}
        rep = pdamod.validate_pda(A)
        out["pda"] = rep.to_dict()
        out["ok"] = rep.ok and (graph is None or graph.ok)
    emit(args, out)
    return 0 if out["ok"] else 1


def cmd_simulate(args):
    params = _source(args)
    if params is not None:
        _, L, cover = _construct(params, args.max_vertices)
        A = pdamod.line_graph_to_pda(L, cover)
    elif args.example:
        A = pdamod.example_pda()
        A.meta["source"] = "example"
    else:
        A = pdamod.load_pda(args.pda)
        A.meta["source"] = Path(args.pda).name
    rep = pdamod.validate_pda(A)
    if not rep.ok:
        emit(args, {"ok": False, "pda": rep.to_dict()})
        return 1
    sim = verify_roundtrip(
        args.mode, A, seed=args.seed, N=args.files, file_size=args.file_size, trials=args.trials, params=params
    )
    emit(args, sim.to_dict(timing=args.timing))
    return 0 if sim.ok else 1


def _table_record(which, r):
    out = {"ours": r["ours"].to_dict()}
    if which == 1:
        out["prior_linegraph"] = r["prior_linegraph"]
        out["yctcpda"] = r["yctcpda"].to_dict()
    else:
        out["hypercube"] = r["hypercube"].to_dict()
        out["man_d2d"] = r["man_d2d"].to_dict()
    out["quoted"] = r["quoted"]
    return out


def _display(row):
    """Columns as the printed tables show them: K, U to 2 places, F exact below 10^6 else 10^x, gain, rate."""
    d = {"K": row.K, "U": f"{float(row.uncached):.2f}"}
    small = not isinstance(row.F, float) and row.F < 10**6
    d["F"] = str(int(row.F)) if small else f"10^{row.F_pow10}"
    if row.gain is not None:
        d["gain"] = f"{float(row.gain):g}"
    d["R"] = f"{float(row.rate):.2f}".rstrip("0").rstrip(".")
    return d


def cmd_table(args):
    rows = scheme.table_rows(args.which)
    records = [_table_record(args.which, r) for r in rows]
    cols = ("ours", "prior_linegraph", "yctcpda") if args.which == 1 else ("ours", "hypercube", "man_d2d")
    flat = []
    for r in rows:
        line = {}
        for i, name in enumerate(cols, start=1):
            v = r[name]
            disp = _display(v) if isinstance(v, scheme.ComparisonRow) else {k: str(x) for k, x in v.items()}
            for key, val in disp.items():
                line[f"{key}{i}"] = val
        flat.append(line)
    emit(args, {"table": args.which, "columns": list(cols), "display": flat, "rows": records}, rows=flat)
    return 0


def cmd_bounds(args):
    if args.k_range:
        if args.q is None or args.t is None or args.alpha is None:
            raise UsageError("--k-range needs -q, -t and --alpha")
        grid = [(args.q, k, k - args.t - args.alpha, args.t) for k in range(args.k_range[0], args.k_range[1] + 1)]
    else:
        params = _params_of(args)
        if params is None:
            raise UsageError("give -q -k -m -t or --k-range with --alpha")
        grid = [params]
    reports = [scheme.bound_report(*p).to_dict() for p in grid]
    lo, hi = args.band
    for r in reports:
        r["rate_ratio_in_band"] = lo <= r["rate_ratio"] <= hi
    ok = all(r["ok"] and r["rate_ratio_in_band"] for r in reports)
    emit(args, {"band": [lo, hi], "reports": reports, "ok": ok}, rows=reports)
    return 0 if ok else 1


def cmd_sweep(args):
    if (args.target_users is None) != (args.target_memory is None):
        raise UsageError("--target-users and --target-memory go together")
    if args.target_users is not None:
        best = scheme.select_parameters(args.target_users, Fraction(args.target_memory), tuple(args.qs), args.k_max)
        out = {"target": {"K": args.target_users, "M/N": args.target_memory},
               "selected": None if best is None else best.to_dict()}
        emit(args, out, rows=[out["selected"] or {}])
        return 0 if best is not None else 1
    rows = [scheme.scheme_params(*p).to_dict() for p in scheme.iter_parameter_grid(tuple(args.qs), args.k_max)]
    emit(args, {"rows": rows}, rows=rows)
    return 0


# -- parser -----------------------------------------------------------------------


def _fraction(text):
    try:
        return str(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from None


def build_parser():
    ap = argparse.ArgumentParser(prog="pgcache", description="Projective-geometry coded caching toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="closed-form broadcast and D2D parameters")
    _add_params(p)
    _add_output(p, ("json", "csv"))
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("build", help="construct the line graph and write PDA files")
    _add_params(p)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--graph", action="store_true", help="also write the line graph as JSON")
    p.add_argument("--max-vertices", type=int)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="check line-graph and PDA conditions")
    _add_source(p)
    _add_output(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="byte-level placement, delivery and decoding")
    _add_source(p)
    p.add_argument("--mode", choices=("broadcast", "d2d"), default="broadcast")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--files", type=int, help="library size N (default: K)")
    p.add_argument("--file-size", type=int, help="bytes per file, padded up to a valid multiple")
    p.add_argument("--trials", type=int, default=1, help="number of random demand vectors")
    p.add_argument("--timing", action="store_true", help="include runtime_ms in the report")
    _add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", help="comparison table columns")
    p.add_argument("--which", type=int, choices=(1, 2), required=True)
    _add_output(p, ("json", "csv"))
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("bounds", help="cache, dimension, subpacketization and rate bounds")
    _add_params(p, required=False)
    p.add_argument("--alpha", type=int, help="k - m - t, used with --k-range")
    p.add_argument("--k-range", type=int, nargs=2, metavar=("KMIN", "KMAX"))
    p.add_argument("--band", type=float, nargs=2, default=(1.0, 8.0), metavar=("LO", "HI"),
                   help="accepted window for R (log_q 2K)^2 / K")
    _add_output(p, ("json", "csv"))
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="parameter grid or target selection")
    p.add_argument("--qs", type=int, nargs="+", default=[2, 3, 4, 5, 7, 8, 9])
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--target-users", type=int)
    p.add_argument("--target-memory", type=_fraction, help="target M/N, e.g. 1/2")
    _add_output(p, ("json", "csv"))
    p.set_defaults(func=cmd_sweep)
    return ap


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"pgcache: error: {exc}\n")
        return 2
    except (ParseError, InstanceTooLarge, PgCacheError, OSError) as exc:
        sys.stderr.write(f"pgcache: error: {exc}\n")
        return 2


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
