"""Command-line front end.

Exit codes: 0 success, 2 unparsable input or usage, 3 dimension mismatch,
4 unsupported construction, 5 numeric or precondition failure.

Randomness: every subcommand takes one ``--seed``. Classification of the
i-th requested cone uses the child stream ``(seed, 0, i)``; the Schoenberg
check uses ``(seed, 1, 0)`` for the generator-side search and
``(seed, 1, 1, j)`` at the j-th grid time. Child streams are
``SeedSequence(seed, spawn_key=path)`` feeding a Philox generator.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from mapcones import cones, family4, generators
from mapcones import numerics as nm
from mapcones import serialize as ser
from mapcones.errors import DimensionError, MapconesError, SchemaError, UnsupportedError

CSV_SCHEMA_VERSION = 1
GENERIC_COLUMNS = ("t", "min_choi_eig", "ppt_min_eig", "cp", "ppt", "eb")

EXIT_OK, EXIT_PARSE, EXIT_DIM, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _read_json(path):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None
    return ser.loads(text, path)


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _finite(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _grid(args):
    if args.steps < 1:
        raise SchemaError("--steps must be at least 1")
    if args.scale == "log":
        if not 0 < args.t0 < args.t1:
            raise SchemaError("log grid needs 0 < t0 < t1")
        return np.geomspace(args.t0, args.t1, args.steps)
    if not 0 <= args.t0 <= args.t1:
        raise SchemaError("linear grid needs 0 <= t0 <= t1")
    return np.linspace(args.t0, args.t1, args.steps)


def _parse_cones(text, n):
    out = []
    for raw in text.split(","):
        label = raw.strip().lower()
        if label in ("cp", "ppt", "eb"):
            out.append((label, None))
        elif label.startswith("p") and label[1:].isdigit():
            k = int(label[1:])
            if not 1 <= k <= n:
                raise DimensionError(f"cone {label}: k must be between 1 and n={n}")
            out.append((label, k))
        else:
            raise SchemaError(f"unknown cone {raw!r}; use cp, ppt, eb or p<k>")
    return out


def _verdict(S, label, k, args, rng):
    if label == "cp":
        return cones.is_cp(S, args.tol)
    if label == "ppt":
        return cones.is_ppt(S, args.tol)
    if label == "eb":
        return cones.is_eb(S, args.tol)
    return cones.is_k_positive_witnessed(S, k, samples=args.samples, seed=rng, tol=args.tol)


def _diagnostics(S):
    I = np.eye(S.n)
    scale = 1.0 + float(np.max(np.abs(S.choi)))
    unital = float(np.max(np.abs(S(I) - I))) <= 1e-10 * scale
    # trace preserving: Tr S(E_jk) = delta_jk
    tr = np.einsum("jaka->jk", S.choi.reshape(S.n, S.n, S.n, S.n))
    tp = float(np.max(np.abs(tr - I))) <= 1e-10 * scale
    return {"hermitian_preserving": S.is_hermitian_preserving, "unital": unital, "trace_preserving": tp}


# -- subcommands ---------------------------------------------------------------

def cmd_classify(args):
    S = ser.map_from_json(_read_json(args.input))
    requested = _parse_cones(args.cones, S.n)
    diag = _diagnostics(S)
    verdicts = []
    cp = None
    for i, (label, k) in enumerate(requested):
        v = _verdict(S, label, k, args, nm.child_rng(args.seed, 0, i))
        if label == "cp":
            cp = v
        verdicts.append((label, v))
    # membership in CP implies membership in every P_k
    if cp is None and any(k is not None for _, k in requested):
        cp = cones.is_cp(S, args.tol)
    report = []
    for label, v in verdicts:
        if v.k is not None and v.status == cones.NO_WITNESS and cp is not None and cp.is_member:
            v = v.relabel(v.cone, status=cones.MEMBER, note="implied by complete positivity")
        d = v.to_dict()
        d = {"label": label, **d}
        d["margin"] = _finite(d["margin"])
        report.append(d)
    _write(_dump({"n": S.n, "diagnostics": diag, "verdicts": report}), args.out)
    return EXIT_OK


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def _generic_rows(S, ts, tol):
    rows = []
    for t in ts:
        E = generators.evolve(S, float(t))
        C = 0.5 * (E.choi + E.choi.conj().T)
        mc = float(nm.eigvalsh(C)[0])
        mp = float(nm.eigvalsh(nm.partial_transpose(C))[0])
        cp = cones.is_cp(E, tol).is_member
        ppt = cones.is_ppt(E, tol).is_member
        rows.append({"t": float(t), "min_choi_eig": mc, "ppt_min_eig": mp, "cp": cp, "ppt": ppt,
                     "eb": ppt if S.n == 2 else None})
    return rows


def cmd_evolve(args):
    S, fam = ser.generator_from_json(_read_json(args.input))
    ts = _grid(args)
    if fam is not None:
        rows, columns = family4.trajectory(fam, ts), family4.TRAJECTORY_COLUMNS
    else:
        rows, columns = _generic_rows(S, ts, args.tol), GENERIC_COLUMNS
    if args.format == "json":
        out = {"schema": CSV_SCHEMA_VERSION, "columns": list(columns),
               "rows": [[r[c] for c in columns] for r in rows]}
        _write(_dump(out), args.out)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_entry_time(args):
    S, fam = ser.generator_from_json(_read_json(args.input))
    if fam is None:
        raise UnsupportedError("entry-time needs a family generator ({\"rep\": \"family\", ...})")
    labels = [c.strip().upper() for c in args.cones.split(",")]
    results = []
    for label in labels:
        if label not in ("CP", "PPT", "EB"):
            raise SchemaError(f"entry-time supports cp, ppt, eb; got {label.lower()!r}")
        if label == "EB" and fam.n != 2:
            raise UnsupportedError("exact EB entry times are available only for n = 2")
        tol = args.tol if args.tol is not None else family4.BISECT_TOL
        r = family4.entry_time(fam, label, bracket=(args.t0, args.t1), tol=tol)
        d = r.to_dict()
        d["residual"] = _finite(d["residual"])
        if r.closed_form is not None and r.bisection is not None:
            d["delta"] = abs(r.closed_form - r.bisection)
        results.append(d)
    _write(_dump({"n": fam.n, "generator": list(fam.coeffs), "results": results}), args.out)
    return EXIT_OK


def cmd_gksl(args):
    doc = _read_json(args.input)
    if args.action == "build":
        g = ser.gksl_from_json(doc)
        S = generators.build_gksl(g)
        out = ser.map_to_json(S)
        out["diagnostics"] = {
            "unit_defect": float(np.max(np.abs(S(np.eye(S.n))))),
            "cp_generator": generators.is_cp_generator(S),
        }
    else:
        S, _ = ser.generator_from_json(doc)
        g = generators.gksl_decompose(S)
        out = ser.gksl_to_json(g)
        out["roundtrip_residual"] = generators.action_residual(generators.build_gksl(g), S)
    _write(_dump(out), args.out)
    return EXIT_OK


def _idempotent(arg, n):
    if arg in ("Id", "P", "D", "T"):
        return ser.named_or_map(arg, n)
    return ser.named_or_map(_read_json(arg), n)


def cmd_schoenberg(args):
    S, _ = ser.generator_from_json(_read_json(args.input))
    n = S.n
    T0 = _idempotent(args.idempotent, n)
    if T0.n != n:
        raise DimensionError(f"idempotent acts on M_{T0.n}, generator on M_{n}")
    pair = generators.IdempotentPair(T0, S)
    requested = _parse_cones(args.cones, n)
    if len(requested) != 1:
        raise SchemaError("schoenberg takes exactly one cone")
    (label, k), = requested
    if label in ("ppt", "eb"):
        raise UnsupportedError(f"no sampled dual description for cone {label}; use cp or p<k>")
    k = n if label == "cp" else k
    exact = k == n
    cond = generators.conditional_positivity(pair, k, samples=args.samples,
                                             seed=nm.child_rng(args.seed, 1, 0), tol=args.tol)
    starts = () if cond.witness is None else (cond.witness,)
    ts = _grid(args)
    hit_t, hit = None, None
    for j, t in enumerate(ts):
        E = generators.exp_idempotent(pair, float(t))
        if exact:
            v = cones.is_cp(E, args.tol)
        else:
            v = cones.is_k_positive_witnessed(E, k, samples=args.samples, seed=nm.child_rng(args.seed, 1, 1, j),
                                              tol=args.tol, starts=starts)
        if v.is_violated:
            hit_t, hit = float(t), v
            break
    grid_violated = hit is not None
    if cond.is_violated == grid_violated:
        agreement = "agree"
    else:
        agreement = "DISAGREE" if exact else "inconclusive"
    out = {
        "n": n,
        "cone": label,
        "k": k,
        "idempotent": args.idempotent,
        "exact": exact,
        "conditional": cond.to_dict(),
        "grid": {
            "t0": args.t0, "t1": args.t1, "steps": args.steps, "scale": args.scale,
            "status": cones.NOT_MEMBER if grid_violated else (cones.MEMBER if exact else cones.NO_WITNESS),
            "first_violation_t": hit_t,
            "verdict": None if hit is None else hit.to_dict(),
        },
        "agreement": agreement,
    }
    if exact and label == "cp" and args.idempotent == "Id":
        out["cp_generator"] = generators.is_cp_generator(S, args.tol)
    if agreement != "agree":
        print(f"WARNING: generator test and grid test {agreement}", file=sys.stderr)
    _write(_dump(out), args.out)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def _common(p, cones_default=None, grid=False):
    p.add_argument("--input", required=True, help="JSON input file, or - for stdin")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--tol", type=float, default=nm.PSD_TOL)
    if cones_default is not None:
        p.add_argument("--cones", default=cones_default)
    if grid:
        p.add_argument("--t0", type=float, default=1e-2)
        p.add_argument("--t1", type=float, default=10.0)
        p.add_argument("--steps", type=int, default=100)
        p.add_argument("--scale", choices=("linear", "log"), default="log")


def build_parser():
    parser = _Parser(prog="mapcones", description="Cone membership of linear maps on M_n and their semigroups.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="cone verdicts for a map")
    _common(p, cones_default="cp,ppt,eb")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evolve", help="trajectory of exp(tL) on a time grid")
    _common(p, grid=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("entry-time", help="entry time of a family semigroup into a cone")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--cones", default="cp")
    p.add_argument("--t0", type=float, default=family4.DEFAULT_BRACKET[0])
    p.add_argument("--t1", type=float, default=family4.DEFAULT_BRACKET[1])
    p.add_argument("--tol", type=float, default=None, help="bisection width (default 1e-10)")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_entry_time)

    p = sub.add_parser("gksl", help="build or decompose a GKSL generator")
    p.add_argument("action", choices=("build", "decompose"))
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_gksl)

    p = sub.add_parser("schoenberg", help="conditional positivity versus the evolved semigroup")
    _common(p, cones_default="cp", grid=True)
    p.add_argument("--idempotent", default="Id", help="Id, P, D, T or a JSON map file")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_schoenberg)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionError as e:
        print(f"dimension error: {e}", file=sys.stderr)
        return EXIT_DIM
    except UnsupportedError as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except MapconesError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
