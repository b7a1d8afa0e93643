"""Command-line entry point.

Subcommands:

* ``check <model>`` — run the full refinement loop to a verdict.  The
  process exit code carries the verdict for scripts: 0 safe, 1 unsafe,
  2 unknown.  A human-readable report goes to stdout (``--json`` swaps
  in a machine-readable one); progress logging goes to stderr.
* ``encode <model>`` — emit one schema's Horn encoding as SMT-LIB.
* ``oracle <model>`` — bounded concrete exploration of a finite
  instantiation; exit 1 when an error trace is found, 0 otherwise.
* ``print <model>`` — parse and pretty-print the canonical model text.

Exit codes 64 and up are reserved for failures: 64 usage, 65 invalid
model (parse or validation error), 66 missing input file, 70 internal
error.

Configuration: a ``tachorn.toml`` file (current directory, or the path
in ``--config``) can set ``solver-cmd``, ``timeout``, ``cap``,
``symmetry``, ``body``, ``clocks``, ``locations``, ``n-max`` and
``depth`` as ``key = value`` lines.  Command-line flags beat the config
file; the config file beats the ``TACHORN_SOLVER`` environment
variable; the environment beats autodetection (a ``z3`` binary on
PATH, then the bundled node driver).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .encoder import EncodingConfig, EncodingError, AGES, BODY_ALL, \
    BODY_CONTEXT, FULL, INLINE, SPLIT, TIMESTAMPS, TRANSPOSITIONS
from .engine import (CheckConfig, EngineError, Safe, Unknown, Unsafe, check,
                     encode_for_schema, prepared_model)
from .frontend import ParseError, parse_file, print_model
from .hornir import to_smtlib
from .model import DENSE, DISCRETE
from .oracle import (Bounds, OracleError, Reachable, explore, render_trace,
                     trace_report)
from .schema import InvariantSchema, SchemaError
from .solver import SolverConfig, discover_solver_command

log = logging.getLogger("tachorn")

EXIT_SAFE = 0
EXIT_UNSAFE = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64
EXIT_INVALID_MODEL = 65
EXIT_NO_INPUT = 66
EXIT_INTERNAL = 70


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tachorn",
                description="Safety checking for networks of replicated "
                            "timed processes via Horn-clause encodings.")
    p.add_argument("-v", "--verbose", action="count", default=0,
                   help="log more (-v info, -vv debug) to stderr")
    p.add_argument("--config", default=None,
                   help="config file (default: ./tachorn.toml if present)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("model", help="model file (.tan)")
        sp.add_argument("--time-model", choices=[DISCRETE, DENSE],
                        default=None,
                        help="override the model's declared time model")

    c = sub.add_parser("check", parents=[], help="run the refinement loop")
    common(c)
    c.add_argument("--solver-cmd", default=None,
                   help="solver command template; {script} and {timeout_ms} "
                        "are substituted")
    c.add_argument("--timeout", type=float, default=None,
                   help="per-solver-call timeout in seconds (default 120)")
    c.add_argument("--cap", type=int, default=None,
                   help="schema growth cap: max entry sum of a vector "
                        "(default 6)")
    c.add_argument("--symmetry", choices=[FULL, TRANSPOSITIONS], default=None,
                   help="symmetry clause set (default transpositions)")
    c.add_argument("--body", choices=[BODY_CONTEXT, BODY_ALL], default=None,
                   help="invariant literals per clause body (default "
                        "context)")
    c.add_argument("--clocks", choices=[AGES, TIMESTAMPS], default=None,
                   help="clock basis in relation arguments (default ages)")
    c.add_argument("--locations", choices=[SPLIT, INLINE], default=None,
                   help="specialize relations by finite-control locals "
                        "(default split)")
    c.add_argument("--n-max", type=int, default=None,
                   help="largest replicated count the genuineness sweep "
                        "explores (default 4)")
    c.add_argument("--depth", type=int, default=None,
                   help="genuineness sweep depth bound (default 40)")
    c.add_argument("--artifacts", default=None, metavar="DIR",
                   help="keep every emitted solver script in DIR")
    c.add_argument("--portfolio", action="store_true",
                   help="overlap the next schema's solver run with the "
                        "current one")
    c.add_argument("--json", action="store_true",
                   help="machine-readable run report on stdout")

    e = sub.add_parser("encode", help="emit one schema's Horn encoding")
    common(e)
    g = e.add_mutually_exclusive_group()
    g.add_argument("--schema", default=None,
                   help="schema vectors: entries comma-separated, vectors "
                        "semicolon-separated, e.g. '1,0;0,2'")
    g.add_argument("--k", type=int, default=None,
                   help="shorthand for the single-vector schema (k) of a "
                        "one-template model")
    e.add_argument("--symmetry", choices=[FULL, TRANSPOSITIONS],
                   default=None)
    e.add_argument("--body", choices=[BODY_CONTEXT, BODY_ALL], default=None)
    e.add_argument("--clocks", choices=[AGES, TIMESTAMPS], default=None)
    e.add_argument("--locations", choices=[SPLIT, INLINE], default=None)
    e.add_argument("--emit-smt", default="-", metavar="PATH",
                   help="output path ('-' for stdout, the default)")

    o = sub.add_parser("oracle", help="bounded concrete exploration")
    common(o)
    o.add_argument("--counts", default=None,
                   help="instance counts, e.g. 'train=2' or 'a=2,b=1' "
                        "(replicated templates; singletons default to 1)")
    o.add_argument("--depth", type=int, default=40,
                   help="search depth bound (default 40)")
    o.add_argument("--visited-cap", type=int, default=None,
                   help="abort after this many distinct states")
    o.add_argument("--elapse", choices=["candidates", "all"], default=None,
                   help="time-elapse enumeration strategy")
    o.add_argument("--json", action="store_true",
                   help="machine-readable trace report on stdout")

    pr = sub.add_parser("print", help="parse and pretty-print a model")
    common(pr)
    return p


# ------------------------------------------------------------- config file


def load_config(path) -> dict:
    """Flat key = value file; '#' and ';' comments; sections ignored."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError:
        return values
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            continue
        if "=" not in line:
            log.warning("%s:%d: ignoring line without '=': %r",
                        path, lineno, raw)
            continue
        key, _, val = line.partition("=")
        key = key.strip().lower().replace("_", "-")
        val = val.split("#", 1)[0].strip()
        if len(val) >= 2 and val[0] == val[-1] and val[0] in "'\"":
            val = val[1:-1]
        values[key] = val
    return values


def _cfg_float(cfg, key):
    if key not in cfg:
        return None
    try:
        return float(cfg[key])
    except ValueError:
        log.warning("config %s=%r is not a number; ignored", key, cfg[key])
        return None


def _cfg_int(cfg, key):
    v = _cfg_float(cfg, key)
    return None if v is None else int(v)


# ------------------------------------------------------------- helpers


def load_model(args):
    try:
        model = parse_file(args.model)
    except FileNotFoundError:
        print(f"tachorn: no such model file: {args.model}", file=sys.stderr)
        raise SystemExit(EXIT_NO_INPUT)
    except ParseError as e:
        print(f"tachorn: {e}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID_MODEL)
    if getattr(args, "time_model", None):
        model = replace(model, time_model=args.time_model)
    return model


def parse_schema_arg(text) -> InvariantSchema:
    vectors = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            vectors.append(tuple(int(x) for x in chunk.split(",")))
        except ValueError:
            raise SchemaError("BadSchemaArg",
                              f"cannot parse schema vector {chunk!r}")
    if not vectors:
        raise SchemaError("BadSchemaArg", "empty schema argument")
    return InvariantSchema(tuple(vectors))


def parse_counts_arg(text) -> dict:
    counts = {}
    if not text:
        return counts
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, eq, num = chunk.partition("=")
        if not eq:
            raise OracleError("InvalidCounts",
                              f"counts entry {chunk!r} is not name=N")
        try:
            counts[name.strip()] = int(num)
        except ValueError:
            raise OracleError("InvalidCounts",
                              f"count {num!r} for {name.strip()!r} is not "
                              f"an integer")
    return counts


def _schema_json(schema):
    return [list(v) for v in schema.vectors]


def run_report(args, result) -> dict:
    v = result.verdict
    report = {
        "model": args.model,
        "verdict": v.kind,
        "attempts": [
            {
                "schema": _schema_json(a.schema),
                "clauses": a.clause_count,
                "status": a.status,
                "wall_s": round(a.wall_s, 3),
                "script": a.script_path,
            }
            for a in result.attempts
        ],
        "sweeps": [
            {
                "counts": s.counts,
                "outcome": s.outcome,
                "states_visited": s.states_visited,
            }
            for s in result.sweeps
        ],
        "artifacts": [a.script_path for a in result.attempts
                      if a.script_path],
        "reduced": result.reduced,
    }
    if isinstance(v, Safe):
        report["schema"] = _schema_json(v.schema)
        report["witness"] = v.witness
    elif isinstance(v, Unsafe):
        report["trace"] = trace_report(v.trace)
    else:
        report["reason"] = v.reason
        report["detail"] = v.detail
    return report


def print_text_report(args, result):
    print(f"model: {args.model}")
    for a in result.attempts:
        print(f"  schema {a.schema.render():24s} clauses {a.clause_count:4d} "
              f" -> {a.status:8s} {a.wall_s:7.1f}s")
    for s in result.sweeps:
        shown = ",".join(f"{k}={n}" for k, n in sorted(s.counts.items())) \
            or "singletons"
        tail = {"trace": "error trace found",
                "aborted": "state cap hit",
                "exhausted": f"{s.states_visited} states, no trace"}[s.outcome]
        print(f"  explore {shown:22s} -> {tail}")
    v = result.verdict
    if isinstance(v, Safe):
        print(f"verdict: SAFE with schema {v.schema.render()}")
    elif isinstance(v, Unsafe):
        print(f"verdict: UNSAFE ({len(v.trace.labels)} steps)")
        print(render_trace(v.trace))
    else:
        print(f"verdict: UNKNOWN ({v.reason}) {v.detail}")


# ------------------------------------------------------------- commands


def cmd_check(args, cfg_file) -> int:
    model = load_model(args)
    command, source = discover_solver_command(
        cli_command=args.solver_cmd,
        config_command=cfg_file.get("solver-cmd"))
    if command is None:
        print("tachorn: no solver found: pass --solver-cmd, set "
              "TACHORN_SOLVER, or install z3/node", file=sys.stderr)
        return EXIT_INTERNAL
    log.info("solver (%s): %s", source, command)

    timeout = args.timeout or _cfg_float(cfg_file, "timeout") or 120.0
    cap = args.cap or _cfg_int(cfg_file, "cap") or 6
    symmetry = args.symmetry or cfg_file.get("symmetry") or TRANSPOSITIONS
    body = args.body or cfg_file.get("body") or BODY_CONTEXT
    clocks = args.clocks or cfg_file.get("clocks") or AGES
    locations = args.locations or cfg_file.get("locations") or SPLIT
    n_max = args.n_max or _cfg_int(cfg_file, "n-max") or 4
    depth = args.depth or _cfg_int(cfg_file, "depth") or 40

    cfg = CheckConfig(
        solver=SolverConfig(command, timeout_s=timeout, want_model=True),
        encoding=EncodingConfig(symmetry=symmetry, body=body,
                                clock_basis=clocks, locations=locations),
        cap=cap, n_max=n_max, depth=depth,
        artifact_dir=args.artifacts, portfolio=args.portfolio)
    result = check(model, cfg)
    for a in result.attempts:
        log.info("schema %s: %d clauses -> %s in %.1fs",
                 a.schema.render(), a.clause_count, a.status, a.wall_s)
    if args.json:
        json.dump(run_report(args, result), sys.stdout, indent=2)
        print()
    else:
        print_text_report(args, result)
    v = result.verdict
    if isinstance(v, Safe):
        return EXIT_SAFE
    if isinstance(v, Unsafe):
        return EXIT_UNSAFE
    return EXIT_UNKNOWN


def cmd_encode(args, cfg_file) -> int:
    model = load_model(args)
    model = prepared_model(model)
    symmetry = args.symmetry or cfg_file.get("symmetry") or TRANSPOSITIONS
    body = args.body or cfg_file.get("body") or BODY_CONTEXT
    clocks = args.clocks or cfg_file.get("clocks") or AGES
    locations = args.locations or cfg_file.get("locations") or SPLIT
    enc = EncodingConfig(symmetry=symmetry, body=body,
                         clock_basis=clocks, locations=locations)
    if args.k is not None:
        schema = InvariantSchema(((args.k,),))
    elif args.schema is not None:
        schema = parse_schema_arg(args.schema)
    else:
        from .schema import weakest_schema
        schema = weakest_schema(model)
        log.info("no --schema given; using the weakest schema %s",
                 schema.render())
    hs = encode_for_schema(model, schema, enc)
    text = to_smtlib(hs)
    if args.emit_smt == "-":
        sys.stdout.write(text)
    else:
        with open(args.emit_smt, "w", encoding="utf-8") as f:
            f.write(text)
        log.info("wrote %d clauses to %s", len(hs.clauses), args.emit_smt)
    return 0


def cmd_oracle(args, cfg_file) -> int:
    model = load_model(args)
    model = prepared_model(model)
    counts = parse_counts_arg(args.counts)
    kwargs = {"depth": args.depth}
    if args.visited_cap is not None:
        kwargs["visited_cap"] = args.visited_cap
    if args.elapse is not None:
        kwargs["elapse"] = args.elapse
    bounds = Bounds(**kwargs)
    res = explore(model, counts, bounds)
    if isinstance(res, Reachable):
        if args.json:
            json.dump(trace_report(res.trace), sys.stdout, indent=2)
            print()
        else:
            print("error trace found:")
            print(render_trace(res.trace))
        return EXIT_UNSAFE
    if args.json:
        json.dump({"reachable": False,
                   "states_visited": res.states_visited}, sys.stdout,
                  indent=2)
        print()
    else:
        print(f"no error trace within bounds "
              f"({res.states_visited} states explored)")
    return EXIT_SAFE


def cmd_print(args, cfg_file) -> int:
    model = load_model(args)
    sys.stdout.write(print_model(model))
    return 0


COMMANDS = {
    "check": cmd_check,
    "encode": cmd_encode,
    "oracle": cmd_oracle,
    "print": cmd_print,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[
        min(args.verbose, 2)]
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg_file = load_config(args.config or "tachorn.toml")
    try:
        code = COMMANDS[args.command](args, cfg_file)
    except SystemExit:
        raise
    except (ParseError, EngineError, SchemaError, EncodingError,
            OracleError) as e:
        invalid = isinstance(e, (ParseError,)) or \
            getattr(e, "code", "") in ("InvalidModel", "SingletonOvercount",
                                       "NotFinite", "NotHomogeneous",
                                       "WidthMismatch", "ErrorUncovered",
                                       "InvalidCounts")
        print(f"tachorn: {e}", file=sys.stderr)
        return EXIT_INVALID_MODEL if invalid else EXIT_INTERNAL
    except OSError as e:
        print(f"tachorn: {e}", file=sys.stderr)
        return EXIT_NO_INPUT if getattr(e, "errno", None) == 2 \
            else EXIT_INTERNAL
    except Exception:  # pragma: no cover - last-resort diagnostics
        import traceback
        traceback.print_exc()
        return EXIT_INTERNAL
    return code


if __name__ == "__main__":
    sys.exit(main())
