"""Verification driver: schema refinement around solver and explorer.

`check` runs the refinement loop over invariant schemata:

1. encode the network against the current schema (finite, homogeneous,
   or heterogeneous form, chosen by the model's shape), emit the script,
   and hand it to the configured constrained-Horn solver;
2. `sat` — the solver found relation definitions: the system is safe,
   and the definitions are returned verbatim as the witness;
3. `unsat` — the abstraction admits an error derivation, which may or
   may not be concrete; the bounded explorer sweeps growing finite
   instantiations looking for a real counterexample.  A found trace is
   replay-certified and returned as Unsafe; otherwise the derivation was
   an artifact of the schema being too weak, so the schema is
   strengthened and the loop repeats;
4. `unknown`/timeout — strengthen once and retry (a jointly-tracked
   invariant is sometimes easier to solve than a weaker one); a second
   consecutive failure gives Unknown.

Growth stops at the schema cap (Unknown with reason SchemaCapReached).
Every solver attempt is recorded (schema, clause count, status, wall
time, script path) for the run report.

Rendezvous models are reduced to their barrier form up front; every
stage after that (encoding, exploration, replay) sees only the reduced
model.

The optional portfolio mode starts the next schema's solve alongside the
current one and joins results by precedence Unsafe > Safe > Unknown,
cancelling the loser.  The loop itself stays sequential and is the
reference behavior; portfolio only overlaps solver wall time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .encoder import (EncodingConfig, bip_to_barrier, encode_finite,
                      encode_heterogeneous, encode_homogeneous)
from .hornir import to_smtlib
from .model import SystemModel, validate_model
from .oracle import (Bounds, Reachable, StateExplosionAbort, Trace, explore,
                     replay)
from .schema import (CAP_REACHED, InvariantSchema, coupling_evidence,
                     strengthen, weakest_schema)
from .solver import (SAT, UNSAT, TIMEOUT, SolverConfig, SolverResult,
                     run_solver, start_solver)

# Unknown reasons
SCHEMA_CAP_REACHED = "SchemaCapReached"
SOLVER_TIMEOUT = "SolverTimeout"
SOLVER_UNKNOWN = "SolverUnknown"


class EngineError(Exception):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class Safe:
    schema: InvariantSchema
    witness: Optional[str]  # solver's relation definitions, verbatim

    kind = "safe"


@dataclass(frozen=True)
class Unsafe:
    trace: Trace

    kind = "unsafe"

    @classmethod
    def certified(cls, model: SystemModel, trace: Trace) -> "Unsafe":
        """Construct only after the trace replays against the model."""
        if not replay(model, trace):
            raise EngineError(
                "UncertifiedTrace",
                "refusing to report Unsafe: the candidate trace does not "
                "replay under the concrete semantics")
        return cls(trace)


@dataclass(frozen=True)
class Unknown:
    reason: str  # SCHEMA_CAP_REACHED | SOLVER_TIMEOUT | SOLVER_UNKNOWN
    detail: str = ""

    kind = "unknown"


@dataclass
class Attempt:
    """One solver invocation in the refinement loop."""

    schema: InvariantSchema
    clause_count: int
    status: str
    wall_s: float
    script_path: Optional[str] = None


@dataclass
class SweepRecord:
    """One bounded exploration during a genuineness check."""

    counts: dict
    outcome: str  # "trace" | "exhausted" | "aborted"
    states_visited: int = 0


@dataclass
class CheckResult:
    verdict: object  # Safe | Unsafe | Unknown
    attempts: list = field(default_factory=list)
    sweeps: list = field(default_factory=list)
    reduced: bool = False


@dataclass
class CheckConfig:
    solver: SolverConfig
    encoding: EncodingConfig = EncodingConfig()
    cap: int = 6  # max entry sum of any schema vector
    n_max: int = 4  # largest replicated count the explorer sweeps
    depth: int = 40  # explorer depth bound
    explore_bounds: Bounds = None  # overrides depth when given
    artifact_dir: Optional[str] = None  # keep emitted scripts here
    portfolio: bool = False


def encode_for_schema(model: SystemModel, schema: InvariantSchema,
                      cfg: EncodingConfig = EncodingConfig()):
    """Dispatch on model shape: finite, homogeneous, or heterogeneous."""
    schema.validate_against(model)
    vectors = list(schema.vectors)
    if all(not t.replicated for t in model.templates):
        return encode_finite(model, vectors, cfg)
    if len(model.templates) == 1:
        if len(vectors) != 1:
            raise EngineError(
                "SchemaShape",
                "a single-template model takes a single-vector schema")
        return encode_homogeneous(model, vectors[0][0], cfg)
    return encode_heterogeneous(model, vectors, cfg)


def prepared_model(model: SystemModel) -> SystemModel:
    """Validate and, for rendezvous models, reduce to barrier form."""
    diags = validate_model(model)
    if diags:
        raise EngineError("InvalidModel",
                          "; ".join(str(d) for d in diags))
    if model.ports or model.interactions:
        return bip_to_barrier(model)
    return model


def genuineness_sweep(model: SystemModel, cfg: CheckConfig, sweeps: list):
    """Search growing finite instantiations for a concrete error trace.

    Replicated counts run N = 1..n_max (all replicated templates at N
    together); models with no replicated template get the single
    instantiation of one instance per template.  A sweep that exhausts
    its bounds or aborts on the state cap is inconclusive; only a found
    trace is decisive.
    """
    replicated = [t.name for t in model.templates if t.replicated]
    if replicated:
        count_maps = [{name: n for name in replicated}
                      for n in range(1, cfg.n_max + 1)]
    else:
        count_maps = [{}]
    bounds = cfg.explore_bounds or Bounds(depth=cfg.depth)
    for counts in count_maps:
        try:
            res = explore(model, counts, bounds)
        except StateExplosionAbort:
            sweeps.append(SweepRecord(dict(counts), "aborted"))
            continue
        if isinstance(res, Reachable):
            sweeps.append(SweepRecord(dict(counts), "trace"))
            return res.trace
        sweeps.append(SweepRecord(dict(counts), "exhausted",
                                  res.states_visited))
    return None


def _script_path(cfg: CheckConfig, index: int, schema: InvariantSchema):
    if cfg.artifact_dir is None:
        return None
    os.makedirs(cfg.artifact_dir, exist_ok=True)
    tag = "-".join("x".join(str(a) for a in v) for v in schema.vectors)
    return os.path.join(cfg.artifact_dir, f"attempt-{index:02d}-{tag}.smt2")


def _record(attempts, schema, clause_count, res: SolverResult):
    attempts.append(Attempt(schema, clause_count, res.status, res.wall_s,
                            res.script_path))


def check(model: SystemModel, cfg: CheckConfig) -> CheckResult:
    """Run the refinement loop to a verdict.  See the module docstring."""
    reduced = bool(model.ports or model.interactions)
    model = prepared_model(model)
    evidence = coupling_evidence(model)
    schema = weakest_schema(model)
    result = CheckResult(None, reduced=reduced)
    unknown_streak = 0
    pending = None  # (schema, horn_system, SolverRun) from portfolio mode
    index = 0

    def launch(sch):
        nonlocal index
        index += 1
        hs = encode_for_schema(model, sch, cfg.encoding)
        run = start_solver(to_smtlib(hs), cfg.solver,
                           script_path=_script_path(cfg, index, sch))
        return sch, hs, run

    def next_schema(sch):
        return strengthen(sch, model, evidence, cfg.cap)

    while True:
        if pending is not None and pending[0] == schema:
            schema, hs, run = pending
        else:
            if pending is not None:
                pending[2].cancel()
                pending[2].result()
            schema, hs, run = launch(schema)
        pending = None

        if cfg.portfolio:
            upcoming = next_schema(schema)
            if upcoming is not CAP_REACHED:
                pending = launch(upcoming)

        res = run.result()
        _record(result.attempts, schema, len(hs.clauses), res)

        if res.status == SAT:
            result.verdict = Safe(schema, res.model_text)
            break
        if res.status == UNSAT:
            unknown_streak = 0
            trace = genuineness_sweep(model, cfg, result.sweeps)
            if trace is not None:
                result.verdict = Unsafe.certified(model, trace)
                break
            nxt = pending[0] if pending is not None else next_schema(schema)
            if nxt is CAP_REACHED:
                result.verdict = Unknown(
                    SCHEMA_CAP_REACHED,
                    f"no admissible schema within entry-sum cap {cfg.cap}")
                break
            schema = nxt
            continue
        # unknown / timeout / crash: strengthen once, then give up
        if unknown_streak >= 1:
            reason = SOLVER_TIMEOUT if res.status == TIMEOUT \
                else SOLVER_UNKNOWN
            result.verdict = Unknown(
                reason, f"solver returned {res.status} at schema "
                        f"{schema.render()} after a strengthening retry")
            break
        unknown_streak += 1
        nxt = pending[0] if pending is not None else next_schema(schema)
        if nxt is CAP_REACHED:
            result.verdict = Unknown(
                SCHEMA_CAP_REACHED,
                f"no admissible schema within entry-sum cap {cfg.cap}")
            break
        schema = nxt

    if pending is not None:
        pending[2].cancel()
        pending[2].result()
    return result


__all__ = [
    "Attempt",
    "CheckConfig",
    "CheckResult",
    "EngineError",
    "SCHEMA_CAP_REACHED",
    "SOLVER_TIMEOUT",
    "SOLVER_UNKNOWN",
    "Safe",
    "SweepRecord",
    "Unknown",
    "Unsafe",
    "check",
    "encode_for_schema",
    "genuineness_sweep",
    "prepared_model",
]
