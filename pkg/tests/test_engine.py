"""Refinement-loop tests driven by the scripted solver stand-in.

The fake solver answers by schema, so every loop path (accept, refute,
strengthen, give up) is exercised deterministically and fast; the
genuineness sweeps inside run against the real explorer on miniature
models whose state spaces are a few dozen states.
"""

import json
import os
import sys

import pytest

from tachorn.engine import (
    CheckConfig, EngineError, SCHEMA_CAP_REACHED, SOLVER_TIMEOUT,
    SOLVER_UNKNOWN, Safe, Unknown, Unsafe, check, encode_for_schema,
    prepared_model,
)
from tachorn.frontend import parse_model
from tachorn.oracle import Bounds, Reachable, explore, replay
from tachorn.schema import InvariantSchema, weakest_schema
from tachorn.solver import SolverConfig

from mini_models import MINI_SAFE, MINI_UNSAFE, MONO_UNSAFE

PY = sys.executable or "python3"
FAKE = os.path.join(os.path.dirname(__file__), "fake_solver.py")


def plan_cmd(tmp_path, plan):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    return f"{PY} {FAKE} {path}"


def cfg_for(tmp_path, plan, **kw):
    kw.setdefault("n_max", 2)
    kw.setdefault("depth", 12)
    solver = SolverConfig(plan_cmd(tmp_path, plan), timeout_s=10,
                          grace_s=0.5, want_model=True)
    return CheckConfig(solver=solver, **kw)


def mini(text=MINI_SAFE):
    return parse_model(text)


def schema_key(*vectors):
    return InvariantSchema(vectors).render()


# ---------------------------------------------------------------- paths


def test_sat_at_weakest_is_safe(tmp_path):
    model = mini()
    res = check(model, cfg_for(tmp_path, {"*": {"status": "sat",
                                                "model": "(define-fun R () Bool true)"}}))
    assert isinstance(res.verdict, Safe)
    assert res.verdict.schema == weakest_schema(model)
    assert "define-fun" in res.verdict.witness
    assert [a.status for a in res.attempts] == ["sat"]
    assert res.sweeps == []


def test_unsat_on_unsafe_model_yields_certified_trace(tmp_path):
    model = mini(MINI_UNSAFE)
    res = check(model, cfg_for(tmp_path, {"*": "unsat"}))
    assert isinstance(res.verdict, Unsafe)
    assert replay(model, res.verdict.trace)
    # the first finite instantiation already exhibits the bug
    assert res.sweeps[-1].outcome == "trace"
    assert [a.status for a in res.attempts] == ["unsat"]


def test_unsat_then_strengthen_then_sat(tmp_path):
    model = mini()
    weakest = weakest_schema(model)
    merged = schema_key((1, 1))
    plan = {weakest.render(): "unsat", merged: "sat"}
    res = check(model, cfg_for(tmp_path, plan))
    assert isinstance(res.verdict, Safe)
    assert res.verdict.schema.render() == merged
    assert [a.status for a in res.attempts] == ["unsat", "sat"]
    assert [a.schema.render() for a in res.attempts] == \
        [weakest.render(), merged]
    # the sweep between the attempts explored n = 1..n_max and found nothing
    assert [s.outcome for s in res.sweeps] == ["exhausted", "exhausted"]
    assert all(s.states_visited > 0 for s in res.sweeps)


def test_unknown_then_sat_recovers(tmp_path):
    model = mini()
    plan = {weakest_schema(model).render(): "unknown", "*": "sat"}
    res = check(model, cfg_for(tmp_path, plan))
    assert isinstance(res.verdict, Safe)
    assert [a.status for a in res.attempts] == ["unknown", "sat"]
    assert res.sweeps == []  # sweeps only follow refutations


def test_two_consecutive_unknowns_give_up(tmp_path):
    model = mini()
    res = check(model, cfg_for(tmp_path, {"*": "unknown"}))
    assert isinstance(res.verdict, Unknown)
    assert res.verdict.reason == SOLVER_UNKNOWN
    assert "(1,1)" in res.verdict.detail
    assert len(res.attempts) == 2


def test_two_timeouts_report_solver_timeout(tmp_path):
    model = mini()
    plan = {"*": {"status": "sat", "sleep": 30}}
    solver = SolverConfig(plan_cmd(tmp_path, plan), timeout_s=0.2,
                          grace_s=0.2)
    res = check(model, CheckConfig(solver=solver, n_max=2, depth=12))
    assert isinstance(res.verdict, Unknown)
    assert res.verdict.reason == SOLVER_TIMEOUT
    assert [a.status for a in res.attempts] == ["timeout", "timeout"]


def test_crash_is_treated_like_unknown(tmp_path):
    model = mini()
    res = check(model, cfg_for(tmp_path, {"*": "silent"}))
    assert isinstance(res.verdict, Unknown)
    assert res.verdict.reason == SOLVER_UNKNOWN
    assert [a.status for a in res.attempts] == ["crash", "crash"]


def test_unsat_resets_the_unknown_streak(tmp_path):
    model = mini()
    weakest = weakest_schema(model)
    plan = {weakest.render(): "unknown",
            schema_key((1, 1)): "unsat",
            schema_key((2, 1)): "unknown",
            "*": "sat"}
    res = check(model, cfg_for(tmp_path, plan))
    # unknown, unsat, unknown, sat: the second unknown must not abort,
    # because the refutation in between cleared the streak
    assert isinstance(res.verdict, Safe)
    assert [a.status for a in res.attempts] == \
        ["unknown", "unsat", "unknown", "sat"]


def test_cap_exhaustion_is_unknown(tmp_path):
    model = mini()
    res = check(model, cfg_for(tmp_path, {"*": "unsat"}, cap=1))
    assert isinstance(res.verdict, Unknown)
    assert res.verdict.reason == SCHEMA_CAP_REACHED
    assert len(res.attempts) == 1  # nowhere to go after the weakest


def test_portfolio_matches_serial_verdict(tmp_path):
    model = mini()
    weakest = weakest_schema(model)
    plan = {weakest.render(): "unsat", schema_key((1, 1)): "sat"}
    serial = check(model, cfg_for(tmp_path, plan))
    speculative = check(model, cfg_for(tmp_path, plan, portfolio=True))
    assert isinstance(speculative.verdict, Safe)
    assert speculative.verdict.schema == serial.verdict.schema
    assert [a.schema.render() for a in speculative.attempts] == \
        [a.schema.render() for a in serial.attempts]


def test_portfolio_discards_speculation_on_trace(tmp_path):
    model = mini(MINI_UNSAFE)
    res = check(model, cfg_for(tmp_path, {"*": "unsat"}, portfolio=True))
    assert isinstance(res.verdict, Unsafe)
    assert [a.status for a in res.attempts] == ["unsat"]


def test_artifacts_are_kept(tmp_path):
    model = mini()
    art = tmp_path / "scripts"
    plan = {weakest_schema(model).render(): "unsat", "*": "sat"}
    res = check(model, cfg_for(tmp_path, plan, artifact_dir=str(art)))
    assert isinstance(res.verdict, Safe)
    names = sorted(os.listdir(art))
    assert names == ["attempt-01-1x0-0x1.smt2", "attempt-02-1x1.smt2"]
    assert res.attempts[0].script_path.endswith(names[0])
    head = (art / names[0]).read_text().splitlines()[0]
    assert head.startswith("; flavor:")


def test_monotype_model_dispatches_homogeneous(tmp_path):
    model = mini(MONO_UNSAFE)
    res = check(model, cfg_for(tmp_path, {"*": "unsat"}))
    assert isinstance(res.verdict, Unsafe)
    assert len(res.verdict.trace.steps) == 2


# ------------------------------------------------------------ dispatch


def test_encode_dispatch_shapes():
    model = mini()
    hs = encode_for_schema(model, InvariantSchema([(1, 1)]))
    assert dict(hs.metadata)["flavor"] == "heterogeneous"

    mono = mini(MONO_UNSAFE)
    hs = encode_for_schema(mono, InvariantSchema([(2,)]))
    assert dict(hs.metadata)["flavor"] == "homogeneous"
    with pytest.raises(EngineError) as e:
        encode_for_schema(mono, InvariantSchema([(2,), (1,)]))
    assert e.value.code == "SchemaShape"

    finite = parse_model("""
    system {
      globals g;
      init g = 0;
      template a { locals x; init x = 0;
                   trans local when x = 0 do x := 1; }
      error { a: x = 1; }
    }
    """)
    hs = encode_for_schema(finite, InvariantSchema([(1,)]))
    assert dict(hs.metadata)["flavor"] == "finite"


def test_schema_is_validated_against_model():
    model = mini()
    with pytest.raises(Exception):
        encode_for_schema(model, InvariantSchema([(1, 2)]))  # obs singleton


def test_prepared_model_reduces_rendezvous():
    model = parse_model("""
    system {
      port go of a;
      port ack of b;
      interaction { go, ack };
      template a { locals x; init x = 0;
                   trans port go when x = 0 do x := 1; }
      template b { locals y; init y = 0;
                   trans port ack when y = 0 do y := 1; }
      error { a: x = 1; }
    }
    """)
    reduced = prepared_model(model)
    assert not reduced.ports and not reduced.interactions
    assert "iact" in reduced.user_globals


def test_uncertified_trace_is_refused():
    model = mini(MINI_UNSAFE)
    res = explore(model, {"worker": 1}, Bounds(depth=12))
    assert isinstance(res, Reachable)
    good = res.trace
    assert replay(model, good)
    # voiding the step list breaks replay, so certification must refuse
    broken = type(good)(good.counts, good.steps[:-1])
    with pytest.raises(EngineError) as e:
        Unsafe.certified(model, broken)
    assert e.value.code == "UncertifiedTrace"
