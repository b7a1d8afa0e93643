import random

from tachorn.constraints import (
    And,
    Cmp,
    Const,
    Implies,
    Or,
    Sub,
    Var,
    TRUE,
    GLOBAL,
    GLOBAL_NEXT,
    LOCAL,
    LOCAL_NEXT,
    SELF_ID,
    eval_constraint,
)
from tachorn.model import (
    DENSE,
    DISCRETE,
    ErrorRole,
    ProcessTemplate,
    SystemModel,
    T_LOCAL,
    T_PORT,
    T_RECV,
    T_SEND,
    T_BARRIER,
    make_transition,
    validate_model,
)


def g(n):
    return Var(GLOBAL, n)


def l(n):
    return Var(LOCAL, n)


def lp(n):
    return Var(LOCAL_NEXT, n)


def gp(n):
    return Var(GLOBAL_NEXT, n)


def age(x):
    return Sub(g("C"), l(x))


def mk_template(name, replicated=False, locals_=("at",), clocks=(),
                init=None, tinv=TRUE, transitions=()):
    if init is None:
        init = Cmp("=", l("at"), Const(0)) if "at" in locals_ else TRUE
    return ProcessTemplate(name, replicated, tuple(locals_),
                           frozenset(clocks), init, tinv, tuple(transitions))


def mk_model(templates, user_globals=(), channels=(), barriers=(), ports=(),
             interactions=(), error_roles=(), time_model=DISCRETE,
             global_init=TRUE):
    return SystemModel(time_model, tuple(user_globals), global_init,
                       tuple(templates), tuple(channels), tuple(barriers),
                       tuple(ports), tuple(interactions), tuple(error_roles))


def trans(tpl_locals, kind=T_LOCAL, label=None, guard=TRUE, assigns=(),
          globals_=(), **kw):
    return make_transition(kind, label, guard, assigns, tuple(globals_),
                           tuple(tpl_locals), **kw)


def test_minimal_model_is_well_formed():
    t = mk_template("proc", transitions=[
        trans(("at",), guard=Cmp("=", l("at"), Const(0)),
              assigns=((lp("at"), Const(1)),)),
    ])
    m = mk_model([t], error_roles=[ErrorRole("proc", Cmp("=", l("at"), Const(1)))])
    assert validate_model(m) == []


def test_update_frames_unassigned_variables():
    tr = trans(("at", "x"), assigns=((lp("at"), Const(1)),), globals_=("n",))
    env = {l("at"): 0, lp("at"): 1, l("x"): 7, lp("x"): 7, g("n"): 3, gp("n"): 3}
    assert eval_constraint(tr.update, env) is True
    env[lp("x")] = 8  # frame broken
    assert eval_constraint(tr.update, env) is False


def test_duplicate_port_owner():
    t1 = mk_template("a")
    t2 = mk_template("b")
    m = mk_model([t1, t2], ports=[("p", "a"), ("p", "b")])
    codes = [d.code for d in validate_model(m)]
    assert "DuplicatePortOwner" in codes


def test_undeclared_channel_reported_with_name():
    t = mk_template("train", transitions=[
        trans(("at",), kind=T_SEND, label="go"),
    ])
    m = mk_model([t], channels=())
    diags = validate_model(m)
    assert any(d.code == "UndeclaredChannel" and "go" in d.message for d in diags)


def test_reserved_global_rejected():
    t = mk_template("p")
    m = mk_model([t], user_globals=("C",))
    assert any(d.code == "ReservedName" for d in validate_model(m))


def test_self_id_in_singleton_flagged():
    t = mk_template("p", replicated=False, transitions=[
        trans(("at",), guard=Cmp("=", Var(SELF_ID), Const(0))),
    ])
    m = mk_model([t])
    assert any(d.code == "SelfIdInSingleton" for d in validate_model(m))
    t2 = mk_template("q", replicated=True, transitions=[
        trans(("at",), guard=Cmp("=", Var(SELF_ID), Const(0))),
    ])
    assert validate_model(mk_model([t2])) == []


def test_barrier_transition_may_not_write_globals():
    t = mk_template("p", transitions=[
        trans(("at",), kind=T_BARRIER, label="b",
              assigns=((gp("n"), Const(1)),), globals_=("n",)),
    ])
    m = mk_model([t], user_globals=("n",), barriers=("b",))
    assert any(d.code == "BarrierWritesGlobal" for d in validate_model(m))


def test_local_port_overlap_detection():
    # same location constant: overlap possible -> diagnostic
    t = mk_template("p", transitions=[
        trans(("at",), kind=T_LOCAL, guard=Cmp("=", l("at"), Const(0))),
        trans(("at",), kind=T_PORT, label="go",
              guard=Cmp("=", l("at"), Const(0))),
    ])
    m = mk_model([t], ports=[("go", "p")])
    assert any(d.code == "PossibleLocalPortOverlap" for d in validate_model(m))

    # distinct location constants: evidently disjoint -> clean
    t2 = mk_template("p", transitions=[
        trans(("at",), kind=T_LOCAL, guard=Cmp("=", l("at"), Const(0))),
        trans(("at",), kind=T_PORT, label="go",
              guard=Cmp("=", l("at"), Const(1))),
    ])
    m2 = mk_model([t2], ports=[("go", "p")])
    assert validate_model(m2) == []


def test_error_roles_on_singleton_limited_to_one():
    t = mk_template("p")
    m = mk_model([t], error_roles=[
        ErrorRole("p", TRUE), ErrorRole("p", TRUE)])
    assert any(d.code == "ErrorRoleCount" for d in validate_model(m))


def test_interaction_owner_clash():
    t1 = mk_template("a")
    t2 = mk_template("b")
    m = mk_model([t1, t2], ports=[("p1", "a"), ("p2", "a"), ("q", "b")],
                 interactions=[("p1", "p2")])
    assert any(d.code == "InteractionOwnerClash" for d in validate_model(m))


def test_tinv_convexity_syntactic():
    ok = And((Cmp("<=", age("x"), Const(5)),
              Implies(Cmp("=", l("at"), Const(2)),
                      Cmp("<", age("x"), Const(9)))))
    t = mk_template("p", locals_=("at", "x"), clocks=("x",), tinv=ok)
    assert validate_model(mk_model([t])) == []

    bad = Or((Cmp("<=", age("x"), Const(5)), Cmp(">=", age("x"), Const(9))))
    t2 = mk_template("p", locals_=("at", "x"), clocks=("x",), tinv=bad)
    assert any(d.code == "TInvNotConvex" for d in validate_model(mk_model([t2])))


def test_accepted_tinv_is_convex_in_time_by_enumeration():
    # for accepted invariants: holding at C=c1 and C=c2 implies holding between
    rng = random.Random(7)
    tinv = And((Cmp("<=", age("x"), Const(9)),
                Implies(Cmp("=", l("at"), Const(1)),
                        Cmp(">=", age("x"), Const(2)))))
    t = mk_template("p", locals_=("at", "x"), clocks=("x",), tinv=tinv)
    assert validate_model(mk_model([t])) == []
    for _ in range(200):
        at = rng.randint(0, 2)
        x = rng.randint(0, 5)
        holds = [c for c in range(0, 25)
                 if eval_constraint(tinv, {g("C"): c, l("x"): x, l("at"): at})]
        assert holds == list(range(min(holds), max(holds) + 1)) if holds else True


def test_validate_is_deterministic_and_idempotent():
    t = mk_template("train", transitions=[trans(("at",), kind=T_SEND, label="go")])
    m = mk_model([t])
    assert validate_model(m) == validate_model(m)


def test_clock_constants_collects_comparison_bounds():
    guard = And((Cmp(">=", age("x"), Const(3)), Cmp("=", l("at"), Const(44))))
    t = mk_template("p", locals_=("at", "x"), clocks=("x",),
                    tinv=Cmp("<=", age("x"), Const(20)),
                    transitions=[trans(("at", "x"), guard=guard)])
    m = mk_model([t])
    assert m.clock_constants() == [3, 20]


def test_globals_layout_discrete_vs_dense():
    t = mk_template("p")
    m1 = mk_model([t], user_globals=("n",), time_model=DISCRETE)
    assert m1.globals == ("C", "n")
    m2 = mk_model([t], user_globals=("n",), time_model=DENSE)
    assert m2.globals == ("C", "n", "U")
