import random

import pytest

from tachorn.constraints import (
    Add, And, Cmp, Const, Dist, Divides, Implies, Mul, Neg, Not, Or, Sub,
    Var, TRUE, GLOBAL, GLOBAL_NEXT, LOCAL, LOCAL_NEXT, SELF_ID,
)
from tachorn.frontend import ParseError, parse_model, print_model
from tachorn.model import (
    DENSE, DISCRETE, ErrorRole, ProcessTemplate, SystemModel, TIME_VAR,
    UNIT_VAR, T_BARRIER, T_LOCAL, T_PORT, T_RECV, T_SEND, make_transition,
    validate_model,
)

GATE = """
system {
  time discrete;
  const LIMIT = 5;
  globals waiting;
  init waiting = 0;
  channel appr, leave;
  template gate {
    locals busy;
    init busy = 0;
    trans recv appr when busy = 0 do busy := 1, waiting := waiting + 1;
    trans recv leave do busy := 0;
  }
  template car replicated {
    locals at;
    clock x;
    init at = 0;
    tinv at = 1 -> val(x) <= LIMIT;
    trans send appr when at = 0 do at := 1, reset x;
    trans send leave when at = 1 and val(x) >= 2 do at := 0;
  }
  error {
    car: at = 1 and val(x) > LIMIT;
  }
}
"""


def test_parse_structure():
    m = parse_model(GATE, "gate.tan")
    assert m.time_model == DISCRETE
    assert m.user_globals == ("waiting",)
    assert m.channels == ("appr", "leave")
    assert [t.name for t in m.templates] == ["gate", "car"]
    gate, car = m.templates
    assert not gate.replicated and car.replicated
    assert car.locals == ("at", "x")
    assert car.clocks == frozenset({"x"})
    assert len(m.error_roles) == 1 and m.error_roles[0].template == "car"


def test_const_substitution_and_clock_desugar():
    m = parse_model(GATE)
    car = m.template("car")
    # tinv: at = 1 -> C - x <= 5 (LIMIT substituted)
    assert car.tinv == Implies(
        Cmp("=", Var(LOCAL, "at"), Const(1)),
        Cmp("<=", Sub(Var(GLOBAL, TIME_VAR), Var(LOCAL, "x")), Const(5)))
    role = m.error_roles[0]
    assert Const(5) in [role.constraint.args[1].right]


def test_reset_and_frames():
    m = parse_model(GATE)
    car = m.template("car")
    appr = car.transitions[0]
    assert appr.kind == T_SEND and appr.label == "appr"
    assert (Var(LOCAL_NEXT, "x"), Var(GLOBAL, TIME_VAR)) in appr.assigns
    # the derived update must frame the untouched global and C
    expected = make_transition(
        T_SEND, "appr", appr.guard, appr.assigns,
        ("C", "waiting"), ("at", "x"))
    assert appr.update == expected.update


def test_globals_declared_after_template_are_framed():
    src = """
    system {
      template t {
        trans local;
      }
      globals n;
    }
    """
    m = parse_model(src)
    tr = m.templates[0].transitions[0]
    frame = Cmp("=", Var(GLOBAL_NEXT, "n"), Var(GLOBAL, "n"))
    assert frame in list(tr.update.args)


def test_dense_bounds_scale_by_unit():
    src = """
    system {
      time dense;
      template p replicated {
        clock x, y;
        tinv val(x) <= 3;
        trans local when val(x) - val(y) < 2 and val(x) >= -1;
      }
    }
    """
    m = parse_model(src)
    p = m.templates[0]
    assert p.tinv == Cmp("<=", Sub(Var(GLOBAL, "C"), Var(LOCAL, "x")),
                         Mul(3, Var(GLOBAL, UNIT_VAR)))
    g = p.transitions[0].guard
    diff, low = g.args
    assert diff == Cmp("<", Sub(Var(LOCAL, "y"), Var(LOCAL, "x")),
                       Mul(2, Var(GLOBAL, UNIT_VAR)))
    assert low == Cmp(">=", Sub(Var(GLOBAL, "C"), Var(LOCAL, "x")),
                      Mul(-1, Var(GLOBAL, UNIT_VAR)))


def test_clock_side_normalized_left():
    src = """
    system {
      template p {
        clock x;
        trans local when 3 <= val(x);
      }
    }
    """
    g = parse_model(src).templates[0].transitions[0].guard
    assert g == Cmp(">=", Sub(Var(GLOBAL, "C"), Var(LOCAL, "x")), Const(3))


def test_parenthesized_term_vs_constraint():
    src = """
    system {
      globals x, y;
      init (x + 1) * 2 = y and (x = 1 or not y = 2);
    }
    """
    m = parse_model(src)
    first, second = m.global_init.args
    assert first == Cmp("=", Mul(2, Add((Var(GLOBAL, "x"), Const(1)))),
                        Var(GLOBAL, "y"))
    assert isinstance(second, Or) and isinstance(second.args[1], Not)


def test_ports_interactions_barriers():
    src = """
    system {
      barrier sync;
      port go of ctl;
      port run of worker;
      interaction { go, run };
      template ctl { trans port go; }
      template worker replicated { trans barrier sync when id >= 0; }
    }
    """
    m = parse_model(src)
    assert m.barriers == ("sync",)
    assert m.ports == (("go", "ctl"), ("run", "worker"))
    assert m.interactions == (("go", "run"),)
    assert m.templates[0].transitions[0].kind == T_PORT
    w = m.templates[1].transitions[0]
    assert w.kind == T_BARRIER and Var(SELF_ID) in [w.guard.left]


@pytest.mark.parametrize("src,needle", [
    ("", "expected 'system'"),
    ("system { template t { clock x; trans local when x = 1; } }",
     "without val()"),
    ("system { template t { locals a; trans local when val(a) = 1; } }",
     "not a clock"),
    ("system { globals a, b; init a * b = 1; }", "nonlinear"),
    ("system { template t { clock x; trans local do x := 3; } }",
     "changed by reset"),
    ("system { template t { locals a; trans local do reset a; } }",
     "not a clock"),
    ("system { time dense; globals n; template t { clock x; "
     "trans local when val(x) <= n; } }", "literal clock bounds"),
    ("system { template t { } time dense; }", "before templates"),
    ("system { template t { clock x; trans local when val(x) + 1 < 5; } }",
     "clock comparison"),
    ("system { template t { clock x; trans local do a := val(x); } }",
     "use reset"),
    ("system { error { } }", "at least one role"),
    ("system { globals a; init a = ; }", "expected a term"),
])
def test_parse_errors(src, needle):
    with pytest.raises(ParseError) as exc:
        parse_model(src)
    assert needle in str(exc.value)


def test_empty_input_error_position():
    with pytest.raises(ParseError) as exc:
        parse_model("")
    assert exc.value.span.start_line == 1
    assert exc.value.span.start_col == 1


def test_error_span_line_tracking():
    src = "system {\n  globals a;\n  init a ==== 1;\n}\n"
    with pytest.raises(ParseError) as exc:
        parse_model(src)
    assert exc.value.span.start_line == 3


def test_comments_and_whitespace():
    src = """// leading comment
    system { /* block
    spanning lines */ globals a; // trailing
    init a = 1; }
    """
    m = parse_model(src)
    assert m.user_globals == ("a",)


def test_print_round_trip_hand_model():
    m = parse_model(GATE, "gate.tan")
    text = print_model(m)
    again = parse_model(text, "printed.tan")
    assert again == m
    # and printing is a fixpoint
    assert print_model(again) == text


def test_round_trip_preserves_validity():
    m = parse_model(GATE)
    assert validate_model(m) == []
    assert validate_model(parse_model(print_model(m))) == []


def test_empty_template_round_trip():
    m = parse_model("system { template t { } }")
    assert parse_model(print_model(m)) == m


# ---------------------------------------------------------------- random
# round-trip property: generate structurally varied models directly as
# objects, print them, re-parse, and require structural identity


class _Gen:
    def __init__(self, rng):
        self.rng = rng

    def data_term(self, glob, loc, depth=2):
        r = self.rng
        leaves = [lambda: Const(r.randint(-9, 9))]
        if glob:
            leaves.append(lambda: Var(GLOBAL, r.choice(glob)))
        if loc:
            leaves.append(lambda: Var(LOCAL, r.choice(loc)))
        if depth == 0 or r.random() < 0.5:
            return r.choice(leaves)()
        k = r.randint(1, 3)
        if k == 1:
            return Add((self.data_term(glob, loc, depth - 1),
                        self.data_term(glob, loc, 0)))
        if k == 2:
            return Sub(self.data_term(glob, loc, depth - 1),
                       self.data_term(glob, loc, 0))
        return Mul(r.randint(-3, 3), self.data_term(glob, loc, depth - 1))

    def age(self, clock):
        return Sub(Var(GLOBAL, TIME_VAR), Var(LOCAL, clock))

    def bound(self, dense):
        k = self.rng.randint(0, 9)
        return Mul(k, Var(GLOBAL, UNIT_VAR)) if dense else Const(k)

    def leaf(self, glob, loc, clocks, dense):
        r = self.rng
        op = r.choice(["=", "!=", "<=", "<", ">=", ">"])
        kinds = ["cmp", "dist", "div", "true"]
        if clocks:
            kinds += ["agek", "ageage", "diff"]
        k = r.choice(kinds)
        if k == "true":
            return TRUE
        if k == "cmp":
            return Cmp(op, self.data_term(glob, loc),
                       self.data_term(glob, loc))
        if k == "dist":
            n = r.randint(2, 3)
            return Dist(tuple(self.data_term(glob, loc, 1) for _ in range(n)))
        if k == "div":
            return Divides(r.randint(1, 5), self.data_term(glob, loc, 1))
        if k == "agek":
            return Cmp(op, self.age(r.choice(clocks)), self.bound(dense))
        if k == "ageage":
            return Cmp(op, self.age(r.choice(clocks)),
                       self.age(r.choice(clocks)))
        x, y = r.choice(clocks), r.choice(clocks)
        return Cmp(op, Sub(Var(LOCAL, y), Var(LOCAL, x)), self.bound(dense))

    def constraint(self, glob, loc, clocks, dense, depth=2):
        r = self.rng
        if depth == 0 or r.random() < 0.45:
            return self.leaf(glob, loc, clocks, dense)
        k = r.randint(1, 4)
        sub = lambda: self.constraint(glob, loc, clocks, dense, depth - 1)
        if k == 1:
            return And(tuple(sub() for _ in range(r.randint(2, 3))))
        if k == 2:
            return Or(tuple(sub() for _ in range(r.randint(2, 3))))
        if k == 3:
            return Not(sub())
        return Implies(sub(), sub())

    def model(self):
        r = self.rng
        dense = r.random() < 0.4
        glob = [f"g{i}" for i in range(r.randint(0, 3))]
        all_globals = (TIME_VAR,) + tuple(glob) + \
            ((UNIT_VAR,) if dense else ())
        channels = ["c0", "c1"][: r.randint(0, 2)]
        barriers = ["b0"][: r.randint(0, 1)]
        templates = []
        ports = []
        n_tpl = r.randint(1, 3)
        for ti in range(n_tpl):
            plain = [f"a{j}" for j in range(r.randint(0, 2))]
            clocks = [f"x{j}" for j in range(r.randint(0, 2))]
            locs = tuple(plain) + tuple(clocks)
            has_port = r.random() < 0.3
            if has_port:
                ports.append((f"p{ti}", f"t{ti}"))
            trans = []
            for _ in range(r.randint(0, 3)):
                choices = [(T_LOCAL, None)]
                if channels:
                    choices += [(T_SEND, r.choice(channels)),
                                (T_RECV, r.choice(channels))]
                if barriers:
                    choices.append((T_BARRIER, barriers[0]))
                if has_port:
                    choices.append((T_PORT, f"p{ti}"))
                kind, label = r.choice(choices)
                guard = TRUE if r.random() < 0.3 else \
                    self.constraint(glob, plain, clocks, dense)
                assigns = []
                targets = [("g", g) for g in glob] + \
                    [("l", p) for p in plain] + [("r", c) for c in clocks]
                r.shuffle(targets)
                for tk, name in targets[: r.randint(0, 2)]:
                    if tk == "r":
                        assigns.append((Var(LOCAL_NEXT, name),
                                        Var(GLOBAL, TIME_VAR)))
                    elif tk == "l":
                        assigns.append((Var(LOCAL_NEXT, name),
                                        self.data_term(glob, plain, 1)))
                    else:
                        assigns.append((Var(GLOBAL_NEXT, name),
                                        self.data_term(glob, plain, 1)))
                trans.append(make_transition(kind, label, guard,
                                             tuple(assigns), all_globals,
                                             locs))
            init = TRUE if r.random() < 0.5 or not plain else \
                Cmp("=", Var(LOCAL, plain[0]), Const(r.randint(0, 3)))
            tinv = TRUE if r.random() < 0.6 or not clocks else \
                Cmp("<=", self.age(clocks[0]), self.bound(dense))
            templates.append(ProcessTemplate(
                f"t{ti}", r.random() < 0.5, locs, frozenset(clocks),
                init, tinv, tuple(trans)))
        interactions = []
        if len(ports) >= 2 and r.random() < 0.7:
            interactions.append(tuple(p for p, _ in ports[:2]))
        roles = []
        for _ in range(r.randint(0, 2)):
            t = r.choice(templates)
            plain = [n for n in t.locals if n not in t.clocks]
            roles.append(ErrorRole(
                t.name,
                self.constraint(glob, plain,
                                [n for n in t.locals if n in t.clocks],
                                dense, 1)))
        ginit = TRUE if r.random() < 0.5 or not glob else \
            Cmp("=", Var(GLOBAL, glob[0]), Const(r.randint(0, 3)))
        return SystemModel(
            DENSE if dense else DISCRETE, tuple(glob), ginit,
            tuple(templates), tuple(channels), tuple(barriers),
            tuple(ports), tuple(interactions), tuple(roles))


def test_round_trip_random_models():
    rng = random.Random(20260819)
    gen = _Gen(rng)
    for i in range(150):
        m = gen.model()
        text = print_model(m)
        try:
            again = parse_model(text, f"random-{i}.tan")
        except ParseError as e:
            raise AssertionError(f"model {i} failed to re-parse: {e}\n{text}")
        assert again == m, f"model {i} round-trip mismatch:\n{text}"
        assert print_model(again) == text
