import random

import pytest

from tachorn.constraints import (
    Add,
    And,
    BoolConst,
    Cmp,
    Const,
    Dist,
    Divides,
    Implies,
    Mul,
    Neg,
    Not,
    Or,
    Sub,
    Var,
    GLOBAL,
    LOCAL,
    SELF_ID,
    TRUE,
    FALSE,
    UnboundVariable,
    conj,
    conjuncts,
    disj,
    eval_constraint,
    eval_term,
    map_vars,
    substitute,
    to_sexpr,
    variables,
)


def g(name):
    return Var(GLOBAL, name)


def l(name):
    return Var(LOCAL, name)


# ------------------------------------------------------------ basic eval


def test_boundary_comparison():
    c = Cmp(">=", l("x"), Const(3))
    assert eval_constraint(c, {l("x"): 3}) is True
    assert eval_constraint(c, {l("x"): 2}) is False


def test_counter_update_pair():
    # n = 0 and n' = n + 1 under n=0, n'=1
    from tachorn.constraints import GLOBAL_NEXT

    c = And((Cmp("=", g("n"), Const(0)),
             Cmp("=", Var(GLOBAL_NEXT, "n"), Add((g("n"), Const(1))))))
    env = {g("n"): 0, Var(GLOBAL_NEXT, "n"): 1}
    assert eval_constraint(c, env) is True


def test_dist_same_ids_is_false():
    c = Dist((l("p"), l("q")))
    assert eval_constraint(c, {l("p"): 1, l("q"): 1}) is False
    assert eval_constraint(c, {l("p"): 1, l("q"): 2}) is True


def test_unbound_variable_raises():
    with pytest.raises(UnboundVariable):
        eval_constraint(Cmp("=", l("x"), Const(0)), {})


def test_env_can_be_callable():
    c = Cmp("=", Var(SELF_ID), Const(7))

    def env(v):
        if v.kind == SELF_ID:
            return 7
        raise UnboundVariable(v)

    assert eval_constraint(c, env) is True


def test_divides():
    assert eval_constraint(Divides(3, l("x")), {l("x"): 9}) is True
    assert eval_constraint(Divides(3, l("x")), {l("x"): 10}) is False


# ------------------------------------------------------------ helpers


def test_conj_flattens_and_drops_true():
    a = Cmp("=", l("x"), Const(1))
    b = Cmp("=", l("y"), Const(2))
    assert conj() == TRUE
    assert conj(a) == a
    assert conj(TRUE, a) == a
    assert conj(And((a, b)), TRUE) == And((a, b))
    assert list(conjuncts(conj(a, conj(b, a)))) == [a, b, a]


def test_disj():
    a = Cmp("=", l("x"), Const(1))
    assert disj() == FALSE
    assert disj(FALSE, a) == a


def test_substitute_and_variables():
    c = And((Cmp("<=", Sub(g("C"), l("x")), Const(5)), Cmp("=", l("x"), l("y"))))
    assert variables(c) == [g("C"), l("x"), l("y")]
    c2 = substitute(c, {l("x"): Const(0)})
    assert variables(c2) == [g("C"), l("y")]


def test_map_vars_renames():
    c = Cmp("=", l("x"), g("n"))
    c2 = map_vars(c, lambda v: Var("cvar", f"{v.kind}_{v.name}"))
    assert variables(c2)[0].name == "local_x"


# ------------------------------------------------------------ sexpr output


def test_sexpr_shapes():
    nm = lambda v: v.name
    assert to_sexpr(Cmp("!=", l("a"), l("b")), nm) == "(not (= a b))"
    assert to_sexpr(Const(-4), nm) == "(- 4)"
    assert to_sexpr(Mul(2, l("u")), nm) == "(* 2 u)"
    assert to_sexpr(Dist((l("a"), l("b"))), nm) == "(not (= a b))"
    three = to_sexpr(Dist((l("a"), l("b"), l("c"))), nm)
    assert three == "(and (not (= a b)) (not (= a c)) (not (= b c)))"
    assert to_sexpr(Divides(4, l("a")), nm) == "(= (mod a 4) 0)"
    assert to_sexpr(Implies(TRUE, FALSE), nm) == "(=> true false)"


# ------------------------------------------------------------ differential test
#
# Independent reference evaluator: compile the AST to a Python expression
# string and eval() it.  A disagreement flags a bug in one of the two paths.


def compile_to_python(node, names):
    if isinstance(node, Const):
        return f"({node.value})"
    if isinstance(node, Var):
        return names[node]
    if isinstance(node, Add):
        return "(" + "+".join(compile_to_python(a, names) for a in node.args) + ")"
    if isinstance(node, Sub):
        return f"({compile_to_python(node.left, names)}-{compile_to_python(node.right, names)})"
    if isinstance(node, Neg):
        return f"(-{compile_to_python(node.arg, names)})"
    if isinstance(node, Mul):
        return f"({node.coeff}*{compile_to_python(node.arg, names)})"
    if isinstance(node, BoolConst):
        return "True" if node.value else "False"
    if isinstance(node, Cmp):
        op = {"=": "==", "!=": "!="}.get(node.op, node.op)
        return f"({compile_to_python(node.left, names)}{op}{compile_to_python(node.right, names)})"
    if isinstance(node, Divides):
        return f"({compile_to_python(node.arg, names)}%{node.divisor}==0)"
    if isinstance(node, Dist):
        parts = [compile_to_python(a, names) for a in node.args]
        return f"(len({{ {','.join(parts)} }})=={len(parts)})"
    if isinstance(node, And):
        return "(" + " and ".join(compile_to_python(a, names) for a in node.args) + ")"
    if isinstance(node, Or):
        return "(" + " or ".join(compile_to_python(a, names) for a in node.args) + ")"
    if isinstance(node, Not):
        return f"(not {compile_to_python(node.arg, names)})"
    if isinstance(node, Implies):
        return f"((not {compile_to_python(node.left, names)}) or {compile_to_python(node.right, names)})"
    raise TypeError(node)


VARS = [Var(LOCAL, n) for n in "xyzw"] + [Var(GLOBAL, n) for n in ("C", "n")]


def random_term(rng, depth):
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return Const(rng.randint(-20, 20))
        return rng.choice(VARS)
    k = rng.randint(0, 4)
    if k == 0:
        return Add(tuple(random_term(rng, depth - 1) for _ in range(rng.randint(2, 3))))
    if k == 1:
        return Sub(random_term(rng, depth - 1), random_term(rng, depth - 1))
    if k == 2:
        return Neg(random_term(rng, depth - 1))
    if k == 3:
        return Mul(rng.randint(-4, 4), random_term(rng, depth - 1))
    return rng.choice(VARS)


def random_constraint(rng, depth):
    if depth <= 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.7:
            op = rng.choice(["=", "!=", "<=", "<", ">=", ">"])
            return Cmp(op, random_term(rng, depth - 1), random_term(rng, depth - 1))
        if r < 0.8:
            return Divides(rng.randint(1, 6), random_term(rng, depth - 1))
        if r < 0.9:
            return Dist(tuple(rng.choice(VARS) for _ in range(rng.randint(2, 4))))
        return BoolConst(rng.random() < 0.5)
    k = rng.randint(0, 3)
    sub = lambda: random_constraint(rng, depth - 1)
    if k == 0:
        return And(tuple(sub() for _ in range(rng.randint(2, 3))))
    if k == 1:
        return Or(tuple(sub() for _ in range(rng.randint(2, 3))))
    if k == 2:
        return Not(sub())
    return Implies(sub(), sub())


def test_differential_eval_1000_random_pairs():
    rng = random.Random(20260819)
    names = {v: f"v{i}" for i, v in enumerate(VARS)}
    for _ in range(1000):
        c = random_constraint(rng, 3)
        env = {v: rng.randint(-15, 15) for v in VARS}
        expr = compile_to_python(c, names)
        scope = {names[v]: env[v] for v in VARS}
        expected = bool(eval(expr, {}, scope))
        assert eval_constraint(c, env) is expected, f"mismatch on {c!r} env={env}"
