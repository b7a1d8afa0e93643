"""Linear integer constraint AST.

Terms and constraints are immutable trees shared by the model layer, the
clause encoder and the explicit-state oracle.  Variables carry a tag (kind,
name) so the same tree type can describe model-level constraints (globals,
locals, primed copies, process ids) and clause-level constraints (plain
solver variables).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

# variable kinds
GLOBAL = "global"
LOCAL = "local"
GLOBAL_NEXT = "global_next"
LOCAL_NEXT = "local_next"
SELF_ID = "self_id"
PEER_ID = "peer_id"
CVAR = "cvar"  # clause-level variable, only produced by the encoder

VAR_KINDS = (GLOBAL, LOCAL, GLOBAL_NEXT, LOCAL_NEXT, SELF_ID, PEER_ID, CVAR)


class UnboundVariable(Exception):
    """Raised when evaluation hits a variable the environment cannot resolve."""

    def __init__(self, var):
        super().__init__(f"unbound variable {var}")
        self.var = var


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Const:
    value: int

    def __repr__(self):
        return str(self.value)


@dataclass(frozen=True)
class Var:
    kind: str
    name: str = ""

    def __repr__(self):
        if self.kind == SELF_ID:
            return "id"
        if self.kind == PEER_ID:
            return "peer"
        if self.kind in (GLOBAL_NEXT, LOCAL_NEXT):
            return self.name + "'"
        return self.name


@dataclass(frozen=True)
class Add:
    args: tuple

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.args)) + ")"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"

    def __repr__(self):
        return f"({self.left!r} - {self.right!r})"


@dataclass(frozen=True)
class Neg:
    arg: "Term"

    def __repr__(self):
        return f"-{self.arg!r}"


@dataclass(frozen=True)
class Mul:
    """Scaling of a term by an integer constant (keeps everything linear)."""

    coeff: int
    arg: "Term"

    def __repr__(self):
        return f"{self.coeff}*{self.arg!r}"


Term = Union[Const, Var, Add, Sub, Neg, Mul]


# ---------------------------------------------------------------- constraints


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __repr__(self):
        return "true" if self.value else "false"


TRUE = BoolConst(True)
FALSE = BoolConst(False)

CMP_OPS = ("=", "!=", "<=", "<", ">=", ">")


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Term
    right: Term

    def __repr__(self):
        return f"{self.left!r} {self.op} {self.right!r}"


@dataclass(frozen=True)
class Divides:
    """divisor | arg, divisor a positive literal."""

    divisor: int
    arg: Term

    def __repr__(self):
        return f"divides({self.divisor}, {self.arg!r})"


@dataclass(frozen=True)
class Dist:
    """All terms pairwise distinct."""

    args: tuple

    def __repr__(self):
        return "dist(" + ", ".join(map(repr, self.args)) + ")"


@dataclass(frozen=True)
class And:
    args: tuple

    def __repr__(self):
        return "(" + " and ".join(map(repr, self.args)) + ")"


@dataclass(frozen=True)
class Or:
    args: tuple

    def __repr__(self):
        return "(" + " or ".join(map(repr, self.args)) + ")"


@dataclass(frozen=True)
class Not:
    arg: "Constraint"

    def __repr__(self):
        return f"not {self.arg!r}"


@dataclass(frozen=True)
class Implies:
    left: "Constraint"
    right: "Constraint"

    def __repr__(self):
        return f"({self.left!r} -> {self.right!r})"


Constraint = Union[BoolConst, Cmp, Divides, Dist, And, Or, Not, Implies]


def conj(*parts) -> Constraint:
    """Conjunction that flattens nested Ands and drops TRUE."""
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        elif p == TRUE:
            continue
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts) -> Constraint:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        elif p == FALSE:
            continue
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def conjuncts(c: Constraint) -> Iterable[Constraint]:
    """Top-level conjuncts of c (flattens nested And)."""
    if isinstance(c, And):
        for a in c.args:
            yield from conjuncts(a)
    else:
        yield c


# ---------------------------------------------------------------- evaluation

Env = Callable[[Var], int]


def _resolve(env, var: Var) -> int:
    if isinstance(env, Mapping):
        try:
            return env[var]
        except KeyError:
            raise UnboundVariable(var) from None
    return env(var)


def eval_term(t: Term, env) -> int:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return _resolve(env, t)
    if isinstance(t, Add):
        return sum(eval_term(a, env) for a in t.args)
    if isinstance(t, Sub):
        return eval_term(t.left, env) - eval_term(t.right, env)
    if isinstance(t, Neg):
        return -eval_term(t.arg, env)
    if isinstance(t, Mul):
        return t.coeff * eval_term(t.arg, env)
    raise TypeError(f"not a term: {t!r}")


def eval_constraint(c: Constraint, env) -> bool:
    """Standard integer semantics. env maps Var -> int (mapping or callable)."""
    if isinstance(c, BoolConst):
        return c.value
    if isinstance(c, Cmp):
        a = eval_term(c.left, env)
        b = eval_term(c.right, env)
        if c.op == "=":
            return a == b
        if c.op == "!=":
            return a != b
        if c.op == "<=":
            return a <= b
        if c.op == "<":
            return a < b
        if c.op == ">=":
            return a >= b
        if c.op == ">":
            return a > b
        raise ValueError(f"bad comparison op {c.op}")
    if isinstance(c, Divides):
        return eval_term(c.arg, env) % c.divisor == 0
    if isinstance(c, Dist):
        vals = [eval_term(a, env) for a in c.args]
        return len(set(vals)) == len(vals)
    if isinstance(c, And):
        return all(eval_constraint(a, env) for a in c.args)
    if isinstance(c, Or):
        return any(eval_constraint(a, env) for a in c.args)
    if isinstance(c, Not):
        return not eval_constraint(c.arg, env)
    if isinstance(c, Implies):
        return (not eval_constraint(c.left, env)) or eval_constraint(c.right, env)
    raise TypeError(f"not a constraint: {c!r}")


CMP_EVAL = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def fold(node):
    """Partial evaluation: collapse constant subterms and decide
    constraints whose arguments have become constants, leaving everything
    else structurally intact.  Used after substituting concrete values
    into a clause."""
    if isinstance(node, (Const, Var, BoolConst)):
        return node
    if isinstance(node, Add):
        args = tuple(fold(a) for a in node.args)
        if all(isinstance(a, Const) for a in args):
            return Const(sum(a.value for a in args))
        return Add(args)
    if isinstance(node, Sub):
        l, r = fold(node.left), fold(node.right)
        if isinstance(l, Const) and isinstance(r, Const):
            return Const(l.value - r.value)
        return Sub(l, r)
    if isinstance(node, Neg):
        a = fold(node.arg)
        return Const(-a.value) if isinstance(a, Const) else Neg(a)
    if isinstance(node, Mul):
        a = fold(node.arg)
        return Const(node.coeff * a.value) if isinstance(a, Const) \
            else Mul(node.coeff, a)
    if isinstance(node, Cmp):
        l, r = fold(node.left), fold(node.right)
        if isinstance(l, Const) and isinstance(r, Const):
            return TRUE if CMP_EVAL[node.op](l.value, r.value) else FALSE
        return Cmp(node.op, l, r)
    if isinstance(node, Divides):
        a = fold(node.arg)
        if isinstance(a, Const):
            return TRUE if a.value % node.divisor == 0 else FALSE
        return Divides(node.divisor, a)
    if isinstance(node, Dist):
        args = tuple(fold(a) for a in node.args)
        if all(isinstance(a, Const) for a in args):
            vals = [a.value for a in args]
            return TRUE if len(set(vals)) == len(vals) else FALSE
        return Dist(args)
    if isinstance(node, And):
        out = []
        for a in node.args:
            a = fold(a)
            if a == FALSE:
                return FALSE
            if a != TRUE:
                out.append(a)
        return conj(*out)
    if isinstance(node, Or):
        out = []
        for a in node.args:
            a = fold(a)
            if a == TRUE:
                return TRUE
            if a != FALSE:
                out.append(a)
        return disj(*out)
    if isinstance(node, Not):
        a = fold(node.arg)
        if isinstance(a, BoolConst):
            return FALSE if a.value else TRUE
        return Not(a)
    if isinstance(node, Implies):
        l = fold(node.left)
        if l == FALSE:
            return TRUE
        r = fold(node.right)
        if l == TRUE:
            return r
        if r == TRUE:
            return TRUE
        return Implies(l, r)
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------- traversal


def map_vars(node, fn):
    """Rebuild node with every Var v replaced by fn(v) (a Term)."""
    if isinstance(node, Const) or isinstance(node, BoolConst):
        return node
    if isinstance(node, Var):
        return fn(node)
    if isinstance(node, Add):
        return Add(tuple(map_vars(a, fn) for a in node.args))
    if isinstance(node, Sub):
        return Sub(map_vars(node.left, fn), map_vars(node.right, fn))
    if isinstance(node, Neg):
        return Neg(map_vars(node.arg, fn))
    if isinstance(node, Mul):
        return Mul(node.coeff, map_vars(node.arg, fn))
    if isinstance(node, Cmp):
        return Cmp(node.op, map_vars(node.left, fn), map_vars(node.right, fn))
    if isinstance(node, Divides):
        return Divides(node.divisor, map_vars(node.arg, fn))
    if isinstance(node, Dist):
        return Dist(tuple(map_vars(a, fn) for a in node.args))
    if isinstance(node, And):
        return And(tuple(map_vars(a, fn) for a in node.args))
    if isinstance(node, Or):
        return Or(tuple(map_vars(a, fn) for a in node.args))
    if isinstance(node, Not):
        return Not(map_vars(node.arg, fn))
    if isinstance(node, Implies):
        return Implies(map_vars(node.left, fn), map_vars(node.right, fn))
    raise TypeError(f"not an AST node: {node!r}")


def substitute(node, mapping: Mapping[Var, Term]):
    return map_vars(node, lambda v: mapping.get(v, v))


def variables(node) -> list:
    """All variables in first-occurrence order, deduplicated."""
    out = []
    seen = set()

    def walk(n):
        if isinstance(n, (Const, BoolConst)):
            return
        if isinstance(n, Var):
            if n not in seen:
                seen.add(n)
                out.append(n)
            return
        if isinstance(n, (Add, Dist, And, Or)):
            for a in n.args:
                walk(a)
            return
        if isinstance(n, (Sub, Cmp, Implies)):
            walk(n.left)
            walk(n.right)
            return
        if isinstance(n, (Neg, Mul, Divides, Not)):
            walk(n.arg)
            return
        raise TypeError(f"not an AST node: {n!r}")

    walk(node)
    return out


# ---------------------------------------------------------------- SMT output


def to_sexpr(node, name_of) -> str:
    """Render a term or constraint as an SMT-LIB s-expression.

    name_of maps each Var to its emitted name.  dist is expanded into
    pairwise disequalities; no quantifiers are introduced.
    """
    if isinstance(node, Const):
        return str(node.value) if node.value >= 0 else f"(- {-node.value})"
    if isinstance(node, Var):
        return name_of(node)
    if isinstance(node, Add):
        return "(+ " + " ".join(to_sexpr(a, name_of) for a in node.args) + ")"
    if isinstance(node, Sub):
        return f"(- {to_sexpr(node.left, name_of)} {to_sexpr(node.right, name_of)})"
    if isinstance(node, Neg):
        return f"(- {to_sexpr(node.arg, name_of)})"
    if isinstance(node, Mul):
        c = str(node.coeff) if node.coeff >= 0 else f"(- {-node.coeff})"
        return f"(* {c} {to_sexpr(node.arg, name_of)})"
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, Cmp):
        a = to_sexpr(node.left, name_of)
        b = to_sexpr(node.right, name_of)
        if node.op == "!=":
            return f"(not (= {a} {b}))"
        return f"({node.op} {a} {b})"
    if isinstance(node, Divides):
        return f"(= (mod {to_sexpr(node.arg, name_of)} {node.divisor}) 0)"
    if isinstance(node, Dist):
        if len(node.args) < 2:
            return "true"
        pairs = []
        for i in range(len(node.args)):
            for j in range(i + 1, len(node.args)):
                a = to_sexpr(node.args[i], name_of)
                b = to_sexpr(node.args[j], name_of)
                pairs.append(f"(not (= {a} {b}))")
        if len(pairs) == 1:
            return pairs[0]
        return "(and " + " ".join(pairs) + ")"
    if isinstance(node, And):
        if not node.args:
            return "true"
        return "(and " + " ".join(to_sexpr(a, name_of) for a in node.args) + ")"
    if isinstance(node, Or):
        if not node.args:
            return "false"
        return "(or " + " ".join(to_sexpr(a, name_of) for a in node.args) + ")"
    if isinstance(node, Not):
        return f"(not {to_sexpr(node.arg, name_of)})"
    if isinstance(node, Implies):
        return f"(=> {to_sexpr(node.left, name_of)} {to_sexpr(node.right, name_of)})"
    raise TypeError(f"not an AST node: {node!r}")
