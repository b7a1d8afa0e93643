"""Constrained Horn clause representation and SMT-LIB 2 emission.

A HornSystem is a flat list of clauses over declared uninterpreted
relations, all arguments of sort Int.  Emission is deterministic: the same
system always yields byte-identical text (docs/smtlib.md fixes the layout).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import CVAR, TRUE, Var, conjuncts, to_sexpr, variables


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    arity: int


@dataclass(frozen=True)
class RelApp:
    rel: RelationSymbol
    args: tuple  # terms; clause variables are Var(CVAR, name)


@dataclass(frozen=True)
class HornClause:
    head: object  # RelApp, or None for a query clause (head "false")
    body: tuple  # RelApp literals
    constraint: object
    tag: str = ""  # clause family tag, e.g. "Fig4-(7)"
    comment: str = ""


@dataclass(frozen=True)
class HornSystem:
    relations: tuple
    clauses: tuple
    metadata: tuple = ()  # ((key, value), ...) shown in the script header

    def clauses_tagged(self, tag):
        return [c for c in self.clauses if c.tag == tag]

    def tags(self):
        seen = []
        for c in self.clauses:
            if c.tag not in seen:
                seen.append(c.tag)
        return seen


def check_wellformed(system: HornSystem) -> list:
    """Structural problems as strings; empty list when emission is safe."""
    problems = []
    decl = {}
    for r in system.relations:
        if r.name in decl:
            problems.append(f"DuplicateRelation: {r.name}")
        decl[r.name] = r
        if r.arity < 0:
            problems.append(f"NegativeArity: {r.name}")
    for ci, c in enumerate(system.clauses):
        apps = list(c.body) + ([c.head] if c.head is not None else [])
        for app in apps:
            if decl.get(app.rel.name) != app.rel:
                problems.append(
                    f"UndeclaredRelation: clause {ci} uses {app.rel.name}")
            elif len(app.args) != app.rel.arity:
                problems.append(
                    f"ArityMismatch: clause {ci} applies {app.rel.name} "
                    f"to {len(app.args)} args, declared {app.rel.arity}")
            for a in app.args:
                for v in variables(a):
                    if v.kind != CVAR:
                        problems.append(
                            f"NonClauseVariable: clause {ci} argument "
                            f"uses {v.kind} variable {v.name!r}")
        for v in variables(c.constraint):
            if v.kind != CVAR:
                problems.append(
                    f"NonClauseVariable: clause {ci} constraint uses "
                    f"{v.kind} variable {v.name!r}")
    return problems


def _clause_vars(clause):
    """Clause variables in first-occurrence order: body, constraint, head."""
    seen = []
    have = set()

    def take(term):
        for v in variables(term):
            if v.name not in have:
                have.add(v.name)
                seen.append(v.name)

    for app in clause.body:
        for a in app.args:
            take(a)
    take(clause.constraint)
    if clause.head is not None:
        for a in clause.head.args:
            take(a)
    return seen


def _name_of(var):
    return var.name


def _app_sexpr(app):
    if not app.args:
        return app.rel.name
    return "(" + " ".join([app.rel.name] +
                          [to_sexpr(a, _name_of) for a in app.args]) + ")"


def clause_sexpr(clause) -> str:
    """The (assert ...) form for one clause."""
    head = "false" if clause.head is None else _app_sexpr(clause.head)
    parts = [to_sexpr(c, _name_of) for c in conjuncts(clause.constraint)
             if c != TRUE]
    parts += [_app_sexpr(app) for app in clause.body]
    if not parts:
        inner = head
    else:
        body = parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"
        inner = f"(=> {body} {head})"
    vs = _clause_vars(clause)
    if vs:
        binders = " ".join(f"({v} Int)" for v in vs)
        inner = f"(forall ({binders}) {inner})"
    return f"(assert {inner})"


def to_smtlib(system: HornSystem) -> str:
    problems = check_wellformed(system)
    if problems:
        raise ValueError("malformed horn system: " + "; ".join(problems[:5]))
    out = []
    for key, value in system.metadata:
        out.append(f"; {key}: {value}")
    out.append("(set-logic HORN)")
    for r in sorted(system.relations, key=lambda r: r.name):
        sorts = " ".join(["Int"] * r.arity)
        out.append(f"(declare-fun {r.name} ({sorts}) Bool)")
    for c in system.clauses:
        note = f" {c.comment}" if c.comment else ""
        out.append(f"; [{c.tag}]{note}" if c.tag else f";{note}")
        out.append(clause_sexpr(c))
    out.append("(check-sat)")
    return "\n".join(out) + "\n"
