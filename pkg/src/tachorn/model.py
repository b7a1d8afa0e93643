"""System model: networks of timed process templates with shared variables.

A SystemModel holds an ordered list of process templates (singleton or
replicated), shared global variables, binary channels, barriers, BIP-style
ports/interactions, and an error specification naming m (pairwise distinct)
process instances.  Time is realized through the reserved global C (and U in
dense mode): a clock is a plain local integer storing the instant of its last
reset, so its current value reads as C - x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .constraints import (
    And,
    BoolConst,
    Cmp,
    Const,
    Dist,
    Divides,
    Implies,
    Not,
    Or,
    Sub,
    Var,
    TRUE,
    GLOBAL,
    GLOBAL_NEXT,
    LOCAL,
    LOCAL_NEXT,
    PEER_ID,
    SELF_ID,
    conj,
    conjuncts,
    variables,
)

TIME_VAR = "C"
UNIT_VAR = "U"
RESERVED_GLOBALS = (TIME_VAR, UNIT_VAR)

DISCRETE = "discrete"
DENSE = "dense"

# transition kinds
T_LOCAL = "local"
T_SEND = "send"
T_RECV = "recv"
T_BARRIER = "barrier"
T_PORT = "port"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self):
        loc = f"{self.span}: " if self.span else ""
        return f"{loc}{self.code}: {self.message}"


@dataclass(frozen=True)
class Transition:
    """One guarded transition of a template.

    assigns lists (primed target, term over unprimed vars) pairs; every
    variable of the owning template and every global not assigned is framed.
    update is the full constraint (assignments plus frames) and is derived,
    not user-supplied; the two views are kept in sync by make_transition.
    """

    kind: str
    label: Optional[str]  # channel / barrier / port name, None for local
    guard: object
    assigns: tuple  # ((Var(local_next|global_next, n), Term), ...)
    update: object
    iact_value: Optional[int] = None  # set on interaction-select transitions
    span: Optional[SourceSpan] = field(default=None, compare=False)


def make_transition(kind, label, guard, assigns, global_names, local_names,
                    iact_value=None, span=None):
    """Build a Transition, deriving the full update constraint with frames."""
    assigned = {(v.kind, v.name) for v, _ in assigns}
    parts = [Cmp("=", v, t) for v, t in assigns]
    for n in local_names:
        if (LOCAL_NEXT, n) not in assigned:
            parts.append(Cmp("=", Var(LOCAL_NEXT, n), Var(LOCAL, n)))
    for n in global_names:
        if (GLOBAL_NEXT, n) not in assigned:
            parts.append(Cmp("=", Var(GLOBAL_NEXT, n), Var(GLOBAL, n)))
    return Transition(kind, label, guard, tuple(assigns), conj(*parts),
                      iact_value=iact_value, span=span)


@dataclass(frozen=True)
class ProcessTemplate:
    name: str
    replicated: bool
    locals: tuple  # names; non-clock locals first, then clocks
    clocks: frozenset
    init: object  # user constraint over locals and globals (unprimed)
    tinv: object  # time invariant, unprimed
    transitions: tuple
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class ErrorRole:
    template: str
    constraint: object  # over this instance's locals and the globals
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class SystemModel:
    time_model: str  # discrete | dense
    user_globals: tuple
    global_init: object  # user constraint over globals
    templates: tuple
    channels: tuple
    barriers: tuple
    ports: tuple  # ((port, owner template), ...)
    interactions: tuple  # (tuple of port names, ...)
    error_roles: tuple

    @property
    def globals(self) -> tuple:
        """All globals in relation-argument order: C, user vars, U (dense)."""
        g = (TIME_VAR,) + self.user_globals
        if self.time_model == DENSE:
            g = g + (UNIT_VAR,)
        return g

    def template(self, name: str) -> ProcessTemplate:
        for t in self.templates:
            if t.name == name:
                return t
        raise KeyError(name)

    def template_index(self, name: str) -> int:
        for i, t in enumerate(self.templates):
            if t.name == name:
                return i
        raise KeyError(name)

    def port_owner(self, port: str) -> Optional[str]:
        for p, owner in self.ports:
            if p == port:
                return owner
        return None

    def template_ports(self, name: str) -> tuple:
        return tuple(p for p, owner in self.ports if owner == name)

    def initial_global_constraint(self):
        """Global part of initiation: C = 0, U >= 1 in dense mode, user init."""
        parts = [Cmp("=", Var(GLOBAL, TIME_VAR), Const(0))]
        if self.time_model == DENSE:
            parts.append(Cmp(">=", Var(GLOBAL, UNIT_VAR), Const(1)))
        parts.append(self.global_init)
        return conj(*parts)

    def initial_template_constraint(self, tpl: ProcessTemplate):
        """Per-instance part of initiation: clocks start at C, user init."""
        parts = [Cmp("=", Var(LOCAL, x), Var(GLOBAL, TIME_VAR))
                 for x in tpl.locals if x in tpl.clocks]
        parts.append(tpl.init)
        return conj(*parts)

    def error_counts(self) -> dict:
        """Role count per template name appearing in the error spec."""
        counts = {}
        for r in self.error_roles:
            counts[r.template] = counts.get(r.template, 0) + 1
        return counts

    def clock_constants(self) -> list:
        """All constants compared against clock values, ascending."""
        consts = set()

        def scan(node):
            if isinstance(node, Cmp):
                lc = _mentions_time(node.left)
                rc = _mentions_time(node.right)
                if lc and not rc:
                    v = _const_value(node.right, self)
                    if v is not None:
                        consts.add(v)
                elif rc and not lc:
                    v = _const_value(node.left, self)
                    if v is not None:
                        consts.add(v)
            elif isinstance(node, (And, Or)):
                for a in node.args:
                    scan(a)
            elif isinstance(node, (Not,)):
                scan(node.arg)
            elif isinstance(node, Implies):
                scan(node.left)
                scan(node.right)

        for t in self.templates:
            scan(t.tinv)
            for tr in t.transitions:
                scan(tr.guard)
        for r in self.error_roles:
            scan(r.constraint)
        return sorted(consts)


def _mentions_time(term) -> bool:
    return any(v.kind == GLOBAL and v.name == TIME_VAR for v in variables(term))


def _const_value(term, model):
    """Value of a constant term; in dense mode unwraps the k*U scaling."""
    from .constraints import Mul, Neg

    if isinstance(term, Const):
        return term.value
    if isinstance(term, Neg) and isinstance(term.arg, Const):
        return -term.arg.value
    if isinstance(term, Mul) and isinstance(term.arg, Var) \
            and term.arg.name == UNIT_VAR:
        return term.coeff
    return None


# ------------------------------------------------------------------ validation


def validate_model(model: SystemModel) -> list:
    """Well-formedness diagnostics; empty list means the model is accepted."""
    diags = []

    def bad(code, message, span=None):
        diags.append(Diagnostic(code, message, span))

    # name clashes across the four declaration namespaces
    seen = {}
    for kind, names in (("template", [t.name for t in model.templates]),
                        ("channel", model.channels),
                        ("barrier", model.barriers),
                        ("port", [p for p, _ in model.ports])):
        for n in names:
            if n in seen:
                if kind == "port" and seen[n] == "port":
                    bad("DuplicatePortOwner", f"port {n} declared more than once")
                else:
                    bad("DuplicateName",
                        f"{kind} {n} clashes with {seen[n]} of the same name")
            else:
                seen[n] = kind

    for g in RESERVED_GLOBALS:
        if g in model.user_globals:
            bad("ReservedName", f"global {g} is reserved for the time encoding")
    dup = _first_dup(model.user_globals)
    if dup:
        bad("DuplicateGlobal", f"global {dup} declared twice")

    tpl_names = {t.name for t in model.templates}
    for p, owner in model.ports:
        if owner not in tpl_names:
            bad("UnknownTemplate", f"port {p} owned by unknown template {owner}")

    for ia in model.interactions:
        if not ia:
            bad("EmptyInteraction", "interaction with no ports")
        owners = []
        for p in ia:
            if model.port_owner(p) is None:
                bad("UnknownPort", f"interaction uses undeclared port {p}")
            else:
                owners.append(model.port_owner(p))
        d = _first_dup(owners)
        if d:
            bad("InteractionOwnerClash",
                f"interaction has two ports of template {d}")

    for t in model.templates:
        diags.extend(_validate_template(model, t))

    # error spec
    counts = {}
    for r in model.error_roles:
        if r.template not in tpl_names:
            bad("ErrorUnknownTemplate",
                f"error role names unknown template {r.template}", r.span)
            continue
        counts[r.template] = counts.get(r.template, 0) + 1
        tpl = model.template(r.template)
        diags.extend(_check_vars(model, tpl, r.constraint,
                                 where=f"error role for {r.template}",
                                 allow_self_id=False, span=r.span))
    for name, c in counts.items():
        if name in tpl_names and not model.template(name).replicated and c > 1:
            bad("ErrorRoleCount",
                f"{c} error roles for singleton template {name}")

    return diags


def _first_dup(names):
    seen = set()
    for n in names:
        if n in seen:
            return n
        seen.add(n)
    return None


def _validate_template(model, tpl):
    diags = []

    def bad(code, message, span=None):
        diags.append(Diagnostic(code, message, span))

    dup = _first_dup(tpl.locals)
    if dup:
        bad("DuplicateLocal", f"{tpl.name}: local {dup} declared twice", tpl.span)
    for n in tpl.locals:
        if n in RESERVED_GLOBALS:
            bad("ReservedName", f"{tpl.name}: local {n} shadows the time encoding",
                tpl.span)
        if n in model.user_globals:
            bad("ShadowedGlobal", f"{tpl.name}: local {n} shadows a global",
                tpl.span)

    diags.extend(_check_vars(model, tpl, tpl.init, where=f"{tpl.name} init",
                             allow_self_id=tpl.replicated, span=tpl.span))
    diags.extend(_check_vars(model, tpl, tpl.tinv, where=f"{tpl.name} tinv",
                             allow_self_id=tpl.replicated, span=tpl.span))
    if _has_primed(tpl.tinv):
        bad("TInvPrimed", f"{tpl.name}: time invariant uses primed variables",
            tpl.span)
    if not _tinv_convex(tpl.tinv):
        bad("TInvNotConvex",
            f"{tpl.name}: time invariant is not a conjunction of clock bounds "
            "(optionally guarded by clock-free conditions)", tpl.span)

    for i, tr in enumerate(tpl.transitions):
        where = f"{tpl.name} transition {i}"
        if tr.kind in (T_SEND, T_RECV) and tr.label not in model.channels:
            bad("UndeclaredChannel", f"{where}: channel {tr.label} not declared",
                tr.span)
        if tr.kind == T_BARRIER and tr.label not in model.barriers:
            bad("UndeclaredBarrier", f"{where}: barrier {tr.label} not declared",
                tr.span)
        if tr.kind == T_PORT:
            owner = model.port_owner(tr.label)
            if owner is None:
                bad("UndeclaredPort", f"{where}: port {tr.label} not declared",
                    tr.span)
            elif owner != tpl.name:
                bad("PortOwnerMismatch",
                    f"{where}: port {tr.label} belongs to {owner}", tr.span)
        if _has_primed(tr.guard):
            bad("PrimedInGuard", f"{where}: guard mentions primed variables",
                tr.span)
        allow_peer = tr.kind in (T_SEND, T_RECV)
        diags.extend(_check_vars(model, tpl, tr.guard, where=where + " guard",
                                 allow_self_id=tpl.replicated,
                                 allow_peer=allow_peer, span=tr.span))
        for v, term in tr.assigns:
            if v.kind == LOCAL_NEXT and v.name not in tpl.locals:
                bad("UnknownAssignTarget",
                    f"{where}: assigns to unknown local {v.name}", tr.span)
            if v.kind == GLOBAL_NEXT:
                if v.name not in model.user_globals and v.name not in RESERVED_GLOBALS:
                    bad("UnknownAssignTarget",
                        f"{where}: assigns to unknown global {v.name}", tr.span)
                elif tr.kind in (T_BARRIER, T_PORT):
                    bad("BarrierWritesGlobal",
                        f"{where}: {tr.kind} transition writes global {v.name}; "
                        "synchronized steps must leave the global state unchanged",
                        tr.span)
                if v.name in RESERVED_GLOBALS and tr.iact_value is None:
                    bad("ReservedName",
                        f"{where}: cannot assign to {v.name}", tr.span)
            diags.extend(_check_vars(model, tpl, term, where=where + " update",
                                     allow_self_id=tpl.replicated,
                                     allow_peer=allow_peer, span=tr.span))

    # possible overlap of local and port transitions (rendezvous assumption:
    # a state must not enable both).  We accept the pair only when guard
    # disjointness is syntactically evident from single-variable bounds.
    locals_ = [t for t in tpl.transitions if t.kind == T_LOCAL
               and t.iact_value is None]
    ports = [t for t in tpl.transitions if t.kind == T_PORT]
    for lt in locals_:
        for pt in ports:
            if not _evidently_disjoint(lt.guard, pt.guard):
                bad("PossibleLocalPortOverlap",
                    f"{tpl.name}: a state may enable both a local transition "
                    f"and port {pt.label} (guard disjointness is not evident)",
                    pt.span)
    return diags


def _check_vars(model, tpl, node, where, allow_self_id, allow_peer=False,
                span=None):
    diags = []
    for v in variables(node):
        if v.kind in (GLOBAL, GLOBAL_NEXT):
            if v.name not in model.user_globals and v.name not in RESERVED_GLOBALS:
                diags.append(Diagnostic(
                    "UnknownVariable", f"{where}: unknown global {v.name}", span))
        elif v.kind in (LOCAL, LOCAL_NEXT):
            if v.name not in tpl.locals:
                diags.append(Diagnostic(
                    "UnknownVariable", f"{where}: unknown local {v.name}", span))
        elif v.kind == SELF_ID:
            if not allow_self_id:
                diags.append(Diagnostic(
                    "SelfIdInSingleton",
                    f"{where}: id is only meaningful in replicated templates",
                    span))
        elif v.kind == PEER_ID:
            if not allow_peer:
                diags.append(Diagnostic(
                    "PeerIdOutsideComm",
                    f"{where}: peer is only meaningful in send/recv transitions",
                    span))
    return diags


def _has_primed(node) -> bool:
    return any(v.kind in (GLOBAL_NEXT, LOCAL_NEXT) for v in variables(node))


def _tinv_convex(node) -> bool:
    """Syntactic convexity: conjunctions of clock bounds, each optionally
    guarded by a clock-free condition.  Disjunction, negation, dist and
    divisibility over the time variable are rejected."""
    if isinstance(node, And):
        return all(_tinv_convex(a) for a in node.args)
    if isinstance(node, BoolConst):
        return True
    if isinstance(node, Implies):
        return not _mentions_time(node.left) and _clock_bounds(node.right)
    if isinstance(node, Cmp):
        if _mentions_time(node.left) or _mentions_time(node.right):
            return node.op in ("<=", "<", ">=", ">", "=")
        return True
    if isinstance(node, (Or, Not, Dist, Divides)):
        return not _mentions_time(node)
    return False


def _clock_bounds(node) -> bool:
    if isinstance(node, And):
        return all(_clock_bounds(a) for a in node.args)
    if isinstance(node, Cmp):
        return node.op in ("<=", "<", ">=", ">", "=")
    if isinstance(node, BoolConst):
        return True
    return False


def _evidently_disjoint(g1, g2) -> bool:
    """True when two guards are syntactically exclusive: some variable is
    pinned to non-overlapping ranges by top-level conjuncts of both."""
    b1 = _var_bounds(g1)
    b2 = _var_bounds(g2)
    for v, (lo1, hi1) in b1.items():
        if v in b2:
            lo2, hi2 = b2[v]
            if hi1 < lo2 or hi2 < lo1:
                return True
    return False


_NEG_INF = float("-inf")
_POS_INF = float("inf")


def _var_bounds(guard) -> dict:
    """Per-variable [lo, hi] intervals from top-level var-vs-constant conjuncts."""
    bounds = {}

    def narrow(v, lo, hi):
        cur = bounds.get(v, (_NEG_INF, _POS_INF))
        bounds[v] = (max(cur[0], lo), min(cur[1], hi))

    for atom in conjuncts(guard):
        if not isinstance(atom, Cmp):
            continue
        left, op, right = atom.left, atom.op, atom.right
        if isinstance(left, Const) and isinstance(right, Var):
            left, right = right, left
            op = {"<=": ">=", "<": ">", ">=": "<=", ">": "<"}.get(op, op)
        if not (isinstance(left, Var) and isinstance(right, Const)):
            continue
        c = right.value
        if op == "=":
            narrow(left, c, c)
        elif op == "<=":
            narrow(left, _NEG_INF, c)
        elif op == "<":
            narrow(left, _NEG_INF, c - 1)
        elif op == ">=":
            narrow(left, c, _POS_INF)
        elif op == ">":
            narrow(left, c + 1, _POS_INF)
    return bounds
