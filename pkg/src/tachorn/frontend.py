"""Textual modeling language (.tan files): parser and pretty-printer.

The surface syntax maps 1:1 onto the model types.  Clock sugar is desugared
here: `reset x` becomes the assignment x' = C, and a clock comparison
`val(x) op k` becomes C - x op k (discrete time) or C - x op k*U (dense
time, integer numerator/denominator realization).  The printer emits a
canonical layout whose re-parse is structurally identical to the input
model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .constraints import (
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
    TRUE,
    FALSE,
    GLOBAL,
    GLOBAL_NEXT,
    LOCAL,
    LOCAL_NEXT,
    PEER_ID,
    SELF_ID,
    conj,
    conjuncts,
)
from .model import (
    DENSE,
    DISCRETE,
    ErrorRole,
    ProcessTemplate,
    SourceSpan,
    SystemModel,
    TIME_VAR,
    UNIT_VAR,
    T_BARRIER,
    T_LOCAL,
    T_PORT,
    T_RECV,
    T_SEND,
    make_transition,
)

KEYWORDS = {
    "system", "time", "discrete", "dense", "const", "globals", "global",
    "channel", "barrier", "port", "of", "interaction", "init", "error",
    "template", "replicated", "locals", "clock", "tinv", "trans", "local",
    "send", "recv", "when", "do", "reset", "and", "or", "not", "true",
    "false", "dist", "divides", "id", "peer", "val",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<int>[0-9]+)
  | (?P<op>:=|->|<=|>=|!=|[{}();,:=<>+\-*])
""", re.VERBOSE | re.DOTALL)


class ParseError(Exception):
    def __init__(self, message, span):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Token:
    kind: str  # name | int | op | eof
    text: str
    line: int
    col: int


def _lex(text, filename):
    toks = []
    pos = 0
    line = 1
    col = 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(filename, line, col, line, col))
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks


class _ClockVal:
    """Parse-time marker for val(x); removed during comparison desugaring."""

    def __init__(self, clock):
        self.clock = clock


class _Parser:
    def __init__(self, text, filename):
        self.filename = filename
        self.toks = _lex(text, filename)
        self.i = 0
        self.consts = {}
        self.time_model = DISCRETE
        # raw template records; Transition objects are built at the end of
        # parse_model once the full global list is known (frames cover it)
        self.raw_templates = []
        # template context while inside a template body
        self.tpl_locals = []
        self.tpl_clocks = set()

    # ---------------- token plumbing

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, text):
        t = self.peek()
        return t.text == text and t.kind in ("op", "name")

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text):
        t = self.peek()
        if not self.at(text):
            self.fail(f"expected {text!r}, found {t.text!r}" if t.kind != "eof"
                      else f"expected {text!r}, found end of input")
        return self.next()

    def span_of(self, tok):
        return SourceSpan(self.filename, tok.line, tok.col,
                          tok.line, tok.col + max(len(tok.text), 1) - 1)

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, self.span_of(tok))

    def name(self, what="name"):
        t = self.peek()
        if t.kind != "name" or t.text in KEYWORDS:
            self.fail(f"expected {what}, found {t.text!r}"
                      if t.kind != "eof" else f"expected {what}, found end of input")
        return self.next()

    def namelist(self):
        names = [self.name().text]
        while self.accept(","):
            names.append(self.name().text)
        return names

    # ---------------- model structure

    def parse_model(self):
        self.expect("system")
        self.expect("{")
        user_globals = []
        global_init = []
        channels = []
        barriers = []
        ports = []
        interactions = []
        error_roles = []
        body_seen = False
        while not self.at("}"):
            t = self.peek()
            if t.kind == "eof":
                self.fail("unexpected end of input inside system block")
            if self.at("time"):
                if body_seen:
                    self.fail("'time' must come before templates, init and "
                              "error blocks")
                self.next()
                mode = self.next()
                if mode.text == "discrete":
                    self.time_model = DISCRETE
                elif mode.text == "dense":
                    self.time_model = DENSE
                else:
                    self.fail("expected 'discrete' or 'dense'", mode)
                self.expect(";")
            elif self.accept("const"):
                n = self.name("constant name")
                self.expect("=")
                neg = bool(self.accept("-"))
                v = self.peek()
                if v.kind != "int":
                    self.fail("expected integer constant")
                self.next()
                self.consts[n.text] = -int(v.text) if neg else int(v.text)
                self.expect(";")
            elif self.at("globals") or self.at("global"):
                self.next()
                user_globals.extend(self.namelist())
                self.expect(";")
            elif self.accept("channel"):
                channels.extend(self.namelist())
                self.expect(";")
            elif self.accept("barrier"):
                barriers.extend(self.namelist())
                self.expect(";")
            elif self.accept("port"):
                p = self.name("port name")
                self.expect("of")
                owner = self.name("template name")
                ports.append((p.text, owner.text))
                self.expect(";")
            elif self.accept("interaction"):
                self.expect("{")
                interactions.append(tuple(self.namelist()))
                self.expect("}")
                self.expect(";")
            elif self.accept("init"):
                global_init.append(self.constraint())
                self.expect(";")
                body_seen = True
            elif self.accept("error"):
                error_roles.extend(self.error_block())
                body_seen = True
            elif self.at("template"):
                self.raw_templates.append(self.template())
                body_seen = True
            else:
                self.fail(f"unexpected {t.text!r} in system block")
        self.expect("}")
        t = self.peek()
        if t.kind != "eof":
            self.fail(f"unexpected {t.text!r} after system block")
        all_globals = (TIME_VAR,) + tuple(user_globals)
        if self.time_model == DENSE:
            all_globals = all_globals + (UNIT_VAR,)
        templates = tuple(self._build_template(rt, all_globals)
                          for rt in self.raw_templates)
        return SystemModel(
            self.time_model,
            tuple(user_globals),
            conj(*global_init),
            templates,
            tuple(channels),
            tuple(barriers),
            tuple(ports),
            tuple(interactions),
            tuple(error_roles),
        )

    def _build_template(self, rt, all_globals):
        transitions = tuple(
            make_transition(kind, label, guard, assigns, all_globals,
                            rt["locals"], span=span)
            for kind, label, guard, assigns, span in rt["trans"])
        return ProcessTemplate(rt["name"], rt["replicated"], rt["locals"],
                               rt["clocks"], rt["init"], rt["tinv"],
                               transitions, rt["span"])

    def error_block(self):
        self.expect("{")
        roles = []
        while not self.at("}"):
            tok = self.name("template name")
            self.expect(":")
            saved = (self.tpl_locals, self.tpl_clocks)
            # role constraints resolve against the named template when known
            self.tpl_locals, self.tpl_clocks = self._locals_of(tok.text)
            c = self.constraint()
            self.tpl_locals, self.tpl_clocks = saved
            self.expect(";")
            roles.append(ErrorRole(tok.text, c, self.span_of(tok)))
        self.expect("}")
        if not roles:
            self.fail("error block needs at least one role")
        return roles

    def _locals_of(self, tpl_name):
        for rt in self.raw_templates:
            if rt["name"] == tpl_name:
                return list(rt["locals"]), set(rt["clocks"])
        return [], set()

    def template(self):
        self.expect("template")
        name = self.name("template name")
        replicated = bool(self.accept("replicated"))
        self.expect("{")
        plain = []
        clocks = []
        init = []
        tinv = []
        transitions = []
        self.tpl_locals = []
        self.tpl_clocks = set()
        while not self.at("}"):
            t = self.peek()
            if t.kind == "eof":
                self.fail("unexpected end of input inside template")
            if self.accept("locals"):
                ns = self.namelist()
                plain.extend(ns)
                self.tpl_locals.extend(ns)
                self.expect(";")
            elif self.accept("clock"):
                ns = self.namelist()
                clocks.extend(ns)
                self.tpl_locals.extend(ns)
                self.tpl_clocks.update(ns)
                self.expect(";")
            elif self.accept("init"):
                init.append(self.constraint())
                self.expect(";")
            elif self.accept("tinv"):
                tinv.append(self.constraint())
                self.expect(";")
            elif self.at("trans"):
                transitions.append(self.transition())
            else:
                self.fail(f"unexpected {t.text!r} in template body")
        self.expect("}")
        rt = {
            "name": name.text,
            "replicated": replicated,
            "locals": tuple(plain) + tuple(clocks),
            "clocks": frozenset(clocks),
            "init": conj(*init),
            "tinv": conj(*tinv),
            "trans": transitions,
            "span": self.span_of(name),
        }
        self.tpl_locals = []
        self.tpl_clocks = set()
        return rt

    def transition(self):
        start = self.expect("trans")
        kind_tok = self.next()
        label = None
        if kind_tok.text == "local":
            kind = T_LOCAL
        elif kind_tok.text == "send":
            kind = T_SEND
            label = self.name("channel name").text
        elif kind_tok.text == "recv":
            kind = T_RECV
            label = self.name("channel name").text
        elif kind_tok.text == "barrier":
            kind = T_BARRIER
            label = self.name("barrier name").text
        elif kind_tok.text == "port":
            kind = T_PORT
            label = self.name("port name").text
        else:
            self.fail("expected local, send, recv, barrier or port", kind_tok)
        guard = TRUE
        if self.accept("when"):
            guard = self.constraint()
        assigns = []
        if self.accept("do"):
            assigns.append(self.update())
            while self.accept(","):
                assigns.append(self.update())
        self.expect(";")
        return (kind, label, guard, tuple(assigns), self.span_of(start))

    def update(self):
        if self.accept("reset"):
            n = self.name("clock name")
            if n.text not in self.tpl_clocks:
                self.fail(f"reset of {n.text!r}, which is not a clock", n)
            return (Var(LOCAL_NEXT, n.text), Var(GLOBAL, TIME_VAR))
        n = self.name("assignment target")
        self.expect(":=")
        term = self.term()
        if _contains_clockval(term):
            self.fail("clock values cannot appear in assignments; use reset", n)
        if n.text in self.tpl_clocks:
            self.fail(f"clock {n.text!r} can only be changed by reset", n)
        if n.text in self.tpl_locals:
            target = Var(LOCAL_NEXT, n.text)
        else:
            target = Var(GLOBAL_NEXT, n.text)
        return (target, term)

    # ---------------- constraints (precedence: -> lowest, then or, and, not)

    def constraint(self):
        left = self.c_or()
        if self.accept("->"):
            right = self.constraint()
            return Implies(left, right)
        return left

    def c_or(self):
        parts = [self.c_and()]
        while self.accept("or"):
            parts.append(self.c_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def c_and(self):
        parts = [self.c_not()]
        while self.accept("and"):
            parts.append(self.c_not())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def c_not(self):
        if self.accept("not"):
            return Not(self.c_not())
        return self.atom()

    def atom(self):
        t = self.peek()
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.accept("dist"):
            self.expect("(")
            args = [self.term()]
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
            for a in args:
                if _contains_clockval(a):
                    self.fail("dist over clock values is not supported", t)
            return Dist(tuple(args))
        if self.accept("divides"):
            self.expect("(")
            k = self.peek()
            if k.kind != "int":
                self.fail("expected integer divisor")
            self.next()
            self.expect(",")
            arg = self.term()
            self.expect(")")
            if _contains_clockval(arg):
                self.fail("divides over clock values is not supported", t)
            return Divides(int(k.text), arg)
        if self.at("("):
            # either a parenthesized constraint or a parenthesized term in a
            # comparison; try the constraint reading first and rewind on failure
            saved = self.i
            try:
                self.expect("(")
                inner = self.constraint()
                self.expect(")")
                if self.peek().text in ("=", "!=", "<=", "<", ">=", ">", "+",
                                        "-", "*"):
                    raise ParseError("term context", self.span_of(self.peek()))
                return inner
            except ParseError:
                self.i = saved
        return self.comparison()

    def comparison(self):
        t = self.peek()
        left = self.term()
        op_tok = self.peek()
        if op_tok.text not in ("=", "!=", "<=", "<", ">=", ">"):
            self.fail("expected a comparison operator", op_tok)
        self.next()
        right = self.term()
        return self.desugar_cmp(op_tok.text, left, right, t)

    def desugar_cmp(self, op, left, right, at_tok):
        lc = _contains_clockval(left)
        rc = _contains_clockval(right)
        if not lc and not rc:
            return Cmp(op, left, right)
        # clock comparisons are restricted to: val(x) op k, val(x) op val(y),
        # val(x) - val(y) op k
        if lc and rc:
            if isinstance(left, _ClockVal) and isinstance(right, _ClockVal):
                return Cmp(op, self._age(left), self._age(right))
            self.fail("unsupported clock comparison shape", at_tok)
        if rc:  # normalize the clock side to the left
            op = {"<=": ">=", "<": ">", ">=": "<=", ">": "<"}.get(op, op)
            left, right = right, left
        if isinstance(left, _ClockVal):
            return Cmp(op, self._age(left), self._scale(right, at_tok))
        if isinstance(left, Sub) and isinstance(left.left, _ClockVal) \
                and isinstance(left.right, _ClockVal):
            # val(x) - val(y) = (C-x) - (C-y) = y - x
            diff = Sub(Var(LOCAL, left.right.clock), Var(LOCAL, left.left.clock))
            return Cmp(op, diff, self._scale(right, at_tok))
        self.fail("unsupported clock comparison shape; use val(x) op k, "
                  "val(x) op val(y) or val(x) - val(y) op k", at_tok)

    def _age(self, cv):
        return Sub(Var(GLOBAL, TIME_VAR), Var(LOCAL, cv.clock))

    def _scale(self, term, at_tok):
        """Scale a time bound by the denominator U in dense mode."""
        if self.time_model == DISCRETE:
            return term
        k = None
        if isinstance(term, Const):
            k = term.value
        elif isinstance(term, Neg) and isinstance(term.arg, Const):
            k = -term.arg.value
        if k is None:
            self.fail("dense time allows only literal clock bounds", at_tok)
        return Mul(k, Var(GLOBAL, UNIT_VAR))

    # ---------------- terms

    def term(self):
        # left-nested binary chains; a parenthesized sum keeps its own node
        left = self.multerm()
        while True:
            if self.accept("+"):
                left = Add((left, self.multerm()))
            elif self.accept("-"):
                left = Sub(left, self.multerm())
            else:
                return left

    def multerm(self):
        left = self.factor()
        while self.accept("*"):
            right = self.factor()
            lk = _const_of(left)
            rk = _const_of(right)
            if lk is not None:
                left = Mul(lk, right)
            elif rk is not None:
                left = Mul(rk, left)
            else:
                self.fail("nonlinear product of two variables")
        return left

    def factor(self):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if self.accept("-"):
            arg = self.factor()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Neg(arg)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if self.accept("id"):
            return Var(SELF_ID)
        if self.accept("peer"):
            return Var(PEER_ID)
        if self.accept("val"):
            self.expect("(")
            n = self.name("clock name")
            self.expect(")")
            if n.text not in self.tpl_clocks:
                self.fail(f"val of {n.text!r}, which is not a clock", n)
            return _ClockVal(n.text)
        if t.kind == "name" and t.text not in KEYWORDS:
            self.next()
            if t.text in self.consts:
                return Const(self.consts[t.text])
            if t.text in self.tpl_clocks:
                self.fail(f"clock {t.text!r} used without val()", t)
            if t.text in self.tpl_locals:
                return Var(LOCAL, t.text)
            return Var(GLOBAL, t.text)
        self.fail(f"expected a term, found {t.text!r}"
                  if t.kind != "eof" else "expected a term, found end of input")


def _contains_clockval(term) -> bool:
    if isinstance(term, _ClockVal):
        return True
    if isinstance(term, (Add,)):
        return any(_contains_clockval(a) for a in term.args)
    if isinstance(term, Sub):
        return _contains_clockval(term.left) or _contains_clockval(term.right)
    if isinstance(term, (Neg, Mul)):
        return _contains_clockval(term.arg)
    return False


def _const_of(term):
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Neg) and isinstance(term.arg, Const):
        return -term.arg.value
    return None


def parse_model(text: str, filename: str = "<input>") -> SystemModel:
    return _Parser(text, filename).parse_model()


def parse_file(path) -> SystemModel:
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read(), filename=str(path))


# ---------------------------------------------------------------- printing


def print_model(model: SystemModel) -> str:
    """Canonical text for a model; parse_model(print_model(m)) == m."""
    out = ["system {"]
    out.append(f"  time {model.time_model};")
    if model.user_globals:
        out.append("  globals " + ", ".join(model.user_globals) + ";")
    if model.global_init != TRUE:
        out.append("  init " + _pc(model.global_init, None, model) + ";")
    if model.channels:
        out.append("  channel " + ", ".join(model.channels) + ";")
    if model.barriers:
        out.append("  barrier " + ", ".join(model.barriers) + ";")
    for p, owner in model.ports:
        out.append(f"  port {p} of {owner};")
    for ia in model.interactions:
        out.append("  interaction { " + ", ".join(ia) + " };")
    for t in model.templates:
        out.extend(_print_template(t, model))
    if model.error_roles:
        out.append("  error {")
        for r in model.error_roles:
            try:
                tpl = model.template(r.template)
            except KeyError:
                tpl = None
            out.append(f"    {r.template}: " + _pc(r.constraint, tpl, model) + ";")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


def _print_template(t: ProcessTemplate, model) -> list:
    head = f"  template {t.name}" + (" replicated" if t.replicated else "")
    lines = [head + " {"]
    plain = [n for n in t.locals if n not in t.clocks]
    clocks = [n for n in t.locals if n in t.clocks]
    if plain:
        lines.append("    locals " + ", ".join(plain) + ";")
    if clocks:
        lines.append("    clock " + ", ".join(clocks) + ";")
    if t.init != TRUE:
        lines.append("    init " + _pc(t.init, t, model) + ";")
    if t.tinv != TRUE:
        lines.append("    tinv " + _pc(t.tinv, t, model) + ";")
    for tr in t.transitions:
        lines.append("    " + _print_transition(tr, t, model))
    lines.append("  }")
    return lines


def _print_transition(tr, tpl, model) -> str:
    kind_txt = {T_LOCAL: "local", T_SEND: f"send {tr.label}",
                T_RECV: f"recv {tr.label}", T_BARRIER: f"barrier {tr.label}",
                T_PORT: f"port {tr.label}"}[tr.kind]
    s = "trans " + kind_txt
    if tr.guard != TRUE:
        s += " when " + _pc(tr.guard, tpl, model)
    if tr.assigns:
        parts = []
        for v, term in tr.assigns:
            if v.kind == LOCAL_NEXT and v.name in tpl.clocks \
                    and isinstance(term, Var) and term.kind == GLOBAL \
                    and term.name == TIME_VAR:
                parts.append(f"reset {v.name}")
            else:
                parts.append(f"{v.name} := " + _pt(term, tpl, model, 0))
        s += " do " + ", ".join(parts)
    return s + ";"


# constraint printing with minimal parentheses
# levels: implies=0, or=1, and=2, not=3, atom=4


def _pc(c, tpl, model, level=0) -> str:
    if isinstance(c, BoolConst):
        return "true" if c.value else "false"
    if isinstance(c, Implies):
        s = _pc(c.left, tpl, model, 1) + " -> " + _pc(c.right, tpl, model, 0)
        return f"({s})" if level > 0 else s
    if isinstance(c, Or):
        s = " or ".join(_pc(a, tpl, model, 2) for a in c.args)
        return f"({s})" if level > 1 else s
    if isinstance(c, And):
        s = " and ".join(_pc(a, tpl, model, 3) for a in c.args)
        return f"({s})" if level > 2 else s
    if isinstance(c, Not):
        return "not " + _pc(c.arg, tpl, model, 3)
    if isinstance(c, Dist):
        return "dist(" + ", ".join(_pt(a, tpl, model, 0) for a in c.args) + ")"
    if isinstance(c, Divides):
        return f"divides({c.divisor}, " + _pt(c.arg, tpl, model, 0) + ")"
    if isinstance(c, Cmp):
        return _print_cmp(c, tpl, model)
    raise TypeError(f"cannot print constraint {c!r}")


def _is_age(term, tpl):
    return (tpl is not None and isinstance(term, Sub)
            and isinstance(term.left, Var) and term.left.kind == GLOBAL
            and term.left.name == TIME_VAR and isinstance(term.right, Var)
            and term.right.kind == LOCAL and term.right.name in tpl.clocks)


def _unscale(term, model):
    """Undo dense-mode k*U scaling for display; None when not that shape."""
    if model.time_model == DENSE:
        if isinstance(term, Mul) and isinstance(term.arg, Var) \
                and term.arg.kind == GLOBAL and term.arg.name == UNIT_VAR:
            return str(term.coeff)
        return None
    return None


def _print_cmp(c, tpl, model) -> str:
    left, op, right = c.left, c.op, c.right
    if _is_age(left, tpl):
        x = left.right.name
        if _is_age(right, tpl):
            return f"val({x}) {op} val({right.right.name})"
        u = _unscale(right, model)
        if u is not None:
            return f"val({x}) {op} {u}"
        if model.time_model == DISCRETE:
            return f"val({x}) {op} " + _pt(right, tpl, model, 0)
    if _is_age(right, tpl):
        flipped = {"<=": ">=", "<": ">", ">=": "<=", ">": "<"}.get(op, op)
        return _print_cmp(Cmp(flipped, right, left), tpl, model)
    # val(x) - val(y) op k was stored as (y - x) op k'
    if tpl is not None and isinstance(left, Sub) \
            and isinstance(left.left, Var) and left.left.kind == LOCAL \
            and left.left.name in tpl.clocks \
            and isinstance(left.right, Var) and left.right.kind == LOCAL \
            and left.right.name in tpl.clocks:
        x, y = left.right.name, left.left.name
        u = _unscale(right, model)
        rhs = u if u is not None else _pt(right, tpl, model, 0)
        return f"val({x}) - val({y}) {op} {rhs}"
    return _pt(left, tpl, model, 0) + f" {op} " + _pt(right, tpl, model, 0)


# term printing; levels: add=0, mul=1, atom=2


def _pt(t, tpl, model, level) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Var):
        if t.kind == SELF_ID:
            return "id"
        if t.kind == PEER_ID:
            return "peer"
        return t.name
    if isinstance(t, Add):
        first = _pt(t.args[0], tpl, model, 0)
        rest = [_pt(a, tpl, model, 1) for a in t.args[1:]]
        s = " + ".join([first] + rest)
        return f"({s})" if level > 0 else s
    if isinstance(t, Sub):
        s = _pt(t.left, tpl, model, 0) + " - " + _pt(t.right, tpl, model, 1)
        return f"({s})" if level > 0 else s
    if isinstance(t, Neg):
        return "-" + _pt(t.arg, tpl, model, 2)
    if isinstance(t, Mul):
        s = f"{t.coeff} * " + _pt(t.arg, tpl, model, 2)
        return f"({s})" if level > 1 else s
    raise TypeError(f"cannot print term {t!r}")
