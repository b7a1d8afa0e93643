"""Horn clause generation for process networks under an invariant schema.

One engine covers the three system shapes; the wrappers pick tag families:

  encode_finite        all templates singleton; schema vectors over {0,1}
  encode_homogeneous   a single replicated template, k tracked copies
  encode_heterogeneous anything else (mixed singleton/replicated types)

A schema is an antichain of vectors, one entry per template, giving how
many instances of each type a relation tracks.  Relation R_a1_..._an has
arguments: all globals, then per type i, per tracked slot: the process id
(replicated types only) followed by that template's locals.

Generated systems are deterministic: identical inputs give byte-identical
SMT-LIB text downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .constraints import (
    Cmp, Const, Dist, Sub, Var, FALSE, TRUE, CVAR, GLOBAL, GLOBAL_NEXT,
    LOCAL, LOCAL_NEXT, PEER_ID, SELF_ID, conj, conjuncts, disj, fold,
    substitute, variables,
)
from .hornir import HornClause, HornSystem, RelApp, RelationSymbol
from .model import (
    DENSE, SystemModel, TIME_VAR, UNIT_VAR, T_BARRIER, T_LOCAL, T_PORT,
    T_RECV, T_SEND, make_transition,
)

TRANSPOSITIONS = "transpositions"
FULL = "full"
BODY_CONTEXT = "context"
BODY_ALL = "all"
AGES = "ages"
TIMESTAMPS = "timestamps"
SPLIT = "split"
INLINE = "inline"

# Guard against pathological location products when splitting control.
SPLIT_LIMIT = 200_000


@dataclass(frozen=True)
class EncodingConfig:
    symmetry: str = TRANSPOSITIONS
    body: str = BODY_CONTEXT
    clock_basis: str = AGES
    locations: str = SPLIT


class EncodingError(Exception):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class _Tags:
    init: str
    cons: str
    env: str
    err: str


FINITE_TAGS = _Tags("Fig3-(2)", "Fig3-(3)", "Fig3-(3)", "Fig3-(4)")
HOMOGENEOUS_TAGS = _Tags("Fig4-(6)", "Fig4-(7)", "Fig4-(8)", "Fig4-(9)")
HETEROGENEOUS_TAGS = _Tags("Het-init", "Het-cons", "Het-env", "Het-err")


def canonical_schema(schema):
    """Vectors as tuples, sorted lexicographically descending."""
    vecs = sorted({tuple(int(x) for x in v) for v in schema}, reverse=True)
    return tuple(vecs)


def schema_text(schema):
    return "{" + ", ".join("(" + ",".join(str(x) for x in v) + ")"
                           for v in schema) + "}"


def permutation_generators(n, mode):
    """Permutations of range(n) used for the symmetry clauses."""
    if n < 2:
        return []
    if mode == FULL:
        ident = tuple(range(n))
        return [p for p in itertools.permutations(range(n)) if p != ident]
    gens = []
    for i in range(n - 1):
        p = list(range(n))
        p[i], p[i + 1] = p[i + 1], p[i]
        gens.append(tuple(p))
    return gens


def _check_schema(model, schema):
    n = len(model.templates)
    for v in schema:
        if len(v) != n:
            raise EncodingError(
                "SchemaArityMismatch",
                f"vector {v} has {len(v)} entries for {n} process types")
        for i, a in enumerate(v):
            if a < 0:
                raise EncodingError("SchemaArityMismatch",
                                    f"negative entry in {v}")
            if not model.templates[i].replicated and a > 1:
                raise EncodingError(
                    "SingletonMultiplicityExceeded",
                    f"vector {v} tracks {a} copies of singleton "
                    f"{model.templates[i].name}")


def finite_control(tpl):
    """Locals provably confined to a finite value set: pinned to one
    constant initially and only ever assigned constants.  Returns
    {name: sorted value tuple}; clocks are never included."""
    pinned = {}
    for a in conjuncts(tpl.init):
        if isinstance(a, Cmp) and a.op == "=":
            l, r = a.left, a.right
            if isinstance(r, Var) and isinstance(l, Const):
                l, r = r, l
            if isinstance(l, Var) and l.kind == LOCAL \
                    and isinstance(r, Const):
                pinned.setdefault(l.name, set()).add(r.value)
    values = {x: set() for x in tpl.locals if x not in tpl.clocks}
    stable = set(values)
    for tr in tpl.transitions:
        for v, term in tr.assigns:
            if v.kind == LOCAL_NEXT and v.name in stable:
                if isinstance(term, Const):
                    values[v.name].add(term.value)
                else:
                    stable.discard(v.name)
    out = {}
    for x in tpl.locals:
        if x in stable and len(pinned.get(x, ())) == 1:
            out[x] = tuple(sorted(values[x] | pinned[x]))
    return out


def _check_no_ports(model):
    if model.ports or model.interactions:
        raise EncodingError(
            "UnreducedPorts",
            "apply bip_to_barrier before encoding a model with ports")
    for t in model.templates:
        for tr in t.transitions:
            if tr.kind == T_PORT:
                raise EncodingError(
                    "UnreducedPorts",
                    f"template {t.name} still has a port transition")


class _Slot:
    """One process position in a clause: a key naming its variables."""

    __slots__ = ("key", "ti", "tpl", "fresh")

    def __init__(self, key, ti, tpl, fresh):
        self.key = key
        self.ti = ti
        self.tpl = tpl
        self.fresh = fresh  # id introduced by this clause (gets id >= 0)

    def id_var(self):
        return Var(CVAR, f"p_{self.key}") if self.tpl.replicated else None


class _Encoder:
    def __init__(self, model, schema, config, tags, flavor):
        _check_no_ports(model)
        self.m = model
        self.A = canonical_schema(schema)
        _check_schema(model, self.A)
        self.cfg = config
        self.tags = tags
        self.flavor = flavor
        self.G = model.globals
        self.rels = {v: RelationSymbol(self._rel_name(v), self._arity(v))
                     for v in self.A}
        self.clauses = []

    # ------------------------------------------------------------ naming

    def _rel_name(self, vec):
        return "R_" + "_".join(str(a) for a in vec)

    def _arity(self, vec):
        n = len(self.G)
        for i, a in enumerate(vec):
            t = self.m.templates[i]
            n += a * ((1 if t.replicated else 0) + len(t.locals))
        return n

    def tracked(self, vec):
        """Tracked slots per type for a vector: {ti: [slot, ...]}."""
        out = {}
        for i, a in enumerate(vec):
            t = self.m.templates[i]
            out[i] = [_Slot(f"{t.name}_{j + 1}", i, t, False)
                      for j in range(a)]
        return out

    def adjoined(self, ti, suffix):
        t = self.m.templates[ti]
        return _Slot(f"{t.name}_{suffix}", ti, t, True)

    # ------------------------------------------------- variable plumbing

    def gvars(self, prefix):
        return [Var(CVAR, f"{prefix}_{g}") for g in self.G]

    def slot_args(self, slot, primed=()):
        args = []
        iv = slot.id_var()
        if iv is not None:
            args.append(iv)
        vp = "w" if slot.key in primed else "v"
        args.extend(Var(CVAR, f"{vp}_{slot.key}_{x}")
                    for x in slot.tpl.locals)
        return args

    def app(self, vec, slots_by_type, gp="g", primed=()):
        args = self.gvars(gp)
        for i in range(len(vec)):
            for s in slots_by_type.get(i, ()):
                args.extend(self.slot_args(s, primed))
        return RelApp(self.rels[vec], tuple(args))

    def state_map(self, slot, gp="g", self_id=True):
        m = {Var(GLOBAL, g): Var(CVAR, f"{gp}_{g}") for g in self.G}
        for x in slot.tpl.locals:
            m[Var(LOCAL, x)] = Var(CVAR, f"v_{slot.key}_{x}")
        if self_id and slot.tpl.replicated:
            m[Var(SELF_ID)] = slot.id_var()
        return m

    def update_map(self, slot, gp="g", gnp="h", peer=None):
        m = self.state_map(slot, gp)
        for g in self.G:
            m[Var(GLOBAL_NEXT, g)] = Var(CVAR, f"{gnp}_{g}")
        for x in slot.tpl.locals:
            m[Var(LOCAL_NEXT, x)] = Var(CVAR, f"w_{slot.key}_{x}")
        if peer is not None:
            m[Var(PEER_ID)] = peer
        return m

    # --------------------------------------------------- context bodies

    def ctxt(self, focus_types, pools):
        """Body literal specs (vec, slots_by_type) for the clause context.

        pools maps type index to the slots available for that type; pads
        with fresh slots when a vector needs more copies than available.
        Returns (literal specs, pad slots created).
        """
        pools = {i: list(v) for i, v in pools.items()}
        pads = []
        include_all = self.cfg.body == BODY_ALL
        chosen = [v for v in self.A
                  if include_all or any(v[i] > 0 for i in focus_types)]
        # extend pools far enough for every chosen vector
        for v in chosen:
            for i, a in enumerate(v):
                pool = pools.setdefault(i, [])
                while len(pool) < a:
                    pad = self.adjoined(i, f"f{len(pads) + 1}")
                    pads.append(pad)
                    pool.append(pad)
        lits = []
        seen = set()
        for v in chosen:
            per_type = []
            for i in range(len(v)):
                per_type.append(
                    list(itertools.combinations(pools.get(i, []), v[i])))
            for combo in itertools.product(*per_type):
                slots = {i: list(c) for i, c in enumerate(combo)}
                sig = (self.rels[v].name,
                       tuple(s.key for c in combo for s in c))
                if sig not in seen:
                    seen.add(sig)
                    lits.append((v, slots))
        return lits, pads

    def side_conditions(self, *slot_groups):
        """Ground facts attached to every clause body: dist per type,
        id >= 0 for fresh ids, clock histories (a clock only ever stores
        a past value of C, and C starts at 0 and grows, so clocks sit in
        [0, C]), C >= 0 itself, and U >= 1 in dense mode.  All are
        invariants of the concrete semantics; adding them to premises
        loses no real behaviour and spares the solver rediscovering
        them."""
        by_type = {}
        order = []
        for group in slot_groups:
            for s in group:
                if s.ti not in by_type:
                    by_type[s.ti] = []
                    order.append(s.ti)
                if s.key not in [x.key for x in by_type[s.ti]]:
                    by_type[s.ti].append(s)
        parts = []
        for ti in order:
            ids = [s.id_var() for s in by_type[ti] if s.id_var() is not None]
            if len(ids) >= 2:
                parts.append(Dist(tuple(ids)))
        for ti in order:
            for s in by_type[ti]:
                if s.fresh and s.id_var() is not None:
                    parts.append(Cmp(">=", s.id_var(), Const(0)))
        now = Var(CVAR, f"g_{TIME_VAR}")
        parts.append(Cmp(">=", now, Const(0)))
        for ti in order:
            for s in by_type[ti]:
                for x in s.tpl.locals:
                    if x in s.tpl.clocks:
                        v = Var(CVAR, f"v_{s.key}_{x}")
                        parts.append(Cmp(">=", v, Const(0)))
                        parts.append(Cmp("<=", v, now))
        if self.m.time_model == DENSE:
            parts.append(Cmp(">=", Var(CVAR, f"g_{UNIT_VAR}"), Const(1)))
        return parts

    def _flat(self, slots_by_type):
        out = []
        for i in sorted(slots_by_type):
            out.extend(slots_by_type[i])
        return out

    def emit(self, head, body_specs, constraint_parts, extra_slots, tag,
             comment):
        body_slots = [self._flat(s) for _, s in body_specs]
        side = self.side_conditions(*(body_slots + [extra_slots]))
        body = tuple(self.app(v, s) for v, s in body_specs)
        self.clauses.append(HornClause(
            head, body, conj(*(side + constraint_parts)), tag, comment))

    @staticmethod
    def merge_specs(self_spec, ctxt_specs):
        """Self literal first, context literals after, deduplicated."""
        def sig(spec):
            v, slots = spec
            return (v, tuple(s.key for i in sorted(slots) for s in slots[i]))
        out = [self_spec]
        seen = {sig(self_spec)}
        for spec in ctxt_specs:
            if sig(spec) not in seen:
                seen.add(sig(spec))
                out.append(spec)
        return out

    # ----------------------------------------------------- clause groups

    def transitions(self, ti, kind, label=None):
        t = self.m.templates[ti]
        return [(idx, tr) for idx, tr in enumerate(t.transitions)
                if tr.kind == kind and (label is None or tr.label == label)]

    def add_symmetry(self):
        for vec in self.A:
            slots = self.tracked(vec)
            for i, a in enumerate(vec):
                if not self.m.templates[i].replicated or a < 2:
                    continue
                for perm in permutation_generators(a, self.cfg.symmetry):
                    permuted = dict(slots)
                    permuted[i] = [slots[i][j] for j in perm]
                    head = self.app(vec, permuted)
                    self.emit(head, [(vec, slots)], [], [],
                              "symmetry",
                              f"{self.rels[vec].name} invariant under "
                              f"swapping {self.m.templates[i].name} copies")

    def add_initiation(self):
        for vec in self.A:
            slots = self.tracked(vec)
            parts = [substitute(self.m.initial_global_constraint(),
                                {Var(GLOBAL, g): Var(CVAR, f"g_{g}")
                                 for g in self.G})]
            all_slots = self._flat(slots)
            for s in all_slots:
                parts.append(substitute(
                    self.m.initial_template_constraint(s.tpl),
                    self.state_map(s)))
            # initial ids are drawn from the naturals
            fresh = [_Slot(s.key, s.ti, s.tpl, True) for s in all_slots]
            side = self.side_conditions(fresh)
            head = self.app(vec, slots)
            self.clauses.append(HornClause(
                head, (), conj(*(side + parts)), self.tags.init,
                f"initial states of {self.rels[vec].name}"))

    def add_consecution(self):
        for vec in self.A:
            slots = self.tracked(vec)
            for ti in range(len(vec)):
                for j, stepper in enumerate(slots[ti]):
                    for idx, tr in self.transitions(ti, T_LOCAL):
                        upd = substitute(tr.update, self.update_map(stepper))
                        grd = substitute(tr.guard, self.state_map(stepper))
                        ctxt, pads = self.ctxt({ti}, slots)
                        specs = self.merge_specs((vec, slots), ctxt)
                        head = self.app(vec, slots, gp="h",
                                        primed=(stepper.key,))
                        self.emit(head, specs, [grd, upd], pads,
                                  self.tags.cons,
                                  f"{stepper.key} fires local transition "
                                  f"{idx + 1}")

    def add_env(self):
        for vec in self.A:
            slots = self.tracked(vec)
            for ti in range(len(vec)):
                t = self.m.templates[ti]
                untracked_possible = (t.replicated or vec[ti] == 0)
                if not untracked_possible:
                    continue
                for idx, tr in self.transitions(ti, T_LOCAL):
                    env = self.adjoined(ti, "e")
                    pools = dict(slots)
                    pools[ti] = slots[ti] + [env]
                    upd = substitute(tr.update, self.update_map(env))
                    grd = substitute(tr.guard, self.state_map(env))
                    ctxt, pads = self.ctxt({ti}, pools)
                    specs = self.merge_specs((vec, slots), ctxt)
                    head = self.app(vec, slots, gp="h")
                    self.emit(head, specs, [grd, upd], [env] + pads,
                              self.tags.env,
                              f"untracked {t.name} fires local transition "
                              f"{idx + 1}")

    def add_time(self):
        time_next = {Var(GLOBAL, g): Var(CVAR, f"g_{g}") for g in self.G}
        time_next[Var(GLOBAL, TIME_VAR)] = Var(CVAR, "h_C")
        for vec in self.A:
            slots = self.tracked(vec)
            parts = [Cmp(">=", Var(CVAR, "h_C"),
                         Var(CVAR, f"g_{TIME_VAR}"))]
            for s in self._flat(slots):
                tinv = s.tpl.tinv
                if tinv == TRUE:
                    continue
                m = dict(time_next)
                for x in s.tpl.locals:
                    m[Var(LOCAL, x)] = Var(CVAR, f"v_{s.key}_{x}")
                if s.tpl.replicated:
                    m[Var(SELF_ID)] = s.id_var()
                parts.append(substitute(tinv, m))
            head_globals = ["h_C" if g == TIME_VAR else f"g_{g}"
                            for g in self.G]
            args = [Var(CVAR, n) for n in head_globals]
            for i in range(len(vec)):
                for s in slots[i]:
                    args.extend(self.slot_args(s))
            head = RelApp(self.rels[vec], tuple(args))
            self.emit(head, [(vec, slots)], parts, [], "Time",
                      "time elapse")

    # ------------------------------------------------------ channels

    def _comm_constraint(self, tr_s, tr_r, slot_s, slot_r):
        peer_s = slot_r.id_var()
        peer_r = slot_s.id_var()
        for tr, peer, other in ((tr_s, peer_s, slot_r), (tr_r, peer_r, slot_s)):
            if peer is None:
                used = set(variables(tr.guard)) | set(variables(tr.update))
                if Var(PEER_ID) in used:
                    raise EncodingError(
                        "PeerWithSingletonPartner",
                        f"transition on {tr.label} uses peer, but the "
                        f"partner template {other.tpl.name} is a singleton "
                        "and has no id")
        send_m = self.update_map(slot_s, gp="g", gnp="m", peer=peer_s)
        recv_m = self.update_map(slot_r, gp="m", gnp="h", peer=peer_r)
        gm_s = self.state_map(slot_s, gp="g")
        gm_r = self.state_map(slot_r, gp="m")
        if peer_s is not None:
            gm_s[Var(PEER_ID)] = peer_s
        if peer_r is not None:
            gm_r[Var(PEER_ID)] = peer_r
        return [substitute(tr_s.guard, gm_s),
                substitute(tr_s.update, send_m),
                substitute(tr_r.guard, gm_r),
                substitute(tr_r.update, recv_m)]

    def add_channels(self):
        pairs = []
        for ch in self.m.channels:
            for ts in range(len(self.m.templates)):
                for si, tr_s in self.transitions(ts, T_SEND, ch):
                    for tr_ in range(len(self.m.templates)):
                        for ri, tr_r in self.transitions(tr_, T_RECV, ch):
                            pairs.append((ch, ts, si, tr_s, tr_, ri, tr_r))
        for case in ("Eq10", "Eq11", "Eq12", "Eq13"):
            for ch, ts, si, tr_s, tr_, ri, tr_r in pairs:
                getattr(self, "_" + case.lower())(ch, ts, si, tr_s,
                                                  tr_, ri, tr_r)

    def _eq10(self, ch, ts, si, tr_s, tr_, ri, tr_r):
        for vec in self.A:
            slots = self.tracked(vec)
            for slot_s in slots[ts]:
                for slot_r in slots[tr_]:
                    if slot_s.key == slot_r.key:
                        continue
                    parts = self._comm_constraint(tr_s, tr_r, slot_s, slot_r)
                    ctxt, pads = self.ctxt({ts, tr_}, slots)
                    specs = self.merge_specs((vec, slots), ctxt)
                    head = self.app(vec, slots, gp="h",
                                    primed=(slot_s.key, slot_r.key))
                    self.emit(head, specs, parts, pads, "Eq10",
                              f"{ch}: {slot_s.key} sends, {slot_r.key} "
                              f"receives")

    def _adjoinable(self, ti, vec):
        """An untracked instance of type ti can exist under vec."""
        t = self.m.templates[ti]
        return t.replicated or vec[ti] == 0

    def _eq11(self, ch, ts, si, tr_s, tr_, ri, tr_r):
        for vec in self.A:
            if not self._adjoinable(tr_, vec):
                continue
            slots = self.tracked(vec)
            recv = self.adjoined(tr_, "cr")
            for slot_s in slots[ts]:
                parts = self._comm_constraint(tr_s, tr_r, slot_s, recv)
                pools = dict(slots)
                pools[tr_] = slots[tr_] + [recv]
                ctxt, pads = self.ctxt({ts, tr_}, pools)
                specs = self.merge_specs((vec, slots), ctxt)
                head = self.app(vec, slots, gp="h", primed=(slot_s.key,))
                self.emit(head, specs, parts, [recv] + pads, "Eq11",
                          f"{ch}: {slot_s.key} sends to untracked "
                          f"{recv.tpl.name}")

    def _eq12(self, ch, ts, si, tr_s, tr_, ri, tr_r):
        for vec in self.A:
            if not self._adjoinable(ts, vec):
                continue
            slots = self.tracked(vec)
            send = self.adjoined(ts, "cs")
            for slot_r in slots[tr_]:
                parts = self._comm_constraint(tr_s, tr_r, send, slot_r)
                pools = dict(slots)
                pools[ts] = slots[ts] + [send]
                ctxt, pads = self.ctxt({ts, tr_}, pools)
                specs = self.merge_specs((vec, slots), ctxt)
                head = self.app(vec, slots, gp="h", primed=(slot_r.key,))
                self.emit(head, specs, parts, [send] + pads, "Eq12",
                          f"{ch}: untracked {send.tpl.name} sends to "
                          f"{slot_r.key}")

    def _eq13(self, ch, ts, si, tr_s, tr_, ri, tr_r):
        for vec in self.A:
            if not self._adjoinable(ts, vec) or not self._adjoinable(tr_, vec):
                continue
            if ts == tr_ and not self.m.templates[ts].replicated:
                continue  # a singleton cannot supply two distinct instances
            slots = self.tracked(vec)
            send = self.adjoined(ts, "cs")
            recv = self.adjoined(tr_, "cr")
            parts = self._comm_constraint(tr_s, tr_r, send, recv)
            pools = dict(slots)
            if tr_ == ts:
                pools[ts] = slots[ts] + [send, recv]
            else:
                pools[ts] = slots[ts] + [send]
                pools[tr_] = slots[tr_] + [recv]
            ctxt, pads = self.ctxt({ts, tr_}, pools)
            specs = self.merge_specs((vec, slots), ctxt)
            head = self.app(vec, slots, gp="h")
            self.emit(head, specs, parts, [send, recv] + pads, "Eq13",
                      f"{ch}: communication among untracked processes")

    # ------------------------------------------------------ barriers

    def _barrier_transitions(self, ti, b):
        trs = [tr for _, tr in self.transitions(ti, T_BARRIER, b)]
        if trs:
            return trs
        t = self.m.templates[ti]
        neutral = make_transition(T_BARRIER, b, TRUE, (), self.G, t.locals)
        return [neutral]

    def add_barriers(self):
        for b in self.m.barriers:
            for vec in self.A:
                slots = self.tracked(vec)
                flat = self._flat(slots)
                choice_lists = [self._barrier_transitions(s.ti, b)
                                for s in flat]
                for combo in itertools.product(*choice_lists):
                    parts = []
                    for s, tr in zip(flat, combo):
                        m = self.update_map(s, gp="g", gnp=f"d_{s.key}")
                        parts.append(substitute(tr.guard,
                                                self.state_map(s)))
                        parts.append(substitute(tr.update, m))
                    focus = {s.ti for s in flat}
                    ctxt, pads = self.ctxt(focus, slots)
                    specs = self.merge_specs((vec, slots), ctxt)
                    head = self.app(vec, slots, gp="g",
                                    primed=tuple(s.key for s in flat))
                    self.emit(head, specs, parts, pads, "Eq14",
                              f"barrier {b}: all tracked slots step")

    # ------------------------------------------------------ error

    def add_error(self):
        roles = self.m.error_roles
        if not roles:
            return
        by_type = {}
        for r in roles:
            ti = self.m.template_index(r.template)
            by_type.setdefault(ti, []).append(r)
        pools = {}
        for ti, rs in by_type.items():
            need = max(len(rs),
                       max((v[ti] for v in self.A), default=0))
            t = self.m.templates[ti]
            pools[ti] = [self.adjoined(ti, f"x{j + 1}") for j in range(need)]
        focus = set(by_type)
        assignments = [[]]
        for ti in sorted(by_type):
            rs = by_type[ti]
            new = []
            for perm in itertools.permutations(pools[ti], len(rs)):
                for partial in assignments:
                    new.append(partial + list(zip(rs, perm)))
            assignments = new
        for ai, assignment in enumerate(assignments):
            parts = []
            for role, slot in assignment:
                parts.append(substitute(role.constraint,
                                        self.state_map(slot)))
            ctxt, pads = self.ctxt(focus, pools)
            specs = [spec for spec in ctxt]
            extra = [s for ti in sorted(pools) for s in pools[ti]] + pads
            body_slots = [self._flat(s) for _, s in specs]
            side = self.side_conditions(*(body_slots + [extra]))
            body = tuple(self.app(v, s) for v, s in specs)
            self.clauses.append(HornClause(
                None, body, conj(*(side + parts)), self.tags.err,
                f"error configuration, role assignment {ai + 1}"))

    # ------------------------------------------- clock argument basis

    def _clock_positions(self, vec):
        """Argument positions (in an application of rels[vec]) holding
        clock timestamps."""
        pos = []
        p = len(self.G)
        for i, a in enumerate(vec):
            t = self.m.templates[i]
            for _ in range(a):
                if t.replicated:
                    p += 1
                for x in t.locals:
                    if x in t.clocks:
                        pos.append(p)
                    p += 1
        return frozenset(pos)

    def _rebase_ages(self):
        """Swap relation arguments from clock timestamps to clock ages.

        Every application passes ``anchor - timestamp`` (its own time
        argument is the anchor) in each clock position and drops the time
        argument itself, so relation arguments are invariant under shifting
        all timestamps and the clock together.  Constraints still speak the
        timestamp language; only the relation interface changes.
        """
        clockpos = {v: self._clock_positions(v) for v in self.A}
        rebased = {v: RelationSymbol(self.rels[v].name,
                                     self.rels[v].arity - 1)
                   for v in self.A}
        by_name = {self.rels[v].name: v for v in self.A}

        def rewrite(appl):
            vec = by_name[appl.rel.name]
            anchor = appl.args[0]
            args = tuple(
                Sub(anchor, a) if p in clockpos[vec] else a
                for p, a in enumerate(appl.args) if p > 0)
            return RelApp(rebased[vec], args)

        self.clauses = [
            HornClause(rewrite(c.head) if c.head is not None else None,
                       tuple(rewrite(b) for b in c.body),
                       c.constraint, c.tag, c.comment)
            for c in self.clauses]
        self.rels = rebased

    # ------------------------------------------- control-location split

    def _fc_positions(self, vec, fc):
        """[(arg position, domain)] for finite-control locals in an
        application of rels[vec], on the current argument layout."""
        pos = []
        p = len(self.G) - (1 if self.cfg.clock_basis == AGES else 0)
        for i, a in enumerate(vec):
            t = self.m.templates[i]
            dom = fc.get(i, {})
            for _ in range(a):
                if t.replicated:
                    p += 1
                for x in t.locals:
                    if x in dom:
                        pos.append((p, dom[x]))
                    p += 1
        return tuple(pos)

    def _split_control(self):
        """Specialize relations by finite-control local values.

        Every relation argument position holding a finite-control local is
        enumerated over its value set; each valuation gets its own relation
        (values joined into the name) and loses those arguments.  Clause
        constraints are partially evaluated under the valuation, so guard-
        or update-contradicting cases vanish.  The expansion is exact:
        reachable states only ever hold domain values in these locals.
        Returns the relation symbols of the rewritten system."""
        fc = {}
        for i, t in enumerate(self.m.templates):
            d = finite_control(t)
            if d:
                fc[i] = d
        if not fc:
            return tuple(self.rels[v] for v in self.A)
        posmap = {v: self._fc_positions(v, fc) for v in self.A}
        by_name = {self.rels[v].name: v for v in self.A}
        symbols = {}

        def rewrite(appl, sigma):
            pts = posmap[by_name[appl.rel.name]]
            skip = {p for p, _ in pts}
            suffix = "_".join(str(sigma[appl.args[p].name]) for p, _ in pts)
            name = appl.rel.name + "__" + suffix
            sym = symbols.setdefault(
                name, RelationSymbol(name, appl.rel.arity - len(pts)))
            return RelApp(sym, tuple(a for p, a in enumerate(appl.args)
                                     if p not in skip))

        out = []
        for c in self.clauses:
            apps = list(c.body) + ([] if c.head is None else [c.head])
            var_dom = {}
            for appl in apps:
                for p, dom in posmap[by_name[appl.rel.name]]:
                    var_dom[appl.args[p].name] = dom
            names = sorted(var_dom)
            total = 1
            for n in names:
                total *= len(var_dom[n])
            if total > SPLIT_LIMIT:
                raise EncodingError(
                    "SplitBlowup",
                    f"{total} location cases in one clause (limit "
                    f"{SPLIT_LIMIT}); use locations=inline")
            for combo in itertools.product(*(var_dom[n] for n in names)):
                sigma = dict(zip(names, combo))
                sub = {Var(CVAR, n): Const(v) for n, v in sigma.items()}
                cons = fold(substitute(c.constraint, sub))
                if cons == FALSE:
                    continue
                note = ",".join(f"{n}={v}" for n, v in sigma.items())
                comment = f"{c.comment} @ {note}" if note else c.comment
                out.append(HornClause(
                    None if c.head is None else rewrite(c.head, sigma),
                    tuple(rewrite(b, sigma) for b in c.body),
                    cons, c.tag, comment))
        self.clauses = out
        used = {}
        for c in out:
            for a in list(c.body) + ([] if c.head is None else [c.head]):
                used[a.rel.name] = a.rel
        return tuple(used[k] for k in sorted(used))

    # ------------------------------------------------------ assembly

    def system(self):
        self.add_symmetry()
        self.add_initiation()
        self.add_consecution()
        self.add_env()
        self.add_time()
        self.add_channels()
        self.add_barriers()
        self.add_error()
        if self.cfg.clock_basis == AGES:
            self._rebase_ages()
        if self.cfg.locations == SPLIT:
            rels = self._split_control()
        else:
            rels = tuple(self.rels[v] for v in self.A)
        meta = (
            ("flavor", self.flavor),
            ("schema", schema_text(self.A)),
            ("symmetry", self.cfg.symmetry),
            ("body", self.cfg.body),
            ("clocks", self.cfg.clock_basis),
            ("locations", self.cfg.locations),
            ("time", self.m.time_model),
        )
        return HornSystem(rels, tuple(self.clauses), meta)


def encode_finite(model: SystemModel, schema=None,
                  config=EncodingConfig()) -> HornSystem:
    for t in model.templates:
        if t.replicated:
            raise EncodingError(
                "NotFinite",
                f"template {t.name} is replicated; use the heterogeneous "
                f"encoding")
    if schema is None:
        schema = [tuple(1 for _ in model.templates)]
    return _Encoder(model, schema, config, FINITE_TAGS, "finite").system()


def encode_homogeneous(model: SystemModel, k: int,
                       config=EncodingConfig()) -> HornSystem:
    if len(model.templates) != 1 or not model.templates[0].replicated:
        raise EncodingError(
            "NotHomogeneous",
            "the homogeneous encoding needs exactly one replicated template")
    if k < 1:
        raise EncodingError("NotHomogeneous", "k must be at least 1")
    return _Encoder(model, [(k,)], config, HOMOGENEOUS_TAGS,
                    "homogeneous").system()


def encode_heterogeneous(model: SystemModel, schema,
                         config=EncodingConfig()) -> HornSystem:
    return _Encoder(model, schema, config, HETEROGENEOUS_TAGS,
                    "heterogeneous").system()


# ---------------------------------------------------------- BIP reduction


def bip_to_barrier(model: SystemModel) -> SystemModel:
    """Rewrite BIP-style port interactions into one barrier plus a global.

    Every interaction gets a number 1..|I|; a fresh global iact selects
    which interaction the next barrier round performs.  Port transitions
    become barrier transitions guarded by iact choosing an interaction that
    contains the port; templates whose ports are all disjoint from some
    interaction get a stutter transition for those rounds.  Dedicated local
    transitions (one per interaction, marked with iact_value) reassign
    iact nondeterministically.
    """
    if not model.interactions:
        return model
    from .model import ProcessTemplate  # local import avoids a cycle

    sel = {}
    for num, ia in enumerate(model.interactions, start=1):
        for port in ia:
            sel.setdefault(port, []).append(num)
    new_globals = model.user_globals + ("iact",)
    all_globals = (TIME_VAR,) + new_globals
    if model.time_model == DENSE:
        all_globals = all_globals + (UNIT_VAR,)

    iact = Var(GLOBAL, "iact")
    host = None
    for t in model.templates:
        if not t.replicated:
            host = t.name
            break
    if host is None:
        host = model.templates[0].name

    templates = []
    for t in model.templates:
        owned = set(model.template_ports(t.name))
        trans = []
        for tr in t.transitions:
            if tr.kind == T_PORT:
                chooser = disj(*[Cmp("=", iact, Const(v))
                                 for v in sel.get(tr.label, [])])
                guard = conj(tr.guard, chooser)
                trans.append(make_transition(
                    T_BARRIER, "bip", guard, tr.assigns, all_globals,
                    t.locals, span=tr.span))
            else:
                trans.append(make_transition(
                    tr.kind, tr.label, tr.guard, tr.assigns, all_globals,
                    t.locals, iact_value=tr.iact_value, span=tr.span))
        if owned:
            idle = [v for v, ia in enumerate(model.interactions, start=1)
                    if not (set(ia) & owned)]
            stutter_guard = disj(*[Cmp("=", iact, Const(v)) for v in idle])
            if idle:
                trans.append(make_transition(
                    T_BARRIER, "bip", stutter_guard, (), all_globals,
                    t.locals))
        else:
            trans.append(make_transition(
                T_BARRIER, "bip", TRUE, (), all_globals, t.locals))
        if t.name == host:
            for v in range(1, len(model.interactions) + 1):
                trans.append(make_transition(
                    T_LOCAL, None, TRUE,
                    ((Var(GLOBAL_NEXT, "iact"), Const(v)),),
                    all_globals, t.locals, iact_value=v))
        templates.append(ProcessTemplate(
            t.name, t.replicated, t.locals, t.clocks, t.init, t.tinv,
            tuple(trans), t.span))

    return SystemModel(
        model.time_model,
        new_globals,
        conj(model.global_init, Cmp("=", iact, Const(1))),
        tuple(templates),
        model.channels,
        model.barriers + ("bip",),
        (),
        (),
        model.error_roles,
    )
