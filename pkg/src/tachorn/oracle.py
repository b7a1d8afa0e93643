"""Bounded explicit-state search over concrete finite instantiations.

Spins up a fixed number of instances per template and runs breadth-first
reachability on the resulting concrete system: interleaved local steps,
channel handshakes between distinct instances, barrier rounds, and integer
time elapse.  Used to confirm solver-level refutations as genuine error
traces and as a differential check against the Horn pipeline.  Dense-time
models are explored at U = 1, so any trace found is a real behaviour; the
search is bounded and never grounds a safety claim.

States are deduplicated up to a shift of absolute time: the key keeps
clock ages (C - x) instead of timestamps and saturates them one past the
largest constant any clock is compared against.  Templates that constrain
differences of two clocks keep exact ages, which is slower but sound.

Time elapse enumerates candidate durations that land some clock age
exactly on a comparison constant c, or just past it (c + 1), or at the
saturation bound; between those points no guard or invariant changes
truth, so the skipped durations cannot unlock behaviour that the kept
ones miss.  Pass elapse="all" in Bounds to enumerate every duration up
to the horizon instead.
"""

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Optional

from .constraints import (
    GLOBAL, LOCAL, GLOBAL_NEXT, LOCAL_NEXT, SELF_ID, PEER_ID,
    Cmp, Const, Var, UnboundVariable,
    conjuncts, eval_constraint, eval_term, variables,
)
from .model import (
    DENSE, T_BARRIER, T_LOCAL, T_RECV, T_SEND,
    TIME_VAR, UNIT_VAR, SystemModel,
)

__all__ = [
    "Bounds", "Trace", "Reachable", "UnreachableWithinBounds",
    "Local", "IactAssign", "TimeElapse", "Comm", "Barrier",
    "OracleError", "StateExplosionAbort",
    "explore", "replay", "render_trace", "trace_report",
    "trace_from_report",
]


class OracleError(Exception):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class StateExplosionAbort(OracleError):
    def __init__(self, message):
        super().__init__("StateExplosionAbort", message)


_INITIAL_ENUM_CAP = 1_000_000


@dataclass(frozen=True)
class Bounds:
    depth: int = 40
    time_horizon: Optional[int] = None  # default: max clock constant + 1
    value_box: tuple = (0, 100)
    barrier_cap: int = 4096
    visited_cap: int = 200_000
    elapse: str = "candidates"  # or "all"


# ------------------------------------------------------------------ labels


@dataclass(frozen=True)
class Local:
    template: str
    id: int

    def render(self):
        return f"local {self.template}#{self.id}"


@dataclass(frozen=True)
class IactAssign:
    value: int

    def render(self):
        return f"iact {self.value}"


@dataclass(frozen=True)
class TimeElapse:
    delta: int

    def render(self):
        return f"elapse {self.delta}"


@dataclass(frozen=True)
class Comm:
    channel: str
    sender: tuple  # (template, id)
    receiver: tuple

    def render(self):
        s, r = self.sender, self.receiver
        return f"comm {self.channel} {s[0]}#{s[1]} -> {r[0]}#{r[1]}"


@dataclass(frozen=True)
class Barrier:
    name: str
    choices: tuple  # ((template, id, transition_index), ...)

    def render(self):
        picks = " ".join(f"{t}#{i}:{k}" for t, i, k in self.choices)
        return f"barrier {self.name} [{picks}]"


@dataclass(frozen=True)
class Trace:
    """A concrete run: states[0] is initial, labels[i] takes states[i] to
    states[i+1].  Each state is a flat tuple laid out as global_names
    followed by, per instance, that instance's local_names."""

    global_names: tuple
    instances: tuple    # ((template, id), ...)
    local_names: tuple  # per instance, tuple of local variable names
    states: tuple
    labels: tuple

    @property
    def initial_state(self):
        return self.states[0]

    @property
    def steps(self):
        return tuple(zip(self.labels, self.states[1:]))


@dataclass(frozen=True)
class Reachable:
    trace: Trace


@dataclass(frozen=True)
class UnreachableWithinBounds:
    states_visited: int


# ------------------------------------------------------------- instantiation


class _Net:
    """A model fixed to concrete instances, with flat-state plumbing."""

    def __init__(self, model: SystemModel, counts):
        self.model = model
        self.dense = model.time_model == DENSE
        self.gnames = model.globals
        self.gidx = {n: i for i, n in enumerate(self.gnames)}

        insts = []
        for t in model.templates:
            if t.replicated:
                n = counts.get(t.name)
                if n is None:
                    raise OracleError(
                        "InvalidCounts",
                        f"no instance count given for replicated "
                        f"template {t.name!r}")
                if n < 0:
                    raise OracleError(
                        "InvalidCounts",
                        f"negative count for template {t.name!r}")
                insts.extend((t, i) for i in range(n))
            else:
                n = counts.get(t.name, 1)
                if n != 1:
                    raise OracleError(
                        "InvalidCounts",
                        f"template {t.name!r} is a singleton; count must "
                        f"be 1, got {n}")
                insts.append((t, 0))
        for name in counts:
            try:
                model.template(name)
            except KeyError:
                raise OracleError("InvalidCounts",
                                  f"unknown template {name!r}") from None

        self.instances = tuple(insts)
        self.bases = []
        base = len(self.gnames)
        for t, _ in insts:
            self.bases.append(base)
            base += len(t.locals)
        self.width = base
        self.lidx = {t.name: {n: i for i, n in enumerate(t.locals)}
                     for t in model.templates}

        consts = model.clock_constants()
        self.maxconst = max(consts, default=0)
        self.sat_bound = self.maxconst + 1
        self.elapse_points = sorted(
            {c for c in consts if c >= 0}
            | {c + 1 for c in consts if c + 1 >= 0}
            | {self.sat_bound})
        self.exact_ages = {t.name: _uses_clock_diffs(t)
                           for t in model.templates}

        # (inst_index, absolute clock slot) pairs, and per-state error roles
        self.clock_slots = []
        for ii, (t, _) in enumerate(insts):
            for name in t.locals:
                if name in t.clocks:
                    self.clock_slots.append(
                        (ii, self.bases[ii] + self.lidx[t.name][name]))

    def env(self, state, inst_index, peer_id=None):
        t, ident = self.instances[inst_index]
        base = self.bases[inst_index]
        lmap = self.lidx[t.name]
        gidx = self.gidx

        def resolve(var):
            k = var.kind
            if k == GLOBAL:
                return state[gidx[var.name]]
            if k == LOCAL:
                return state[base + lmap[var.name]]
            if k == SELF_ID:
                return ident
            if k == PEER_ID:
                if peer_id is None:
                    raise UnboundVariable(var)
                return peer_id
            raise UnboundVariable(var)

        return resolve

    def apply(self, state, inst_index, assigns, peer_id=None,
              globals_frozen=False):
        """Fire one transition's assignments; returns the successor list.

        Right-hand sides all read the pre-state (simultaneous assignment).
        With globals_frozen, writes to globals are dropped; barrier rounds
        leave the shared state untouched.
        """
        env = self.env(state, inst_index, peer_id)
        t, _ = self.instances[inst_index]
        base = self.bases[inst_index]
        lmap = self.lidx[t.name]
        new = list(state)
        for target, term in assigns:
            v = eval_term(term, env)
            if target.kind == LOCAL_NEXT:
                new[base + lmap[target.name]] = v
            elif target.kind == GLOBAL_NEXT:
                if not globals_frozen:
                    new[self.gidx[target.name]] = v
            else:
                raise OracleError("BadAssignTarget", repr(target))
        return new

    def key(self, state):
        C = state[0]
        parts = list(state[1:len(self.gnames)])
        for ii, (t, _) in enumerate(self.instances):
            base = self.bases[ii]
            exact = self.exact_ages[t.name]
            for off, name in enumerate(t.locals):
                v = state[base + off]
                if name in t.clocks:
                    age = C - v
                    parts.append(age if exact else min(age, self.sat_bound))
                else:
                    parts.append(v)
        return tuple(parts)

    def error_assignment(self, state):
        """First injective role -> instance matching, or None."""
        roles = self.model.error_roles
        if not roles:
            return None
        cands = []
        for ri, role in enumerate(roles):
            ok = []
            for ii, (t, ident) in enumerate(self.instances):
                if t.name != role.template:
                    continue
                if eval_constraint(role.constraint, self.env(state, ii)):
                    ok.append(ii)
            if not ok:
                return None
            cands.append(ok)

        def pick(ri, used):
            if ri == len(cands):
                return ()
            for ii in cands[ri]:
                if ii in used:
                    continue
                rest = pick(ri + 1, used | {ii})
                if rest is not None:
                    return (ii,) + rest
            return None

        return pick(0, frozenset())

    def is_error(self, state):
        return self.error_assignment(state) is not None


def _uses_clock_diffs(tpl) -> bool:
    """True when some comparison relates two clocks of the template
    directly (timestamp difference, no C involved)."""

    def side_has_clock(term):
        return any(v.kind == LOCAL and v.name in tpl.clocks
                   for v in variables(term))

    def side_has_time(term):
        return any(v.kind == GLOBAL and v.name == TIME_VAR
                   for v in variables(term))

    found = False

    def scan(node):
        nonlocal found
        if found:
            return
        if isinstance(node, Cmp):
            for side in (node.left, node.right):
                if side_has_clock(side) and not side_has_time(side):
                    found = True
            return
        for attr in ("args",):
            for a in getattr(node, attr, ()):
                scan(a)
        for attr in ("arg", "left", "right"):
            sub = getattr(node, attr, None)
            if sub is not None and not isinstance(sub, (int, str)):
                scan(sub)

    scan(tpl.tinv)
    for tr in tpl.transitions:
        scan(tr.guard)
        for _, term in tr.assigns:
            scan(term)
    return found


# ------------------------------------------------------------------ initial


def _pinned(constraint, kind):
    pins = {}
    for c in conjuncts(constraint):
        if not isinstance(c, Cmp) or c.op != "=":
            continue
        a, b = c.left, c.right
        if isinstance(a, Const):
            a, b = b, a
        if isinstance(a, Var) and a.kind == kind and isinstance(b, Const):
            pins.setdefault(a.name, b.value)
    return pins


def _enumerate(names, pins, box, check):
    """All valuations of names (pins fixed, others from box) passing check;
    deterministic ascending order."""
    lo, hi = box
    free = [n for n in names if n not in pins]
    if free and (hi - lo + 1) ** len(free) > _INITIAL_ENUM_CAP:
        raise StateExplosionAbort(
            f"initial valuation enumeration over {len(free)} unpinned "
            f"variables exceeds {_INITIAL_ENUM_CAP} combinations; pin them "
            f"in init or shrink value_box")
    out = []
    for combo in product(range(lo, hi + 1), repeat=len(free)):
        vals = dict(pins)
        vals.update(zip(free, combo))
        if check(vals):
            out.append(vals)
    return out


def _initial_states(net: _Net, bounds: Bounds):
    model = net.model
    fixed = {TIME_VAR: 0}
    if net.dense:
        fixed[UNIT_VAR] = 1
    user = [g for g in net.gnames if g not in fixed]
    gconstraint = model.initial_global_constraint()
    pins = _pinned(model.global_init, GLOBAL)

    def gcheck(vals):
        def resolve(var):
            if var.kind == GLOBAL:
                if var.name in fixed:
                    return fixed[var.name]
                return vals[var.name]
            raise UnboundVariable(var)
        return eval_constraint(gconstraint, resolve)

    gsols = _enumerate(user, pins, bounds.value_box, gcheck)

    per_inst = []
    for ii, (t, ident) in enumerate(net.instances):
        nonclocks = [n for n in t.locals if n not in t.clocks]
        lpins = _pinned(t.init, LOCAL)
        tconstraint = model.initial_template_constraint(t)
        choices = []
        for gvals in gsols:
            def lcheck(lvals, gvals=gvals):
                def resolve(var):
                    if var.kind == GLOBAL:
                        if var.name in fixed:
                            return fixed[var.name]
                        return gvals[var.name]
                    if var.kind == LOCAL:
                        if var.name in t.clocks:
                            return fixed[TIME_VAR]
                        return lvals[var.name]
                    if var.kind == SELF_ID:
                        return ident
                    raise UnboundVariable(var)
                return eval_constraint(tconstraint, resolve)
            choices.append(_enumerate(nonclocks, lpins, bounds.value_box,
                                      lcheck))
        per_inst.append(choices)

    states = []
    for gi, gvals in enumerate(gsols):
        pools = [per_inst[ii][gi] for ii in range(len(net.instances))]
        for combo in product(*pools):
            state = [0] * net.width
            for name in net.gnames:
                state[net.gidx[name]] = \
                    fixed[name] if name in fixed else gvals[name]
            for ii, (t, _) in enumerate(net.instances):
                base = net.bases[ii]
                for off, name in enumerate(t.locals):
                    if name in t.clocks:
                        state[base + off] = fixed[TIME_VAR]
                    else:
                        state[base + off] = combo[ii][name]
            states.append(tuple(state))
            if len(states) > bounds.visited_cap:
                raise StateExplosionAbort(
                    "more initial states than the visited-state cap")
    return states


# ---------------------------------------------------------------- explore


def _successors(net: _Net, state, bounds: Bounds):
    """Deterministically ordered (label, successor) pairs."""
    model = net.model
    out = []

    # local steps (interaction selectors included, labeled their own way)
    for ii, (t, ident) in enumerate(net.instances):
        env = net.env(state, ii)
        for tr in t.transitions:
            if tr.kind != T_LOCAL:
                continue
            if not eval_constraint(tr.guard, env):
                continue
            succ = tuple(net.apply(state, ii, tr.assigns))
            if tr.iact_value is not None:
                out.append((IactAssign(tr.iact_value), succ))
            else:
                out.append((Local(t.name, ident), succ))

    # channel handshakes: sender fires first, receiver sees its writes
    for ch in model.channels:
        for si, (ts, sid) in enumerate(net.instances):
            sends = [tr for tr in ts.transitions
                     if tr.kind == T_SEND and tr.label == ch]
            if not sends:
                continue
            for ri, (tr_, rid) in enumerate(net.instances):
                if ri == si:
                    continue
                recvs = [tr for tr in tr_.transitions
                         if tr.kind == T_RECV and tr.label == ch]
                if not recvs:
                    continue
                for tr_s in sends:
                    if not eval_constraint(tr_s.guard,
                                           net.env(state, si, peer_id=rid)):
                        continue
                    mid = tuple(net.apply(state, si, tr_s.assigns,
                                          peer_id=rid))
                    for tr_r in recvs:
                        if not eval_constraint(
                                tr_r.guard, net.env(mid, ri, peer_id=sid)):
                            continue
                        succ = tuple(net.apply(mid, ri, tr_r.assigns,
                                               peer_id=sid))
                        out.append((Comm(ch, (ts.name, sid),
                                         (tr_.name, rid)), succ))

    # barrier rounds: everyone with a matching transition moves at once,
    # shared variables frozen
    for b in model.barriers:
        participants = []
        blocked = False
        for ii, (t, ident) in enumerate(net.instances):
            btrans = [(k, tr) for k, tr in enumerate(t.transitions)
                      if tr.kind == T_BARRIER and tr.label == b]
            if not btrans:
                continue
            env = net.env(state, ii)
            enabled = [(k, tr) for k, tr in btrans
                       if eval_constraint(tr.guard, env)]
            if not enabled:
                blocked = True
                break
            participants.append((ii, enabled))
        if blocked or not participants:
            continue
        size = 1
        for _, enabled in participants:
            size *= len(enabled)
        if size > bounds.barrier_cap:
            raise StateExplosionAbort(
                f"barrier {b!r} admits {size} transition combinations, "
                f"over the cap of {bounds.barrier_cap}")
        for combo in product(*(enabled for _, enabled in participants)):
            cur = list(state)
            picks = []
            for (ii, _), (k, tr) in zip(participants, combo):
                cur = net.apply(cur, ii, tr.assigns, globals_frozen=True)
                t, ident = net.instances[ii]
                picks.append((t.name, ident, k))
            out.append((Barrier(b, tuple(picks)), tuple(cur)))

    # time elapse
    C = state[0]
    horizon = bounds.time_horizon
    if horizon is None:
        horizon = net.sat_bound
    if bounds.elapse == "all":
        deltas = range(1, horizon + 1)
    else:
        cand = set()
        for ii, slot in net.clock_slots:
            age = C - state[slot]
            for point in net.elapse_points:
                d = point - age
                if 1 <= d <= horizon:
                    cand.add(d)
        if not cand and horizon >= 1:
            cand.add(1)
        deltas = sorted(cand)
    for d in deltas:
        shifted = (C + d,) + tuple(state[1:])
        ok = True
        for ii, (t, _) in enumerate(net.instances):
            if not eval_constraint(t.tinv, net.env(shifted, ii)):
                ok = False
                break
        if ok:
            out.append((TimeElapse(d), shifted))

    return out


def _mk_trace(net: _Net, states, parents, idx):
    chain = []
    while idx is not None:
        chain.append(idx)
        idx = parents[idx][0]
    chain.reverse()
    seq = [states[i] for i in chain]
    labels = [parents[i][1] for i in chain[1:]]
    return Trace(
        global_names=tuple(net.gnames),
        instances=tuple((t.name, ident) for t, ident in net.instances),
        local_names=tuple(tuple(t.locals) for t, _ in net.instances),
        states=tuple(seq),
        labels=tuple(labels),
    )


def explore(model: SystemModel, counts, bounds: Bounds = Bounds()):
    """Breadth-first bounded reachability of the error specification.

    counts maps template name to instance count (replicated templates
    require one; singletons default to 1).  Returns Reachable(trace) or
    UnreachableWithinBounds(states_visited); raises StateExplosionAbort
    when a cap is hit.
    """
    net = _Net(model, counts)

    # not enough instances of some template to fill its error roles:
    # provably unreachable, skip the walk
    have = {}
    for t, _ in net.instances:
        have[t.name] = have.get(t.name, 0) + 1
    for tname, need in model.error_counts().items():
        if have.get(tname, 0) < need:
            return UnreachableWithinBounds(states_visited=0)

    states = []
    parents = []
    depth = []
    seen = {}
    queue = deque()

    def admit(s, parent, label, d):
        k = net.key(s)
        if k in seen:
            return None
        seen[k] = True
        states.append(s)
        parents.append((parent, label))
        depth.append(d)
        if len(states) > bounds.visited_cap:
            raise StateExplosionAbort(
                f"visited more than {bounds.visited_cap} states")
        return len(states) - 1

    for s in _initial_states(net, bounds):
        i = admit(s, None, None, 0)
        if i is None:
            continue
        if net.is_error(s):
            return Reachable(_mk_trace(net, states, parents, i))
        queue.append(i)

    while queue:
        i = queue.popleft()
        if depth[i] >= bounds.depth:
            continue
        for label, succ in _successors(net, states[i], bounds):
            j = admit(succ, i, label, depth[i] + 1)
            if j is None:
                continue
            if net.is_error(succ):
                return Reachable(_mk_trace(net, states, parents, j))
            queue.append(j)

    return UnreachableWithinBounds(states_visited=len(states))


# ------------------------------------------------------------------ replay


def replay(model: SystemModel, trace: Trace) -> bool:
    """Independent check that a trace is a run of the model ending in an
    error state.  Total: malformed traces return False rather than raise."""
    try:
        return _replay(model, trace)
    except (OracleError, UnboundVariable, KeyError, IndexError, TypeError,
            AttributeError):
        return False


def _replay(model, trace):
    counts = {}
    for tname, ident in trace.instances:
        counts[tname] = counts.get(tname, 0) + 1
    net = _Net(model, counts)
    if len(trace.states) != len(trace.labels) + 1:
        return False
    # layout must agree with the model's
    if tuple(trace.global_names) != tuple(net.gnames):
        return False
    if tuple(trace.instances) != tuple(
            (t.name, ident) for t, ident in net.instances):
        return False
    if tuple(trace.local_names) != tuple(
            tuple(t.locals) for t, _ in net.instances):
        return False
    for s in trace.states:
        if len(s) != net.width:
            return False

    if not _initial_ok(net, trace.states[0]):
        return False
    for n, label in enumerate(trace.labels):
        if not _step_ok(net, trace.states[n], label, trace.states[n + 1]):
            return False
    return net.is_error(trace.states[-1])


def _initial_ok(net, state):
    model = net.model
    if state[0] != 0:
        return False
    if net.dense and state[net.gidx[UNIT_VAR]] < 1:
        return False

    def gresolve(var):
        if var.kind == GLOBAL:
            return state[net.gidx[var.name]]
        raise UnboundVariable(var)

    if not eval_constraint(model.initial_global_constraint(), gresolve):
        return False
    for ii, (t, _) in enumerate(net.instances):
        if not eval_constraint(model.initial_template_constraint(t),
                               net.env(state, ii)):
            return False
    return True


def _find_instance(net, tname, ident):
    for ii, (t, i) in enumerate(net.instances):
        if t.name == tname and i == ident:
            return ii
    return None


def _step_ok(net, s, label, s2):
    if isinstance(label, TimeElapse):
        d = label.delta
        if d < 1 or s2[0] != s[0] + d:
            return False
        if tuple(s[1:]) != tuple(s2[1:]):
            return False
        for ii, (t, _) in enumerate(net.instances):
            if not eval_constraint(t.tinv, net.env(s2, ii)):
                return False
        return True

    if isinstance(label, (Local, IactAssign)):
        if isinstance(label, Local):
            ii = _find_instance(net, label.template, label.id)
            if ii is None:
                return False
            scope = [ii]
        else:
            scope = range(len(net.instances))
        for jj in scope:
            t, _ = net.instances[jj]
            for tr in t.transitions:
                if tr.kind != T_LOCAL:
                    continue
                if isinstance(label, IactAssign):
                    if tr.iact_value != label.value:
                        continue
                elif tr.iact_value is not None:
                    continue
                if not eval_constraint(tr.guard, net.env(s, jj)):
                    continue
                if tuple(net.apply(s, jj, tr.assigns)) == tuple(s2):
                    return True
        return False

    if isinstance(label, Comm):
        si = _find_instance(net, *label.sender)
        ri = _find_instance(net, *label.receiver)
        if si is None or ri is None or si == ri:
            return False
        ts, sid = net.instances[si]
        tr_, rid = net.instances[ri]
        for tr_s in ts.transitions:
            if tr_s.kind != T_SEND or tr_s.label != label.channel:
                continue
            if not eval_constraint(tr_s.guard, net.env(s, si, peer_id=rid)):
                continue
            mid = tuple(net.apply(s, si, tr_s.assigns, peer_id=rid))
            for tr_r in tr_.transitions:
                if tr_r.kind != T_RECV or tr_r.label != label.channel:
                    continue
                if not eval_constraint(tr_r.guard,
                                       net.env(mid, ri, peer_id=sid)):
                    continue
                if tuple(net.apply(mid, ri, tr_r.assigns,
                                   peer_id=sid)) == tuple(s2):
                    return True
        return False

    if isinstance(label, Barrier):
        chosen = {}
        for tname, ident, k in label.choices:
            ii = _find_instance(net, tname, ident)
            if ii is None or ii in chosen:
                return False
            chosen[ii] = k
        cur = list(s)
        for ii, (t, _) in enumerate(net.instances):
            has = any(tr.kind == T_BARRIER and tr.label == label.name
                      for tr in t.transitions)
            if not has:
                if ii in chosen:
                    return False
                continue
            if ii not in chosen:
                return False
            k = chosen[ii]
            if not (0 <= k < len(t.transitions)):
                return False
            tr = t.transitions[k]
            if tr.kind != T_BARRIER or tr.label != label.name:
                return False
            if not eval_constraint(tr.guard, net.env(s, ii)):
                return False
            cur = net.apply(cur, ii, tr.assigns, globals_frozen=True)
        return tuple(cur) == tuple(s2)

    return False


# --------------------------------------------------------------- rendering


def _state_line(trace, n):
    s = trace.states[n]
    gpart = " ".join(f"{name}={s[i]}"
                     for i, name in enumerate(trace.global_names))
    chunks = [gpart]
    off = len(trace.global_names)
    for (tname, ident), names in zip(trace.instances, trace.local_names):
        vals = " ".join(f"{nm}={s[off + k]}" for k, nm in enumerate(names))
        chunks.append(f"{tname}#{ident}: {vals}".rstrip())
        off += len(names)
    return f"state {n}: " + " | ".join(chunks)


def render_trace(trace: Trace) -> str:
    lines = ["instances: " + " ".join(
        f"{t}#{i}" for t, i in trace.instances)]
    lines.append(_state_line(trace, 0))
    for n, label in enumerate(trace.labels):
        lines.append(f"step {n + 1}: {label.render()}")
        lines.append(_state_line(trace, n + 1))
    return "\n".join(lines) + "\n"


def _label_record(label):
    if isinstance(label, Local):
        return {"kind": "local", "template": label.template, "id": label.id}
    if isinstance(label, IactAssign):
        return {"kind": "iact", "value": label.value}
    if isinstance(label, TimeElapse):
        return {"kind": "elapse", "delta": label.delta}
    if isinstance(label, Comm):
        return {"kind": "comm", "channel": label.channel,
                "sender": list(label.sender),
                "receiver": list(label.receiver)}
    if isinstance(label, Barrier):
        return {"kind": "barrier", "name": label.name,
                "choices": [list(c) for c in label.choices]}
    raise TypeError(f"unknown label {label!r}")


def trace_report(trace: Trace) -> dict:
    """JSON-ready structure mirroring docs/trace.md."""
    return {
        "globals": list(trace.global_names),
        "instances": [list(p) for p in trace.instances],
        "locals": [list(names) for names in trace.local_names],
        "states": [list(s) for s in trace.states],
        "steps": [_label_record(l) for l in trace.labels],
    }


def trace_from_report(rec: dict) -> Trace:
    """Inverse of trace_report."""
    labels = []
    for step in rec["steps"]:
        kind = step["kind"]
        if kind == "local":
            labels.append(Local(step["template"], step["id"]))
        elif kind == "iact":
            labels.append(IactAssign(step["value"]))
        elif kind == "elapse":
            labels.append(TimeElapse(step["delta"]))
        elif kind == "comm":
            labels.append(Comm(step["channel"], tuple(step["sender"]),
                               tuple(step["receiver"])))
        elif kind == "barrier":
            labels.append(Barrier(step["name"],
                                  tuple(tuple(c) for c in step["choices"])))
        else:
            raise ValueError(f"unknown step kind {kind!r}")
    return Trace(
        global_names=tuple(rec["globals"]),
        instances=tuple(tuple(p) for p in rec["instances"]),
        local_names=tuple(tuple(n) for n in rec["locals"]),
        states=tuple(tuple(s) for s in rec["states"]),
        labels=tuple(labels),
    )
