"""Invariant schemata: antichains of tracked-instance count vectors.

A schema is a finite set of length-n vectors, one entry per template in
declaration order, saying how many instances of each template one
invariant relation tracks jointly.  Singleton templates contribute 0 or
1; replicated templates any count.  The set is an antichain under
componentwise <=: a dominated vector adds nothing, because the dominating
relation already tracks a superset of its slots.

The refinement loop climbs this lattice deterministically:

* `weakest_schema` starts from one unit vector per template, raised just
  enough that every template named by the error specification is covered
  by some vector;
* `strengthen` either merges the two vectors whose templates are most
  strongly coupled by the model's synchronization structure (channels,
  barriers, rendezvous interactions), or — when no merge is available —
  increments the smallest replicated entry of a vector that covers the
  error specification;
* growth stops at a configurable cap on a vector's entry sum, returning
  the `CAP_REACHED` marker.

Vectors are kept sorted in descending lexicographic order so that equal
schemata have equal representations and every tie-break is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import SystemModel, T_BARRIER, T_RECV, T_SEND


class SchemaError(Exception):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class _CapReached:
    """Marker: every admissible strengthening exceeds the growth cap."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "CAP_REACHED"


CAP_REACHED = _CapReached()


@dataclass(frozen=True)
class InvariantSchema:
    """An antichain of tracked-count vectors, in descending lex order."""

    vectors: tuple

    def __post_init__(self):
        if not self.vectors:
            raise SchemaError("EmptySchema", "a schema needs at least one "
                              "vector")
        width = len(self.vectors[0])
        for v in self.vectors:
            if len(v) != width:
                raise SchemaError("RaggedSchema",
                                  f"vector {v} has length {len(v)}, "
                                  f"expected {width}")
            if any(a < 0 for a in v):
                raise SchemaError("NegativeEntry", f"vector {v}")
            if all(a == 0 for a in v):
                raise SchemaError("ZeroVector", "the all-zero vector tracks "
                                  "nothing")
        object.__setattr__(self, "vectors",
                           tuple(sorted(self.vectors, reverse=True)))
        for i, u in enumerate(self.vectors):
            for j, v in enumerate(self.vectors):
                if i != j and _leq(u, v):
                    raise SchemaError(
                        "NotAntichain",
                        f"vector {u} is dominated by {v}")

    @property
    def width(self) -> int:
        return len(self.vectors[0])

    def render(self) -> str:
        return "{" + ", ".join(
            "(" + ",".join(str(a) for a in v) + ")" for v in self.vectors
        ) + "}"

    def validate_against(self, model: SystemModel):
        """Check singleton bounds and error coverage for a model."""
        if self.width != len(model.templates):
            raise SchemaError(
                "WidthMismatch",
                f"schema width {self.width} vs {len(model.templates)} "
                f"templates")
        for v in self.vectors:
            for i, t in enumerate(model.templates):
                if not t.replicated and v[i] > 1:
                    raise SchemaError(
                        "SingletonOvercount",
                        f"vector {v} tracks {v[i]} copies of singleton "
                        f"template {t.name!r}")
        for name, need in model.error_counts().items():
            ti = model.template_index(name)
            if not any(v[ti] >= need for v in self.vectors):
                raise SchemaError(
                    "ErrorUncovered",
                    f"no vector tracks {need} instance(s) of template "
                    f"{name!r} named by the error specification")


def normalize(vectors) -> InvariantSchema:
    """Drop dominated vectors and build the canonical schema."""
    vs = [tuple(v) for v in vectors]
    kept = []
    for u in vs:
        if any(u != v and _leq(u, v) for v in vs):
            continue
        if u not in kept:
            kept.append(u)
    return InvariantSchema(tuple(kept))


def _leq(u, v):
    return all(a <= b for a, b in zip(u, v))


# ------------------------------------------------------------- weakest


def weakest_schema(model: SystemModel) -> InvariantSchema:
    """One unit vector per template, raised to cover the error spec.

    If the error specification names a template m times, that template's
    vector starts at m instead of 1 so the error clause can bind all m
    pairwise-distinct roles.
    """
    n = len(model.templates)
    need = model.error_counts()
    vectors = []
    for i, t in enumerate(model.templates):
        count = max(1, need.get(t.name, 0))
        if not t.replicated and count > 1:
            raise SchemaError(
                "SingletonOvercount",
                f"the error specification names singleton template "
                f"{t.name!r} {count} times; at most one instance exists")
        v = [0] * n
        v[i] = count
        vectors.append(tuple(v))
    return InvariantSchema(tuple(vectors))


# ------------------------------------------------------------- evidence


def coupling_evidence(model: SystemModel) -> dict:
    """Synchronization-coupling weights between template indices.

    Maps unordered template-index pairs (i, j), i < j, to the number of
    distinct synchronization features connecting them: one per channel
    with a sender transition in one template and a receiver transition in
    the other, one per barrier both participate in, and one per
    rendezvous interaction joining ports they own.  This is the static
    stand-in for "which processes exchange constraints": templates that
    synchronize need jointly-tracked invariants first.
    """
    weights = {}

    def add(ti, tj):
        if ti == tj:
            return
        key = (min(ti, tj), max(ti, tj))
        weights[key] = weights.get(key, 0) + 1

    def kinds(tpl, kind, label):
        return any(tr.kind == kind and tr.label == label
                   for tr in tpl.transitions)

    for ch in model.channels:
        for i, ts in enumerate(model.templates):
            if not kinds(ts, T_SEND, ch):
                continue
            for j, tr in enumerate(model.templates):
                if kinds(tr, T_RECV, ch):
                    add(i, j)
    for b in model.barriers:
        members = [i for i, t in enumerate(model.templates)
                   if any(tr.kind == T_BARRIER and tr.label == b
                          for tr in t.transitions)]
        for a in range(len(members)):
            for c in range(a + 1, len(members)):
                add(members[a], members[c])
    for ports in model.interactions:
        owners = sorted({model.template_index(model.port_owner(p))
                         for p in ports if model.port_owner(p) is not None})
        for a in range(len(owners)):
            for c in range(a + 1, len(owners)):
                add(owners[a], owners[c])
    return weights


# ------------------------------------------------------------- strengthen


def strengthen(schema: InvariantSchema, model: SystemModel,
               evidence: dict = None, cap: int = 6):
    """One deterministic step up the schema lattice, or CAP_REACHED.

    Step 1 — merge: among all pairs of schema vectors connected by
    coupling evidence (some tracked template of one synchronizes with
    some tracked template of the other), merge the highest-scoring pair
    into their componentwise max; ties broken by smallest (i, j) position
    in the canonical vector order.  Step 2 — grow: if no pair is
    connected, increment the smallest replicated entry of a vector that
    covers the error specification (ties: smaller entry value, then
    earlier vector, then lower template index).  A step whose result
    would exceed the entry-sum cap is skipped; when every candidate
    exceeds the cap, CAP_REACHED is returned.
    """
    if evidence is None:
        evidence = coupling_evidence(model)
    vs = schema.vectors

    best = None  # (score, i, j)
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            score = 0
            for a in range(schema.width):
                if vs[i][a] == 0:
                    continue
                for b in range(schema.width):
                    if vs[j][b] == 0 or a == b:
                        continue
                    key = (min(a, b), max(a, b))
                    score += evidence.get(key, 0)
            if score > 0 and (best is None or score > best[0]):
                best = (score, i, j)
    if best is not None:
        _, i, j = best
        merged = tuple(max(a, b) for a, b in zip(vs[i], vs[j]))
        if sum(merged) <= cap:
            rest = [v for k, v in enumerate(vs) if k not in (i, j)]
            return normalize(rest + [merged])
        # merge would blow the cap; fall through to growth, which may fit

    need = model.error_counts()
    covering = []
    for k, v in enumerate(vs):
        if all(v[model.template_index(name)] >= cnt
               for name, cnt in need.items()):
            covering.append((k, v))
    if not covering:
        covering = list(enumerate(vs))
    candidate = None  # (entry_value, vector_pos, template_idx)
    for k, v in covering:
        for a, t in enumerate(model.templates):
            if t.replicated and v[a] > 0:
                c = (v[a], k, a)
                if candidate is None or c < candidate:
                    candidate = c
    if candidate is None:
        return CAP_REACHED
    _, k, a = candidate
    grown = list(vs[k])
    grown[a] += 1
    if sum(grown) > cap:
        return CAP_REACHED
    rest = [v for idx, v in enumerate(vs) if idx != k]
    return normalize(rest + [tuple(grown)])


__all__ = [
    "CAP_REACHED",
    "InvariantSchema",
    "SchemaError",
    "coupling_evidence",
    "normalize",
    "strengthen",
    "weakest_schema",
]
