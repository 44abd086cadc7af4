"""Directed evidential networks and their document-grounded construction."""

from __future__ import annotations

import json
import logging
import re
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .belief import (
    BBA,
    TOL,
    Frame,
    popcount,
    vacuous,
    yager_combine_k,
)
from .errors import (
    CycleDetected,
    DegreeCapExceeded,
    DuplicateId,
    FrameMismatch,
    IncompleteConditionalTable,
    InvalidBBA,
    LimitExceeded,
    MalformedElicitation,
    OverAllocatedMass,
    ProviderFailure,
    TypeConstraintViolation,
    UnalignableVariables,
    UnknownVariable,
)

logger = logging.getLogger(__name__)

HYPOTHESIS = "hypothesis"
INTERMEDIATE = "intermediate"
OBSERVABLE = "observable"
KINDS = (HYPOTHESIS, INTERMEDIATE, OBSERVABLE)

# an elicitor may under-allocate; anything above this is an error
OVERALLOCATION_TOL = 1e-6


@dataclass(frozen=True)
class Variable:
    id: str
    frame: Frame
    kind: str = OBSERVABLE
    description: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if not self.id:
            raise ValueError("variable id must be non-empty")

    @classmethod
    def make(cls, id, states, kind=OBSERVABLE, description="", state_descriptions=()):
        return cls(id, Frame(id, tuple(states), tuple(state_descriptions)), kind, description)

    @property
    def states(self) -> tuple[str, ...]:
        return self.frame.states

    @property
    def state_descriptions(self) -> tuple[str, ...]:
        return self.frame.descriptions

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "description": self.description,
            "states": list(self.frame.states),
        }
        if self.frame.descriptions:
            d["state_descriptions"] = list(self.frame.descriptions)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "Variable":
        return cls.make(
            d["id"],
            d["states"],
            d.get("kind", OBSERVABLE),
            d.get("description", ""),
            d.get("state_descriptions", ()),
        )


@dataclass(frozen=True)
class ConditionalBBA:
    """Per-parent-state BBAs over the child frame for the edge parent -> child."""

    parent: str
    child: str
    table: Mapping[str, BBA]

    @property
    def edge(self) -> tuple[str, str]:
        return (self.parent, self.child)

    def row(self, state: str) -> BBA:
        return self.table[state]

    @classmethod
    def from_rows(cls, parent: Variable, child: Variable, rows: Mapping[str, Mapping]) -> "ConditionalBBA":
        """Shorthand: ``rows`` maps each parent state to ``{labels: mass}``.

        Unassigned mass in a row goes to the child frame.
        """
        return cls(
            parent.id,
            child.id,
            {s: validate_partial_masses(rows[s], child.frame) for s in rows},
        )


@dataclass(frozen=True)
class Document:
    id: str
    text: str


@dataclass(frozen=True)
class EvidenceSnippet:
    id: str
    text: str
    source: str
    parent: str = ""
    child: str = ""
    parent_state: str | None = None

    def to_json(self) -> dict:
        d = {"id": self.id, "text": self.text, "source": self.source,
             "parent": self.parent, "child": self.child}
        if self.parent_state is not None:
            d["parent_state"] = self.parent_state
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "EvidenceSnippet":
        return cls(d["id"], d.get("text", ""), d.get("source", ""), d.get("parent", ""),
                   d.get("child", ""), d.get("parent_state"))


@dataclass(frozen=True)
class EvidentialNetwork:
    variables: Mapping[str, Variable]
    edges: tuple[ConditionalBBA, ...]
    root: str
    priors: Mapping[str, BBA] = field(default_factory=dict)
    depth_limit: int | None = None
    max_in_degree: int | None = None
    max_out_degree: int | None = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        parents: dict[str, list[str]] = {v: [] for v in self.variables}
        children: dict[str, list[str]] = {v: [] for v in self.variables}
        index = {}
        for e in self.edges:
            parents[e.child].append(e.parent)
            children[e.parent].append(e.child)
            index[e.edge] = e
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_children", children)
        object.__setattr__(self, "_edge_index", index)

    @classmethod
    def with_root(cls, root: Variable, **kwargs) -> "EvidentialNetwork":
        if root.kind != HYPOTHESIS:
            raise TypeConstraintViolation("the root must be the hypothesis variable")
        return cls({root.id: root}, (), root.id, **kwargs)

    def __contains__(self, vid) -> bool:
        return vid in self.variables

    def variable(self, vid: str) -> Variable:
        try:
            return self.variables[vid]
        except KeyError:
            raise UnknownVariable(f"unknown variable {vid!r}") from None

    def parents(self, vid: str) -> list[str]:
        self.variable(vid)
        return list(self._parents[vid])

    def children(self, vid: str) -> list[str]:
        self.variable(vid)
        return list(self._children[vid])

    def neighbours(self, vid: str) -> list[str]:
        return self.parents(vid) + self.children(vid)

    def edge(self, parent: str, child: str) -> ConditionalBBA:
        try:
            return self._edge_index[(parent, child)]
        except KeyError:
            raise UnknownVariable(f"no edge {parent!r} -> {child!r}") from None

    @property
    def hypothesis(self) -> Variable:
        return self.variables[self.root]

    @property
    def edge_set(self) -> set[tuple[str, str]]:
        return set(self._edge_index)

    def observables(self) -> list[str]:
        return sorted(v for v, var in self.variables.items() if var.kind == OBSERVABLE)

    def prior(self, vid: str) -> BBA:
        return self.priors.get(vid) or vacuous(self.variable(vid).frame)

    def reaches(self, src: str, dst: str) -> bool:
        seen, stack = set(), [src]
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            if v not in seen:
                seen.add(v)
                stack.extend(self._children[v])
        return False

    def topological_order(self) -> list[str]:
        indeg = {v: len(p) for v, p in self._parents.items()}
        queue = deque(v for v in self.variables if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != len(self.variables):
            raise CycleDetected("network contains a directed cycle")
        return order

    def is_polytree(self) -> bool:
        """True when the underlying undirected graph has no cycle."""
        parent = {v: v for v in self.variables}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in self.edges:
            a, b = find(e.parent), find(e.child)
            if a == b:
                return False
            parent[a] = b
        return True

    def depth(self, vid: str) -> int:
        """Length of the shortest directed path from the root (-1 if unreachable)."""
        dist = {self.root: 0}
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            for c in self._children[v]:
                if c not in dist:
                    dist[c] = dist[v] + 1
                    queue.append(c)
        return dist.get(vid, -1)

    # serialization

    def to_json(self) -> dict:
        return {
            "variables": [v.to_json() for v in self.variables.values()],
            "edges": [
                {
                    "parent": e.parent,
                    "child": e.child,
                    "table": {s: e.table[s].to_json() for s in self.variables[e.parent].states},
                }
                for e in self.edges
            ],
            "root": self.root,
            "priors": {vid: bba.to_json() for vid, bba in self.priors.items()},
            "meta": {
                "depth_limit": self.depth_limit,
                "max_in_degree": self.max_in_degree,
                "max_out_degree": self.max_out_degree,
                **dict(self.meta),
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, d: Mapping) -> "EvidentialNetwork":
        variables = {}
        for vd in d["variables"]:
            var = Variable.from_json(vd)
            if var.id in variables:
                raise DuplicateId(f"duplicate variable {var.id!r}")
            variables[var.id] = var
        edges = []
        for ed in d["edges"]:
            child = variables[ed["child"]]
            table = {s: BBA.from_json(b, child.frame) for s, b in ed["table"].items()}
            edges.append(ConditionalBBA(ed["parent"], ed["child"], table))
        priors = {
            vid: BBA.from_json(b, variables[vid].frame) for vid, b in d.get("priors", {}).items()
        }
        meta = dict(d.get("meta", {}))
        caps = {k: meta.pop(k, None) for k in ("depth_limit", "max_in_degree", "max_out_degree")}
        net = cls.with_root(variables[d["root"]], priors=priors, meta=meta, **caps)
        for vid, var in variables.items():
            if vid != net.root:
                net = add_variable(net, var)
        for e in edges:
            net = add_edge(net, e, enforce_caps=False)
        return net

    @classmethod
    def loads(cls, text: str) -> "EvidentialNetwork":
        return cls.from_json(json.loads(text))

    def to_dot(self) -> str:
        shapes = {HYPOTHESIS: "doubleoctagon", INTERMEDIATE: "ellipse", OBSERVABLE: "box"}
        lines = ["digraph evidential_network {"]
        for vid, var in self.variables.items():
            label = f"{vid}\\n{{{', '.join(var.states)}}}"
            lines.append(f'  "{vid}" [shape={shapes[var.kind]}, label="{label}"];')
        for e in self.edges:
            lines.append(f'  "{e.parent}" -> "{e.child}";')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def adjacency_listing(self) -> str:
        lines = []
        seen = set()

        def walk(v, indent):
            var = self.variables[v]
            mark = " (see above)" if v in seen else ""
            lines.append(f"{'  ' * indent}{v} [{var.kind}] {{{', '.join(var.states)}}}{mark}")
            if v in seen:
                return
            seen.add(v)
            for c in self._children[v]:
                walk(c, indent + 1)

        walk(self.root, 0)
        for v in self.variables:
            if v not in seen:
                walk(v, 0)
        return "\n".join(lines) + "\n"


# mutation (returns new networks)

def add_variable(net: EvidentialNetwork, variable: Variable) -> EvidentialNetwork:
    if variable.id in net.variables:
        raise DuplicateId(f"variable {variable.id!r} already exists")
    if variable.kind == HYPOTHESIS:
        raise TypeConstraintViolation("a network has exactly one hypothesis variable")
    return replace(net, variables={**net.variables, variable.id: variable})


def check_conditional(net: EvidentialNetwork, cond: ConditionalBBA) -> None:
    parent = net.variable(cond.parent)
    child = net.variable(cond.child)
    missing = [s for s in parent.states if s not in cond.table]
    extra = [s for s in cond.table if s not in parent.states]
    if missing or extra:
        raise IncompleteConditionalTable(
            f"edge {cond.parent}->{cond.child}: missing rows {missing}, unknown rows {extra}"
        )
    for s, bba in cond.table.items():
        if bba.frame != child.frame:
            raise FrameMismatch(f"row {s!r} of {cond.parent}->{cond.child} is over the wrong frame")
        if not bba.is_normalized:
            raise InvalidBBA(f"row {s!r} of {cond.parent}->{cond.child} is not normalized")
        if not bba.in_restricted_family():
            raise MalformedElicitation(
                f"row {s!r} of {cond.parent}->{cond.child} leaves the restricted focal family"
            )


def add_edge(net: EvidentialNetwork, cond: ConditionalBBA, enforce_caps: bool = True) -> EvidentialNetwork:
    net.variable(cond.parent)
    child = net.variable(cond.child)
    if cond.edge in net.edge_set:
        raise DuplicateId(f"edge {cond.parent}->{cond.child} already exists")
    if cond.parent == cond.child or net.reaches(cond.child, cond.parent):
        raise CycleDetected(f"edge {cond.parent}->{cond.child} would close a directed cycle")
    if child.kind == HYPOTHESIS:
        raise TypeConstraintViolation("no edge may point into the hypothesis variable")
    if enforce_caps:
        if net.max_in_degree is not None and len(net.parents(cond.child)) >= net.max_in_degree:
            raise DegreeCapExceeded(f"in-degree cap {net.max_in_degree} reached at {cond.child!r}")
        if net.max_out_degree is not None and len(net.children(cond.parent)) >= net.max_out_degree:
            raise DegreeCapExceeded(f"out-degree cap {net.max_out_degree} reached at {cond.parent!r}")
    check_conditional(net, cond)
    return replace(net, edges=net.edges + (cond,))


def set_prior(net: EvidentialNetwork, vid: str, prior: BBA) -> EvidentialNetwork:
    if prior.frame != net.variable(vid).frame:
        raise FrameMismatch(f"prior for {vid!r} is over the wrong frame")
    return replace(net, priors={**net.priors, vid: prior})


# elicitation and aggregation

def validate_partial_masses(raw: Mapping, frame: Frame) -> BBA:
    """Check a partial mass map against the restricted family and top it up on the frame.

    Keys may be masks, single labels, label sequences, or ``"*"`` for the frame.
    """
    masses: dict[int, float] = {}
    for key, value in raw.items():
        try:
            mask = frame.full if key == "*" else frame.mask(key)
        except InvalidBBA as exc:
            raise MalformedElicitation(str(exc)) from None
        if mask == 0:
            raise MalformedElicitation("focal set is empty")
        if popcount(mask) > 2 and mask != frame.full:
            raise MalformedElicitation(
                f"focal set {frame.labels(mask)} is outside the restricted family"
            )
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise MalformedElicitation(f"mass {value!r} is not a number") from None
        if value < 0 or value != value:
            raise MalformedElicitation(f"mass {value!r} is negative or NaN")
        if value > 0:
            masses[mask] = masses.get(mask, 0.0) + value
    total = sum(masses.values())
    if total > 1.0 + OVERALLOCATION_TOL:
        raise OverAllocatedMass(f"masses sum to {total:.6g} > 1")
    if total > 1.0:
        masses = {m: v / total for m, v in masses.items()}
    residual = 1.0 - sum(masses.values())
    if residual > TOL:
        masses[frame.full] = masses.get(frame.full, 0.0) + residual
    if not masses:
        return vacuous(frame)
    return BBA(frame, masses)


def elicit_conditional(snippet: EvidenceSnippet, parent_state: str, child: Variable, elicitor) -> BBA:
    raw = elicitor.elicit(snippet, parent_state, child)
    return validate_partial_masses(raw, child.frame)


def aggregate_snippets(bbas: Sequence[BBA]) -> BBA:
    """Pool per-snippet conditionals for one (edge, parent state) with K-way Yager."""
    return yager_combine_k(list(bbas))


# construction

@dataclass(frozen=True)
class ConstructionLimits:
    max_depth: int = 4
    max_in_degree: int = 3
    max_out_degree: int = 6
    max_nodes: int = 64
    top_k: int = 5
    require_polytree: bool = True
    raise_on_limit: bool = False


_TOKEN = re.compile(r"[a-z0-9]+")
_STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it its may of on or that the this "
    "to was were which with s t".split()
)


def tokens(text: str) -> set[str]:
    return {t for t in _TOKEN.findall(text.lower()) if t not in _STOPWORDS}


def query_text(variable: Variable) -> str:
    return variable.description or variable.id.replace("_", " ")


def retrieve(corpus: Sequence[Document], variable: Variable, top_k: int = 5) -> list[Document]:
    """Lexical top-k retrieval by case-folded token overlap with the variable description."""
    query = tokens(query_text(variable))
    scored = []
    for doc in corpus:
        score = len(query & tokens(doc.text))
        if score > 0:
            scored.append((-score, doc.id, doc))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [doc for _, _, doc in scored[:top_k]]


def construct_network(
    corpus: Sequence[Document],
    root: Variable,
    proposer,
    elicitor,
    limits: ConstructionLimits = ConstructionLimits(),
) -> EvidentialNetwork:
    """Breadth-first, retrieval-guided expansion from the hypothesis variable.

    A proposed child is kept only when at least one of its snippets cites a
    passage retrieved for the parent.  Each kept edge is parameterized by
    eliciting one BBA per (snippet, parent state) and pooling them with
    K-way Yager.  Rejections and truncations are recorded in ``meta``.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    net = EvidentialNetwork.with_root(
        root,
        depth_limit=limits.max_depth,
        max_in_degree=limits.max_in_degree,
        max_out_degree=limits.max_out_degree,
    )
    rejected: list[dict] = []
    truncated: list[str] = []
    provenance: dict[str, list[str]] = {}
    queue = deque([(root.id, 0)])
    while queue:
        x, depth = queue.popleft()
        if depth >= limits.max_depth:
            continue
        parent = net.variables[x]
        passages = retrieve(corpus, parent, limits.top_k)
        retrieved = {d.id for d in passages}
        try:
            proposals = proposer.propose(parent, passages)
        except ProviderFailure as exc:
            raise ProviderFailure(f"while expanding {x!r}: {exc}") from exc
        for proposal in proposals:
            y = proposal.variable
            support = [s for s in proposal.snippets if s.source in retrieved]
            reason = None
            exists = y.id in net.variables
            if not support:
                reason = "unsupported"
            elif y.kind == HYPOTHESIS or y.id == net.root:
                reason = "type-constraint"
            elif (x, y.id) in net.edge_set:
                reason = "duplicate"
            elif exists and (y.id == x or net.reaches(y.id, x)):
                reason = "cycle"
            elif exists and limits.require_polytree:
                reason = "undirected-cycle"
            elif not exists and len(net.variables) >= limits.max_nodes:
                reason = "max-nodes"
            elif len(net.children(x)) >= limits.max_out_degree:
                reason = "out-degree"
            elif exists and len(net.parents(y.id)) >= limits.max_in_degree:
                reason = "in-degree"
            if reason is not None:
                rejected.append({"parent": x, "child": y.id, "reason": reason})
                if reason in ("max-nodes", "out-degree", "in-degree"):
                    truncated.append(f"{reason} at {x}->{y.id}")
                    if limits.raise_on_limit:
                        raise LimitExceeded(truncated[-1])
                logger.debug("rejected %s -> %s (%s)", x, y.id, reason)
                continue
            child = net.variables[y.id] if exists else y
            table = {}
            for state in parent.states:
                try:
                    rows = [elicit_conditional(s, state, child, elicitor) for s in support]
                except ProviderFailure as exc:
                    raise ProviderFailure(f"while eliciting {x}->{y.id} at {state!r}: {exc}") from exc
                table[state] = aggregate_snippets(rows)
            if not exists:
                net = add_variable(net, child)
            net = add_edge(net, ConditionalBBA(x, child.id, table))
            provenance[f"{x}->{child.id}"] = [s.id for s in support]
            if not exists:
                queue.append((child.id, depth + 1))
    meta = {
        "construction": {
            "rejected": rejected,
            "truncated": bool(truncated),
            "truncations": truncated,
            "top_k": limits.top_k,
            "max_nodes": limits.max_nodes,
        },
        "provenance": provenance,
    }
    return replace(net, meta=meta)


# structure comparison

@dataclass(frozen=True)
class StructureDiff:
    shd: int
    edge_precision: float
    edge_recall: float
    missing: tuple[tuple[str, str], ...]
    extra: tuple[tuple[str, str], ...]
    reversed: tuple[tuple[str, str], ...]

    def to_json(self) -> dict:
        return {
            "shd": self.shd,
            "edge_precision": self.edge_precision,
            "edge_recall": self.edge_recall,
            "missing": [list(e) for e in self.missing],
            "extra": [list(e) for e in self.extra],
            "reversed": [list(e) for e in self.reversed],
        }


def _edges_of(graph) -> set[tuple[str, str]]:
    if isinstance(graph, EvidentialNetwork):
        return graph.edge_set
    return {tuple(e) for e in graph}


def structure_diff(candidate: EvidentialNetwork, reference: EvidentialNetwork) -> StructureDiff:
    """SHD with a reversed edge counted once, plus directed-edge precision and recall."""
    if candidate.root != reference.root:
        raise UnalignableVariables(f"roots differ: {candidate.root!r} vs {reference.root!r}")
    for vid in set(candidate.variables) & set(reference.variables):
        if candidate.variables[vid].states != reference.variables[vid].states:
            raise UnalignableVariables(f"variable {vid!r} has different states in the two graphs")
    return edge_diff(_edges_of(candidate), _edges_of(reference))


def edge_diff(candidate: Iterable[tuple[str, str]], reference: Iterable[tuple[str, str]]) -> StructureDiff:
    cand, ref = set(candidate), set(reference)
    correct = cand & ref
    rev = {(u, v) for (u, v) in cand - ref if (v, u) in ref}
    missing = {(u, v) for (u, v) in ref - cand if (v, u) not in cand}
    extra = {(u, v) for (u, v) in cand - ref if (v, u) not in ref}
    precision = len(correct) / len(cand) if cand else 1.0
    recall = len(correct) / len(ref) if ref else 1.0
    return StructureDiff(
        shd=len(missing) + len(extra) + len(rev),
        edge_precision=precision,
        edge_recall=recall,
        missing=tuple(sorted(missing)),
        extra=tuple(sorted(extra)),
        reversed=tuple(sorted(rev)),
    )
