"""Exact message passing over polytree-shaped evidential networks.

Messages travel parent -> child through the disjunctive rule applied to the
conditional rows, and child -> parent through the generalized Bayesian
theorem.  Every node fuses its prior, its local evidence and all incoming
messages with Dempster's rule; the message a node sends to a neighbour
leaves out what that neighbour sent (no double counting).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .belief import (
    BBA,
    EXACT_TOL,
    Frame,
    _prune,
    deng_entropy,
    dempster_combine_k,
    disjunctive_combine_k,
    pignistic,
    vacuous,
    belief,
    plausibility,
)
from .errors import (
    FrameMismatch,
    IncompleteConditionalTable,
    InvalidBBA,
    TotalConflict,
    UnsupportedTopology,
)
from .network import ConditionalBBA, EvidentialNetwork

EvidenceAssignment = Mapping[str, BBA]


@dataclass(frozen=True)
class Marginals:
    beliefs: Mapping[str, BBA]
    conflict_log: tuple[tuple[str, float], ...] = ()
    fallbacks: tuple[tuple[str, str], ...] = ()

    def __getitem__(self, vid: str) -> BBA:
        return self.beliefs[vid]

    def conflict_at(self, vid: str) -> float:
        return sum(k for v, k in self.conflict_log if v == vid)

    def to_json(self) -> dict:
        return {
            "marginals": {vid: bba.to_json() for vid, bba in self.beliefs.items()},
            "conflict_log": [[vid, k] for vid, k in self.conflict_log],
            "fallbacks": [list(e) for e in self.fallbacks],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def _row_union(cond: ConditionalBBA, parent_frame: Frame, mask: int) -> BBA:
    rows = [cond.table[s] for i, s in enumerate(parent_frame.states) if mask >> i & 1]
    return disjunctive_combine_k(rows)


def forward_message(parent: BBA, cond: ConditionalBBA) -> BBA:
    """Image of a parent BBA on the child frame.

    Each parent focal set A sends its mass to the disjunctive combination
    of the rows for the states in A.
    """
    missing = [s for s in parent.frame.states if s not in cond.table]
    if missing:
        raise IncompleteConditionalTable(f"edge {cond.parent}->{cond.child} lacks rows {missing}")
    child_frame = next(iter(cond.table.values())).frame
    raw: dict[int, float] = {}
    for a, w in parent.masses.items():
        image = _row_union(cond, parent.frame, a)
        for b, v in image.masses.items():
            raw[b] = raw.get(b, 0.0) + w * v
    return BBA(child_frame, _prune(child_frame, raw))


def _gbt_masses(pl: list[float], raw: dict[int, float], weight: float) -> None:
    """Add ``weight`` times the GBT posterior for per-state plausibilities ``pl``.

    Möbius inversion of pl(A) = 1 - prod_{x in A} (1 - pl_x) gives
    m(A) = prod_{x in A} pl_x * prod_{x not in A} (1 - pl_x); states with
    pl_x in {0, 1} are fixed in or out, only the rest are enumerated.
    """
    fixed = 0
    free = []
    for i, p in enumerate(pl):
        if p >= 1.0 - EXACT_TOL:
            fixed |= 1 << i
        elif p > EXACT_TOL:
            free.append((i, p))
    k = len(free)
    for bits in range(1 << k):
        mask = fixed
        m = weight
        for j, (i, p) in enumerate(free):
            if bits >> j & 1:
                mask |= 1 << i
                m *= p
            else:
                m *= 1.0 - p
        if m > 0.0:
            raw[mask] = raw.get(mask, 0.0) + m


def _backward(child: BBA, cond: ConditionalBBA, parent_frame: Frame) -> tuple[BBA, bool]:
    missing = [s for s in parent_frame.states if s not in cond.table]
    if missing:
        raise IncompleteConditionalTable(f"edge {cond.parent}->{cond.child} lacks rows {missing}")
    rows = [cond.table[s] for s in parent_frame.states]
    raw: dict[int, float] = {}
    for b, w in child.masses.items():
        pl = [plausibility(row, b) for row in rows]
        _gbt_masses(pl, raw, w)
    raw.pop(0, None)
    total = math.fsum(raw.values())
    if total <= EXACT_TOL:
        return vacuous(parent_frame), True
    return BBA(parent_frame, _prune(parent_frame, {m: v / total for m, v in raw.items()})), False


def backward_message(child: BBA, cond: ConditionalBBA, parent_frame: Frame | None = None) -> BBA:
    """GBT message from child evidence to the parent frame.

    Degenerate evidence (plausibility zero under every parent state) yields
    the vacuous BBA; :func:`propagate` records those edges in ``fallbacks``.
    """
    if parent_frame is None:
        parent_frame = Frame(cond.parent, tuple(cond.table))
    return _backward(child, cond, parent_frame)[0]


def _validate(net: EvidentialNetwork, evidence: EvidenceAssignment) -> None:
    for vid, bba in evidence.items():
        var = net.variable(vid)
        if bba.frame != var.frame:
            raise FrameMismatch(f"evidence for {vid!r} is over frame {bba.frame.id!r}")
        if not bba.is_normalized:
            raise InvalidBBA(f"evidence for {vid!r} is not normalized")
    if not net.is_polytree():
        raise UnsupportedTopology("network has an undirected cycle; only polytrees are supported")


def propagate(net: EvidentialNetwork, evidence: EvidenceAssignment | None = None) -> Marginals:
    """Marginal BBA at every node given local evidence (absent entries are vacuous)."""
    evidence = dict(evidence or {})
    _validate(net, evidence)
    messages: dict[tuple[str, str], BBA] = {}
    fallbacks: list[tuple[str, str]] = []

    def local_parts(v: str) -> list[tuple[str, BBA]]:
        parts = []
        if v in net.priors:
            parts.append(("prior", net.priors[v]))
        if v in evidence:
            parts.append(("evidence", evidence[v]))
        return parts

    def fuse(v: str, parts: list[tuple[str, BBA]]) -> tuple[BBA, float]:
        parts = [p for p in parts if not p[1].is_vacuous]
        if not parts:
            return vacuous(net.variables[v].frame), 0.0
        if len(parts) == 1:
            return parts[0][1], 0.0
        try:
            return dempster_combine_k([b for _, b in parts])
        except TotalConflict as exc:
            raise TotalConflict(
                f"total conflict at node {v!r} from {[s for s, _ in parts]}",
                node=v,
                sources=[s for s, _ in parts],
            ) from exc

    def message(src: str, dst: str) -> BBA:
        key = (src, dst)
        if key in messages:
            return messages[key]
        parts = local_parts(src) + [
            (f"msg:{k}", message(k, src)) for k in net.neighbours(src) if k != dst
        ]
        fused, _ = fuse(src, parts)
        if dst in net.children(src):
            msg = forward_message(fused, net.edge(src, dst))
        else:
            msg, fell_back = _backward(fused, net.edge(dst, src), net.variables[dst].frame)
            if fell_back:
                fallbacks.append((src, dst))
        messages[key] = msg
        return msg

    beliefs = {}
    conflict_log = []
    for v in net.variables:
        parts = local_parts(v) + [(f"msg:{k}", message(k, v)) for k in net.neighbours(v)]
        marginal, k = fuse(v, parts)
        beliefs[v] = marginal
        if k > 0.0:
            conflict_log.append((v, k))
    return Marginals(beliefs, tuple(conflict_log), tuple(sorted(set(fallbacks))))


def summary_table(marginals: Marginals, net: EvidentialNetwork) -> str:
    """Per-node Bel / Pl / BetP / ignorance listing, one row per state."""
    lines = []
    for vid, var in net.variables.items():
        m = marginals[vid]
        betp = pignistic(m)
        ent = deng_entropy(m)
        lines.append(
            f"{vid} [{var.kind}]  ignorance={m.ignorance:.4f}  "
            f"E_d={ent.total:.4f} (nonsp={ent.nonspecificity:.4f}, disc={ent.discord:.4f})"
        )
        lines.append(f"  {'state':<20} {'Bel':>8} {'Pl':>8} {'BetP':>8}")
        for i, s in enumerate(var.states):
            lines.append(
                f"  {s:<20} {belief(m, s):>8.4f} {plausibility(m, s):>8.4f} {betp[i]:>8.4f}"
            )
    for vid, k in marginals.conflict_log:
        lines.append(f"conflict at {vid}: K={k:.6f}")
    return "\n".join(lines) + "\n"
