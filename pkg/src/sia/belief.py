"""Frames, basic belief assignments and the algebra over them.

Subsets of a frame are plain ``int`` bitmasks: bit ``i`` set means the
``i``-th state of the frame is in the subset.  A :class:`BBA` stores only its
focal sets (sparse), so combination cost scales with the number of focal
pairs rather than with ``2**n``.

All values are immutable and every operation is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    EmptyFocalSet,
    FrameMismatch,
    InvalidBBA,
    InvalidFrame,
    TotalConflict,
)

# contract checks (mass conservation, K == 1 detection)
TOL = 1e-9
# algebraic identities and numerical dust
EXACT_TOL = 1e-12
MAX_STATES = 16

Subset = Union[int, str, Iterable[str]]


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class Frame:
    """An ordered, finite frame of discernment."""

    id: str
    states: tuple[str, ...]
    descriptions: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "descriptions", tuple(self.descriptions))
        n = len(self.states)
        if not 1 <= n <= MAX_STATES:
            raise InvalidFrame(f"frame {self.id!r} must have 1..{MAX_STATES} states, got {n}")
        if any(not isinstance(s, str) or not s for s in self.states):
            raise InvalidFrame(f"frame {self.id!r} has an empty state label")
        if len(set(self.states)) != n:
            raise InvalidFrame(f"frame {self.id!r} has duplicate state labels")
        if self.descriptions and len(self.descriptions) != n:
            raise InvalidFrame(f"frame {self.id!r}: descriptions must match states")

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def full(self) -> int:
        """Bitmask of the whole frame."""
        return (1 << len(self.states)) - 1

    def index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise InvalidBBA(f"{label!r} is not a state of frame {self.id!r}") from None

    def mask(self, subset: Subset) -> int:
        """Convert a label, an iterable of labels, or a mask into a bitmask."""
        if isinstance(subset, (int, np.integer)):
            m = int(subset)
            if m < 0 or m & ~self.full:
                raise InvalidBBA(f"mask {m:#x} is outside frame {self.id!r}")
            return m
        if isinstance(subset, str):
            return 1 << self.index(subset)
        m = 0
        for label in subset:
            m |= 1 << self.index(label)
        return m

    def labels(self, mask: int) -> tuple[str, ...]:
        return tuple(s for i, s in enumerate(self.states) if mask >> i & 1)

    def to_json(self) -> dict:
        d = {"id": self.id, "states": list(self.states)}
        if self.descriptions:
            d["descriptions"] = list(self.descriptions)
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "Frame":
        return cls(d["id"], tuple(d["states"]), tuple(d.get("descriptions", ())))


def _sort_key(mask: int) -> tuple[int, ...]:
    # canonical order: by the sorted tuple of member indices
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


@dataclass(frozen=True)
class BBA:
    """Sparse basic belief assignment.

    ``masses`` maps non-empty subset masks to strictly positive mass.  Mass on
    the empty set lives in ``conflict`` and is nonzero only for the output of
    :func:`conjunctive_combine`.
    """

    frame: Frame
    masses: Mapping[int, float]
    conflict: float = 0.0

    def __post_init__(self):
        clean = {}
        for key, value in self.masses.items():
            mask = self.frame.mask(key)
            if mask == 0:
                raise EmptyFocalSet("the empty set cannot carry mass inside `masses`")
            value = float(value)
            if not value > 0.0 or math.isnan(value):
                raise InvalidBBA(f"mass must be > 0, got {value!r}")
            clean[mask] = clean.get(mask, 0.0) + value
        clean = dict(sorted(clean.items(), key=lambda kv: _sort_key(kv[0])))
        object.__setattr__(self, "masses", clean)
        conflict = float(self.conflict)
        if conflict < 0.0:
            raise InvalidBBA(f"conflict must be >= 0, got {conflict}")
        object.__setattr__(self, "conflict", conflict)
        total = math.fsum(clean.values()) + conflict
        if abs(total - 1.0) > TOL:
            raise InvalidBBA(f"masses sum to {total!r}, expected 1")

    # construction helpers

    @classmethod
    def from_labels(cls, frame: Frame, masses: Mapping, conflict: float = 0.0) -> "BBA":
        """Build from ``{label-or-labels: mass}``; ``"*"`` denotes the whole frame."""
        out = {}
        for key, value in masses.items():
            mask = frame.full if key == "*" else frame.mask(key)
            out[mask] = out.get(mask, 0.0) + value
        return cls(frame, out, conflict)

    @classmethod
    def from_weights(cls, frame: Frame, weights: Mapping[Subset, float]) -> "BBA":
        """Normalize non-negative weights on non-empty subsets into a BBA."""
        raw = {}
        for key, w in weights.items():
            if w < 0:
                raise InvalidBBA("weights must be non-negative")
            if w > 0:
                mask = frame.mask(key)
                raw[mask] = raw.get(mask, 0.0) + w
        total = math.fsum(raw.values())
        if total <= 0:
            raise InvalidBBA("weights sum to zero")
        return cls(frame, {k: v / total for k, v in raw.items()})

    @classmethod
    def from_probabilities(cls, frame: Frame, probs: Sequence[float]) -> "BBA":
        """Bayesian BBA with singleton masses ``probs``."""
        if len(probs) != frame.size:
            raise InvalidBBA("probability vector length does not match frame")
        return cls.from_weights(frame, {1 << i: p for i, p in enumerate(probs)})

    # accessors

    def mass(self, subset: Subset) -> float:
        mask = self.frame.mask(subset)
        if mask == 0:
            return self.conflict
        return self.masses.get(mask, 0.0)

    @property
    def focal_sets(self) -> tuple[int, ...]:
        return tuple(self.masses)

    @property
    def ignorance(self) -> float:
        """Mass on the whole frame."""
        return self.masses.get(self.frame.full, 0.0)

    @property
    def is_normalized(self) -> bool:
        return self.conflict <= TOL

    @property
    def is_vacuous(self) -> bool:
        return self.masses.keys() == {self.frame.full} and self.conflict == 0.0

    @property
    def is_bayesian(self) -> bool:
        return all(popcount(m) == 1 for m in self.masses)

    def in_restricted_family(self) -> bool:
        """True when every focal set is a singleton, a pair, or the frame."""
        full = self.frame.full
        return all(popcount(m) <= 2 or m == full for m in self.masses)

    def labelled(self) -> dict[tuple[str, ...], float]:
        return {self.frame.labels(m): v for m, v in self.masses.items()}

    def close_to(self, other: "BBA", tol: float = EXACT_TOL) -> bool:
        if self.frame != other.frame:
            return False
        keys = set(self.masses) | set(other.masses)
        if abs(self.conflict - other.conflict) > tol:
            return False
        return all(abs(self.masses.get(k, 0.0) - other.masses.get(k, 0.0)) <= tol for k in keys)

    def to_json(self) -> dict:
        return {
            "frame": self.frame.id,
            "masses": [
                {"set": list(self.frame.labels(m)), "mass": v} for m, v in self.masses.items()
            ],
            "conflict": self.conflict,
        }

    @classmethod
    def from_json(cls, d: Mapping, frame: Frame) -> "BBA":
        if d.get("frame", frame.id) != frame.id:
            raise FrameMismatch(f"BBA is over {d['frame']!r}, expected {frame.id!r}")
        masses = {}
        for entry in d["masses"]:
            mask = frame.mask(entry["set"])
            masses[mask] = masses.get(mask, 0.0) + float(entry["mass"])
        return cls(frame, masses, float(d.get("conflict", 0.0)))

    def __repr__(self):
        body = ", ".join(
            "{" + ",".join(self.frame.labels(m)) + f"}}:{v:.6g}" for m, v in self.masses.items()
        )
        tail = f", K={self.conflict:.6g}" if self.conflict else ""
        return f"BBA({self.frame.id}: {body}{tail})"


def vacuous(frame: Frame) -> BBA:
    return BBA(frame, {frame.full: 1.0})


def categorical(frame: Frame, subset: Subset) -> BBA:
    mask = frame.mask(subset)
    if mask == 0:
        raise EmptyFocalSet("categorical BBA needs a non-empty subset")
    return BBA(frame, {mask: 1.0})


def _subset_of(bba: BBA, subset: Subset) -> int:
    if isinstance(subset, Frame):
        raise FrameMismatch("expected a subset, got a frame")
    return bba.frame.mask(subset)


def belief(bba: BBA, subset: Subset) -> float:
    a = _subset_of(bba, subset)
    return math.fsum(v for b, v in bba.masses.items() if b & ~a == 0)


def plausibility(bba: BBA, subset: Subset) -> float:
    a = _subset_of(bba, subset)
    return math.fsum(v for b, v in bba.masses.items() if b & a)


def _same_frame(*bbas: BBA) -> Frame:
    frame = bbas[0].frame
    for other in bbas[1:]:
        if other.frame != frame:
            raise FrameMismatch(f"frames differ: {frame.id!r} vs {other.frame.id!r}")
    return frame


def _prune(frame: Frame, raw: dict[int, float]) -> dict[int, float]:
    """Drop masses below EXACT_TOL, folding them into the whole frame."""
    dust = 0.0
    out = {}
    for mask, value in raw.items():
        if value < EXACT_TOL:
            dust += value
        else:
            out[mask] = value
    if dust > 0.0:
        out[frame.full] = out.get(frame.full, 0.0) + dust
    return out


def _conjunctive_raw(bbas: Sequence[BBA]) -> dict[int, float]:
    """K-way conjunctive product; key 0 holds the conflict."""
    acc = {bbas[0].frame.full: 1.0}
    for bba in bbas:
        nxt: dict[int, float] = {}
        for a, va in acc.items():
            for b, vb in bba.masses.items():
                c = a & b
                nxt[c] = nxt.get(c, 0.0) + va * vb
        acc = nxt
    return acc


def conjunctive_combine(m1: BBA, m2: BBA) -> BBA:
    """Unnormalized conjunctive rule; conflict K is kept on the empty set."""
    frame = _same_frame(m1, m2)
    if m1.conflict or m2.conflict:
        raise InvalidBBA("conjunctive_combine expects normalized inputs")
    raw = _conjunctive_raw([m1, m2])
    k = raw.pop(0, 0.0)
    return BBA(frame, _prune(frame, raw), k)


def _normalize_conjunctive(frame: Frame, raw: dict[int, float]) -> BBA:
    k = raw.pop(0, 0.0)
    rest = math.fsum(raw.values())
    if rest <= TOL or k >= 1.0 - TOL:
        raise TotalConflict(f"total conflict on frame {frame.id!r} (K={k:.12g})")
    return BBA(frame, _prune(frame, {m: v / rest for m, v in raw.items()}))


def dempster_combine(m1: BBA, m2: BBA) -> BBA:
    """Dempster's normalized rule; raises :class:`TotalConflict` when K = 1."""
    frame = _same_frame(m1, m2)
    return _normalize_conjunctive(frame, _conjunctive_raw([m1, m2]))


def dempster_combine_k(bbas: Sequence[BBA]) -> tuple[BBA, float]:
    """K-way Dempster combination; also returns the conflict that was normalized away."""
    if not bbas:
        raise InvalidBBA("need at least one BBA")
    frame = _same_frame(*bbas)
    raw = _conjunctive_raw(list(bbas))
    k = raw.get(0, 0.0)
    return _normalize_conjunctive(frame, raw), k


def yager_combine(m1: BBA, m2: BBA) -> BBA:
    return yager_combine_k([m1, m2])


def yager_combine_k(bbas: Sequence[BBA]) -> BBA:
    """K-way conjunctive product followed by a single transfer of conflict to the frame."""
    if not bbas:
        raise InvalidBBA("yager_combine_k needs a non-empty list")
    frame = _same_frame(*bbas)
    if len(bbas) == 1:
        return bbas[0]
    raw = _conjunctive_raw(list(bbas))
    k = raw.pop(0, 0.0)
    if k > 0.0:
        raw[frame.full] = raw.get(frame.full, 0.0) + k
    return BBA(frame, _prune(frame, raw))


def disjunctive_combine(m1: BBA, m2: BBA) -> BBA:
    frame = _same_frame(m1, m2)
    raw: dict[int, float] = {}
    for a, va in m1.masses.items():
        for b, vb in m2.masses.items():
            c = a | b
            raw[c] = raw.get(c, 0.0) + va * vb
    return BBA(frame, _prune(frame, raw))


def disjunctive_combine_k(bbas: Sequence[BBA]) -> BBA:
    return reduce(disjunctive_combine, bbas)


def pignistic(bba: BBA) -> np.ndarray:
    """Pignistic probability vector, indexed like ``bba.frame.states``."""
    if bba.conflict >= 1.0 - TOL:
        raise TotalConflict("pignistic transform undefined at K = 1")
    n = bba.frame.size
    out = np.zeros(n)
    scale = 1.0 - bba.conflict
    for mask, value in bba.masses.items():
        members = [i for i in range(n) if mask >> i & 1]
        share = value / (len(members) * scale)
        for i in members:
            out[i] += share
    return out


@dataclass(frozen=True)
class EntropyReport:
    nonspecificity: float
    discord: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.nonspecificity + self.discord)


def deng_entropy(bba: BBA) -> EntropyReport:
    """Deng entropy in bits, split into nonspecificity and discord."""
    nonsp = 0.0
    disc = 0.0
    for mask, value in bba.masses.items():
        k = popcount(mask)
        if k > 1:
            nonsp += value * math.log2(2.0**k - 1.0)
        disc -= value * math.log2(value)
    return EntropyReport(nonsp, max(disc, 0.0))


def to_bayesian(bba: BBA) -> BBA:
    """Collapse a BBA to its pignistic distribution (vacuous -> uniform)."""
    if bba.is_bayesian and not bba.conflict:
        return bba
    return BBA.from_probabilities(bba.frame, pignistic(bba))
