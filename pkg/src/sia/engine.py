"""Active questioning over an evidential network.

Each turn the engine scores every unasked observable by the expected drop
in Deng entropy at the hypothesis node: it simulates a categorical answer
for every state of the candidate, re-propagates, and weights the entropy
reductions by the current pignistic distribution at the candidate.  Real
answers are fused into local evidence with Yager's rule, so contradictions
become ignorance rather than errors.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import Mapping, Protocol, Sequence

import numpy as np

from .belief import (
    BBA,
    TOL,
    categorical,
    deng_entropy,
    pignistic,
    to_bayesian,
    vacuous,
    yager_combine,
    yager_combine_k,
)
from .errors import (
    AlreadyAsked,
    FrameMismatch,
    InvalidBBA,
    NotObservable,
    SIAError,
    TotalConflict,
)
from .network import OBSERVABLE, ConditionalBBA, EvidentialNetwork
from .propagation import Marginals, propagate

EVIDENTIAL = "evidential"
IG_BAYESIAN = "ig_bayesian"
MODES = (EVIDENTIAL, IG_BAYESIAN)

SCORE_TOL = 1e-9
TRACE_HEADER = ("turn", "betp_true", "betp_max", "e_d", "nonspecificity", "discord", "conflict")


@dataclass(frozen=True)
class EngineConfig:
    tau_conf: float = 0.85
    t_max: int = 15
    epsilon_nonsp: float = 0.1
    hedge_mass: float = 0.7
    mode: str = EVIDENTIAL

    def __post_init__(self):
        if not 0.0 < self.tau_conf <= 1.0:
            raise ValueError(f"tau_conf must lie in (0, 1], got {self.tau_conf}")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise ValueError(f"t_max must be a positive integer, got {self.t_max}")
        if self.epsilon_nonsp < 0:
            raise ValueError(f"epsilon_nonsp must be >= 0, got {self.epsilon_nonsp}")
        if not 0.0 < self.hedge_mass < 1.0:
            raise ValueError(f"hedge_mass must lie in (0, 1), got {self.hedge_mass}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class TraceRow:
    turn: int
    betp: tuple[float, ...]
    e_d: float
    nonspecificity: float
    discord: float
    conflict: float


@dataclass(frozen=True)
class Exchange:
    question: str
    target: str
    answer: str
    answer_bba: BBA


@dataclass(frozen=True)
class BeliefState:
    net: EvidentialNetwork
    turn: int
    local_evidence: Mapping[str, BBA]
    marginals: Marginals
    asked: frozenset[str] = frozenset()
    transcript: tuple[Exchange, ...] = ()
    trace: tuple[TraceRow, ...] = ()

    @property
    def hypothesis_belief(self) -> BBA:
        return self.marginals[self.net.root]

    @property
    def betp(self) -> np.ndarray:
        return pignistic(self.hypothesis_belief)

    def candidates(self) -> list[str]:
        return [v for v in self.net.observables() if v not in self.asked]


@dataclass(frozen=True)
class QuestionScore:
    target: str
    delta_nonsp: float
    delta_disc: float
    predictive: tuple[float, ...]


@dataclass(frozen=True)
class Decide:
    hypothesis: str
    index: int
    tie: bool = False


@dataclass(frozen=True)
class Abstain:
    reason: str = "budget"


@dataclass(frozen=True)
class Continue:
    pass


StopDecision = Decide | Abstain | Continue


@dataclass
class Outcome:
    decision: str | None
    turns_used: int
    betp: tuple[float, ...]
    hypotheses: tuple[str, ...]
    transcript: tuple[Exchange, ...]
    trace: tuple[TraceRow, ...]
    mode: str = EVIDENTIAL
    tie: bool = False
    abstain_reason: str | None = None
    error: str | None = None

    @property
    def abstained(self) -> bool:
        return self.decision is None

    def to_json(self) -> dict:
        return {
            "decision": self.decision,
            "abstained": self.abstained,
            "abstain_reason": self.abstain_reason,
            "tie": self.tie,
            "mode": self.mode,
            "turns_used": self.turns_used,
            "hypotheses": list(self.hypotheses),
            "betp": [_r(p) for p in self.betp],
            "transcript": [
                {
                    "turn": i + 1,
                    "question": ex.question,
                    "target": ex.target,
                    "answer": ex.answer,
                    "answer_bba": ex.answer_bba.to_json(),
                }
                for i, ex in enumerate(self.transcript)
            ],
            "trace": [
                {
                    "turn": row.turn,
                    "betp": [_r(p) for p in row.betp],
                    "e_d": _r(row.e_d),
                    "nonspecificity": _r(row.nonspecificity),
                    "discord": _r(row.discord),
                    "conflict": _r(row.conflict),
                }
                for row in self.trace
            ],
            "error": self.error,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    def trace_csv(self, true_hypothesis: str | None = None) -> str:
        idx = self.hypotheses.index(true_hypothesis) if true_hypothesis is not None else None
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in self.trace:
            writer.writerow([
                row.turn,
                "" if idx is None else f"{row.betp[idx]:.12g}",
                f"{max(row.betp):.12g}",
                f"{row.e_d:.12g}",
                f"{row.nonspecificity:.12g}",
                f"{row.discord:.12g}",
                f"{row.conflict:.12g}",
            ])
        return buf.getvalue()


def _r(x: float) -> float:
    # 12 significant digits keeps serializations stable across platforms
    return float(f"{x:.12g}")


class Client(Protocol):
    def answer(self, target: str, question: str) -> Sequence[str] | str: ...


# ablation: collapse every belief to a point probability

def bayesianize_network(net: EvidentialNetwork) -> EvidentialNetwork:
    """Replace every conditional row and prior by its pignistic distribution.

    Vacuous rows (nothing could be elicited) become uniform, and so does the
    prior of any root that has none.
    """
    edges = tuple(
        ConditionalBBA(e.parent, e.child, {s: to_bayesian(row) for s, row in e.table.items()})
        for e in net.edges
    )
    priors = {v: to_bayesian(net.prior(v)) for v in net.variables
              if v in net.priors or not net.parents(v)}
    return replace(net, edges=edges, priors=priors)


def _mode_bba(bba: BBA, config: EngineConfig | None) -> BBA:
    if config is not None and config.mode == IG_BAYESIAN:
        return to_bayesian(bba)
    return bba


def _trace_row(net: EvidentialNetwork, turn: int, marginals: Marginals) -> TraceRow:
    m = marginals[net.root]
    ent = deng_entropy(m)
    return TraceRow(
        turn,
        tuple(float(p) for p in pignistic(m)),
        ent.total,
        ent.nonspecificity,
        ent.discord,
        marginals.conflict_at(net.root),
    )


def init_state(net: EvidentialNetwork, initial_evidence: Mapping[str, BBA] | None = None,
               config: EngineConfig | None = None) -> BeliefState:
    """Turn-0 state; initial evidence counts its observables as already asked.

    With ``mode=ig_bayesian`` the network must already be collapsed
    (see :func:`bayesianize_network`); evidence is collapsed here.
    """
    evidence = {}
    for vid, bba in (initial_evidence or {}).items():
        net.variable(vid)
        evidence[vid] = _mode_bba(bba, config)
    marginals = propagate(net, evidence)
    asked = frozenset(v for v in evidence if net.variables[v].kind == OBSERVABLE)
    return BeliefState(net, 0, evidence, marginals, asked, (), (_trace_row(net, 0, marginals),))


def _check_target(state: BeliefState, target: str) -> None:
    var = state.net.variable(target)
    if var.kind != OBSERVABLE:
        raise NotObservable(f"{target!r} is {var.kind}, not observable")
    if target in state.asked:
        raise AlreadyAsked(f"{target!r} has already been asked")


def score_question(state: BeliefState, target: str) -> QuestionScore:
    """Expected nonspecificity and discord reductions at H from asking ``target``."""
    _check_target(state, target)
    net = state.net
    frame = net.variables[target].frame
    current = deng_entropy(state.hypothesis_belief)
    weights = pignistic(state.marginals[target])
    total = float(weights.sum())
    weights = weights / total if total > 0 else np.full(frame.size, 1.0 / frame.size)
    local = state.local_evidence.get(target, vacuous(frame))
    d_nonsp = d_disc = 0.0
    for i, w in enumerate(weights):
        if w <= 0.0:
            continue
        hypo = yager_combine(local, categorical(frame, 1 << i))
        try:
            post = propagate(net, {**state.local_evidence, target: hypo})[net.root]
        except TotalConflict:
            # an answer the rest of the evidence rules out leaves H where it is
            continue
        ent = deng_entropy(post)
        d_nonsp += float(w) * (current.nonspecificity - ent.nonspecificity)
        d_disc += float(w) * (current.discord - ent.discord)
    return QuestionScore(target, d_nonsp, d_disc, tuple(float(w) for w in weights))


def _lex_better(a: tuple[float, float], b: tuple[float, float]) -> bool:
    for x, y in zip(a, b):
        if x > y + SCORE_TOL:
            return True
        if x < y - SCORE_TOL:
            return False
    return False


def rank_key(state: BeliefState, score: QuestionScore, config: EngineConfig) -> tuple[float, float]:
    if deng_entropy(state.hypothesis_belief).nonspecificity >= config.epsilon_nonsp:
        return (score.delta_nonsp, score.delta_disc)
    return (score.delta_disc, score.delta_nonsp)


def select_question(state: BeliefState, config: EngineConfig = EngineConfig()) -> str | None:
    """Best unasked observable under the active lexicographic key, or None."""
    best = None
    best_key = None
    for target in sorted(state.candidates()):
        key = rank_key(state, score_question(state, target), config)
        # candidates arrive in ascending id order, so strict improvement keeps the lowest id on ties
        if best is None or _lex_better(key, best_key):
            best, best_key = target, key
    return best


def ingest_answer(state: BeliefState, target: str, answer_bba: BBA,
                  question: str = "", answer_text: str = "",
                  config: EngineConfig | None = None) -> BeliefState:
    net = state.net
    var = net.variable(target)
    if var.kind != OBSERVABLE:
        raise NotObservable(f"{target!r} is {var.kind}, not observable")
    if answer_bba.frame != var.frame:
        raise FrameMismatch(f"answer is over frame {answer_bba.frame.id!r}, expected {var.frame.id!r}")
    if not answer_bba.is_normalized:
        raise InvalidBBA("answer BBA is not normalized")
    answer_bba = _mode_bba(answer_bba, config)
    local = state.local_evidence.get(target, vacuous(var.frame))
    evidence = {**state.local_evidence, target: yager_combine(local, answer_bba)}
    marginals = propagate(net, evidence)
    turn = state.turn + 1
    return BeliefState(
        net,
        turn,
        evidence,
        marginals,
        state.asked | {target},
        state.transcript + (Exchange(question, target, answer_text, answer_bba),),
        state.trace + (_trace_row(net, turn, marginals),),
    )


def should_stop(state: BeliefState, config: EngineConfig = EngineConfig()) -> StopDecision:
    betp = state.betp
    top = float(betp.max())
    if top >= config.tau_conf - 1e-12:
        idx = int(np.argmax(betp))
        tie = int(np.sum(np.abs(betp - top) <= TOL)) > 1
        return Decide(state.net.hypothesis.states[idx], idx, tie)
    if state.turn >= config.t_max:
        return Abstain("budget")
    if not state.candidates():
        return Abstain("no_candidates")
    return Continue()


def encode_answers(answers: Sequence[str] | str, variable, encoder) -> BBA:
    """Encode each returned fact separately and pool them with Yager's rule.

    An empty answer carries no information and encodes as vacuous.
    """
    if isinstance(answers, str):
        answers = [answers] if answers.strip() else []
    bbas = [encoder.encode(a, variable) for a in answers]
    if not bbas:
        return vacuous(variable.frame)
    return yager_combine_k(bbas)


def _outcome(state: BeliefState, decision: StopDecision, config: EngineConfig,
             error: str | None = None) -> Outcome:
    return Outcome(
        decision=decision.hypothesis if isinstance(decision, Decide) else None,
        turns_used=state.turn,
        betp=tuple(float(p) for p in state.betp),
        hypotheses=state.net.hypothesis.states,
        transcript=state.transcript,
        trace=state.trace,
        mode=config.mode,
        tie=isinstance(decision, Decide) and decision.tie,
        abstain_reason=decision.reason if isinstance(decision, Abstain) else None,
        error=error,
    )


class DialogueAborted(SIAError):
    """A collaborator failed mid-dialogue; ``partial`` holds the outcome so far."""

    def __init__(self, message: str, partial: Outcome):
        super().__init__(message)
        self.partial = partial


def prepare_network(net: EvidentialNetwork, config: EngineConfig) -> EvidentialNetwork:
    return bayesianize_network(net) if config.mode == IG_BAYESIAN else net


def run_dialogue(net: EvidentialNetwork, config: EngineConfig, client: Client, encoder, phrasing,
                 initial_evidence: Mapping[str, BBA] | None = None,
                 on_turn=None) -> Outcome:
    """Ask, encode, ingest until confident, out of budget, or out of questions.

    ``on_turn(state, question)`` is called after every ingested answer.
    """
    net = prepare_network(net, config)
    state = init_state(net, initial_evidence, config)
    while True:
        decision = should_stop(state, config)
        if not isinstance(decision, Continue):
            return _outcome(state, decision, config)
        target = select_question(state, config)
        if target is None:
            return _outcome(state, Abstain("no_candidates"), config)
        var = net.variables[target]
        try:
            question = phrasing.phrase(var)
            answers = client.answer(target, question)
            bba = encode_answers(answers, var, encoder)
        except Exception as exc:
            partial = _outcome(state, Abstain("error"), config, error=f"{type(exc).__name__}: {exc}")
            raise DialogueAborted(f"dialogue aborted at turn {state.turn + 1}: {exc}", partial) from exc
        text = answers if isinstance(answers, str) else " | ".join(answers)
        state = ingest_answer(state, target, bba, question, text, config)
        if on_turn is not None:
            on_turn(state, question)


__all__ = [
    "EngineConfig", "BeliefState", "QuestionScore", "Outcome", "TraceRow", "Exchange",
    "Decide", "Abstain", "Continue", "DialogueAborted",
    "init_state", "score_question", "select_question", "ingest_answer", "should_stop",
    "run_dialogue", "bayesianize_network", "prepare_network", "encode_answers",
    "EVIDENTIAL", "IG_BAYESIAN", "TRACE_HEADER",
]
