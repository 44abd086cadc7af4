"""Benchmark cases, a deterministic simulated client, and synthetic fixtures.

A case is a client with a hidden true hypothesis and a list of atomic facts,
each annotated with the variable and state it speaks to.  The oracle client
answers a question with at most two matching facts, so no language
understanding is needed to replay a dialogue.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .belief import BBA, pignistic, yager_combine_k
from .engine import (
    Abstain,
    Decide,
    DialogueAborted,
    EngineConfig,
    Outcome,
    _outcome,
    ingest_answer,
    init_state,
    prepare_network,
    run_dialogue,
    encode_answers,
)
from .errors import EmptyDataset, ProviderFailure, SIAError, UnknownVariable
from .network import (
    HYPOTHESIS,
    INTERMEDIATE,
    OBSERVABLE,
    ConditionalBBA,
    Document,
    EvidenceSnippet,
    EvidentialNetwork,
    Variable,
    add_edge,
    add_variable,
    retrieve,
    set_prior,
    validate_partial_masses,
)
from .providers import FIXTURE_VERSION, ScriptedProvider

logger = logging.getLogger(__name__)

CASE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Fact:
    text: str
    variable: str
    states: tuple[str, ...]
    mass: float = 1.0
    initial: bool = False

    def to_json(self) -> dict:
        d = {"text": self.text, "variable": self.variable}
        if len(self.states) == 1:
            d["state"] = self.states[0]
        else:
            d["states"] = list(self.states)
        if self.mass != 1.0:
            d["mass"] = self.mass
        if self.initial:
            d["initial"] = True
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "Fact":
        states = (d["state"],) if "state" in d else tuple(d["states"])
        return cls(d["text"], d["variable"], states, float(d.get("mass", 1.0)), bool(d.get("initial", False)))

    def bba(self, variable: Variable) -> BBA:
        if self.mass >= 1.0:
            return validate_partial_masses({self.states: 1.0}, variable.frame)
        return validate_partial_masses({self.states: self.mass}, variable.frame)


@dataclass(frozen=True)
class CaseInstance:
    id: str
    initial_query: str
    facts: tuple[Fact, ...]
    hypotheses: tuple[str, ...]
    true_hypothesis: str
    documents: tuple[Document, ...] = ()
    gold_documents: tuple[str, ...] = ()

    def __post_init__(self):
        if self.true_hypothesis not in self.hypotheses:
            raise ValueError(f"case {self.id}: true hypothesis {self.true_hypothesis!r} not among hypotheses")
        doc_ids = {d.id for d in self.documents}
        stray = [g for g in self.gold_documents if g not in doc_ids]
        if stray:
            raise ValueError(f"case {self.id}: gold documents {stray} not in documents")

    def to_json(self) -> dict:
        return {
            "version": CASE_SCHEMA_VERSION,
            "id": self.id,
            "initial_query": self.initial_query,
            "facts": [f.to_json() for f in self.facts],
            "hypotheses": list(self.hypotheses),
            "true_hypothesis": self.true_hypothesis,
            "documents": [{"id": d.id, "text": d.text} for d in self.documents],
            "gold_documents": list(self.gold_documents),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "CaseInstance":
        if d.get("version", CASE_SCHEMA_VERSION) != CASE_SCHEMA_VERSION:
            raise ValueError(f"unsupported case schema version {d.get('version')!r}")
        return cls(
            d["id"],
            d.get("initial_query", ""),
            tuple(Fact.from_json(f) for f in d["facts"]),
            tuple(d["hypotheses"]),
            d["true_hypothesis"],
            tuple(Document(x["id"], x["text"]) for x in d.get("documents", ())),
            tuple(d.get("gold_documents", ())),
        )

    def check_against(self, net: EvidentialNetwork) -> None:
        """Every fact must name a variable and states of ``net``; H must match."""
        if tuple(net.hypothesis.states) != self.hypotheses:
            raise ValueError(f"case {self.id}: hypotheses differ from the network's")
        for f in self.facts:
            var = net.variable(f.variable)
            bad = [s for s in f.states if s not in var.states]
            if bad:
                raise UnknownVariable(f"case {self.id}: {f.variable} has no state {bad}")


def save_cases(cases: Iterable[CaseInstance], path) -> None:
    lines = [json.dumps(c.to_json(), ensure_ascii=False, sort_keys=False) for c in cases]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_cases(path) -> list[CaseInstance]:
    out = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if line.strip():
            try:
                out.append(CaseInstance.from_json(json.loads(line)))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{n}: malformed case: {exc}") from exc
    return out


# simulated client

class OracleClient:
    """Answers with the first two non-initial facts about the asked variable."""

    max_facts = 2

    def __init__(self, case: CaseInstance):
        self.case = case

    def answer(self, target: str, question: str = "") -> list[str]:
        hits = [f.text for f in self.case.facts if f.variable == target and not f.initial]
        return hits[: self.max_facts]


class SilentClient:
    """Never says anything useful."""

    def answer(self, target: str, question: str = "") -> list[str]:
        return []


class CaseEncoder:
    """AnswerEncoder reading the structured annotation carried by each fact."""

    def __init__(self, case: CaseInstance):
        self.by_text = {(f.variable, f.text): f for f in case.facts}

    def encode(self, answer: str, variable: Variable) -> BBA:
        fact = self.by_text.get((variable.id, answer))
        if fact is None:
            raise ProviderFailure(f"no annotated fact for {variable.id!r}: {answer!r}")
        return fact.bba(variable)


class TemplatePhrasing:
    def phrase(self, variable: Variable) -> str:
        return f"What is the value of {variable.description or variable.id}?"


def initial_evidence(case: CaseInstance, net: EvidentialNetwork) -> dict[str, BBA]:
    grouped: dict[str, list[BBA]] = {}
    for f in case.facts:
        if f.initial:
            grouped.setdefault(f.variable, []).append(f.bba(net.variable(f.variable)))
    return {v: yager_combine_k(bbas) for v, bbas in grouped.items()}


def run_full_disclosure(net: EvidentialNetwork, case: CaseInstance, config: EngineConfig = EngineConfig(),
                        encoder=None) -> Outcome:
    """Ask every observable in id order, then decide once (no early stop, no turn budget)."""
    net = prepare_network(net, config)
    encoder = encoder or CaseEncoder(case)
    client = OracleClient(case)
    phrasing = TemplatePhrasing()
    state = init_state(net, initial_evidence(case, net), config)
    for target in state.candidates():
        var = net.variables[target]
        question = phrasing.phrase(var)
        answers = client.answer(target, question)
        bba = encode_answers(answers, var, encoder)
        state = ingest_answer(state, target, bba, question, " | ".join(answers), config)
    betp = state.betp
    if betp.max() >= config.tau_conf - 1e-12:
        idx = int(np.argmax(betp))
        return _outcome(state, Decide(net.hypothesis.states[idx], idx), config)
    return _outcome(state, Abstain("undecided"), config)


# benchmark

@dataclass
class CaseResult:
    case_id: str
    true_hypothesis: str
    outcome: Outcome | None
    success: bool
    turns: int
    error: str | None = None

    def to_json(self) -> dict:
        o = self.outcome
        return {
            "case_id": self.case_id,
            "true_hypothesis": self.true_hypothesis,
            "decision": None if o is None else o.decision,
            "success": self.success,
            "turns": self.turns,
            "abstained": o is None or o.abstained,
            "error": self.error,
        }


@dataclass
class BenchmarkReport:
    success_rate: float
    mean_turns: float
    abstention_rate: float
    results: list[CaseResult]
    mode: str
    full_disclosure: bool = False
    trace_files: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "full_disclosure": self.full_disclosure,
            "n_cases": len(self.results),
            "success_rate": self.success_rate,
            "mean_turns": self.mean_turns,
            "abstention_rate": self.abstention_rate,
            "cases": [r.to_json() for r in self.results],
            "trace_files": self.trace_files,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def table(self) -> str:
        lines = [
            f"mode             {self.mode}{' (full disclosure)' if self.full_disclosure else ''}",
            f"cases            {len(self.results)}",
            f"success_rate     {self.success_rate:.4f}",
            f"mean_turns       {self.mean_turns:.4f}",
            f"abstention_rate  {self.abstention_rate:.4f}",
            "",
            f"{'case':<16} {'truth':<16} {'decision':<16} {'turns':>5}  ok",
        ]
        for r in self.results:
            decision = r.outcome.decision if r.outcome and r.outcome.decision else "-"
            lines.append(f"{r.case_id:<16} {r.true_hypothesis:<16} {decision:<16} {r.turns:>5}  "
                         f"{'yes' if r.success else 'no'}")
        return "\n".join(lines) + "\n"


def summarize(results: list[CaseResult], config: EngineConfig, full_disclosure: bool = False,
              trace_files: Sequence[str] = ()) -> BenchmarkReport:
    n = len(results)
    return BenchmarkReport(
        success_rate=sum(r.success for r in results) / n,
        mean_turns=sum(r.turns for r in results) / n,
        abstention_rate=sum(1 for r in results if r.outcome is None or r.outcome.abstained) / n,
        results=results,
        mode=config.mode,
        full_disclosure=full_disclosure,
        trace_files=list(trace_files),
    )


def run_case(net: EvidentialNetwork, case: CaseInstance, config: EngineConfig,
             encoder=None, phrasing=None, client=None, full_disclosure: bool = False) -> CaseResult:
    """One dialogue; failures are captured in the result instead of raised.

    Abstentions and errors count as failures and are charged the full budget.
    """
    encoder = encoder or CaseEncoder(case)
    try:
        case.check_against(net)
        if full_disclosure:
            outcome = run_full_disclosure(net, case, config, encoder)
        else:
            outcome = run_dialogue(
                net, config, client or OracleClient(case), encoder, phrasing or TemplatePhrasing(),
                initial_evidence(case, net),
            )
    except DialogueAborted as exc:
        return CaseResult(case.id, case.true_hypothesis, exc.partial, False, config.t_max, str(exc))
    except (SIAError, ValueError, KeyError) as exc:
        logger.warning("case %s failed: %s", case.id, exc)
        return CaseResult(case.id, case.true_hypothesis, None, False, config.t_max, f"{type(exc).__name__}: {exc}")
    success = outcome.decision == case.true_hypothesis
    turns = outcome.turns_used if (outcome.decision is not None or full_disclosure) else config.t_max
    return CaseResult(case.id, case.true_hypothesis, outcome, success, turns)


def run_benchmark(cases: Sequence[CaseInstance], net: EvidentialNetwork, config: EngineConfig = EngineConfig(),
                  encoder_factory=None, phrasing=None, client_factory=None,
                  full_disclosure: bool = False, out_dir=None) -> BenchmarkReport:
    """Run every case and compute success rate, mean turns and abstention rate.

    When ``out_dir`` is given, each case's per-turn trace CSV and outcome
    JSON are written there.
    """
    if not cases:
        raise EmptyDataset("no cases to run")
    results = []
    trace_files = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    for case in cases:
        result = run_case(
            net, case, config,
            encoder=encoder_factory(case) if encoder_factory else None,
            phrasing=phrasing,
            client=client_factory(case) if client_factory else None,
            full_disclosure=full_disclosure,
        )
        results.append(result)
        if out_dir is not None and result.outcome is not None:
            trace = out_dir / f"{case.id}.trace.csv"
            trace.write_text(result.outcome.trace_csv(case.true_hypothesis), encoding="utf-8")
            (out_dir / f"{case.id}.outcome.json").write_text(result.outcome.dumps(), encoding="utf-8")
            trace_files.append(trace.name)
    return summarize(results, config, full_disclosure, trace_files)


# ASIA-style synthetic benchmark

ASIA_ROOT = Variable.make(
    "diagnosis", ["tuberculosis", "lung_cancer", "bronchitis"], HYPOTHESIS,
    "diagnosis of the patient's disease",
    ["tuberculosis infection", "cancer of the lung", "bronchitis"],
)

_ASIA_VARS = [
    ("visit_asia", ["yes", "no"], OBSERVABLE, "recent visit to Asia"),
    ("smoking", ["yes", "no"], OBSERVABLE, "smoking history"),
    ("lung_lesion", ["present", "absent"], INTERMEDIATE, "lesion in the lung"),
    ("airway_inflammation", ["present", "absent"], INTERMEDIATE, "inflammation of the airways"),
    ("xray", ["abnormal", "normal"], OBSERVABLE, "chest x-ray result"),
    ("haemoptysis", ["yes", "no"], OBSERVABLE, "coughing up blood"),
    ("dyspnoea", ["yes", "no"], OBSERVABLE, "shortness of breath"),
    ("cough", ["yes", "no"], OBSERVABLE, "persistent cough"),
]

# (parent, child, rows, supporting sentence)
_ASIA_EDGES = [
    ("diagnosis", "visit_asia",
     {"tuberculosis": {"yes": 0.8}, "lung_cancer": {"no": 0.6}, "bronchitis": {"no": 0.6}},
     "A recent visit to Asia makes tuberculosis the more likely diagnosis when a patient "
     "presents with chest disease."),
    ("diagnosis", "smoking",
     {"tuberculosis": {"no": 0.5}, "lung_cancer": {"yes": 0.85}, "bronchitis": {"yes": 0.5}},
     "A long smoking history steers the diagnosis of a patient's chest disease toward cancer."),
    ("diagnosis", "lung_lesion",
     {"tuberculosis": {"present": 0.9}, "lung_cancer": {"present": 0.9}, "bronchitis": {"absent": 0.9}},
     "Whether a patient carries a lesion depends on the diagnosis, since both tuberculosis "
     "and cancer are diseases that scar tissue."),
    ("diagnosis", "airway_inflammation",
     {"tuberculosis": {"absent": 0.6}, "lung_cancer": {"absent": 0.6}, "bronchitis": {"present": 0.9}},
     "Bronchitis is the diagnosis in which the patient's disease inflames the bronchial tree."),
    ("lung_lesion", "xray",
     {"present": {"abnormal": 0.9}, "absent": {"normal": 0.9}},
     "A lesion in the lung usually shows as an abnormal shadow on the chest film."),
    ("lung_lesion", "haemoptysis",
     {"present": {"yes": 0.6}, "absent": {"no": 0.9}},
     "Coughing up blood often follows when a lesion erodes a vessel in the lung."),
    ("airway_inflammation", "dyspnoea",
     {"present": {"yes": 0.8}, "absent": {"no": 0.7}},
     "Inflammation narrows the airways and leaves the patient short of breath."),
    ("airway_inflammation", "cough",
     {"present": {"yes": 0.9}, "absent": {"no": 0.6}},
     "A persistent cough is typical while inflammation irritates the airways."),
]

# word -> lexical variant used by the perturbed fixture
_SYNONYMS = {
    "lung": "pulmonary",
    "lesion": "nodule",
    "inflammation": "irritation",
    "airways": "bronchi",
    "disease": "illness",
    "diagnosis": "workup",
    "patient": "client",
    "persistent": "lingering",
    "cough": "hack",
}

_NOISE_DOCS = [
    "Visiting hours for every patient end at eight in the evening.",
    "The lung function lab moved to the third floor last year.",
    "Staff parking near the airways research wing is closed on Sundays.",
    "Insurance forms must list the diagnosis code before billing.",
    "A new chest of drawers was delivered to the ward office.",
    "The cafeteria offers a low salt menu on weekdays.",
]

_DISTRACTOR_VARS = [
    ("hair_colour", ["dark", "light"], "hair colour of the patient"),
    ("shoe_size", ["small", "large"], "shoe size"),
    ("favourite_season", ["summer", "winter"], "favourite season"),
    ("blood_type", ["a", "o"], "blood type"),
    ("parking_permit", ["yes", "no"], "holds a parking permit"),
]

# paraphrased re-proposals of children that already exist when the proposing
# parent is expanded; exact-id merging must reject every one of them
_PARAPHRASES = [
    ("diagnosis", "smoking", "tobacco habit"),
    ("lung_lesion", "smoking", "tobacco use"),
    ("airway_inflammation", "xray", "chest radiograph"),
    ("cough", "haemoptysis", "bloody sputum"),
]

_FACT_TEXT = {
    ("visit_asia", "yes"): "I travelled through Asia last spring.",
    ("visit_asia", "no"): "I have not been abroad in years.",
    ("smoking", "yes"): "I have smoked a pack a day for twenty years.",
    ("smoking", "no"): "I have never smoked.",
    ("xray", "abnormal"): "My chest x-ray came back abnormal.",
    ("xray", "normal"): "My chest x-ray was clear.",
    ("haemoptysis", "yes"): "There has been blood when I cough.",
    ("haemoptysis", "no"): "I have never coughed up blood.",
    ("dyspnoea", "yes"): "I get out of breath climbing stairs.",
    ("dyspnoea", "no"): "My breathing is fine.",
    ("cough", "yes"): "I have had a cough for weeks.",
    ("cough", "no"): "I do not really cough.",
}


def asia_variables() -> dict[str, Variable]:
    out = {ASIA_ROOT.id: ASIA_ROOT}
    for vid, states, kind, desc in _ASIA_VARS:
        out[vid] = Variable.make(vid, states, kind, desc)
    return out


def asia_ground_truth() -> EvidentialNetwork:
    """Tree over the diagnosis and eight findings, risk factors and mechanisms."""
    variables = asia_variables()
    net = EvidentialNetwork.with_root(ASIA_ROOT)
    for vid, var in variables.items():
        if vid != ASIA_ROOT.id:
            net = add_variable(net, var)
    for parent, child, rows, _ in _ASIA_EDGES:
        net = add_edge(net, ConditionalBBA.from_rows(variables[parent], variables[child], rows))
    return net


@dataclass
class AsiaBenchmark:
    truth: EvidentialNetwork
    corpus: list[Document]
    fixture: dict
    cases: list[CaseInstance]

    @property
    def provider(self) -> ScriptedProvider:
        return ScriptedProvider(self.fixture)


def _perturb(text: str, rng: random.Random, rate: float) -> str:
    hits = [m for m in re.finditer(r"[A-Za-z]+", text) if m.group().lower() in _SYNONYMS]
    if not hits or rng.random() >= rate:
        return text
    m = rng.choice(hits)
    repl = _SYNONYMS[m.group().lower()]
    if m.group()[0].isupper():
        repl = repl.capitalize()
    return text[: m.start()] + repl + text[m.end():]


def _row_json(frame, rows_for_state: Mapping[str, float]) -> list[dict]:
    return [{"set": [k], "mass": v} for k, v in rows_for_state.items()]


def build_asia_fixture(seed: int, distractors: int = 3, perturb: bool = True,
                       perturb_rate: float = 0.5) -> tuple[list[Document], dict]:
    """Corpus and scripted-proposer fixture for network construction.

    The perturbed variant rewrites one word of each supporting document
    with a lexical variant (with probability ``perturb_rate``), mixes in
    irrelevant documents, proposes ``distractors`` spurious children whose
    snippets cite those irrelevant documents, and re-proposes some true
    children under a second parent with paraphrased labels.
    """
    rng = random.Random(seed)
    variables = asia_variables()
    texts = []
    for parent, child, _, sentence in _ASIA_EDGES:
        texts.append(("edge", (parent, child), _perturb(sentence, rng, perturb_rate) if perturb else sentence))
    if perturb:
        for t in _NOISE_DOCS:
            texts.append(("noise", None, t))
    # shuffled ids so retrieval tie-breaks differ between seeds
    ids = [f"doc{n:02d}" for n in rng.sample(range(100), len(texts))]
    corpus = [Document(i, t) for i, (_, _, t) in zip(ids, texts)]
    edge_doc = {key: i for i, (kind, key, _) in zip(ids, texts) if kind == "edge"}
    noise_ids = [i for i, (kind, _, _) in zip(ids, texts) if kind == "noise"]

    proposals: dict[str, list] = {v: [] for v in variables}
    elicitations: dict[str, list] = {}
    for parent, child, rows, _ in _ASIA_EDGES:
        doc = edge_doc[(parent, child)]
        snip = EvidenceSnippet(f"{parent}->{child}#0", next(d.text for d in corpus if d.id == doc),
                               doc, parent, child)
        proposals[parent].append({"variable": variables[child].to_json(), "snippets": [snip.to_json()]})
        for state in variables[parent].states:
            elicitations[f"{snip.id}|{state}"] = _row_json(variables[child].frame, rows[state])

    if perturb:
        for parent, child, label in _PARAPHRASES:
            # cite the passage the proposing parent ranks first, so the
            # re-proposal is supported and only id merging can reject it
            src = retrieve(corpus, variables[parent])[0].id
            snip = EvidenceSnippet(f"{parent}->{child}#alt", label, src, parent, child)
            proposals[parent].append({"variable": variables[child].to_json(),
                                      "snippets": [snip.to_json()], "label": label})
            for state in variables[parent].states:
                elicitations[f"{snip.id}|{state}"] = []
        parents = sorted(variables)
        for vid, states, desc in rng.sample(_DISTRACTOR_VARS, min(distractors, len(_DISTRACTOR_VARS))):
            parent = rng.choice(parents)
            doc = rng.choice(noise_ids)
            var = Variable.make(vid, states, OBSERVABLE, desc)
            snip = EvidenceSnippet(f"{parent}->{vid}#0", next(d.text for d in corpus if d.id == doc),
                                   doc, parent, vid)
            proposals[parent].append({"variable": var.to_json(), "snippets": [snip.to_json()]})
            proposals[vid] = []
            for state in variables[parent].states:
                elicitations[f"{snip.id}|{state}"] = [{"set": [states[0]], "mass": 0.5}]

    fixture = {
        "version": FIXTURE_VERSION,
        "proposals": proposals,
        "elicitations": elicitations,
        "encodings": {
            f"{var}|{text}": [{"set": [state], "mass": 1.0}] for (var, state), text in _FACT_TEXT.items()
        },
        "phrasings": {},
    }
    return corpus, fixture


def _sample_state(rng: random.Random, row: BBA) -> int:
    p = pignistic(row)
    return rng.choices(range(len(p)), weights=list(p))[0]


def sample_asia_case(net: EvidentialNetwork, rng: random.Random, case_id: str,
                     corpus: Sequence[Document] = (), n_initial: int = 1) -> CaseInstance:
    """Draw a world top-down from the pignistic of each conditional row."""
    h = net.hypothesis
    world = {h.id: rng.randrange(h.frame.size)}
    for vid in net.topological_order():
        if vid == h.id:
            continue
        (parent,) = net.parents(vid)
        row = net.edge(parent, vid).table[net.variables[parent].states[world[parent]]]
        world[vid] = _sample_state(rng, row)
    observed = net.observables()
    initial = set(rng.sample(observed, n_initial))
    facts = []
    for vid in observed:
        state = net.variables[vid].states[world[vid]]
        facts.append(Fact(_FACT_TEXT[(vid, state)], vid, (state,), 1.0, vid in initial))
    rng.shuffle(facts)
    query = " ".join(f.text for f in facts if f.initial)
    return CaseInstance(
        case_id,
        f"I would like to know what is wrong with my chest. {query}",
        tuple(facts),
        h.states,
        h.states[world[h.id]],
        tuple(corpus),
        (),
    )


def generate_asia_benchmark(seed: int, distractors: int = 3, n_cases: int = 60, perturb: bool = True,
                            config: EngineConfig = EngineConfig()) -> AsiaBenchmark:
    """Ground truth, construction fixture and decidable cases, all from one seed.

    Cases are sampled from the ground-truth model and kept only when full
    disclosure of their facts decides the true hypothesis.
    """
    corpus, fixture = build_asia_fixture(seed, distractors, perturb)
    truth = asia_ground_truth()
    rng = random.Random(f"cases-{seed}")
    cases = []
    attempts = 0
    while len(cases) < n_cases:
        attempts += 1
        if attempts > 200 * n_cases:
            raise RuntimeError("could not sample enough decidable cases")
        case = sample_asia_case(truth, rng, f"asia-{seed}-{len(cases):03d}", ())
        if run_full_disclosure(truth, case, config).decision == case.true_hypothesis:
            cases.append(case)
    return AsiaBenchmark(truth, corpus, fixture, cases)


# ambiguity-laden variant: some findings only narrow to a pair of states

def ambiguity_network(n_ambiguous: int = 3, n_clear: int = 5, clear_mass: float = 0.3) -> EvidentialNetwork:
    """Two hypotheses; ``amb*`` findings are certain under h1 and say nothing under h2.

    Collapsing ``{d1, d2}`` to (0.5, 0.5) turns an uninformative d1 into a
    2:1 likelihood ratio for h1, which a point-probability model trusts.
    """
    h = Variable.make("condition", ["h1", "h2"], HYPOTHESIS, "underlying condition")
    net = EvidentialNetwork.with_root(h)
    for i in range(n_ambiguous):
        z = Variable.make(f"amb{i}", ["d1", "d2"], OBSERVABLE, f"ambiguous finding {i}")
        net = add_variable(net, z)
        net = add_edge(net, ConditionalBBA.from_rows(h, z, {"h1": {"d1": 1.0}, "h2": {"*": 1.0}}))
    for i in range(n_clear):
        z = Variable.make(f"clear{i}", ["e1", "e2"], OBSERVABLE, f"weak but clean finding {i}")
        net = add_variable(net, z)
        net = add_edge(net, ConditionalBBA.from_rows(h, z, {"h1": {"e1": clear_mass}, "h2": {"e2": clear_mass}}))
    return net


def generate_ambiguity_benchmark(seed: int, n_cases: int = 50, **kwargs) -> tuple[EvidentialNetwork, list[CaseInstance]]:
    """Cases where the ambiguous findings always show d1, whichever hypothesis holds."""
    net = ambiguity_network(**kwargs)
    rng = random.Random(f"ambiguity-{seed}")
    cases = []
    for n in range(n_cases):
        truth = "h1" if n % 2 == 0 else "h2"
        facts = []
        for vid in net.observables():
            if vid.startswith("amb"):
                facts.append(Fact(f"{vid} shows d1", vid, ("d1",)))
            else:
                e = "e1" if truth == "h1" else "e2"
                facts.append(Fact(f"{vid} shows {e}", vid, (e,)))
        rng.shuffle(facts)
        cases.append(CaseInstance(f"amb-{seed}-{n:03d}", "", tuple(facts), ("h1", "h2"), truth))
    return net, cases


# two-hypothesis demo

def demo_network() -> EvidentialNetwork:
    """Flu versus cold, told apart by fever; fatigue is uninformative."""
    h = Variable.make("illness", ["flu", "cold"], HYPOTHESIS, "cause of the symptoms")
    fever = Variable.make("fever", ["present", "absent"], OBSERVABLE, "presence of fever")
    fatigue = Variable.make("fatigue", ["yes", "no"], OBSERVABLE, "feeling of fatigue")
    net = EvidentialNetwork.with_root(h)
    net = add_variable(net, fever)
    net = add_variable(net, fatigue)
    net = add_edge(net, ConditionalBBA.from_rows(h, fever, {"flu": {"present": 1.0}, "cold": {"absent": 1.0}}))
    net = add_edge(net, ConditionalBBA.from_rows(h, fatigue, {"flu": {"yes": 0.5}, "cold": {"yes": 0.5}}))
    return set_prior(net, "illness", BBA.from_probabilities(h.frame, [0.5, 0.5]))


def demo_case() -> CaseInstance:
    return CaseInstance(
        "demo-001",
        "I have felt unwell for two days.",
        (
            Fact("I feel worn out.", "fatigue", ("yes",)),
            Fact("My temperature was 39.2 this morning.", "fever", ("present",)),
        ),
        ("flu", "cold"),
        "flu",
    )


def demo_fixture() -> dict:
    case = demo_case()
    return {
        "version": FIXTURE_VERSION,
        "proposals": {},
        "elicitations": {},
        "encodings": {f"{f.variable}|{f.text}": [{"set": list(f.states), "mass": 1.0}] for f in case.facts},
        "phrasings": {"fever": "Have you had a fever?"},
    }
