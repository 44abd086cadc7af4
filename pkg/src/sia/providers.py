"""Provider contracts for the language-model boundary.

Four narrow calls sit where a model would: proposing child variables,
eliciting a conditional BBA from one snippet, encoding a user answer as a
BBA, and phrasing a question.  :class:`ScriptedProvider` answers all four
from a JSON fixture and is what the tests and the benchmark use;
:class:`HttpProvider` sends filled prompt templates to a chat-completions
style endpoint.  Whatever a provider returns is validated again downstream.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from string import Template
from typing import Callable, Mapping, Protocol, Sequence

from .belief import BBA, Frame
from .errors import FixtureMiss, MalformedElicitation, MalformedFixture, ProviderFailure
from .network import (
    Document,
    EvidenceSnippet,
    Variable,
    validate_partial_masses,
)

logger = logging.getLogger(__name__)

FIXTURE_VERSION = 1
KEY_SEP = "|"


@dataclass(frozen=True)
class ChildProposal:
    variable: Variable
    snippets: tuple[EvidenceSnippet, ...] = ()
    label: str = ""


class ChildProposer(Protocol):
    def propose(self, variable: Variable, passages: Sequence[Document]) -> list[ChildProposal]: ...


class BBAElicitor(Protocol):
    def elicit(self, snippet: EvidenceSnippet, parent_state: str, child: Variable) -> Mapping: ...


class AnswerEncoder(Protocol):
    def encode(self, answer: str, variable: Variable) -> BBA: ...


class QuestionPhrasing(Protocol):
    def phrase(self, variable: Variable) -> str: ...


def fixture_key(*parts: str) -> str:
    return KEY_SEP.join(parts)


def default_question(variable: Variable) -> str:
    return f"What is the value of {variable.description or variable.id}?"


def masses_to_json(frame: Frame, masses: Mapping[int, float]) -> list[dict]:
    return [{"set": list(frame.labels(m)), "mass": v} for m, v in masses.items()]


def masses_from_json(frame: Frame, entries) -> dict[int, float]:
    out: dict[int, float] = {}
    if isinstance(entries, Mapping):
        entries = [{"set": _split_labels(k, frame), "mass": v} for k, v in entries.items()]
    for entry in entries:
        labels = entry["set"]
        mask = frame.full if labels in ("*", ["*"]) else frame.mask(labels)
        out[mask] = out.get(mask, 0.0) + float(entry["mass"])
    return out


class ScriptedProvider:
    """Deterministic provider answering every call by exact-key lookup."""

    def __init__(self, fixture: Mapping):
        if fixture.get("version") != FIXTURE_VERSION:
            raise MalformedFixture(f"unsupported fixture version {fixture.get('version')!r}")
        for section in ("proposals", "elicitations", "encodings", "phrasings"):
            if not isinstance(fixture.get(section, {}), Mapping):
                raise MalformedFixture(f"section {section!r} must be an object")
        self.fixture = fixture

    @classmethod
    def load(cls, path) -> "ScriptedProvider":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedFixture(f"{path}: {exc}") from exc
        return cls(data)

    def _lookup(self, section: str, key: str):
        try:
            return self.fixture.get(section, {})[key]
        except KeyError:
            raise FixtureMiss(f"no {section} entry for {key!r}") from None

    def propose(self, variable: Variable, passages: Sequence[Document]) -> list[ChildProposal]:
        out = []
        for entry in self._lookup("proposals", variable.id):
            try:
                child = Variable.from_json(entry["variable"])
                snippets = tuple(EvidenceSnippet.from_json(s) for s in entry.get("snippets", ()))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedFixture(f"bad proposal under {variable.id!r}: {exc}") from exc
            out.append(ChildProposal(child, snippets, entry.get("label", "")))
        return out

    def elicit(self, snippet: EvidenceSnippet, parent_state: str, child: Variable) -> dict[int, float]:
        entries = self._lookup("elicitations", fixture_key(snippet.id, parent_state))
        try:
            return masses_from_json(child.frame, entries)
        except (KeyError, ValueError) as exc:
            raise MalformedElicitation(f"fixture elicitation for {snippet.id!r}: {exc}") from exc

    def encode(self, answer: str, variable: Variable) -> BBA:
        entries = self._lookup("encodings", fixture_key(variable.id, answer))
        return validate_partial_masses(masses_from_json(variable.frame, entries), variable.frame)

    def phrase(self, variable: Variable) -> str:
        return self.fixture.get("phrasings", {}).get(variable.id) or default_question(variable)


# prompt templates; slots are filled with string.Template substitution

PROPOSE_CHILDREN = Template(
    "You help build a causal evidence graph from reference documents.\n"
    "Parent variable: $parent_id ($parent_description), states: $parent_states.\n"
    "Passages:\n$passages\n"
    "List variables that the passages present as consequences, correlates or refinements "
    "of the parent. Give each a short snake_case id, a description, 2-6 mutually exclusive "
    "states, a kind (intermediate or observable) and the exact passage sentences that "
    "justify the link, citing the passage id.\n"
    'Reply with JSON: {"children": [{"id": ..., "description": ..., "states": [...], '
    '"kind": ..., "snippets": [{"text": ..., "source": ...}]}]}'
)

ELICIT_CONDITIONAL = Template(
    "Read one evidence snippet about the link $parent_id -> $child_id.\n"
    "Snippet: $snippet\n"
    "Assume $parent_id is $parent_state.\n"
    "Possible states of $child_id: $child_states.\n"
    "Say which outcome of $child_id the snippet supports and how strongly. You may name one "
    "state, two states joined by ' or ', or 'unknown'. Strengths are numbers in [0, 1] "
    "that sum to at most 1; leave mass unassigned when the snippet is vague.\n"
    'Reply with JSON: {"support": {"<state or states>": "<strength>"}}'
)

ENCODE_ANSWER = Template(
    "A client was asked about $variable_id ($variable_description).\n"
    "Possible states: $states.\n"
    "Client answer: $answer\n"
    "Say which state or pair of states the answer supports and how strongly; hedged answers "
    "get partial strength. Use 'unknown' if the answer says nothing about it.\n"
    'Reply with JSON: {"support": {"<state or states>": "<strength>"}}'
)

PHRASE_QUESTION = Template(
    "Write one short, plain-language question that asks a client about "
    "$variable_description. The answer should let us tell apart these states: "
    "$state_descriptions.\n"
    'Reply with JSON: {"question": "..."}'
)

CLIENT_ANSWER = Template(
    "You answer an expert's question truthfully using only the client's facts below. "
    "Return at most two facts that answer the question, or an empty list if none does.\n"
    "Facts:\n$facts\n"
    "Question: $question\n"
    'Reply with JSON: {"response": [...]}'
)

_FRAME_WORDS = {"*", "unknown", "any", "theta", "all", "Θ"}


def _split_labels(key: str, frame: Frame):
    key = key.strip()
    if key.lower() in _FRAME_WORDS or key == "Θ":
        return "*"
    if key in frame.states:
        return [key]
    parts = [p.strip() for p in re.split(r",|\bor\b|\|", key) if p.strip()]
    return parts


def parse_support(support: Mapping, frame: Frame) -> dict[int, float]:
    """Parse a ``{"state or states": "strength"}`` reply into a validated partial map."""
    if not isinstance(support, Mapping):
        raise MalformedElicitation("support must be an object")
    try:
        raw = masses_from_json(frame, support)
    except (ValueError, TypeError) as exc:
        raise MalformedElicitation(str(exc)) from exc
    validate_partial_masses(raw, frame)
    return raw


ENV_URL = "SIA_ENDPOINT_URL"
ENV_KEY = "SIA_API_KEY"
ENV_MODEL = "SIA_MODEL"


def _requests_transport(url: str, api_key: str, timeout: float) -> Callable[[dict], dict]:
    import requests

    def send(payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
        resp.raise_for_status()
        return resp.json()

    return send


class HttpProvider:
    """All four contracts over a generic chat-completions JSON endpoint.

    ``transport`` takes the request payload and returns the decoded response;
    by default it POSTs with ``requests``.  Invalid replies are retried
    ``retries`` times (no backoff) before :class:`ProviderFailure`.
    """

    def __init__(self, url: str, api_key: str = "", model: str = "", *,
                 transport: Callable[[dict], dict] | None = None,
                 retries: int = 2, timeout: float = 60.0):
        self.url = url
        self.model = model
        self.retries = retries
        self.transport = transport or _requests_transport(url, api_key, timeout)

    @classmethod
    def from_env(cls, environ: Mapping[str, str] = os.environ, **kwargs) -> "HttpProvider":
        url = environ.get(ENV_URL)
        if not url:
            raise ProviderFailure(f"{ENV_URL} is not set")
        return cls(url, environ.get(ENV_KEY, ""), environ.get(ENV_MODEL, ""), **kwargs)

    def request_payload(self, prompt: str) -> dict:
        return {
            "model": self.model,
            "messages": [
                {"role": "system", "content": "Reply with a single JSON object and nothing else."},
                {"role": "user", "content": prompt},
            ],
            "response_format": {"type": "json_object"},
        }

    @staticmethod
    def reply_body(response: Mapping) -> dict:
        if "choices" in response:
            content = response["choices"][0]["message"]["content"]
        elif "message" in response:
            content = response["message"]["content"]
        else:
            content = response.get("content", response)
        if isinstance(content, str):
            content = json.loads(content)
        if not isinstance(content, dict):
            raise ValueError("reply body is not a JSON object")
        return content

    def _call(self, prompt: str, parse: Callable[[dict], object]):
        last = None
        for attempt in range(self.retries + 1):
            try:
                response = self.transport(self.request_payload(prompt))
            except Exception as exc:
                raise ProviderFailure(f"transport failure: {exc}") from exc
            try:
                return parse(self.reply_body(response))
            except (ValueError, KeyError, TypeError, IndexError, MalformedElicitation) as exc:
                last = exc
                logger.warning("invalid provider reply (attempt %d): %s", attempt + 1, exc)
        raise ProviderFailure(f"no valid reply after {self.retries + 1} attempts: {last}") from last

    def propose(self, variable: Variable, passages: Sequence[Document]) -> list[ChildProposal]:
        prompt = PROPOSE_CHILDREN.substitute(
            parent_id=variable.id,
            parent_description=variable.description,
            parent_states=", ".join(variable.states),
            passages="\n".join(f"[{d.id}] {d.text}" for d in passages),
        )

        def parse(body):
            out = []
            for c in body["children"]:
                child = Variable.make(c["id"], c["states"], c.get("kind", "observable"),
                                      c.get("description", ""))
                snippets = tuple(
                    EvidenceSnippet(f"{variable.id}->{child.id}#{i}", s["text"], s["source"],
                                    variable.id, child.id)
                    for i, s in enumerate(c.get("snippets", ()))
                )
                out.append(ChildProposal(child, snippets, c.get("description", "")))
            return out

        return self._call(prompt, parse)

    def elicit(self, snippet: EvidenceSnippet, parent_state: str, child: Variable) -> dict[int, float]:
        prompt = ELICIT_CONDITIONAL.substitute(
            parent_id=snippet.parent or "X",
            child_id=child.id,
            snippet=snippet.text,
            parent_state=parent_state,
            child_states=", ".join(child.states),
        )
        return self._call(prompt, lambda body: parse_support(body["support"], child.frame))

    def encode(self, answer: str, variable: Variable) -> BBA:
        prompt = ENCODE_ANSWER.substitute(
            variable_id=variable.id,
            variable_description=variable.description,
            states=", ".join(variable.states),
            answer=answer,
        )
        raw = self._call(prompt, lambda body: parse_support(body["support"], variable.frame))
        return validate_partial_masses(raw, variable.frame)

    def phrase(self, variable: Variable) -> str:
        descriptions = variable.state_descriptions or variable.states
        prompt = PHRASE_QUESTION.substitute(
            variable_description=variable.description or variable.id,
            state_descriptions="; ".join(descriptions),
        )

        def parse(body):
            q = body["question"]
            if not isinstance(q, str) or not q.strip():
                raise ValueError("empty question")
            return q.strip()

        return self._call(prompt, parse)


class HttpClient:
    """Model-simulated client: picks at most two of the case's facts per question."""

    def __init__(self, provider: HttpProvider, facts: Sequence[str]):
        self.provider = provider
        self.facts = list(facts)

    def answer(self, target: str, question: str) -> list[str]:
        prompt = CLIENT_ANSWER.substitute(
            facts="\n".join(f"- {f}" for f in self.facts), question=question
        )

        def parse(body):
            resp = body["response"]
            if not isinstance(resp, list) or len(resp) > 2:
                raise ValueError("response must be a list of at most two facts")
            return [str(r) for r in resp]

        return self.provider._call(prompt, parse)
