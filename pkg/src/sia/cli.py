"""Command-line entry point.

Subcommands: build, run, bench, inspect, generate-asia.  Exit status is 0 on
success, 2 for usage or configuration errors and 3 for runtime failures.
Paths starting with ``@`` name files shipped inside the package, for
example ``@demo/network.json``.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
import time
from dataclasses import fields
from importlib import resources
from pathlib import Path

from .belief import BBA, pignistic, vacuous
from .engine import MODES, DialogueAborted, EngineConfig, run_dialogue
from .errors import ProviderFailure, SIAError
from .harness import (
    ASIA_ROOT,
    CaseEncoder,
    OracleClient,
    TemplatePhrasing,
    generate_ambiguity_benchmark,
    generate_asia_benchmark,
    initial_evidence,
    load_cases,
    run_benchmark,
    save_cases,
)
from .network import (
    ConstructionLimits,
    Document,
    EvidentialNetwork,
    Variable,
    construct_network,
    structure_diff,
    validate_partial_masses,
)
from .propagation import propagate, summary_table
from .providers import HttpProvider, ScriptedProvider, parse_support

logger = logging.getLogger("sia")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
ENGINE_FIELDS = [f.name for f in fields(EngineConfig)]


class UsageError(Exception):
    pass


def resolve(path: str | None) -> Path | None:
    if path is None:
        return None
    if path.startswith("@"):
        p = Path(str(resources.files("sia") / "data" / path[1:]))
    else:
        p = Path(path)
    return p


def existing(path: str | None, what: str) -> Path:
    p = resolve(path)
    if p is None or not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def load_network(path: str) -> EvidentialNetwork:
    p = existing(path, "network file")
    try:
        return EvidentialNetwork.loads(p.read_text(encoding="utf-8"))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"{p}: malformed network: {exc}") from exc


def load_corpus(path: Path) -> list[Document]:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    else:
        rows = json.loads(text)
    return [Document(r["id"], r["text"]) for r in rows]


def engine_config(args) -> EngineConfig:
    values = {}
    if args.config:
        parser = configparser.ConfigParser()
        parser.read(existing(args.config, "config file"), encoding="utf-8")
        section = parser["engine"] if parser.has_section("engine") else {}
        for key in ENGINE_FIELDS:
            if key in section:
                values[key] = section[key]
    for key in ENGINE_FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        for key, cast in (("tau_conf", float), ("t_max", int), ("epsilon_nonsp", float), ("hedge_mass", float)):
            if key in values:
                values[key] = cast(values[key])
        return EngineConfig(**values)
    except ValueError as exc:
        raise UsageError(f"bad engine setting: {exc}") from exc


def make_provider(args):
    if getattr(args, "provider", "scripted") == "http":
        return HttpProvider.from_env()
    if not args.fixture:
        raise UsageError("--fixture is required with the scripted provider")
    return ScriptedProvider.load(existing(args.fixture, "fixture"))


# build

def cmd_build(args) -> int:
    corpus = load_corpus(existing(args.corpus, "corpus"))
    root = Variable.from_json(read_json(existing(args.root, "root variable file")))
    provider = make_provider(args)
    limits = ConstructionLimits(
        max_depth=args.max_depth, max_in_degree=args.max_in_degree, max_out_degree=args.max_out_degree,
        max_nodes=args.max_nodes, top_k=args.top_k,
    )
    try:
        net = construct_network(corpus, root, provider, provider, limits)
    except ProviderFailure:
        raise
    except (SIAError, ValueError) as exc:
        raise UsageError(f"construction failed: {exc}") from exc
    out = Path(args.out)
    write_text(out, net.dumps())
    info = net.meta["construction"]
    print(f"wrote {out}")
    print(f"nodes {len(net.variables)}  edges {len(net.edges)}  truncated {str(info['truncated']).lower()}")
    print(f"rejected proposals {len(info['rejected'])}")
    if args.truth:
        diff = structure_diff(net, load_network(args.truth))
        print(f"shd {diff.shd}  precision {diff.edge_precision:.4f}  recall {diff.edge_recall:.4f}")
    return EXIT_OK


# run

class ReplEncoder:
    """Label -> certain; "probably <label>" -> hedged; "unknown" or blank -> vacuous."""

    def __init__(self, hedge_mass: float):
        self.hedge_mass = hedge_mass

    def parse(self, text: str, variable: Variable) -> BBA | None:
        t = text.strip().lower()
        if t in ("", "unknown"):
            return vacuous(variable.frame)
        mass = 1.0
        if t.startswith("probably "):
            t, mass = t[len("probably "):].strip(), self.hedge_mass
        labels = {s.lower(): s for s in variable.states}
        if t not in labels:
            return None
        return validate_partial_masses({labels[t]: mass}, variable.frame)

    def encode(self, text: str, variable: Variable) -> BBA:
        bba = self.parse(text, variable)
        if bba is None:
            raise ProviderFailure(f"cannot read {text!r} as a state of {variable.id}")
        return bba


class ReplClient:
    def __init__(self, net: EvidentialNetwork, encoder: ReplEncoder, stdin, stdout):
        self.net, self.encoder, self.stdin, self.stdout = net, encoder, stdin, stdout

    def answer(self, target: str, question: str) -> list[str]:
        var = self.net.variables[target]
        while True:
            self.stdout.write(f"\n{question}\n  [{' / '.join(var.states)} | probably <state> | unknown] > ")
            self.stdout.flush()
            line = self.stdin.readline()
            if not line:
                return []
            line = line.strip()
            if self.encoder.parse(line, var) is not None:
                return [] if line.lower() in ("", "unknown") else [line]
            self.stdout.write(f"  not a state of {target}; try again\n")


def _betp_line(net: EvidentialNetwork, state) -> str:
    p = pignistic(state.hypothesis_belief)
    return "  ".join(f"{h}={v:.3f}" for h, v in zip(net.hypothesis.states, p))


def cmd_run(args) -> int:
    net = load_network(args.network)
    config = engine_config(args)
    if args.interactive:
        encoder = ReplEncoder(config.hedge_mass)
        client = ReplClient(net, encoder, sys.stdin, sys.stdout)
        phrasing = ScriptedProvider.load(existing(args.fixture, "fixture")) if args.fixture else TemplatePhrasing()
        evidence, truth, case_id = {}, None, "interactive"

        def on_turn(state, question):
            print(f"  turn {state.turn}: {_betp_line(state.net, state)}")
    else:
        cases = load_cases(existing(args.cases, "case file"))
        if args.case_id:
            cases = [c for c in cases if c.id == args.case_id]
            if not cases:
                raise UsageError(f"no case {args.case_id!r} in {args.cases}")
        if not cases:
            raise UsageError(f"{args.cases} holds no cases")
        case = cases[0]
        case.check_against(net)
        provider = make_provider(args) if (args.fixture or args.provider == "http") else None
        encoder = provider or CaseEncoder(case)
        phrasing = provider or TemplatePhrasing()
        client = OracleClient(case)
        evidence, truth, case_id = initial_evidence(case, net), case.true_hypothesis, case.id
        on_turn = None
    outcome = run_dialogue(net, config, client, encoder, phrasing, evidence, on_turn=on_turn)
    if outcome.decision is not None:
        print(f"decision {outcome.decision} after {outcome.turns_used} turn(s)  [{config.mode}]")
    else:
        print(f"abstain after {outcome.turns_used} turn(s) ({outcome.abstain_reason})  [{config.mode}]")
    print("betp " + "  ".join(f"{h}={v:.4f}" for h, v in zip(outcome.hypotheses, outcome.betp)))
    if args.out:
        out = Path(args.out)
        write_text(out, outcome.dumps())
        write_text(out.with_suffix(".trace.csv"), outcome.trace_csv(truth))
        print(f"wrote {out}")
    elif not args.interactive:
        print(f"case {case_id}  truth {truth}")
    return EXIT_OK


# bench

def cmd_bench(args) -> int:
    net = load_network(args.network)
    cases = load_cases(existing(args.cases, "case file"))
    config = engine_config(args)
    out_dir = Path(args.out) if args.out else Path("runs") / f"{time.strftime('%Y%m%d-%H%M%S')}-seed{args.seed}"
    report = run_benchmark(cases, net, config, full_disclosure=args.full_disclosure, out_dir=out_dir / "traces")
    write_text(out_dir / "report.json", report.dumps())
    sys.stdout.write(report.table())
    print(f"wrote {out_dir / 'report.json'}")
    return EXIT_OK


# inspect

def load_evidence(path: Path, net: EvidentialNetwork) -> dict[str, BBA]:
    raw = read_json(path)
    evidence = {}
    for vid, value in raw.items():
        var = net.variable(vid)
        if isinstance(value, str):
            value = {value: 1.0}
        evidence[vid] = validate_partial_masses(parse_support(value, var.frame), var.frame)
    return evidence


def cmd_inspect(args) -> int:
    net = load_network(args.network)
    if args.dot:
        sys.stdout.write(net.to_dot())
        return EXIT_OK
    evidence = load_evidence(existing(args.evidence, "evidence file"), net) if args.evidence else {}
    marginals = propagate(net, evidence)
    sys.stdout.write(net.adjacency_listing())
    print()
    sys.stdout.write(summary_table(marginals, net))
    if args.marginals:
        write_text(Path(args.marginals), marginals.dumps())
    return EXIT_OK


# generate-asia

def cmd_generate_asia(args) -> int:
    out = Path(args.out)
    if args.variant == "ambiguity":
        net, cases = generate_ambiguity_benchmark(args.seed, n_cases=args.cases)
        write_text(out / "network.json", net.dumps())
        save_cases(cases, out / "cases.jsonl")
        print(f"wrote ambiguity variant ({len(cases)} cases) to {out}")
        return EXIT_OK
    bench = generate_asia_benchmark(args.seed, args.distractors, args.cases, perturb=not args.clean)
    write_text(out / "corpus.json", json.dumps([{"id": d.id, "text": d.text} for d in bench.corpus], indent=2) + "\n")
    write_text(out / "root.json", json.dumps(ASIA_ROOT.to_json(), indent=2) + "\n")
    write_text(out / "fixture.json", json.dumps(bench.fixture, indent=2) + "\n")
    write_text(out / "truth.json", bench.truth.dumps())
    out.mkdir(parents=True, exist_ok=True)
    save_cases(bench.cases, out / "cases.jsonl")
    print(f"wrote {len(bench.corpus)} documents, {len(bench.cases)} cases to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sia", description="Evidential active questioning toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def engine_flags(sp):
        sp.add_argument("--config", help="key-value config file with an [engine] section")
        sp.add_argument("--tau-conf", dest="tau_conf", type=float)
        sp.add_argument("--t-max", dest="t_max", type=int)
        sp.add_argument("--epsilon-nonsp", dest="epsilon_nonsp", type=float)
        sp.add_argument("--hedge-mass", dest="hedge_mass", type=float)
        sp.add_argument("--mode", choices=MODES)
        sp.add_argument("--seed", type=int, default=0)

    def provider_flags(sp):
        sp.add_argument("--fixture", help="scripted provider fixture JSON")
        sp.add_argument("--provider", choices=("scripted", "http"), default="scripted")

    b = sub.add_parser("build", help="construct a network from a corpus")
    b.add_argument("--corpus", required=True)
    b.add_argument("--root", required=True, help="hypothesis variable JSON")
    b.add_argument("--out", required=True)
    b.add_argument("--truth", help="reference network for a structure comparison")
    defaults = ConstructionLimits()
    b.add_argument("--max-depth", type=int, default=defaults.max_depth)
    b.add_argument("--max-nodes", type=int, default=defaults.max_nodes)
    b.add_argument("--max-in-degree", type=int, default=defaults.max_in_degree)
    b.add_argument("--max-out-degree", type=int, default=defaults.max_out_degree)
    b.add_argument("--top-k", type=int, default=defaults.top_k)
    b.add_argument("--seed", type=int, default=0)
    provider_flags(b)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("run", help="run one dialogue")
    r.add_argument("--network", required=True)
    r.add_argument("--cases", help="case JSONL (batch mode)")
    r.add_argument("--case-id")
    r.add_argument("--interactive", action="store_true", help="answer questions at the terminal")
    r.add_argument("--out", help="outcome JSON path; the trace CSV goes next to it")
    engine_flags(r)
    provider_flags(r)
    r.set_defaults(func=cmd_run)

    be = sub.add_parser("bench", help="run a case set and report metrics")
    be.add_argument("--network", required=True)
    be.add_argument("--cases", required=True)
    be.add_argument("--full-disclosure", action="store_true")
    be.add_argument("--out", help="output directory (default runs/<timestamp>-seed<seed>)")
    engine_flags(be)
    be.set_defaults(func=cmd_bench)

    i = sub.add_parser("inspect", help="print structure and marginals")
    i.add_argument("--network", required=True)
    i.add_argument("--evidence", help='JSON {"variable": "state" or {"state": mass}}')
    i.add_argument("--marginals", help="also write marginals JSON here")
    i.add_argument("--dot", action="store_true", help="print Graphviz DOT instead")
    i.set_defaults(func=cmd_inspect)

    g = sub.add_parser("generate-asia", help="write the synthetic ASIA-style benchmark")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--distractors", type=int, default=3)
    g.add_argument("--cases", type=int, default=60)
    g.add_argument("--clean", action="store_true", help="no lexical perturbation or distractors")
    g.add_argument("--variant", choices=("asia", "ambiguity"), default="asia")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate_asia)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "run" and not args.interactive and not args.cases:
        print("sia run: give --cases or --interactive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sia {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DialogueAborted as exc:
        print(f"sia {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (SIAError, ValueError, KeyError) as exc:
        print(f"sia {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
