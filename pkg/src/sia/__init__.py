"""Evidential networks and uncertainty-driven questioning.

Beliefs are Dempster-Shafer mass functions over small frames; a network of
conditional beliefs links a hypothesis variable to things a client can be
asked about, and the engine picks the question expected to remove the most
Deng entropy at the hypothesis.
"""

from .belief import (
    BBA,
    Frame,
    belief,
    categorical,
    conjunctive_combine,
    deng_entropy,
    dempster_combine,
    dempster_combine_k,
    disjunctive_combine,
    disjunctive_combine_k,
    pignistic,
    plausibility,
    to_bayesian,
    vacuous,
    yager_combine,
    yager_combine_k,
)
from .engine import (
    EngineConfig,
    Outcome,
    ingest_answer,
    init_state,
    run_dialogue,
    score_question,
    select_question,
    should_stop,
)
from .errors import SIAError, TotalConflict
from .network import (
    ConditionalBBA,
    ConstructionLimits,
    Document,
    EvidentialNetwork,
    Variable,
    construct_network,
    structure_diff,
)
from .propagation import Marginals, backward_message, forward_message, propagate

__version__ = "0.1.0"

__all__ = [
    "BBA", "Frame", "belief", "categorical", "conjunctive_combine", "deng_entropy",
    "dempster_combine", "dempster_combine_k", "disjunctive_combine", "disjunctive_combine_k",
    "pignistic", "plausibility", "to_bayesian", "vacuous", "yager_combine", "yager_combine_k",
    "EngineConfig", "Outcome", "ingest_answer", "init_state", "run_dialogue", "score_question",
    "select_question", "should_stop", "SIAError", "TotalConflict", "ConditionalBBA",
    "ConstructionLimits", "Document", "EvidentialNetwork", "Variable", "construct_network",
    "structure_diff", "Marginals", "backward_message", "forward_message", "propagate",
]
