"""
One dialogue, turn by turn
==========================

A two-hypothesis network (flu or cold) with one telling symptom and one
useless one.  The engine scores both, asks about the telling one, and stops
as soon as the pignistic probability of a hypothesis clears the threshold.
"""

#%%
from sia.engine import EngineConfig, init_state, run_dialogue, score_question, select_question
from sia.harness import CaseEncoder, OracleClient, TemplatePhrasing, demo_case, demo_network
from sia.propagation import propagate, summary_table

net = demo_network()
print(net.adjacency_listing())
print(summary_table(propagate(net), net))

#%%
# expected entropy drops at the hypothesis for each candidate question
state = init_state(net)
for target in state.candidates():
    s = score_question(state, target)
    print(f"{target:<8} d_nonsp {s.delta_nonsp:+.3f}  d_disc {s.delta_disc:+.3f}")
print("ask about:", select_question(state))

#%%
case = demo_case()
outcome = run_dialogue(net, EngineConfig(), OracleClient(case), CaseEncoder(case), TemplatePhrasing())
for ex in outcome.transcript:
    print("Q:", ex.question)
    print("A:", ex.answer)
print("decision:", outcome.decision, "after", outcome.turns_used, "turn(s)")

#%%
# the per-turn trace is what a confidence-over-time plot would read
print(outcome.trace_csv(case.true_hypothesis))

#%%
# a client who never says anything useful: beliefs stay put and the engine abstains
from sia.harness import SilentClient

quiet = run_dialogue(net, EngineConfig(), SilentClient(), CaseEncoder(case), TemplatePhrasing())
print(quiet.decision, quiet.abstain_reason, quiet.turns_used)
