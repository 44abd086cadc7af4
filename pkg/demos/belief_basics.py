"""
Belief functions in a few cells
===============================

Masses on sets, three ways to pool two sources, and the two numbers the
questioning engine cares about: pignistic probabilities and Deng entropy.
"""

#%%
from sia.belief import (
    BBA, Frame, belief, categorical, conjunctive_combine, deng_entropy,
    dempster_combine, pignistic, plausibility, yager_combine,
)
from sia.errors import TotalConflict

weather = Frame("weather", ("sun", "rain", "snow"))

# "not snow, probably" with some plain ignorance left over
m = BBA.from_labels(weather, {("sun", "rain"): 0.7, "*": 0.3})
print(m)
print("Bel(sun or rain) =", belief(m, ["sun", "rain"]))
print("Pl(sun)          =", plausibility(m, "sun"))
print("BetP             =", pignistic(m).round(3))

#%%
# a second source that leans toward snow, against the first
witness = BBA.from_labels(weather, {"snow": 0.6, "*": 0.4})

print("conjunctive:", conjunctive_combine(m, witness))
print("dempster:   ", dempster_combine(m, witness))
print("yager:      ", yager_combine(m, witness))

#%%
# two flat contradictions: Dempster refuses, Yager shrugs
sun, snow = categorical(weather, "sun"), categorical(weather, "snow")
try:
    dempster_combine(sun, snow)
except TotalConflict as exc:
    print("dempster:", exc)
print("yager:   ", yager_combine(sun, snow))

#%%
# Deng entropy splits uncertainty into "which set" and "how wide the sets are"
for name, bba in [("committed", categorical(weather, "rain")),
                  ("coin flip", BBA.from_labels(weather, {"sun": 0.5, "rain": 0.5})),
                  ("vague", m),
                  ("ignorant", BBA.from_labels(weather, {"*": 1.0}))]:
    e = deng_entropy(bba)
    print(f"{name:<10} nonspecificity {e.nonspecificity:.3f}  discord {e.discord:.3f}")
