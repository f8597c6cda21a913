"""Show what the DFG noise threshold does to a log with a rare skip.

96 cases run a, b, d and 4 cases skip straight from a to d. Whether that
skip is signal or noise is a modelling choice: noise=0 keeps the a->d arc
and the model accepts both shapes; noise=0.1 drops every arc carrying
less than 10% of its endpoints' traffic, and the skip disappears from the
model language.
"""

from loopminer import (
    EventLog,
    bpmn_to_petri,
    discover,
    enumerate_language,
    precision,
    replay_fitness,
)

log = EventLog({("a", "b", "d"): 96, ("a", "d"): 4})

for noise in (0.0, 0.1):
    result = discover(log, noise=noise)
    net = bpmn_to_petri(result.model)
    language = sorted(enumerate_language(net, max_length=5))
    print(f"noise={noise}")
    print(f"  kept edges : {sorted(result.dfg.edges, key=str)}")
    print(f"  language   : {[' '.join(t) for t in language]}")
    print(f"  fitness    : {replay_fitness(net, log):.4f}")
    print(f"  precision  : {precision(net, log):.4f}")
    print()

print("the filtered model trades a little fitness (the 4 skip cases no")
print("longer replay) for a tighter language; on logs with real noise the")
print("trade usually goes the same way, which is why 0.05 is a reasonable")
print("starting point for logs that were not generated by a simulator.")
