"""
Delay compensation and channel allocation
=========================================

Builds retuning plans from the measured group delays of the three filter
technologies and assigns channel pairs to users for a fixed pump.
"""

from wdmpairlab import delays
from wdmpairlab.spectral import DemuxSpec

table = delays.builtin_delay_table()
for tech in ("DTF", "AWG", "DG"):
    rows = delays.filter_table(table, tech)
    print(tech, {f"{e.pair[0]}-{e.pair[1]}": e.delay_ns for e in rows})

# %%
# A tunable pump serves pairs one after another.
for step in delays.retune_plan([(23, 25), (22, 26), (21, 27)], delays.filter_table(table, "DTF")):
    print(f"{step.pair}: pump {step.pump_thz} THz, delay {step.setting.arm} arm by {step.setting.delay_ns} ns")

# %%
# The AWG 21-27 delay was out of range, so a plan including it is refused.
try:
    delays.retune_plan([(21, 27)], delays.filter_table(table, "AWG"))
except delays.UnmeasuredDelayError as exc:
    print("refused:", exc)

# %%
# With the pump fixed at 384.8 THz, three user pairs share it simultaneously.
demux = DemuxSpec.synthetic("DG", range(21, 28), delays=delays.delays_for("DG"))
plan = delays.allocate([("alice", "bob"), ("carol", "dave"), ("erin", "frank")], demux, 384.8)
for a in plan.assignments:
    print(a.users, a.pair, a.setting)
print("simultaneous:", plan.simultaneous)
