"""
Visibility and brightness versus pair probability
=================================================

Sweeps the in-band pair probability for deterministic splitting (channels
23 and 25) and statistical splitting (channel 24 plus a 50/50 splitter),
for a flat-top and a Gaussian diffraction-grating demultiplexer.
"""

from wdmpairlab.detection import DetectorSpec
from wdmpairlab.merit import ENTANGLEMENT_BOUND, sweep_fom
from wdmpairlab.spectral import DemuxSpec

det = DetectorSpec.gated_ingaas(efficiency=0.1)
flat = DemuxSpec.synthetic("DG", range(21, 28), shape="flattop", peak=0.6, order=10)
gauss = DemuxSpec.synthetic("DG", range(21, 28), shape="gaussian", peak=0.9)

# %%
# Deterministic splitting beats statistical splitting at every p.
for name, demux in [("flat-top", flat), ("gaussian", gauss)]:
    print(name)
    d = sweep_fom(demux, (23, 25), det, n=6)
    s = sweep_fom(demux, 24, det, n=6)
    for a, b in zip(d, s):
        print(f"  p = {a.p_inband:.3f}  V det {a.v_max:.4f}  V stat {b.v_max:.4f}  "
              f"brightness det {a.brightness_cps:8.1f} cps")

# %%
# The largest p that still allows entanglement with deterministic splitting.
fine = sweep_fom(flat, (23, 25), det, p_min=0.01, p_max=0.5, n=200)
ok = [pt.p_inband for pt in fine if pt.v_max > ENTANGLEMENT_BOUND]
print(f"flat-top: entanglement possible up to p = {max(ok):.3f}")
