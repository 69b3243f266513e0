"""
Monte Carlo check of the analytic coincidence model
===================================================

Simulates one million gates of a deterministic-splitting source and
compares singles, coincidences and delayed coincidences with the analytic
per-gate probabilities, then recovers the pair probability from the
simulated counts.

The analytic model is first order in p, so the comparison uses at most
one pair per gate.  The recovery step uses Poisson pair statistics.
"""

from wdmpairlab.detection import DetectorSpec, SourceSpec, SplittingMode
from wdmpairlab.merit import invert_p
from wdmpairlab.montecarlo import McConfig, compare_to_analytic, estimate_ratio, run_mc
from wdmpairlab.spectral import integral_i1, integral_i2, rectangle

det = DetectorSpec(2e6, 20.0, 500.0, 0.0, 1.0)
a, b = rectangle(192.3, 100.0), rectangle(192.5, 100.0)
cfg = McConfig(SourceSpec(384.8, 0.05), SplittingMode.DETERMINISTIC, curve_s=a, curve_i=b,
               det_s=det, det_i=det, n_gates=1_000_000, seed=2024, emission="first_order")

stats = run_mc(cfg)
for dev in compare_to_analytic(stats, cfg):
    print(f"{dev.quantity:22s} mc {dev.mc_rate:.5f}  analytic {dev.analytic:.5f}  ({dev.z:+.2f} sigma)")

# %%
# Accidentals from the delayed gate, true coincidences by subtraction.
poisson = McConfig(cfg.src, cfg.mode, curve_s=a, curve_i=b, det_s=det, det_i=det,
                   n_gates=1_000_000, seed=2024, emission="poisson")
ratio, se = estimate_ratio(run_mc(poisson))
p = invert_p(ratio, integral_i1(a), integral_i2(a, b, 384.8), SplittingMode.DETERMINISTIC)
print(f"P_AC/P_TC = {ratio:.4f} +- {se:.4f}  ->  p = {p:.4f} (configured 0.05)")

# %%
# Multi-pair events bias the estimate upward at order p; at p = 0.05 the
# bias is about one standard error of a million gates.
