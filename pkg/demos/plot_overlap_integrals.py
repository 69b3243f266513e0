"""
Overlap integrals of a symmetric channel pair
=============================================

Compares the single-channel integral I1 and the pair integral I2 for
Gaussian, flat-top and rectangular channels on ITU channels 23 and 25,
then scans the pump detuning.
"""

import math

from wdmpairlab.spectral import FlatTop, Gaussian, detuning_sweep, integral_i1, integral_i2, overlap_ratio, rectangle
from wdmpairlab.delays import pump_for_channel_pair

pump, wavelength = pump_for_channel_pair(23, 25)
print(f"pump {pump} THz ({wavelength:.3f} nm)")

# %%
# Each shape is centred on its grid frequency with a 100 GHz width.
shapes = {
    "gaussian": lambda f: Gaussian(f, 100.0),
    "flat-top (order 4)": lambda f: FlatTop(f, 100.0, order=4),
    "flat-top (order 10)": lambda f: FlatTop(f, 100.0, order=10),
    "rectangle": lambda f: rectangle(f, 100.0),
}
for name, make in shapes.items():
    a, b = make(192.3), make(192.5)
    print(f"{name:20s} I1 = {integral_i1(a):.6f} THz  I2 = {integral_i2(a, b, pump):.6f} THz  "
          f"I2/I1 = {overlap_ratio(a, b, pump):.4f}")

# %%
# For a Gaussian the ratio is exactly 1/sqrt(2).
print("1/sqrt(2) =", 1 / math.sqrt(2))

# %%
# Detuning the pump moves the idler band off the partner channel.
a, b = FlatTop(192.3, 100.0), FlatTop(192.5, 100.0)
for ghz, i2 in detuning_sweep(a, b, pump, 100.0, 9):
    print(f"{ghz:+7.1f} GHz  I2 = {i2:.6f} THz")
