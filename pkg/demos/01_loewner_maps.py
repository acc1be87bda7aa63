"""Slit maps, the reverse flow and a sampled trace.

Run with ``python demos/01_loewner_maps.py``.
"""
# %%
import cmath

import numpy as np

from slelab.driver import DriverPath, TimeGrid, sample_brownian, scale_driver
from slelab.loewner import derivative_modulus, forward_map, inverse_map, reverse_flow, trace

# %% A zero driver grows a vertical slit, so every map has a closed form.
zero = DriverPath(TimeGrid(1.0, 256), np.zeros(257))
z = 1 + 1j
print("forward  ", forward_map(zero, 1.0, z), " closed form", cmath.sqrt(z * z + 4))
print("inverse  ", inverse_map(zero, 1.0, 1j), " closed form", 1j * 5**0.5)
print("|f'(i)|  ", derivative_modulus(zero, 1.0, 1j), " closed form", 1 / 5**0.5)

# %% Points on the slit are swallowed; the forward map says when.
try:
    forward_map(zero, 1.0, 2j)
except ArithmeticError as exc:
    print("swallowed:", exc)

# %% A Brownian driver. The inverse map is recentred at U(t), so the round trip
# returns w shifted by the final driver value.
B = sample_brownian(TimeGrid(1.0, 1024), seed=7)
U = scale_driver(B, 2.0)
w = 0.4 + 0.3j
back = forward_map(U, 1.0, inverse_map(U, 1.0, w))
print("round trip shift", back - w, " U(1) =", U.values[-1])

# %% The reverse flow keeps climbing; its height never exceeds sqrt(y^2 + 4s).
path = reverse_flow(U, 1.0, 0.2j)
bound = np.sqrt(0.04 + 4 * path.s)
print("height ratio to bound, max:", float(np.max(path.y / bound)))

# %% The trace is read off the inverse map just above the driver.
tr = trace(U)
print(f"trace at t=1: {tr.gamma[-1]:.5f} (y0 = {tr.y0:.4f})")
print("furthest point from the origin:", float(np.max(np.abs(tr.gamma))))
