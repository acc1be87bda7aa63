"""GRR certificates on a sampled field, and path norms of a trace."""
# %%
import numpy as np

from slelab.driver import TimeGrid, sample_brownian, scale_driver
from slelab.exponents import optimal_grr_exponents, trace_regularity
from slelab.grr import SampledField2D, increment_kernels, path_norms, sobolev_seminorm, verify_grr
from slelab.loewner import trace

cfg = optimal_grr_exponents(4, 4, 4, 4)
print("exponents", cfg.exponent_1, cfg.exponent_2)

# %% Certificate for G = x1 + x2 with the natural increment kernels.
x = np.linspace(0, 1, 9)
G = SampledField2D(x, x, x[:, None] + x[None, :])
rep = verify_grr(G, [lambda u, v, w: np.abs(u - v)], [lambda v, u, w: np.abs(u - w)], cfg)
print("M =", rep.m_1, rep.m_2, " empirical constant", round(rep.empirical_constant, 4))

# %% Any sampled field admits kernels built from its own increments.
G = SampledField2D(x, x, np.sin(4 * x)[:, None] * np.cos(3 * x)[None, :])
k1, k2 = increment_kernels(G)
print("sin*cos field constant", round(verify_grr(G, [k1], [k2], cfg).empirical_constant, 4))

# %% Norms of an SLE_2 trace against the variation exponent 1 + kappa/8.
kappa = 2.0
tr = trace(scale_driver(sample_brownian(TimeGrid(1.0, 1024), seed=4), kappa))
p = trace_regularity(kappa)["p_var_exponent"] + 0.1
print(f"p = {p}:", path_norms(tr.gamma, 0.25, p, tr.grid.nodes))
t = np.linspace(0, 1, 257)
print("Sobolev seminorm of t, delta=1/4, q=2:", sobolev_seminorm(t, 0.25, 2), "vs", (8 / 15) ** 0.5)
