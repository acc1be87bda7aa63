"""Monte Carlo scaling checks: derivative moments and kappa differences.

Sample sizes here are small so the script finishes in a few seconds; the
acceptance suite runs the same checks at n = 10**4.
"""
# %%
from slelab.exponents import lambda_zeta
from slelab.verify import check_f_diffkappa, check_fprime_moment

params = lambda_zeta(2.0, 1.0)
print(f"kappa=2, r=1: lambda={params.lambda_}, zeta={params.zeta}")

# %% E|f'(iy)|^lambda should scale like y^zeta as y -> 0.
rep = check_fprime_moment(2.0, 1.0, 1.0, [0.4, 0.2, 0.1, 0.05], n=2000, seed=1, n_steps=1024)
fit = rep.results["fit"]
print(f"fitted slope {fit['slope']:.3f} +/- {fit['slope_ci_halfwidth']:.3f}  (target {params.zeta})")
for row in rep.rows:
    print("  y=%-5g plain=%.4f  median-of-means=%.4f" % (row[0], row[1], row[3]))

# %% Coupled kappa differences at a fixed point: p-th moments scale like
# |sqrt(kappa) - sqrt(kappa_tilde)|^p, and equal kappas give exactly zero.
rep = check_f_diffkappa(2.0, [2.0, 2.1, 2.2, 2.35, 2.5], 1.0, 0.05, 0.0, 3.0, n=2000, seed=2, n_steps=1024)
print("slope", round(rep.results["fit"]["slope"], 3), "criteria", rep.criteria)
