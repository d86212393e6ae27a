"""
Noise level and the Y structure
===============================

Accuracy peaks at moderate noise.  Near 0 or 1 some patterns are almost never
seen, and near 0.5 the variables carry no asymmetry.
"""

# %%
from bexsam import noise_sweep, y_structure_experiment

levels = [0.05, 0.1, 0.2, 0.3, 0.45, 0.5, 0.7, 0.95]
for p, rep in zip(levels, noise_sweep(levels, d=4, n=1000, trials=40, seed=3)):
    print(f"p(e)={p:<5} ER_o={rep.mean_er_o:.3f} ER_s={rep.mean_er_s:.3f}")

# %%
# The Y structure x1 -> x3 <- x2, x3 -> x4: how often each true edge and
# each true non-edge is estimated correctly.
for use_or in (False, True):
    c = y_structure_experiment(n=10_000, trials=20, seed=0, use_or=use_or)
    kind = "OR" if use_or else "AND"
    print(f"{kind}: directed {c.directed_as_directed}/{c.directed_total}, "
          f"no-edge {c.no_edge_as_no_edge}/{c.no_edge_total}")
