"""
Benchmarking on random models
=============================

Random models with random noise levels are sampled, discovered and scored by
the order error rate ``ER_o`` and the structure error rate ``ER_s``.
"""

# %%
from bexsam import GeneratorConfig, benchmark_grid, format_grid, run_trials

report = run_trials(GeneratorConfig(d=4, n=1000, trials=50, seed=1))
print(f"d=4 n=1000: ER_o={report.mean_er_o:.4f} ER_s={report.mean_er_s:.4f} "
      f"CT={report.mean_ct:.2f} ms")

# %%
# A small grid.  Cells with fewer samples than patterns are skipped.
cells = benchmark_grid([2, 4, 6], [100, 1000, 10_000], GeneratorConfig(d=1, n=1, trials=20, seed=1))
print(format_grid(cells, timings=False))
