"""
Locating the inclusion and truncating the expansion
===================================================

A quasi-reversibility fit at the top wave number gives a rough position
of the inclusion: the dip of Im r(x).  Separately, projecting the exact
v(x, k) onto N basis functions shows how many terms the recovered
coefficient needs.
"""

# %%
import numpy as np

from convexify1d import MediumProfile
from convexify1d.pipeline import PipelineConfig, locate, n_study, synthetic_data

cfg = PipelineConfig()

# %%
# 5 % multiplicative noise, smoothed with a 5-point moving average.
for x_loc in (0.1, 0.2, 0.3, 0.4):
    g0 = synthetic_data(cfg, MediumProfile.step(5.0, x_loc), seed=0)
    loc = locate(g0, cfg)
    print(f"x_loc={x_loc:.1f}  x_est={loc.x_est:.2f}  min Im r={loc.r.imag.min():.4f}")

# %%
# L2 error of c recovered from the N-term expansion of the true v.
for n, eps in n_study(cfg, 5.0, 0.4, (1, 2, 3, 4, 5)).items():
    print(f"N={n}  eps={eps:.4f}")
