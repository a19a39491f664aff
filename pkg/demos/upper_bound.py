"""The explicit upper bound next to the exact curve.

The bound needs no linear solve, so it is a cheap way to scan thresholds
for large N.  Its worst relative error stays under ten percent here.
"""
import numpy as np

from tlps import TlpsModel, heavy_tail_family, nphase_sojourn_linear, nphase_sojourn_series, upper_bound

model = TlpsModel(heavy_tail_family(100, 2.5, 1.2, 20 / 11), arrival_rate=0.5)
worst = (0.0, 0.0)
for theta in np.linspace(0, 60, 25):
    exact = nphase_sojourn_linear(model, theta)
    series = nphase_sojourn_series(model, theta)
    ub = upper_bound(model, theta).t_total
    delta = (ub - exact.t_total) / exact.t_total
    worst = max(worst, (delta, theta))
    print(f"theta={theta:5.1f}  T={exact.t_total:8.4f}  series terms={series.iterations:4d}  "
          f"bound={ub:8.4f}  delta={delta:.4f}")
print(f"largest gap on this coarse grid {worst[0]:.4f} at theta={worst[1]:.1f}")
