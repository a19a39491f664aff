"""Conditional sojourn time T(x) and the low-priority integral equation.

Below the threshold a job sees only high-priority sharing.  Above it the
job first waits for the high queue to drain, then spends alpha(x - theta)
in the low queue.  The grid solve is second order: halving h cuts the
consistency defect by four.
"""
import numpy as np

from tlps import TlpsModel, approx_threshold, conditional_sojourn, make_hyperexp, volterra_alpha

model = TlpsModel(make_hyperexp([10 / 11, 1 / 11], [1.0, 0.1]), arrival_rate=0.5)
theta = approx_threshold(model)

for x in (0.5, 2.0, theta, theta + 1e-6, 10.0, 30.0, 100.0):
    print(f"x={x:9.5f}  T(x)={conditional_sojourn(model, theta, x):9.4f}  (PS: {x / (1 - model.rho):9.4f})")

for h in (0.2, 0.1, 0.05, 0.025):
    sol = volterra_alpha(model, theta, 300.0, grid_step=h, check=False)
    print(f"h={h:<6} defect={sol.defect:.3e}  alpha'(0)={sol.alpha_prime[0]:.4f}  "
          f"alpha'(300)={sol.alpha_prime[-1]:.4f}")
slope = np.diff(conditional_sojourn(model, theta, [250.0, 251.0]))[0]
print(f"slope of T(x) at x=250: {slope:.4f}, slowly approaching 1/(1-rho) = {1 / (1 - model.rho):.4f}")
