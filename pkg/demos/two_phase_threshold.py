"""Two-phase job sizes: how good is the approximate optimal threshold?

Ten percent of jobs are long (mean 10), the rest short (mean 1), and the
server is loaded to rho = 10/11.
"""
import numpy as np

from tlps import (TlpsModel, approx_threshold, limit_sojourn, make_hyperexp,
                  optimize_threshold, ps_sojourn, two_phase_constants, two_phase_sojourn)
from tlps.threshold import epsilon_family, gain_curve

model = TlpsModel(make_hyperexp([10 / 11, 1 / 11], [1.0, 0.1]), arrival_rate=0.5)
print(f"mean size {model.mean:.4f}, load {model.rho:.4f}, PS sojourn {ps_sojourn(model):.4f}")

c = two_phase_constants(model)
theta_approx = approx_threshold(model)
print(f"c1 = {c.c1:.4f}, c2 = {c.c2:.4f}, approximate threshold = {theta_approx:.5f}")

# %% the sojourn curve and its exact minimum
for theta in (0.0, 1.0, 2.5, theta_approx, 7.5, 15.0, 40.0):
    print(f"  theta={theta:7.3f}  T={two_phase_sojourn(model, theta).t_total:.5f}")

best = optimize_threshold(model, 0.0, 60.0)
print(f"grid + golden optimum: theta={best.theta_opt:.4f}, T={best.t_at_opt:.5f}, "
      f"gain {100 * best.gain_at_opt:.2f}%")

# %% shrinking the long-job rate: the approximation becomes exact
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    m = epsilon_family(eps)
    th = approx_threshold(m)
    t = two_phase_sojourn(m, th).t_total
    opt = optimize_threshold(m, 0.0, 3 * th, method="two-phase")
    print(f"eps={eps:g}: T(approx)={t:.6f} T(opt)={opt.t_at_opt:.6f} limit={limit_sojourn(m):.4f}")

# %% gain over PS as the load grows
rhos = np.array([0.3, 0.5, 0.7, 0.9, 10 / 11, 0.95, 0.99, 0.999])
for (rho, g), (_, g1), (_, g2) in zip(gain_curve(rhos), gain_curve(rhos, "three-halves-approx"),
                                      gain_curve(rhos, "half-approx")):
    print(f"rho={rho:.3f}  g={g:.4f}  g(1.5x)={g1:.4f}  g(0.5x)={g2:.4f}")
