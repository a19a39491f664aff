"""Simulated TLPS queue against the analytic mean.

Ten independent replications, each with its own stream split from one seed,
give a Student-t 99% interval.  The work-conservation audit then replays the
event trace of one replication.
"""
import numpy as np

from tlps import (SimConfig, TlpsModel, approx_threshold, busy_period_check, make_hyperexp,
                  nphase_sojourn_linear, run, run_replication, truncated_stats)

model = TlpsModel.from_load(make_hyperexp([10 / 11, 1 / 11], [1.0, 0.1]), 0.7)
theta = approx_threshold(model)
cfg = SimConfig(model, theta, num_jobs=100_000, warmup_jobs=10_000, seed=7, replications=10)
res = run(cfg)
exact = nphase_sojourn_linear(model, theta).t_total
print(f"theta={theta:.4f}: simulated {res.mean_sojourn:.4f} +- {res.ci99_halfwidth:.4f}, "
      f"analytic {exact:.4f}, covered: {res.contains(exact)}")

# below the threshold T(x) is linear, so a bucket's mean is T at its mean size
one_minus = 1 - truncated_stats(model, theta).rho_theta
mu, p = model.dist.rates, model.dist.weights
for b in res.bucket_means:
    line = f"  sizes ({b.lo:.2f}, {b.hi:.2f}]: {b.count:7d} jobs, {b.mean_sojourn:.4f} +- {b.ci99_halfwidth:.4f}"
    if b.hi <= theta:
        mass = p @ (np.exp(-mu * b.lo) - np.exp(-mu * b.hi))
        first = p @ ((b.lo + 1 / mu) * np.exp(-mu * b.lo) - (b.hi + 1 / mu) * np.exp(-mu * b.hi))
        line += f"  analytic {first / mass / one_minus:.4f}"
    print(line)

rep = run_replication(SimConfig(model, theta, 20_000, 0, seed=7, replications=1), 0, record_trace=True)
diag = busy_period_check(rep.trace, theta)
print(f"audit: {diag.events} events, busy {diag.busy_time:.3f} = work {diag.work_served:.3f}, "
      f"peak {diag.max_in_system} jobs")
