"""More phases, heavier tail: the optimal threshold and the bound gap.

Each row fits an N-phase hyper-exponential to a heavy-tailed shape with the
same mean, then searches the threshold on [0, 60].  N = 1000 takes a few
seconds because every grid point is a dense 1000 x 1000 solve.
"""
import sys

from tlps import table1_row

ns = [int(a) for a in sys.argv[1:]] or [10, 100, 500, 1000]
print(f"{'N':>5} {'eta':>7} {'sum p/mu^2':>11} {'theta*':>8} {'gain %':>7} {'max delta':>10}")
for n in ns:
    r = table1_row(n)
    print(f"{n:5d} {r.eta:7.4f} {r.half_second_moment:11.2f} {r.theta_opt:8.3f} "
          f"{100 * r.max_gain:7.2f} {r.max_delta:10.4f}")
