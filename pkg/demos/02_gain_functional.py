"""The per-level gain of the accumulating procedure.

For an observer at height l over a wall, each visible wall contributes a
weight factor tau * e^delta to the next level of the broken-geodesic
expansion.  When the total lambda exceeds 1 the level sums of the wall
series grow, which is the engine of the entropy bound.  This sweeps the
gain over the default grid of observer configurations and prints where it
is tightest.
"""
from graphentropy import local_estimate as le
from graphentropy import surface as sf

pants = sf.build_pants(sf.PantsParams(2.0, 2.0, 2.0))
l_grid, alpha_grid, u_fracs = le.default_grids(pants)
table = le.lemma_sweep(pants, l_grid, alpha_grid, u_fracs, eps=1e-3)

print("rows swept: %d" % len(table.rows))
print("worst-case gain lambda0_hat = %.6f  (> 1 means the series grows)"
      % table.lambda0_hat)

tight = sorted(table.rows, key=lambda r: r.lam)[:5]
print("\nfive tightest configurations:")
print("  %8s %8s %8s %10s %10s" % ("l", "alpha", "u", "lambda", "sum_tau"))
for r in tight:
    print("  %8.4f %8.4f %8.4f %10.6f %10.6f"
          % (r.l, r.alpha, r.u, r.lam, r.sum_tau))

# a single expansion, spelled out
state = le.ExpansionState(pants, attach_class=1, u=0.0, l=l_grid[0])
lam = le.lambda_value(state, eps=1e-5)
print("\nlambda at the lowest grid height with a finer cutoff: %.6f" % lam)
