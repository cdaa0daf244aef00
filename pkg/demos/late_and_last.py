"""Late points, the last-covered point process, and last-3 separation.

Three views of the end-game of covering:

  * at a (1-rho) fraction of the cover time, about N^{3 rho} sites remain,
    spread far apart;
  * at time g0 N^3 (ln N^3 + z) the uncovered count is approximately
    Poisson(e^{-z}) and splits evenly over sub-boxes;
  * the last 3 sites to be covered look like independent uniform draws.

Small sides undershoot all three limits in characteristic ways (documented
with exact solves in the acceptance notes) — the demo prints the limiting
prediction next to each measurement, so the drift is visible.
"""

import math

from torusrw import (
    ExperimentConfig,
    run_last_k_separation,
    run_last_points,
    run_late_points,
)

N = 14
late = run_late_points(ExperimentConfig(N=N, trials=400, master_seed=3,
                                        threads=2, rho=0.25))
print(f"late points at rho=0.25, N={N}:")
print(f"  mean size {late.sizes.mean():6.2f}   prediction N^(3/4) = {late.target_size:.2f}")
print(f"  good-trial fraction {late.good_fraction:.2f} "
      f"(size within +/-{late.size_window:.1f} and separation >= {late.separation_floor:.1f})")
print()

last = run_last_points(ExperimentConfig(N=N, trials=600, master_seed=4,
                                        threads=2, z_grid=(-1.0, 0.0, 1.0, 2.0)))
print(f"uncovered counts at time g0 N^3 (ln N^3 + z), N={N}:")
for j, z in enumerate(last.z_grid):
    print(f"  z={z:+.0f}: mean {last.mean_count(j):5.2f} (Poisson mean {math.exp(-z):.2f}),"
          f"  P[empty] {last.p_empty(j):.3f} (limit {math.exp(-math.exp(-z)):.3f})")
print()

sep = run_last_k_separation(
    ExperimentConfig(N=N, trials=600, master_seed=5, threads=2), 3)
print(f"last-3 separation, N={N}: P[min pairwise dist <= N/4]")
print(f"  walk {sep.tail(0.25):.3f}   iid uniform oracle {sep.tail(0.25, oracle=True):.3f}")
print(f"  mean scaled min distance: walk {sep.min_dist_scaled.mean():.3f}, "
      f"oracle {sep.oracle_min_dist_scaled.mean():.3f}")
