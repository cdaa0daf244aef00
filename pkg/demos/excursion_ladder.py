"""Counting excursions of the torus walk through a concentric-box ladder.

An excursion starts when the walk returns to a small box A and ends once it
has spent a full settle window t* outside the enclosing box C.  By time
u N^3 the walk makes about u * cap(A) complete excursions — the bridge
between torus-walk occupation and the interlacement picture.  The settle
window matters at small N: too short splits one visit cluster into several
excursions, too long merges distinct visits; the packaged default
(t* = N^2 / (2 n) for n boxes) was calibrated so the count lands on the
prediction.
"""

from torusrw import ExperimentConfig, run_excursion_calibration

cfg = ExperimentConfig(N=20, trials=100, master_seed=13, threads=2)

print("settle window sweep, A=B(0,2), C=B(0,4), u=2, N=20:")
print("   t*      mean count    count/(u cap A)")
for t_star in (25.0, 100.0, 200.0, 400.0, 1600.0):
    rep = run_excursion_calibration(cfg, [(0, 0, 0)], 2, 4, 2.0, t_star=t_star)
    print(f" {t_star:6.0f}   {rep.counts.mean():9.2f}      {rep.ratio:.3f}"
          + ("   <- calibrated default" if t_star == 200.0 else ""))
