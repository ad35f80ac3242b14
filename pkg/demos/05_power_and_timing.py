"""Power, type I error and timing at desk scale.

Runs a small slice of the simulation harness: a null cell to watch type I
control, a strong-effect cell for power, and a short timing comparison per
grid size. Full-size runs live behind `boss simulate` and `boss bench`.
"""

from boss import Scenario, run_bench, run_experiment

null_cell = run_experiment(
    Scenario(model="linear", k=10, effect="null", n=200, n_perm=300),
    replicates=60, seed=1)
strong_cell = run_experiment(
    Scenario(model="linear", k=10, effect="strong", n=200, n_perm=300),
    replicates=60, seed=1)

print("type I (null cell) :"
      f" exact={null_cell.boss_rejection_rate:.3f}"
      f" permutation={null_cell.perm_rejection_rate:.3f} (nominal 0.05)")
print("power (strong cell):"
      f" exact={strong_cell.boss_rejection_rate:.3f}"
      f" permutation={strong_cell.perm_rejection_rate:.3f}")
print(f"decision disagreements on {strong_cell.replicates} replicates: "
      f"{strong_cell.disagreements}")
print()

rows = run_bench(ks=(6, 10, 14), n=300, n_perm=300, replicates=2, seed=2)
print("timing (refit permutation baseline, both models pooled):")
for r in rows:
    print(f"  k={r['k']:>2}: exact {r['boss_mean_time'] * 1e3:7.1f} ms | "
          f"permutation {r['perm_mean_time'] * 1e3:8.1f} ms | "
          f"{r['speedup']:5.1f}x")
