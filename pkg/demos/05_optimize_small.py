"""End-to-end miniature synthesis run.

Optimizes a 6x6 pixel pair against the two goals (match at 5.4 GHz,
isolation between the elements) with a small swarm, then compares the
winner against the all-metal baseline on the same lattice. Expect a few
minutes of solver time.

The same workflow at full scale, with run artifacts on disk, is the
`pixelpatch optimize` command.
"""

import time

from pixelpatch.bench import isolation_improvement
from pixelpatch.emcore import rogers_like
from pixelpatch.evaluator import FdtdPairEvaluator
from pixelpatch.grid import make_grid
from pixelpatch.optim import AntennaEvaluator, CostSpec, SwarmConfig, hinge_cost, run

NX = NY = 6
PITCH = 3.05e-3          # 6 pixels span the resonant length at 5.4 GHz
SPACING = 5e-3

costspec = CostSpec()    # f0 5.4 GHz, match -10 dB, isolation -40 dB
pair = FdtdPairEvaluator(materials=rogers_like(), spacing=SPACING, resolution=2)
evaluator = AntennaEvaluator(NX, NY, PITCH, (NX // 2, 0), costspec, pair)

print(f"searching {evaluator.n_bits} bits ({NX}x{NY} pixels, feed fixed), "
      f"symmetric pair, spacing {SPACING*1e3:.0f} mm")
t0 = time.perf_counter()
res = run(SwarmConfig(n_particles=5, n_iters=4, seed=7), evaluator)
print(f"\n{res.evaluations} evaluations ({res.cache_hit_rate:.0%} cached) in "
      f"{(time.perf_counter()-t0)/60:.1f} min")
print("iter : cost  S11(f0)  S21(f0)")
for h in res.history:
    print(f"  {h.iteration:2d} : {h.gbest_cost:6.2f}  {h.s11_db:7.2f}  {h.s21_db:7.2f}")

baseline = make_grid(NX, NY, 1, pitch=PITCH)
base_sset = pair(baseline, baseline)
opt_a, opt_b = evaluator.grids_from_key(res.best_key)
opt_sset = pair(opt_a, opt_b)

f0 = costspec.f0
base_cost = hinge_cost(base_sset.s11_db_at(f0), base_sset.s21_db_at(f0), costspec)
print(f"\nbaseline (all metal): S11 {base_sset.s11_db_at(f0):6.2f} dB, "
      f"S21 {base_sset.s21_db_at(f0):6.2f} dB, cost {base_cost:.2f}")
print(f"optimized:            S11 {opt_sset.s11_db_at(f0):6.2f} dB, "
      f"S21 {opt_sset.s21_db_at(f0):6.2f} dB, cost {res.best_cost:.2f}")
print(f"isolation improvement at f0: "
      f"{isolation_improvement(base_sset, opt_sset, f0):+.1f} dB")

print("\nwinning metallization:")
m = opt_a.to_matrix()
for iy in range(NY - 1, -1, -1):
    print("   " + " ".join("#" if m[iy, ix] else "." for ix in range(NX)))
