"""Learn both boundary gains from trajectory data alone.

A sum of 100 random-frequency sinusoids excites each frozen layer once. The
recorded windows give three data blocks; policy iteration then runs on those
blocks with no access to A or B.
"""
import numpy as np

from spadp import learner, riccati
from spadp.systems import INITIAL, TERMINAL, freeze, mass_example

sys, spec = mass_example()
u0 = learner.make_excitation(seed=7)
print(f"excitation: {u0.count} sinusoids, |u0| <= {u0.bound[0]:.1f}")

init = freeze(sys, INITIAL)
log = learner.collect(init, u0, horizon=10.0, dt=0.1, k_behavior=1.0, x0=spec.x0)
print(f"collected {log.rows} windows; data rank {learner.regressor_rank(log)}"
      f" (needs {learner.required_rank(log.n, log.m)})")

result_a, trace = learner.learn_gain(init, u0, k_init=1.0, x0=spec.x0, log=log)
print("\npolicy iteration, initial layer:")
for it in trace:
    print(f"  k={it.k}  P={it.P[0, 0]:.8f}  K_next={it.K[0, 0]:.8f}  change={it.step_change:.2e}")

# The terminal layer is learned in the reversed clock from a negative start.
term = freeze(sys, TERMINAL)
result_b, _ = learner.learn_gain(term, u0, k_init=-3.0, x0=spec.xT)

oracle_a, oracle_b = riccati.boundary_gains(sys)
print(f"\nK_a learned {result_a.K[0, 0]:.6f}   oracle {oracle_a.K[0, 0]:.6f}")
print(f"K_b learned {result_b.K[0, 0]:.6f}   oracle {oracle_b.K[0, 0]:.6f}")

# Too little data: a single window cannot pin down two unknowns.
short = log.take(slice(0, 1))
print(f"\none window passes the rank test? {learner.rank_check(short)}")
