"""Exact optimal transfer by transition-matrix shooting.

The state and costate obey a linear Hamiltonian system, so the unknown initial
costate follows from one linear solve on the transition matrix.
"""
import numpy as np

from spadp import bvp_oracle
from spadp.systems import BoundarySpec, LTVSystem, mass_example

# Minimal-energy transfer has a closed form: u = 1, J = 1.
free = LTVSystem.constant(0.0, 1.0, 0.0, 1.0)
sol = bvp_oracle.solve_bvp(free, BoundarySpec([0.0], [1.0], epsilon=1.0))
print(f"minimal energy: p0 = {sol.p0[0]:.12f}, J = {sol.cost:.12f}")

sys, spec = mass_example()
print("\nmass example, x(0) = 0.5 -> x(T) = 0.9")
print(" eps     T     J          p0        cond(Phi12)  costate res  stationarity res")
for eps in (0.9, 0.5, 0.1, 0.05):
    s = bvp_oracle.solve_bvp(sys, spec.with_epsilon(eps))
    costate, stat = bvp_oracle.optimality_residual(s, sys)
    print(f" {eps:<5} {1 / eps:5.1f} {s.cost:10.6f} {s.p0[0]:+9.5f} {s.condition:11.3g}"
          f"  {costate:11.2e}  {stat:.2e}")

# For long horizons the optimal state rides the two boundary layers and sits
# near zero in between.
s = bvp_oracle.solve_bvp(sys, spec.with_epsilon(0.1))
mid = np.argmin(np.abs(s.trajectory.times - 0.5))
print(f"\nx(tau = 0.5) at eps = 0.1: {s.trajectory.states[mid, 0]:.2e}")
