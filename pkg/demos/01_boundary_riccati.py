"""Model-based gains for the two boundary layers of the dissipating-mass problem.

The plant is dx/dt = -(1 + 0.2 t/T) x + u with unit weights. Near tau = 0 the
fast dynamics see A(0) = -1; near tau = 1 they see A(1) = -1.2 running in the
reversed clock. Each layer gets its own algebraic Riccati root.
"""
import math

from spadp import riccati
from spadp.systems import INITIAL, TERMINAL, freeze, mass_example

sys, spec = mass_example()

init = freeze(sys, INITIAL)
term = freeze(sys, TERMINAL)
print(f"A(0) = {init.A0[0, 0]:+.3f}   A(1) = {term.A0[0, 0]:+.3f}")

# Kleinman iteration from K = 0, printing each policy-evaluation value.
sol_a = riccati.kleinman_solve(init.A0, init.B0, init.Q0, init.R0, k0=0.0)
print("\nKleinman iterates for the initial layer:")
for k, P in enumerate(sol_a.trace):
    print(f"  k={k}  P={P[0, 0]:.10f}")
print(f"closed form sqrt(2) - 1 = {math.sqrt(2) - 1:.10f}")

# The terminal root is the negative one; it is found as minus the stabilizing
# root of the reversed-clock pair (-A, -B), starting from a negative gain.
sol_b = riccati.antistabilizing_root(term, k0=-3.0)
print(f"\nP_b(1) = {sol_b.P[0, 0]:.6f}  (closed form {-1.2 - math.sqrt(2.44):.6f})")
print(f"ARE residual at tau=1: {sol_b.residual:.2e}")
print(f"closed loop A - B K_b = {term.A0[0, 0] - sol_b.K[0, 0]:+.4f} (unstable forward, stable in beta)")
