"""The full pipeline on a two-state oscillator with a stiffening spring.

The system comes from polynomial tables, the same form a YAML config uses.
"""
import numpy as np

from spadp import bvp_oracle, composite, learner, riccati
from spadp.systems import INITIAL, TERMINAL, BoundarySpec, LTVSystem, freeze

sys = LTVSystem.from_polynomials(
    {
        "A": [[0.0, 1.0], [[-1.0, -1.0], -0.5]],  # spring constant 1 + tau
        "B": [[0.0], [1.0]],
        "Q": [[1.0, 0.0], [0.0, 1.0]],
        "R": [[1.0]],
    },
    name="oscillator",
)
spec = BoundarySpec([1.0, 0.0], [0.0, 0.5], epsilon=0.1)

oracle_a, oracle_b = riccati.boundary_gains(sys)

# Starting gains: any gain that keeps each excited layer bounded will do.
init, term = freeze(sys, INITIAL), freeze(sys, TERMINAL)
k0_a = np.zeros((1, 2))
k0_b = riccati.find_stabilizing_gain(*term.clock_matrices())

u0 = learner.make_excitation(seed=3)
la, _ = learner.learn_gain(init, u0, k_init=k0_a, x0=spec.x0)
lb, _ = learner.learn_gain(term, u0, k_init=k0_b, x0=spec.xT)
print("K_a learned", np.round(la.K, 6), " oracle", np.round(oracle_a.K, 6))
print("K_b learned", np.round(lb.K, 6), " oracle", np.round(oracle_b.K, 6))

optimal = bvp_oracle.solve_bvp(sys, spec).trajectory
ctrl = composite.build_controller(sys, spec, la.K, lb.K)
traj = composite.simulate_composite(sys, spec, ctrl)
dx, du, gap = composite.approx_error(traj, optimal)
print(f"\nt_c = {ctrl.t_c:.4f}; x(1) = {np.round(traj.states[-1], 4)} (target {spec.xT})")
print(f"sup state error {dx:.3e}, sup control error {du:.3e}, cost gap {gap:+.4f}")
