"""Eight H4 states with two-body generators: where the method stalls.

The two-body pool preserves number and spin projection, but the eight lowest
states at a given bond length need not all be reachable from the seed
determinants by two-body rotations that keep the ensemble energy falling.
The residual can vanish at an ensemble that is not the eigenbasis, so the
run reports convergence while the energies are still off.
"""

import numpy as np

from ensemble_cqe.experiments import ExperimentConfig, run_experiment

config = ExperimentConfig.from_dict({
    "experiment": "h4-curve",
    "distances": [1.0],
    "solver": {"max_iterations": 100},
})
p = run_experiment(config).points[0]
final = p.trajectory.records[-1].per_state_energies
for i, (a, b) in enumerate(zip(final, p.exact_eigenvalues)):
    print(f"state {i}: {a:12.8f}  exact {b:12.8f}  diff {a - b:.2e}")
print("iterations:", p.iterations, "converged:", p.converged)
print("ensemble energy above floor:", p.trajectory.records[-1].ensemble_energy
      - float(np.arange(8, 0, -1) @ p.exact_eigenvalues[:8]) / 36)
