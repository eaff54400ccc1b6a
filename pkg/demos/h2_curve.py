"""H2 dissociation: ground and three excited states along the bond.

The two-electron, S_z = 0 block of minimal-basis H2 has four states, so it
fits exactly on two qubits.  Each point starts from the lowest determinants
and uses weights 9:9:1:1.
"""

import numpy as np

from ensemble_cqe.experiments import ExperimentConfig, run_experiment

config = ExperimentConfig.from_dict({
    "experiment": "h2-curve",
    "distances": [0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0],
    "solver": {"mode": "exact"},
})
bundle = run_experiment(config)

print(f"{'R/A':>5} " + " ".join(f"{'E' + str(i):>13}" for i in range(4)) + "   max|dE|  its")
for p in bundle.points:
    e = p.trajectory.records[-1].per_state_energies
    print(f"{p.distance:5.2f} " + " ".join(f"{x:13.8f}" for x in e)
          + f"   {p.max_abs_delta:.1e}  {p.iterations:3d}")

# at long range the ground state and the lowest triplet component meet
far = bundle.points[-1].exact_eigenvalues
print("E1 - E0 at 5 A:", np.round(far[1] - far[0], 6))
