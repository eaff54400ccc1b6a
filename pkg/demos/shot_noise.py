"""Weighted-random sampling against measuring the purified ensemble.

Each measurement setting sends its N shots to ensemble states drawn with the
weights as probabilities.  That is the same experiment as measuring the
purified state, so both estimators share their mean and their variance.
"""

import numpy as np

from ensemble_cqe import PauliPool, RngStream, SeparateEnsemble, WeightVector, hydrogen_chain_integrals, purify
from ensemble_cqe import ensemble_residual, initial_guesses
from ensemble_cqe.experiments import sector_problem
from ensemble_cqe.sampling import estimator_statistics, sampled_purified_residual, sampled_residual

ints, _ = hydrogen_chain_integrals(2, 0.7)
_, _, comp, _, _ = sector_problem(ints, 2)
states = initial_guesses(comp.matrix, 4)
w = WeightVector.from_raw([9, 9, 1, 1])
pool = PauliPool(2)
exact = ensemble_residual(comp.matrix, SeparateEnsemble(tuple(states), w), pool).entries

for n in (16, 64, 256):
    sep = [sampled_residual(comp.matrix, SeparateEnsemble(tuple(states), w), n, 1, RngStream(1, 0, (t,)), 0.05, pool)
           for t in range(200)]
    pur = [sampled_purified_residual(comp.matrix, purify(states, w), n, RngStream(1, 1, (t,)), 0.05, pool)
           for t in range(200)]
    m_s, v_s = estimator_statistics(sep)
    _, v_p = estimator_statistics(pur)
    print(f"N={n:4d}  max|mean - exact| {np.abs(m_s - exact).max():.3f}  total var separate {v_s.sum():9.3f}"
          f"  purified {v_p.sum():9.3f}")
