"""Which random models admit a saturating rank-one measurement?

For each family we report whether the partial commutativity condition
(PCC) holds, the dimension n of the traceless part of V_perp compared
with d - 1 and with the sufficiency threshold, and the outcome of the
construction.
"""

import warnings

import numpy as np

from qmetro import GeneratorModel, construct_optimal_measurement, materialize
from qmetro.linalg import outer
from qmetro.model import EstimationModel
from qmetro.random_models import (
    random_commuting_hamiltonians,
    random_density,
    random_derivative,
    random_hermitian,
    random_ket,
)

warnings.simplefilter("ignore", RuntimeWarning)
rng = np.random.default_rng(42)


def pure_commuting(d):
    return materialize(GeneratorModel(outer(random_ket(d, rng)), tuple(random_commuting_hamiltonians(d, 2, rng))))


def pure_generic(d):
    hs = (random_hermitian(d, rng), random_hermitian(d, rng))
    return materialize(GeneratorModel(outer(random_ket(d, rng)), hs))


def mixed_two_param(d):
    rho = random_density(d, rng)
    return EstimationModel(rho, (random_derivative(rho, rng), random_derivative(rho, rng)))


def mixed_one_param(d):
    rho = random_density(d, rng)
    return EstimationModel(rho, (random_derivative(rho, rng),))


families = {
    "pure, commuting H": pure_commuting,
    "pure, generic H": pure_generic,
    "full rank, s=1": mixed_one_param,
    "full rank, s=2": mixed_two_param,
}

print(f"{'family':20s} {'d':>2s} {'PCC':>5s} {'n':>4s} {'d-1':>4s} {'thr':>4s}  result")
for name, make in families.items():
    for d in (3, 4, 5):
        res = construct_optimal_measurement(make(d), seed=d)
        outcome = res.method if res.feasible else res.reason
        print(f"{name:20s} {d:2d} {str(res.pcc_holds):>5s} {res.n:4d} {d - 1:4d} {res.threshold:4d}  {outcome}")
