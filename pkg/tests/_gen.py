"""Model generators shared by the test modules."""

import numpy as np

from qmetro.linalg import outer
from qmetro.model import EstimationModel, GeneratorModel, materialize
from qmetro.quasipure import QuasiPureModel, build_quasipure
from qmetro.random_models import (
    random_commuting_hamiltonians,
    random_density,
    random_derivative,
    random_hermitian,
    random_ket,
)


def random_model(rng, d, s, rank=None):
    rho = random_density(d, rng, rank)
    return EstimationModel(rho, tuple(random_derivative(rho, rng) for _ in range(s)))


def pure_commuting_model(rng, d, s=2):
    hs = random_commuting_hamiltonians(d, s, rng)
    return materialize(GeneratorModel(outer(random_ket(d, rng)), tuple(hs)))


def pure_generic_model(rng, d, s=2):
    hs = [random_hermitian(d, rng) for _ in range(s)]
    return materialize(GeneratorModel(outer(random_ket(d, rng)), tuple(hs)))


def quasipure_commuting(rng, dp=4, r=2, s=2):
    q = rng.dirichlet(np.ones(r)) * 0.8 + 0.2 / r
    hs = random_commuting_hamiltonians(dp, s, rng)
    return QuasiPureModel(tuple(q), tuple(random_ket(dp, rng) for _ in range(r)), tuple(hs))


def saturable_model(rng, k):
    """Cycle through families known to admit saturating measurements."""
    kind = k % 3
    if kind == 0:
        return pure_commuting_model(rng, int(rng.integers(3, 6)))
    if kind == 1:
        return random_model(rng, int(rng.integers(2, 5)), 1)
    return build_quasipure(quasipure_commuting(rng, 3))


def pcc_violating_model(rng, k):
    """Full-rank two-parameter models or pure states under random generators."""
    if k % 2 == 0:
        return random_model(rng, int(rng.integers(2, 5)), 2)
    return pure_generic_model(rng, int(rng.integers(3, 5)))
