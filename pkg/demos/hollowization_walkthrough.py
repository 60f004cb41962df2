"""From a single hollow matrix to a saturating measurement.

A traceless matrix always has a basis in which its diagonal vanishes. The
QCRB is saturated by a rank-one POVM exactly when one basis does this for
the whole W/M family at once, outcome by outcome.
"""

import numpy as np

from qmetro import build_wm_family, check_outcome, hollowize_single, solve_slds, spectral_decompose
from qmetro.model import EstimationModel, cfim_outcome, qfim_outcome
from qmetro.random_models import random_density, random_derivative, random_ket, random_traceless_hermitian

np.set_printoptions(precision=4, suppress=True)
rng = np.random.default_rng(7)

# %% one matrix
A = random_traceless_hermitian(5, rng)
U = hollowize_single(A)
print("diagonal before:", np.real(np.diag(A)))
print("diagonal after: ", np.abs(np.diag(U.conj().T @ A @ U)))

# %% single-parameter qubit: the SLD eigenbasis is hollow for the whole family
rho = random_density(2, rng)
model = EstimationModel(rho, (random_derivative(rho, rng),))
spec = spectral_decompose(model.rho)
slds = solve_slds(model, spec)
fam = build_wm_family(spec, slds)
_, basis = np.linalg.eigh(slds[0])
for k in range(2):
    pi = basis[:, k]
    ok, res = check_outcome(pi, fam)
    gap = qfim_outcome(rho, slds, pi) - cfim_outcome(rho, model.drho, pi)
    print(f"SLD eigenvector {k}: saturates={ok} residual={res:.1e} F^Q_w - F^C_w={gap[0, 0]:.1e}")

# a random vector is not hollow, and loses information
pi = random_ket(2, rng)
ok, res = check_outcome(pi, fam)
gap = qfim_outcome(rho, slds, pi) - cfim_outcome(rho, model.drho, pi)
print(f"random vector:     saturates={ok} residual={res:.1e} F^Q_w - F^C_w={gap[0, 0]:.1e}")
