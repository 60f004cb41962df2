"""Parametric states, spectral data, SLDs and Fisher information matrices.

The quantities here follow the usual conventions: the SLD ``L_i`` solves
``(L_i rho + rho L_i)/2 = d_i rho``, the QFIM is ``Re Tr(rho L_i L_j)`` and
the CFIM of a POVM ``{E_w}`` is ``sum_w d_i p_w d_j p_w / p_w`` with
``p_w = Tr(rho E_w)``. Outcome-resolved versions of both matrices are
provided for rank-one effects ``E_w = |pi_w><pi_w|``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    InconsistentDerivative,
    IncompletePovm,
    NegativeEigenvalue,
    NonHermitianInput,
    NullOutcomeWithNonzeroDerivative,
    NumericalInvariantError,
)
from .linalg import commutator, dag, hermiticity_error, outer
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "EstimationModel",
    "GeneratorModel",
    "SpectralData",
    "SldSet",
    "RankOnePovm",
    "BornData",
    "materialize",
    "spectral_decompose",
    "solve_sld",
    "solve_slds",
    "qfim",
    "qfim_outcome",
    "qfim_outcomes",
    "born_probabilities",
    "cfim",
    "cfim_outcome",
    "is_singular",
]


def _check_state(rho, tol, what="rho"):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NumericalInvariantError(f"{what} must be a square matrix, got shape {rho.shape}")
    if hermiticity_error(rho) > tol.tol_herm:
        raise NonHermitianInput(f"{what} is not Hermitian (error {hermiticity_error(rho):.3e})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol.tol_trace:
        raise NumericalInvariantError(f"{what} has trace {tr.real:.12g}, expected 1")
    wmin = np.linalg.eigvalsh(0.5 * (rho + dag(rho))).min()
    if wmin < -tol.tol_psd:
        raise NegativeEigenvalue(f"{what} has eigenvalue {wmin:.3e} < 0")
    return 0.5 * (rho + dag(rho))


@dataclass(frozen=True)
class EstimationModel:
    """A density matrix and its parameter derivatives at one working point."""

    rho: np.ndarray
    drho: tuple
    lambda_point: tuple = ()
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def __post_init__(self):
        rho = _check_state(self.rho, self.tol)
        d = rho.shape[0]
        drho = []
        for i, dr in enumerate(self.drho):
            dr = np.asarray(dr, dtype=complex)
            if dr.shape != (d, d):
                raise NumericalInvariantError(f"drho[{i}] has shape {dr.shape}, expected {(d, d)}")
            if hermiticity_error(dr) > self.tol.tol_herm:
                raise NonHermitianInput(f"drho[{i}] is not Hermitian")
            if abs(np.trace(dr)) > self.tol.tol_trace:
                raise NumericalInvariantError(f"drho[{i}] is not traceless")
            drho.append(0.5 * (dr + dag(dr)))
        if not drho:
            raise NumericalInvariantError("at least one parameter derivative is required")
        lam = tuple(float(x) for x in self.lambda_point) or (0.0,) * len(drho)
        if len(lam) != len(drho):
            raise NumericalInvariantError("lambda_point length differs from the number of derivatives")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "drho", tuple(drho))
        object.__setattr__(self, "lambda_point", lam)

    @property
    def dim(self):
        return self.rho.shape[0]

    @property
    def num_params(self):
        return len(self.drho)


@dataclass(frozen=True)
class GeneratorModel:
    """``rho(lambda) = U rho0 U^dag`` with ``U = exp(-i sum_j lambda_j H_j)``."""

    rho0: np.ndarray
    hamiltonians: tuple
    lambda_point: tuple = ()
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def __post_init__(self):
        rho0 = _check_state(self.rho0, self.tol, "rho0")
        hs = []
        for j, h in enumerate(self.hamiltonians):
            h = np.asarray(h, dtype=complex)
            if h.shape != rho0.shape:
                raise NumericalInvariantError(f"hamiltonian {j} has shape {h.shape}")
            if hermiticity_error(h) > self.tol.tol_herm:
                raise NonHermitianInput(f"hamiltonian {j} is not Hermitian")
            hs.append(0.5 * (h + dag(h)))
        if not hs:
            raise NumericalInvariantError("at least one generator is required")
        lam = tuple(float(x) for x in self.lambda_point) or (0.0,) * len(hs)
        if len(lam) != len(hs):
            raise NumericalInvariantError("lambda_point length differs from the number of generators")
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "hamiltonians", tuple(hs))
        object.__setattr__(self, "lambda_point", lam)

    def unitary(self, lam=None):
        lam = self.lambda_point if lam is None else lam
        h = sum(l * hj for l, hj in zip(lam, self.hamiltonians))
        return expm(-1j * h)

    def state(self, lam=None):
        u = self.unitary(lam)
        return u @ self.rho0 @ dag(u)

    def commuting(self):
        hs = self.hamiltonians
        return all(
            np.linalg.norm(commutator(hs[j], hs[k])) <= self.tol.tol_herm
            for j in range(len(hs))
            for k in range(j + 1, len(hs))
        )


def _richardson_derivative(f, x0, i, h):
    def central(step):
        xp = list(x0)
        xm = list(x0)
        xp[i] += step
        xm[i] -= step
        return (f(xp) - f(xm)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def materialize(gen: GeneratorModel, fd_step=1e-5) -> EstimationModel:
    """Evaluate a generator model and its derivatives at ``gen.lambda_point``.

    Commuting generators use ``d_i rho = -i[H_i, rho]``. Otherwise the
    derivatives come from central differences of the full exponential with
    one Richardson step (fourth order in ``fd_step``).
    """
    rho = gen.state()
    if gen.commuting():
        drho = [-1j * commutator(h, rho) for h in gen.hamiltonians]
    else:
        drho = [
            _richardson_derivative(gen.state, gen.lambda_point, i, fd_step)
            for i in range(len(gen.hamiltonians))
        ]
        # exact tracelessness and hermiticity are lost at the 1e-11 level
        drho = [0.5 * (dr + dag(dr)) for dr in drho]
        drho = [dr - np.trace(dr) / rho.shape[0] * np.eye(rho.shape[0]) for dr in drho]
    return EstimationModel(rho, tuple(drho), gen.lambda_point, gen.tol)


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kernel_vectors: np.ndarray
    tol_rank: float
    degenerate: bool = False

    @property
    def rank(self):
        return len(self.eigenvalues)

    @property
    def dim(self):
        return self.eigenvectors.shape[0]

    @property
    def support_projector(self):
        return self.eigenvectors @ dag(self.eigenvectors)

    @property
    def kernel_projector(self):
        k = self.kernel_vectors
        return k @ dag(k)

    @property
    def full_basis(self):
        return np.hstack([self.eigenvectors, self.kernel_vectors])

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dag(v)


def spectral_decompose(rho, tol_rank=None, tol: Tolerances = DEFAULT) -> SpectralData:
    """Split ``rho`` into support eigenpairs (descending) and a kernel basis.

    Eigenvalues below ``tol_rank * max eigenvalue`` are assigned to the kernel
    and treated as exactly zero. Inside a cluster of nearly equal support
    eigenvalues the returned basis is arbitrary; ``degenerate`` flags this.
    """
    tol_rank = tol.tol_rank if tol_rank is None else tol_rank
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (rho + dag(rho)))
    if w.min() < -tol.tol_psd:
        raise NegativeEigenvalue(f"eigenvalue {w.min():.3e} below zero")
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    cutoff = tol_rank * max(w[0], 0.0)
    support = w > cutoff
    p = w[support]
    gaps = -np.diff(p)
    degenerate = bool(np.any(gaps < tol.tol_degen))
    return SpectralData(
        eigenvalues=p,
        eigenvectors=v[:, support],
        kernel_vectors=v[:, ~support],
        tol_rank=float(cutoff),
        degenerate=degenerate,
    )


def solve_sld(spec: SpectralData, drho_i, tol: Tolerances = DEFAULT):
    """Symmetric logarithmic derivative with a vanishing kernel-kernel block.

    In the eigenbasis of ``rho`` (support then kernel),
    ``L_ab = 2 D_ab / (p_a + p_b)`` wherever ``p_a + p_b`` is above the rank
    cutoff, and ``L_ab = 0`` on the kernel-kernel block.
    """
    drho_i = np.asarray(drho_i, dtype=complex)
    basis = spec.full_basis
    d = basis.shape[0]
    r = spec.rank
    p = np.concatenate([spec.eigenvalues, np.zeros(d - r)])
    dm = dag(basis) @ drho_i @ basis
    kk = dm[r:, r:]
    scale = max(1.0, float(np.max(np.abs(dm), initial=0.0)))
    if kk.size and np.max(np.abs(kk)) > tol.tol_sld * scale:
        raise InconsistentDerivative(
            f"kernel block of the derivative has magnitude {np.max(np.abs(kk)):.3e}"
        )
    denom = p[:, None] + p[None, :]
    mask = denom > spec.tol_rank
    lm = np.zeros_like(dm)
    lm[mask] = 2 * dm[mask] / denom[mask]
    lm[r:, r:] = 0
    L = basis @ lm @ dag(basis)
    return 0.5 * (L + dag(L))


def lyapunov_residual(rho, L, drho_i):
    return float(np.linalg.norm(0.5 * (L @ rho + rho @ L) - drho_i))


@dataclass(frozen=True)
class SldSet:
    operators: tuple
    residuals: tuple = ()

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def __getitem__(self, i):
        return self.operators[i]


def solve_slds(model: EstimationModel, spec: Optional[SpectralData] = None, tol=None) -> SldSet:
    """SLDs for every parameter of ``model``, with Lyapunov residuals checked."""
    tol = model.tol if tol is None else tol
    spec = spectral_decompose(model.rho, tol=tol) if spec is None else spec
    ops, res = [], []
    for i, dr in enumerate(model.drho):
        L = solve_sld(spec, dr, tol)
        r = lyapunov_residual(model.rho, L, dr)
        # dropped sub-cutoff eigenvalues leave a residual of order cutoff*|L|
        allowed = tol.tol_sld * max(1.0, np.linalg.norm(dr)) + 2 * spec.tol_rank * np.linalg.norm(L)
        if r > allowed:
            raise NumericalInvariantError(f"Lyapunov residual {r:.3e} for parameter {i}")
        ops.append(L)
        res.append(r)
    return SldSet(tuple(ops), tuple(res))


def qfim(spec: SpectralData, slds, return_singular=False, tol: Tolerances = DEFAULT):
    """``F^Q_ij = Re Tr(rho L_i L_j)`` using the spectral form of ``rho``."""
    v = spec.eigenvectors
    # rows: L_i |psi_a>, weighted by sqrt(p_a)
    x = np.array([L @ v * np.sqrt(spec.eigenvalues) for L in slds])
    s = len(x)
    F = np.empty((s, s))
    for i in range(s):
        for j in range(i, s):
            F[i, j] = F[j, i] = np.real(np.vdot(x[i], x[j]))
    if return_singular:
        return F, is_singular(F, tol.tol_singular)
    return F


def is_singular(F, tol_singular=DEFAULT.tol_singular):
    if F.size == 0:
        return True
    return bool(np.linalg.eigvalsh(F).min() < tol_singular)


def qfim_outcome(rho, slds, pi):
    """Outcome-resolved QFIM ``Re <pi|L_j rho L_i|pi>`` of ``E = |pi><pi|``."""
    pi = np.asarray(pi, dtype=complex)
    y = np.array([L @ pi for L in slds])
    g = np.conj(y) @ rho @ y.T  # g_ij = <L_i pi| rho |L_j pi>
    return np.real(0.5 * (g + g.T))


def qfim_outcomes(rho, slds, povm: "RankOnePovm"):
    return np.array([qfim_outcome(rho, slds, v) for v in povm.scaled_vectors()])


@dataclass(frozen=True)
class RankOnePovm:
    """Rank-one effects ``E_w = alpha_w |pi_w><pi_w|``.

    When ``weights`` is None the vectors carry their own normalization and
    every weight is 1.
    """

    vectors: tuple
    weights: Optional[tuple] = None

    def __post_init__(self):
        vs = tuple(np.asarray(v, dtype=complex).ravel() for v in self.vectors)
        if not vs:
            raise IncompletePovm("a POVM needs at least one effect")
        if len({v.shape for v in vs}) != 1:
            raise IncompletePovm("POVM vectors have inconsistent dimensions")
        object.__setattr__(self, "vectors", vs)
        if self.weights is not None:
            ws = tuple(float(w) for w in self.weights)
            if len(ws) != len(vs):
                raise IncompletePovm("weights and vectors differ in length")
            if any(w < 0 for w in ws):
                raise IncompletePovm("negative POVM weight")
            object.__setattr__(self, "weights", ws)

    def __len__(self):
        return len(self.vectors)

    @property
    def dim(self):
        return self.vectors[0].shape[0]

    def weight_array(self):
        if self.weights is None:
            return np.ones(len(self.vectors))
        return np.asarray(self.weights)

    def scaled_vectors(self):
        """Vectors ``sqrt(alpha_w) |pi_w>`` so that ``E_w = |v><v|``."""
        return [np.sqrt(a) * v for a, v in zip(self.weight_array(), self.vectors)]

    def effects(self):
        return [outer(v) for v in self.scaled_vectors()]

    def completeness_residual(self):
        total = sum(self.effects())
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def check_complete(self, tol_complete=DEFAULT.tol_complete):
        res = self.completeness_residual()
        if res > tol_complete:
            raise IncompletePovm(f"effects sum to identity only within {res:.3e}")
        return res


class BornData(NamedTuple):
    probs: np.ndarray
    dprobs: np.ndarray
    null: np.ndarray


def born_probabilities(model: EstimationModel, povm: RankOnePovm, tol=None) -> BornData:
    """Outcome probabilities, their derivatives (``s x |Omega|``) and null flags."""
    tol = model.tol if tol is None else tol
    if povm.dim != model.dim:
        raise IncompletePovm(f"POVM dimension {povm.dim} differs from model dimension {model.dim}")
    povm.check_complete(tol.tol_complete)
    vs = np.array(povm.scaled_vectors())
    probs = np.real(np.einsum("wi,ij,wj->w", vs.conj(), model.rho, vs))
    dprobs = np.real(
        np.array([np.einsum("wi,ij,wj->w", vs.conj(), dr, vs) for dr in model.drho])
    )
    if probs.min() < -tol.tol_psd:
        raise NumericalInvariantError(f"negative probability {probs.min():.3e}")
    null = probs < tol.tol_null
    if np.any(null):
        worst = float(np.max(np.abs(dprobs[:, null])))
        if worst > tol.tol_grad:
            raise NullOutcomeWithNonzeroDerivative(
                f"null outcome has probability derivative {worst:.3e}"
            )
    return BornData(probs, dprobs, null)


def cfim(model: EstimationModel, povm: RankOnePovm, tol=None):
    """Classical Fisher information of ``povm``.

    Returns ``(total, per_outcome)`` where ``per_outcome`` has shape
    ``(|Omega|, s, s)``. Null outcomes contribute zero here; their exact
    contribution is certified by the hollowization conditions instead.
    """
    born = born_probabilities(model, povm, tol)
    s, m = born.dprobs.shape
    per = np.zeros((m, s, s))
    reg = ~born.null
    g = born.dprobs[:, reg]
    per[reg] = np.einsum("iw,jw->wij", g, g) / born.probs[reg][:, None, None]
    return per.sum(axis=0), per


def cfim_outcome(rho, drho: Sequence, pi, tol_null=DEFAULT.tol_null):
    """Single-outcome CFIM ``d_i p d_j p / p`` for ``E = |pi><pi|``."""
    pi = np.asarray(pi, dtype=complex)
    p = np.real(np.vdot(pi, rho @ pi))
    if p < tol_null:
        return np.zeros((len(drho), len(drho)))
    g = np.array([np.real(np.vdot(pi, dr @ pi)) for dr in drho])
    return np.outer(g, g) / p
