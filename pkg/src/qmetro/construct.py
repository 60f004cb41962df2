"""Synthesis of measurements that saturate the quantum Cramer-Rao bound.

The search works in the complement ``V_perp`` of the W/M subspace. A unit
vector ``pi`` gives an outcome-wise optimal effect exactly when
``|pi><pi|`` has no component along ``V``; with the identity-first basis
``{I, T_k}`` of ``V_perp`` such a projector reads
``(I - v.T)/d`` with ``v_k = -<pi|T_k|pi>``.

Two routes are offered. The projective route builds an orthonormal basis
greedily, each new vector hollow and orthogonal to the previous ones; the
last one is forced by completeness. The weighted route collects a pool of
hollow vectors and solves a linear feasibility problem for weights
``alpha_w in [0, 1]`` with ``sum alpha = d`` and ``sum alpha v = 0``.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import PreconditionNotMet, SpectrumMismatch
from .geometry import (
    HermitianBasis,
    SubspacePair,
    analyze_subspaces,
    dimension_bound_verdict,
    sufficiency_threshold,
)
from .hollowization import (
    SATURATING,
    SaturationCertificate,
    build_wm_family,
    check_pcc,
    check_povm,
)
from .linalg import complete_orthonormal, dag, herm_to_vec, outer
from .model import (
    EstimationModel,
    RankOnePovm,
    cfim,
    is_singular,
    qfim,
    solve_slds,
    spectral_decompose,
)
from .simplex import phase_one
from .tolerances import Tolerances

log = logging.getLogger(__name__)

PROJECTIVE = "Projective-Iterative"
WEIGHTED = "Weighted-Feasibility"

REASON_DIMENSION = "NotSaturable-DimensionBound"
REASON_PCC = "NotSaturable-PCC"
REASON_SEARCH = "SearchFailed"
REASON_CERTIFICATE = "CertificateFailed"

MAX_RESTARTS = 64
MAX_NFEV = 5000


class ConstructionBug(RuntimeError):
    """Iterative construction failed where the constraint count guarantees success."""


def _threads():
    try:
        return max(1, int(os.environ.get("QMETRO_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class ProjectorCandidate:
    v: np.ndarray
    pi: np.ndarray
    residual: float
    stage: int = 0

    def projector(self):
        return outer(self.pi)


def pi_to_v(pi, T: HermitianBasis):
    """Coordinates ``v_k = -<pi|T_k|pi>`` on the traceless part of ``T``."""
    pi = pi / np.linalg.norm(pi)
    return np.array([-np.real(np.vdot(pi, t @ pi)) for t in T.traceless_elements])


def projector_from_v(v, T: HermitianBasis, tol_degen=1e-8) -> ProjectorCandidate:
    """Accept ``v`` iff ``v.T`` has spectrum ``{1 (d-1 times), 1-d}``.

    ``T`` must be the identity-first basis normalized to ``Tr(T_k T_l) = d``.
    On acceptance the projector ``(I - v.T)/d = |pi><pi|`` is returned with
    ``pi`` the eigenvector of the non-degenerate eigenvalue.
    """
    if not T.contains_identity:
        raise PreconditionNotMet("projector_from_v needs the identity-first basis")
    d = T.dim
    els = T.traceless_elements
    v = np.asarray(v, dtype=float)
    if v.shape != (len(els),):
        raise ValueError(f"v has length {v.shape}, expected {len(els)}")
    vt = sum((vk * t for vk, t in zip(v, els)), np.zeros((d, d), dtype=complex))
    w, u = np.linalg.eigh(vt)
    target = np.concatenate([[1.0 - d], np.ones(d - 1)])
    gaps = w - target
    if np.max(np.abs(gaps)) > tol_degen * d:
        raise SpectrumMismatch("v.T is not of rank-one projector form", gaps)
    pi = u[:, 0]
    return ProjectorCandidate(v, pi, float(np.max(np.abs(gaps))), 0)


def _solve_restart(Bs, Q, z0):
    """Least-squares descent of ``<z|B_k|z>`` with a unit-norm residual."""
    m = Q.shape[1]

    def split(x):
        return x[:m] + 1j * x[m:]

    def fun(x):
        z = split(x)
        g = np.real(np.einsum("i,kij,j->k", z.conj(), Bs, z)) if len(Bs) else np.zeros(0)
        return np.concatenate([g, [np.vdot(z, z).real - 1.0]])

    def jac(x):
        z = split(x)
        bz = Bs @ z  # (K, m)
        jg = np.hstack([2 * bz.real, 2 * bz.imag]) if len(Bs) else np.zeros((0, 2 * m))
        jn = np.concatenate([2 * z.real, 2 * z.imag])[None, :]
        return np.vstack([jg, jn])

    x0 = np.concatenate([z0.real, z0.imag])
    sol = least_squares(
        fun, x0, jac=jac, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_NFEV
    )
    z = split(sol.x)
    z = z / np.linalg.norm(z)
    f = float(np.sum(np.real(np.einsum("i,kij,j->k", z.conj(), Bs, z)) ** 2)) if len(Bs) else 0.0
    return Q @ z, f


def hollowness(pi, V: HermitianBasis):
    """``f(pi) = sum_k <pi|B_k|pi>^2`` over the orthonormal basis of ``V``."""
    return V.projection_norm(outer(pi / np.linalg.norm(pi))) ** 2


def find_hollow_vector(
    V: HermitianBasis,
    orth_constraints=(),
    seed=0,
    max_restarts=MAX_RESTARTS,
    tol_sat=1e-10,
    threads=None,
):
    """Unit vector ``pi`` with ``|pi><pi|`` trace-orthogonal to ``V``.

    Minimizes ``f(pi)`` subject to ``<c|pi> = 0`` for every constraint
    vector by multi-start least squares; accepts when ``f <= tol_sat^2``.
    Restart ``k`` draws from its own child of ``SeedSequence(seed)``, and
    the accepted vector is the one with the lowest successful restart
    index, so the result does not depend on ``threads``. Returns
    ``(pi, f)`` or ``(None, best_f)`` when every restart fails.
    """
    d = V.dim
    Q = complete_orthonormal([np.asarray(c, dtype=complex) for c in orth_constraints], d)
    m = Q.shape[1]
    if m == 0:
        return None, np.inf
    Bs = np.array([dag(Q) @ b @ Q for b in V.elements]) if len(V) else np.zeros((0, m, m))
    children = np.random.SeedSequence(seed).spawn(max_restarts)
    threads = _threads() if threads is None else threads

    def attempt(k):
        rng = np.random.default_rng(children[k])
        z0 = rng.normal(size=m) + 1j * rng.normal(size=m)
        z0 /= np.linalg.norm(z0)
        if len(Bs) == 0:
            return Q @ z0, 0.0
        return _solve_restart(Bs, Q, z0)

    best = np.inf
    batch = max(1, threads)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for start in range(0, max_restarts, batch):
            ks = range(start, min(start + batch, max_restarts))
            results = list(pool.map(attempt, ks)) if pool else [attempt(k) for k in ks]
            for pi, f in results:
                best = min(best, f)
                if f <= tol_sat**2:
                    return pi / np.linalg.norm(pi), f
    finally:
        if pool is not None:
            pool.shutdown()
    return None, best


def stage_basis(pair: SubspacePair, previous):
    """Traceless ``T^(mu+1)`` orthogonal to the previous projectors.

    Normalized to ``Tr(T_k T_l) = (d - mu) delta_kl`` with ``mu`` the number
    of previous vectors.
    """
    d = pair.V_perp.dim
    mu = len(previous)
    perp = pair.V_perp.vectors
    rows = [herm_to_vec(np.eye(d)) / np.sqrt(d)] + [herm_to_vec(outer(p)) for p in previous]
    R = np.array(rows)
    # orthonormal basis of V_perp minus span{I, Pi_q}
    coords = perp @ R.T  # V_perp coordinates of the removed directions
    q, _ = np.linalg.qr(coords, mode="complete")
    k = np.linalg.matrix_rank(coords, tol=1e-10)
    rest = (q[:, k:].T @ perp) if q.shape[1] > k else np.zeros((0, d * d))
    return HermitianBasis(rest, d, float(d - mu), False)


@dataclass
class ChainResult:
    candidates: list
    failed_stage: Optional[int] = None
    best_f: float = 0.0


def iterative_projective_construction(
    pair: SubspacePair,
    d=None,
    seed=0,
    max_restarts=MAX_RESTARTS,
    chain_restarts=8,
    tol_sat=1e-10,
    threads=None,
):
    """Orthonormal saturating basis built one hollow vector at a time.

    Returns a :class:`ChainResult`; ``failed_stage`` is None on success and
    otherwise the stage at which every chain attempt got stuck (the partial
    chain with the most vectors is kept). Each candidate carries the stage
    ``v`` vector with respect to :func:`stage_basis`.
    """
    d = pair.V_perp.dim if d is None else d
    if not pair.V_perp.contains_identity:
        raise PreconditionNotMet("iterative construction needs the identity in V_perp")
    if pair.n < d - 1:
        raise PreconditionNotMet(f"n = {pair.n} < d - 1 = {d - 1}")
    best_partial = ChainResult([], 0, np.inf)
    chain_seeds = np.random.SeedSequence(seed).generate_state(chain_restarts)
    for c in range(chain_restarts):
        pis, cands = [], []
        failed = None
        for mu in range(d - 1):
            pi, f = find_hollow_vector(
                pair.V, pis, seed=int(chain_seeds[c]) + mu, max_restarts=max_restarts,
                tol_sat=tol_sat, threads=threads,
            )
            if pi is None:
                failed = mu
                best_f = f
                break
            T = stage_basis(pair, pis)
            cands.append(ProjectorCandidate(pi_to_v(pi, T), pi, np.sqrt(f), mu))
            pis.append(pi)
        if failed is None:
            last = complete_orthonormal(pis, d)[:, 0]
            f_last = hollowness(last, pair.V)
            T = stage_basis(pair, pis)
            cands.append(ProjectorCandidate(pi_to_v(last, T), last, np.sqrt(f_last), d - 1))
            _check_stage_invariants(pair, cands)
            return ChainResult(cands, None, f_last)
        if len(cands) > len(best_partial.candidates) or best_partial.failed_stage == 0:
            best_partial = ChainResult(cands, failed, best_f)
    return best_partial


def _check_stage_invariants(pair, cands):
    d = pair.V_perp.dim
    for mu in range(1, len(cands)):
        prev = [c.pi for c in cands[:mu]]
        T = stage_basis(pair, prev)
        for t in T.elements:
            for p in prev:
                val = abs(np.vdot(p, t @ p))
                if val > 1e-8 * d:
                    raise AssertionError(f"stage {mu}: <pi_q|T_k|pi_q> = {val:.3e}")
        v = cands[mu].v
        if abs(v @ v - (d - mu - 1)) > 1e-6 * d:
            raise AssertionError(f"stage {mu}: |v|^2 = {v @ v:.6g}, expected {d - mu - 1}")


def completeness_weights(candidates, d, tol_complete=1e-9, T: Optional[HermitianBasis] = None):
    """Weights ``alpha in [0,1]`` with ``sum alpha = d`` and ``sum alpha v = 0``.

    ``candidates`` carry stage-0 ``v`` vectors (all with respect to the same
    identity-first basis). Returns the weight array or None when the phase-one
    linear program is infeasible. The resulting ``sum alpha |pi><pi|`` is
    checked against the identity.
    """
    if not candidates:
        return None
    V = np.array([c.v for c in candidates]).T  # (n, m)
    m = len(candidates)
    A = np.vstack([np.ones((1, m)), V])
    b = np.concatenate([[float(d)], np.zeros(V.shape[0])])
    alpha = phase_one(A, b, upper=np.ones(m), tol=1e-10)
    if alpha is None:
        return None
    total = sum(a * c.projector() for a, c in zip(alpha, candidates))
    if np.max(np.abs(total - np.eye(d))) > tol_complete:
        # the LP solution is only as good as the candidates' v vectors
        return None
    return alpha


@dataclass
class ConstructionResult:
    povm: Optional[RankOnePovm]
    method: Optional[str]
    certificate: Optional[SaturationCertificate]
    feasible: bool
    reason: Optional[str] = None
    qfim: Optional[np.ndarray] = None
    cfim: Optional[np.ndarray] = None
    fisher_gap: Optional[float] = None
    pcc_holds: Optional[bool] = None
    dim_V: Optional[int] = None
    n: Optional[int] = None
    threshold: Optional[int] = None
    failed_stage: Optional[int] = None
    partial_vectors: list = field(default_factory=list)
    searched: bool = False
    seed: int = 0


def _pipeline(model: EstimationModel, tol: Tolerances):
    spec = spectral_decompose(model.rho, tol=tol)
    slds = solve_slds(model, spec, tol)
    fam = build_wm_family(spec, slds, tol)
    pair = analyze_subspaces(fam, model.dim, tol)
    return spec, slds, fam, pair


def fisher_gap(model, povm, F_Q, tol=None):
    F_C, _ = cfim(model, povm, tol)
    return F_C, float(np.max(np.abs(F_C - F_Q), initial=0.0))


def construct_optimal_measurement(
    model: EstimationModel,
    seed=0,
    max_restarts=MAX_RESTARTS,
    pool_size=None,
    allow_incomplete=False,
    chain_restarts=8,
    tol: Optional[Tolerances] = None,
    threads=None,
) -> ConstructionResult:
    """Search for a rank-one POVM that saturates the QCRB of ``model``.

    The dimension bound and the partial commutativity condition are checked
    first; either failing proves non-saturability and no search is run.
    Then the projective route is tried, and the weighted route as a
    fallback. ``feasible`` is only set when the resulting POVM passes both
    the hollowization certificate and the direct CFIM = QFIM comparison.
    """
    tol = model.tol if tol is None else tol
    d = model.dim
    spec, slds, fam, pair = _pipeline(model, tol)
    F_Q = qfim(spec, slds)
    pcc = check_pcc(spec, slds, fam=fam, tol_obj=tol)
    thr = sufficiency_threshold(d) if d >= 3 else None
    res = ConstructionResult(
        None, None, None, False, qfim=F_Q, pcc_holds=pcc, dim_V=pair.dim_V, n=pair.n,
        threshold=thr, seed=seed,
    )
    if not dimension_bound_verdict(pair.n, d):
        res.reason = REASON_DIMENSION
        return res
    if not pcc or not pair.V_perp.contains_identity:
        res.reason = REASON_PCC
        return res
    res.searched = True
    search_tol = tol.tol_sat / (10 * np.sqrt(d))
    chain = iterative_projective_construction(
        pair, d, seed=seed, max_restarts=max_restarts, chain_restarts=chain_restarts,
        tol_sat=search_tol, threads=threads,
    )
    povm, method = None, None
    if chain.failed_stage is None:
        povm = RankOnePovm([c.pi for c in chain.candidates])
        method = PROJECTIVE
    else:
        res.failed_stage = chain.failed_stage
        if thr is not None and pair.n >= thr:
            raise ConstructionBug(
                f"iterative construction failed at stage {chain.failed_stage} with n = {pair.n} >= {thr}"
            )
        pool = _candidate_pool(pair, chain, pool_size or 4 * d, seed, max_restarts, search_tol, threads)
        alpha = completeness_weights(pool, d, tol.tol_complete)
        if alpha is not None:
            keep = alpha > 1e-12
            povm = RankOnePovm([c.pi for c, k in zip(pool, keep) if k], tuple(alpha[keep]))
            method = WEIGHTED
        else:
            res.reason = REASON_SEARCH
            if allow_incomplete:
                res.partial_vectors = [c.pi for c in chain.candidates]
            return res
    cert = check_povm(povm, fam, pcc_holds=pcc)
    F_C, gap = fisher_gap(model, povm, F_Q, tol)
    res.povm, res.method, res.certificate = povm, method, cert
    res.cfim, res.fisher_gap = F_C, gap
    fq_scale = max(float(np.max(np.abs(F_Q), initial=0.0)), 1e-12)
    res.feasible = cert.verdict == SATURATING and gap <= 1e-8 * fq_scale
    if not res.feasible:
        res.reason = REASON_CERTIFICATE
    return res


def _candidate_pool(pair, chain, size, seed, max_restarts, tol_sat, threads):
    T = pair.V_perp
    pool = [ProjectorCandidate(pi_to_v(c.pi, T), c.pi, c.residual, 0) for c in chain.candidates]
    k = 0
    while len(pool) < size and k < size * 4:
        pi, f = find_hollow_vector(pair.V, (), seed=seed + 1000 + k, max_restarts=max_restarts,
                                   tol_sat=tol_sat, threads=threads)
        k += 1
        if pi is None:
            continue
        pool.append(ProjectorCandidate(pi_to_v(pi, T), pi, np.sqrt(f), 0))
    return pool


def icpovm_nogo_check(model: EstimationModel, povm: RankOnePovm, tol=None):
    """Saturation verdict of an informationally complete rank-one POVM.

    Requires ``d^2`` linearly independent effects, ``s >= 2`` and a
    non-singular QFIM; under these conditions the verdict must be negative.
    Returns True when the POVM saturates (which would contradict the no-go
    result).
    """
    tol = model.tol if tol is None else tol
    d = model.dim
    if model.num_params < 2:
        raise PreconditionNotMet("the no-go statement needs at least two parameters")
    effects = povm.effects()
    if len(effects) != d * d:
        raise PreconditionNotMet(f"an IC-POVM has d^2 = {d * d} effects, got {len(effects)}")
    rank = np.linalg.matrix_rank(np.array([herm_to_vec(e) for e in effects]), tol=1e-10)
    if rank != d * d:
        raise PreconditionNotMet(f"effects span only {rank} of {d * d} dimensions")
    spec = spectral_decompose(model.rho, tol=tol)
    slds = solve_slds(model, spec, tol)
    if is_singular(qfim(spec, slds), tol.tol_singular):
        raise PreconditionNotMet("QFIM is singular")
    fam = build_wm_family(spec, slds, tol)
    return check_povm(povm, fam).verdict == SATURATING
