"""Quasi-pure states: pure branches classically correlated with an ancilla.

The model is ``rho = sum_a q_a |phi_a><phi_a| (x) |a><a|`` with
``|phi_a(lambda)> = U_lambda |phi_a>`` and the unitary acting on the primary
factor only. The primary factor comes first in the tensor product, so the
basis index of ``|x>|a>`` is ``x * r + a``.

Everything reduces branch by branch to pure-state quantities built from the
covariant derivatives ``|D_i phi> = (I - |phi><phi|) |d_i phi>``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .construct import construct_optimal_measurement, _threads
from .errors import BranchConstructionFailed, NumericalInvariantError, PreconditionNotMet
from .hollowization import WMFamily, build_wm_family, check_outcome, check_povm
from .linalg import SIGMA_X, SIGMA_Z, commutator, dag, hermiticity_error, kron, outer
from .model import (
    EstimationModel,
    RankOnePovm,
    SpectralData,
    cfim,
    qfim,
    solve_slds,
    spectral_decompose,
)
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuasiPureModel:
    branch_weights: tuple
    branch_states: tuple
    generators: tuple
    lambda_point: tuple = ()
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def __post_init__(self):
        q = np.asarray(self.branch_weights, dtype=float)
        if q.ndim != 1 or len(q) == 0:
            raise NumericalInvariantError("need at least one branch weight")
        if np.any(q <= 0) or abs(q.sum() - 1) > self.tol.tol_trace:
            raise NumericalInvariantError("branch weights must be positive and sum to 1")
        states = tuple(np.asarray(s, dtype=complex).ravel() for s in self.branch_states)
        if len(states) != len(q):
            raise NumericalInvariantError("one state per branch weight is required")
        dp = states[0].shape[0]
        for a, s in enumerate(states):
            if s.shape != (dp,):
                raise NumericalInvariantError(f"branch {a} state has dimension {s.shape[0]}")
            if abs(np.linalg.norm(s) - 1) > self.tol.tol_trace:
                raise NumericalInvariantError(f"branch {a} state is not normalized")
        gens = []
        for j, h in enumerate(self.generators):
            h = np.asarray(h, dtype=complex)
            if h.shape != (dp, dp):
                raise NumericalInvariantError(f"generator {j} has shape {h.shape}")
            if hermiticity_error(h) > self.tol.tol_herm:
                raise NumericalInvariantError(f"generator {j} is not Hermitian")
            gens.append(0.5 * (h + dag(h)))
        if not gens:
            raise NumericalInvariantError("at least one generator is required")
        lam = tuple(float(x) for x in self.lambda_point) or (0.0,) * len(gens)
        if len(lam) != len(gens):
            raise NumericalInvariantError("lambda_point length differs from the number of generators")
        object.__setattr__(self, "branch_weights", tuple(float(x) for x in q))
        object.__setattr__(self, "branch_states", states)
        object.__setattr__(self, "generators", tuple(gens))
        object.__setattr__(self, "lambda_point", lam)

    @property
    def dim_primary(self):
        return self.branch_states[0].shape[0]

    @property
    def num_branches(self):
        return len(self.branch_states)

    @property
    def dim(self):
        return self.dim_primary * self.num_branches

    @property
    def num_params(self):
        return len(self.generators)

    def unitary(self, lam=None):
        lam = self.lambda_point if lam is None else lam
        return expm(-1j * sum(l * h for l, h in zip(lam, self.generators)))

    def commuting(self):
        hs = self.generators
        return all(
            np.linalg.norm(commutator(hs[j], hs[k])) <= self.tol.tol_herm
            for j in range(len(hs))
            for k in range(j + 1, len(hs))
        )


@dataclass(frozen=True)
class BranchDerivatives:
    """Branch states at the working point with their plain and covariant derivatives.

    ``dphi[a][i]`` is ``|d_i phi_a>`` and ``Dphi[a][i]`` its component
    orthogonal to ``|phi_a>``.
    """

    phis: tuple
    dphi: tuple
    Dphi: tuple

    @property
    def num_branches(self):
        return len(self.phis)

    @property
    def num_params(self):
        return len(self.dphi[0]) if self.dphi else 0


def covariant_derivative(phi, dphi):
    return dphi - np.vdot(phi, dphi) * phi


def branch_derivatives(qp: QuasiPureModel, fd_step=1e-5) -> BranchDerivatives:
    """Evaluate ``|phi_a(lambda)>`` and its derivatives at ``qp.lambda_point``.

    Commuting generators give ``|d_i phi> = -i H_i |phi>`` exactly; otherwise
    a Richardson-extrapolated central difference of ``U_lambda |phi_a>`` is
    used.
    """
    lam = qp.lambda_point
    U = qp.unitary()
    phis = tuple(U @ s for s in qp.branch_states)
    if qp.commuting():
        dphi = tuple(tuple(-1j * h @ p for h in qp.generators) for p in phis)
    else:

        def diff(i, step):
            lp, lm = list(lam), list(lam)
            lp[i] += step
            lm[i] -= step
            return (qp.unitary(lp) - qp.unitary(lm)) / (2 * step)

        dU = [(4 * diff(i, fd_step / 2) - diff(i, fd_step)) / 3 for i in range(qp.num_params)]
        dphi = tuple(tuple(du @ s for du in dU) for s in qp.branch_states)
    Dphi = tuple(
        tuple(covariant_derivative(p, dp) for dp in dps) for p, dps in zip(phis, dphi)
    )
    for a, (p, ds) in enumerate(zip(phis, Dphi)):
        for i, d in enumerate(ds):
            if abs(np.vdot(p, d)) > 1e-10:
                raise NumericalInvariantError(f"covariant derivative {i} of branch {a} not orthogonal")
    return BranchDerivatives(phis, dphi, Dphi)


def _ancilla(a, r):
    e = np.zeros(r, dtype=complex)
    e[a] = 1.0
    return e


def build_quasipure(qp: QuasiPureModel, branches: BranchDerivatives = None) -> EstimationModel:
    """Assemble the block-diagonal state and its derivatives."""
    br = branch_derivatives(qp) if branches is None else branches
    r = qp.num_branches
    rho = np.zeros((qp.dim, qp.dim), dtype=complex)
    drho = [np.zeros_like(rho) for _ in range(qp.num_params)]
    for a, q in enumerate(qp.branch_weights):
        anc = outer(_ancilla(a, r))
        phi = br.phis[a]
        rho += q * np.kron(outer(phi), anc)
        for i, dp in enumerate(br.dphi[a]):
            blk = outer(dp, phi)
            drho[i] += q * np.kron(blk + dag(blk), anc)
    return EstimationModel(rho, tuple(drho), qp.lambda_point, qp.tol)


def quasipure_spectrum(qp: QuasiPureModel, branches: BranchDerivatives) -> SpectralData:
    """Spectral data with support vectors ``|phi_a>|a>`` in branch order.

    Unlike :func:`spectral_decompose` this fixes the support basis even when
    branch weights coincide, which keeps branch labels aligned with the
    support index.
    """
    r = qp.num_branches
    sup = np.column_stack([np.kron(p, _ancilla(a, r)) for a, p in enumerate(branches.phis)])
    q, _ = np.linalg.qr(sup, mode="complete")
    ker = q[:, r:]
    cutoff = qp.tol.tol_rank * max(qp.branch_weights)
    return SpectralData(np.array(qp.branch_weights), sup, ker, cutoff, False)


def check_qp_pcc(branches: BranchDerivatives, tol=1e-9):
    """True iff ``|Im <D_i phi_a|D_j phi_a>| <= tol`` for all ``i < j`` and ``a``."""
    for ds in branches.Dphi:
        for i in range(len(ds)):
            for j in range(i + 1, len(ds)):
                if abs(np.imag(np.vdot(ds[i], ds[j]))) > tol:
                    return False
    return True


def branch_sld(phi, Dphi_i):
    """Pure-state SLD ``2(|D phi><phi| + |phi><D phi|)``."""
    blk = outer(np.asarray(Dphi_i, dtype=complex), np.asarray(phi, dtype=complex))
    return 2 * (blk + dag(blk))


def assembled_slds(branches: BranchDerivatives):
    r = branches.num_branches
    out = []
    for i in range(branches.num_params):
        L = sum(
            np.kron(branch_sld(p, ds[i]), outer(_ancilla(a, r)))
            for a, (p, ds) in enumerate(zip(branches.phis, branches.Dphi))
        )
        out.append(L)
    return out


def pure_state_qfim(Dphis):
    """``4 Re <D_i phi|D_j phi>``."""
    x = np.array(Dphis)
    return 4 * np.real(np.conj(x) @ x.T)


def qfim_additive(qp: QuasiPureModel, branches: BranchDerivatives):
    return sum(q * pure_state_qfim(ds) for q, ds in zip(qp.branch_weights, branches.Dphi))


def branch_family(branches: BranchDerivatives):
    """Primary-factor blocks of the W/M family.

    Returns ``(W, M)`` dicts with ``W[(i, j, a, b)]`` for ``i < j`` and
    ``M[(i, a, b)]``, such that the full-model members equal
    ``block (x) |a><b|``.
    """
    Ls = [[branch_sld(p, ds[i]) for i in range(branches.num_params)]
          for p, ds in zip(branches.phis, branches.Dphi)]
    r, s = branches.num_branches, branches.num_params
    phis = branches.phis
    W, M = {}, {}
    for a in range(r):
        for b in range(r):
            P = outer(phis[a], phis[b])
            for i in range(s):
                M[(i, a, b)] = Ls[a][i] @ P - P @ Ls[b][i]
                for j in range(i + 1, s):
                    W[(i, j, a, b)] = Ls[a][i] @ P @ Ls[b][j] - Ls[a][j] @ P @ Ls[b][i]
    return W, M


def assemble_family(branches: BranchDerivatives, tol: Tolerances = DEFAULT) -> WMFamily:
    """Full-model W/M family from branch blocks (support ordered by branch)."""
    r = branches.num_branches
    W, M = branch_family(branches)
    anc = lambda a, b: outer(_ancilla(a, r), _ancilla(b, r))
    Wf = {k: np.kron(v, anc(k[2], k[3])) for k, v in W.items()}
    Mf = {k: np.kron(v, anc(k[1], k[2])) for k, v in M.items()}
    norms = [np.linalg.norm(x, 2) for x in list(Wf.values()) + list(Mf.values())]
    return WMFamily(Wf, Mf, float(max(norms, default=0.0)), tol)


def branch_model(phi, dphis, tol=DEFAULT) -> EstimationModel:
    """Pure-state model ``|phi><phi|`` with derivatives ``|d phi><phi| + h.c.``."""
    rho = outer(phi)
    drho = tuple(outer(d, phi) + outer(phi, d) for d in dphis)
    return EstimationModel(rho, drho, (), tol)


def _branch_seed(seed, a):
    return int(np.random.SeedSequence([seed, a]).generate_state(1)[0])


def lmcc_measurement(qp: QuasiPureModel, seed=0, branches=None, threads=None, **kwargs) -> RankOnePovm:
    """Local measurement with classical communication saturating the QCRB.

    Each branch gets its own optimal basis ``{|e_nu^(a)>}`` from
    :func:`construct_optimal_measurement` on the pure-state model of that
    branch; the outcomes are ``|e_nu^(a)>|a>`` ordered by branch, then by
    outcome. Extra keyword arguments go to the branch constructions.
    """
    br = branch_derivatives(qp) if branches is None else branches
    if not check_qp_pcc(br, qp.tol.tol_pcc * max(1.0, _dscale(br))):
        raise PreconditionNotMet("quasi-pure PCC fails; no saturating LMCC exists")
    r = qp.num_branches

    def run(a):
        m = branch_model(br.phis[a], br.dphi[a], qp.tol)
        res = construct_optimal_measurement(m, seed=_branch_seed(seed, a), tol=qp.tol, threads=1, **kwargs)
        if not res.feasible:
            raise BranchConstructionFailed(a, res.reason or "construction failed")
        return res.povm

    threads = _threads() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            povms = list(pool.map(run, range(r)))
    else:
        povms = [run(a) for a in range(r)]
    vectors, weights = [], []
    for a, pv in enumerate(povms):
        for w, v in zip(pv.weight_array(), pv.vectors):
            vectors.append(np.kron(v, _ancilla(a, r)))
            weights.append(w)
    ws = None if all(w == 1.0 for w in weights) else tuple(weights)
    return RankOnePovm(vectors, ws)


def _dscale(br):
    return max((np.linalg.norm(d) ** 2 for ds in br.Dphi for d in ds), default=0.0)


def branch_certificate(qp: QuasiPureModel, povm: RankOnePovm, branches=None, tol_sat=None):
    """Per-branch pure-state hollowization check of an LMCC measurement.

    Splits every outcome ``|e>|a>`` by its ancilla label and checks ``|e>``
    against the W/M family of the pure-state model of branch ``a``. Returns
    the list of per-outcome verdicts.
    """
    br = branch_derivatives(qp) if branches is None else branches
    r, dp = qp.num_branches, qp.dim_primary
    fams = []
    for a in range(r):
        m = branch_model(br.phis[a], br.dphi[a], qp.tol)
        spec = spectral_decompose(m.rho, tol=qp.tol)
        fams.append(build_wm_family(spec, solve_slds(m, spec), qp.tol))
    out = []
    for v in povm.vectors:
        blocks = v.reshape(dp, r)
        labels = [a for a in range(r) if np.linalg.norm(blocks[:, a]) > 1e-12]
        if len(labels) != 1:
            raise PreconditionNotMet("outcome is not of product form |e>|a>")
        a = labels[0]
        out.append(check_outcome(blocks[:, a], fams[a], tol_sat)[0])
    return out


# two-qubit primary system with a one-qubit ancilla -----------------------------

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = (KET0 + KET1) / np.sqrt(2)
MINUS = (KET0 - KET1) / np.sqrt(2)

GENERATOR_ORDERS = ("xx-zz", "zz-xx")


def _varphi(theta):
    phi = np.cos(theta / 2) * KET0 + np.sin(theta / 2) * KET1
    perp = np.sin(theta / 2) * KET0 - np.cos(theta / 2) * KET1
    return phi, perp, SIGMA_X @ phi, SIGMA_X @ perp


def _lmcc_branch(c0, c1, c2, c3):
    """``e_1..e_4`` from the four orthonormal kets of one branch."""
    s = 1 / np.sqrt(3)
    return [
        s * (c0 + 1j * np.sqrt(2) * c1),
        s * (c0 - 1j / np.sqrt(2) * c1 + 1j * np.sqrt(1.5) * c2),
        s * (c0 - 1j / np.sqrt(2) * c1 - 1j * np.sqrt(1.5) * c2),
        c3,
    ]


def two_qubit_lmcc_vectors(theta):
    """The eight measurement vectors ``|e_nu^(a)>|a>`` of the example."""
    phi, perp, phix, phixp = _varphi(theta)
    e0 = _lmcc_branch(np.kron(KET0, PLUS), np.kron(KET1, PLUS), np.kron(KET0, MINUS), np.kron(KET1, MINUS))
    e1 = _lmcc_branch(np.kron(KET1, phi), np.kron(KET0, phix), np.kron(KET1, perp), np.kron(KET0, phixp))
    return [np.kron(e, KET0) for e in e0] + [np.kron(e, KET1) for e in e1]


def two_qubit_model(q=0.5, theta=np.pi / 2, generator_order="xx-zz", tol=DEFAULT) -> QuasiPureModel:
    """``q |0,+> (x) |0> + (1 - q) |1,varphi> (x) |1>`` under ``sz sz`` and ``sx sx``.

    ``generator_order="xx-zz"`` makes ``sx sx`` the first parameter, for
    which the QFIM reads ``diag(4, 4q + 4(1 - q) sin^2 theta)``.
    """
    if generator_order not in GENERATOR_ORDERS:
        raise ValueError(f"generator_order must be one of {GENERATOR_ORDERS}")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    phi = _varphi(theta)[0]
    zz, xx = kron(SIGMA_Z, SIGMA_Z), kron(SIGMA_X, SIGMA_X)
    gens = (xx, zz) if generator_order == "xx-zz" else (zz, xx)
    states = (np.kron(KET0, PLUS), np.kron(KET1, phi))
    return QuasiPureModel((q, 1 - q), states, gens, (0.0, 0.0), tol)


def expected_two_qubit_qfim(q, theta, generator_order="xx-zz"):
    f = 4 * q + 4 * (1 - q) * np.sin(theta) ** 2
    return np.diag([4.0, f]) if generator_order == "xx-zz" else np.diag([f, 4.0])


def paper_two_qubit_example(q=0.5, theta=np.pi / 2, generator_order="xx-zz", tol=DEFAULT):
    """Model, explicit LMCC POVM and a report for the two-qubit example.

    Returns ``(model, povm, report)``. The report holds the QFIM, its closed
    form, the CFIM of the explicit POVM, their maximal gap and the
    saturation certificate.
    """
    qp = two_qubit_model(q, theta, generator_order, tol)
    br = branch_derivatives(qp)
    model = build_quasipure(qp, br)
    povm = RankOnePovm(two_qubit_lmcc_vectors(theta))
    spec = spectral_decompose(model.rho, tol=tol)
    slds = solve_slds(model, spec, tol)
    F_Q = qfim(spec, slds)
    F_C, _ = cfim(model, povm, tol)
    cert = check_povm(povm, build_wm_family(spec, slds, tol))
    report = {
        "q": float(q),
        "theta": float(theta),
        "generator_order": generator_order,
        "qfim": F_Q,
        "qfim_expected": expected_two_qubit_qfim(q, theta, generator_order),
        "cfim": F_C,
        "gap": float(np.max(np.abs(F_C - F_Q))),
        "certificate": cert,
        "quasipure": qp,
    }
    return model, povm, report
