"""W/M operator families, outcome-wise saturation checks and hollowization.

For support eigenvectors ``psi_a`` of ``rho`` and SLDs ``L_i`` define
``P_ab = |psi_a><psi_b|``, ``M_{i,ab} = [L_i, P_ab]`` and
``W_{ij,ab} = L_i P_ab L_j - L_j P_ab L_i``. A rank-one effect
``|pi><pi|`` has equal classical and quantum Fisher information exactly
when ``<pi|X|pi> = 0`` for every member ``X`` of this family, i.e. when the
family is simultaneously hollow in a basis containing ``pi``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NotTraceless, NumericalInvariantError, ZeroOutcomeInformation
from .linalg import dag, hermiticity_error
from .model import RankOnePovm, SpectralData
from .tolerances import DEFAULT, Tolerances

SATURATING = "Saturating"
NOT_SATURATING = "NotSaturating"
INCONCLUSIVE = "Inconclusive"

# residuals within this factor above tol_sat are reported as inconclusive
INCONCLUSIVE_BAND = 100.0


@dataclass(frozen=True)
class WMFamily:
    """W entries for ``i < j`` and all M entries, keyed by index tuples.

    ``W[(i, j, a, b)]`` with ``i < j``; ``M[(i, a, b)]``. The remaining W
    entries follow from ``W_{ji,ab} = -W_{ij,ab}`` (see :meth:`w`).
    """

    W: dict
    M: dict
    scale: float
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def w(self, i, j, a, b):
        if i < j:
            return self.W[(i, j, a, b)]
        if i > j:
            return -self.W[(j, i, a, b)]
        raise KeyError("W is only defined for i != j")

    def stack(self):
        """All members as a ``(K, d, d)`` array (W entries first)."""
        mats = list(self.W.values()) + list(self.M.values())
        if not mats:
            return np.zeros((0, 0, 0), dtype=complex)
        return np.array(mats)

    @property
    def default_tol_sat(self):
        return self.tol.tol_sat * (self.scale if self.scale > 0 else 1.0)

    def pcc_violation(self):
        if not self.W:
            return 0.0
        return float(max(abs(np.trace(x)) for x in self.W.values()))


def build_wm_family(spec: SpectralData, slds, tol: Tolerances = DEFAULT) -> WMFamily:
    v = spec.eigenvectors
    r = spec.rank
    Ls = list(slds)
    s = len(Ls)
    # L_i |psi_a> and <psi_b| L_j as columns / rows
    lv = [L @ v for L in Ls]
    W, M = {}, {}
    for i in range(s):
        for j in range(i + 1, s):
            for a in range(r):
                for b in range(r):
                    W[(i, j, a, b)] = np.outer(lv[i][:, a], np.conj(lv[j][:, b])) - np.outer(
                        lv[j][:, a], np.conj(lv[i][:, b])
                    )
    for i in range(s):
        for a in range(r):
            for b in range(r):
                # [L, |a><b|] = L|a><b| - |a><b|L
                M[(i, a, b)] = np.outer(lv[i][:, a], np.conj(v[:, b])) - np.outer(
                    v[:, a], np.conj(lv[i][:, b])
                )
    norms = [np.linalg.norm(x, 2) for x in list(W.values()) + list(M.values())]
    scale = float(max(norms, default=0.0))
    return WMFamily(W, M, scale, tol)


def _normalized(pi):
    pi = np.asarray(pi, dtype=complex).ravel()
    n = np.linalg.norm(pi)
    if n == 0:
        raise ValueError("measurement vector must be nonzero")
    return pi / n


def outcome_residual(pi, fam: WMFamily):
    """``max_X |<pi|X|pi>| / <pi|pi>`` over the whole family."""
    pi = _normalized(pi)
    stack = fam.stack()
    if stack.size == 0:
        return 0.0
    vals = np.einsum("i,kij,j->k", pi.conj(), stack, pi)
    return float(np.max(np.abs(vals)))


def check_outcome(pi, fam: WMFamily, tol_sat=None):
    """Return ``(saturates, residual)`` for the effect ``|pi><pi|``."""
    tol_sat = fam.default_tol_sat if tol_sat is None else tol_sat
    res = outcome_residual(pi, fam)
    return res <= tol_sat, res


def central_pair(pi, spec: SpectralData, slds):
    """``(i, a)`` maximizing ``|<psi_a|L_i|pi>|`` (first index wins ties)."""
    pi = _normalized(pi)
    x = np.array([np.conj(spec.eigenvectors).T @ (L @ pi) for L in slds])
    k = int(np.argmax(np.abs(x)))
    i, a = divmod(k, spec.rank)
    return (i, a), float(np.abs(x).max())


def check_outcome_reduced(pi, fam: WMFamily, spec: SpectralData, slds, tol_sat=None, strict=False):
    """Check only the conditions anchored at the central pair.

    Returns ``(saturates, (i_bar, a_bar))``. An outcome carrying no
    information (all ``<psi_a|L_i|pi>`` vanish) saturates trivially and is
    returned as ``(True, None)``; with ``strict=True`` it raises
    ``ZeroOutcomeInformation`` instead.
    """
    tol_sat = fam.default_tol_sat if tol_sat is None else tol_sat
    pi = _normalized(pi)
    (ib, ab), mag = central_pair(pi, spec, slds)
    lscale = max((np.linalg.norm(L, 2) for L in slds), default=0.0)
    if mag <= fam.tol.tol_sat * max(lscale, 1e-300):
        if strict:
            raise ZeroOutcomeInformation("outcome carries no Fisher information")
        return True, None
    s, r = len(slds), spec.rank
    vals = []
    for j in range(s):
        if j == ib:
            continue
        for b in range(r):
            vals.append(np.vdot(pi, fam.w(ib, j, ab, b) @ pi))
    for b in range(r):
        vals.append(np.vdot(pi, fam.M[(ib, ab, b)] @ pi))
    res = float(np.max(np.abs(vals)))
    return res <= tol_sat, (ib, ab)


def pcc_violation(spec: SpectralData, slds):
    """``max |<psi_a|[L_i, L_j]|psi_b>|`` over ``i < j`` and support indices."""
    v = spec.eigenvectors
    Ls = list(slds)
    worst = 0.0
    for i in range(len(Ls)):
        for j in range(i + 1, len(Ls)):
            c = Ls[i] @ Ls[j] - Ls[j] @ Ls[i]
            worst = max(worst, float(np.max(np.abs(dag(v) @ c @ v))))
    return worst


def check_pcc(spec: SpectralData, slds, tol=None, fam: Optional[WMFamily] = None, tol_obj=DEFAULT):
    """Partial commutativity on the support of ``rho``.

    ``tol`` defaults to ``tol_pcc * max(1, max_i |L_i|^2)``. When ``fam`` is
    given the trace identity ``Tr W_{ij,ab} = <psi_b|[L_j, L_i]|psi_a>`` is
    used as a cross-check and a disagreement raises.
    """
    if tol is None:
        lmax = max((np.linalg.norm(L, 2) for L in slds), default=0.0)
        tol = tol_obj.tol_pcc * max(1.0, lmax**2)
    viol = pcc_violation(spec, slds)
    holds = bool(viol <= tol)
    if fam is not None:
        tr = fam.pcc_violation()
        if abs(tr - viol) > 1e-9 * max(1.0, viol):
            raise NumericalInvariantError(f"PCC cross-check mismatch: {viol:.3e} vs {tr:.3e}")
    return holds


@dataclass
class SaturationCertificate:
    outcome_residuals: list
    pcc_holds: bool
    verdict: str
    tol_sat: float
    completeness_residual: float = 0.0

    @property
    def saturating(self):
        return self.verdict == SATURATING

    @property
    def max_residual(self):
        return max(self.outcome_residuals, default=0.0)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "pcc_holds": bool(self.pcc_holds),
            "tol_sat": self.tol_sat,
            "completeness_residual": self.completeness_residual,
            "max_residual": self.max_residual,
            "outcome_residuals": list(self.outcome_residuals),
        }


def check_povm(povm: RankOnePovm, fam: WMFamily, tol_sat=None, pcc_holds=None) -> SaturationCertificate:
    """Aggregate :func:`check_outcome` over every effect of a complete POVM.

    Raises ``IncompletePovm`` when the effects do not sum to the identity.
    ``pcc_holds`` defaults to the trace criterion on the W family.
    """
    tol_sat = fam.default_tol_sat if tol_sat is None else tol_sat
    comp = povm.check_complete(fam.tol.tol_complete)
    residuals = [outcome_residual(v, fam) for v in povm.vectors]
    worst = max(residuals, default=0.0)
    if worst <= tol_sat:
        verdict = SATURATING
    elif worst <= INCONCLUSIVE_BAND * tol_sat:
        verdict = INCONCLUSIVE
    else:
        verdict = NOT_SATURATING
    if pcc_holds is None:
        pcc_holds = fam.pcc_violation() <= fam.tol.tol_pcc * max(1.0, fam.scale)
    return SaturationCertificate(residuals, bool(pcc_holds), verdict, float(tol_sat), comp)


def _hollowize_hermitian(B, U, tol_hollow, max_steps):
    d = B.shape[0]
    for _ in range(max_steps):
        diag = np.real(np.diag(B))
        if np.max(np.abs(diag)) <= tol_hollow:
            break
        i, j = int(np.argmax(diag)), int(np.argmin(diag))
        a, b = diag[i], diag[j]
        if a <= 0 or b >= 0:
            break
        c = B[i, j]
        phi = np.pi / 2 - np.angle(c) if c != 0 else 0.0
        t = np.arctan(np.sqrt(a / -b))
        G = np.eye(d, dtype=complex)
        G[i, i] = np.cos(t)
        G[j, i] = np.exp(1j * phi) * np.sin(t)
        G[i, j] = -np.exp(-1j * phi) * np.sin(t)
        G[j, j] = np.cos(t)
        B = dag(G) @ B @ G
        B[i, i] = 0.0
        U = U @ G
    return B, U


def _equalizing_rotation(a, b, c, e):
    """Unitary on a 2x2 block ``[[a, c], [e, b]]`` giving equal diagonals."""
    delta = a - b
    if abs(delta) == 0:
        return np.eye(2, dtype=complex)
    u, w = c * np.conj(delta), e * np.conj(delta)
    cx, sx = (u.real - w.real), -(u.imag + w.imag)
    phi = np.arctan2(sx, cx) if (cx or sx) else 0.0
    g = c * np.exp(1j * phi) + e * np.exp(-1j * phi)
    k = np.real(g * np.conj(delta)) / abs(delta) ** 2
    t = 0.5 * np.arctan2(1.0, -k)
    ct, st = np.cos(t), np.sin(t)
    return np.array(
        [[ct, -np.exp(-1j * phi) * st], [np.exp(1j * phi) * st, ct]], dtype=complex
    )


def _hollowize_general(B, U, tol_hollow, max_steps):
    for _ in range(max_steps):
        diag = np.diag(B)
        if np.max(np.abs(diag)) <= tol_hollow:
            break
        i = int(np.argmax(np.abs(diag)))
        j = int(np.argmax(np.abs(diag - diag[i])))
        if i == j:
            break
        g = _equalizing_rotation(B[i, i], B[j, j], B[i, j], B[j, i])
        G = np.eye(B.shape[0], dtype=complex)
        G[np.ix_([i, j], [i, j])] = g
        B = dag(G) @ B @ G
        U = U @ G
    return B, U


def hollowize_single(A, tol_hollow=DEFAULT.tol_hollow, max_sweeps=None):
    """Unitary ``U`` such that ``U^dag A U`` has a vanishing diagonal.

    Hermitian input is handled by greedy Givens-type rotations that pair the
    largest positive with the most negative diagonal entry and zero the
    former exactly, which terminates after at most ``d - 1`` rotations.
    Non-Hermitian input uses rotations that equalize the selected pair and
    converges geometrically towards the (zero) mean of the diagonal.
    """
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if abs(np.trace(A)) > 1e-9 * scale * d:
        raise NotTraceless(f"trace {np.trace(A):.3e} is not zero")
    max_sweeps = 100 * d if max_sweeps is None else max_sweeps
    U = np.eye(d, dtype=complex)
    # remove the O(eps) trace so exact zeroing stays consistent
    B = A - np.trace(A) / d * np.eye(d)
    if hermiticity_error(A) <= 1e-12 * scale:
        B, U = _hollowize_hermitian(0.5 * (B + dag(B)), U, tol_hollow * scale, max_sweeps)
    else:
        B, U = _hollowize_general(B, U, tol_hollow * scale, max_sweeps * d)
    return U


def vanishing_m_structure(slds, spec: SpectralData, j, tol=1e-9):
    """Whether every ``M_{j,ab}`` vanishes, and the implied multiple of ``Pi_s``.

    Returns ``(vanishes, alpha)``; ``alpha`` is None when some ``M`` is
    nonzero. When they all vanish ``L_j`` must equal ``alpha * Pi_s`` and a
    violation of that structure raises.
    """
    L = slds[j]
    v = spec.eigenvectors
    r = spec.rank
    scale = max(1.0, np.linalg.norm(L, 2))
    worst = 0.0
    lv = L @ v
    for a in range(r):
        for b in range(r):
            m = np.outer(lv[:, a], np.conj(v[:, b])) - np.outer(v[:, a], np.conj(L @ v[:, b]))
            worst = max(worst, float(np.max(np.abs(m))))
    if worst > tol * scale:
        return False, None
    ps = spec.support_projector
    alpha = float(np.real(np.trace(L @ ps)) / r)
    if np.max(np.abs(L - alpha * ps)) > 10 * tol * scale:
        raise NumericalInvariantError("vanishing M family without L = alpha * Pi_s structure")
    return True, alpha
