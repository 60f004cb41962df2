"""The Hermitian subspace spanned by the W/M family and its complement.

Each W/M member splits into anti-Hermitian pieces ``W^(x), W^(y), W^(z)``
(and likewise for M); multiplying by ``i`` gives Hermitian matrices whose
real span is the subspace ``V`` of Herm(d). Saturating rank-one effects live
in the trace-orthogonal complement ``V_perp``. When the partial
commutativity condition holds the identity lies in ``V_perp`` and the
complement is described by ``T_0 = I`` plus ``n`` traceless matrices with
``Tr(T_k T_l) = d delta_kl``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import DimensionTooSmall
from .hollowization import WMFamily
from .linalg import hermiticity_error, herm_to_vec, vec_to_herm
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class HermitianBasis:
    """Hermitian matrices with ``Tr(T_k T_l) = normalization * delta_kl``."""

    vectors: np.ndarray  # rows: herm_to_vec coordinates, unit Euclidean norm
    dim: int
    normalization: float = 1.0
    contains_identity: bool = False

    @property
    def elements(self):
        return [np.sqrt(self.normalization) * vec_to_herm(v, self.dim) for v in self.vectors]

    @property
    def traceless_elements(self):
        els = self.elements
        return els[1:] if self.contains_identity else els

    def __len__(self):
        return len(self.vectors)

    def projection_norm(self, h):
        """Trace-norm length of the orthogonal projection of ``h`` onto the span."""
        if len(self.vectors) == 0:
            return 0.0
        return float(np.linalg.norm(self.vectors @ herm_to_vec(h)))

    def gram(self):
        els = self.elements
        if not els:
            return np.zeros((0, 0))
        return np.array([[np.trace(a @ b).real for b in els] for a in els])


@dataclass(frozen=True)
class SubspacePair:
    V: HermitianBasis
    V_perp: HermitianBasis
    dim_V: int
    n: int
    identity_residual: float

    @property
    def pcc_consistent(self):
        return self.V_perp.contains_identity


def hermitianize_family(fam: WMFamily, spec=None, slds=None, tol=DEFAULT.tol_herm, with_labels=False):
    """Hermitian matrices ``i W^(alpha)`` and ``i M^(alpha)``.

    For ``a < b`` the x and y components are emitted, for ``a == b`` the z
    component. The W part uses the stored ``i < j`` entries. ``spec`` and
    ``slds`` are accepted for signature symmetry with the other builders and
    are not needed because the family already carries everything.
    """
    out, labels = [], []

    def emit(label, x):
        h = 1j * x
        err = hermiticity_error(h)
        if err > tol * max(1.0, float(np.max(np.abs(h), initial=0.0))):
            raise ValueError(f"{label} is not Hermitian (error {err:.3e})")
        out.append(0.5 * (h + h.conj().T))
        labels.append(label)

    def split(kind, r, get):
        # get(a, b) -> complex (non-Hermitian) member for eigen-indices (a, b)
        for a in range(r):
            emit((kind, "z", a, a), get(a, a))
            for b in range(a + 1, r):
                xab, xba = get(a, b), get(b, a)
                emit((kind, "x", a, b), xab + xba)
                emit((kind, "y", a, b), -1j * (xab - xba))

    r = _rank_of(fam)
    s_pairs = sorted({k[:2] for k in fam.W})
    for i, j in s_pairs:
        split(("W", i, j), r, lambda a, b, i=i, j=j: fam.W[(i, j, a, b)])
    for i in sorted({k[0] for k in fam.M}):
        split(("M", i), r, lambda a, b, i=i: fam.M[(i, a, b)])
    return (out, labels) if with_labels else out


def _rank_of(fam: WMFamily):
    if not fam.M:
        return 0
    return 1 + max(k[1] for k in fam.M)


def span_subspace(mats, d=None, tol_gs=DEFAULT.tol_gs) -> HermitianBasis:
    """Orthonormal basis (trace inner product) of the real span of ``mats``.

    Modified Gram-Schmidt with one re-orthogonalization pass; a vector is
    dropped when its remaining norm falls below ``tol_gs`` times its input
    norm. The resulting dimension is cross-checked against the numerical
    rank of the Gram matrix.
    """
    mats = list(mats)
    if d is None:
        if not mats:
            raise ValueError("dimension needed for an empty family")
        d = mats[0].shape[0]
    basis = []
    vecs = [herm_to_vec(m) for m in mats]
    for x in vecs:
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        y = x.copy()
        for _ in range(2):
            for q in basis:
                y -= (q @ y) * q
        ny = np.linalg.norm(y)
        if ny > tol_gs * nx:
            basis.append(y / ny)
    out = np.array(basis) if basis else np.zeros((0, d * d))
    if vecs:
        sv = np.linalg.svd(np.array(vecs), compute_uv=False)
        gram_rank = int(np.sum(sv > tol_gs * sv[0])) if sv[0] > 0 else 0
        if gram_rank != len(basis):
            warnings.warn(
                f"Gram-Schmidt dimension {len(basis)} differs from Gram rank {gram_rank}",
                RuntimeWarning,
                stacklevel=2,
            )
    return HermitianBasis(out, d, 1.0, False)


def complement_basis(V: HermitianBasis, d=None, tol=1e-10) -> HermitianBasis:
    """Basis of ``V_perp`` normalized to ``Tr(T_k T_l) = d delta_kl``.

    The identity comes first whenever it is trace-orthogonal to ``V`` (the
    partial commutativity condition). Otherwise a warning is issued and a
    plain orthogonal basis of the complement is returned.
    """
    d = V.dim if d is None else d
    e_id = herm_to_vec(np.eye(d)) / np.sqrt(d)
    id_res = V.projection_norm(np.eye(d)) / np.sqrt(d)
    if id_res <= tol:
        rows = np.vstack([V.vectors, e_id[None, :]]) if len(V) else e_id[None, :]
        rest = null_space(rows).T if rows.shape[0] < d * d else np.zeros((0, d * d))
        vecs = np.vstack([e_id[None, :], rest])
        return HermitianBasis(vecs, d, float(d), True)
    warnings.warn(
        "identity is not orthogonal to V (partial commutativity fails); "
        "complement built without the identity-first convention",
        RuntimeWarning,
        stacklevel=2,
    )
    rest = null_space(V.vectors).T if len(V) < d * d else np.zeros((0, d * d))
    return HermitianBasis(rest, d, float(d), False)


def analyze_subspaces(fam: WMFamily, d, tol: Tolerances = DEFAULT) -> SubspacePair:
    V = span_subspace(hermitianize_family(fam), d, tol.tol_gs)
    id_res = V.projection_norm(np.eye(d)) / np.sqrt(d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        perp = complement_basis(V, d, tol=tol.tol_pcc)
    return SubspacePair(V, perp, len(V), len(perp) - 1, float(id_res))


def dimension_bound_verdict(n, d):
    """False when ``n < d - 1``: too few directions for a complete rank-one POVM."""
    return n >= d - 1


def sufficiency_threshold(d, return_argmax=False):
    """``max_{mu=1..d-2} 2 mu (d + 1/2 - mu) + (d - 2)`` by enumeration."""
    if d < 3:
        raise DimensionTooSmall("the sufficiency threshold needs d >= 3")
    values = {mu: mu * (2 * d + 1 - 2 * mu) + d - 2 for mu in range(1, d - 1)}
    mu_best = max(values, key=values.get)
    if return_argmax:
        return values[mu_best], mu_best
    return values[mu_best]
