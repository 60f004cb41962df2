import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmetro.errors import DimensionTooSmall
from qmetro.geometry import (
    HermitianBasis,
    analyze_subspaces,
    complement_basis,
    dimension_bound_verdict,
    hermitianize_family,
    span_subspace,
    sufficiency_threshold,
)
from qmetro.hollowization import build_wm_family
from qmetro.linalg import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, herm_to_vec, vec_to_herm
from qmetro.model import EstimationModel, solve_slds, spectral_decompose
from qmetro.quasipure import paper_two_qubit_example
from qmetro.random_models import random_hermitian

from _gen import random_model


def _family(model):
    spec = spectral_decompose(model.rho)
    slds = solve_slds(model, spec)
    return spec, slds, build_wm_family(spec, slds)


@given(st.integers(0, 10_000), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_herm_vec_isometry(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    assert herm_to_vec(a) @ herm_to_vec(b) == pytest.approx(np.trace(a @ b).real)
    np.testing.assert_allclose(vec_to_herm(herm_to_vec(a), d), a, atol=1e-12)


def test_hermitianized_members_are_hermitian_and_reconstruct_w():
    rng = np.random.default_rng(0)
    spec, slds, fam = _family(random_model(rng, 3, 2, rank=2))
    mats, labels = hermitianize_family(fam, with_labels=True)
    for h in mats:
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)
    lookup = dict(zip(labels, mats))
    kind = ("W", 0, 1)
    hx, hy = lookup[(kind, "x", 0, 1)], lookup[(kind, "y", 0, 1)]
    # h = i W^(alpha) and W_ab = (W^(x) + i W^(y)) / 2
    np.testing.assert_allclose((-1j * hx + hy) / 2, fam.W[(0, 1, 0, 1)], atol=1e-12)
    np.testing.assert_allclose(lookup[(kind, "z", 1, 1)], 1j * fam.W[(0, 1, 1, 1)], atol=1e-12)


def test_drho_zero_gives_empty_v():
    m = EstimationModel(np.diag([0.7, 0.3]), (np.zeros((2, 2)),))
    _, _, fam = _family(m)
    pair = analyze_subspaces(fam, 2)
    assert pair.dim_V == 0 and pair.n == 3


def test_pure_state_only_z_terms():
    m = EstimationModel(np.diag([1.0, 0.0]), (np.array([[0, 1], [1, 0]]) * 0.5,))
    _, _, fam = _family(m)
    _, labels = hermitianize_family(fam, with_labels=True)
    assert [lab[1] for lab in labels] == ["z"]


def test_span_examples():
    assert len(span_subspace([SIGMA_X, 2 * SIGMA_X])) == 1
    assert len(span_subspace([SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY_2])) == 4


def test_span_permutation_invariant_dimension():
    model, _, _ = paper_two_qubit_example(0.3, np.pi / 3)
    _, _, fam = _family(model)
    mats = hermitianize_family(fam)
    dims = {len(span_subspace(mats))}
    rng = np.random.default_rng(1)
    for _ in range(3):
        dims.add(len(span_subspace([mats[k] for k in rng.permutation(len(mats))])))
    gram_rank = np.linalg.matrix_rank(np.array([herm_to_vec(m) for m in mats]), tol=1e-10)
    assert dims == {gram_rank}


def test_complement_examples():
    empty = HermitianBasis(np.zeros((0, 4)), 2)
    perp = complement_basis(empty)
    assert len(perp) == 4 and perp.contains_identity
    np.testing.assert_allclose(perp.elements[0], np.eye(2), atol=1e-12)
    np.testing.assert_allclose(perp.gram(), 2 * np.eye(4), atol=1e-12)
    z = span_subspace([SIGMA_Z])
    assert len(complement_basis(z)) - 1 == 2


def test_complement_without_identity_warns():
    with pytest.warns(RuntimeWarning):
        perp = complement_basis(span_subspace([np.diag([1.0, 0.0])]))
    assert not perp.contains_identity


@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_subspace_invariants(seed, d, s):
    rng = np.random.default_rng(seed)
    m = random_model(rng, d, s, int(rng.integers(1, d + 1)))
    _, _, fam = _family(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pair = analyze_subspaces(fam, d)
    assert pair.dim_V + len(pair.V_perp) == d * d
    if len(pair.V) and len(pair.V_perp):
        assert np.max(np.abs(pair.V.vectors @ pair.V_perp.vectors.T)) < 1e-9
    g = pair.V_perp.gram()
    np.testing.assert_allclose(g, d * np.eye(len(g)), atol=1e-9)
    if pair.V_perp.contains_identity:
        for t in pair.V_perp.traceless_elements:
            assert abs(np.trace(t)) < 1e-9


def test_two_qubit_identity_in_complement():
    model, _, _ = paper_two_qubit_example(0.5, np.pi / 2)
    _, _, fam = _family(model)
    pair = analyze_subspaces(fam, 8)
    assert pair.identity_residual < 1e-12
    assert pair.V_perp.contains_identity
    assert pair.n >= 7


@pytest.mark.parametrize("n, d, ok", [(3, 2, True), (0, 2, False), (3, 4, True), (2, 4, False)])
def test_dimension_bound(n, d, ok):
    assert dimension_bound_verdict(n, d) is ok


def _threshold_oracle(d):
    return max(2 * mu * (d + 0.5 - mu) + (d - 2) for mu in range(1, d - 1))


@pytest.mark.parametrize("d, expected", [(3, 6), (4, 12)])
def test_sufficiency_threshold_values(d, expected):
    assert sufficiency_threshold(d) == expected


def test_sufficiency_threshold_enumeration():
    for d in range(3, 17):
        assert sufficiency_threshold(d) == _threshold_oracle(d)
    value, mu = sufficiency_threshold(8, return_argmax=True)
    assert (value, mu) == (42, 4)
    with pytest.raises(DimensionTooSmall):
        sufficiency_threshold(2)
