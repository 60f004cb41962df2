"""Seeded random generators for states, derivatives and measurements.

Used by the test-suite, the demos and the acceptance harness; everything
takes a ``numpy.random.Generator`` so draws are reproducible.
"""

import numpy as np
from scipy.stats import unitary_group

from .linalg import commutator, dag, outer


def random_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng)


def random_hermitian(d, rng, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + dag(a)) / 2


def random_traceless_hermitian(d, rng):
    h = random_hermitian(d, rng)
    return h - np.trace(h).real / d * np.eye(d)


def random_ket(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d, rng, rank=None, min_eig=0.05):
    """Random state of the given rank with eigenvalues bounded below."""
    rank = d if rank is None else rank
    p = rng.dirichlet(np.ones(rank))
    p = min_eig / rank + (1 - min_eig) * p
    p = np.sort(p)[::-1]
    u = random_unitary(d, rng)[:, :rank]
    return (u * p) @ dag(u)


def random_derivative(rho, rng, tol=1e-12):
    """A random valid derivative for ``rho``.

    The kernel-kernel block is removed so that an SLD exists, and the
    result is traceless.
    """
    d = rho.shape[0]
    w, v = np.linalg.eigh(rho)
    kernel = v[:, w < tol * max(w.max(), 1.0)]
    x = random_hermitian(d, rng)
    if kernel.shape[1]:
        pk = kernel @ dag(kernel)
        x = x - pk @ x @ pk
    support = np.eye(d) - (kernel @ dag(kernel) if kernel.shape[1] else 0)
    x = x - np.trace(x).real / np.trace(support).real * support
    return x


def random_unitary_derivatives(rho, s, rng):
    """Derivatives ``-i[H_j, rho]`` for random Hermitian ``H_j``."""
    d = rho.shape[0]
    return [-1j * commutator(random_hermitian(d, rng), rho) for _ in range(s)]


def random_commuting_hamiltonians(d, s, rng):
    """``s`` Hermitian matrices diagonal in one random eigenbasis."""
    u = random_unitary(d, rng)
    return [(u * rng.normal(size=d)) @ dag(u) for _ in range(s)]


def random_rank_one_povm(d, m, rng):
    """``m`` rank-one effects ``|pi><pi|`` summing to the identity.

    Built as ``S^{-1/2}|v_k>`` for random ``|v_k>`` with ``S = sum |v_k><v_k|``.
    For ``m = d^2`` the effects are generically linearly independent.
    """
    vs = rng.normal(size=(m, d)) + 1j * rng.normal(size=(m, d))
    s = sum(outer(v) for v in vs)
    w, u = np.linalg.eigh(s)
    s_inv_half = (u / np.sqrt(w)) @ dag(u)
    return [s_inv_half @ v for v in vs]


def random_orthonormal_basis(d, rng):
    u = random_unitary(d, rng)
    return [u[:, k] for k in range(d)]
