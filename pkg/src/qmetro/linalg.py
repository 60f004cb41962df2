"""Small dense linear-algebra helpers shared by the modules."""

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a):
    return 0.5 * (a + dag(a))


def hermiticity_error(a):
    return float(np.max(np.abs(a - dag(a)), initial=0.0))


def commutator(a, b):
    return a @ b - b @ a


def outer(u, v=None):
    """``|u><v|`` (``|u><u|`` when ``v`` is omitted)."""
    if v is None:
        v = u
    return np.outer(u, np.conj(v))


def expectation(op, vec):
    """``<vec|op|vec>`` without normalization."""
    return np.vdot(vec, op @ vec)


def kron(*ops):
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def herm_to_vec(h):
    """Map a Hermitian matrix to R^(d^2) isometrically.

    Diagonal entries are copied and the real and imaginary parts of the
    strict upper triangle are scaled by sqrt(2), so the trace inner product
    Tr(AB) becomes the Euclidean dot product. Accepts a stack ``(..., d, d)``.
    """
    h = np.asarray(h)
    d = h.shape[-1]
    iu = np.triu_indices(d, 1)
    diag = np.real(np.diagonal(h, axis1=-2, axis2=-1))
    upper = h[..., iu[0], iu[1]]
    return np.concatenate(
        [diag, np.sqrt(2) * np.real(upper), np.sqrt(2) * np.imag(upper)], axis=-1
    )


def vec_to_herm(v, d):
    v = np.asarray(v, dtype=float)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    h = np.zeros(v.shape[:-1] + (d, d), dtype=complex)
    idx = np.arange(d)
    h[..., idx, idx] = v[..., :d]
    upper = (v[..., d : d + m] + 1j * v[..., d + m :]) / np.sqrt(2)
    h[..., iu[0], iu[1]] = upper
    h[..., iu[1], iu[0]] = np.conj(upper)
    return h


def complete_orthonormal(vectors, d):
    """Orthonormal basis of the complement of ``span(vectors)`` in C^d."""
    if len(vectors) == 0:
        return np.eye(d, dtype=complex)
    a = np.column_stack(vectors)
    q, _ = np.linalg.qr(a, mode="complete")
    return q[:, a.shape[1] :]
