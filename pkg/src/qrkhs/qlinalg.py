"""Dense quaternionic linear algebra on a right module.

Vectors are arrays of shape ``(d, 4)`` and matrices ``(d, e, 4)``; leading
batch axes are allowed where noted.  Internally a quaternion array is split
as ``Q = Z1 + Z2 j`` with complex ``Z1 = x0 + x1 i`` and ``Z2 = x2 + x3 i``,
so products reduce to complex BLAS calls:

    (A1 + A2 j)(B1 + B2 j) = (A1 B1 - A2 conj(B2)) + (A1 B2 + A2 conj(B1)) j
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotHermitian
from .quaternion import as_quat_array


def split(a) -> tuple[np.ndarray, np.ndarray]:
    a = as_quat_array(a)
    return a[..., 0] + 1j * a[..., 1], a[..., 2] + 1j * a[..., 3]


def join(z1, z2) -> np.ndarray:
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    out = np.empty(np.broadcast_shapes(z1.shape, z2.shape) + (4,))
    out[..., 0] = z1.real
    out[..., 1] = z1.imag
    out[..., 2] = z2.real
    out[..., 3] = z2.imag
    return out


def _pair_matmul(a1, a2, b1, b2):
    return a1 @ b1 - a2 @ b2.conj(), a1 @ b2 + a2 @ b1.conj()


def _check_vec(u):
    u = as_quat_array(u)
    if u.ndim != 2:
        raise DimensionMismatch(f"expected a vector of shape (d, 4), got {u.shape}")
    return u


def _check_mat(a):
    a = as_quat_array(a)
    if a.ndim != 3:
        raise DimensionMismatch(f"expected a matrix of shape (d, e, 4), got {a.shape}")
    return a


def identity(d: int) -> np.ndarray:
    out = np.zeros((d, d, 4))
    out[np.arange(d), np.arange(d), 0] = 1.0
    return out


def basis_vector(d: int, i: int) -> np.ndarray:
    out = np.zeros((d, 4))
    out[i, 0] = 1.0
    return out


def inner(u, v) -> np.ndarray:
    """``<u|v> = sum_i conj(u_i) v_i``; conjugate-linear on the left."""
    u = _check_vec(u)
    v = _check_vec(v)
    if u.shape != v.shape:
        raise DimensionMismatch(f"inner product of shapes {u.shape} and {v.shape}")
    u1, u2 = split(u)
    v1, v2 = split(v)
    # conj(u) = conj(u1) - u2 j
    c1 = np.sum(u1.conj() * v1 + u2 * v2.conj())
    c2 = np.sum(u1.conj() * v2 - u2 * v1.conj())
    return join(c1, c2)


def norm2(u) -> float:
    u = _check_vec(u)
    return float(np.sum(u * u))


def right_scale(u, q) -> np.ndarray:
    """``u q``: multiply every entry by the quaternion ``q`` on the right."""
    u1, u2 = split(u)
    q1, q2 = split(q)
    return join(u1 * q1 - u2 * np.conj(q2), u1 * q2 + u2 * np.conj(q1))


def left_scale(q, u) -> np.ndarray:
    q1, q2 = split(q)
    u1, u2 = split(u)
    return join(q1 * u1 - q2 * u2.conj(), q1 * u2 + q2 * u1.conj())


def matmul(a, b) -> np.ndarray:
    a = _check_mat(a)
    b = _check_mat(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape[:2]} by {b.shape[:2]}")
    return join(*_pair_matmul(*split(a), *split(b)))


def mat_apply(a, v) -> np.ndarray:
    """``(A v)_i = sum_j A_ij v_j`` with the matrix entry as left factor."""
    a = _check_mat(a)
    v = _check_vec(v)
    if a.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"cannot apply {a.shape[:2]} matrix to length {v.shape[0]} vector")
    v1, v2 = split(v)
    c1, c2 = _pair_matmul(*split(a), v1[:, None], v2[:, None])
    return join(c1[:, 0], c2[:, 0])


def adjoint(a) -> np.ndarray:
    a = _check_mat(a)
    out = np.swapaxes(a, 0, 1).copy()
    out[..., 1:] *= -1.0
    return out


def outer(u, w) -> np.ndarray:
    """The rank-one operator ``|u><w|``, acting as ``v -> u <w|v>``."""
    u = _check_vec(u)
    w = _check_vec(w)
    u1, u2 = split(u)
    w1, w2 = split(w)
    # entries u_i conj(w_j); conj(w) = conj(w1) - w2 j as a row
    c1, c2 = _pair_matmul(u1[:, None], u2[:, None], w1.conj()[None, :], -w2[None, :])
    return join(c1, c2)


def embed_complex(a) -> np.ndarray:
    """Complex ``2d x 2d`` image of a quaternionic matrix.

    Entry ``q = z1 + z2 j`` becomes the block ``[[z1, z2], [-conj z2, conj z1]]``.
    The map is a *-homomorphism, so spectra and positivity carry over.
    """
    a = _check_mat(a)
    z1, z2 = split(a)
    d, e = z1.shape
    out = np.empty((2 * d, 2 * e), dtype=complex)
    out[0::2, 0::2] = z1
    out[0::2, 1::2] = z2
    out[1::2, 0::2] = -z2.conj()
    out[1::2, 1::2] = z1.conj()
    return out


def unembed(m) -> np.ndarray:
    """Inverse of :func:`embed_complex`, projecting onto the quaternionic
    block structure (exact when ``m`` is an embedding)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] % 2 or m.shape[1] % 2:
        raise DimensionMismatch(f"embedding must have even shape, got {m.shape}")
    z1 = 0.5 * (m[0::2, 0::2] + m[1::2, 1::2].conj())
    z2 = 0.5 * (m[0::2, 1::2] - m[1::2, 0::2].conj())
    return join(z1, z2)


def embed_vector(v) -> np.ndarray:
    """First column of the embedding of ``v`` viewed as a ``d x 1`` matrix."""
    v = _check_vec(v)
    z1, z2 = split(v)
    out = np.empty(2 * v.shape[0], dtype=complex)
    out[0::2] = z1
    out[1::2] = -z2.conj()
    return out


def unembed_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return join(x[0::2], -x[1::2].conj())


def max_abs(a) -> float:
    a = as_quat_array(a)
    if a.size == 0:
        return 0.0
    return float(np.sqrt(np.max(np.sum(a * a, axis=-1))))


def hermitian_defect(a) -> float:
    return max_abs(a - adjoint(a))


def default_tol(a) -> float:
    a = _check_mat(a)
    return 1e-10 * a.shape[0] * max_abs(a)


def _hermitian_embedding(a, tol):
    a = _check_mat(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"square matrix required, got {a.shape[:2]}")
    if tol is None:
        tol = default_tol(a)
    defect = hermitian_defect(a)
    if defect > tol:
        raise NotHermitian(f"|A - A^dagger|_max = {defect:.3e} exceeds tol = {tol:.3e}")
    m = embed_complex(a)
    return 0.5 * (m + m.conj().T), tol


def eigenvalues(a, tol=None) -> np.ndarray:
    """Real eigenvalues of a Hermitian quaternionic matrix, ascending.

    The embedding doubles every eigenvalue; one copy of each pair is returned.
    """
    m, _ = _hermitian_embedding(a, tol)
    return np.linalg.eigvalsh(m)[0::2]


def is_positive(a, tol=None) -> bool:
    """True iff every eigenvalue of the complex embedding is ``>= -tol``.

    ``tol`` defaults to ``1e-10 * d * max|A_ij|``; the same tolerance gates
    the Hermiticity check.
    """
    m, tol = _hermitian_embedding(a, tol)
    if m.size == 0:
        return True
    return bool(np.linalg.eigvalsh(m)[0] >= -tol)


def op_norm(a) -> float:
    """Operator norm as the largest singular value of the embedding; for
    Hermitian ``a`` this is the largest eigenvalue modulus."""
    m = embed_complex(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def rank(a, rtol: float = 1e-10) -> int:
    """Quaternionic rank: half the numerical rank of the embedding."""
    m = embed_complex(a)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0])) // 2


def hermitian_function(a, fn, tol=None) -> np.ndarray:
    """Apply ``fn`` to the spectrum of a Hermitian matrix."""
    m, _ = _hermitian_embedding(a, tol)
    w, v = np.linalg.eigh(m)
    return unembed((v * fn(w)) @ v.conj().T)


def hermitian_sqrt(a, tol=None) -> np.ndarray:
    return hermitian_function(a, lambda w: np.sqrt(np.clip(w, 0.0, None)), tol)


def hermitian_inv_sqrt(a, tol=None) -> np.ndarray:
    return hermitian_function(a, lambda w: 1.0 / np.sqrt(w), tol)


def condition_number(a, tol=None) -> float:
    w = eigenvalues(a, tol)
    if w[0] <= 0:
        return np.inf
    return float(w[-1] / w[0])


def random_vector(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    return scale * rng.standard_normal((d, 4))


def random_matrix(rng: np.random.Generator, d: int, e: int | None = None) -> np.ndarray:
    return rng.standard_normal((d, d if e is None else e, 4))


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Quaternionic unitary (``Q^dagger Q = I``): polar factor of a random matrix."""
    m = embed_complex(random_matrix(rng, d))
    # the polar factor of a quaternionic matrix stays quaternionic
    u, _, vh = np.linalg.svd(m)
    return unembed(u @ vh)
