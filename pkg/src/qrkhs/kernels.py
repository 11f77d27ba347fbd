"""Reproducing kernels built from a basis family.

The kernel of a family ``f_0..f_N`` is ``K(x, y) = sum_i f_i(x) conj(f_i(y))``.
With this order the coherent-state coefficients ``c_i = conj(f_i(x)) v``
satisfy ``<c(x, u) | c(y, v)> = conj(u) K(x, y) v`` and the reproducing
identity ``<c(x, u) | phi> = conj(u) phi(x)`` holds for quaternionic points.
On a common slice (commuting arguments) it agrees with the familiar
closed forms, e.g. ``exp(x conj(y))`` for normalized monomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BadParams,
    BudgetExceeded,
    DimensionMismatch,
    DomainError,
    NoClosedForm,
    SliceMismatch,
    TruncationNotConverged,
)
from .families import MAX_INDEX_TWO, BasisFamily, tail_ratio
from .qlinalg import adjoint, inner, join, matmul, split
from .quaternion import as_quat_array, lift_complex, qconj, qmul
from .special import bessel_I_scaled, entire_bessel_series

CLOSED_FORMS = ("canonical_slice", "hermite_real", "hermite_complex", "laguerre_real", "laguerre_complex")
DEFAULT_N = {"monomial": 60, "hermite": 120, "laguerre": 150, "hermite2": 60}
GRAM_BUDGET = 200
TINY_NORM = 1e-300


@dataclass(frozen=True)
class Kernel:
    family: BasisFamily
    closed_form: Optional[str] = None
    tol: float = 1e-12

    def __post_init__(self):
        if self.closed_form is not None and self.closed_form not in CLOSED_FORMS:
            raise BadParams(f"unknown closed form {self.closed_form!r}")

    @property
    def N(self) -> int:
        return self.family.N

    @property
    def dim(self) -> int:
        return self.family.dim

    def __call__(self, x, y):
        return kernel_series(self, x, y)[0]


def default_kernel(kind: str, epsilon: float = 1.0, alpha: float | None = None, N: int | None = None,
                   closed_form: str | None = None) -> Kernel:
    N = DEFAULT_N.get(kind, 60) if N is None else N
    return Kernel(BasisFamily(kind, N, epsilon=epsilon, alpha=alpha), closed_form)


def _prod_conj(a, b):
    """``a * conj(b)`` elementwise for quaternion arrays."""
    a1, a2 = split(a)
    b1, b2 = split(b)
    # (a1 + a2 j)(conj b1 - b2 j) = a1 conj(b1) + a2 conj(b2) + (a2 b1 - a1 b2) j
    return join(a1 * b1.conj() + a2 * b2.conj(), a2 * b1 - a1 * b2)


def kernel_series(ker: Kernel, x, y, check: bool = True, extended: bool = False):
    """Truncated series ``sum_{i<=N} f_i(x) conj(f_i(y))``.

    Returns ``(value, tail)`` where ``tail`` is the share of the last ten
    terms in the sum of term moduli.  Raises :class:`TruncationNotConverged`
    when ``check`` is set and the tail exceeds ``ker.tol``.
    Scalar families give values of shape ``(..., 4)``; families into
    ``H^d`` give ``(..., d, d, 4)``.

    ``extended`` evaluates and sums in long double on the common slice of
    ``x`` and ``y``.  Where ``|K(x, y)|`` is far below ``K(x,x)^1/2 K(y,y)^1/2``
    the double-precision sum loses relative accuracy to cancellation.
    """
    xa = as_quat_array(x)
    ya = as_quat_array(y)
    if extended:
        return _series_extended(ker, xa, ya, check)
    fx = ker.family.values(xa)
    fy = ker.family.values(ya)
    if ker.dim == 1:
        fx, fy = np.broadcast_arrays(fx, fy)
        terms = _prod_conj(fx, fy)
        nx = np.sum(fx * fx, axis=(0, -1))
    else:
        terms = _prod_conj(fx[..., :, None, :], fy[..., None, :, :])
        nx = np.sum(fx * fx, axis=(0, -2, -1))
    if np.any(nx < TINY_NORM):
        raise DomainError("kernel diagonal vanishes at an evaluation point")
    value = terms.sum(axis=0)
    mods = np.sqrt(np.sum(terms * terms, axis=-1))
    if ker.dim > 1:
        mods = mods.sum(axis=(-2, -1))
    tail = tail_ratio(mods, min(10, mods.shape[0]))
    if check and np.any(tail > ker.tol):
        raise TruncationNotConverged(
            f"series tail {float(np.max(tail)):.2e} exceeds tol {ker.tol:.1e} at N={ker.N}"
        )
    return value, tail


def _series_extended(ker, xa, ya, check):
    if ker.dim != 1 or not ker.family.slice_compatible:
        raise BadParams("extended summation needs a scalar slice family")
    zx, zy, axis = common_slice(xa, ya)
    fx = ker.family.complex_values(zx, real=np.longdouble)
    fy = ker.family.complex_values(zy, real=np.longdouble)
    terms = fx * fy.conj()
    value = terms.sum(axis=0).astype(complex)
    mods = np.abs(terms).astype(float)
    if np.any(np.sum(np.abs(fx) ** 2, axis=0) < TINY_NORM):
        raise DomainError("kernel diagonal vanishes at an evaluation point")
    tail = tail_ratio(mods, min(10, mods.shape[0]))
    if check and np.any(tail > ker.tol):
        raise TruncationNotConverged(
            f"series tail {float(np.max(tail)):.2e} exceeds tol {ker.tol:.1e} at N={ker.N}"
        )
    return lift_complex(value, axis), tail


def choose_truncation(fam: BasisFamily, points, tol: float = 1e-12, N_max: int = 300) -> int:
    """Truncation whose last ten terms of ``sum |f_n(p)|^2`` add less than
    ``tol`` times the sum before them, at every point ``p``.

    The window is the one :func:`kernel_series` inspects for its tail
    certificate, so the returned ``N`` passes that check on the diagonal.
    """
    pts = as_quat_array(points).reshape(-1, 4)
    if fam.kind == "hermite2":
        N_max = min(N_max, MAX_INDEX_TWO)
    vals = fam.with_N(N_max).values(pts)
    t = np.sum(vals * vals, axis=-1)
    if fam.dim > 1:
        t = t.sum(axis=-1)
    t = t.max(axis=1) if t.ndim > 1 else t
    csum = np.cumsum(t)
    for N in range(0, N_max - 9):
        if t[N + 1 : N + 11].sum() < tol * csum[N]:
            return N + 10
    raise TruncationNotConverged(f"no truncation below {N_max} meets tol {tol:.1e}")


def common_slice(x, y, atol: float = 1e-12):
    """Complex coordinates of ``x`` and ``y`` on a shared slice.

    Returns ``(zx, zy, axis)``; raises :class:`SliceMismatch` when the
    imaginary parts are not parallel.
    """
    xa = as_quat_array(x)
    ya = as_quat_array(y)
    xa, ya = np.broadcast_arrays(xa, ya)
    vx = xa[..., 1:]
    vy = ya[..., 1:]
    nx = np.linalg.norm(vx, axis=-1)
    ny = np.linalg.norm(vy, axis=-1)
    cross = np.linalg.norm(np.cross(vx, vy), axis=-1)
    if np.any(cross > atol * np.maximum(nx * ny, 1.0)):
        raise SliceMismatch("arguments do not lie in a common complex slice")
    use_x = (nx >= ny)[..., None]
    ref = np.where(use_x, vx, vy)
    nref = np.maximum(nx, ny)
    axis = np.where((nref > 0)[..., None], ref / np.where(nref > 0, nref, 1.0)[..., None], [1.0, 0.0, 0.0])
    zx = xa[..., 0] + 1j * np.einsum("...i,...i->...", vx, axis)
    zy = ya[..., 0] + 1j * np.einsum("...i,...i->...", vy, axis)
    return zx, zy, axis


def _laguerre_closed(alpha, eps, z, w):
    """``(1-e)^(-1-a) exp(-e(z+conj w)/(1-e)) E_a(e z conj(w) / (1-e)^2)``."""
    wb = np.conj(w)
    u = eps * z * wb / (1.0 - eps) ** 2
    lin = -eps * (z + wb) / (1.0 - eps)
    pref = (1.0 - eps) ** (-1.0 - alpha)
    u = np.asarray(u)
    if not np.iscomplexobj(u) or np.all(np.abs(np.imag(u)) == 0):
        shape = u.shape
        ur = np.atleast_1d(np.real(u))
        lr = np.broadcast_to(np.real(lin), shape).reshape(ur.shape)
        out = np.empty(ur.shape)
        small = ur <= 400.0
        if np.any(small):
            out[small] = pref * np.exp(lr[small]) * entire_bessel_series(alpha, ur[small])
        for idx in zip(*np.nonzero(~small)):
            s = 2.0 * math.sqrt(ur[idx])
            out[idx] = pref * math.exp(lr[idx] + s - 0.5 * alpha * math.log(ur[idx])) * bessel_I_scaled(alpha, s)
        return out.reshape(shape)
    return pref * np.exp(lin) * entire_bessel_series(alpha, u)


def kernel_closed(ker: Kernel, x, y):
    """Closed-form kernel on a common slice (or on the real line)."""
    tag = ker.closed_form
    if tag is None:
        raise NoClosedForm(f"no closed form for family {ker.family.kind!r}")
    fam = ker.family
    zx, zy, axis = common_slice(x, y)
    if tag in ("hermite_real", "laguerre_real"):
        if np.any(np.imag(zx) != 0) or np.any(np.imag(zy) != 0):
            raise SliceMismatch(f"{tag} needs real arguments")
    if tag == "canonical_slice":
        if fam.kind != "monomial":
            raise NoClosedForm("canonical closed form belongs to the monomial family")
        val = np.exp(zx * np.conj(zy))
    elif tag in ("hermite_real", "hermite_complex"):
        if fam.kind != "hermite":
            raise NoClosedForm("Hermite closed form needs a Hermite family")
        e = fam.epsilon
        wb = np.conj(zy)
        val = np.exp(-(e * e) / (1 - e * e) * (zx * zx + wb * wb - (2.0 / e) * zx * wb)) / math.sqrt(
            math.pi * (1 - e * e)
        )
    else:
        if fam.kind != "laguerre":
            raise NoClosedForm("Laguerre closed form needs a Laguerre family")
        val = _laguerre_closed(fam.alpha, fam.epsilon, zx, zy)
    return lift_complex(val, axis)


def gram_matrix(ker: Kernel, points, vectors=None) -> np.ndarray:
    """``G_ij = K(x_i, x_j)`` or ``<v_i | K(x_i, x_j) v_j>`` for vector families."""
    pts = as_quat_array(points).reshape(-1, 4)
    P = pts.shape[0]
    if P > GRAM_BUDGET:
        raise BudgetExceeded(f"{P} points exceed the Gram budget of {GRAM_BUDGET}")
    if vectors is None:
        if ker.dim != 1:
            raise DimensionMismatch("vector-valued kernels need one vector per point")
        # rows of A are (f_0(x_i), ..., f_N(x_i)); G = A A^dagger
        A = np.moveaxis(ker.family.values(pts), 0, 1)
        return matmul(A, adjoint(A))
    vecs = as_quat_array(vectors)
    if vecs.shape[0] != P:
        raise DimensionMismatch("need one vector per point")
    C = np.stack([cs_vector(ker, pts[i], vecs[i]).coeffs for i in range(P)])
    # G_ij = sum_n conj(C_in) C_jn
    return matmul(qconj(C), np.moveaxis(C, 0, 1))


@dataclass(frozen=True)
class CoefficientVector:
    """Coordinates of a member of the kernel space in the basis ``f_i``."""

    coeffs: np.ndarray

    def __len__(self):
        return self.coeffs.shape[0]

    def scaled(self, q) -> "CoefficientVector":
        """Right multiplication by a quaternion."""
        qa = as_quat_array(q)
        return CoefficientVector(qmul(self.coeffs, qa))

    def __add__(self, other):
        return CoefficientVector(self.coeffs + other.coeffs)

    def inner(self, other) -> np.ndarray:
        return inner(self.coeffs, other.coeffs)

    def norm2(self) -> float:
        return float(np.sum(self.coeffs * self.coeffs))


def cs_vector(ker: Kernel, x, v) -> CoefficientVector:
    """Coefficients ``c_i = <f_i(x) | v>`` of ``K(., x) v``."""
    xa = as_quat_array(x)
    va = as_quat_array(v)
    f = ker.family.values(xa)
    if ker.dim == 1:
        return CoefficientVector(qmul(qconj(f), va))
    if va.shape != (ker.dim, 4):
        raise DimensionMismatch(f"vector must have shape ({ker.dim}, 4)")
    return CoefficientVector(qmul(qconj(f), va).sum(axis=-2))


def evaluate_member(coeffs, ker: Kernel, x) -> np.ndarray:
    """``phi(x) = sum_i f_i(x) c_i`` at one or many points."""
    c = coeffs.coeffs if isinstance(coeffs, CoefficientVector) else as_quat_array(coeffs)
    if c.shape[0] != ker.N + 1:
        raise DimensionMismatch(f"expected {ker.N + 1} coefficients, got {c.shape[0]}")
    xa = as_quat_array(x)
    f = ker.family.values(xa)
    cb = c.reshape((c.shape[0],) + (1,) * (f.ndim - 2) + (4,))
    return qmul(f, cb).sum(axis=0)


# slice-coordinate boxes (Re range, |Im| bound) on which the default
# truncations converge and closed forms were checked
VALIDATED_BOXES = {
    "monomial": ((-1.5, 1.5), 1.5),
    "hermite": ((-1.5, 1.5), 1.0),
    "laguerre": ((0.0, 4.0), 2.0),
    "hermite2": ((-1.0, 1.0), 1.0),
}
REAL_BOXES = {"monomial": (-1.5, 1.5), "hermite": (-2.0, 2.0), "laguerre": (0.0, 8.0), "hermite2": (-1.0, 1.0)}


def sample_points(kind: str, rng: np.random.Generator, n: int, domain: str = "quaternion") -> np.ndarray:
    """Random points in the validated box of a family kind.

    Quaternionic points get a uniformly random unit imaginary axis; complex
    points lie on the ``i`` slice; real points on the real axis.
    """
    if kind not in VALIDATED_BOXES:
        raise BadParams(f"no validated box for {kind!r}")
    out = np.zeros((n, 4))
    if domain in ("real", "halfline"):
        lo, hi = REAL_BOXES[kind]
        out[:, 0] = rng.uniform(lo, hi, n)
        return out
    (lo, hi), ymax = VALIDATED_BOXES[kind]
    out[:, 0] = rng.uniform(lo, hi, n)
    y = rng.uniform(-ymax, ymax, n)
    if domain == "complex":
        out[:, 1] = y
        return out
    axis = rng.standard_normal((n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    out[:, 1:] = y[:, None] * axis
    return out
