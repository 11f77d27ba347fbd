"""Quaternion arithmetic.

Quaternions are stored as float arrays whose last axis has length 4,
``(x0, x1, x2, x3) -> x0 + x1 i + x2 j + x3 k``.  Every array function
broadcasts over leading axes.  :class:`Quaternion` is a small immutable
scalar wrapper for interactive use; the array functions accept it
anywhere an array is expected and return a :class:`Quaternion` when all
quaternion arguments were scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModulus

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Quaternion:
    x0: float = 0.0
    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected shape (4,), got {a.shape}")
        return cls(*(float(c) for c in a))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x0, self.x1, self.x2, self.x3], dtype=dtype or float)

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.x1, self.x2, self.x3], dtype=float)

    @property
    def real(self) -> float:
        return self.x0

    @property
    def imag(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.x3)

    def conj(self) -> "Quaternion":
        return Quaternion(self.x0, -self.x1, -self.x2, -self.x3)

    def norm2(self) -> float:
        return self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3

    def __abs__(self) -> float:
        return math.sqrt(self.norm2())

    def __neg__(self):
        return Quaternion(-self.x0, -self.x1, -self.x2, -self.x3)

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Quaternion.from_array(self.as_array() + other)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Quaternion.from_array(self.as_array() - other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Quaternion.from_array(other - self.as_array())

    def __mul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Quaternion.from_array(_mul(self.as_array(), other))

    def __rmul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Quaternion.from_array(_mul(other, self.as_array()))

    def __truediv__(self, s):
        if isinstance(s, (int, float)):
            return Quaternion(self.x0 / s, self.x1 / s, self.x2 / s, self.x3 / s)
        return NotImplemented

    def __pow__(self, n: int):
        return qpow(self, n)

    def isclose(self, other, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.as_array() - np.asarray(other, dtype=float)) <= atol))

    def __repr__(self) -> str:
        return f"Quaternion({self.x0!r}, {self.x1!r}, {self.x2!r}, {self.x3!r})"


def _coerce(x):
    if isinstance(x, Quaternion):
        return x.as_array()
    if isinstance(x, (int, float, np.floating, np.integer)):
        return np.array([float(x), 0.0, 0.0, 0.0])
    return None


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def as_quat_array(q) -> np.ndarray:
    """Return ``q`` as a float array with trailing axis 4.

    Real scalars and real arrays without a trailing 4-axis are NOT promoted
    automatically; use :func:`from_real` for that.
    """
    if isinstance(q, Quaternion):
        return q.as_array()
    a = np.asarray(q, dtype=float)
    if a.ndim == 0 or a.shape[-1] != 4:
        raise ValueError(f"quaternion array must have trailing axis 4, got shape {a.shape}")
    return a


def from_real(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (4,))
    out[..., 0] = x
    return out


def from_complex(z, axis=(0.0, 1.0, 0.0)) -> np.ndarray:
    """Embed complex numbers into the slice spanned by 1 and the unit
    imaginary quaternion ``axis`` (given by its three imaginary components)."""
    z = np.asarray(z, dtype=complex)
    ax = np.asarray(axis, dtype=float)
    out = np.empty(z.shape + (4,))
    out[..., 0] = z.real
    out[..., 1:] = z.imag[..., None] * ax
    return out


def _wrap(result, *args):
    if all(isinstance(a, (Quaternion, int, float)) for a in args) and any(
        isinstance(a, Quaternion) for a in args
    ):
        return Quaternion.from_array(result)
    return result


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def qmul(a, b):
    """Hamilton product ``a * b`` (broadcasting)."""
    return _wrap(_mul(as_quat_array(_promote(a)), as_quat_array(_promote(b))), a, b)


def _promote(x):
    if isinstance(x, (int, float)):
        return np.array([float(x), 0.0, 0.0, 0.0])
    return x


def qconj(q):
    a = as_quat_array(q)
    out = a.copy()
    out[..., 1:] *= -1.0
    return _wrap(out, q)


def qnorm2(q):
    a = as_quat_array(q)
    out = np.einsum("...i,...i->...", a, a)
    if isinstance(q, Quaternion):
        return float(out)
    return out


def qabs(q):
    return np.sqrt(qnorm2(q))


def qpow(q, n: int):
    """``q**n`` for an integer ``n >= 0`` by repeated squaring."""
    if int(n) != n or n < 0:
        raise ValueError("qpow needs a nonnegative integer exponent")
    n = int(n)
    base = as_quat_array(q)
    result = np.zeros(base.shape)
    result[..., 0] = 1.0
    while n:
        if n & 1:
            result = _mul(result, base)
        n >>= 1
        if n:
            base = _mul(base, base)
    return _wrap(result, q)


def unit_imaginary(theta1, phi) -> np.ndarray:
    """``J(theta1, phi) = i sin(theta1) cos(phi) + j sin(theta1) sin(phi) + k cos(theta1)``."""
    theta1 = np.asarray(theta1, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(theta1)
    out = np.zeros(np.broadcast(theta1, phi).shape + (4,))
    out[..., 1] = s * np.cos(phi)
    out[..., 2] = s * np.sin(phi)
    out[..., 3] = np.cos(theta1)
    return out


@dataclass(frozen=True)
class PolarForm:
    """``q = r (cos theta2 + J sin theta2)`` with ``J = J(theta1, phi)`` on the
    closed upper hemisphere (``theta1`` in [0, pi/2]).

    ``degenerate`` marks purely real input, where ``J`` is set to ``k`` by
    convention.
    """

    r: float
    theta2: float
    theta1: float
    phi: float
    degenerate: bool = False

    @property
    def J(self) -> Quaternion:
        return Quaternion.from_array(unit_imaginary(self.theta1, self.phi))


def polar_coordinates(q):
    """Vectorised polar decomposition.

    Returns ``(r, theta1, theta2, phi)`` arrays.  Zero quaternions get
    ``r = 0`` and zero angles; real quaternions get ``J = k``.
    """
    a = as_quat_array(q)
    x0 = a[..., 0]
    v = a[..., 1:]
    s = np.sqrt(np.einsum("...i,...i->...", v, v))
    r = np.sqrt(x0 * x0 + s * s)
    safe = np.where(s > 0, s, 1.0)
    n = v / safe[..., None]
    # fold onto the upper hemisphere; on the rim (n_z == 0) keep n as is
    flip = n[..., 2] < 0
    n = np.where(flip[..., None], -n, n)
    y = np.where(flip, -s, s)
    theta1 = np.arctan2(np.hypot(n[..., 0], n[..., 1]), n[..., 2])
    phi = np.mod(np.arctan2(n[..., 1], n[..., 0]), TWO_PI)
    theta2 = np.mod(np.arctan2(y, x0), TWO_PI)
    real = s == 0
    theta1 = np.where(real, 0.0, theta1)
    phi = np.where(real, 0.0, phi)
    # mod can return exactly 2*pi for tiny negative inputs
    theta2 = np.where(theta2 >= TWO_PI, 0.0, theta2)
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    return r, theta1, theta2, phi


def to_polar(q) -> PolarForm:
    a = as_quat_array(q)
    if a.shape != (4,):
        raise ValueError("to_polar takes a single quaternion; use polar_coordinates for arrays")
    if not np.any(a):
        raise DegenerateModulus("the zero quaternion has no polar form")
    r, theta1, theta2, phi = (float(t) for t in polar_coordinates(a))
    degenerate = not np.any(a[1:])
    return PolarForm(r=r, theta2=theta2, theta1=theta1, phi=phi, degenerate=degenerate)


def from_polar_coords(r, theta1, theta2, phi) -> np.ndarray:
    J_ = unit_imaginary(theta1, phi)
    r = np.asarray(r, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    out = J_ * (r * np.sin(theta2))[..., None]
    out[..., 0] = r * np.cos(theta2)
    return out


def from_polar(p: PolarForm) -> Quaternion:
    return Quaternion.from_array(from_polar_coords(p.r, p.theta1, p.theta2, p.phi))


def slice_parts(q):
    """Split ``q = x + J y`` with ``y >= 0``.

    Returns ``(x, y, axis)`` where ``axis`` holds the imaginary components of
    the unit quaternion ``J``; for real ``q`` the axis defaults to ``i``.
    """
    a = as_quat_array(q)
    v = a[..., 1:]
    y = np.sqrt(np.einsum("...i,...i->...", v, v))
    safe = np.where(y > 0, y, 1.0)
    axis = v / safe[..., None]
    default = np.zeros_like(axis)
    default[..., 0] = 1.0
    axis = np.where((y > 0)[..., None], axis, default)
    return a[..., 0], y, axis


def lift_complex(z, axis) -> np.ndarray:
    """Map ``z = a + i b`` to ``a + J b`` where ``J`` has imaginary part ``axis``."""
    z = np.asarray(z, dtype=complex)
    axis = np.asarray(axis, dtype=float)
    out = np.empty(np.broadcast_shapes(z.shape, axis.shape[:-1]) + (4,))
    out[..., 0] = z.real
    out[..., 1:] = z.imag[..., None] * axis
    return out
