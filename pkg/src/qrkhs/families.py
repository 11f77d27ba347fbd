"""Basis families: monomials, Hermite, Laguerre and two-index Hermite.

Every family here is a polynomial in one quaternionic variable ``q`` (the
two-index family also uses ``conj(q) = 2 Re q - q``), so on the slice
``q = x + J y`` its values are the complex values at ``z = x + i y`` with
``i`` replaced by ``J``.  Bulk evaluation uses exactly that: a complex
three-term recurrence followed by a lift into the slice of each point.
The scalar helpers :func:`hermite`, :func:`laguerre` and :func:`hermite2`
work in quaternion arithmetic and serve as independent cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    BadEpsilon,
    BadParams,
    DomainError,
    IndexOutOfRange,
    IndexTooLarge,
    InsufficientSamples,
)
from .quaternion import Quaternion, as_quat_array, lift_complex, qconj, qmul, qpow, slice_parts
from .qlinalg import embed_complex
from .special import log_gamma

MAX_INDEX = 300
MAX_INDEX_TWO = 100

KINDS = ("monomial", "hermite", "laguerre", "hermite2", "custom")
DOMAINS = ("real", "complex", "quaternion", "halfline")


def _qarray(q) -> np.ndarray:
    return as_quat_array(q)


def _to_scalar(x, q):
    return Quaternion.from_array(x) if isinstance(q, Quaternion) else x


# scalar evaluators in quaternion arithmetic

def hermite(n: int, q):
    """Physicists' Hermite polynomial ``H_n(q)`` by ``H_{n+1} = 2q H_n - 2n H_{n-1}``."""
    if n < 0:
        raise IndexOutOfRange(f"negative index {n}")
    if n > MAX_INDEX:
        raise IndexTooLarge(f"hermite index {n} exceeds {MAX_INDEX}")
    qa = _qarray(q)
    prev = np.zeros(qa.shape)
    cur = np.zeros(qa.shape)
    cur[..., 0] = 1.0
    for k in range(n):
        nxt = 2.0 * qmul(qa, cur) - 2.0 * k * prev
        prev, cur = cur, nxt
    return _to_scalar(cur, q)


def laguerre(alpha: float, n: int, q):
    """Generalized Laguerre ``L^a_n(q)`` by the three-term recurrence
    ``(k+1) L_{k+1} = (2k+a+1-q) L_k - (k+a) L_{k-1}``."""
    _check_alpha(alpha)
    if n < 0:
        raise IndexOutOfRange(f"negative index {n}")
    if n > MAX_INDEX:
        raise IndexTooLarge(f"laguerre index {n} exceeds {MAX_INDEX}")
    qa = _qarray(q)
    prev = np.zeros(qa.shape)
    cur = np.zeros(qa.shape)
    cur[..., 0] = 1.0
    for k in range(n):
        nxt = (2 * k + alpha + 1) * cur - qmul(qa, cur) - (k + alpha) * prev
        prev, cur = cur, nxt / (k + 1)
    return _to_scalar(cur, q)


def laguerre_explicit(alpha: float, n: int, q):
    """The defining sum ``sum_k G(n+a+1) / (G(k+a+1) G(n-k+1) k!) (-q)^k``.

    Suffers cancellation for large ``n |q|``; kept as a reference form.
    """
    _check_alpha(alpha)
    if n > MAX_INDEX:
        raise IndexTooLarge(f"laguerre index {n} exceeds {MAX_INDEX}")
    qa = _qarray(q)
    total = np.zeros(qa.shape)
    power = np.zeros(qa.shape)
    power[..., 0] = 1.0
    lg = log_gamma(n + alpha + 1)
    for k in range(n + 1):
        coef = math.exp(lg - log_gamma(k + alpha + 1) - log_gamma(n - k + 1) - log_gamma(k + 1))
        total = total + coef * power
        power = -qmul(qa, power)
    return _to_scalar(total, q)


def hermite2(n: int, m: int, q, signed: bool = True):
    """Two-index Hermite polynomial

        H_{n,m}(q, conj q) = n! m! sum_j c_j conj(q)^(n-j) q^(m-j) / ((n-j)! (m-j)!)

    with ``c_j = (-1)^j / j!`` when ``signed`` (the orthogonal family) and
    ``c_j = 1`` otherwise.  Conjugate powers stay on the left of each term.
    """
    if min(n, m) < 0:
        raise IndexOutOfRange("negative index")
    if max(n, m) > MAX_INDEX_TWO:
        raise IndexTooLarge(f"two-index Hermite indices must be <= {MAX_INDEX_TWO}")
    qa = _qarray(q)
    qb = qconj(qa)
    total = np.zeros(qa.shape)
    lf = log_gamma(n + 1) + log_gamma(m + 1)
    for j in range(min(n, m) + 1):
        mag = math.exp(lf - log_gamma(n - j + 1) - log_gamma(m - j + 1))
        if signed:
            mag *= (-1) ** j / math.factorial(j)
        total = total + mag * qmul(qpow(qb, n - j), qpow(qa, m - j))
    return _to_scalar(total, q)


def _check_alpha(alpha):
    if alpha is None or not alpha > -1.0:
        raise DomainError(f"Laguerre order must exceed -1, got {alpha}")


# complex recurrences producing all indices 0..N at once; ``real`` selects
# the working precision (np.longdouble gives extended accumulation)

def _start(z, N, real):
    ctype = np.result_type(real, np.complex64)
    z = np.asarray(z).astype(ctype)
    return z, np.empty((N + 1,) + z.shape, dtype=ctype), real


def monomial_values_c(z, N: int, real=np.float64) -> np.ndarray:
    z, out, R = _start(z, N, real)
    out[0] = 1.0
    for n in range(N):
        out[n + 1] = out[n] * z / np.sqrt(R(n + 1))
    return out


def hermite_values_c(z, N: int, eps: float, real=np.float64) -> np.ndarray:
    """``eps^(n/2) h_n(z)`` with ``h_n`` the orthonormal Hermite functions'
    polynomial part (``h_0 = pi^(-1/4)``)."""
    z, out, R = _start(z, N, real)
    e = R(eps)
    se = np.sqrt(e)
    out[0] = math.pi ** -0.25
    if N >= 1:
        out[1] = se * np.sqrt(R(2)) * z * out[0]
    for n in range(1, N):
        out[n + 1] = se * np.sqrt(R(2) / R(n + 1)) * z * out[n] - e * np.sqrt(R(n) / R(n + 1)) * out[n - 1]
    return out


def laguerre_values_c(z, N: int, alpha: float, eps: float, real=np.float64) -> np.ndarray:
    """``eps^(n/2) Lhat^a_n(z)`` with ``Lhat = sqrt(n!/G(n+a+1)) L``."""
    z, out, R = _start(z, N, real)
    e = R(eps)
    a = R(alpha)
    se = np.sqrt(e)
    out[0] = math.exp(-0.5 * log_gamma(alpha + 1.0))
    if N >= 1:
        out[1] = se * (a + 1 - z) * out[0] / np.sqrt(a + 1)
    for n in range(1, N):
        c1 = se / np.sqrt(R(n + 1) * (n + a + 1))
        c2 = e * np.sqrt(R(n) * (n + a) / (R(n + 1) * (n + a + 1)))
        out[n + 1] = c1 * (2 * n + a + 1 - z) * out[n] - c2 * out[n - 1]
    return out


def hermite2_values_c(z, N: int, n_fixed: int, real=np.float64) -> np.ndarray:
    """``H_{n,m}(z, conj z) / sqrt(n! m!)`` for fixed ``n`` and ``m = 0..N``.

    Built from ``H_{k,m+1} = z H_{k,m} - k H_{k-1,m}`` over ``k <= n``.
    """
    z, out, R = _start(z, N, real)
    zb = z.conj()
    # row k holds normalized H_{k, m} for the current m
    rows = np.empty((n_fixed + 1,) + z.shape, dtype=out.dtype)
    rows[0] = 1.0
    for k in range(n_fixed):
        rows[k + 1] = zb * rows[k] / np.sqrt(R(k + 1))
    out[0] = rows[n_fixed]
    roots = np.sqrt(np.arange(1, n_fixed + 1, dtype=R)).reshape((-1,) + (1,) * z.ndim)
    for m in range(N):
        new = z * rows
        new[1:] -= roots * rows[:-1]
        rows = new / np.sqrt(R(m + 1))
        out[m + 1] = rows[n_fixed]
    return out


@dataclass(frozen=True)
class BasisFamily:
    """An indexed family ``f_0, ..., f_N`` of functions into the quaternions
    (or into ``H^dim`` for custom vector-valued families).

    ``epsilon`` weights Hermite and Laguerre members by ``eps^(n/2)``;
    ``alpha`` is the Laguerre order; ``fixed`` is the frozen first index of
    the two-index Hermite family.  ``func`` backs ``kind="custom"`` and must
    map a quaternion array ``(..., 4)`` to ``(N+1, ..., 4)`` (or
    ``(N+1, ..., dim, 4)``).
    """

    kind: str
    N: int
    epsilon: float = 1.0
    alpha: Optional[float] = None
    domain: str = "quaternion"
    fixed: int = 0
    dim: int = 1
    func: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParams(f"unknown family kind {self.kind!r}")
        if self.domain not in DOMAINS:
            raise BadParams(f"unknown domain {self.domain!r}")
        if self.N < 0:
            raise BadParams("truncation N must be >= 0")
        if self.N > MAX_INDEX:
            raise IndexTooLarge(f"truncation {self.N} exceeds {MAX_INDEX}")
        if not (0.0 < self.epsilon <= 1.0):
            raise BadEpsilon(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.kind == "monomial" and self.epsilon != 1.0:
            raise BadEpsilon("monomial family takes epsilon = 1")
        if self.kind in ("hermite", "laguerre") and self.epsilon >= 1.0:
            raise BadEpsilon(f"{self.kind} family needs epsilon < 1")
        if self.kind == "laguerre":
            _check_alpha(self.alpha)
        if self.kind == "hermite2" and (self.fixed < 0 or max(self.fixed, self.N) > MAX_INDEX_TWO):
            raise IndexTooLarge("two-index Hermite indices must lie in [0, 100]")
        if self.kind == "custom" and self.func is None:
            raise BadParams("custom family needs func")

    def with_N(self, N: int) -> "BasisFamily":
        return BasisFamily(self.kind, N, self.epsilon, self.alpha, self.domain, self.fixed, self.dim, self.func)

    @property
    def slice_compatible(self) -> bool:
        return self.kind != "custom"

    def complex_values(self, z, N: int | None = None, real=np.float64) -> np.ndarray:
        """Members ``0..N`` at complex points, shape ``(N+1, *z.shape)``,
        computed in the floating type ``real``."""
        N = self.N if N is None else N
        if self.kind == "monomial":
            return monomial_values_c(z, N, real)
        if self.kind == "hermite":
            return hermite_values_c(z, N, self.epsilon, real)
        if self.kind == "laguerre":
            return laguerre_values_c(z, N, self.alpha, self.epsilon, real)
        if self.kind == "hermite2":
            return hermite2_values_c(z, N, self.fixed, real)
        raise BadParams("custom families have no complex form")

    def values(self, q, N: int | None = None) -> np.ndarray:
        """Members ``0..N`` at quaternion points ``q`` of shape ``(..., 4)``.

        Returns ``(N+1, ..., 4)`` (scalar families) or ``(N+1, ..., dim, 4)``.
        """
        qa = _qarray(q)
        if self.kind == "custom":
            vals = np.asarray(self.func(qa), dtype=float)
            if N is not None:
                vals = vals[: N + 1]
            return vals
        x, y, axis = slice_parts(qa)
        c = self.complex_values(x + 1j * y, N)
        return lift_complex(c, axis)

    def value(self, n: int, q):
        if not 0 <= n <= self.N:
            raise IndexOutOfRange(f"index {n} outside 0..{self.N}")
        v = self.values(q, n)[n]
        return _to_scalar(v, q)

    def norm_function(self, q) -> np.ndarray:
        """Truncated ``N(q) = sum_n |f_n(q)|^2``."""
        v = self.values(q)
        mod2 = np.sum(v * v, axis=-1).sum(axis=0)
        return mod2 if self.dim == 1 else mod2.sum(axis=-1)


def family_eval(fam: BasisFamily, n: int, q):
    """The ``n``-th normalized, weighted member of ``fam`` at ``q``."""
    return fam.value(n, q)


def monomial(N: int, domain: str = "quaternion") -> BasisFamily:
    return BasisFamily("monomial", N, domain=domain)


def hermite_family(epsilon: float, N: int, domain: str = "quaternion") -> BasisFamily:
    return BasisFamily("hermite", N, epsilon=epsilon, domain=domain)


def laguerre_family(alpha: float, epsilon: float, N: int, domain: str = "quaternion") -> BasisFamily:
    return BasisFamily("laguerre", N, epsilon=epsilon, alpha=alpha, domain=domain)


def hermite2_family(fixed: int, N: int) -> BasisFamily:
    return BasisFamily("hermite2", N, fixed=fixed)


def tail_ratio(terms: np.ndarray, window: int = 10) -> np.ndarray:
    """Share of the last ``window`` terms in the partial sum of ``|terms|``
    along axis 0; the truncation certificate used throughout."""
    a = np.abs(np.asarray(terms))
    total = a.sum(axis=0)
    tail = a[-window:].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, tail / total, 0.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: float
    detail: str = ""


@dataclass
class AdmissibilityReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def admissibility_report(fam: BasisFamily, samples, tol: float = 1e-10) -> AdmissibilityReport:
    """Check the three kernel-admissibility conditions on sample points.

    (a) ``N(x)`` is finite at each sample; witness is the largest tail ratio.
    (b) the members are linearly independent on the samples; witness is the
        smallest singular value of the complex embedding of ``[f_i(x_j)]``.
    (c) at each sample some member is nonzero; witness is
        ``min_x max_i |f_i(x)|``.
    """
    pts = _qarray(samples)
    if pts.ndim == 1:
        pts = pts[None]
    if pts.shape[0] * fam.dim < fam.N + 1:
        raise InsufficientSamples(f"need at least {fam.N + 1} samples, got {pts.shape[0]}")
    vals = fam.values(pts)
    if fam.dim == 1:
        vals = vals[..., None, :]
    # vals: (N+1, P, dim, 4)
    mod2 = np.sum(vals * vals, axis=-1)
    terms = mod2.sum(axis=2)
    Nx = terms.sum(axis=0)
    finite = bool(np.all(np.isfinite(Nx)))
    ratios = tail_ratio(terms, min(10, terms.shape[0]))
    check_a = CheckResult("a", finite, float(np.max(ratios)), "finite norm function, largest tail ratio")

    P = vals.shape[1]
    mat = np.transpose(vals, (1, 2, 0, 3)).reshape(P * fam.dim, fam.N + 1, 4)
    s = np.linalg.svd(embed_complex(mat), compute_uv=False)
    smin = float(s[-1]) if s.size else 0.0
    check_b = CheckResult("b", smin > tol, smin, "smallest singular value of sample matrix")

    peak = np.sqrt(mod2.max(axis=(0, 2)))
    wit_c = float(peak.min())
    check_c = CheckResult("c", wit_c > 0.0, wit_c, "min over samples of max member modulus")
    return AdmissibilityReport([check_a, check_b, check_c])
