"""Randomized algebraic property suites for quaternions and quaternionic
vectors and matrices.

Each suite draws ``cases`` random instances from a seeded generator and
returns the worst observed violation next to the allowed tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qlinalg import adjoint, embed_complex, matmul, right_scale
from .quaternion import I, J, K, _mul, qconj

UNITS = (I, J, K)


@dataclass
class SuiteResult:
    name: str
    cases: int
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)


def _batched_inner(u, v):
    """``<u|v>`` along axis -2 for stacks of vectors ``(..., d, 4)``."""
    return np.sum(_mul(qconj(u), v), axis=-2)


def _norm2(u):
    return np.sum(u * u, axis=(-2, -1))


def norm_multiplicativity(rng, cases: int = 5000, tol: float = 1e-13) -> SuiteResult:
    """``|p q|^2 = |p|^2 |q|^2``, relative error."""
    p = rng.standard_normal((cases, 4))
    q = rng.standard_normal((cases, 4))
    lhs = np.sum(_mul(p, q) ** 2, axis=-1)
    rhs = np.sum(p * p, axis=-1) * np.sum(q * q, axis=-1)
    return SuiteResult("norm multiplicativity", cases, float(np.max(np.abs(lhs - rhs) / rhs)), tol)


def conj_antihomomorphism(rng, cases: int = 5000, tol: float = 0.0) -> SuiteResult:
    """``conj(p q) = conj(q) conj(p)``; exact on small integer quaternions."""
    p = rng.integers(-9, 10, (cases, 4)).astype(float)
    q = rng.integers(-9, 10, (cases, 4)).astype(float)
    diff = qconj(_mul(p, q)) - _mul(qconj(q), qconj(p))
    return SuiteResult("conj anti-homomorphism", cases, float(np.max(np.abs(diff))), tol)


def polarization(rng, cases: int = 2000, d: int = 4, tol: float = 1e-11) -> SuiteResult:
    """``4<phi|psi>`` from the four norm differences with ``1, i, j, k``."""
    phi = rng.standard_normal((cases, d, 4))
    psi = rng.standard_normal((cases, d, 4))
    total = np.zeros((cases, 4))
    total[:, 0] = _norm2(phi + psi) - _norm2(phi - psi)
    for n, u in enumerate(UNITS, start=1):
        pu = _mul(phi, u.as_array())
        total[:, n] = _norm2(pu + psi) - _norm2(pu - psi)
    exact = 4.0 * _batched_inner(phi, psi)
    scale = 4.0 * np.sqrt(_norm2(phi) * _norm2(psi))
    worst = np.max(np.linalg.norm(total - exact, axis=-1) / scale)
    return SuiteResult("polarization identity", cases, float(worst), tol)


def cauchy_schwarz(rng, cases: int = 5000, d: int = 4, tol: float = 1e-12) -> SuiteResult:
    """``|<phi|psi>|^2 <= <phi|phi><psi|psi> (1 + tol)``; worst is the largest
    relative excess of the left side."""
    phi = rng.standard_normal((cases, d, 4))
    psi = rng.standard_normal((cases, d, 4))
    # include nearly parallel pairs, where the bound is tight
    psi[: cases // 2] = right_scale(phi[: cases // 2], rng.standard_normal(4)) + 1e-8 * psi[: cases // 2]
    ip = _batched_inner(phi, psi)
    lhs = np.sum(ip * ip, axis=-1)
    rhs = _norm2(phi) * _norm2(psi)
    return SuiteResult("Cauchy-Schwarz", cases, float(np.max(lhs / rhs - 1.0)), tol)


def positive_operator_inequality(rng, cases: int = 1000, d: int = 4, tol: float = 1e-10) -> SuiteResult:
    """``|A phi|^2 <= |A| <A phi|phi>`` for positive ``A = B^dagger B``;
    worst is the largest relative excess."""
    worst = -np.inf
    for _ in range(cases):
        B = rng.standard_normal((d, d, 4))
        A = matmul(adjoint(B), B)
        phi = rng.standard_normal((d, 1, 4))
        Aphi = matmul(A, phi)
        lhs = float(np.sum(Aphi * Aphi))
        # Re <A phi | phi>; the imaginary part vanishes for Hermitian A
        quad = float(np.sum(Aphi * phi))
        norm = float(np.linalg.eigvalsh(embed_complex(A))[-1])
        worst = max(worst, lhs / (norm * quad) - 1.0)
    return SuiteResult("positive operator inequality", cases, float(worst), tol)


def run_all(seed: int = 0, scale: float = 1.0) -> list:
    """All suites with case counts multiplied by ``scale``."""
    rng = np.random.default_rng(seed)
    n = lambda c: max(10, int(c * scale))  # noqa: E731
    return [
        norm_multiplicativity(rng, n(5000)),
        conj_antihomomorphism(rng, n(5000)),
        polarization(rng, n(2000)),
        cauchy_schwarz(rng, n(5000)),
        positive_operator_inequality(rng, n(1000)),
    ]
