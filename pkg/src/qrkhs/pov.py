"""Positive operator-valued measures built from a kernel, and their
extension to projection-valued measures on a node-sampled L2 space.

Operators on the kernel space are written in coefficient coordinates: a
member ``phi = sum_i f_i c_i`` is the vector ``c``.  The localization
operator at ``x`` is ``F(x)_ij = conj(f_i(x)) f_j(x)`` and the measure of a
cell is ``a(Delta) = sum_{x_k in Delta} w_k F(x_k)``.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadEpsilon, BadParams, EmptyRule, IllConditionedBasis, OverlappingCells, PartitionError
from .kernels import Kernel, evaluate_member
from .qlinalg import (
    adjoint,
    condition_number,
    eigenvalues,
    hermitian_inv_sqrt,
    hermitian_sqrt,
    identity,
    inner,
    is_positive,
    matmul,
    max_abs,
    op_norm,
    rank,
)
from .quadrature import J_MEAN, MeasureRule, family_gram
from .quaternion import as_quat_array, qconj, qmul

_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}
_ALIASES = {"θ1": "theta1", "θ2": "theta2", "φ": "phi"}
VARIABLES = ("r", "theta1", "theta2", "phi", "x", "y", "x0", "x1", "x2", "x3")
# variables that depend on the axis J and so are unavailable on reduced rules
AXIS_VARIABLES = ("theta1", "phi", "x1", "x2", "x3")
_COND = re.compile(r"^\s*([A-Za-z_θφ][\w]*)\s*(<=|>=|==|!=|<|>)\s*([-+0-9.eE]+|pi|-pi|[0-9.]+\*pi)\s*$")

COND_LIMIT = 1e8


@dataclass(frozen=True)
class Cell:
    name: str
    descriptor: str
    predicate: Callable[[MeasureRule], np.ndarray] = field(compare=False, repr=False)
    variables: tuple = ()

    def mask(self, rule: MeasureRule) -> np.ndarray:
        if rule.reduction == "reduced":
            bad = [v for v in self.variables if v in AXIS_VARIABLES]
            if bad:
                raise PartitionError(f"cell {self.name!r} depends on the slice axis through {bad}; "
                                     "cells on a reduced rule may only use r, theta2, x, y")
        return np.asarray(self.predicate(rule), dtype=bool)


def _number(text: str) -> float:
    text = text.strip()
    if text.endswith("pi"):
        head = text[:-2].rstrip("*")
        factor = {"": 1.0, "-": -1.0}.get(head)
        return (float(head) if factor is None else factor) * math.pi
    return float(text)


def parse_cell(line: str) -> Cell:
    """``name: var op number & var op number ...``; ``name: *`` is the whole domain."""
    if ":" not in line:
        raise PartitionError(f"expected 'name: predicate', got {line!r}")
    name, pred = (s.strip() for s in line.split(":", 1))
    if not name:
        raise PartitionError(f"missing cell name in {line!r}")
    if pred == "*":
        return Cell(name, pred, lambda rule: np.ones(rule.size, dtype=bool))
    conds = []
    for part in pred.split("&"):
        m = _COND.match(part)
        if not m:
            raise PartitionError(f"cannot parse condition {part.strip()!r}")
        var = _ALIASES.get(m.group(1), m.group(1))
        if var not in VARIABLES:
            raise PartitionError(f"unknown variable {var!r}; use one of {VARIABLES}")
        conds.append((var, _OPS[m.group(2)], _number(m.group(3))))

    def predicate(rule, conds=tuple(conds)):
        out = np.ones(rule.size, dtype=bool)
        for var, op, val in conds:
            out &= op(rule.coords[var], val)
        return out

    return Cell(name, pred, predicate, tuple(c[0] for c in conds))


@dataclass(frozen=True)
class Partition:
    cells: tuple
    covers_domain: bool = True

    @classmethod
    def parse(cls, text: str, covers_domain: bool = True) -> "Partition":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        cells = tuple(parse_cell(ln) for ln in lines if ln)
        if not cells:
            raise PartitionError("partition has no cells")
        names = [c.name for c in cells]
        if len(set(names)) != len(names):
            raise PartitionError("cell names must be unique")
        return cls(cells, covers_domain)

    @classmethod
    def from_file(cls, path, covers_domain: bool = True) -> "Partition":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read(), covers_domain)

    @classmethod
    def whole(cls) -> "Partition":
        return cls.parse("X: *")

    @classmethod
    def singletons(cls, rule: MeasureRule) -> "Partition":
        cells = tuple(
            Cell(f"node{k}", f"node {k}", lambda rule, k=k: np.arange(rule.size) == k) for k in range(rule.size)
        )
        return cls(cells, True)

    @property
    def names(self) -> list:
        return [c.name for c in self.cells]

    def masks(self, rule: MeasureRule) -> list:
        if rule.size == 0:
            raise EmptyRule("rule has no nodes")
        masks = [c.mask(rule) for c in self.cells]
        count = np.sum(masks, axis=0)
        if np.any(count > 1):
            k = int(np.argmax(count > 1))
            hit = [c.name for c, m in zip(self.cells, masks) if m[k]]
            raise OverlappingCells(f"node {k} lies in cells {hit}")
        if self.covers_domain and np.any(count == 0):
            raise PartitionError(f"{int(np.sum(count == 0))} nodes lie in no cell")
        return masks


def radial_split(radius: float) -> Partition:
    """Two cells ``|q| < radius`` and ``|q| >= radius``."""
    return Partition.parse(f"inner: r < {radius!r}\nouter: r >= {radius!r}")


def localization_operator(ker: Kernel, x) -> np.ndarray:
    """``F(x)`` in coefficient coordinates; the rank-``d`` sum over the
    components for families into ``H^d``."""
    f = ker.family.values(as_quat_array(x))
    if ker.dim == 1:
        f = f[:, None, :]
    # F_ij = sum_l conj(f_il) f_jl
    A = np.swapaxes(f, 0, 1)
    return matmul(adjoint(A), A)


def pov_measure(ker: Kernel, rule: MeasureRule, part: Partition) -> dict:
    """``{cell name: a(cell)}`` for every cell of ``part``."""
    masks = part.masks(rule)
    return {c.name: family_gram(ker.family, rule, mask=m) for c, m in zip(part.cells, masks)}


def _node_quadratic_forms(ker: Kernel, rule: MeasureRule, c: np.ndarray) -> np.ndarray:
    """``w_k <c | F(x_k) c>`` at every node, reduced over the slice axis on
    reduced rules."""
    fam = ker.family
    if rule.reduction == "reduced":
        v = fam.complex_values(rule.slice_z, fam.N)
        E = v.conj()[:, None, :] * v[None, :, :]
        # Re<c_i | c_j> and Re(conj(c_i) k c_j) for the real and axis parts
        S = np.einsum("ia,ja->ij", c, c)
        kc = qmul(np.array([0.0, 0.0, 0.0, 1.0]), c)
        T = np.einsum("ia,ja->ij", c, kc)
        vals = np.einsum("ijk,ij->k", E.real, S) + J_MEAN[3] * np.einsum("ijk,ij->k", E.imag, T)
        return rule.weights * vals
    phi = evaluate_member(c, ker, rule.nodes)
    axes = tuple(range(1, phi.ndim))
    return rule.weights * np.sum(phi * phi, axis=axes)


@dataclass
class AdditivityReport:
    max_defect: float
    min_measure: float
    monotone: bool
    total_vs_norm: float
    measures: list


def sigma_additivity_check(ker: Kernel, rule: MeasureRule, nested: list, rng=None, trials: int = 5) -> AdditivityReport:
    """Weak sigma-additivity of ``Delta -> <phi | a(Delta) phi>`` over a
    refining sequence of partitions, for random unit ``phi``.

    Cell measures are exact (``math.fsum``) sums of per-node contributions,
    so additivity over a union of cells is checked exactly: the defect is
    the correctly rounded value of (sum over the union) minus (sum over the
    parts).  Monotonicity: partial sums over the cells of a finer partition
    never exceed the coarse cell they refine by more than rounding.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if not nested:
        raise PartitionError("need at least one partition")
    all_masks = [p.masks(rule) for p in nested]
    G = family_gram(ker.family, rule)
    max_defect = 0.0
    min_measure = math.inf
    monotone = True
    total_err = 0.0
    record = []
    for _ in range(trials):
        c = rng.standard_normal((ker.N + 1, 4))
        c /= math.sqrt(float(np.sum(c * c)))
        contrib = _node_quadratic_forms(ker, rule, c)
        level_vals = []
        for masks in all_masks:
            vals = [math.fsum(contrib[m]) for m in masks]
            level_vals.append(vals)
            min_measure = min(min_measure, min(vals))
            union = np.zeros(rule.size, dtype=bool)
            for m in masks:
                union |= m
            parts = [t for m in masks for t in contrib[m]]
            defect = abs(math.fsum(list(contrib[union]) + [-t for t in parts]))
            max_defect = max(max_defect, defect)
        for lvl in range(len(nested) - 1):
            for ci, cm in enumerate(all_masks[lvl]):
                partial = 0.0
                for fi, fm in enumerate(all_masks[lvl + 1]):
                    if np.any(fm & cm):
                        partial += level_vals[lvl + 1][fi]
                        if partial > level_vals[lvl][ci] * (1 + 1e-12) + 1e-15:
                            monotone = False
        norm_k = float(inner(c, matmul(G, c[:, None, :])[:, 0, :])[0])
        whole = math.fsum(contrib)
        total_err = max(total_err, abs(whole - norm_k))
        record.append(level_vals)
    return AdditivityReport(max_defect, min_measure, monotone, total_err, record)


def pv_projection(mask: np.ndarray) -> np.ndarray:
    """``P(Delta)`` as the 0/1 diagonal node-indicator matrix."""
    M = mask.shape[0]
    out = np.zeros((M, M, 4))
    out[np.arange(M), np.arange(M), 0] = mask.astype(float)
    return out


def pv_defects(mask: np.ndarray, dense_limit: int = 512) -> tuple[float, float]:
    """``(|P^2 - P|_max, |P - P^dagger|_max)`` for ``P = P(Delta)``; dense for
    small node sets, on the diagonal otherwise (``P`` is diagonal)."""
    if mask.size <= dense_limit:
        P = pv_projection(mask)
        return max_abs(matmul(P, P) - P), max_abs(P - adjoint(P))
    d = mask.astype(float)
    return float(np.max(np.abs(d * d - d))), 0.0


@dataclass
class DiscreteL2:
    """Node-sampled functions with the quadrature-weighted inner product.

    Coordinates are ``sqrt(w_k) phi(x_k)``, so the inner product is the
    plain quaternionic one.  ``basis_matrix`` holds ``sqrt(w_k) f_i(x_k)``.
    """

    rule: MeasureRule
    ker: Kernel
    basis_matrix: np.ndarray = field(init=False, repr=False)
    gram: np.ndarray = field(init=False, repr=False)
    projector: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.rule.reduction == "reduced":
            raise BadParams("node-space operators need point nodes; use a full or non-quaternionic rule")
        if self.ker.dim != 1:
            raise BadParams("node-space operators are implemented for scalar families")
        v = self.ker.family.values(self.rule.nodes)
        B = np.moveaxis(v, 0, 1) * np.sqrt(self.rule.weights)[:, None, None]
        self.basis_matrix = B
        self.gram = matmul(adjoint(B), B)
        cond = condition_number(self.gram)
        if not cond < COND_LIMIT:
            raise IllConditionedBasis(f"sampled basis Gram has condition number {cond:.2e}")
        Q = matmul(B, hermitian_inv_sqrt(self.gram))
        self.projector = matmul(Q, adjoint(Q))

    @property
    def size(self) -> int:
        return self.rule.size

    def projector_defects(self) -> tuple[float, float]:
        P = self.projector
        return max_abs(matmul(P, P) - P), max_abs(P - adjoint(P))

    def transport(self, a: np.ndarray) -> np.ndarray:
        """Coefficient-space operator ``a`` as ``B a B^dagger`` on nodes."""
        B = self.basis_matrix
        return matmul(matmul(B, a), adjoint(B))

    def naimark_defect(self, mask: np.ndarray, a: np.ndarray) -> float:
        P = self.projector
        lhs = matmul(matmul(P, pv_projection(mask)), P)
        return op_norm(lhs - self.transport(a))


@dataclass
class NaimarkReport:
    residual: float
    per_cell: dict
    route: str
    gram_condition: float


def naimark_residual(ker: Kernel, rule: MeasureRule, part: Partition, route: str = "compressed") -> NaimarkReport:
    """Largest spectral-norm gap between ``P_K P(Delta) P_K`` and the
    transported ``a(Delta)`` over the cells of ``part``.

    With ``B`` the weighted sampled basis and ``G = B^dagger B``,
    ``P_K = B G^-1 B^dagger`` and the gap is ``B (G^-1 a G^-1 - a) B^dagger``,
    whose norm equals ``|G^-1/2 a G^-1/2 - G^1/2 a G^1/2|``.  The ``compressed``
    route evaluates that small matrix; ``dense`` assembles the node-space
    operators (only for small point rules) and serves as its oracle.
    """
    masks = part.masks(rule)
    if route == "dense":
        space = DiscreteL2(rule, ker)
        G = space.gram
        cells = {c.name: space.naimark_defect(m, family_gram(ker.family, rule, mask=m))
                 for c, m in zip(part.cells, masks)}
    elif route == "compressed":
        G = family_gram(ker.family, rule)
        cond = condition_number(G)
        if not cond < COND_LIMIT:
            raise IllConditionedBasis(f"sampled basis Gram has condition number {cond:.2e}")
        Gm = hermitian_inv_sqrt(G)
        Gp = hermitian_sqrt(G)
        cells = {}
        for c, m in zip(part.cells, masks):
            a = family_gram(ker.family, rule, mask=m)
            cells[c.name] = op_norm(matmul(matmul(Gm, a), Gm) - matmul(matmul(Gp, a), Gp))
    else:
        raise BadParams(f"unknown route {route!r}")
    return NaimarkReport(max(cells.values()), cells, route, condition_number(G))


@dataclass
class MinimalityWitness:
    rank: int
    node_dim: int
    sigma_min: float
    dense: bool


def minimality_witness(ker: Kernel, rule: MeasureRule, part: Partition, rtol: float = 1e-10) -> MinimalityWitness:
    """Node-level spanning test for ``{P(Delta) phi}``.

    Columns ``P(Delta) B e_i`` from different cells have disjoint supports,
    so their Gram matrix is block diagonal with blocks ``a(Delta)``.  The
    spanned dimension is the sum of block ranks and the smallest singular
    value is the square root of the smallest nonzero block eigenvalue.
    """
    if rule.reduction == "reduced":
        raise BadParams("the witness needs point nodes; use a full or non-quaternionic rule")
    masks = part.masks(rule)
    total = 0
    smallest = math.inf
    blocks = [family_gram(ker.family, rule, mask=m) for m in masks]
    scale = max(max_abs(b) for b in blocks)
    for b in blocks:
        if max_abs(b) <= rtol * scale:
            continue
        rk = rank(b, rtol)
        total += rk
        ev = eigenvalues(b, tol=1e-8 * scale)
        nz = ev[-rk:]
        smallest = min(smallest, math.sqrt(max(float(nz[0]), 0.0)))
    node_dim = rule.size * ker.dim
    return MinimalityWitness(total, node_dim, smallest if total else 0.0, total == node_dim)


def check_positive(ops: dict, tol: float = 1e-9) -> dict:
    return {name: is_positive(a, tol=tol) for name, a in ops.items()}


def identity_defect(a: np.ndarray) -> float:
    return max_abs(a - identity(a.shape[0]))


@dataclass(frozen=True)
class DiagonalOperatorA:
    """``A = diag(eps^-n)`` on Hermite coefficients, ``n <= N``."""

    epsilon: float
    N: int

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def diagonal(self) -> np.ndarray:
        return self.epsilon ** -np.arange(self.N + 1, dtype=float)

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.N + 1, self.N + 1, 4))
        out[np.arange(self.N + 1), np.arange(self.N + 1), 0] = self.diagonal
        return out

    def trace_inverse(self) -> float:
        return math.fsum(self.epsilon ** n for n in range(self.N + 1))

    def apply(self, c) -> np.ndarray:
        c = as_quat_array(c)
        return c * self.diagonal[: c.shape[0], None]

    def scaled_inner_product(self, c, d) -> np.ndarray:
        """``sum_n eps^-n conj(c_n) d_n`` for Hermite coefficient vectors."""
        c = as_quat_array(c)
        d = as_quat_array(d)
        return np.sum(qmul(qconj(c), d) * self.diagonal[: c.shape[0], None], axis=0)

    def in_domain(self, c, budget: float = 1e300) -> bool:
        """Coefficient-level membership test ``sum eps^-2n |c_n|^2 < budget``."""
        c = as_quat_array(c)
        return bool(np.sum(np.sum(c * c, axis=-1) * self.diagonal[: c.shape[0]] ** 2) < budget)


def diag_operator_A(epsilon: float, N: int):
    """``(matrix, trace of the inverse, scaled inner product)`` for ``A``."""
    A = DiagonalOperatorA(epsilon, N)
    return A.matrix(), A.trace_inverse(), A.scaled_inner_product
