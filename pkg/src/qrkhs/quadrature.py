"""Measures on the reals, the complex plane and the quaternions, with
concrete quadrature rules.

Quaternionic measures here all factor as ``rho(x, y) dx dy`` on a slice
``q = x + J y`` times the normalized hemisphere measure
``sin(theta1) dtheta1 dphi / (2 pi)`` on the axis ``J``.  Two rule layouts
are offered for them:

``full``
    a 4D tensor rule (slice nodes x Gauss-Legendre in ``cos theta1`` x
    periodic trapezoid in ``phi``); integrates any integrand.
``reduced``
    slice nodes only.  An integrand that maps each slice into itself,
    ``F(x + J y) = a(x, y) + J b(x, y)`` with real ``a, b``, integrates to
    ``int a + Jbar int b`` where ``Jbar = k/2`` is the hemisphere mean of
    ``J``.  Integrands are evaluated on the ``i`` slice.

Complex and real measures use the layout ``none`` with nodes on the ``i``
slice or the real axis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadEpsilon, BadParams, BudgetExceeded, DomainError, EmptyRule, NotSliceFunction
from .families import BasisFamily
from .kernels import Kernel, kernel_series
from .qlinalg import adjoint, join, matmul
from .quaternion import as_quat_array, polar_coordinates, qconj, qmul
from .special import bessel_K_scaled, log_gamma

SCHEMA = 1
MAX_NODES = 5_000_000
CHUNK = 65536

QUAT_KINDS = ("canonical", "hermite_quat", "laguerre_quat", "two_index")
COMPLEX_KINDS = ("hermite_complex", "laguerre_complex")
REAL_KINDS = ("real_hermite", "real_laguerre")
KINDS = QUAT_KINDS + COMPLEX_KINDS + REAL_KINDS

# mean of J(theta1, phi) over the normalized upper hemisphere
J_MEAN = np.array([0.0, 0.0, 0.0, 0.5])


@dataclass(eq=False)
class MeasureRule:
    kind: str
    params: dict
    reduction: str
    orders: dict
    degree: int
    tail: float
    radius: float | None
    nodes: np.ndarray
    weights: np.ndarray
    coords: dict = field(repr=False)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def slice_z(self) -> np.ndarray:
        """Complex slice coordinate ``x + i y`` of every node."""
        return self.coords["x"] + 1j * self.coords["y"]

    def provenance(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "reduction": self.reduction,
            "orders": dict(self.orders),
            "degree": self.degree,
            "tail": self.tail,
            "radius": self.radius,
            "nodes": self.size,
        }

    def to_json(self) -> str:
        d = self.provenance()
        d["schema"] = SCHEMA
        d["node_values"] = self.nodes.tolist()
        d["weight_values"] = self.weights.tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "MeasureRule":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise BadParams(f"unsupported rule schema {d.get('schema')!r}")
        nodes = np.asarray(d["node_values"], dtype=float).reshape(-1, 4)
        weights = np.asarray(d["weight_values"], dtype=float)
        return cls(d["kind"], d["params"], d["reduction"], d["orders"], d["degree"], d["tail"],
                   d["radius"], nodes, weights, _node_coords(nodes, d["reduction"]))


def _node_coords(nodes: np.ndarray, reduction: str) -> dict:
    coords = {"x0": nodes[:, 0], "x1": nodes[:, 1], "x2": nodes[:, 2], "x3": nodes[:, 3], "x": nodes[:, 0]}
    if reduction == "full":
        r, theta1, theta2, phi = polar_coordinates(nodes)
        coords.update(r=r, theta1=theta1, theta2=theta2, phi=phi, y=r * np.sin(theta2))
    else:
        # nodes sit on the i slice (or the real axis)
        y = nodes[:, 1]
        coords.update(r=np.hypot(nodes[:, 0], y), y=y,
                      theta2=np.mod(np.arctan2(y, nodes[:, 0]), 2 * math.pi))
    return coords


# one-dimensional building blocks

def gauss_legendre_panels(edges, n: int):
    xg, wg = np.polynomial.legendre.leggauss(n)
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1, None]
    b = edges[1:, None]
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg
    return x.ravel(), w.ravel()


def periodic_trapezoid(M: int):
    t = 2.0 * math.pi * np.arange(M) / M
    return t, np.full(M, 2.0 * math.pi / M)


def gauss_hermite_scaled(n: int, a: float):
    """Nodes and weights for ``exp(-a x^2) dx`` on the real line."""
    t, w = np.polynomial.hermite.hermgauss(n)
    s = 1.0 / math.sqrt(a)
    return t * s, w * s


def gauss_laguerre_general(n: int, alpha: float):
    """Gauss rule for ``x^alpha exp(-x) dx`` on ``[0, inf)`` by Golub-Welsch."""
    k = np.arange(n)
    diag = 2 * k + alpha + 1.0
    off = np.sqrt(np.arange(1, n) * (np.arange(1, n) + alpha))
    J = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    x, v = np.linalg.eigh(J)
    w = math.exp(log_gamma(alpha + 1.0)) * v[0] ** 2
    return x, w


def hemisphere_rule(n_theta1: int, n_phi: int):
    """Normalized rule on the upper hemisphere: Gauss-Legendre in
    ``u = cos theta1`` on [0, 1] (``sin theta1 dtheta1 = du``) times the
    periodic trapezoid in ``phi``; weights sum to 1."""
    u, wu = gauss_legendre_panels([0.0, 1.0], n_theta1)
    phi, wp = periodic_trapezoid(n_phi)
    theta1 = np.arccos(u)
    T1, PH = np.meshgrid(theta1, phi, indexing="ij")
    W = np.outer(wu, wp) / (2.0 * math.pi)
    return T1.ravel(), PH.ravel(), W.ravel()


# radii

def gamma_tail_point(shape: float, log_tail: float) -> float:
    """Smallest ``x > shape`` (on a 1/8 grid) where the regularized upper
    incomplete gamma ``Q(shape, x)`` is certainly below ``exp(log_tail)``.

    Uses ``Q(s, x) <= x^(s-1) e^-x / (Gamma(s) (1 - (s-1)/x))`` for ``x > s - 1``.
    """
    x = max(shape, 1.0) + 1.0
    lg = log_gamma(shape)
    while True:
        bound = (shape - 1.0) * math.log(x) - x - lg - math.log(1.0 - max(shape - 1.0, 0.0) / x)
        if bound <= log_tail:
            return x
        x += 0.125


def _even(m: int) -> int:
    return int(m) + (int(m) % 2)


# slice (2D) rules, returned as (x, y, w)

def _canonical_slice(orders, degree, tail):
    # r^(degree+1) e^(-r^2) dr is a gamma density in r^2 with shape (degree+2)/2
    R = math.sqrt(gamma_tail_point(0.5 * (degree + 2), math.log(tail)))
    width = orders["panel"]
    edges = np.linspace(0.0, R, max(1, int(math.ceil(R / width))) + 1)
    r, wr = gauss_legendre_panels(edges, orders["radial"])
    t, wt = periodic_trapezoid(orders["angular"])
    Rg, Tg = np.meshgrid(r, t, indexing="ij")
    W = np.outer(wr * r * np.exp(-r * r) / math.pi, wt)
    return Rg * np.cos(Tg), Rg * np.sin(Tg), W, R


def _hermite_slice(eps, orders):
    a = 2.0 * eps / (1.0 + eps)
    b = 2.0 * eps / (1.0 - eps)
    x, wx = gauss_hermite_scaled(orders["nx"], a)
    y, wy = gauss_hermite_scaled(orders["ny"], b)
    pref = 2.0 * eps / math.sqrt(math.pi * (1.0 - eps * eps))
    X, Y = np.meshgrid(x, y, indexing="ij")
    return X, Y, pref * np.outer(wx, wy), None


def laguerre_radius(eps: float, alpha: float, degree: int, tail: float) -> float:
    """Radius beyond which the Laguerre measure carries less than ``tail`` of
    the mass of degree-``degree`` polynomials.  The Bessel-K factor against
    the growing exponential decays like ``r^-1/2 exp(-a r)`` with
    ``a = 2 sqrt(eps) / (1 + sqrt(eps))``, giving a gamma tail."""
    decay = 2.0 * math.sqrt(eps) / (1.0 - eps) - 2.0 * eps / (1.0 - eps)
    return gamma_tail_point(degree + alpha + 1.5, math.log(tail)) / decay


def _laguerre_slice(eps, alpha, orders, degree, tail):
    c = eps / (1.0 - eps)
    b = 2.0 * math.sqrt(eps) / (1.0 - eps)
    R = laguerre_radius(eps, alpha, degree, tail)
    # geometric grading toward the log/power singularity of K_alpha at 0
    grade = np.geomspace(2.0 ** -orders["grading"], 1.0, orders["grading"] + 1)
    width = orders["panel"]
    outer = np.linspace(1.0, R, max(1, int(math.ceil((R - 1.0) / width))) + 1)
    edges = np.concatenate([[0.0], grade, outer[1:]])
    r, wr = gauss_legendre_panels(edges, orders["radial"])
    M = orders["angular"]
    t, wt = periodic_trapezoid(M)
    Rg, Tg = np.meshgrid(r, t, indexing="ij")
    radial = wr * r ** (alpha + 1.0) * bessel_K_scaled(alpha, b * r)
    pref = 2.0 * c * eps ** (0.5 * alpha) / math.pi
    W = pref * radial[:, None] * np.exp(2.0 * c * Rg * np.cos(Tg) - b * Rg) * wt[None, :]
    return Rg * np.cos(Tg), Rg * np.sin(Tg), W, R


def default_orders(kind: str, params: dict, degree: int, tail: float = 1e-14) -> dict:
    if kind in ("canonical", "two_index"):
        return {"radial": 16, "panel": 1.0, "angular": _even(degree + 16)}
    if kind in ("hermite_quat", "hermite_complex"):
        n = degree // 2 + 8
        return {"nx": n, "ny": n}
    if kind in ("laguerre_quat", "laguerre_complex"):
        eps = params["epsilon"]
        c = eps / (1.0 - eps)
        R = laguerre_radius(eps, params["alpha"], degree, tail)
        M = _even(math.ceil(math.sqrt(80.0 * 2.0 * c * R)) + degree + 16)
        return {"radial": 20, "panel": 2.0, "grading": 24, "angular": M}
    if kind in REAL_KINDS:
        return {"n": degree // 2 + 8}
    raise BadParams(f"unknown measure kind {kind!r}")


def _check_params(kind, params):
    eps = params.get("epsilon")
    alpha = params.get("alpha")
    if kind.startswith("hermite") or kind.startswith("laguerre"):
        if eps is None or not (0.0 < eps < 1.0):
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {eps}")
    if "laguerre" in kind:
        if alpha is None or not alpha > -1.0:
            raise DomainError(f"alpha must exceed -1, got {alpha}")


def build_rule(kind: str, params: dict | None = None, orders: dict | None = None, *,
               reduction: str | None = None, degree: int = 24, tail: float = 1e-14,
               hemisphere: tuple[int, int] = (4, 8), budget: int = MAX_NODES) -> MeasureRule:
    """Build a quadrature rule for one of the supported measures.

    ``degree`` is the largest total polynomial degree the rule is sized
    for; it sets the truncation radius together with ``tail`` (the allowed
    relative weight beyond the radius) and the default orders.
    """
    if kind not in KINDS:
        raise BadParams(f"unknown measure kind {kind!r}; choose from {KINDS}")
    params = dict(params or {})
    _check_params(kind, params)
    if not (0.0 < tail < 1.0):
        raise BadParams("tail must lie in (0, 1)")
    base = default_orders(kind, params, degree, tail)
    if orders:
        unknown = set(orders) - set(base) - {"theta1", "phi"}
        if unknown:
            raise BadParams(f"unknown order keys {sorted(unknown)} for {kind}")
        base.update({k: v for k, v in orders.items() if k in base})
    if kind in QUAT_KINDS:
        reduction = reduction or "reduced"
        if reduction not in ("reduced", "full"):
            raise BadParams(f"quaternionic measures take reduction 'reduced' or 'full', got {reduction!r}")
    else:
        if reduction not in (None, "none"):
            raise BadParams(f"{kind} has no angular reduction")
        reduction = "none"
    if reduction == "full":
        base["theta1"] = (orders or {}).get("theta1", hemisphere[0])
        base["phi"] = (orders or {}).get("phi", hemisphere[1])

    estimate = _estimate_size(kind, base, params, degree, tail)
    if estimate > budget:
        raise BudgetExceeded(f"rule would have ~{estimate} nodes, budget {budget}")

    radius = None
    if kind in ("canonical", "two_index"):
        X, Y, W, radius = _canonical_slice(base, degree, tail)
    elif kind in ("hermite_quat", "hermite_complex"):
        X, Y, W, radius = _hermite_slice(params["epsilon"], base)
    elif kind in ("laguerre_quat", "laguerre_complex"):
        X, Y, W, radius = _laguerre_slice(params["epsilon"], params["alpha"], base, degree, tail)
    elif kind == "real_hermite":
        X, W = gauss_hermite_scaled(base["n"], 1.0)
        Y = np.zeros_like(X)
    else:
        X, W = gauss_laguerre_general(base["n"], params["alpha"])
        Y = np.zeros_like(X)
    x = np.ravel(X)
    y = np.ravel(Y)
    w = np.ravel(W)
    if np.any(w < 0):
        raise BadParams("negative quadrature weight")

    if reduction == "full":
        t1, ph, wh = hemisphere_rule(base["theta1"], base["phi"])
        axis = np.stack([np.sin(t1) * np.cos(ph), np.sin(t1) * np.sin(ph), np.cos(t1)], axis=1)
        nodes = np.empty((x.size, t1.size, 4))
        nodes[..., 0] = x[:, None]
        nodes[..., 1:] = y[:, None, None] * axis[None, :, :]
        nodes = nodes.reshape(-1, 4)
        weights = np.outer(w, wh).ravel()
    else:
        nodes = np.zeros((x.size, 4))
        nodes[:, 0] = x
        nodes[:, 1] = y
        weights = w
    rule = MeasureRule(kind, params, reduction, base, degree, tail, radius, nodes, weights,
                       _node_coords(nodes, reduction))
    return rule


def _estimate_size(kind, orders, params, degree, tail) -> int:
    if kind in ("hermite_quat", "hermite_complex"):
        n = orders["nx"] * orders["ny"]
    elif kind in REAL_KINDS:
        n = orders["n"]
    elif kind in ("laguerre_quat", "laguerre_complex"):
        R = laguerre_radius(params["epsilon"], params["alpha"], degree, tail)
        n = orders["radial"] * (orders["grading"] + R / orders["panel"] + 1) * orders["angular"]
    else:
        R = math.sqrt(gamma_tail_point(0.5 * (degree + 2), math.log(tail)))
        n = orders["radial"] * (R / orders["panel"] + 1) * orders["angular"]
    if "theta1" in orders:
        n *= orders["theta1"] * orders["phi"]
    return int(n)


def refine(rule: MeasureRule, factor: int = 2, budget: int = MAX_NODES) -> MeasureRule:
    """Same measure and truncation radius with every order multiplied by
    ``factor``."""
    orders = {}
    for k, v in rule.orders.items():
        if k == "panel":
            orders[k] = v
        elif k == "grading":
            orders[k] = v + 8
        else:
            orders[k] = int(v) * factor
    return build_rule(rule.kind, rule.params, orders, reduction=rule.reduction, degree=rule.degree,
                      tail=rule.tail, budget=budget)


# integration

def _reduce_slice_values(vals: np.ndarray, scale: float) -> np.ndarray:
    off = np.max(np.abs(vals[..., 2:]), initial=0.0)
    if off > 1e-10 * max(scale, 1e-300):
        raise NotSliceFunction(f"integrand leaves its slice (off-slice part {off:.2e})")
    out = np.zeros(vals.shape)
    out[..., 0] = vals[..., 0]
    out[..., 3] = vals[..., 1] * J_MEAN[3]
    return out


def integrate(rule: MeasureRule, F, chunk: int = CHUNK) -> np.ndarray:
    """``int F dnu`` as a fixed-order weighted sum.

    ``F`` maps an ``(m, 4)`` array of nodes to ``(m, ..., 4)`` values.  On a
    reduced rule ``F`` must map each slice into itself.
    """
    if rule.size == 0:
        raise EmptyRule("rule has no nodes")
    total = None
    for start in range(0, rule.size, chunk):
        stop = min(start + chunk, rule.size)
        vals = np.asarray(F(rule.nodes[start:stop]), dtype=float)
        w = rule.weights[start:stop].reshape((-1,) + (1,) * (vals.ndim - 1))
        part = np.sum(w * vals, axis=0)
        total = part if total is None else total + part
    if rule.reduction == "reduced":
        total = _reduce_slice_values(total, float(np.max(np.abs(total), initial=0.0)))
    return total


def certified_integrate(rule: MeasureRule, F):
    """Integral plus the change observed when all orders are doubled."""
    coarse = integrate(rule, F)
    fine = integrate(refine(rule), F)
    return fine, float(np.max(np.abs(fine - coarse), initial=0.0))


def _complex_gram(vals: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``sum_k w_k conj(f_m(z_k)) f_n(z_k)`` for complex values ``(N+1, M)``."""
    out = np.zeros((vals.shape[0], vals.shape[0]), dtype=complex)
    for start in range(0, vals.shape[1], CHUNK):
        v = vals[:, start:start + CHUNK]
        out += (v.conj() * w[start:start + CHUNK]) @ v.T
    return out


def _complex_to_quat(c: np.ndarray, reduction: str) -> np.ndarray:
    if reduction == "reduced":
        out = join(c.real, np.zeros(c.shape))
        out[..., 3] = J_MEAN[3] * c.imag
        return out
    return join(c, np.zeros(c.shape))


def family_gram(fam: BasisFamily, rule: MeasureRule, N: int | None = None, mask=None) -> np.ndarray:
    """Quaternionic matrix ``G_mn = int_Delta <f_m | f_n> dnu`` (``Delta`` given
    by a boolean node ``mask``), shape ``(N+1, N+1, 4)``."""
    N = fam.N if N is None else N
    w = rule.weights if mask is None else np.where(mask, rule.weights, 0.0)
    if rule.reduction != "full" and fam.slice_compatible:
        z = rule.slice_z
        c = np.zeros((N + 1, N + 1), dtype=complex)
        for start in range(0, rule.size, CHUNK):
            c += _complex_gram(fam.complex_values(z[start:start + CHUNK], N), w[start:start + CHUNK])
        return _complex_to_quat(c, rule.reduction)
    if rule.reduction == "reduced":
        raise NotSliceFunction("a reduced rule needs a slice-compatible family")
    G = np.zeros((N + 1, N + 1, 4))
    for start in range(0, rule.size, CHUNK // 4):
        stop = min(start + CHUNK // 4, rule.size)
        v = fam.values(rule.nodes[start:stop], N)
        sw = np.sqrt(w[start:stop])
        if fam.dim == 1:
            A = v * sw[None, :, None]
            A = np.moveaxis(A, 0, 1)
        else:
            A = v * sw[None, :, None, None]
            A = np.moveaxis(A, 0, 2).reshape(-1, N + 1, 4)
        G += matmul(adjoint(A), A)
    return G


@dataclass
class OrthogonalityResult:
    matrix: np.ndarray
    residuals: np.ndarray
    max_residual: float


def orthogonality_matrix(fam: BasisFamily, rule: MeasureRule, maxN: int | None = None) -> OrthogonalityResult:
    """``|int conj(f_m) f_n dnu - delta_mn|`` for ``m, n <= maxN``."""
    maxN = fam.N if maxN is None else maxN
    if maxN > rule.degree // 2 + 8 and rule.kind not in ("laguerre_quat", "laguerre_complex"):
        raise BudgetExceeded(f"maxN={maxN} exceeds what a degree-{rule.degree} rule resolves")
    G = family_gram(fam, rule, maxN)
    D = G.copy()
    D[np.arange(maxN + 1), np.arange(maxN + 1), 0] -= 1.0
    res = np.sqrt(np.sum(D * D, axis=-1))
    return OrthogonalityResult(G, res, float(res.max()))


def two_index_gram(rule: MeasureRule, max_index: int) -> tuple[np.ndarray, list]:
    """Gram matrix of all normalized two-index Hermite members with both
    indices ``<= max_index`` under ``rule``."""
    from .families import hermite2_values_c

    labels = [(n, m) for n in range(max_index + 1) for m in range(max_index + 1)]
    z = rule.slice_z
    vals = np.concatenate([hermite2_values_c(z, max_index, n) for n in range(max_index + 1)], axis=0)
    c = _complex_gram(vals, rule.weights)
    if rule.reduction == "full":
        raise BadParams("two-index Gram uses a reduced rule")
    return _complex_to_quat(c, rule.reduction), labels


@dataclass
class SquareIntegrability:
    residual: float
    integral: np.ndarray
    kernel: np.ndarray
    method: str


def kernel_square_integrability(ker: Kernel, rule: MeasureRule, x, y, method: str = "auto") -> SquareIntegrability:
    """Relative residual of ``int K(x, z) K(z, y) dnu(z) = K(x, y)``.

    ``direct`` sums kernel products over the nodes (any rule layout);
    ``expansion`` uses ``sum_ij f_i(x) G_ij conj(f_j(y))`` with the rule's
    Gram matrix ``G``, which is the same integral rewritten so that only
    slice-preserving integrands reach the rule.
    """
    xa = as_quat_array(x)
    ya = as_quat_array(y)
    K_xy, _ = kernel_series(ker, xa, ya, check=False)
    if method == "auto":
        method = "direct" if rule.reduction == "full" else "expansion"
    if method == "expansion":
        G = family_gram(ker.family, rule)
        fx = ker.family.values(xa)
        fy = ker.family.values(ya)
        row = fx[None, :, :]
        col = qconj(fy)[:, None, :]
        val = matmul(matmul(row, G), col)[0, 0]
    elif method == "direct":
        if rule.reduction == "reduced":
            raise NotSliceFunction("kernel products are not slice-preserving; use a full rule")

        def F(z):
            a, _ = kernel_series(ker, xa[None, :], z, check=False)
            b, _ = kernel_series(ker, z, ya[None, :], check=False)
            return qmul(a, b)

        val = integrate(rule, F, chunk=CHUNK // 8)
    else:
        raise BadParams(f"unknown method {method!r}")
    scale = float(np.linalg.norm(K_xy))
    res = float(np.linalg.norm(val - K_xy)) / scale
    return SquareIntegrability(res, val, K_xy, method)


def radial_median(rule: MeasureRule) -> float:
    """Median of the radial marginal ``|q|`` under the rule's weights."""
    r = rule.coords["r"]
    order = np.argsort(r, kind="stable")
    cw = np.cumsum(rule.weights[order])
    k = int(np.searchsorted(cw, 0.5 * cw[-1]))
    return float(r[order][k])


_SCALED_ORDERS = ("radial", "angular", "nx", "ny", "n", "theta1", "phi")


def ladder(kind: str, params: dict | None = None, levels: int = 3, *, degree: int = 24,
           reduction: str | None = None, tail: float = 1e-14, orders: dict | None = None) -> list:
    """Rules whose orders double from one to the next.  The coarsest level
    takes the default (or given) orders divided by ``2^(levels-1)``, rounded
    up, so the finest level is at or just above them.  Used for refinement
    certificates."""
    params = dict(params or {})
    top = default_orders(kind, params, degree, tail)
    top.update(orders or {})
    div = 2 ** (levels - 1)
    base = {k: (max(2, -(-int(v) // div)) if k in _SCALED_ORDERS else v) for k, v in top.items()}
    rules = [build_rule(kind, params, base, reduction=reduction, degree=degree, tail=tail)]
    for _ in range(levels - 1):
        rules.append(refine(rules[-1]))
    return rules


def decreasing(values, floor: float = 1e-14) -> bool:
    """True when every step down the list decreases, except steps where
    both values already sit at the rounding floor."""
    return all(b <= a or max(a, b) <= floor for a, b in zip(values[:-1], values[1:]))
