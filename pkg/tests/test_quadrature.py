import math

import numpy as np
import pytest
import scipy.integrate as si
import scipy.special as sp

from qrkhs import qlinalg as ql
from qrkhs.errors import BadEpsilon, BadParams, BudgetExceeded, DomainError, NotSliceFunction
from qrkhs.families import hermite_family, laguerre_family, monomial
from qrkhs.kernels import Kernel, choose_truncation, sample_points
from qrkhs.quadrature import (
    KINDS,
    MeasureRule,
    build_rule,
    certified_integrate,
    decreasing,
    family_gram,
    gamma_tail_point,
    gauss_hermite_scaled,
    gauss_laguerre_general,
    gauss_legendre_panels,
    hemisphere_rule,
    integrate,
    kernel_square_integrability,
    ladder,
    orthogonality_matrix,
    periodic_trapezoid,
    radial_median,
    refine,
    two_index_gram,
)
from qrkhs.quaternion import qmul


def _one(z):
    out = np.zeros(z.shape)
    out[:, 0] = 1.0
    return out


def test_legendre_panels_exact_for_polynomials():
    x, w = gauss_legendre_panels([0.0, 0.5, 2.0, 3.0], 6)
    for k in range(12):
        assert np.sum(w * x**k) == pytest.approx(3.0 ** (k + 1) / (k + 1), rel=1e-13)


def test_trapezoid_exact_for_trig():
    t, w = periodic_trapezoid(16)
    assert np.sum(w) == pytest.approx(2 * math.pi)
    for k in range(1, 16):
        assert abs(np.sum(w * np.cos(k * t))) < 1e-13


def test_gauss_hermite_scaled():
    x, w = gauss_hermite_scaled(20, 2.5)
    for k in range(0, 20, 2):
        want = sp.gamma((k + 1) / 2) / 2.5 ** ((k + 1) / 2)
        assert np.sum(w * x**k) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.5, 2.0])
def test_gauss_laguerre_against_scipy(alpha):
    x, w = gauss_laguerre_general(25, alpha)
    xs, ws = sp.roots_genlaguerre(25, alpha)
    assert np.allclose(x, xs, rtol=1e-12)
    assert np.allclose(w, ws, rtol=1e-9, atol=1e-300)
    for k in range(10):
        assert np.sum(w * x**k) == pytest.approx(sp.gamma(k + alpha + 1), rel=1e-12)


def test_hemisphere_rule_normalized():
    t1, ph, w = hemisphere_rule(4, 8)
    assert np.sum(w) == pytest.approx(1.0, abs=1e-15)
    assert np.all((t1 >= 0) & (t1 <= math.pi / 2))
    axis = np.stack([np.sin(t1) * np.cos(ph), np.sin(t1) * np.sin(ph), np.cos(t1)], axis=1)
    # the mean unit imaginary quaternion over the hemisphere is k / 2
    assert np.allclose(w @ axis, [0, 0, 0.5], atol=1e-15)


@pytest.mark.parametrize("shape", [1.0, 3.5, 13.0, 40.0])
def test_gamma_tail_point_bounds_tail(shape):
    x = gamma_tail_point(shape, math.log(1e-14))
    assert sp.gammaincc(shape, x) <= 1e-14
    # not absurdly far out
    assert sp.gammaincc(shape, x - 3.0) > 1e-15


@pytest.mark.parametrize("kind,params", [
    ("canonical", {}),
    ("two_index", {}),
    ("hermite_quat", {"epsilon": 0.5}),
    ("hermite_complex", {"epsilon": 0.3}),
    ("laguerre_quat", {"epsilon": 0.4, "alpha": 0.5}),
    ("laguerre_complex", {"epsilon": 0.25, "alpha": 2.0}),
])
def test_slice_measures_are_normalized_on_f0(kind, params):
    # f_0 has unit norm, so the mass equals 1 / |f_0|^2
    rule = build_rule(kind, params)
    mass = integrate(rule, _one)[0]
    if kind.startswith("hermite"):
        f0 = math.pi**-0.25
    elif kind.startswith("laguerre"):
        f0 = 1.0 / math.sqrt(math.gamma(params["alpha"] + 1))
    else:
        f0 = 1.0
    assert mass * f0**2 == pytest.approx(1.0, abs=1e-12)


def test_real_measures():
    r = build_rule("real_laguerre", {"epsilon": 0.5, "alpha": 1.5})
    assert r.reduction == "none"
    assert integrate(r, _one)[0] == pytest.approx(math.gamma(2.5), rel=1e-14)
    h = build_rule("real_hermite", {"epsilon": 0.5})
    assert integrate(h, _one)[0] == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_laguerre_weight_against_adaptive_quadrature():
    # radial marginal of the complex Laguerre measure, integrated by scipy
    eps, alpha = 0.4, 0.5
    c = eps / (1 - eps)
    b = 2 * math.sqrt(eps) / (1 - eps)

    def density(r):
        # the angular integral of exp(2 c r cos t) is 2 pi I_0(2 c r)
        bessel = sp.ive(0, 2 * c * r) * sp.kve(alpha, b * r) * math.exp((2 * c - b) * r)
        return 4 * c * eps ** (alpha / 2) * r ** (alpha + 3) * bessel

    want, _ = si.quad(density, 0, np.inf, limit=200)
    rule = build_rule("laguerre_complex", {"epsilon": eps, "alpha": alpha})
    got = integrate(rule, lambda z: np.stack([np.sum(z * z, axis=1)] + [np.zeros(len(z))] * 3, axis=1))[0]
    assert got == pytest.approx(want, rel=1e-9)


def test_canonical_orthogonality_both_reductions():
    fam = monomial(6)
    red = orthogonality_matrix(fam, build_rule("canonical"))
    full = orthogonality_matrix(fam, build_rule("canonical", reduction="full"))
    fact = np.array([math.factorial(n) for n in range(7)])
    assert red.max_residual <= 1e-10
    assert full.max_residual <= 1e-10
    # unnormalized moments: int conj(q)^m q^n = n! delta_mn
    moments = red.matrix[..., 0] * np.sqrt(np.outer(fact, fact))
    assert np.allclose(moments, np.diag(fact), rtol=0, atol=1e-10 * fact.max())
    scale = np.max(np.abs(full.matrix))
    assert np.max(np.abs(red.matrix - full.matrix)) <= 1e-9 * scale


@pytest.mark.parametrize("eps", [0.3, 0.7])
def test_hermite_orthogonality(eps):
    fam = hermite_family(eps, 6)
    for kind in ("hermite_complex", "hermite_quat"):
        assert orthogonality_matrix(fam, build_rule(kind, {"epsilon": eps})).max_residual <= 1e-8


def test_hermite_full_rule_matches_reduced():
    fam = hermite_family(0.5, 5)
    red = family_gram(fam, build_rule("hermite_quat", {"epsilon": 0.5}))
    full = family_gram(fam, build_rule("hermite_quat", {"epsilon": 0.5}, reduction="full"))
    assert np.allclose(red, full, atol=1e-12)


@pytest.mark.parametrize("alpha,eps", [(0.0, 0.25), (2.0, 0.5)])
def test_laguerre_orthogonality(alpha, eps):
    fam = laguerre_family(alpha, eps, 6)
    rule = build_rule("laguerre_quat", {"epsilon": eps, "alpha": alpha})
    assert orthogonality_matrix(fam, rule).max_residual <= 1e-7


def test_real_hermite_moments():
    eps = 0.5
    rule = build_rule("real_hermite", {"epsilon": eps})
    G = family_gram(hermite_family(eps, 6, domain="real"), rule)[..., 0]
    want = np.diag([eps**n for n in range(7)])
    assert np.allclose(G, want, atol=1e-13)


def test_two_index_gram():
    G, labels = two_index_gram(build_rule("two_index"), 4)
    assert len(labels) == 25
    D = G.copy()
    D[np.arange(25), np.arange(25), 0] -= 1.0
    assert np.max(np.abs(D)) <= 1e-8
    with pytest.raises(BadParams):
        two_index_gram(build_rule("two_index", reduction="full"), 1)


def test_reduced_rule_rejects_off_slice_integrands():
    rule = build_rule("canonical")

    def F(z):
        out = np.zeros(z.shape)
        out[:, 2] = 1.0
        return out

    with pytest.raises(NotSliceFunction):
        integrate(rule, F)


def test_reduced_rule_averages_axis():
    # q^2 stays in its slice; the reduced rule must reproduce the hemisphere average
    red = build_rule("hermite_quat", {"epsilon": 0.5})
    full = build_rule("hermite_quat", {"epsilon": 0.5}, reduction="full")

    def F(q):
        return qmul(q, q)

    assert np.allclose(integrate(red, F), integrate(full, F), atol=1e-13)
    assert integrate(full, lambda q: q)[3] == pytest.approx(0.0, abs=1e-15)


def test_refine_and_ladder():
    rule = build_rule("canonical", degree=12)
    fine = refine(rule)
    assert fine.orders["radial"] == 2 * rule.orders["radial"]
    assert fine.orders["panel"] == rule.orders["panel"]
    assert fine.radius == rule.radius
    rules = ladder("hermite_complex", {"epsilon": 0.5}, degree=12)
    assert [r.orders["nx"] for r in rules] == [4, 8, 16]
    val, change = certified_integrate(rule, _one)
    assert val[0] == pytest.approx(1.0, abs=1e-13) and change < 1e-13


def test_decreasing():
    assert decreasing([1e-3, 1e-6, 1e-9])
    assert not decreasing([1e-3, 1e-6, 1e-5])
    assert decreasing([1e-6, 3e-15, 8e-15])
    assert not decreasing([1e-6, 3e-15, 8e-15], floor=0.0)


def test_rule_validation():
    with pytest.raises(BadParams):
        build_rule("jacobi")
    with pytest.raises(BadEpsilon):
        build_rule("hermite_quat", {"epsilon": 1.0})
    with pytest.raises(DomainError):
        build_rule("laguerre_quat", {"epsilon": 0.5, "alpha": -1.0})
    with pytest.raises(BadParams):
        build_rule("canonical", reduction="none")
    with pytest.raises(BadParams):
        build_rule("hermite_complex", {"epsilon": 0.5}, reduction="full")
    with pytest.raises(BadParams):
        build_rule("canonical", orders={"bogus": 3})
    with pytest.raises(BudgetExceeded):
        build_rule("canonical", reduction="full", budget=1000)
    with pytest.raises(BudgetExceeded):
        orthogonality_matrix(monomial(40), build_rule("canonical"))


def test_rule_round_trips_through_json():
    rule = build_rule("hermite_complex", {"epsilon": 0.5}, degree=8)
    back = MeasureRule.from_json(rule.to_json())
    assert back.provenance() == rule.provenance()
    assert np.array_equal(back.nodes, rule.nodes) and np.array_equal(back.weights, rule.weights)
    with pytest.raises(BadParams):
        MeasureRule.from_json('{"schema": 99}')


def test_rules_are_deterministic():
    a = build_rule("laguerre_complex", {"epsilon": 0.4, "alpha": 0.0}, degree=10)
    b = build_rule("laguerre_complex", {"epsilon": 0.4, "alpha": 0.0}, degree=10)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)


def test_radial_median_splits_mass():
    rule = build_rule("canonical")
    m = radial_median(rule)
    inside = rule.weights[rule.coords["r"] <= m].sum()
    assert 0.45 < inside / rule.weights.sum() < 0.55
    # radial density 2 r exp(-r^2) has median sqrt(ln 2)
    assert m == pytest.approx(math.sqrt(math.log(2)), abs=0.1)


def test_square_integrability_methods_agree(rng):
    ker = Kernel(hermite_family(0.5, 24))
    x, y = 0.5 * sample_points("hermite", rng, 2)
    full = build_rule("hermite_quat", {"epsilon": 0.5}, {"nx": 32, "ny": 32}, reduction="full", hemisphere=(3, 6))
    red = build_rule("hermite_quat", {"epsilon": 0.5}, {"nx": 32, "ny": 32})
    d = kernel_square_integrability(ker, full, x, y)
    e = kernel_square_integrability(ker, red, x, y)
    assert d.method == "direct" and e.method == "expansion"
    assert d.residual < 1e-10 and e.residual < 1e-10
    with pytest.raises(NotSliceFunction):
        kernel_square_integrability(ker, red, x, y, method="direct")


def test_kernel_gram_under_rule_is_identity():
    # orthonormality of the generating family under the L2 inner product
    fam = laguerre_family(0.5, 0.4, 5)
    G = family_gram(fam, build_rule("laguerre_quat", {"epsilon": 0.4, "alpha": 0.5}))
    assert np.allclose(G, ql.identity(6), atol=1e-10)


def test_every_kind_builds():
    params = {"epsilon": 0.5, "alpha": 0.5}
    for kind in KINDS:
        rule = build_rule(kind, params, degree=6)
        assert rule.size > 0 and np.all(rule.weights >= 0)


def test_canonical_moment_examples():
    rule = build_rule("canonical")
    assert np.allclose(integrate(rule, lambda q: q), 0.0, atol=1e-15)
    norm2 = lambda q: np.stack([np.sum(q * q, axis=1)] + [np.zeros(len(q))] * 3, axis=1)  # noqa: E731
    assert integrate(rule, norm2)[0] == pytest.approx(1.0, abs=1e-12)


def test_hemisphere_factor_on_constants():
    red = build_rule("hermite_quat", {"epsilon": 0.5})
    full = build_rule("hermite_quat", {"epsilon": 0.5}, reduction="full")
    cplx = build_rule("hermite_complex", {"epsilon": 0.5})
    vals = [integrate(r, _one)[0] for r in (red, full, cplx)]
    assert vals[0] == pytest.approx(vals[2], rel=1e-14) and vals[1] == pytest.approx(vals[2], rel=1e-14)


def test_real_laguerre_mass_high_order():
    rule = build_rule("real_laguerre", {"epsilon": 0.5, "alpha": 0.0}, {"n": 60})
    assert integrate(rule, _one)[0] == pytest.approx(1.0, abs=1e-12)


def test_square_integrability_examples():
    canon = Kernel(monomial(30))
    res = kernel_square_integrability(canon, build_rule("canonical", degree=64), np.zeros(4), np.zeros(4))
    assert res.residual <= 1e-10
    x = np.array([0.5, 0.0, 0.5, 0.0])
    y = np.array([0.0, 0.3, 0.0, 0.0])
    fam = hermite_family(0.5, 10)
    ker = Kernel(fam.with_N(choose_truncation(fam, np.stack([x, y]))))
    rules = ladder("hermite_quat", {"epsilon": 0.5}, 3, degree=2 * ker.N + 4)
    vals = [kernel_square_integrability(ker, r, x, y).residual for r in rules]
    assert vals[-1] <= 1e-6 and decreasing(vals)
