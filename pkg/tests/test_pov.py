import math

import numpy as np
import pytest

from qrkhs import pov
from qrkhs import qlinalg as ql
from qrkhs.errors import (
    BadEpsilon,
    BadParams,
    EmptyRule,
    IllConditionedBasis,
    OverlappingCells,
    PartitionError,
)
from qrkhs.families import hermite_family, laguerre_family, monomial
from qrkhs.kernels import Kernel, sample_points
from qrkhs.quadrature import MeasureRule, build_rule, ladder, radial_median


@pytest.fixture(scope="module")
def canon():
    return Kernel(monomial(6)), build_rule("canonical", degree=20)


@pytest.fixture(scope="module")
def herm_full():
    ker = Kernel(hermite_family(0.5, 4))
    return ker, build_rule("hermite_quat", {"epsilon": 0.5}, {"nx": 10, "ny": 10}, reduction="full", hemisphere=(2, 4))


HALVES = "right: x > 0\nleft: x <= 0"
QUARTERS = "a: x > 0 & y > 0\nb: x > 0 & y <= 0\nc: x <= 0 & y > 0\nd: x <= 0 & y <= 0"


def test_parse_cells(canon):
    _, rule = canon
    part = pov.Partition.parse("# comment\ninner: r < 1.5  # trailing\nouter: r >= 1.5\n")
    assert part.names == ["inner", "outer"]
    a, b = part.masks(rule)
    assert np.array_equal(a, rule.coords["r"] < 1.5) and np.array_equal(a, ~b)
    cell = pov.parse_cell("upper: θ2 < pi & θ2 >= 0")
    assert cell.variables == ("theta2", "theta2")
    assert pov.parse_cell("w: theta2 < 2*pi").mask(rule).all()
    assert pov.parse_cell("all: *").mask(rule).all()


@pytest.mark.parametrize("text", ["no colon", ": r < 1", "a: r << 1", "a: rho < 1", "a: r < one"])
def test_parse_errors(text):
    with pytest.raises(PartitionError):
        pov.Partition.parse(text)


def test_partition_structure_errors(canon):
    _, rule = canon
    with pytest.raises(PartitionError):
        pov.Partition.parse("a: r < 1\na: r >= 1")
    with pytest.raises(PartitionError):
        pov.Partition.parse("\n# only comments\n")
    with pytest.raises(OverlappingCells):
        pov.Partition.parse("a: r < 2\nb: r > 1").masks(rule)
    with pytest.raises(PartitionError):
        pov.Partition.parse("a: r < 1").masks(rule)
    pov.Partition.parse("a: r < 1", covers_domain=False).masks(rule)
    # cells on a reduced rule cannot see the slice axis
    with pytest.raises(PartitionError):
        pov.Partition.parse("a: phi < pi\nb: phi >= pi").masks(rule)
    empty = MeasureRule.from_json(
        '{"schema": 1, "kind": "canonical", "params": {}, "reduction": "reduced", "orders": {}, "degree": 0,'
        ' "tail": 1e-14, "radius": 1.0, "node_values": [], "weight_values": []}'
    )
    with pytest.raises(EmptyRule):
        pov.Partition.whole().masks(empty)


def test_partition_from_file(tmp_path, canon):
    path = tmp_path / "cells.txt"
    path.write_text(HALVES + "\n")
    part = pov.Partition.from_file(path)
    assert part.names == ["right", "left"]


def test_axis_cells_on_full_rules(herm_full):
    _, rule = herm_full
    part = pov.Partition.parse("north: theta1 < 0.7\nsouth: θ1 >= 0.7")
    a, b = part.masks(rule)
    assert a.any() and b.any()


def test_localization_operator_examples():
    ker = Kernel(monomial(5))
    F = pov.localization_operator(ker, np.zeros(4))
    want = np.zeros((6, 6, 4))
    want[0, 0, 0] = 1.0
    assert np.allclose(F, want)


@pytest.mark.parametrize("kind", ["monomial", "hermite", "laguerre"])
def test_localization_operator_trace_and_rank(rng, kind):
    fam = {"monomial": monomial(40), "hermite": hermite_family(0.5, 80),
           "laguerre": laguerre_family(0.5, 0.4, 100)}[kind]
    ker = Kernel(fam)
    x = sample_points(kind, rng, 1)[0]
    F = pov.localization_operator(ker, x)
    assert np.trace(F[..., 0]) == pytest.approx(ker(x, x)[0], rel=1e-12)
    assert ql.rank(F) == 1
    assert ql.is_positive(F)


def test_pov_measure_examples(canon):
    ker, rule = canon
    whole = pov.pov_measure(ker, rule, pov.Partition.whole())["X"]
    assert pov.identity_defect(whole) <= 1e-9
    ops = pov.pov_measure(ker, rule, pov.Partition.parse(HALVES))
    assert np.max(np.abs(ops["right"] + ops["left"] - whole)) <= 1e-14
    assert all(pov.check_positive(ops).values())
    none = pov.pov_measure(ker, rule, pov.Partition.parse("void: r < 0", covers_domain=False))["void"]
    assert not np.any(none)


def test_pov_positive_on_full_rules(herm_full):
    ker, rule = herm_full
    ops = pov.pov_measure(ker, rule, pov.Partition.parse("north: theta1 < 0.7\nsouth: theta1 >= 0.7"))
    assert all(pov.check_positive(ops).values())


def test_quadratic_form_matches_integral(canon, rng):
    # <phi | a(Delta) phi> equals the weighted sum of |phi(x)|^2 over the cell
    ker, rule = canon
    c = rng.standard_normal((7, 4))
    mask = pov.Partition.parse(HALVES).masks(rule)[0]
    a = pov.pov_measure(ker, rule, pov.Partition.parse(HALVES))["right"]
    lhs = ql.inner(c, ql.mat_apply(a, c))[0]
    contrib = pov._node_quadratic_forms(ker, rule, c)
    assert lhs == pytest.approx(math.fsum(contrib[mask]), rel=1e-12)


@pytest.mark.parametrize("which", ["reduced", "full"])
def test_sigma_additivity(canon, herm_full, which):
    ker, rule = canon if which == "reduced" else herm_full
    nested = [pov.Partition.whole(), pov.Partition.parse(HALVES), pov.Partition.parse(QUARTERS)]
    rep = pov.sigma_additivity_check(ker, rule, nested, np.random.default_rng(3))
    assert rep.max_defect == 0.0
    assert rep.min_measure >= 0.0
    assert rep.monotone
    assert rep.total_vs_norm <= 1e-9
    with pytest.raises(PartitionError):
        pov.sigma_additivity_check(ker, rule, [])


def test_pv_projection_exact(rng):
    mask = rng.random(30) < 0.4
    P = pov.pv_projection(mask)
    assert np.array_equal(ql.matmul(P, P), P)
    assert np.array_equal(ql.adjoint(P), P)
    assert pov.pv_defects(mask) == (0.0, 0.0)
    assert pov.pv_defects(rng.random(2000) < 0.5) == (0.0, 0.0)


def test_discrete_space_projector(herm_full):
    ker, rule = herm_full
    space = pov.DiscreteL2(rule, ker)
    idem, herm = space.projector_defects()
    assert idem <= 1e-13 and herm <= 1e-13
    assert ql.rank(space.projector) == ker.N + 1
    with pytest.raises(BadParams):
        pov.DiscreteL2(build_rule("canonical", degree=8), Kernel(monomial(3)))
    tiny = build_rule("hermite_quat", {"epsilon": 0.5}, {"nx": 1, "ny": 1}, reduction="full", hemisphere=(1, 2))
    with pytest.raises(IllConditionedBasis):
        pov.DiscreteL2(tiny, ker)


def test_naimark_trivial_cells(herm_full):
    ker, rule = herm_full
    rep = pov.naimark_residual(ker, rule, pov.Partition.whole())
    assert rep.residual <= 1e-12
    part = pov.Partition.parse("void: r < 0\nall: r >= 0")
    rep = pov.naimark_residual(ker, rule, part)
    assert rep.per_cell["void"] == 0.0


def test_naimark_routes_agree(herm_full):
    ker, rule = herm_full
    part = pov.radial_split(radial_median(rule))
    dense = pov.naimark_residual(ker, rule, part, route="dense")
    comp = pov.naimark_residual(ker, rule, part, route="compressed")
    for name in part.names:
        assert dense.per_cell[name] == pytest.approx(comp.per_cell[name], abs=1e-12)
    with pytest.raises(BadParams):
        pov.naimark_residual(ker, rule, part, route="sideways")


@pytest.mark.parametrize("kind,params,family", [
    ("hermite_quat", {"epsilon": 0.5}, hermite_family(0.5, 5)),
    ("canonical", {}, monomial(5)),
])
def test_naimark_decreases_under_refinement(kind, params, family):
    ker = Kernel(family)
    rules = ladder(kind, params, 3, degree=10)
    part = pov.radial_split(radial_median(rules[-1]))
    res = [pov.naimark_residual(ker, r, part).residual for r in rules]
    assert res[-1] <= 1e-7
    assert all(b <= 1.1 * a or max(a, b) <= 1e-14 for a, b in zip(res[:-1], res[1:]))


def test_minimality_witness():
    ker = Kernel(hermite_family(0.5, 3))
    rule = build_rule("hermite_quat", {"epsilon": 0.5}, {"nx": 2, "ny": 2}, reduction="full", hemisphere=(2, 5))
    assert rule.size == 40
    # each half is a single sphere, where slice functions span two dimensions
    w = pov.minimality_witness(ker, rule, pov.Partition.parse(HALVES))
    assert w.rank == 4 and w.node_dim == 40 and not w.dense and w.sigma_min > 0
    finer = build_rule("hermite_quat", {"epsilon": 0.5}, {"nx": 4, "ny": 3}, reduction="full", hemisphere=(2, 5))
    assert pov.minimality_witness(ker, finer, pov.Partition.parse(HALVES)).rank == 2 * (ker.N + 1)
    assert pov.minimality_witness(ker, rule, pov.Partition.whole()).rank == ker.N + 1
    real = build_rule("real_hermite", {"epsilon": 0.5}, {"n": 20})
    singles = pov.minimality_witness(Kernel(hermite_family(0.5, 6, domain="real")), real,
                                     pov.Partition.singletons(real))
    assert singles.rank == 20 and singles.dense
    with pytest.raises(BadParams):
        pov.minimality_witness(ker, build_rule("hermite_quat", {"epsilon": 0.5}), pov.Partition.whole())


def test_operator_A_examples():
    A = pov.DiagonalOperatorA(0.5, 50)
    assert A.trace_inverse() == 2.0 - 2.0**-50
    assert pov.DiagonalOperatorA(0.5, 100).trace_inverse() == pytest.approx(2.0, abs=1e-12)
    # coefficients of f_n = eps^(n/2) h_n in the h basis
    coeffs = np.zeros((51, 51, 4))
    coeffs[np.arange(51), np.arange(51), 0] = 0.5 ** (np.arange(51) / 2)
    gram = np.array([[A.scaled_inner_product(coeffs[n], coeffs[m])[0] for m in range(51)] for n in range(51)])
    assert np.allclose(gram, np.eye(51), atol=1e-13)
    h0 = np.zeros((51, 4))
    h0[0, 0] = 1.0
    assert np.array_equal(A.apply(h0), h0)
    assert np.allclose(np.diagonal(A.matrix()[..., 0]), A.diagonal)
    assert A.in_domain(h0)
    big = np.ones((51, 4))
    assert not A.in_domain(big, budget=1e20)
    with pytest.raises(BadEpsilon):
        pov.DiagonalOperatorA(1.0, 5)
    mat, tr, ip = pov.diag_operator_A(0.5, 10)
    assert mat.shape == (11, 11, 4) and tr == pytest.approx(2 - 2**-10) and callable(ip)
