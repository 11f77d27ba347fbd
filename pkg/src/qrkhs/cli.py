"""Command-line driver: one subcommand per verification, machine-readable
reports, exit code 0 only when every check is within tolerance.

Exit codes: 0 pass, 1 tolerance exceeded, 2 bad configuration,
3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import errors
from .families import BasisFamily
from .kernels import Kernel, choose_truncation, gram_matrix, kernel_closed, kernel_series, sample_points
from .qlinalg import eigenvalues, hermitian_defect
from .quadrature import (
    decreasing,
    kernel_square_integrability,
    ladder,
    orthogonality_matrix,
    radial_median,
    two_index_gram,
)
from .quaternion import from_complex, from_real
from . import pov
from .selftest import run_all

SCHEMA = 1
EXIT_OK, EXIT_TOL, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

MEASURES = {
    ("monomial", "quaternion"): "canonical",
    ("hermite2", "quaternion"): "two_index",
    ("hermite", "quaternion"): "hermite_quat",
    ("hermite", "complex"): "hermite_complex",
    ("hermite", "real"): "real_hermite",
    ("laguerre", "quaternion"): "laguerre_quat",
    ("laguerre", "complex"): "laguerre_complex",
    ("laguerre", "real"): "real_laguerre",
}
ORTHO_TOL = {"monomial": 1e-10, "hermite": 1e-8, "laguerre": 1e-7, "hermite2": 1e-8}
FAMILY_DEFAULTS = {"monomial": {}, "hermite": {"epsilon": 0.5}, "laguerre": {"epsilon": 0.4, "alpha": 0.0},
                   "hermite2": {}}


class ConfigProblem(Exception):
    pass


class Report:
    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.checks = []
        self.data = {}

    def check(self, name: str, value: float, tol: float, passed: bool | None = None, **params):
        value = float(value)
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks.append({"check": name, "value": value, "tol": tol, "passed": ok, "params": params})
        return ok

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "checks": self.checks,
            "data": self.data,
        }

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["command", "check", "value", "tol", "passed", "params"])
        for c in self.checks:
            w.writerow([self.command, c["check"], repr(c["value"]), repr(c["tol"]), c["passed"],
                        json.dumps(c["params"], sort_keys=True, default=_jsonable)])
        return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# configuration helpers

def _family_params(args) -> dict:
    p = dict(FAMILY_DEFAULTS[args.family])
    if args.epsilon is not None:
        p["epsilon"] = args.epsilon
    if args.alpha is not None:
        p["alpha"] = args.alpha
    return p


def make_family(args, N: int, domain: str = "quaternion") -> BasisFamily:
    p = _family_params(args)
    if domain == "real" and args.family == "laguerre":
        domain = "halfline"
    return BasisFamily(args.family, N, epsilon=p.get("epsilon", 1.0), alpha=p.get("alpha"), domain=domain,
                       fixed=args.fixed)


def measure_kind(args) -> str:
    if args.measure:
        return args.measure
    key = (args.family, args.domain)
    if key not in MEASURES:
        raise ConfigProblem(f"no measure for family {args.family!r} on domain {args.domain!r}")
    return MEASURES[key]


def _orders(text):
    if not text:
        return None
    out = {}
    for part in text.split(","):
        k, _, v = part.partition("=")
        try:
            out[k.strip()] = float(v) if k.strip() == "panel" else int(v)
        except ValueError as exc:
            raise ConfigProblem(f"bad order {part!r}") from exc
    return out


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise ConfigProblem(f"grid must be lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise ConfigProblem("grid needs lo <= hi and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _measure_params(args, kind) -> dict:
    p = _family_params(args)
    return {k: v for k, v in p.items() if (k == "epsilon" and ("hermite_" in kind or "laguerre" in kind))
            or (k == "alpha" and "laguerre" in kind)}


# subcommands

def cmd_quat_selftest(args, rep: Report):
    for r in run_all(args.seed, args.scale):
        rep.check(r.name, r.worst, r.tol, r.passed, cases=r.cases, seed=args.seed)


def cmd_orthogonality(args, rep: Report):
    kind = measure_kind(args)
    N = 6 if args.max_n is None else args.max_n
    tol = args.tol or ORTHO_TOL[args.family]
    params = _measure_params(args, kind)
    rules = ladder(kind, params, 2, degree=2 * N + 8, reduction=args.reduction, tail=args.tail,
                   orders=_orders(args.orders))
    if args.family == "hermite2":
        vals = []
        for rule in rules:
            G, labels = two_index_gram(rule, N)
            G[np.arange(len(labels)), np.arange(len(labels)), 0] -= 1.0
            vals.append(float(np.sqrt(np.sum(G * G, axis=-1)).max()))
        res, coarse = vals[-1], vals[0]
    else:
        fam = make_family(args, N, args.domain)
        out = [orthogonality_matrix(fam, r, N) for r in rules]
        if kind in ("real_hermite", "real_laguerre"):
            # the eps^(n/2) weights are not part of the real-line normalization
            scale = fam.epsilon ** (0.5 * np.add.outer(np.arange(N + 1), np.arange(N + 1)))
            for o in out:
                M = o.matrix.copy()
                M[..., 0] /= scale
                M[..., 1:] /= scale[..., None]
                M[np.arange(N + 1), np.arange(N + 1), 0] -= 1.0
                o.max_residual = float(np.sqrt(np.sum(M * M, axis=-1)).max())
        res, coarse = out[-1].max_residual, out[0].max_residual
        rep.data["residuals"] = out[-1].residuals
    rep.check("max orthogonality residual", res, tol, max_n=N, measure=kind, rule=rules[-1].provenance())
    rep.check("refinement change", abs(res - coarse), tol, coarse_rule=rules[0].provenance())


def _closed_tag(family: str, domain: str) -> str:
    if family == "monomial":
        return "canonical_slice"
    if family in ("hermite", "laguerre"):
        return f"{family}_{'real' if domain == 'real' else 'complex'}"
    raise ConfigProblem(f"no closed form for family {family!r}")


def cmd_kernel_compare(args, rep: Report):
    domain = "real" if args.domain == "quaternion" else args.domain
    tag = _closed_tag(args.family, domain)
    g = _grid(args.grid)
    if domain == "real":
        pts = from_real(g)
    else:
        Z = (g[:, None] + 1j * g[None, :]).ravel()
        pts = from_complex(Z)
    fam = make_family(args, 10)
    # off-diagonal values can sit far below the diagonal scale, so truncate
    # well past the diagonal tolerance
    N = args.max_n or choose_truncation(fam, pts, 1e-24)
    ker = Kernel(fam.with_N(N), tag)
    x = pts[:, None, :]
    y = pts[None, :, :]
    series, tail = kernel_series(ker, x, y, extended=True)
    closed = kernel_closed(ker, x, y)
    rel = np.linalg.norm(series - closed, axis=-1) / np.linalg.norm(closed, axis=-1)
    tol = args.tol or 1e-9
    rep.check("max relative closed-vs-series", float(rel.max()), tol, N=N, closed_form=tag, grid=args.grid)
    rep.check("series tail", float(tail.max()), ker.tol, N=N)
    rows = []
    for i in range(pts.shape[0]):
        for j in range(pts.shape[0]):
            rows.append({"x": pts[i], "y": pts[j], "closed": closed[i, j], "series": series[i, j],
                         "rel_err": float(rel[i, j])})
    rep.data["table"] = rows


def _kernel_for(args, pts, domain="quaternion", tol=1e-12):
    fam = make_family(args, 10, domain)
    N = args.max_n or choose_truncation(fam, pts, tol)
    return Kernel(fam.with_N(N), tol=tol)


def cmd_gram_check(args, rep: Report):
    rng = np.random.default_rng(args.seed)
    pts = sample_points(args.family, rng, args.points, args.domain)
    ker = _kernel_for(args, pts, args.domain)
    G = gram_matrix(ker, pts)
    lam = eigenvalues(G, tol=1.0)
    tol = args.tol or 1e-9
    rep.check("min Gram eigenvalue (negated)", -float(lam[0]), tol, N=ker.N, points=args.points, seed=args.seed)
    rep.check("Hermitian defect", hermitian_defect(G), 1e-12 * max(1.0, float(lam[-1])), N=ker.N)
    rep.data["eigenvalues"] = lam


def cmd_square_integrability(args, rep: Report):
    if args.family not in ("monomial", "hermite", "laguerre"):
        raise ConfigProblem("square-integrability covers monomial, hermite and laguerre families")
    rng = np.random.default_rng(args.seed)
    kind = measure_kind(args)
    params = _measure_params(args, kind)
    tol = args.tol or 1e-6
    for p in range(args.pairs):
        xy = sample_points(args.family, rng, 2, args.domain)
        ker = _kernel_for(args, xy, args.domain)
        rules = ladder(kind, params, 3, degree=2 * ker.N + 4, reduction=args.reduction, tail=args.tail)
        res = [kernel_square_integrability(ker, r, xy[0], xy[1]).residual for r in rules]
        rep.check(f"pair {p} residual", res[-1], tol, x=xy[0], y=xy[1], N=ker.N, rule=rules[-1].provenance())
        rep.check(f"pair {p} decreases under refinement", 0.0, 0.0, decreasing(res), ladder=res)


def _partition(args, rule):
    if args.partition:
        return pov.Partition.from_file(args.partition)
    if args.family == "laguerre":
        return pov.radial_split(radial_median(rule))
    return pov.Partition.parse("right: x > 0\nleft: x <= 0")


def cmd_pov(args, rep: Report):
    kind = measure_kind(args)
    N = args.max_n or 6
    fam = make_family(args, N, args.domain)
    ker = Kernel(fam)
    rule = ladder(kind, _measure_params(args, kind), 1, degree=2 * N + 8, reduction=args.reduction,
                  tail=args.tail, orders=_orders(args.orders))[0]
    part = _partition(args, rule)
    ops = pov.pov_measure(ker, rule, part)
    whole = pov.pov_measure(ker, rule, pov.Partition.whole())["X"]
    tol = args.tol or 1e-9
    rep.check("a(X) - I", pov.identity_defect(whole), tol, N=N, rule=rule.provenance())
    total = sum(ops.values())
    rep.check("sum of cells - a(X)", pov.identity_defect(total - whole + pov.identity(N + 1)), 1e-12)
    for name, ok in pov.check_positive(ops).items():
        rep.check(f"a({name}) positive", 0.0, 0.0, ok)
    nested = [pov.Partition.whole(), part]
    add = pov.sigma_additivity_check(ker, rule, nested, np.random.default_rng(args.seed))
    rep.check("sigma-additivity defect", add.max_defect, 1e-12, seed=args.seed)
    rep.check("measures nonnegative", -add.min_measure, 0.0)
    rep.check("monotone under refinement", 0.0, 0.0, add.monotone)
    rep.check("mu(X) - |phi|^2", add.total_vs_norm, tol)


def cmd_naimark(args, rep: Report):
    kind = measure_kind(args)
    N = args.max_n or 5
    fam = make_family(args, N, args.domain)
    ker = Kernel(fam)
    rules = ladder(kind, _measure_params(args, kind), 3, degree=2 * N, reduction=args.reduction,
                   tail=args.tail, orders=_orders(args.orders))
    part = _partition(args, rules[-1])
    res = []
    for r in rules:
        res.append(pov.naimark_residual(ker, r, part).residual)
    tol = args.tol or 1e-7
    rep.check("Naimark residual", res[-1], tol, N=N, cells=part.names, rule=rules[-1].provenance())
    rep.check("decreases under refinement", 0.0, 0.0,
              all(b <= 1.1 * a or max(a, b) <= 1e-14 for a, b in zip(res[:-1], res[1:])), ladder=res)
    for name, mask in zip(part.names, part.masks(rules[-1])):
        idem, herm = pov.pv_defects(mask)
        rep.check(f"P({name}) idempotent", idem, 0.0)
        rep.check(f"P({name}) Hermitian", herm, 0.0)


def cmd_trace_a(args, rep: Report):
    eps = args.epsilon if args.epsilon is not None else 0.5
    N = args.max_n or 100
    A = pov.DiagonalOperatorA(eps, N)
    tr = A.trace_inverse()
    exact = 1.0 / (1.0 - eps)
    rep.check("partial trace of A^-1 vs 1/(1-eps)", abs(tr - exact), args.tol or 1e-12, N=N, epsilon=eps,
              trace=tr, tail_bound=eps ** (N + 1) / (1.0 - eps))


COMMANDS = {
    "quat-selftest": cmd_quat_selftest,
    "orthogonality": cmd_orthogonality,
    "kernel-compare": cmd_kernel_compare,
    "gram-check": cmd_gram_check,
    "square-integrability": cmd_square_integrability,
    "pov": cmd_pov,
    "naimark": cmd_naimark,
    "trace-a": cmd_trace_a,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=("monomial", "hermite", "laguerre", "hermite2"), default="monomial")
    common.add_argument("--epsilon", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--max-n", "--N", dest="max_n", type=int)
    common.add_argument("--fixed", type=int, default=0, help="frozen first index of the two-index family")
    common.add_argument("--domain", choices=("quaternion", "complex", "real"), default="quaternion")
    common.add_argument("--measure", choices=sorted(set(MEASURES.values())))
    common.add_argument("--reduction", choices=("reduced", "full"))
    common.add_argument("--orders", help="comma list like radial=16,angular=32")
    common.add_argument("--tail", type=float, default=1e-14)
    common.add_argument("--tol", type=float)
    common.add_argument("--partition", help="partition file, one 'name: predicate' per line")
    common.add_argument("--grid", default="-2:2:0.5")
    common.add_argument("--points", type=int, default=20)
    common.add_argument("--pairs", type=int, default=5)
    common.add_argument("--scale", type=float, default=1.0, help="case-count multiplier for quat-selftest")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")
    common.add_argument("--config", help="JSON file with the same fields as the flags")
    parser = argparse.ArgumentParser(prog="qrkhs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigProblem(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigProblem("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    known = set(vars(args)) - {"command", "config"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigProblem(f"unknown config keys {sorted(unknown)}")
    # flags given on the command line win over the file
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


CONFIG_ERRORS = (ConfigProblem, errors.ConfigError, errors.BadParams, errors.PartitionError, errors.DomainError,
                 errors.IndexTooLarge, OSError)


def _join_negative_values(argv):
    # let "--grid -2:2:0.5" through; argparse would read -2:2:0.5 as a flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--grid={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = _apply_config(parser, argv)
    except ConfigProblem as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config")}
    rep = Report(args.command, config)
    try:
        COMMANDS[args.command](args, rep)
    except CONFIG_ERRORS as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (errors.QRKHSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    text = rep.render(args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if rep.passed else EXIT_TOL


if __name__ == "__main__":
    sys.exit(main())
