"""Metric specifications in a single analytic chart, and point-wise jets.

A MetricSpec holds symbolic entries g_ij over coordinates x1..xn.  Jets
carry exact partial derivatives of g up to third order, which is the
depth the Cotton-York tensor needs (it differentiates the Schouten
tensor, hence Ricci, hence two Christoffel derivatives).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    Const,
    EvaluationDomainError,
    Expr,
    ParseError,
    call,
    compile_exprs,
    const,
    parse_expr,
    var,
)

__all__ = [
    "MetricSpec",
    "MetricJet",
    "MetricError",
    "SingularMetricError",
    "ChartDomainError",
    "preset",
    "metric_jet",
    "load_config",
    "parse_config",
    "PRESET_NAMES",
]

PRESET_NAMES = ("flat", "sphere", "hyperbolic", "ppwave", "s2xs2", "bumpy")

_DET_FLOOR = 1e-12


class MetricError(ValueError):
    """Invalid metric specification or evaluation failure."""


class SingularMetricError(MetricError):
    """Metric matrix is (numerically) singular at the requested point."""


class ChartDomainError(MetricError):
    """Point lies outside the declared chart domain."""


@dataclass(frozen=True)
class MetricSpec:
    """Symmetric matrix of expressions plus declared signature.

    signature is (p, q) = (positive, negative) eigenvalue counts.
    chart_domain, when present, is a per-coordinate (lo, hi) box.
    """

    n: int
    entries: tuple  # tuple of tuples of Expr, symmetric
    signature: tuple
    chart_domain: tuple | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.n < 3:
            raise MetricError("dimension must be at least 3")
        if len(self.entries) != self.n or any(len(row) != self.n for row in self.entries):
            raise MetricError("entries must form an n x n matrix")
        if self.entries != tuple(tuple(row[i] for row in self.entries) for i in range(self.n)):
            raise MetricError("entries matrix must be symmetric")
        p, q = self.signature
        if p + q != self.n or p < 0 or q < 0:
            raise MetricError(f"signature {self.signature} incompatible with n={self.n}")

    def contains(self, x) -> bool:
        if self.chart_domain is None:
            return True
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, self.chart_domain))

    def domain_box(self, margin: float = 0.8):
        """Sampling box: declared domain shrunk toward 0, else [-margin, margin]^n."""
        if self.chart_domain is None:
            return [(-margin, margin)] * self.n
        return [(lo * margin, hi * margin) for lo, hi in self.chart_domain]

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        box = self.domain_box()
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        return rng.uniform(lo, hi, size=(count, self.n))


@dataclass
class MetricJet:
    """Metric values and exact partials to order three at one point.

    Derivative indices come first: dg[k,i,j] = d_k g_ij,
    d2g[l,k,i,j] = d_l d_k g_ij, d3g[m,l,k,i,j] = d_m d_l d_k g_ij.
    """

    point: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray
    d3g: np.ndarray
    ginv: np.ndarray
    spec: MetricSpec = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.g.shape[0]


class _JetEvaluator:
    """Compiled table of g and its symbolic partials up to order 3.

    Only canonical index combinations are compiled (i <= j in the metric
    indices, sorted derivative multi-indices); arrays are filled
    symmetrically so mixed-partial symmetry holds exactly.
    """

    def __init__(self, spec: MetricSpec, max_order: int = 3):
        self.spec = spec
        self.max_order = max_order
        n = spec.n
        self.pairs = [(i, j) for i in range(n) for j in range(i, n)]
        self.derivs = {
            order: list(itertools.combinations_with_replacement(range(n), order))
            for order in range(1, max_order + 1)
        }
        exprs = []
        self.layout = []  # (order, deriv_multi_index, i, j)
        for i, j in self.pairs:
            exprs.append(spec.entries[i][j])
            self.layout.append((0, (), i, j))
            base = {(): spec.entries[i][j]}
            for order in range(1, max_order + 1):
                level = {}
                for multi in self.derivs[order]:
                    parent = base[multi[1:]] if order > 1 else base[()]
                    level[multi] = parent.diff(multi[0])
                    exprs.append(level[multi])
                    self.layout.append((order, multi, i, j))
                base.update(level)
        self.table = compile_exprs(exprs)

    def jet(self, x: np.ndarray) -> MetricJet:
        n = self.spec.n
        try:
            values = self.table(x)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise EvaluationDomainError(str(exc)) from exc
        g = np.zeros((n, n))
        dg = np.zeros((n, n, n))
        d2g = np.zeros((n, n, n, n))
        d3g = np.zeros((n, n, n, n, n))
        arrays = {0: g, 1: dg, 2: d2g, 3: d3g}
        for value, (order, multi, i, j) in zip(values, self.layout):
            target = arrays[order]
            for perm in set(itertools.permutations(multi)):
                target[perm + (i, j)] = value
                target[perm + (j, i)] = value
        return MetricJet(point=np.asarray(x, dtype=float), g=g, dg=dg, d2g=d2g,
                         d3g=d3g, ginv=np.zeros((n, n)), spec=self.spec)


_evaluators: dict[tuple, _JetEvaluator] = {}


def _evaluator(spec: MetricSpec, order: int = 3) -> _JetEvaluator:
    key = (id(spec), order)
    ev = _evaluators.get(key)
    if ev is None or ev.spec is not spec:
        ev = _JetEvaluator(spec, order)
        _evaluators[key] = ev
    return ev


def metric_jet(spec: MetricSpec, x, order: int = 3) -> MetricJet:
    """Evaluate the metric jet at point x to the requested order (2 or 3)."""
    if order not in (2, 3):
        raise MetricError("jet order must be 2 or 3")
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise MetricError(f"point must have {spec.n} coordinates")
    if not spec.contains(x):
        raise ChartDomainError(f"point {x.tolist()} outside chart domain")
    jet = _evaluator(spec, order).jet(x)
    det = np.linalg.det(jet.g)
    scale = max(1.0, float(np.max(np.abs(jet.g))) ** spec.n)
    if abs(det) <= _DET_FLOOR * scale:
        raise SingularMetricError(f"metric singular at {x.tolist()} (det={det:.3e})")
    jet.ginv = np.linalg.solve(jet.g, np.eye(spec.n))
    return jet


def signature_at(spec: MetricSpec, x) -> tuple:
    """(positive, negative) eigenvalue counts of g at x."""
    jet = metric_jet(spec, x)
    eigs = np.linalg.eigvalsh(jet.g)
    return int(np.sum(eigs > 0)), int(np.sum(eigs < 0))


# -- presets ------------------------------------------------------------------


def _delta(n: int, diag: Expr | None = None):
    zero, one = const(0.0), const(1.0)
    d = one if diag is None else diag
    return tuple(tuple(d if i == j else zero for j in range(n)) for i in range(n))


def _conformal_round(n: int, offsets, sign: float, radius: float) -> Expr:
    """Conformal factor 4 r^4 / (r^2 +/- |x|^2)^2 over the listed coordinates."""
    r2 = const(radius * radius)
    norm = r2
    for k in offsets:
        norm = norm + (var(k) ** 2 if sign > 0 else -(var(k) ** 2))
    return const(4.0 * radius**4) / (norm**2)


def preset(name: str, **params) -> MetricSpec:
    """Built-in metrics; params supply n, radius, eps where applicable."""
    if name not in PRESET_NAMES:
        raise MetricError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    n = int(params.pop("n", 4 if name in ("ppwave", "s2xs2") else 3))
    if name in ("ppwave", "s2xs2") and n != 4:
        raise MetricError(f"preset {name!r} requires n=4")
    if n < 3:
        raise MetricError("dimension must be at least 3")

    if name == "flat":
        spec = MetricSpec(n, _delta(n), (n, 0), name=name)
    elif name == "sphere":
        radius = float(params.pop("radius", 1.0))
        c = _conformal_round(n, range(n), +1.0, radius)
        spec = MetricSpec(n, _delta(n, c), (n, 0),
                          chart_domain=tuple((-1.0, 1.0) for _ in range(n)), name=name)
    elif name == "hyperbolic":
        radius = float(params.pop("radius", 1.0))
        c = _conformal_round(n, range(n), -1.0, radius)
        bound = 0.45 * radius / math.sqrt(n)
        spec = MetricSpec(n, _delta(n, c), (n, 0),
                          chart_domain=tuple((-bound, bound) for _ in range(n)), name=name)
    elif name == "ppwave":
        # coordinates (u, v, y1, y2); H = y1^2 - y2^2 is harmonic, so Ricci-flat
        zero, one = const(0.0), const(1.0)
        H = var(2) ** 2 - var(3) ** 2
        rows = [
            (H, one, zero, zero),
            (one, zero, zero, zero),
            (zero, zero, one, zero),
            (zero, zero, zero, one),
        ]
        spec = MetricSpec(4, tuple(rows), (3, 1), name=name)
    elif name == "s2xs2":
        zero = const(0.0)
        c1 = _conformal_round(2, (0, 1), +1.0, 1.0)
        c2 = _conformal_round(2, (2, 3), +1.0, 1.0)
        diag = (c1, c1, c2, c2)
        rows = tuple(tuple(diag[i] if i == j else zero for j in range(4)) for i in range(4))
        spec = MetricSpec(4, rows, (4, 0),
                          chart_domain=tuple((-1.0, 1.0) for _ in range(4)), name=name)
    else:  # bumpy
        eps = float(params.pop("eps", 0.1))
        matrix = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                bump = const(eps) * call("sin", var(i) + var(j))
                entry = (const(1.0) + bump) if i == j else bump
                matrix[i][j] = matrix[j][i] = entry
        spec = MetricSpec(n, tuple(tuple(row) for row in matrix), (n, 0),
                          name=f"bumpy(eps={eps})")
    if params:
        raise MetricError(f"unused preset parameters: {sorted(params)}")
    return spec


# -- config files -------------------------------------------------------------


def parse_config(text: str) -> MetricSpec:
    """Parse the metric config format.

    Either explicit entries:
        dim = <n>
        signature = <p>,<q>
        g[i][j] = <expression>      # 1-based, symmetric autofill, default 0
    or a preset:
        preset = <name>
        param.<key> = <value>
    Lines starting with '#' and blank lines are ignored.
    """
    dim = None
    signature = None
    entries: dict[tuple, str] = {}
    preset_name = None
    preset_params: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MetricError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "dim":
            dim = int(value)
        elif key == "signature":
            parts = value.split(",")
            if len(parts) != 2:
                raise MetricError(f"line {lineno}: signature must be 'p,q'")
            signature = (int(parts[0]), int(parts[1]))
        elif key == "preset":
            preset_name = value
        elif key.startswith("param."):
            preset_params[key[len("param."):]] = float(value)
        elif key.startswith("g["):
            try:
                i_part, j_part = key[1:].split("][")
                i = int(i_part[1:])
                j = int(j_part.rstrip("]"))
            except ValueError:
                raise MetricError(f"line {lineno}: bad entry key {key!r}") from None
            entries[(i, j)] = value
        else:
            raise MetricError(f"line {lineno}: unknown key {key!r}")

    if preset_name is not None:
        if "n" in preset_params:
            preset_params["n"] = int(preset_params["n"])
        return preset(preset_name, **preset_params)
    if dim is None:
        raise MetricError("config must declare 'dim' or 'preset'")
    n = dim
    matrix = [[Const(0.0) for _ in range(n)] for _ in range(n)]
    for (i, j), expr_text in entries.items():
        if not (1 <= i <= n and 1 <= j <= n):
            raise MetricError(f"entry g[{i}][{j}] outside dimension {n}")
        try:
            e = parse_expr(expr_text, n)
        except ParseError as exc:
            raise MetricError(f"entry g[{i}][{j}]: {exc}") from exc
        matrix[i - 1][j - 1] = e
        matrix[j - 1][i - 1] = e
    if signature is None:
        signature = (n, 0)
    return MetricSpec(n, tuple(tuple(row) for row in matrix), signature)


def load_config(path) -> MetricSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
