"""Charts, scalar fields on them, points and seeded samplers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import nodes as N
from .parser import parse
from .program import DomainError, Program

log = logging.getLogger(__name__)

MAX_DRAWS = 100_000
DEFAULT_SAMPLES = 32
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Chart:
    coords: tuple
    constants: tuple = ()  # sorted (name, value) pairs

    def __post_init__(self):
        coords = tuple(str(c) for c in self.coords)
        consts = self.constants
        if isinstance(consts, dict):
            consts = consts.items()
        consts = tuple(sorted((str(k), float(v)) for k, v in consts))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "constants", consts)
        if not coords:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinate names in {coords}")
        names = [k for k, _ in consts]
        if len(set(names)) != len(names):
            raise ValueError("duplicate constant names")
        clash = set(coords) & set(names)
        if clash:
            raise ValueError(f"names used both as coordinate and constant: {sorted(clash)}")
        for name in coords + tuple(names):
            if name == "sqrt" or not name.isidentifier():
                raise ValueError(f"invalid symbol name {name!r}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def const_map(self) -> dict:
        return dict(self.constants)

    @property
    def names(self) -> frozenset:
        return frozenset(self.coords) | frozenset(self.const_map)

    def index(self, coord: str) -> int:
        try:
            return self.coords.index(coord)
        except ValueError:
            raise KeyError(f"{coord!r} is not a coordinate of this chart") from None

    def coord(self, name: str) -> "ScalarField":
        self.index(name)
        return ScalarField(self, N.sym(name))

    def constant(self, name: str) -> "ScalarField":
        if name not in self.const_map:
            raise KeyError(f"{name!r} is not a constant of this chart")
        return ScalarField(self, N.sym(name))

    def point(self, *values, **named) -> "Point":
        if named:
            if values:
                raise TypeError("give values positionally or by name, not both")
            values = [named.get(c, 0.0) for c in self.coords]
            unknown = set(named) - set(self.coords)
            if unknown:
                raise KeyError(f"unknown coordinates {sorted(unknown)}")
        elif len(values) == 1 and np.ndim(values[0]) == 1:
            values = values[0]
        return Point(self, tuple(float(v) for v in values))

    def program(self, exprs) -> Program:
        return Program(exprs, self.coords, self.const_map)

    def evaluate(self, exprs, points) -> np.ndarray:
        """Values of many expressions at many points, shape (S, len(exprs))."""
        exprs = list(exprs)
        pts = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        if not exprs:
            return np.zeros((pts.shape[0], 0))
        return self.program(exprs).run(pts)


@dataclass(frozen=True)
class Point:
    chart: Chart
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.chart.dim:
            raise ValueError(f"point has {len(self.values)} values, chart dim is {self.chart.dim}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _check_chart(a: Chart, b: Chart):
    if a != b:
        raise ValueError("operands live on different charts")


@dataclass(frozen=True, eq=False)
class ScalarField:
    chart: Chart
    expr: N.Expr

    def __post_init__(self):
        expr = N.lift(self.expr)
        object.__setattr__(self, "expr", expr)
        missing = N.free_symbols(expr) - self.chart.names
        if missing:
            raise KeyError(f"symbols not in chart: {sorted(missing)}")

    def _other(self, other):
        if isinstance(other, ScalarField):
            _check_chart(self.chart, other.chart)
            return other.expr
        return N.lift(other)

    def __add__(self, o):
        return ScalarField(self.chart, N.add(self.expr, self._other(o)))

    __radd__ = __add__

    def __sub__(self, o):
        return ScalarField(self.chart, N.add(self.expr, N.neg(self._other(o))))

    def __rsub__(self, o):
        return ScalarField(self.chart, N.add(self._other(o), N.neg(self.expr)))

    def __mul__(self, o):
        return ScalarField(self.chart, N.mul(self.expr, self._other(o)))

    def __rmul__(self, o):
        return ScalarField(self.chart, N.mul(self._other(o), self.expr))

    def __truediv__(self, o):
        return ScalarField(self.chart, N.div(self.expr, self._other(o)))

    def __rtruediv__(self, o):
        return ScalarField(self.chart, N.div(self._other(o), self.expr))

    def __neg__(self):
        return ScalarField(self.chart, N.neg(self.expr))

    def __pow__(self, k):
        return ScalarField(self.chart, N.power(self.expr, k))

    def diff(self, coord: str) -> "ScalarField":
        return diff(self, coord)

    def __call__(self, point) -> float:
        return evaluate(self, point)

    def text(self) -> str:
        return N.to_text(self.expr)

    def __str__(self):
        return self.text()

    def __repr__(self):
        return f"ScalarField({self.text()!r})"


def parse_expr(text: str, chart: Chart) -> ScalarField:
    return ScalarField(chart, parse(text, chart.names))


def diff(f: ScalarField, coord: str) -> ScalarField:
    f.chart.index(coord)
    return ScalarField(f.chart, N.diff(f.expr, coord))


def evaluate(f: ScalarField, p) -> float:
    if isinstance(p, Point):
        _check_chart(f.chart, p.chart)
        values = p.as_array()
    else:
        values = np.asarray(p, dtype=np.float64)
    return float(f.chart.evaluate([f.expr], values)[0, 0])


def relative_residual(a, b) -> float:
    """max |a-b| / (1 + max(|a|,|b|)) over all entries; 0 for empty input."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 and b.size == 0:
        return 0.0
    r = np.abs(a - b) / (1.0 + np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(r))


@dataclass(frozen=True, eq=False)
class Sampler:
    """Seeded rejection sampler over a coordinate box."""

    chart: Chart
    box: tuple
    constraint: ScalarField | None = None
    seed: int = 0
    count: int = DEFAULT_SAMPLES
    batch: int = field(default=256, repr=False)

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.chart.dim:
            raise ValueError(f"box has {len(box)} intervals, chart dim is {self.chart.dim}")
        for lo, hi in box:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad interval [{lo}, {hi}]")
        if self.count < 1:
            raise ValueError("sample count must be positive")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        if self.constraint is not None:
            _check_chart(self.chart, self.constraint.chart)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "seed", int(self.seed))
        self.points  # noqa: B018 - fail fast when too few points are admissible

    @classmethod
    def uniform(cls, chart: Chart, lo=-1.0, hi=1.0, **kw) -> "Sampler":
        return cls(chart, ((lo, hi),) * chart.dim, **kw)

    @cached_property
    def points(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        prog = None if self.constraint is None else self.chart.program([self.constraint.expr])
        kept = []
        drawn = 0
        while drawn < MAX_DRAWS and len(kept) < self.count:
            m = min(self.batch, MAX_DRAWS - drawn)
            cand = lo + (hi - lo) * rng.random((m, self.chart.dim))
            drawn += m
            if prog is None:
                kept.extend(cand)
            else:
                kept.extend(cand[_admissible(prog, cand)])
        if len(kept) < self.count:
            raise ValueError(
                f"only {len(kept)} admissible points in {MAX_DRAWS} draws; "
                f"{self.count} required"
            )
        out = np.array(kept[: self.count])
        out.setflags(write=False)
        return out

    def point_list(self) -> list:
        return [Point(self.chart, tuple(row)) for row in self.points]

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "box": [list(b) for b in self.box],
            "constraint": None if self.constraint is None else self.constraint.text(),
        }

    def with_count(self, count: int) -> "Sampler":
        return Sampler(self.chart, self.box, self.constraint, self.seed, count)


def _admissible(prog: Program, cand: np.ndarray) -> np.ndarray:
    try:
        return prog.run(cand)[:, 0] < 0.0
    except DomainError:
        # fall back to point-wise so one bad draw only rejects itself
        mask = np.zeros(len(cand), dtype=bool)
        for i, row in enumerate(cand):
            try:
                mask[i] = prog.run(row[None, :])[0, 0] < 0.0
            except DomainError:
                mask[i] = False
        return mask


def field_equal(f: ScalarField, g: ScalarField, s: Sampler, tol: float = DEFAULT_TOL):
    """(equal, residual) over the sampler's points.

    A domain error at a sample fails the comparison with residual inf and
    logs the offending point.
    """
    _check_chart(f.chart, g.chart)
    _check_chart(f.chart, s.chart)
    try:
        vals = f.chart.evaluate([f.expr, g.expr], s.points)
    except DomainError as err:
        log.warning("field comparison failed: %s", err)
        return False, math.inf
    res = relative_residual(vals[:, 0], vals[:, 1])
    return res <= tol, res
