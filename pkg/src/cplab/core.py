"""Grid model for piecewise-constant functions on a bounded dyadic interval.

Everything in cplab lives on a :class:`GridDomain` ``[0, 2**K)`` cut into
``2**(K+L)`` cells of width ``2**-L``.  Functions are constant on cells, so
integrals, rearrangements, oscillations and norms all reduce to finite
computations on the cell values.  Cell endpoints are binary fractions and are
represented exactly by floats.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .errors import AlignmentError, DomainError, ParameterError

MAX_RESOLUTION = 26


@dataclass(frozen=True)
class GridDomain:
    """The interval ``[0, 2**K)`` with ``2**(K+L)`` cells of width ``2**-L``."""

    K: int
    L: int

    def __post_init__(self):
        if int(self.K) != self.K or int(self.L) != self.L or self.K < 0 or self.L < 0:
            raise ParameterError(f"K and L must be non-negative integers, got K={self.K}, L={self.L}")
        if self.K + self.L > MAX_RESOLUTION:
            raise ParameterError(f"K + L must be <= {MAX_RESOLUTION}")

    @property
    def n(self) -> int:
        """Number of cells."""
        return 1 << (self.K + self.L)

    @property
    def h(self) -> float:
        """Cell width."""
        return 2.0 ** (-self.L)

    @property
    def length(self) -> float:
        return 2.0 ** self.K

    @property
    def max_level(self) -> int:
        """Dyadic level of a single cell (level 0 is the whole domain)."""
        return self.K + self.L

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    def cube(self, start: int, stop: int) -> "Cube":
        """Grid-aligned cube covering cells ``start .. stop-1``."""
        if not 0 <= start < stop <= self.n:
            raise DomainError(f"cell range [{start}, {stop}) outside domain of {self.n} cells")
        c = Cube(start * self.h, (stop - start) * self.h)
        level = c.dyadic_level(self)
        return Cube(c.left, c.length, level) if level is not None else c

    def dyadic(self, level: int, index: int) -> "Cube":
        if not 0 <= level <= self.max_level:
            raise ParameterError(f"level {level} outside 0..{self.max_level}")
        if not 0 <= index < (1 << level):
            raise ParameterError(f"index {index} outside level {level}")
        length = self.length / (1 << level)
        return Cube(index * length, length, level)

    def whole(self) -> "Cube":
        return Cube(0.0, self.length, 0)

    def dyadic_cubes(self, min_level: int = 0, max_level: Optional[int] = None) -> Iterator["Cube"]:
        """All dyadic cubes, coarse to fine, left to right within a level."""
        top = self.max_level if max_level is None else max_level
        for level in range(min_level, top + 1):
            for index in range(1 << level):
                yield self.dyadic(level, index)


@dataclass(frozen=True)
class Cube:
    """Half-open interval ``[left, left + length)``.

    ``level`` is set when the cube is a dyadic cube of the domain lattice.
    """

    left: float
    length: float
    level: Optional[int] = None

    def __post_init__(self):
        if not self.length > 0:
            raise ParameterError(f"cube length must be positive, got {self.length}")

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def center(self) -> float:
        return self.left + 0.5 * self.length

    def cells(self, dom: GridDomain) -> tuple:
        """Cell index range ``(start, stop)``; raises if misaligned or outside."""
        start = self.left / dom.h
        stop = self.right / dom.h
        if start != math.floor(start) or stop != math.floor(stop):
            raise AlignmentError(f"{self} is not aligned to cells of width {dom.h}")
        start, stop = int(start), int(stop)
        if start < 0 or stop > dom.n:
            raise DomainError(f"{self} leaves the domain [0, {dom.length})")
        return start, stop

    def ncells(self, dom: GridDomain) -> int:
        start, stop = self.cells(dom)
        return stop - start

    def dyadic_level(self, dom: GridDomain) -> Optional[int]:
        ratio = dom.length / self.length
        m = round(math.log2(ratio)) if ratio >= 1 else -1
        if m < 0 or 2.0 ** m != ratio or m > dom.max_level:
            return None
        j = self.left / self.length
        if j != math.floor(j) or j < 0 or j >= (1 << m):
            return None
        return m

    def is_dyadic(self, dom: GridDomain) -> bool:
        return self.dyadic_level(dom) is not None

    def index(self) -> int:
        """Position of a dyadic cube within its level."""
        if self.level is None:
            raise AlignmentError(f"{self} carries no dyadic level")
        return int(self.left / self.length)

    def dilate(self, factor: float) -> tuple:
        """Endpoints of the concentric dilate ``factor * Q`` (not clipped)."""
        half = 0.5 * factor * self.length
        return self.center - half, self.center + half

    def dilate_clipped(self, factor: float, dom: GridDomain) -> "Cube":
        """``factor * Q`` intersected with the domain; must land on the grid."""
        lo, hi = self.dilate(factor)
        lo, hi = max(lo, 0.0), min(hi, dom.length)
        c = Cube(lo, hi - lo)
        c.cells(dom)
        return c

    def contains(self, other: "Cube") -> bool:
        return self.left <= other.left and other.right <= self.right

    def intersects(self, other: "Cube") -> bool:
        return self.left < other.right and other.left < self.right

    def children(self) -> tuple:
        half = 0.5 * self.length
        lvl = None if self.level is None else self.level + 1
        return Cube(self.left, half, lvl), Cube(self.left + half, half, lvl)

    def parent(self, dom: GridDomain) -> "Cube":
        if self.level is None or self.level == 0:
            raise ParameterError(f"{self} has no dyadic parent")
        return dom.dyadic(self.level - 1, self.index() // 2)

    def label(self) -> str:
        if self.level is not None:
            return f"cube:{self.level}/{self.index()}"
        return f"cube:[{self.left!r},{self.right!r})"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real function, constant on each cell of ``domain``."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.domain.n,):
            raise DomainError(f"expected {self.domain.n} cell values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, dom: GridDomain, c: float) -> "GridFunction":
        return cls(dom, np.full(dom.n, float(c)))

    @classmethod
    def indicator(cls, dom: GridDomain, where: Union["Cube", np.ndarray, Sequence["Cube"]]) -> "GridFunction":
        return cls(dom, cell_mask(dom, where).astype(float))

    @classmethod
    def from_midpoints(cls, dom: GridDomain, fn) -> "GridFunction":
        return cls(dom, fn(dom.midpoints))

    def __len__(self):
        return self.domain.n

    def _other(self, other):
        if isinstance(other, GridFunction):
            check_same_domain(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.domain, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.domain, self.values - self._other(other))

    def __mul__(self, other):
        return GridFunction(self.domain, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.domain, -self.values)

    def __abs__(self):
        return GridFunction(self.domain, np.abs(self.values))

    def on(self, Q: Cube) -> np.ndarray:
        """Cell values of the function on ``Q``."""
        start, stop = Q.cells(self.domain)
        return self.values[start:stop]

    def times_indicator(self, where) -> "GridFunction":
        return GridFunction(self.domain, np.where(cell_mask(self.domain, where), self.values, 0.0))

    def check_weight(self) -> "GridFunction":
        if np.any(self.values < 0) or not np.any(self.values > 0):
            raise ParameterError("a weight must be non-negative and not identically zero")
        return self


def check_same_domain(*fns: GridFunction) -> GridDomain:
    dom = fns[0].domain
    for g in fns[1:]:
        if g.domain != dom:
            raise DomainError(f"domain mismatch: {dom} vs {g.domain}")
    return dom


def cell_mask(dom: GridDomain, where) -> np.ndarray:
    """Boolean cell mask for a cube, a list of cubes, or an existing mask."""
    if isinstance(where, Cube):
        where = [where]
    if isinstance(where, np.ndarray) and where.dtype == bool:
        if where.shape != (dom.n,):
            raise DomainError(f"mask has shape {where.shape}, domain has {dom.n} cells")
        return where
    mask = np.zeros(dom.n, dtype=bool)
    for Q in where:
        start, stop = Q.cells(dom)
        mask[start:stop] = True
    return mask


def measure(dom: GridDomain, mask: np.ndarray) -> float:
    return float(np.count_nonzero(mask)) * dom.h


def integrate(f: GridFunction, Q: Optional[Cube] = None, w: Optional[GridFunction] = None) -> float:
    """Exact cell sum of ``f`` (or ``f*w``) over ``Q`` (default: the whole domain)."""
    dom = f.domain
    vals = f.values
    if w is not None:
        check_same_domain(f, w)
        vals = vals * w.values
    if Q is None:
        return math.fsum(vals) * dom.h
    start, stop = Q.cells(dom)
    return math.fsum(vals[start:stop]) * dom.h


def average(f: GridFunction, Q: Cube, w: Optional[GridFunction] = None) -> float:
    return integrate(f, Q, w) / Q.length


@dataclass(frozen=True)
class Rearrangement:
    """Non-increasing rearrangement of a step function.

    ``values`` are the distinct values of ``|f|`` in decreasing order and
    ``measures[k]`` is the measure of ``{|f| >= values[k]}``.  Evaluation is
    right-continuous: ``f*(t) = inf{a : |{|f| > a}| <= t}``.
    """

    values: np.ndarray
    measures: np.ndarray

    @property
    def total(self) -> float:
        return float(self.measures[-1]) if len(self.measures) else 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if len(self.values) == 0:
            return np.zeros_like(t)[()]
        k = np.searchsorted(self.measures, t, side="right")
        padded = np.append(self.values, 0.0)
        return padded[k][()]

    def distribution(self, alpha: float) -> float:
        """Measure of ``{|f| > alpha}``."""
        idx = np.searchsorted(-self.values, -alpha, side="left")
        return float(self.measures[idx - 1]) if idx > 0 else 0.0

    def pairs(self) -> list:
        return list(zip(self.values.tolist(), self.measures.tolist()))


def rearrange_values(vals: np.ndarray, h: float) -> Rearrangement:
    a = np.sort(np.abs(np.asarray(vals, dtype=float)))[::-1]
    if a.size == 0:
        return Rearrangement(np.empty(0), np.empty(0))
    uniq, counts = np.unique(a, return_counts=True)
    uniq, counts = uniq[::-1], counts[::-1]
    return Rearrangement(uniq, np.cumsum(counts) * h)


def rearrangement(f: GridFunction, S=None) -> Rearrangement:
    """Rearrangement of ``|f|`` restricted to the cell set ``S`` (default: everything)."""
    vals = f.values if S is None else f.values[cell_mask(f.domain, S)]
    return rearrange_values(vals, f.domain.h)


def median(f: GridFunction, Q: Cube) -> float:
    """Smallest cell value ``m`` with at most half of ``Q`` strictly above and strictly below it."""
    return median_of(f.on(Q))


def median_of(vals: np.ndarray) -> float:
    x = np.sort(vals)
    m = len(x)
    uniq = np.unique(x)
    below = np.searchsorted(x, uniq, side="left")
    above = m - np.searchsorted(x, uniq, side="right")
    ok = (2 * below <= m) & (2 * above <= m)
    return float(uniq[np.argmax(ok)])


def _check_lambda(lam: float):
    if not 0 < lam < 1:
        raise ParameterError(f"lambda must lie in (0, 1), got {lam}")


def window_size(m: int, lam: float) -> int:
    """Number of cells an admissible set must keep out of ``m`` at level ``lam``."""
    return m - math.floor(lam * m)


def optimal_window(vals: np.ndarray, lam: float) -> tuple:
    """Leftmost shortest window ``(lo, hi)`` of sorted values holding ``window_size`` cells.

    Every constant ``c`` in the optimal oscillation problem is the midrange of
    such a window, and ``hi - lo`` is the tilde oscillation.
    """
    _check_lambda(lam)
    x = np.sort(np.asarray(vals, dtype=float))
    s = window_size(len(x), lam)
    spans = x[s - 1:] - x[: len(x) - s + 1]
    i = int(np.argmin(spans))
    return float(x[i]), float(x[i + s - 1])


def oscillation(f: GridFunction, Q: Cube, lam: float, kind: str = "standard") -> float:
    """λ-oscillation of ``f`` over ``Q``.

    ``standard`` is ``inf_c ((f - c) chi_Q)^*(lam |Q|)``; ``tilde`` is the least
    ``sup_E f - inf_E f`` over ``E ⊂ Q`` with ``|E| >= (1 - lam)|Q|``.
    """
    lo, hi = optimal_window(f.on(Q), lam)
    if kind == "standard":
        return 0.5 * (hi - lo)
    if kind == "tilde":
        return hi - lo
    raise ParameterError(f"unknown oscillation kind {kind!r}")


def weighted_norm(f: GridFunction, w: GridFunction, p: float, kind: str = "strong") -> float:
    """Strong ``L^p(w)`` or weak ``L^{p,inf}(w)`` norm of ``f``.

    The weak norm ``sup_a a * w({|f| > a})**(1/p)`` is approached as ``a``
    increases to a value of ``|f|``, so it equals the maximum over values
    ``v`` of ``v * w({|f| >= v})**(1/p)``.
    """
    check_same_domain(f, w)
    if not p > 0:
        raise ParameterError(f"p must be positive, got {p}")
    a = np.abs(f.values)
    h = f.domain.h
    if kind == "strong":
        return (math.fsum(a ** p * w.values) * h) ** (1.0 / p)
    if kind != "weak":
        raise ParameterError(f"unknown norm kind {kind!r}")
    order = np.argsort(-a, kind="stable")
    a_sorted = a[order]
    wmass = np.cumsum(w.values[order]) * h
    # group ties: w({|f| >= v}) is the cumulative mass at the last occurrence of v
    last = np.r_[a_sorted[1:] != a_sorted[:-1], True]
    v, mass = a_sorted[last], wmass[last]
    keep = v > 0
    if not np.any(keep):
        return 0.0
    return float(np.max(v[keep] * np.maximum(mass[keep], 0.0) ** (1.0 / p)))


def lorentz_r1_bound(w: GridFunction, Q: Cube, r: float) -> tuple:
    """Both sides of ``(avg_Q w^r)^(1/r) <= int_0^1 (w chi_Q)^*(lam|Q|) lam^(1/r - 1) dlam``.

    The right side is integrated in closed form: the rearrangement is constant
    on ``[k/m, (k+1)/m)`` for ``m`` cells in ``Q``.
    """
    if not r > 1:
        raise ParameterError(f"r must exceed 1, got {r}")
    vals = np.abs(w.on(Q))
    m = len(vals)
    lhs = (math.fsum(vals ** r) / m) ** (1.0 / r)
    v = np.sort(vals)[::-1]
    grid = (np.arange(m + 1) / m) ** (1.0 / r)
    rhs = r * math.fsum(v * np.diff(grid))
    return lhs, rhs


# text format -----------------------------------------------------------------

def format_gridfn(f: GridFunction) -> str:
    out = io.StringIO()
    out.write(f"gridfn 1 K={f.domain.K} L={f.domain.L}\n")
    for v in f.values:
        out.write(f"{v:.17g}\n")
    return out.getvalue()


def parse_gridfn(text: str) -> GridFunction:
    tokens = text.split()
    if len(tokens) < 4 or tokens[0] != "gridfn" or tokens[1] != "1":
        raise ParameterError("not a gridfn version 1 file")
    try:
        K = int(tokens[2].removeprefix("K="))
        L = int(tokens[3].removeprefix("L="))
        vals = np.array([float(t) for t in tokens[4:]])
    except ValueError as exc:
        raise ParameterError(f"malformed gridfn file: {exc}") from None
    return GridFunction(GridDomain(K, L), vals)


def write_gridfn(path, f: GridFunction):
    with open(path, "w") as fh:
        fh.write(format_gridfn(f))


def read_gridfn(path) -> GridFunction:
    with open(path) as fh:
        return parse_gridfn(fh.read())
