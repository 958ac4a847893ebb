"""Normalized Orlicz averages for ``L log L`` and ``exp L``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import Cube, GridFunction, cell_mask
from .errors import ContainmentError, ParameterError
from .maximal import maximal_values


@dataclass(frozen=True)
class YoungFunction:
    """``LlogL``: ``t log(e + t)``;  ``expL``: ``e**t - 1``."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("LlogL", "expL"):
            raise ParameterError(f"unknown Young function {self.kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "LlogL":
            return t * np.log(math.e + t)
        return np.expm1(t)

    def inverse(self, y: float) -> float:
        if y < 0:
            raise ParameterError("Young function inverse needs y >= 0")
        if y == 0:
            return 0.0
        if self.kind == "expL":
            return math.log1p(y)
        # t log(e + t) >= t, so the root lies in [0, max(1, y)]
        hi = max(1.0, y)
        return brentq(lambda t: float(self(t)) - y, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


LLOGL = YoungFunction("LlogL")
EXPL = YoungFunction("expL")


def orlicz_average_of(vals: np.ndarray, phi: YoungFunction = LLOGL) -> float:
    """``inf{a > 0 : mean(phi(|vals| / a)) <= 1}`` for the cell values of a cube."""
    a = np.abs(np.asarray(vals, dtype=float))
    top = a.max() if a.size else 0.0
    if top == 0:
        return 0.0
    m = len(a)
    # positively homogeneous: solve for a / top so subnormal inputs keep a usable xtol
    a = a / top
    # mean(phi(a/alpha)) is squeezed between phi(1/alpha)/m and phi(1/alpha)
    lo = 1.0 / phi.inverse(float(m))
    hi = 1.0 / phi.inverse(1.0)

    def excess(alpha):
        return math.fsum(phi(a / alpha)) / m - 1.0

    g_lo, g_hi = excess(lo), excess(hi)
    if g_hi >= 0:
        return top * hi
    if g_lo <= 0:
        return top * lo
    return top * brentq(excess, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)


def orlicz_average(f: GridFunction, Q: Cube, phi: YoungFunction = LLOGL) -> float:
    return orlicz_average_of(f.on(Q), phi)


def indicator_average(Q_over_E: float, phi: YoungFunction = LLOGL) -> float:
    """Closed form of the Orlicz average of ``chi_E`` on ``Q`` given ``|Q|/|E|``."""
    return 1.0 / phi.inverse(Q_over_E)


def generalized_holder(f: GridFunction, g: GridFunction, Q: Cube) -> tuple:
    """``(avg_Q |fg|, ||f||_{LlogL,Q} * ||g||_{expL,Q})``."""
    lhs = float(np.mean(np.abs(f.on(Q) * g.on(Q))))
    return lhs, orlicz_average(f, Q, LLOGL) * orlicz_average(g, Q, EXPL)


def holder_check(f: GridFunction, E, Q: Cube) -> tuple:
    """``(int_E |f|, |Q| ||f||_{LlogL,Q} / log(1 + |Q|/|E|))`` for a cell set ``E`` inside ``Q``."""
    dom = f.domain
    mask = cell_mask(dom, E)
    start, stop = Q.cells(dom)
    inside = np.zeros(dom.n, dtype=bool)
    inside[start:stop] = True
    if not mask.any():
        raise ParameterError("E must be non-empty")
    if np.any(mask & ~inside):
        raise ContainmentError("E is not contained in Q")
    lhs = math.fsum(np.abs(f.values[mask])) * dom.h
    ratio = (stop - start) / np.count_nonzero(mask)
    rhs = Q.length * orlicz_average(f, Q) / math.log1p(ratio)
    return lhs, rhs


def stein_ratio(f: GridFunction, Q: Cube) -> float:
    """``||f||_{LlogL,Q} |Q| / int_Q M(f chi_Q)``.

    On ``Q`` the grid maximal function of ``f chi_Q`` only needs cubes inside
    ``Q``: a cube sticking out has a smaller average than its trace on ``Q``.
    """
    vals = f.on(Q)
    if np.any(vals < 0) or not np.any(vals > 0):
        raise ParameterError("stein_ratio needs f >= 0, not identically zero on Q")
    denom = math.fsum(maximal_values(vals)) * f.domain.h
    return orlicz_average_of(vals) * Q.length / denom
