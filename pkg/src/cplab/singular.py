"""Hilbert transform on grid functions: truncations, maximal truncation, the grand
maximal truncated operator and the sign-dual construction.

Kernel normalisation is ``1/pi``: ``Hf(x) = (1/pi) p.v. int f(y) / (x - y) dy``.
Evaluation points are cell midpoints.  For a cell at offset ``d`` cells from
the evaluation cell the exact integral of the kernel is
``ln|d + 1/2| - ln|d - 1/2|`` regardless of the cell width, and the own cell
cancels by symmetry, so every transform below is an exact finite sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.signal import convolve

from .core import Cube, GridDomain, GridFunction, cell_mask
from .errors import FamilyError, GeometryError, ParameterError
from .maximal import _trailing_max
from .orlicz import orlicz_average

_ROWS = 256


def cell_kernel(d) -> np.ndarray:
    """``int`` over the cell at offset ``d`` of ``1 / (x - y)``, in units where cells have width 1."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(d + 0.5)) - np.log(np.abs(d - 0.5))
    return np.where(d == 0, 0.0, out)


def _cell_index(dom: GridDomain, x: float) -> int:
    i = int(math.floor(x / dom.h))
    if not 0 <= i < dom.n or not math.isclose(x, (i + 0.5) * dom.h, rel_tol=0, abs_tol=1e-12 * dom.h):
        raise ParameterError(f"x = {x} is not a cell midpoint of {dom}")
    return i


def hilbert_truncated(f: GridFunction, x: float, eps: float) -> float:
    """``(1/pi) int_{|y - x| > eps} f(y) / (x - y) dy`` at the cell midpoint ``x``."""
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    dom = f.domain
    _cell_index(dom, x)
    u, v = dom.edges[:-1], dom.edges[1:]
    c = f.values
    total = 0.0
    # left of x - eps: integrand 1/(x-y) > 0
    lv = np.minimum(v, x - eps)
    left = u < lv
    if left.any():
        total += math.fsum(c[left] * np.log((x - u[left]) / (x - lv[left])))
    ru = np.maximum(u, x + eps)
    right = ru < v
    if right.any():
        total -= math.fsum(c[right] * np.log((v[right] - x) / (ru[right] - x)))
    return total / math.pi


def _full_kernel(n: int) -> np.ndarray:
    return cell_kernel(np.arange(-(n - 1), n))


def hilbert_full(f: GridFunction) -> GridFunction:
    """Untruncated transform at every cell midpoint (principal value in the own cell)."""
    n = f.domain.n
    method = "direct" if n <= 4096 else "fft"
    out = convolve(f.values, _full_kernel(n), mode="full", method=method)[n - 1: 2 * n - 1]
    return GridFunction(f.domain, out / math.pi)


def hilbert_star(f: GridFunction) -> GridFunction:
    """Maximal truncation ``sup_eps |H_eps f|`` at every midpoint.

    ``eps -> H_eps f(x)`` is monotone between consecutive distances from
    ``x`` to a cell boundary, so the supremum is a maximum over
    ``eps = (k + 1/2) h``, ``k = 0, ..., n - 1``; the truncation at ``k``
    keeps the cells with ``|i - j| > k``.
    """
    n = f.domain.n
    c = np.concatenate([np.zeros(n), f.values, np.zeros(n)])
    kd = cell_kernel(np.arange(1, n))
    out = np.zeros(n)
    for r0 in range(0, n, _ROWS):
        rows = np.arange(r0, min(r0 + _ROWS, n))
        d = np.arange(1, n)
        # terms k(d) (c_{i-d} - c_{i+d}); tail sums over d > k for k = 0..n-1
        terms = kd * (c[rows[:, None] - d + n] - c[rows[:, None] + d + n])
        tails = np.cumsum(terms[:, ::-1], axis=1)[:, ::-1]
        out[rows] = np.abs(tails).max(axis=1) if n > 1 else 0.0
    return GridFunction(f.domain, out / math.pi)


def truncation_candidates(dom: GridDomain) -> np.ndarray:
    return (np.arange(dom.n) + 0.5) * dom.h


def _prefix_table(c: np.ndarray) -> np.ndarray:
    """``T[z, a] = sum_{j < a} c_j k(z - j)``."""
    n = len(c)
    z = np.arange(n)
    A = c[None, :] * cell_kernel(z[:, None] - z[None, :])
    T = np.zeros((n, n + 1))
    np.cumsum(A, axis=1, out=T[:, 1:])
    return T


def grand_maximal(f: GridFunction) -> GridFunction:
    """``sup_{Q ∋ x} max_{z ∈ Q} |H(f chi_{domain \\ 3Q})(z)|`` over grid-aligned cubes.

    The inner supremum is sampled at the midpoints of ``Q``; ``3Q`` is
    clipped to the domain.  Cost is ``O(n^2)`` memory and ``O(n^3)`` time.
    """
    dom = f.domain
    n = dom.n
    T = _prefix_table(f.values)
    full = T[:, n]
    best = np.zeros(n)
    for W in range(1, n + 1):
        s = np.arange(0, n - W + 1)
        z = s[:, None] + np.arange(W)[None, :]
        lo = np.maximum(s - W, 0)[:, None]
        hi = np.minimum(s + 2 * W, n)[:, None]
        val = np.abs(full[z] - (T[z, hi] - T[z, lo])).max(axis=1)
        np.maximum(best, _trailing_max(val, W, n), out=best)
    return GridFunction(dom, best / math.pi)


def _triple_inside(Q: Cube, dom: GridDomain) -> tuple:
    lo, hi = Q.dilate(3)
    if lo < 0 or hi > dom.length:
        raise GeometryError(f"3Q of {Q.label()} leaves the domain")
    return dom.cube(int(round(lo / dom.h)), int(round(hi / dom.h))).cells(dom)


def reverse_llogl(w: GridFunction, Q: Cube) -> tuple:
    """``(||w||_{LlogL,Q} |Q|, int_{3Q} |H(w chi_Q)| + int_Q w)``."""
    dom = w.domain
    if np.any(w.on(Q) < 0):
        raise ParameterError("w must be non-negative on Q")
    a, b = _triple_inside(Q, dom)
    Hw = hilbert_full(w.times_indicator(Q)).values
    s, e = Q.cells(dom)
    rhs = (math.fsum(np.abs(Hw[a:b])) + math.fsum(w.values[s:e])) * dom.h
    return orlicz_average(w, Q) * Q.length, rhs


@dataclass
class DualReport:
    """Both sides of the per-cube duality identity and of the summed bound."""

    lhs: List[float]
    dual: List[float]
    identity_error: float
    bound_lhs: float
    bound_rhs: float

    @property
    def holds(self) -> bool:
        return self.bound_lhs <= self.bound_rhs * (1 + 1e-12) + 1e-300


def dual_sign_test(w: GridFunction, family: Sequence[Cube], p: float = 2.0) -> DualReport:
    """Sign-dual functions ``psi_j = sign H(w chi_{Q_j}) chi_{3Q_j}`` and the identity
    ``int_{3Q_j} |H(w chi_{Q_j})| = -int_{Q_j} H(psi_j) w``.

    The discrete operator is exactly antisymmetric, so the identity holds up
    to rounding.  The bound compares the sum with
    ``int_{U Q_j} (|H psi| + M_H psi) w``.  ``p`` only labels the report's
    context and does not enter either side.
    """
    dom = w.domain
    ranges = [_triple_inside(Q, dom) for Q in family]
    order = sorted(range(len(ranges)), key=lambda j: ranges[j][0])
    for i, j in zip(order, order[1:]):
        if ranges[j][0] < ranges[i][1]:
            raise FamilyError("triples of the family are not pairwise disjoint")
    psi = np.zeros(dom.n)
    lhs, dual = [], []
    err = 0.0
    for Q, (a, b) in zip(family, ranges):
        g = hilbert_full(w.times_indicator(Q)).values
        pj = np.zeros(dom.n)
        pj[a:b] = np.sign(g[a:b])
        psi += pj
        left = math.fsum(np.abs(g[a:b])) * dom.h
        s, e = Q.cells(dom)
        right = -math.fsum(hilbert_full(GridFunction(dom, pj)).values[s:e] * w.values[s:e]) * dom.h
        lhs.append(left)
        dual.append(right)
        scale = max(abs(left), abs(right))
        if scale > 0:
            err = max(err, abs(left - right) / scale)
    psi_f = GridFunction(dom, psi)
    union = cell_mask(dom, list(family))
    Hpsi = np.abs(hilbert_full(psi_f).values)
    Mpsi = grand_maximal(psi_f).values
    rhs = math.fsum(((Hpsi + Mpsi) * w.values)[union]) * dom.h
    return DualReport(lhs, dual, err, math.fsum(lhs), rhs)
