"""Maximal operators over grid-aligned and dyadic cubes.

All operators take suprema over cubes made of whole cells.  For the
all-grid-aligned basis every width ``W`` is visited once; the windowed
average array is reduced per cell with a sliding maximum, giving ``O(N)``
work per width.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import maximum_filter1d

from .core import Cube, GridDomain, GridFunction, cell_mask, window_size, _check_lambda
from .errors import ParameterError

_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class MaximalResult:
    """Maximal function values plus, per cell, the cube attaining them.

    ``starts[i]:stops[i]`` is the cell range of the argmax cube of cell ``i``
    (smallest cube first, then leftmost).
    """

    values: GridFunction
    starts: np.ndarray
    stops: np.ndarray

    def argmax_cube(self, i: int) -> Cube:
        return self.values.domain.cube(int(self.starts[i]), int(self.stops[i]))


def grid_widths(n: int, mode: str = "all") -> np.ndarray:
    """Cube widths (in cells) visited by the all-grid-aligned operators.

    ``fast`` keeps only ``2**k`` and ``3 * 2**(k-1)``; every interval then sits
    inside a fast-width interval at most 3/2 as long, so the fast maximal
    function is at least 2/3 of the exact one.
    """
    if mode == "all":
        return np.arange(1, n + 1)
    if mode != "fast":
        raise ParameterError(f"unknown width mode {mode!r}")
    ws = set()
    k = 1
    while k <= n:
        ws.add(k)
        if 3 * k // 2 <= n and k >= 2:
            ws.add(3 * k // 2)
        k *= 2
    return np.array(sorted(ws))


def _trailing_max(A: np.ndarray, W: int, n: int) -> np.ndarray:
    """``out[i] = max(A[a])`` over window starts ``a`` with ``a <= i < a + W``."""
    padded = np.concatenate([A, np.full(n - len(A), -np.inf)])
    return maximum_filter1d(padded, W, origin=(W - 1) // 2, mode="constant", cval=-np.inf)


def _window_means(P: np.ndarray, W: int) -> np.ndarray:
    return (P[W:] - P[:-W]) / W


def maximal_values(a: np.ndarray, lattice: str = "all", widths: str = "all") -> np.ndarray:
    """Maximal function of the non-negative cell array ``a`` (no argmax bookkeeping)."""
    a = np.abs(np.asarray(a, dtype=float))
    n = len(a)
    if lattice == "dyadic":
        best = a.copy()
        W = 2
        while W <= n:
            block = a.reshape(-1, W).sum(axis=1) / W
            np.maximum(best, np.repeat(block, W), out=best)
            W *= 2
        return best
    if lattice != "all":
        raise ParameterError(f"unknown lattice {lattice!r}")
    P = np.concatenate([[0.0], np.cumsum(a)])
    best = a.copy()
    for W in grid_widths(n, widths):
        if W == 1:
            continue
        np.maximum(best, _trailing_max(_window_means(P, W), W, n), out=best)
    return best


def maximal(f: GridFunction, lattice: str = "all", widths: str = "all") -> MaximalResult:
    """Uncentered maximal function of ``|f|`` over grid-aligned (or dyadic) cubes."""
    a = np.abs(f.values)
    n = len(a)
    best = a.copy()
    starts = np.arange(n)
    stops = starts + 1
    cells = np.arange(n)
    if lattice == "dyadic":
        W = 2
        while W <= n:
            block = np.repeat(a.reshape(-1, W).sum(axis=1) / W, W)
            better = block > best * (1 + _TIE)
            best[better] = block[better]
            starts = np.where(better, (cells // W) * W, starts)
            stops = np.where(better, (cells // W) * W + W, stops)
            W *= 2
        return MaximalResult(GridFunction(f.domain, best), starts, stops)
    if lattice != "all":
        raise ParameterError(f"unknown lattice {lattice!r}")
    P = np.concatenate([[0.0], np.cumsum(a)])
    for W in grid_widths(n, widths):
        if W == 1:
            continue
        A = _window_means(P, W)
        idx = np.arange(len(A))
        # rank windows: larger mean wins, ties go to the leftmost start
        order = np.lexsort((-idx, A))
        rank = np.empty(len(A))
        rank[order] = np.arange(len(A))
        top = _trailing_max(rank, W, n).astype(int)
        arg = order[top]
        val = A[arg]
        better = val > best * (1 + _TIE)
        best[better] = val[better]
        starts = np.where(better, arg, starts)
        stops = np.where(better, arg + W, stops)
    return MaximalResult(GridFunction(f.domain, best), starts, stops)


def maximal_of_set(dom: GridDomain, mask, lattice: str = "all") -> np.ndarray:
    """Grid maximal function of the indicator of a cell set."""
    return maximal_values(cell_mask(dom, mask).astype(float), lattice)


def maximal_indicator(Q: Cube, dom: GridDomain, kind: str = "continuum") -> GridFunction:
    """Closed form of ``M chi_Q`` on the cells of ``dom``.

    ``continuum``: the true operator over all intervals, evaluated at cell
    midpoints.  ``grid``: the exact grid-aligned maximal function, which is the
    same formula evaluated at the cell edge farthest from ``Q``.
    """
    a, b = Q.left, Q.right
    ell = Q.length
    if kind == "continuum":
        xl = xr = dom.midpoints
    elif kind == "grid":
        xl = dom.edges[:-1]
        xr = dom.edges[1:]
    else:
        raise ParameterError(f"unknown kind {kind!r}")
    mid = dom.midpoints
    out = np.ones(dom.n)
    left = mid < a
    right = mid >= b
    out[left] = ell / (b - xl[left])
    out[right] = ell / (xr[right] - a)
    return GridFunction(dom, out)


def sharp(f: GridFunction, lattice: str = "all") -> GridFunction:
    """Sharp maximal function: sup over cubes containing the cell of the mean of ``|f - f_Q|``."""
    a = f.values
    n = len(a)
    best = np.zeros(n)
    if lattice == "dyadic":
        W = 2
        while W <= n:
            blocks = a.reshape(-1, W)
            mo = np.abs(blocks - blocks.mean(axis=1, keepdims=True)).mean(axis=1)
            np.maximum(best, np.repeat(mo, W), out=best)
            W *= 2
        return GridFunction(f.domain, best)
    for W in range(2, n + 1):
        win = sliding_window_view(a, W)
        mo = np.abs(win - win.mean(axis=1, keepdims=True)).mean(axis=1)
        np.maximum(best, _trailing_max(mo, W, n), out=best)
    return GridFunction(f.domain, best)


def _window_oscillations(win: np.ndarray, lam: float) -> np.ndarray:
    W = win.shape[1]
    s = window_size(W, lam)
    x = np.sort(win, axis=1)
    return 0.5 * (x[:, s - 1:] - x[:, : W - s + 1]).min(axis=1)


def local_sharp(f: GridFunction, lam: float, lattice: str = "all") -> GridFunction:
    """Local sharp maximal function: sup over cubes containing the cell of the λ-oscillation."""
    _check_lambda(lam)
    a = f.values
    n = len(a)
    best = np.zeros(n)
    if lattice == "dyadic":
        W = 2
        while W <= n:
            osc = _window_oscillations(a.reshape(-1, W), lam)
            np.maximum(best, np.repeat(osc, W), out=best)
            W *= 2
        return GridFunction(f.domain, best)
    for W in range(2, n + 1):
        osc = _window_oscillations(sliding_window_view(a, W), lam)
        np.maximum(best, _trailing_max(osc, W, n), out=best)
    return GridFunction(f.domain, best)


def mchi_check(f: GridFunction, alpha: float) -> tuple:
    """Worst ratio of ``M chi_{Mf > alpha}`` to ``(9/alpha) Mf`` over cells.

    Both maximal functions are the grid-aligned operator.  Returns
    ``(worst_ratio, worst_cell)``; the ratio is 0 when the level set is empty.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    Mf = maximal_values(f.values)
    E = Mf > alpha
    if not E.any():
        return 0.0, 0
    ratio = maximal_values(E.astype(float)) / (9.0 / alpha * Mf)
    cell = int(np.argmax(ratio))
    return float(ratio[cell]), cell
