"""Sparse families, Calderón–Zygmund stopping cubes and pointwise sparse domination."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import Cube, GridDomain, GridFunction, cell_mask, median_of, optimal_window, window_size
from .errors import LatticeError, ParameterError

DOMINATION_LAMBDA = 1 / 8


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """A finite family of dyadic cubes together with its best sparseness constant."""

    domain: GridDomain
    cubes: tuple
    eta: float

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def exclusive_sets(self) -> List[np.ndarray]:
        return sparseness(self.cubes, self.domain)[1]


def _check_dyadic(cubes: Sequence[Cube], dom: GridDomain) -> List[Cube]:
    out = []
    seen = set()
    for Q in cubes:
        level = Q.dyadic_level(dom)
        if level is None:
            raise LatticeError(f"{Q} is not a dyadic cube of {dom}")
        key = (level, int(Q.left / Q.length))
        if key not in seen:
            seen.add(key)
            out.append(Cube(Q.left, Q.length, level))
    return out


def sparseness(cubes: Sequence[Cube], dom: GridDomain) -> tuple:
    """Largest ``eta`` for which the family is eta-sparse, and the sets ``E_Q``.

    For dyadic cubes every finer family cube meeting ``Q`` lies inside ``Q``,
    so the strict-subcube union is the trace on ``Q`` of all finer cubes.
    """
    cubes = _check_dyadic(cubes, dom)
    if not cubes:
        return 1.0, []
    levels = sorted({Q.level for Q in cubes})
    finer = np.zeros(dom.n, dtype=bool)
    finer_than = {}
    by_level = {}
    for Q in cubes:
        by_level.setdefault(Q.level, []).append(Q)
    for level in reversed(levels):
        finer_than[level] = finer.copy()
        for Q in by_level[level]:
            s, e = Q.cells(dom)
            finer[s:e] = True
    worst = 0.0
    exclusive = []
    for Q in cubes:
        s, e = Q.cells(dom)
        cov = finer_than[Q.level][s:e]
        worst = max(worst, np.count_nonzero(cov) / (e - s))
        E = np.zeros(dom.n, dtype=bool)
        E[s:e] = ~cov
        exclusive.append(E)
    return 1.0 - worst, exclusive


def make_family(dom: GridDomain, cubes: Sequence[Cube]) -> SparseFamily:
    cubes = _check_dyadic(cubes, dom)
    return SparseFamily(dom, tuple(cubes), sparseness(cubes, dom)[0])


def cz_stop(E, Q0: Cube, tau: float, dom: GridDomain) -> List[Cube]:
    """Maximal dyadic subcubes ``P`` of ``Q0`` with ``|P ∩ E| / |P| > tau``."""
    if not 0 < tau < 1:
        raise ParameterError(f"tau must lie in (0, 1), got {tau}")
    if Q0.dyadic_level(dom) is None:
        raise LatticeError(f"{Q0} is not dyadic")
    s0, e0 = Q0.cells(dom)
    ind = cell_mask(dom, E)[s0:e0].astype(float)
    m = e0 - s0
    taken = np.zeros(m, dtype=bool)
    out = []
    W = m
    while W >= 1:
        dens = ind.reshape(-1, W).mean(axis=1)
        free = ~taken.reshape(-1, W)[:, 0]
        pick = free & (dens > tau)
        for j in np.flatnonzero(pick):
            out.append(dom.cube(s0 + j * W, s0 + (j + 1) * W))
        taken |= np.repeat(pick, W)
        W //= 2
    return sorted(out, key=lambda Q: Q.left)


def _block_medians(v: np.ndarray, W: int) -> np.ndarray:
    # smallest admissible median of a block of W cells is its ceil(W/2)-th smallest value
    k = (W + 1) // 2 - 1
    return np.partition(v.reshape(-1, W), k, axis=1)[:, k]


def _next_generation(v: np.ndarray, lo: float, hi: float) -> List[tuple]:
    """Cell ranges (relative to the cube) of the next stopping generation.

    Exit cubes are the maximal dyadic subcubes whose median leaves ``[lo, hi]``;
    the generation is formed by the maximal parents of exit cubes, whose
    medians stay inside ``[lo, hi]``.
    """
    m = len(v)
    taken = np.zeros(m, dtype=bool)
    parents = set()
    W = m // 2
    while W >= 1:
        med = _block_medians(v, W)
        free = ~taken.reshape(-1, W)[:, 0]
        exit_ = free & ((med < lo) | (med > hi))
        for j in np.flatnonzero(exit_):
            parents.add((2 * W, (j // 2) * 2 * W))
        taken |= np.repeat(exit_, W)
        W //= 2
    gen = []
    covered = np.zeros(m, dtype=bool)
    for width, start in sorted(parents, key=lambda t: (-t[0], t[1])):
        if width >= m or covered[start]:
            continue
        covered[start:start + width] = True
        gen.append((start, start + width))
    return gen


def dominate(f: GridFunction, Q0: Optional[Cube] = None, lam: float = DOMINATION_LAMBDA) -> tuple:
    """Sparse family ``S`` and the least ``c`` with ``|f| <= c sum_S osc(f,Q,lam) chi_Q + |median(f,Q0)|`` on ``Q0``.

    Stopping rule: inside a family cube ``Q`` with optimal oscillation window
    ``[lo, hi]``, a dyadic subcube exits when its median leaves ``[lo, hi]``.
    The next generation is made of the maximal parents of exit cubes.  Medians
    of consecutive generations then differ by at most ``hi - lo``, so the
    telescoping bound holds with ``c = 2``; exit cubes carry at least half
    their mass in the ``lam``-exceptional set, so the parents cover at most
    ``4 lam |Q|`` and the family is ``1 - 4 lam`` sparse.
    """
    dom = f.domain
    if not 0 < lam < 0.25:
        raise ParameterError(f"domination needs lam in (0, 1/4), got {lam}")
    Q0 = dom.whole() if Q0 is None else Q0
    if Q0.dyadic_level(dom) is None:
        raise LatticeError(f"{Q0} is not dyadic")
    s0, e0 = Q0.cells(dom)
    vals = f.values[s0:e0]
    if not np.any(vals != 0):
        return SparseFamily(dom, (), 1.0), 0.0
    queue = [(s0, e0)]
    cubes = []
    while queue:
        s, e = queue.pop()
        cubes.append(dom.cube(s, e))
        if e - s == 1:
            continue
        v = f.values[s:e]
        lo, hi = optimal_window(v, lam)
        for a, b in _next_generation(v, lo, hi):
            queue.append((s + a, s + b))
    cubes.sort(key=lambda Q: (-Q.length, Q.left))
    family = make_family(dom, cubes)
    return family, domination_constant(family, f, Q0, lam)


def domination_sum(S: SparseFamily, f: GridFunction, lam: float = DOMINATION_LAMBDA) -> np.ndarray:
    """Cell values of ``sum_{Q in S} osc_lam(f; Q) chi_Q``."""
    dom = S.domain
    diff = np.zeros(dom.n + 1)
    for Q in S.cubes:
        s, e = Q.cells(dom)
        lo, hi = optimal_window(f.values[s:e], lam)
        diff[s] += 0.5 * (hi - lo)
        diff[e] -= 0.5 * (hi - lo)
    return np.cumsum(diff)[:-1]


def domination_constant(S: SparseFamily, f: GridFunction, Q0: Cube, lam: float = DOMINATION_LAMBDA) -> float:
    s0, e0 = Q0.cells(f.domain)
    excess = np.abs(f.values[s0:e0]) - abs(median_of(f.values[s0:e0]))
    bound = domination_sum(S, f, lam)[s0:e0]
    scale = max(1.0, float(np.max(np.abs(f.values[s0:e0]))))
    need = excess > 1e-12 * scale
    if not need.any():
        return 0.0
    if np.any(bound[need] <= 0):
        return math.inf
    return float(np.max(excess[need] / bound[need]))


def apply(S: SparseFamily, f: GridFunction) -> GridFunction:
    """Sparse operator ``sum_{Q in S} (avg_Q |f|) chi_Q``."""
    dom = S.domain
    a = np.abs(f.values)
    P = np.concatenate([[0.0], np.cumsum(a)])
    diff = np.zeros(dom.n + 1)
    for Q in S.cubes:
        s, e = Q.cells(dom)
        avg = (P[e] - P[s]) / (e - s)
        diff[s] += avg
        diff[e] -= avg
    return GridFunction(dom, np.cumsum(diff)[:-1])


@dataclass
class LayerReport:
    """Generation layering of ``F_k = {Q in S : 4**(-k-1) < avg|f| <= 4**(-k)}``."""

    k: int
    eta: float
    generations: List[List[Cube]] = field(default_factory=list)
    a_measures: List[float] = field(default_factory=list)
    bounds: List[float] = field(default_factory=list)
    exclusive_disjoint: bool = True

    @property
    def empty(self) -> bool:
        return not self.generations

    @property
    def holds(self) -> bool:
        return self.exclusive_disjoint and all(
            a <= b * (1 + 1e-12) + 1e-300 for a, b in zip(self.a_measures, self.bounds))

    @property
    def worst_ratio(self) -> float:
        r = [a / b for a, b in zip(self.a_measures, self.bounds) if b > 0]
        return max(r, default=0.0)


def _peel(cubes: List[Cube]) -> List[List[Cube]]:
    remaining = list(cubes)
    gens = []
    while remaining:
        top = [Q for Q in remaining
               if not any(P is not Q and P.contains(Q) and P.length > Q.length for P in remaining)]
        gens.append(sorted(top, key=lambda Q: Q.left))
        ids = {id(Q) for Q in top}
        remaining = [Q for Q in remaining if id(Q) not in ids]
    return gens


def layer_diagnostic(S: SparseFamily, f: GridFunction, k: int) -> LayerReport:
    """Generations of ``F_k``, the sets ``A_k(Q)`` and the bound ``|A_k(Q)| <= (1-eta)**(2**k) |Q|``."""
    if k < 1:
        raise ParameterError("k must be a positive integer")
    dom = S.domain
    a = np.abs(f.values)
    Fk = []
    for Q in S.cubes:
        s, e = Q.cells(dom)
        avg = a[s:e].mean()
        if 4.0 ** (-k - 1) < avg <= 4.0 ** (-k):
            Fk.append(Q)
    report = LayerReport(k=k, eta=S.eta)
    if not Fk:
        return report
    gens = _peel(Fk)
    report.generations = gens
    depth = 2 ** k
    used = np.zeros(dom.n, dtype=bool)
    for nu, gen in enumerate(gens):
        nxt = gens[nu + 1] if nu + 1 < len(gens) else []
        below = cell_mask(dom, nxt) if nxt else np.zeros(dom.n, dtype=bool)
        far = gens[nu + depth] if nu + depth < len(gens) else []
        for Q in gen:
            s, e = Q.cells(dom)
            EQ = np.zeros(dom.n, dtype=bool)
            EQ[s:e] = ~below[s:e]
            if np.any(used & EQ):
                report.exclusive_disjoint = False
            used |= EQ
            A = sum(P.length for P in far if Q.contains(P))
            report.a_measures.append(A)
            report.bounds.append((1 - S.eta) ** depth * Q.length)
    return report


def format_family(S: SparseFamily) -> str:
    lines = [f"sparse 1 eta={S.eta:.17g}"]
    lines += [f"{Q.level} {Q.index()}" for Q in S.cubes]
    return "\n".join(lines) + "\n"


def parse_family(text: str, dom: GridDomain) -> SparseFamily:
    rows = text.strip().splitlines()
    head = rows[0].split()
    if head[:2] != ["sparse", "1"]:
        raise ParameterError("not a sparse version 1 file")
    cubes = [dom.dyadic(int(a), int(b)) for a, b in (r.split() for r in rows[1:] if r.strip())]
    return make_family(dom, cubes)
