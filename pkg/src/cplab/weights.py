"""Weight fixtures and estimators for reverse Hölder, C_p and SC_p type conditions.

All estimators return a :class:`ConditionReport` whose ``constant`` is the
best ratio found together with the cube, family or cell set attaining it.
``scp_search`` is a lower-bound estimator: it explores part of the space of
disjoint families and never claims the supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.signal import correlate

from .core import Cube, GridDomain, GridFunction, cell_mask, measure
from .errors import FamilyError, GeometryError, ParameterError, QuantizationError
from .maximal import maximal_values
from .orlicz import orlicz_average
from .sparse import cz_stop


# fixtures --------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """Declarative description of a weight; see :func:`generate`."""

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def power(cls, a: float, center: float = 0.0):
        return cls("power", {"a": a, "center": center})

    @classmethod
    def indicator(cls, intervals):
        return cls("indicator", {"intervals": [tuple(map(float, iv)) for iv in intervals]})

    @classmethod
    def lacunary(cls, levels: int, gain: float):
        return cls("lacunary", {"levels": levels, "gain": gain})

    @classmethod
    def random(cls, seed: int, roughness: float, levels: int = 6):
        return cls("random", {"seed": seed, "roughness": roughness, "levels": levels})

    @classmethod
    def custom(cls, w: GridFunction):
        return cls("custom", {"function": w})


def _power_cell_averages(dom: GridDomain, a: float, center: float) -> np.ndarray:
    e = dom.edges - center
    F = np.sign(e) * np.abs(e) ** (a + 1) / (a + 1)
    return np.diff(F) / dom.h


def generate(spec: WeightSpec, dom: GridDomain) -> GridFunction:
    """Deterministic weight for ``spec`` on ``dom``.

    power(a): exact cell averages of ``|x - center|**a``.
    indicator: union of real intervals (must land on the grid).
    lacunary(levels, gain): ``1 + sum_j gain**j`` on spikes ``[2**(K-j), 2**(K-j) + 2**(K-2j))``.
    random(seed, roughness, levels): ``exp`` of a ±1 dyadic martingale on the coarse ``levels``.
    """
    kind, prm = spec.kind, spec.params
    if kind == "power":
        a = float(prm["a"])
        if not a > -1:
            raise ParameterError(f"power weight needs a > -1, got {a}")
        return GridFunction(dom, _power_cell_averages(dom, a, float(prm.get("center", 0.0))))
    if kind == "indicator":
        cubes = [Cube(lo, hi - lo) for lo, hi in prm["intervals"]]
        return GridFunction.indicator(dom, cubes).check_weight()
    if kind == "lacunary":
        vals = np.ones(dom.n)
        x = dom.midpoints
        for j in range(1, int(prm["levels"]) + 1):
            left = dom.length * 2.0 ** (-j)
            width = max(dom.length * 4.0 ** (-j), dom.h)
            vals[(x >= left) & (x < left + width)] += float(prm["gain"]) ** j
        return GridFunction(dom, vals)
    if kind == "random":
        rng = np.random.default_rng(int(prm["seed"]))
        levels = min(int(prm.get("levels", 6)), dom.max_level)
        log_w = np.zeros(dom.n)
        for j in range(1, levels + 1):
            signs = rng.choice([-1.0, 1.0], size=1 << j)
            log_w += np.repeat(signs, dom.n >> j)
        return GridFunction(dom, np.exp(float(prm["roughness"]) * log_w / math.sqrt(max(levels, 1))))
    if kind == "custom":
        w = prm["function"]
        if w.domain != dom:
            raise ParameterError("custom weight lives on another domain")
        return w.check_weight()
    raise ParameterError(f"unknown weight kind {kind!r}")


# reports ---------------------------------------------------------------------

@dataclass
class ConditionReport:
    condition: str
    p: Optional[float]
    r: Optional[float]
    constant: float
    extremizer: Any = None
    auxiliary: Dict[str, Any] = field(default_factory=dict)

    def extremizer_id(self) -> str:
        return describe(self.extremizer)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "p": self.p,
            "r": self.r,
            "constant": self.constant,
            "extremizer": self.extremizer_id(),
            "samples": _jsonable(self.auxiliary),
        }


def describe(obj) -> str:
    if obj is None:
        return "none"
    if isinstance(obj, Cube):
        return obj.label()
    if isinstance(obj, np.ndarray) and obj.dtype == bool:
        return "cells:" + ",".join(str(i) for i in np.flatnonzero(obj))
    if isinstance(obj, (list, tuple)):
        return "family:" + ";".join(describe(q) for q in obj)
    return str(obj)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Cube):
        return x.label()
    return x


# reverse Hölder and C_p ------------------------------------------------------

def _rh_level(w: np.ndarray, wr: np.ndarray, W: int, r: float):
    """RH numerator and mean of ``w`` for the dyadic cubes of width ``W`` cells."""
    num = (wr.reshape(-1, W).mean(axis=1)) ** (1.0 / r)
    den = w.reshape(-1, W).mean(axis=1)
    return num, den


def reverse_holder(w: GridFunction, r: float, lattice: str = "dyadic") -> ConditionReport:
    """``max_Q (avg_Q w^r)^(1/r) / avg_Q w`` over dyadic (or all grid-aligned) cubes."""
    if not r > 1:
        raise ParameterError(f"r must exceed 1, got {r}")
    dom = w.domain
    v = w.values
    vr = v ** r
    best, arg = -1.0, None
    if lattice == "dyadic":
        W = dom.n
        while W >= 1:
            num, den = _rh_level(v, vr, W, r)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)
            j = int(np.argmax(ratio))
            if ratio[j] > best * (1 + 1e-12):
                best, arg = float(ratio[j]), dom.cube(j * W, (j + 1) * W)
            W //= 2
    elif lattice == "all":
        P = np.concatenate([[0.0], np.cumsum(v)])
        Pr = np.concatenate([[0.0], np.cumsum(vr)])
        for W in range(dom.n, 0, -1):
            den = (P[W:] - P[:-W]) / W
            num = np.maximum((Pr[W:] - Pr[:-W]) / W, 0.0) ** (1.0 / r)
            ratio = np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)
            j = int(np.argmax(ratio))
            if ratio[j] > best * (1 + 1e-12):
                best, arg = float(ratio[j]), dom.cube(j, j + W)
    else:
        raise ParameterError(f"unknown lattice {lattice!r}")
    best = rh_ratio(w, arg, r)
    return ConditionReport("RH", None, r, best, arg, {"lattice": lattice})


def rh_ratio(w: GridFunction, Q: Cube, r: float) -> float:
    vals = w.on(Q)
    den = math.fsum(vals) / len(vals)
    if den <= 0:
        return 0.0
    return (math.fsum(vals ** r) / len(vals)) ** (1.0 / r) / den


def rh_mean(w: GridFunction, Q: Cube, r: float) -> float:
    """``(avg_Q w^r)^(1/r)``."""
    vals = w.on(Q)
    return (math.fsum(vals ** r) / len(vals)) ** (1.0 / r)


def _indicator_kernel(W: int, n: int, p: float, kind: str) -> np.ndarray:
    """``(M chi_Q)^p`` at offsets ``d = -(n-1) .. n-1`` from the left cell of a cube of ``W`` cells."""
    d = np.arange(-(n - 1), n, dtype=float)
    out = np.ones_like(d)
    left, right = d < 0, d >= W
    shift = 0.0 if kind == "grid" else 0.5
    out[left] = W / (W - d[left] - shift)
    out[right] = W / (d[right] + 1 - shift)
    return out ** p


def cp_denominator(w: GridFunction, Q: Cube, p: float, kind: str = "grid") -> float:
    """``(1/|Q|) int (M chi_Q)^p w`` over the domain."""
    from .maximal import maximal_indicator

    m = maximal_indicator(Q, w.domain, kind).values
    return math.fsum(m ** p * w.values) * w.domain.h / Q.length


def cp_tail(Q: Cube, dom: GridDomain, p: float) -> float:
    """``int`` of the continuum ``(M chi_Q)^p`` over the real line outside the domain."""
    if p <= 1:
        return math.inf
    ell = Q.length
    return ell ** p * (Q.right ** (1 - p) + (dom.length - Q.left) ** (1 - p)) / (p - 1)


def cp_constant(w: GridFunction, p: float, r: float, kind: str = "grid", top: int = 3) -> ConditionReport:
    """``max_Q (avg_Q w^r)^(1/r) / ((1/|Q|) int (M chi_Q)^p w)`` over dyadic cubes.

    ``kind="grid"`` uses the grid-aligned maximal function of ``chi_Q`` (the
    same operator as :func:`scp_ratio`), ``"continuum"`` the true one at cell
    midpoints.  Integrals run over the domain; the unweighted tail of
    ``(M chi_Q)^p`` outside it is reported for the extremizer.  Every level is
    screened with one correlation; the ``top`` leading cubes per level are
    then re-evaluated exactly.
    """
    if not p > 0:
        raise ParameterError(f"p must be positive, got {p}")
    if not r > 1:
        raise ParameterError(f"r must exceed 1, got {r}")
    dom = w.domain
    n = dom.n
    v = w.values
    vr = v ** r
    method = "direct" if n <= 2048 else "fft"
    candidates = []
    W = n
    while W >= 1:
        G = _indicator_kernel(W, n, p, kind)
        corr = correlate(G, v, mode="valid", method=method)
        starts = np.arange(0, n, W)
        S = corr[n - 1 - starts]
        num = vr.reshape(-1, W).mean(axis=1) ** (1.0 / r)
        den = S / W
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)
        for j in np.argsort(-ratio, kind="stable")[:top]:
            candidates.append(dom.cube(int(starts[j]), int(starts[j]) + W))
        W //= 2
    best, arg = -1.0, None
    for Q in candidates:
        val = cp_ratio(w, Q, p, r, kind)
        if val > best * (1 + 1e-12):
            best, arg = val, Q
    return ConditionReport("Cp", p, r, best, arg, {"kind": kind, "tail_unweighted": cp_tail(arg, dom, p)})


def cp_ratio(w: GridFunction, Q: Cube, p: float, r: float, kind: str = "grid") -> float:
    den = cp_denominator(w, Q, p, kind)
    return rh_mean(w, Q, r) / den if den > 0 else 0.0


# SC_p ------------------------------------------------------------------------

def check_disjoint(cubes: Sequence[Cube]):
    ordered = sorted(cubes, key=lambda Q: Q.left)
    for a, b in zip(ordered, ordered[1:]):
        if b.left < a.right:
            raise FamilyError(f"{a.label()} and {b.label()} overlap")


def scp_ratio(w: GridFunction, family: Sequence[Cube], p: float, r: float) -> float:
    """``sum_j (avg_{Q_j} w^r)^(1/r) |Q_j| / int (M chi_{U Q_j})^p w`` for pairwise disjoint cubes."""
    if not family:
        return 0.0
    check_disjoint(family)
    dom = w.domain
    num = math.fsum(rh_mean(w, Q, r) * Q.length for Q in family)
    M = maximal_values(cell_mask(dom, list(family)).astype(float))
    den = math.fsum(M ** p * w.values) * dom.h
    return num / den


def _dyadic_key(Q: Cube):
    return Q.level, Q.index()


def scp_search(w: GridFunction, p: float, r: float, budget: int = 200, strategy: str = "levelsets",
               seed: int = 0, lam_grid: Optional[Sequence[float]] = None) -> ConditionReport:
    """Largest SC_p ratio found over disjoint dyadic families (a lower bound for the SC_p constant).

    ``levelsets``: stopping families of the superlevel sets of ``w`` and of
    their maximal-function level sets, over a dyadic ``lam`` grid.
    ``greedy``: repeatedly add the disjoint dyadic cube with the best resulting ratio.
    ``anneal``: simulated annealing over families with add/remove/resize moves.
    Every strategy starts from the best single cube, so the result is at least
    the C_p ratio of that cube.
    """
    if budget < 1:
        raise ParameterError("budget must be at least 1")
    dom = w.domain
    cp = cp_constant(w, p, r)
    best_family = [cp.extremizer]
    best = scp_ratio(w, best_family, p, r)
    evals = 1
    if strategy == "levelsets":
        lams = list(lam_grid) if lam_grid is not None else [2.0 ** (-j) for j in range(1, 7)]
        levels = np.unique(w.values)[::-1]
        picks = levels[np.linspace(0, len(levels) - 1, min(len(levels), 8)).round().astype(int)]
        families = []
        for t in picks:
            E = w.values >= t
            for lam in lams:
                families.append(cz_stop(E, dom.whole(), lam, dom))
                if lam < 1:
                    Omega = maximal_values(E.astype(float)) > lam
                    families.append(cz_stop(Omega, dom.whole(), 1 - 0.5 / dom.n, dom))
        seen = set()
        for fam in families:
            if evals >= budget:
                break
            key = tuple(sorted(_dyadic_key(Q) for Q in fam))
            if not fam or key in seen:
                continue
            seen.add(key)
            val = scp_ratio(w, fam, p, r)
            evals += 1
            if val > best * (1 + 1e-12):
                best, best_family = val, fam
    elif strategy == "greedy":
        current: List[Cube] = []
        cur_val = 0.0
        cubes = list(dom.dyadic_cubes())
        while evals < budget:
            step_best, step_cube = cur_val, None
            for Q in cubes:
                if any(Q.intersects(P) for P in current):
                    continue
                val = scp_ratio(w, current + [Q], p, r)
                evals += 1
                if val > step_best * (1 + 1e-12):
                    step_best, step_cube = val, Q
                if evals >= budget:
                    break
            if step_cube is None:
                break
            current.append(step_cube)
            cur_val = step_best
        if cur_val > best * (1 + 1e-12):
            best, best_family = cur_val, sorted(current, key=lambda Q: Q.left)
    elif strategy == "anneal":
        best_family, best, evals = _anneal_families(w, p, r, budget, seed, best_family, best)
    else:
        raise ParameterError(f"unknown strategy {strategy!r}")
    best_family = sorted(best_family, key=lambda Q: Q.left)
    return ConditionReport("SCp", p, r, scp_ratio(w, best_family, p, r), best_family,
                           {"strategy": strategy, "evaluations": evals, "lower_bound": True,
                            "cp_singleton": cp.constant})


def _anneal_families(w, p, r, budget, seed, start, start_val):
    dom = w.domain
    rng = np.random.default_rng(seed)
    state = list(start)
    cur = start_val
    best, best_state = cur, list(state)
    t0 = 0.1 * max(cur, 1e-12)
    evals = 1
    for step in range(1, budget):
        temp = t0 * (1 - step / budget)
        move = rng.integers(3)
        cand = list(state)
        if move == 0 or len(cand) == 0:
            level = int(rng.integers(0, dom.max_level + 1))
            Q = dom.dyadic(level, int(rng.integers(0, 1 << level)))
            cand = [P for P in cand if not P.intersects(Q)] + [Q]
        elif move == 1:
            if len(cand) > 1:
                cand.pop(int(rng.integers(len(cand))))
        else:
            i = int(rng.integers(len(cand)))
            Q = cand.pop(i)
            if rng.random() < 0.5 and Q.level > 0:
                P = Q.parent(dom)
                cand = [R for R in cand if not R.intersects(P)] + [P]
            elif Q.level < dom.max_level:
                kids = Q.children()
                cand += list(kids) if rng.random() < 0.5 else [kids[int(rng.integers(2))]]
            else:
                cand.append(Q)
        cand.sort(key=lambda Q: Q.left)
        val = scp_ratio(w, cand, p, r)
        evals += 1
        if val >= cur or (temp > 0 and rng.random() < math.exp((val - cur) / temp)):
            state, cur = cand, val
            if cur > best * (1 + 1e-12):
                best, best_state = cur, list(state)
    return best_state, best, evals


def condition_ii_ratio(w: GridFunction, family: Sequence[Cube], p: float, R: float = 3.0) -> float:
    """``sum_j ||w||_{LlogL,Q_j} |Q_j| / int (M chi_{U Q_j})^p w`` for an R-separated family."""
    if not is_separated(family, R):
        raise FamilyError(f"family is not {R}-separated")
    dom = w.domain
    num = math.fsum(orlicz_average(w, Q) * Q.length for Q in family)
    M = maximal_values(cell_mask(dom, list(family)).astype(float))
    return num / (math.fsum(M ** p * w.values) * dom.h)


# Whitney covers and separation ----------------------------------------------

@dataclass
class WhitneyCover:
    cubes: List[Cube]
    R: float
    c1: float
    c2: int


def _gaps(comp: np.ndarray):
    """Per cell: cells to the nearest complement cell on the left / right (inf if none)."""
    n = len(comp)
    idx = np.arange(n)
    last = np.where(comp, idx, -1)
    last = np.maximum.accumulate(last)
    nxt = np.where(comp, idx, n)
    nxt = np.minimum.accumulate(nxt[::-1])[::-1]
    return last, nxt


def whitney(Omega, R: float, dom: GridDomain) -> WhitneyCover:
    """Maximal dyadic cubes ``Q ⊂ Omega`` with ``dist(Q, Omega^c) >= R l(Q)``.

    The complement is taken inside the domain.  Cells of ``Omega`` left
    uncovered at the finest level are added as single cells, so the cover is
    exact.  ``c1`` is the least dilation factor ``k`` such that ``k' Q`` meets
    the complement for every ``k' > k`` and every cube; ``c2`` is the largest
    overlap of the ``R``-dilates.
    """
    if R < 1:
        raise ParameterError("R must be at least 1")
    inside = cell_mask(dom, Omega)
    comp = ~inside
    if not comp.any():
        raise GeometryError("Omega is the whole domain; the complement is empty")
    last, nxt = _gaps(comp)
    n = dom.n
    taken = np.zeros(n, dtype=bool)
    cubes = []
    W = n
    while W >= 1:
        starts = np.arange(0, n, W)
        full = inside.reshape(-1, W).all(axis=1)
        free = ~taken.reshape(-1, W)[:, 0]
        prev_comp = np.where(starts > 0, last[np.maximum(starts - 1, 0)], -1)
        left_gap = np.where(prev_comp >= 0, starts - prev_comp - 1, np.inf)
        stops = starts + W
        next_comp = np.where(stops < n, nxt[np.minimum(stops, n - 1)], n)
        right_gap = np.where(next_comp < n, next_comp - stops, np.inf)
        dist = np.minimum(left_gap, right_gap)
        ok = full & free & ((dist >= R * W) | (W == 1))
        for j in np.flatnonzero(ok):
            cubes.append(dom.cube(int(starts[j]), int(starts[j]) + W))
        taken |= np.repeat(ok, W)
        W //= 2
    cubes.sort(key=lambda Q: Q.left)
    c1 = 0.0
    for Q in cubes:
        s, e = Q.cells(dom)
        lg = s - last[s - 1] - 1 if s > 0 and last[s - 1] >= 0 else math.inf
        rg = nxt[e] - e if e < n and nxt[e] < n else math.inf
        ell = e - s
        c1 = max(c1, 1 + 2 * min(lg, rg) / ell)
    return WhitneyCover(cubes, R, c1, max_overlap([Q.dilate(R) for Q in cubes]))


def max_overlap(intervals) -> int:
    """Largest number of half-open intervals sharing a point."""
    events = sorted([(lo, 1) for lo, _ in intervals] + [(hi, -1) for _, hi in intervals],
                    key=lambda t: (t[0], t[1]))
    depth = best = 0
    for _, step in events:
        depth += step
        best = max(best, depth)
    return best


def is_separated(cubes: Sequence[Cube], R: float) -> bool:
    return max_overlap([Q.dilate(R) for Q in cubes]) <= 1 if cubes else True


def separate(cubes: Sequence[Cube], R: float) -> List[List[Cube]]:
    """Split a family into R-separated subfamilies by greedy colouring of the R-dilates."""
    families: List[List[Cube]] = []
    ends: List[List[tuple]] = []
    for Q in sorted(cubes, key=lambda c: (c.left, c.length)):
        lo, hi = Q.dilate(R)
        for fam, iv in zip(families, ends):
            if all(hi <= a or b <= lo for a, b in iv):
                fam.append(Q)
                iv.append((lo, hi))
                break
        else:
            families.append([Q])
            ends.append([(lo, hi)])
    return families


# top slices, embeddings and the phi condition --------------------------------

def top_slice(w: GridFunction, Q: Cube, lam: float) -> np.ndarray:
    """Cells of ``Q`` of total measure ``lam |Q|`` carrying the largest values of ``w`` (leftmost on ties)."""
    if not 0 < lam < 1:
        raise ParameterError(f"lambda must lie in (0, 1), got {lam}")
    dom = w.domain
    s, e = Q.cells(dom)
    k = lam * (e - s)
    if k != math.floor(k):
        raise QuantizationError(f"lambda |Q| = {k} cells is not an integer")
    order = np.argsort(-w.values[s:e], kind="stable")[: int(k)]
    mask = np.zeros(dom.n, dtype=bool)
    mask[s + order] = True
    return mask


def embedding_check(w: GridFunction, cubes: Sequence[Cube], lam: float) -> tuple:
    """Check ``{M chi_E > 3 lam} ⊂ U 3Q_j ⊂ {M chi_{U Q_j} >= 1/3}`` for ``E`` the top slices of ``w``.

    Returns ``(first_inclusion_holds, second_inclusion_holds)``.
    """
    check_disjoint(cubes)
    dom = w.domain
    E = np.zeros(dom.n, dtype=bool)
    for Q in cubes:
        E |= top_slice(w, Q, lam)
    triple = cell_mask(dom, [Q.dilate_clipped(3, dom) for Q in cubes])
    high = maximal_values(E.astype(float)) > 3 * lam
    near = maximal_values(cell_mask(dom, list(cubes)).astype(float)) >= 1 / 3 - 1e-12
    return bool(np.all(~high | triple)), bool(np.all(~triple | near))


def _phi_denominator(w: GridFunction, Omega: np.ndarray, p: float) -> float:
    M = maximal_values(Omega.astype(float))
    return math.fsum(M ** p * w.values) * w.domain.h


def condition_phi(w: GridFunction, p: float, Esets: Sequence, lam_grid: Sequence[float]) -> ConditionReport:
    """Sampled ``phi(lam) = max_E w(E) / int (M chi_{M chi_E > lam})^p w`` and derived constants.

    Also fits ``phi(lam) <= C lam**delta`` by log-log least squares, takes the
    knee ``lam0 = lam' / 72`` where ``lam'`` is the largest grid value with
    ``phi <= 1/4``, and reports the ratio
    ``int (M chi_E)^p w / int (M chi_{M chi_E > lam0})^p w`` maximised over ``E``.
    """
    dom = w.domain
    masks = [cell_mask(dom, E) for E in Esets]
    if not masks or any(not m.any() for m in masks):
        raise ParameterError("every E must be a non-empty cell set")
    lams = sorted(float(x) for x in lam_grid)
    Ms = [maximal_values(m.astype(float)) for m in masks]
    wE = [math.fsum(w.values[m]) * dom.h for m in masks]
    phi, arg = [], []
    for lam in lams:
        vals = [wE[i] / _phi_denominator(w, Ms[i] > lam, p) for i in range(len(masks))]
        j = int(np.argmax(vals))
        phi.append(vals[j])
        arg.append(j)
    phi = np.array(phi)
    pos = phi > 0
    fit_C = fit_delta = residual = None
    if pos.sum() >= 2:
        X = np.log(np.array(lams)[pos])
        Y = np.log(phi[pos])
        A = np.vstack([np.ones_like(X), X]).T
        coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
        fit_C, fit_delta = float(np.exp(coef[0])), float(coef[1])
        residual = float(np.sqrt(np.mean((A @ coef - Y) ** 2)))
    quarter = [lam for lam, ph in zip(lams, phi) if ph <= 0.25]
    lam_prime = max(quarter) if quarter else lams[0]
    lam0 = lam_prime / 72.0
    iv = 0.0
    for i, m in enumerate(masks):
        top = math.fsum(Ms[i] ** p * w.values) * dom.h
        iv = max(iv, top / _phi_denominator(w, Ms[i] > lam0, p))
    derived = math.log(iv) / math.log(lam0 / 9) if 0 < iv < 1 else None
    k = int(np.argmax(phi))
    aux = {
        "lambda": lams,
        "phi": phi.tolist(),
        "phi_argmax": arg,
        "fit_C": fit_C,
        "fit_delta": fit_delta,
        "fit_residual": residual,
        "lambda0": lam0,
        "iv_constant": iv,
        "derived_delta": derived,
    }
    return ConditionReport("III", p, None, float(phi[k]), masks[arg[k]], aux)


def set_measure(dom: GridDomain, E) -> float:
    return measure(dom, cell_mask(dom, E))
