"""Best-constant harness, adversarial constructions, the SC_p/C_p hunt and resolution sweeps."""
from __future__ import annotations

import enum
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ExperimentConfig
from .core import GridDomain, GridFunction, cell_mask, weighted_norm
from .errors import ConfigError, ParameterError
from .maximal import maximal_values, sharp
from .orlicz import stein_ratio
from .singular import hilbert_full, hilbert_star
from .sparse import SparseFamily, apply, dominate
from .weights import cp_constant, describe, generate, reverse_holder, scp_search

log = logging.getLogger(__name__)

CORPUS_VERSIONS = ("v1",)


class InequalityKind(enum.Enum):
    """Left and right norms of each tested inequality."""

    CFW = "CFW"  # ||H* f||_{L^{p,inf}(w)}  vs ||Mf||_{L^p(w)}
    CF = "CF"    # ||H f||_{L^p(w)}         vs ||Mf||_{L^p(w)}
    FSW = "FSW"  # ||f||_{L^{p,inf}(w)}     vs ||f^#||_{L^p(w)}
    FS = "FS"    # ||f||_{L^p(w)}           vs ||f^#||_{L^p(w)}
    ASM = "ASM"  # ||A_S f||_{L^{p,inf}(w)} vs ||Mf||_{L^p(w)}

    @classmethod
    def parse(cls, tag) -> "InequalityKind":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ConfigError(f"unknown inequality kind {tag!r}") from None


def _sides(kind: InequalityKind, f: GridFunction, w: GridFunction, p: float,
           S: Optional[SparseFamily]) -> Tuple[float, float]:
    M = lambda g: GridFunction(g.domain, maximal_values(g.values))  # noqa: E731
    if kind is InequalityKind.CFW:
        return weighted_norm(hilbert_star(f), w, p, "weak"), weighted_norm(M(f), w, p)
    if kind is InequalityKind.CF:
        return weighted_norm(hilbert_full(f), w, p), weighted_norm(M(f), w, p)
    if kind is InequalityKind.FSW:
        return weighted_norm(f, w, p, "weak"), weighted_norm(sharp(f), w, p)
    if kind is InequalityKind.FS:
        return weighted_norm(f, w, p), weighted_norm(sharp(f), w, p)
    family = S if S is not None else dominate(f)[0]
    return weighted_norm(apply(family, f), w, p, "weak"), weighted_norm(M(f), w, p)


@dataclass
class BestConstantReport:
    kind: str
    p: float
    constant: float
    extremizer: Optional[str]
    ratios: List[float] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.extremizer is None


def _named(corpus) -> List[Tuple[str, GridFunction]]:
    out = []
    for i, item in enumerate(corpus):
        if isinstance(item, GridFunction):
            out.append((f"f{i}", item))
        else:
            out.append((str(item[0]), item[1]))
    return out


def best_constant(kind, w: GridFunction, corpus, p: float, S: Optional[SparseFamily] = None,
                  jobs: int = 1) -> BestConstantReport:
    """``max`` over the corpus of lhs/rhs.  Entries with ``rhs = 0`` are skipped and listed."""
    kind = InequalityKind.parse(kind)
    items = _named(corpus)
    if not items:
        raise ParameterError("corpus must be non-empty")

    def one(item):
        return _sides(kind, item[1], w, p, S)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            sides = list(pool.map(one, items))
    else:
        sides = [one(it) for it in items]
    report = BestConstantReport(kind.value, p, 0.0, None)
    for (name, _), (lhs, rhs) in zip(items, sides):
        if rhs == 0:
            report.skipped.append(name)
            report.ratios.append(math.nan)
            continue
        ratio = lhs / rhs
        report.ratios.append(ratio)
        if report.extremizer is None or ratio > report.constant:
            report.constant, report.extremizer = ratio, name
    return report


# corpora ---------------------------------------------------------------------

def adversarial_fs(E, lam: float, dom: GridDomain) -> GridFunction:
    """``log+(M chi_E / lam)`` with the grid maximal function."""
    if not 0 < lam < 1:
        raise ParameterError(f"lambda must lie in (0, 1), got {lam}")
    mask = cell_mask(dom, E)
    if not mask.any():
        raise ParameterError("E must be non-empty")
    M = maximal_values(mask.astype(float))
    return GridFunction(dom, np.log(np.maximum(M / lam, 1.0)))


def grid_bmo(f: GridFunction) -> float:
    """``max`` over grid-aligned cubes of the mean oscillation ``avg_Q |f - f_Q|``."""
    return float(sharp(f).values.max())


def _martingale(dom: GridDomain, seed: int, levels: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.zeros(dom.n)
    levels = min(levels, dom.max_level)
    for j in range(levels + 1):
        out += np.repeat(rng.choice([-1.0, 1.0], size=1 << j), dom.n >> j) * 2.0 ** (-j / 2)
    return out


def _bump(dom: GridDomain, center: float, radius: float) -> GridFunction:
    def fn(x):
        t = (x - center) / radius
        out = np.zeros_like(t)
        inside = np.abs(t) < 1
        out[inside] = np.exp(1 - 1 / (1 - t[inside] ** 2))
        return out

    return GridFunction.from_midpoints(dom, fn)


def corpus(dom: GridDomain, version: str = "v1", adversarial: bool = False) -> List[Tuple[str, GridFunction]]:
    """Frozen test-function corpus; coordinates are fractions of the domain length.

    ``v1``: indicators of the dyadic intervals of relative levels 1-3 plus two
    unions, four ±1 dyadic martingales, three smooth bumps.  With
    ``adversarial`` the functions :func:`adversarial_corpus` are appended.
    """
    if version not in CORPUS_VERSIONS:
        raise ConfigError(f"unknown corpus version {version!r}")
    D = dom.length
    items = []
    for level in range(1, 4):
        if level > dom.max_level:
            break
        for j in range(1 << level):
            items.append((f"ind:{level}/{j}", GridFunction.indicator(dom, dom.dyadic(level, j))))
    if dom.max_level >= 2:
        items.append(("ind:ends", GridFunction.indicator(dom, [dom.dyadic(2, 0), dom.dyadic(2, 3)])))
        items.append(("ind:middle", GridFunction.indicator(dom, [dom.dyadic(2, 1), dom.dyadic(2, 2)])))
    for s in range(4):
        items.append((f"mart:{s}", GridFunction(dom, _martingale(dom, 1000 + s, 4))))
    for c, rad in ((0.25, 0.1), (0.5, 0.2), (0.8, 0.15)):
        items.append((f"bump:{c}:{rad}", _bump(dom, c * D, rad * D)))
    if adversarial:
        items += adversarial_corpus(dom)
    return items


def adversarial_corpus(dom: GridDomain) -> List[Tuple[str, GridFunction]]:
    """``log+(M chi_E / lam)`` for ``E`` = the first unit (and half unit) of the domain.

    The levels ``lam = 4**j / 2**K`` are tied to the domain size, so the
    height ``log(1/lam)`` of the construction on ``E`` grows with ``K``.
    """
    items = []
    for width in (1.0, 0.5):
        if width < dom.h:
            continue
        E = dom.cube(0, int(round(width / dom.h)))
        for j in range(3):
            lam = 4.0 ** j * E.length / dom.length
            if 0 < lam < 1:
                items.append((f"advFS:{width}:{lam:.6g}", adversarial_fs(E, lam, dom)))
    return items


# hunt ------------------------------------------------------------------------

@dataclass
class HuntState:
    """Annealing state over log-cell-values; the best pair is evidence, not a counterexample."""

    domain: GridDomain
    log_values: np.ndarray
    B: float
    temperature: float
    seed: int
    best_scp: float
    best_cp: float
    best_objective: float
    accepted: List[float] = field(default_factory=list)
    trajectory_hash: str = ""
    penalty: float = 10.0

    def weight(self) -> GridFunction:
        return GridFunction(self.domain, np.exp(self.log_values))

    @property
    def ratio(self) -> float:
        return self.best_scp / self.best_cp

    def reevaluate(self, p: float, r: float, budget: int = 30) -> Tuple[float, float]:
        w = self.weight()
        return scp_search(w, p, r, budget).constant, cp_constant(w, p, r).constant


def _hunt_objective(x, dom, p, r, B, penalty, inner):
    w = GridFunction(dom, np.exp(x))
    cp = cp_constant(w, p, r).constant
    scp = scp_search(w, p, r, inner).constant
    return scp - penalty * max(0.0, cp - B), scp, cp


def hunt(p: float, r: float, B: float, dom: GridDomain, budget: int = 100, seed: int = 0,
         temperature: float = 0.05, start: Optional[GridFunction] = None, inner: int = 30,
         penalty: float = 10.0) -> HuntState:
    """Anneal a weight to make the SC_p lower bound large while C_p stays below ``B``.

    Moves: perturb one cell, rescale a dyadic block, copy a dyadic block onto
    another block of the same level.  Temperature decays linearly to 0; with
    ``temperature = 0`` only non-worsening moves are accepted.
    """
    if not B > 0:
        raise ParameterError("B must be positive")
    rng = np.random.default_rng(seed)
    x = np.zeros(dom.n) if start is None else np.log(start.values)
    cur, scp, cp = _hunt_objective(x, dom, p, r, B, penalty, inner)
    best = (cur, scp, cp, x.copy())
    digest = hashlib.sha256()
    accepted = [cur]
    for step in range(budget):
        temp = temperature * (1 - step / budget)
        move = int(rng.integers(3))
        y = x.copy()
        if move == 0:
            y[int(rng.integers(dom.n))] += rng.normal(0, 0.5)
        else:
            level = int(rng.integers(0, dom.max_level + 1))
            W = dom.n >> level
            a = int(rng.integers(1 << level)) * W
            if move == 1:
                y[a:a + W] += rng.normal(0, 0.5)
            else:
                b = int(rng.integers(1 << level)) * W
                y[b:b + W] = x[a:a + W]
        val, s, c = _hunt_objective(y, dom, p, r, B, penalty, inner)
        ok = val >= cur or (temp > 0 and rng.random() < math.exp((val - cur) / temp))
        digest.update(f"{step} {move} {val!r} {int(ok)}\n".encode())
        if ok:
            x, cur = y, val
            accepted.append(cur)
            if cur > best[0]:
                best = (cur, s, c, y.copy())
    return HuntState(dom, best[3], B, temperature, seed, best[1], best[2], best[0],
                     accepted, digest.hexdigest(), penalty)


# experiments -----------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    experiment: str
    K: int
    L: int
    p: Optional[float]
    r: Optional[float]
    constant: float
    extremizer: str


@dataclass
class ExperimentResult:
    rows: List[Row]
    artifacts: Dict[str, GridFunction] = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def _exp_check_weight(cfg: ExperimentConfig, dom: GridDomain, jobs: int) -> ExperimentResult:
    w = generate(cfg.weight, dom)
    rh = reverse_holder(w, cfg.r)
    cp = cp_constant(w, cfg.p, cfg.r)
    scp = scp_search(w, cfg.p, cfg.r, cfg.budget, cfg.strategy, cfg.seed)
    rows = [Row(name, dom.K, dom.L, rep.p, rep.r, rep.constant, rep.extremizer_id())
            for name, rep in (("RH", rh), ("Cp", cp), ("SCp-lower", scp))]
    return ExperimentResult(rows, {"weight": w}, {"cp_tail": cp.auxiliary["tail_unweighted"],
                                                   "scp_evaluations": scp.auxiliary["evaluations"]})


def _single(name, fn):
    def run(cfg, dom, jobs):
        w = generate(cfg.weight, dom)
        rep = fn(cfg, w)
        return ExperimentResult([Row(name, dom.K, dom.L, rep.p, rep.r, rep.constant, rep.extremizer_id())],
                                {"weight": w})
    return run


def _exp_best_constant(cfg, dom, jobs):
    if cfg.kind is None:
        raise ConfigError("best-constant needs [inequality] kind")
    kind = InequalityKind.parse(cfg.kind)
    w = generate(cfg.weight, dom)
    rep = best_constant(kind, w, corpus(dom, cfg.corpus, adversarial=kind in (InequalityKind.FSW, InequalityKind.FS)),
                        cfg.p, jobs=jobs)
    row = Row(f"best-constant:{kind.value}", dom.K, dom.L, cfg.p, None, rep.constant, rep.extremizer or "none")
    return ExperimentResult([row], {"weight": w}, {"skipped": rep.skipped})


def _exp_sparse(cfg, dom, jobs):
    f = generate(cfg.weight, dom)
    S, c = dominate(f)
    rows = [Row("domination-constant", dom.K, dom.L, None, None, c, describe(list(S.cubes))),
            Row("sparseness", dom.K, dom.L, None, None, S.eta, f"cubes:{len(S)}")]
    return ExperimentResult(rows, {"function": f})


def _exp_stein(cfg, dom, jobs):
    f = generate(cfg.weight, dom)
    return ExperimentResult([Row("stein", dom.K, dom.L, None, None, stein_ratio(f, dom.whole()),
                                 dom.whole().label())], {"function": f})


def _exp_bmo(cfg, dom, jobs):
    E = dom.cube(0, max(1, dom.n // 2 ** min(dom.K, 4)))
    rows = []
    for j in range(1, 11):
        lam = 2.0 ** -j
        rows.append(Row(f"bmo:2^-{j}", dom.K, dom.L, None, None, grid_bmo(adversarial_fs(E, lam, dom)), E.label()))
    return ExperimentResult(rows)


def _exp_hunt(cfg, dom, jobs):
    st = hunt(cfg.p, cfg.r, cfg.B, dom, cfg.budget, cfg.seed, cfg.temperature)
    rows = [Row("hunt:scp-lower", dom.K, dom.L, cfg.p, cfg.r, st.best_scp, st.trajectory_hash[:16]),
            Row("hunt:cp-upper", dom.K, dom.L, cfg.p, cfg.r, st.best_cp, st.trajectory_hash[:16])]
    return ExperimentResult(rows, {"hunt-weight": st.weight()}, {"trajectory_hash": st.trajectory_hash})


EXPERIMENTS: Dict[str, Callable[[ExperimentConfig, GridDomain, int], ExperimentResult]] = {
    "check-weight": _exp_check_weight,
    "rh": _single("RH", lambda c, w: reverse_holder(w, c.r)),
    "cp": _single("Cp", lambda c, w: cp_constant(w, c.p, c.r)),
    "scp": _single("SCp-lower", lambda c, w: scp_search(w, c.p, c.r, c.budget, c.strategy, c.seed)),
    "best-constant": _exp_best_constant,
    "sparse-dominate": _exp_sparse,
    "stein": _exp_stein,
    "bmo": _exp_bmo,
    "hunt": _exp_hunt,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, name: Optional[str] = None) -> ExperimentResult:
    name = name or cfg.experiment
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    dom = cfg.domain()
    log.info("running %s on %s", name, dom)
    return EXPERIMENTS[name](cfg, dom, jobs)


@dataclass
class SweepReport:
    rows: List[Row]
    drift: Dict[str, Dict[str, float]]
    threshold: float = 0.15

    @property
    def unstable(self) -> List[Tuple[str, str]]:
        return [(name, axis) for name, d in sorted(self.drift.items())
                for axis, v in sorted(d.items()) if not v <= self.threshold]


def _drift(values: Sequence[float]) -> float:
    vals = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(vals)):
        return math.inf
    ref = np.max(np.abs(vals))
    return float((vals.max() - vals.min()) / ref) if ref > 0 else 0.0


def sweep(cfg: ExperimentConfig, jobs: int = 1, Ls: Optional[Sequence[int]] = None,
          Ks: Optional[Sequence[int]] = None, threshold: float = 0.15) -> SweepReport:
    """Rerun the configured experiment over ``L0..L0+2`` and ``K0, K0+1``; drift is ``(max-min)/max|.|``."""
    Ls = list(Ls) if Ls is not None else [cfg.L, cfg.L + 1, cfg.L + 2]
    Ks = list(Ks) if Ks is not None else [cfg.K, cfg.K + 1]
    grid = [(K, L) for K in Ks for L in Ls]
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")

    def one(KL):
        return run_experiment(cfg.at(*KL)).rows

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(KL) for KL in grid]
    rows = [row for rs in results for row in rs]
    table: Dict[str, Dict[Tuple[int, int], float]] = {}
    for row in rows:
        table.setdefault(row.experiment, {})[(row.K, row.L)] = row.constant
    drift = {}
    for name, vals in table.items():
        d = {}
        if len(Ls) > 1:
            d["L"] = max(_drift([vals[(K, L)] for L in Ls]) for K in Ks)
        if len(Ks) > 1:
            d["K"] = max(_drift([vals[(K, L)] for K in Ks]) for L in Ls)
        drift[name] = d
    return SweepReport(rows, drift, threshold)


# measured constants ------------------------------------------------------------

def _random_function(rng, dom: GridDomain, positive: bool = False) -> GridFunction:
    style = int(rng.integers(3))
    if style == 0:
        v = rng.normal(size=dom.n)
    elif style == 1:
        v = _martingale(dom, int(rng.integers(2 ** 31)), dom.max_level)
    else:
        v = np.zeros(dom.n)
        v[rng.integers(dom.n, size=int(rng.integers(1, 4)))] = rng.exponential(3.0, size=1)[0]
        v += 0.01 * rng.random(dom.n)
    if positive:
        v = np.abs(v) + (0.0 if style == 2 else 1e-3)
    return GridFunction(dom, v)


def measured_constants(cases: int = 100, seed: int = 2024, K: int = 2, L: int = 3) -> Dict[str, float]:
    """Corpus-measured constants of the inequalities whose constants are left unspecified.

    Every entry is a max (or, for ``sharp_c1``, a min) over ``cases``
    seeded random instances on ``GridDomain(K, L)``.
    """
    from .core import Cube
    from .maximal import local_sharp
    from .orlicz import holder_check
    from .singular import grand_maximal, reverse_llogl
    from .weights import WeightSpec, whitney

    dom = GridDomain(K, L)
    rng = np.random.default_rng(seed)
    out = {"holder": 0.0, "stein": 0.0, "reverse_llogl": 0.0, "sharp_c1": math.inf, "sharp_c2": 0.0,
           "whitney_c1": 0.0, "whitney_c2": 0.0, "grand_maximal": 0.0}
    middle = dom.cube(3 * dom.n // 8, dom.n // 2)
    for i in range(cases):
        f = _random_function(rng, dom)
        level = int(rng.integers(0, dom.max_level))
        Q = dom.dyadic(level, int(rng.integers(1 << level)))
        s, e = Q.cells(dom)
        E = np.zeros(dom.n, dtype=bool)
        E[s:e] = rng.random(e - s) < rng.uniform(0.05, 0.9)
        if not E.any():
            E[s] = True
        lhs, rhs = holder_check(f, E, Q)
        out["holder"] = max(out["holder"], lhs / rhs)

        g = _random_function(rng, dom, positive=True)
        out["stein"] = max(out["stein"], stein_ratio(g, dom.whole()))

        if i % 4 == 0:
            w = generate(WeightSpec.lacunary(int(rng.integers(1, 4)), float(rng.uniform(1, 8))), dom)
        else:
            w = _random_function(rng, dom, positive=True)
        lhs, rhs = reverse_llogl(w, middle)
        out["reverse_llogl"] = max(out["reverse_llogl"], lhs / rhs)

        fs = sharp(f).values
        mm = maximal_values(local_sharp(f, 0.25).values)
        ok = mm > 1e-12 * max(1.0, float(np.abs(f.values).max()))
        if ok.any():
            ratio = fs[ok] / mm[ok]
            out["sharp_c1"] = min(out["sharp_c1"], float(ratio.min()))
            out["sharp_c2"] = max(out["sharp_c2"], float(ratio.max()))

        omega = np.zeros(dom.n, dtype=bool)
        for _ in range(int(rng.integers(1, 4))):
            a = int(rng.integers(dom.n))
            omega[a:a + int(rng.integers(1, dom.n // 2))] = True
        if omega.all():
            omega[int(rng.integers(dom.n))] = False
        cover = whitney(omega, 3.0, dom)
        out["whitney_c1"] = max(out["whitney_c1"], float(cover.c1))
        out["whitney_c2"] = max(out["whitney_c2"], float(cover.c2))

        gm = grand_maximal(f).values
        den = hilbert_star(f).values + maximal_values(f.values)
        pos = den > 0
        if pos.any():
            out["grand_maximal"] = max(out["grand_maximal"], float((gm[pos] / den[pos]).max()))
    return out
