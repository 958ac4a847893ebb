import math

import numpy as np
import pytest

from cplab.config import ExperimentConfig, parse_config
from cplab.core import Cube, GridDomain, GridFunction, cell_mask
from cplab.errors import ConfigError, ParameterError
from cplab.lab import (InequalityKind, adversarial_fs, best_constant, corpus, grid_bmo, hunt, run_experiment,
                       sweep)
from cplab.maximal import maximal_values
from cplab.sparse import make_family
from cplab.weights import WeightSpec, generate

CONFIG = """
[domain]
K = 2
L = 2

[weight]
kind = power
a = 0.5

[inequality]
experiment = best-constant
kind = asm
p = 2
r = 1.5

[search]
strategy = greedy
budget = 40
seed = 3
"""


def test_asm_single_cube():
    dom = GridDomain(2, 1)
    Q = dom.dyadic(1, 0)
    one = GridFunction.constant(dom, 1.0)
    S = make_family(dom, [Q])
    rep = best_constant("ASM", one, [("chi", GridFunction.indicator(dom, Q))], 2.0, S=S)
    assert rep.constant <= 1 and rep.extremizer == "chi"
    from cplab.core import weighted_norm
    from cplab.sparse import apply
    assert weighted_norm(apply(S, GridFunction.indicator(dom, Q)), one, 2.0, "weak") == pytest.approx(
        Q.length ** 0.5)


def test_skips_and_empty():
    dom = GridDomain(1, 1)
    w = GridFunction.constant(dom, 1.0)
    rep = best_constant("FSW", w, [GridFunction.constant(dom, 0.0)], 2.0)
    assert rep.empty and rep.skipped == ["f0"]
    with pytest.raises(ParameterError):
        best_constant("FSW", w, [], 2.0)
    with pytest.raises(ConfigError):
        InequalityKind.parse("XYZ")


@pytest.mark.parametrize("kind", list(InequalityKind))
def test_power_weight_constants_finite(kind):
    dom = GridDomain(2, 2)
    w = generate(WeightSpec.power(0.5), dom)
    rep = best_constant(kind, w, corpus(dom), 2.0)
    assert math.isfinite(rep.constant) and rep.constant > 0
    assert len(rep.ratios) == len(corpus(dom))


def test_jobs_do_not_change_results():
    dom = GridDomain(2, 2)
    w = generate(WeightSpec.power(-0.5), dom)
    a = best_constant("CFW", w, corpus(dom), 1.5)
    b = best_constant("CFW", w, corpus(dom), 1.5, jobs=4)
    assert a.ratios == b.ratios and a.extremizer == b.extremizer


def test_adversarial_fs_properties():
    dom = GridDomain(3, 1)
    E = dom.cube(4, 6)
    lam = 0.125
    f = adversarial_fs(E, lam, dom)
    M = maximal_values(cell_mask(dom, E).astype(float))
    assert np.allclose(f.values[4:6], math.log(1 / lam))
    assert np.all(f.values[M < lam] == 0)
    assert np.all(M[f.values > 0] >= lam)
    with pytest.raises(ParameterError):
        adversarial_fs(E, 1.5, dom)


def test_adversarial_bmo_bounded():
    dom = GridDomain(8, 0)
    E = dom.cube(0, 1)
    vals = [grid_bmo(adversarial_fs(E, 2.0 ** -j, dom)) for j in range(1, 11)]
    assert max(vals) <= 1.0
    assert np.all(np.diff(vals) >= -1e-12)


def test_hunt_bookkeeping():
    dom = GridDomain(1, 2)
    st = hunt(2.0, 1.5, 1.2, dom, budget=15, seed=4, temperature=0.0)
    scp, cp = st.reevaluate(2.0, 1.5)
    assert scp == pytest.approx(st.best_scp, rel=1e-6) and cp == pytest.approx(st.best_cp, rel=1e-6)
    assert all(b >= a for a, b in zip(st.accepted, st.accepted[1:]))
    assert st.best_cp <= st.B + (st.best_scp - st.best_objective) / st.penalty + 1e-12
    again = hunt(2.0, 1.5, 1.2, dom, budget=15, seed=4, temperature=0.0)
    assert again.trajectory_hash == st.trajectory_hash
    assert hunt(2.0, 1.5, 1.2, dom, budget=15, seed=5, temperature=0.0).trajectory_hash != st.trajectory_hash
    with pytest.raises(ParameterError):
        hunt(2.0, 1.5, 0.0, dom)


def test_hunt_from_power_start():
    dom = GridDomain(1, 2)
    w0 = generate(WeightSpec.power(1.0, center=-0.5), dom)
    st = hunt(1.5, 2.0, 2.0, dom, budget=10, seed=1, temperature=0.0, start=w0)
    assert all(b >= a for a, b in zip(st.accepted, st.accepted[1:]))


def test_config_roundtrip():
    cfg = parse_config(CONFIG)
    assert (cfg.K, cfg.L, cfg.kind, cfg.strategy, cfg.budget, cfg.seed) == (2, 2, "asm", "greedy", 40, 3)
    assert cfg.weight == WeightSpec.power(0.5) or cfg.weight.params == {"a": 0.5}
    ind = parse_config("[domain]\nK=2\nL=0\n[weight]\nkind=indicator\nintervals=[(0, 1)]\n")
    assert ind.weight.params["intervals"] == [(0, 1)]


@pytest.mark.parametrize("text", [
    "[domain]\nK=2\n[weight]\nkind=power\n",
    "[domain]\nK=2\nL=1\n[weight]\nkind=bogus\n",
    "[domain]\nK=2\nL=1\n[weight]\nkind=power\na=x\n",
    "[domain]\nK=2\nL=1\n[weight]\nkind=power\nb=1\n",
    "[domain]\nK=2\nL=1\n[weight]\nkind=power\n[extra]\n",
    "not a config",
    "[domain]\nK=30\nL=1\n[weight]\nkind=power\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_run_experiment_deterministic():
    cfg = parse_config(CONFIG)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.rows == b.rows
    with pytest.raises(ConfigError):
        run_experiment(cfg, name="nope")


def test_sweep_flat_and_divergent():
    flat = ExperimentConfig(K=2, L=2, weight=WeightSpec.power(0), experiment="check-weight", budget=20)
    rep = sweep(flat)
    assert all(v < 1e-9 for d in rep.drift.values() for v in d.values()) and not rep.unstable
    witness = ExperimentConfig(K=2, L=0, weight=WeightSpec.indicator([(0, 1)]), experiment="cp", r=2.0)
    rep = sweep(witness)
    assert ("Cp", "K") in rep.unstable
    with pytest.raises(ConfigError):
        sweep(ExperimentConfig(K=2, L=2, weight=WeightSpec.power(0), experiment="nope"))


def test_stein_sweep_smooth():
    cfg = ExperimentConfig(K=1, L=3, weight=WeightSpec.power(1.0), experiment="stein")
    rep = sweep(cfg, Ks=[1])
    assert rep.drift["stein"]["L"] < 0.05
