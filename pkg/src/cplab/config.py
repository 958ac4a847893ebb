"""Experiment configuration: ``[domain] [weight] [inequality] [search]`` key=value text files.

Example::

    [domain]
    K = 3
    L = 4

    [weight]
    kind = power
    a = 0.5

    [inequality]
    experiment = best-constant
    kind = ASM
    p = 2
    r = 1.5
    corpus = v1

    [search]
    strategy = levelsets
    budget = 100
    seed = 0
"""
from __future__ import annotations

import ast
import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .core import MAX_RESOLUTION, GridDomain
from .errors import ConfigError
from .weights import WeightSpec

_WEIGHT_KEYS = {
    "power": {"a": float, "center": float},
    "indicator": {"intervals": "literal"},
    "lacunary": {"levels": int, "gain": float},
    "random": {"seed": int, "roughness": float, "levels": int},
}


@dataclass(frozen=True)
class ExperimentConfig:
    K: int
    L: int
    weight: WeightSpec
    experiment: str = "check-weight"
    kind: Optional[str] = None
    p: float = 2.0
    r: float = 1.5
    corpus: str = "v1"
    strategy: str = "levelsets"
    budget: int = 100
    seed: int = 0
    B: float = 2.0
    temperature: float = 0.05
    extras: dict = field(default_factory=dict)

    def domain(self) -> GridDomain:
        return GridDomain(self.K, self.L)

    def at(self, K: int, L: int) -> "ExperimentConfig":
        return dataclasses.replace(self, K=K, L=L)


def _get(section, key, conv, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing key {key!r} in [{section.name}]")
        return default
    raw = section[key]
    try:
        if conv == "literal":
            return ast.literal_eval(raw)
        return conv(raw)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r}: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    known = {"domain", "weight", "inequality", "search"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    for name in ("domain", "weight"):
        if name not in cp:
            raise ConfigError(f"missing section [{name}]")
    d = cp["domain"]
    K = _get(d, "K", int, required=True)
    L = _get(d, "L", int, required=True)
    if K < 0 or L < 0 or K + L > MAX_RESOLUTION:
        raise ConfigError(f"K={K}, L={L} outside 0 <= K + L <= {MAX_RESOLUTION}")

    wsec = cp["weight"]
    kind = _get(wsec, "kind", str, required=True)
    if kind not in _WEIGHT_KEYS:
        raise ConfigError(f"unknown weight kind {kind!r}")
    params = {}
    for key, conv in _WEIGHT_KEYS[kind].items():
        val = _get(wsec, key, conv)
        if val is not None:
            params[key] = val
    extra = set(wsec.keys()) - set(_WEIGHT_KEYS[kind]) - {"kind"}
    if extra:
        raise ConfigError(f"unknown [weight] keys {sorted(extra)}")
    weight = WeightSpec(kind, params)

    ineq = cp["inequality"] if "inequality" in cp else cp["DEFAULT"]
    search = cp["search"] if "search" in cp else cp["DEFAULT"]
    cfg = ExperimentConfig(
        K=K, L=L, weight=weight,
        experiment=_get(ineq, "experiment", str, "check-weight"),
        kind=_get(ineq, "kind", str),
        p=_get(ineq, "p", float, 2.0),
        r=_get(ineq, "r", float, 1.5),
        corpus=_get(ineq, "corpus", str, "v1"),
        strategy=_get(search, "strategy", str, "levelsets"),
        budget=_get(search, "budget", int, 100),
        seed=_get(search, "seed", int, 0),
        B=_get(search, "B", float, 2.0),
        temperature=_get(search, "temperature", float, 0.05),
    )
    if not cfg.p > 0 or not cfg.r > 1:
        raise ConfigError("need p > 0 and r > 1")
    if cfg.budget < 1:
        raise ConfigError("budget must be positive")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)
