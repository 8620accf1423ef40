"""Run configuration: one INI file per run, with command-line overrides.

Example::

    [data]
    path = ozone.csv
    response = logozone
    predictors = x1, x2, x3
    ; optional panel index for the timed command
    wave = wave
    ; global (default), per_fold, or per_wave (default for timed)
    standardize = global

    [cv]
    folds = 10
    seed = 1

    [prior]
    g = n
    inclusion_prob = 0.5

    [cost]
    kind = itemized
    price = 0.01
    free = x2, x3

    [sweep]
    grid = 0, 0.005, 0.01, 0.02

    [timed]
    target = ability
    deltas = 0, 0.05
    prices = 0.01, 0.05

Relative paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError, MissingInputError
from .gprior import GPriorConfig

COST_KINDS = ("none", "uniform", "itemized", "grouped")
SCALING_MODES = ("global", "per_fold", "per_wave")


@dataclass
class CostSpec:
    kind: str = "none"
    price: float = 0.0
    prices: Optional[list] = None
    free: list = field(default_factory=list)
    groups: list = field(default_factory=list)


@dataclass
class RunConfig:
    data_path: Optional[Path]
    response: str
    predictors: list
    wave: Optional[str] = None
    scaling: str = "global"
    folds: int = 10
    seed: int = 1
    g: Optional[float] = None
    inclusion_prob: float = 0.5
    cost: CostSpec = field(default_factory=CostSpec)
    sweep_grid: Optional[list] = None
    target: Optional[str] = None
    deltas: list = field(default_factory=lambda: [0.0])
    timing_prices: list = field(default_factory=lambda: [0.0])
    check_n: int = 101
    check_m: int = 2
    check_q: list = field(default_factory=lambda: [1, 2])
    check_seeds: int = 100
    check_quadrature: int = 50
    covariate_mean: Optional[Path] = None
    covariate_cov: Optional[Path] = None
    out_dir: Path = Path("out")
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    @property
    def prior(self) -> GPriorConfig:
        return GPriorConfig(self.g, self.inclusion_prob)

    def index_of(self, name: str) -> int:
        try:
            return self.predictors.index(name)
        except ValueError:
            raise ConfigError(f"{name!r} is not one of the configured predictors") from None


def _list(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad list {text!r}: {exc}") from None
    return [item.strip() for item in text.split(",") if item.strip()]


def _floats(text: str, key: str) -> list:
    try:
        return [float(v) for v in _list(text)]
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of numbers") from None


def _get(parser, section, key, fallback=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return fallback


def _number(parser, section, key, kind, fallback):
    raw = _get(parser, section, key)
    if raw is None:
        return fallback
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key} = {raw!r} is not a valid {kind.__name__}") from None


def load_config(path, out=None, seed=None, folds=None, threads=None,
                command: str = "analyze") -> RunConfig:
    """Parse a run configuration; keyword arguments override file values.

    The ``[data]`` section may be omitted only for the ``check`` command.
    Standardization defaults to the whole dataset, except for ``timed``
    where each wave is standardized on its own.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent

    if parser.has_section("data") or command != "check":
        for key in ("path", "response", "predictors"):
            if _get(parser, "data", key) is None:
                raise ConfigError(f"missing data.{key}")
        data_path = base / parser.get("data", "path")
        if not data_path.is_file():
            raise MissingInputError(f"data file not found: {data_path}")
        predictors = [str(v) for v in _list(parser.get("data", "predictors"))]
        if not predictors:
            raise ConfigError("data.predictors is empty")
        response = parser.get("data", "response").strip()
    else:
        data_path, predictors, response = None, [], ""

    default_scaling = "per_wave" if command == "timed" else "global"
    scaling = _get(parser, "data", "standardize", default_scaling)
    if scaling not in SCALING_MODES:
        raise ConfigError(f"data.standardize must be one of {SCALING_MODES}")

    g_raw = _get(parser, "prior", "g", "n")
    if g_raw.strip() == "n":
        g = None
    else:
        try:
            g = float(g_raw)
        except ValueError:
            raise ConfigError(f"prior.g = {g_raw!r} is neither 'n' nor a number") from None
        if not g > 0:
            raise ConfigError("prior.g must be positive")
    incl = _number(parser, "prior", "inclusion_prob", float, 0.5)
    if not 0 < incl < 1:
        raise ConfigError("prior.inclusion_prob must lie in (0, 1)")

    kind = _get(parser, "cost", "kind", "none")
    if kind not in COST_KINDS:
        raise ConfigError(f"cost.kind must be one of {COST_KINDS}")
    cost = CostSpec(kind, _number(parser, "cost", "price", float, 0.0))
    if _get(parser, "cost", "prices") is not None:
        cost.prices = _floats(parser.get("cost", "prices"), "cost.prices")
        if len(cost.prices) != len(predictors):
            raise ConfigError("cost.prices needs one entry per predictor")
    cost.free = [str(v) for v in _list(_get(parser, "cost", "free", ""))]
    groups_raw = _get(parser, "cost", "groups", "")
    if groups_raw.strip():
        groups = json.loads(groups_raw) if groups_raw.strip().startswith("[") else None
        if groups is None or not all(isinstance(g_, list) for g_ in groups):
            raise ConfigError('cost.groups must be a JSON list of name lists, e.g. [["x5", "x6"]]')
        cost.groups = groups
    if cost.price < 0 or (cost.prices and min(cost.prices) < 0):
        raise ConfigError("prices must be nonnegative")
    if kind == "grouped" and not cost.groups:
        raise ConfigError("cost.kind = grouped needs cost.groups")
    for name in cost.free + [n for g_ in cost.groups for n in g_]:
        if name not in predictors:
            raise ConfigError(f"cost refers to unknown predictor {name!r}")

    cfg = RunConfig(
        data_path=data_path,
        response=response,
        predictors=predictors,
        wave=_get(parser, "data", "wave"),
        scaling=scaling,
        folds=_number(parser, "cv", "folds", int, 10),
        seed=_number(parser, "cv", "seed", int, 1),
        g=g,
        inclusion_prob=incl,
        cost=cost,
        out_dir=base / _get(parser, "run", "out", "out"),
    )
    if _get(parser, "sweep", "grid") is not None:
        cfg.sweep_grid = _floats(parser.get("sweep", "grid"), "sweep.grid")
    cfg.target = _get(parser, "timed", "target")
    if _get(parser, "timed", "deltas") is not None:
        cfg.deltas = _floats(parser.get("timed", "deltas"), "timed.deltas")
    if _get(parser, "timed", "prices") is not None:
        cfg.timing_prices = _floats(parser.get("timed", "prices"), "timed.prices")
    cfg.check_n = _number(parser, "check", "n", int, cfg.check_n)
    cfg.check_m = _number(parser, "check", "m", int, cfg.check_m)
    if _get(parser, "check", "q") is not None:
        cfg.check_q = [int(v) for v in _floats(parser.get("check", "q"), "check.q")]
    cfg.check_seeds = _number(parser, "check", "seeds", int, cfg.check_seeds)
    cfg.check_quadrature = _number(parser, "check", "quadrature_cases", int,
                                   cfg.check_quadrature)
    if _get(parser, "extended", "mean") is not None:
        cfg.covariate_mean = base / parser.get("extended", "mean")
        cfg.covariate_cov = base / _get(parser, "extended", "cov", "")
        for p_ in (cfg.covariate_mean, cfg.covariate_cov):
            if not p_.is_file():
                raise MissingInputError(f"covariate model file not found: {p_}")
    cfg.threads = _number(parser, "run", "threads", int, cfg.threads)

    if out is not None:
        cfg.out_dir = Path(out)
    if seed is not None:
        cfg.seed = seed
    if folds is not None:
        cfg.folds = folds
    if threads is not None:
        cfg.threads = threads
    if cfg.folds < 2:
        raise ConfigError("cv.folds must be at least 2")
    if cfg.threads < 1:
        raise ConfigError("run.threads must be positive")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("cv.seed must be an unsigned 64-bit integer")
    return cfg
