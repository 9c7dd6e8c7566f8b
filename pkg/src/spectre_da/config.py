"""Experiment configuration: TOML (or JSON) files -> validated ExperimentConfig.

Example (TOML)::

    experiment = "toy"          # toy | psw | mixture
    m_grid = [1000, 2000, 3000]
    burn_in = 100000            # default per experiment
    master_seed = 2024
    top_k = 11
    rescale = false             # default false for toy; psw and mixture must rescale
    threads = "auto"
    estimator = "mcrma"         # or "erma" (toy only)

    [schedule]
    mode = "strong_default"     # strong_default | weak_log | constant | custom
    parameter = 0

    [psw]
    dataset = "nodal"           # bundled file, or a CSV path
    b = 0.0                     # prior mean: scalar or list of length p
    B = 1.0                     # prior covariance: scalar (times identity) or p x p list

    [mixture]
    n = 20
    mu1 = 0.0
    mu2 = 0.1
    p = 0.5
    tau = 0.1
    variants = ["MDA", "FS"]
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .numerics import InputError
from .spectrum import MAX_DENSE_M, NSchedule

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("toy", "psw", "mixture")
DEFAULT_BURN_IN = {"toy": 100_000, "psw": 10_000, "mixture": 100_000}
DEFAULT_TOP_K = {"toy": 11, "psw": 30, "mixture": 21}
DEFAULT_SCHEDULE = {
    "toy": NSchedule("strong_default"),
    "psw": NSchedule("strong_default"),
    "mixture": NSchedule("constant", 5000),
}
DEFAULT_SEED = 20190417


class ConfigError(InputError):
    pass


@dataclass
class PswSettings:
    dataset: str
    b: float | list = 0.0
    B: float | list = 1.0
    pg_method: str = "exact"


@dataclass
class MixtureSettings:
    n: int = 20
    mu1: float = 0.0
    mu2: float = 0.1
    p: float = 0.5
    tau: float = 0.1
    variants: list = field(default_factory=lambda: ["MDA", "FS"])


@dataclass
class ExperimentConfig:
    experiment: str
    m_grid: list
    schedule: NSchedule
    burn_in: int
    master_seed: int
    top_k: int
    rescale: bool
    threads: int | str = "auto"
    estimator: str = "mcrma"
    psw: PswSettings | None = None
    mixture: MixtureSettings | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schedule"] = {"mode": self.schedule.mode, "parameter": self.schedule.parameter}
        return {k: v for k, v in out.items() if v is not None}


_TOP_KEYS = {
    "experiment", "m_grid", "schedule", "burn_in", "master_seed", "top_k", "rescale",
    "threads", "estimator", "psw", "mixture",
}


def _reject_unknown(section: dict, allowed, where: str):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table/object")
    _reject_unknown(raw, _TOP_KEYS, "configuration")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")

    if "m_grid" not in raw:
        raise ConfigError("m_grid is required")
    grid = raw["m_grid"]
    if not isinstance(grid, list) or not grid:
        raise ConfigError("m_grid must be a non-empty list of integers")
    grid = [_int(m, "m_grid entry", 2) for m in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"m_grid must be strictly increasing, got {grid}")
    if grid[-1] > MAX_DENSE_M:
        raise ConfigError(f"m_grid maximum {grid[-1]} exceeds the dense-matrix bound {MAX_DENSE_M}")

    sched_raw = raw.get("schedule")
    if sched_raw is None:
        schedule = DEFAULT_SCHEDULE[exp]
    else:
        if not isinstance(sched_raw, dict):
            raise ConfigError("schedule must be a table with mode/parameter")
        _reject_unknown(sched_raw, {"mode", "parameter"}, "schedule")
        try:
            schedule = NSchedule(sched_raw.get("mode", "strong_default"), float(sched_raw.get("parameter", 0.0)))
        except InputError as exc:
            raise ConfigError(f"schedule: {exc}") from None

    burn_in = _int(raw.get("burn_in", DEFAULT_BURN_IN[exp]), "burn_in", 0)
    seed = _int(raw.get("master_seed", DEFAULT_SEED), "master_seed", 0)
    if seed >= 2**64:
        raise ConfigError("master_seed must fit in 64 bits")
    top_k = _int(raw.get("top_k", DEFAULT_TOP_K[exp]), "top_k", 1)

    rescale = raw.get("rescale", exp != "toy")
    if not isinstance(rescale, bool):
        raise ConfigError(f"rescale must be true/false, got {rescale!r}")
    if exp != "toy" and not rescale:
        raise ConfigError(f"rescale: the {exp} stationary density is unnormalised, so rescale must be true")

    threads = raw.get("threads", "auto")
    if threads != "auto":
        threads = _int(threads, "threads", 1)

    estimator = raw.get("estimator", "mcrma")
    if estimator not in ("mcrma", "erma"):
        raise ConfigError(f"estimator must be mcrma or erma, got {estimator!r}")
    if estimator == "erma" and exp != "toy":
        raise ConfigError("estimator: erma needs a closed-form kernel (toy only)")

    psw = mixture = None
    if exp == "psw":
        block = raw.get("psw")
        if not isinstance(block, dict) or "dataset" not in block:
            raise ConfigError("psw.dataset is required for the psw experiment")
        _reject_unknown(block, {"dataset", "b", "B", "pg_method"}, "psw")
        psw = PswSettings(**block)
        if psw.pg_method not in ("exact", "truncated"):
            raise ConfigError(f"psw.pg_method must be exact or truncated, got {psw.pg_method!r}")
    elif "psw" in raw:
        raise ConfigError(f"psw block given for experiment {exp!r}")
    if exp == "mixture":
        block = raw.get("mixture", {})
        if not isinstance(block, dict):
            raise ConfigError("mixture must be a table")
        _reject_unknown(block, {"n", "mu1", "mu2", "p", "tau", "variants"}, "mixture")
        mixture = MixtureSettings(**block)
        mixture.n = _int(mixture.n, "mixture.n", 2)
        if not 0 < mixture.p < 1:
            raise ConfigError(f"mixture.p must lie in (0, 1), got {mixture.p}")
        if not mixture.tau > 0:
            raise ConfigError(f"mixture.tau must be positive, got {mixture.tau}")
        variants = [str(v).upper() for v in mixture.variants]
        if not variants or any(v not in ("MDA", "FS") for v in variants) or len(set(variants)) != len(variants):
            raise ConfigError(f"mixture.variants must be distinct values from MDA/FS, got {mixture.variants}")
        mixture.variants = variants
    elif "mixture" in raw:
        raise ConfigError(f"mixture block given for experiment {exp!r}")

    return ExperimentConfig(
        experiment=exp,
        m_grid=grid,
        schedule=schedule,
        burn_in=burn_in,
        master_seed=seed,
        top_k=top_k,
        rescale=rescale,
        threads=threads,
        estimator=estimator,
        psw=psw,
        mixture=mixture,
    )


def load_config(path) -> ExperimentConfig:
    """Parse a .toml or .json config file and validate it."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    # metadata files carry the config under "config"
    if path.suffix.lower() == ".json" and "config" in raw and "experiment" not in raw:
        raw = raw["config"]
    try:
        return config_from_dict(raw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
