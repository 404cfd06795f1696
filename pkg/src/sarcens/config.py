"""Declarative run configuration shared by all CLI subcommands.

A single YAML file configures paths, the seed, split ratios, endpoint
settings, and ensemble settings; CLI flags override file values. The
effective merged config is echoed into the output directory so any run can
be reproduced exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .llm_client import LlmConfig


class ConfigError(ValueError):
    """Invalid run config; message names the offending field."""


DEFAULT_LAMBDA_GRID = (0.001, 0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class PathsConfig:
    output_dir: str = "out"
    cache: str = "out/cache.jsonl"
    predictions_dir: str = "out/predictions"
    corpus: str = "out/corpus.jsonl"


@dataclass(frozen=True)
class EnsembleConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    top_k: int = 5
    scheme: str = "hard"
    cutoff_n: int = 0
    threshold: float = 0.5
    tie_label: int = 0
    split: str = "test"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    paths: PathsConfig = field(default_factory=PathsConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: dict, prefix: str):
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}{key}: unknown config field")
    coerced = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if f.name in ("lambda_grid", "split_ratios") and isinstance(value, (list, tuple)):
            value = tuple(float(v) for v in value)
        coerced[f.name] = value
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{prefix.rstrip('.')}: {exc}") from exc


def load_run_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Load YAML config, apply dotted-key overrides, validate everything."""
    data: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        data = loaded
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key}: cannot override non-mapping value")
        node[parts[-1]] = value

    top_known = {"seed", "split_ratios", "paths", "llm", "ensemble"}
    for key in data:
        if key not in top_known:
            raise ConfigError(f"{key}: unknown config field")

    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed: must be an integer, got {seed!r}")
    ratios = data.get("split_ratios", (0.8, 0.1, 0.1))
    if len(ratios) != 3:
        raise ConfigError(f"split_ratios: expected 3 values, got {len(ratios)}")
    ratios = tuple(float(r) for r in ratios)

    paths = _build(PathsConfig, data.get("paths", {}), "paths.")
    llm = _build(LlmConfig, data.get("llm", {}), "llm.")
    ensemble = _build(EnsembleConfig, data.get("ensemble", {}), "ensemble.")
    if ensemble.scheme not in ("hard", "soft", "mixed", "stacking"):
        raise ConfigError(f"ensemble.scheme: unknown scheme {ensemble.scheme!r}")
    if ensemble.split not in ("train", "val", "test"):
        raise ConfigError(f"ensemble.split: unknown split {ensemble.split!r}")
    if ensemble.top_k < 1:
        raise ConfigError(f"ensemble.top_k: must be >= 1, got {ensemble.top_k}")
    if any(g < 0 for g in ensemble.lambda_grid):
        raise ConfigError("ensemble.lambda_grid: values must be >= 0")

    return RunConfig(seed=seed, split_ratios=ratios, paths=paths, llm=llm, ensemble=ensemble)


def echo_config(config: RunConfig, output_dir: str | Path) -> Path:
    """Write the effective config into the output dir for exact reruns."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "effective-config.yaml"
    target.write_text(
        yaml.safe_dump(config.to_dict(), sort_keys=True, allow_unicode=True),
        encoding="utf-8",
    )
    return target
