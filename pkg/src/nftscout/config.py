"""Pipeline configuration: a sectioned TOML document, one section per stage.

``parse_config`` validates that every referenced path exists up front so a
bad config fails before any stage runs. ``serialize_config`` emits a
minimal TOML rendering whose re-parse is semantically identical (key order
aside).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import tomli

from .timefmt import parse_rfc3339

ENV_CONFIG_VAR = "SCOUT_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    out_dir: Path
    seed: int = 0
    as_of: datetime | None = None
    registry: Path | None = None
    top_seeds: int | None = 100
    rules: list[str] = field(default_factory=list)
    terms: list[str] = field(default_factory=lambda: ["nft", "claim", "mint"])
    ct_stream: Path | None = None
    since: datetime | None = None
    input_corpus: Path | None = None  # fixture mode: import snapshots from here
    parallel: int = 8
    accounts: Path | None = None
    contract_names: Path | None = None
    labels: Path | None = None
    disable_f5: bool = False
    model: Path | None = None
    n_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 1
    mtry: int | None = None
    raw: dict = field(default_factory=dict, repr=False)


def load_config_doc(path: str | Path) -> dict:
    with Path(path).open("rb") as fh:
        return tomli.load(fh)


def _path_of(base: Path, value: str | None) -> Path | None:
    if not value:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(path: str | Path) -> PipelineConfig:
    """Parse and validate a config file; relative paths resolve against it."""
    path = Path(path)
    doc = load_config_doc(path)
    base = path.parent

    pipeline = doc.get("pipeline", {})
    squat = doc.get("squat", {})
    ct = doc.get("ct", {})
    fetch = doc.get("fetch", {})
    features = doc.get("features", {})
    classify = doc.get("classify", {})
    registry = doc.get("registry", {})

    out_dir = _path_of(base, pipeline.get("out_dir", "out"))
    cfg = PipelineConfig(
        out_dir=out_dir,
        seed=int(pipeline.get("seed", 0)),
        as_of=parse_rfc3339(pipeline["as_of"]) if "as_of" in pipeline else None,
        registry=_path_of(base, registry.get("path")),
        top_seeds=registry.get("top_seeds", 100),
        rules=list(squat.get("rules", [])),
        terms=[t.lower() for t in squat.get("terms", ["nft", "claim", "mint"])],
        ct_stream=_path_of(base, ct.get("stream")),
        since=parse_rfc3339(ct["since"]) if "since" in ct else None,
        input_corpus=_path_of(base, fetch.get("input_corpus")),
        parallel=int(fetch.get("parallel", 8)),
        accounts=_path_of(base, features.get("accounts")),
        contract_names=_path_of(base, features.get("contract_names")),
        labels=_path_of(base, features.get("labels")),
        disable_f5=bool(features.get("disable_f5", False)),
        model=_path_of(base, classify.get("model")),
        n_trees=int(classify.get("n_trees", 200)),
        max_depth=classify.get("max_depth"),
        min_leaf=int(classify.get("min_leaf", 1)),
        mtry=classify.get("mtry"),
        raw=doc,
    )

    for name, p in (
        ("registry.path", cfg.registry),
        ("ct.stream", cfg.ct_stream),
        ("fetch.input_corpus", cfg.input_corpus),
        ("features.accounts", cfg.accounts),
        ("features.contract_names", cfg.contract_names),
        ("features.labels", cfg.labels),
        ("classify.model", cfg.model),
    ):
        if p is not None and not p.exists():
            raise ConfigError(f"{name}: path does not exist: {p}")
    return cfg


def default_config_path() -> str | None:
    return os.environ.get(ENV_CONFIG_VAR)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"unsupported config value type: {type(value).__name__}")


def serialize_config(doc: dict) -> str:
    """Render a sectioned document as TOML (flat sections, simple values)."""
    lines: list[str] = []
    top = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    for key, value in top.items():
        lines.append(f"{key} = {_toml_value(value)}")
    for section, body in doc.items():
        if not isinstance(body, dict):
            continue
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, value in body.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


__all__ = [
    "ENV_CONFIG_VAR",
    "ConfigError",
    "PipelineConfig",
    "default_config_path",
    "load_config_doc",
    "parse_config",
    "serialize_config",
]
