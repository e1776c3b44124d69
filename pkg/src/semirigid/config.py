"""Reading problem documents (JSON or YAML) and turning them into Problems."""
from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Mapping

import yaml

from .constraints import Limits
from .fuzzy import FuzzyConfig
from .loading import LoadSettings
from .model import ConfigError, ConnectionModel, build_frame, with_beam_connections
from .optimizer import E_STEEL, GAConfig, Problem
from .sections import STEEL_UNIT_WEIGHT, SectionCatalog


def load_document(path: str | Path) -> dict:
    """Parse a JSON (or .yaml/.yml) document; syntax errors carry line:column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{mark.line + 1}:{mark.column + 1}: " if mark else ""
            raise ConfigError(f"{path}:{where}{getattr(exc, 'problem', exc)}") from None
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _merge(base: dict, over: Mapping[str, Any]) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_document(doc: Mapping[str, Any]) -> dict:
    """Expand ``{"benchmark": name, ...}`` into the shipped benchmark document plus overrides."""
    if "benchmark" in doc:
        from .bench import benchmark_document
        base = benchmark_document(str(doc["benchmark"]))
        over = {k: v for k, v in doc.items() if k != "benchmark"}
        return _merge(base, over)
    return dict(doc)


def frame_section(doc: Mapping[str, Any]) -> Mapping[str, Any]:
    if "frame" in doc:
        return doc["frame"]
    if "grid" in doc or "nodes" in doc:
        return doc
    raise ConfigError("document has no 'frame' section")


def problem_from_document(doc: Mapping[str, Any], catalog: SectionCatalog | None = None,
                          connection: str | ConnectionModel | None = None) -> Problem:
    doc = resolve_document(doc)
    try:
        frame = build_frame(frame_section(doc), catalog)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"frame: {exc!r}") from None
    conn = connection if connection is not None else doc.get("connection")
    if conn is not None:
        from .bench import connection_model
        frame = with_beam_connections(frame, connection_model(conn))
    try:
        E = float(doc.get("E_pa", E_STEEL))
        unit_weight = float(doc.get("unit_weight_npm3", STEEL_UNIT_WEIGHT))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return Problem(
        frame=frame,
        loads=LoadSettings.from_config(doc.get("loads"), frame.tributary_width),
        limits=Limits.from_config(doc.get("limits")),
        fuzzy=FuzzyConfig.from_config(doc.get("fuzzy")),
        E=E,
        unit_weight=unit_weight,
        name=str(doc.get("name", "problem")),
    )


def ga_from_document(doc: Mapping[str, Any]) -> GAConfig:
    return GAConfig.from_config(resolve_document(doc).get("ga"))
