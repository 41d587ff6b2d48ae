"""JSON ingestion and deterministic CSV / JSON emission."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from . import dmc_analysis as dmc
from . import markov_info as mi
from .errors import ConfigError, ToolkitError
from .rate_calculator import ChannelSummary, RateProblem, SourceSummary

SIG_DIGITS = 12


def load_json(path) -> Any:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file {p} does not exist")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p} is not valid JSON: {exc}") from exc


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ConfigError(f"{where}: missing field {key!r}")
    return doc[key]


def parse_chain(doc: dict) -> mi.TransitionMatrix:
    """``{"alphabet_x": n, "alphabet_z": m, "matrix": [[W(dest|src)]]}``; ``alphabet_z`` defaults to 1."""
    matrix = _require(doc, "matrix", "chain")
    nz = int(doc.get("alphabet_z", 1))
    nx = int(doc.get("alphabet_x", len(matrix) // max(nz, 1)))
    try:
        arr = np.asarray(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"chain matrix is not numeric: {exc}") from exc
    return mi.validate_chain(arr, states_x=nx, states_z=nz)


def parse_channel(doc: dict) -> dmc.DmcChannel:
    """``{"matrix": [[W(y|x)]]}`` with one row per input."""
    matrix = _require(doc, "matrix", "channel")
    try:
        return dmc.DmcChannel(np.asarray(matrix, dtype=float))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ToolkitError):
            raise
        raise ConfigError(f"channel matrix is not numeric: {exc}") from exc


def parse_source(doc: dict) -> SourceSummary:
    if "chain" in doc:
        return SourceSummary.from_chain(parse_chain(doc["chain"]))
    if "matrix" in doc:
        return SourceSummary.from_chain(parse_chain(doc))
    return SourceSummary(H=float(_require(doc, "H", "source")), V=float(_require(doc, "V", "source")))


def parse_channel_summary(doc: dict) -> ChannelSummary:
    kind = _require(doc, "kind", "channel")
    if kind == "dmc":
        if "matrix" in doc:
            return ChannelSummary.from_dmc(parse_channel(doc))
        return ChannelSummary(
            "dmc",
            C=float(_require(doc, "C", "channel")),
            v_plus=float(_require(doc, "v_plus", "channel")),
            v_minus=float(_require(doc, "v_minus", "channel")),
        )
    if kind == "conditional_additive":
        if "noise" in doc:
            return ChannelSummary.from_conditional_additive(parse_chain(doc["noise"]))
        return ChannelSummary(
            "conditional_additive",
            C=float(_require(doc, "C", "channel")),
            V_c=float(_require(doc, "V_c", "channel")),
        )
    raise ConfigError(f"unknown channel kind {kind!r}")


def parse_problem(doc: dict) -> RateProblem:
    """``{"source": {...}, "channel": {"kind": ..., ...}}``; see the README for the accepted forms."""
    return RateProblem(
        parse_source(_require(doc, "source", "problem")),
        parse_channel_summary(_require(doc, "channel", "problem")),
    )


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:step`` with ``stop`` included when it lies on the grid."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"grid must be start:stop:step, got {spec!r}") from exc
    if not step > 0 or stop < start:
        raise ConfigError(f"grid needs step > 0 and stop >= start, got {spec!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # round away accumulated float noise so printed grid points are clean
    return np.round(start + step * np.arange(count), 12)


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0:
            return "0"
        return f"{v:.{SIG_DIGITS}g}"
    return str(value)


def header_lines(config: dict, seed: int | None) -> list[str]:
    return [
        f"# jscc_dispersion {__version__}",
        f"# config: {json.dumps(config, sort_keys=True, default=str)}",
        f"# seed: {'none' if seed is None else seed}",
    ]


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], config: dict, seed: int | None = None) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = header_lines(config, seed)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        lines.append(",".join(fmt(v) for v in row))
    p.write_text("\n".join(lines) + "\n")
    return p


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a CSV written by :func:`write_csv`; returns column names and a float array."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return cols, data


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return float(f"{v:.{SIG_DIGITS}g}")
    return obj


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def write_json(path, obj) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dump_json(obj) + "\n")
    return p
