"""Self-describing data files: CSV/JSON payloads behind a metadata header."""
from __future__ import annotations

import dataclasses
import json
import math
import re
from pathlib import Path

import numpy as np

from becmirror.errors import ConfigError
from becmirror.model import PhysicalParams

PARAM_FIELDS = [f.name for f in dataclasses.fields(PhysicalParams)]

_PRODUCT = re.compile(r"^[\s\d.eE+\-*/pi]+$")


def fmt(x) -> str:
    """Shortest round-trip representation."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def parse_number(text: str, *, line: int | None = None, key: str | None = None) -> float:
    """Float literal, or a product/quotient of literals and ``pi`` such as ``2*pi*19e3``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    if not text or not _PRODUCT.match(text):
        raise ConfigError(f"not a number: {text!r}", line, key)
    tokens = re.split(r"\s*([*/])\s*", text)
    value = None
    op = "*"
    for tok in tokens:
        if tok in ("*", "/"):
            op = tok
            continue
        if tok == "pi":
            v = math.pi
        else:
            try:
                v = float(tok)
            except ValueError:
                raise ConfigError(f"not a number: {text!r}", line, key) from None
        value = v if value is None else (value * v if op == "*" else value / v)
    return value


def read_key_values(path) -> list[tuple[int, str, str]]:
    """Lines of ``key = value`` with ``#`` comments; returns (line, key, value) triples."""
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key = value, got {line!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ConfigError("empty key", lineno)
            out.append((lineno, key, value))
    return out


def read_params(path, base: PhysicalParams | None = None) -> PhysicalParams:
    """Parameter file of SI values keyed by the :class:`PhysicalParams` field names."""
    values = {}
    for lineno, key, value in read_key_values(path):
        if key not in PARAM_FIELDS:
            raise ConfigError(f"unknown parameter {key!r}", lineno, key)
        values[key] = parse_number(value, line=lineno, key=key)
    if base is not None:
        return dataclasses.replace(base, **values)
    missing = [f.name for f in dataclasses.fields(PhysicalParams)
               if f.default is dataclasses.MISSING and f.name not in values]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)}")
    return PhysicalParams(**values)


def write_params(path, params: PhysicalParams) -> None:
    with open(path, "w") as fh:
        for name in PARAM_FIELDS:
            fh.write(f"{name} = {fmt(getattr(params, name))}\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex) or isinstance(value, np.complexfloating):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return _jsonable(dataclasses.asdict(value))
    return value


def header_lines(metadata: dict) -> list[str]:
    lines = []
    for key in sorted(metadata):
        lines.append(f"# {key} = {json.dumps(_jsonable(metadata[key]), sort_keys=True)}")
    return lines


def write_csv(path, columns: list[str], data, metadata: dict) -> Path:
    """Write ``data`` (2-D array or iterable of rows) under a ``# key = json`` header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for line in header_lines(metadata):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in data:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: returns (metadata, columns, float array)."""
    metadata = {}
    rows = []
    columns = None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, value = line[2:].split(" = ", 1)
                metadata[key] = json.loads(value)
            elif columns is None:
                columns = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(columns or []))
    return metadata, columns, data


def payload(path) -> str:
    """File content below the metadata header."""
    with open(path) as fh:
        return "".join(line for line in fh if not line.startswith("# "))


def write_json(path, content: dict, metadata: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"metadata": _jsonable(metadata), "data": _jsonable(content)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
