"""Config readers and deterministic report emitters.

Definition files are TOML: a metric file carries `dim` and `F2` (a DSL
string), a vector-field file `dim` and `v1..vn`, a diffeo file `dim`,
`phi1..phin` and optionally `inv1..invn`, and a soliton case file ties a
metric, an optional field, `lambda`, and a sample-grid spec together
(paths inside a case are resolved relative to the case file).

Emitters write JSON and CSV with floats at 17 significant digits and a
fixed field order, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import os

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ConfigError
from .geometry import FinslerStructure
from .lifts import SymbolicDiffeo, VectorField


def load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"malformed TOML in {path}: {e}")


def _require(data, key, path):
    if key not in data:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return data[key]


def read_metric(path):
    data = load_toml(path)
    dim = int(_require(data, "dim", path))
    f2 = _require(data, "F2", path)
    name = data.get("name", os.path.splitext(os.path.basename(path))[0])
    return FinslerStructure(dim, f2, name=name)


def _components(data, prefix, dim, path, required=True):
    comps = []
    for i in range(1, dim + 1):
        key = f"{prefix}{i}"
        if key not in data:
            if required:
                raise ConfigError(f"{path}: missing component '{key}'")
            if comps:
                raise ConfigError(f"{path}: partial component list '{prefix}*'")
            return None
        comps.append(data[key])
    return comps


def read_field(path):
    data = load_toml(path)
    dim = int(_require(data, "dim", path))
    comps = _components(data, "v", dim, path)
    name = data.get("name", os.path.splitext(os.path.basename(path))[0])
    return VectorField(dim, comps, name=name)


def read_diffeo(path):
    data = load_toml(path)
    dim = int(_require(data, "dim", path))
    comps = _components(data, "phi", dim, path)
    inv = _components(data, "inv", dim, path, required=False)
    name = data.get("name", os.path.splitext(os.path.basename(path))[0])
    return SymbolicDiffeo(dim, comps, inverse=inv, name=name)


def read_case(path):
    """Soliton case: metric + optional field + lambda + grid spec."""
    data = load_toml(path)
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    F = read_metric(resolve(_require(data, "metric", path)))
    V = read_field(resolve(data["field"])) if "field" in data else None
    lam = float(_require(data, "lambda", path))
    return {"metric": F, "field": V, "lambda": lam,
            "grid": data.get("grid", {})}


def grid_from_spec(spec, structure=None, params=None):
    """Samples from a grid spec dict (or the string "default")."""
    from .sampling import grid_samples

    if spec in (None, "default", ""):
        spec = {}
    if isinstance(spec, str):
        parts = {}
        for item in spec.split(","):
            if not item:
                continue
            if "=" not in item:
                raise ConfigError(f"bad grid entry '{item}' (want key=value)")
            k, v = item.split("=", 1)
            parts[k.strip()] = v.strip()
        spec = parts
    try:
        dim = int(spec.get("dim", structure.dim if structure else 2))
        box = float(spec.get("box", 1.0))
        points = int(spec.get("points", 3))
        dirs = int(spec.get("dirs", 8))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad grid value: {e}") from None
    if points < 1 or dirs < 1:
        raise ConfigError("grid resolutions must be at least 1")
    unknown = set(spec) - {"dim", "box", "points", "dirs"}
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    return grid_samples(dim, box=box, points_per_axis=points,
                        directions=dirs, structure=structure, params=params)


# -- emitters ---------------------------------------------------------------

_MARK = "\x00"


def fmt_float(x):
    return f"{float(x):.17g}"


def _walk(obj):
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if not math.isfinite(f):
            return repr(f)  # nan/inf are not JSON numbers; keep as strings
        return _MARK + fmt_float(f) + _MARK
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _walk(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _walk(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_walk(v) for v in obj]
    return obj


def json_text(obj):
    text = json.dumps(_walk(obj), indent=2, ensure_ascii=True)
    return text.replace('"\\u0000', "").replace('\\u0000"', "") + "\n"


def emit_json(obj, path):
    with open(path, "w") as fh:
        fh.write(json_text(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def csv_text(columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_csv(columns, rows, path):
    with open(path, "w") as fh:
        fh.write(csv_text(columns, rows))


def emit_table(obj, columns, rows, path, fmt):
    """One report in either format; JSON embeds the table plus extras."""
    if fmt == "json":
        emit_json(obj, path)
    elif fmt == "csv":
        emit_csv(columns, rows, path)
    else:
        raise ConfigError(f"unknown output format '{fmt}'")
