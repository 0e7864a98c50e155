"""JSON files for radial densities and CLT experiment configs.

Density file::

    {
      "dimension": 10,
      "kind": "segments",
      "data": {"segments": [["0.0", "1.0", "0.4633..."], ["1.5707...", "2.4350...", "0.0644..."]]},
      "normalized": true
    }

``kind`` is ``segments``, ``uniform``, ``bump`` or ``truncated_exponential``;
``data`` holds the parameters.  Numbers are written as ``repr`` strings so a
file parses back to the identical density; plain JSON numbers are accepted on
input too.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any

from .radial import RadialDensity, mass, normalize

DENSITY_KEYS = {"dimension", "kind", "data", "normalized"}
FAMILY_PARAMS = {
    "uniform": {"value"},
    "bump": {"delta", "value"},
    "truncated_exponential": {"kappa", "phi_max", "scale"},
}
CONFIG_KEYS = {
    "density",
    "density_file",
    "d",
    "sample_sizes",
    "replicates",
    "seed",
    "regime",
    "init_policy",
    "pole",
    "step_rule",
    "tol",
    "max_iter",
}
NORMALIZATION_TOL = 1e-10


class ConfigError(ValueError):
    """Malformed input file; the message names the file, line and field."""

    def __init__(self, message: str, path=None, line=None, field=None):
        self.path, self.line, self.field = path, line, field
        where = str(path) if path is not None else "<input>"
        if line is not None:
            where += f":{line}"
        if field is not None:
            where += f": field '{field}'"
        super().__init__(f"{where}: {message}")


def _num(x: float) -> str:
    return repr(float(x))


def _line_of(text: str | None, field: str | None):
    if not text or not field:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(field), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _load_json(path=None, text=None):
    if text is None:
        text = Path(path).read_text()
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path, e.lineno) from None


def _float(value, field, ctx):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ctx(f"expected a number, got {value!r}", field) from None
    if not math.isfinite(out):
        raise ctx(f"expected a finite number, got {value!r}", field)
    return out


# --------------------------------------------------------------------------
# densities


def density_to_dict(f: RadialDensity) -> dict:
    if f.kind == "segments":
        data = {"segments": [[_num(a), _num(b), _num(v)] for a, b, v in f.params["segments"]]}
    else:
        data = {k: _num(v) for k, v in sorted(f.params.items())}
    return {"dimension": f.dimension, "kind": f.kind, "data": data, "normalized": bool(f.normalized)}


def density_from_dict(obj: Any, path=None, text=None) -> RadialDensity:
    def ctx(msg, field=None):
        return ConfigError(msg, path, _line_of(text, field), field)

    if not isinstance(obj, dict):
        raise ctx("density must be a JSON object")
    unknown = set(obj) - DENSITY_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ctx(f"unknown key (allowed: {', '.join(sorted(DENSITY_KEYS))})", key)
    for key in ("kind", "data"):
        if key not in obj:
            raise ctx("missing required key", key)
    kind = obj["kind"]
    data = obj["data"]
    if not isinstance(data, dict):
        raise ctx("expected an object", "data")
    dim = obj.get("dimension")
    if dim is not None and (not isinstance(dim, int) or isinstance(dim, bool) or dim < 2):
        raise ctx("dimension must be an integer >= 2", "dimension")
    normalized = obj.get("normalized", False)
    if not isinstance(normalized, bool):
        raise ctx("expected true or false", "normalized")
    if normalized and dim is None:
        raise ctx("a normalized density must state its dimension", "normalized")

    if kind == "segments":
        if set(data) != {"segments"}:
            raise ctx("segments data must have exactly the key 'segments'", "data")
        rows = data["segments"]
        if not isinstance(rows, list) or not rows:
            raise ctx("expected a non-empty list of [start, end, value]", "segments")
        segs = []
        for row in rows:
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise ctx(f"segment {row!r} is not [start, end, value]", "segments")
            segs.append(tuple(_float(v, "segments", ctx) for v in row))
        params = {"segments": tuple(segs)}
    elif kind in FAMILY_PARAMS:
        want = FAMILY_PARAMS[kind]
        extra = set(data) - want
        if extra:
            raise ctx(f"unknown parameter for {kind} (allowed: {', '.join(sorted(want))})", sorted(extra)[0])
        missing = want - set(data)
        if missing:
            raise ctx(f"missing parameter for {kind}", sorted(missing)[0])
        params = {k: _float(data[k], k, ctx) for k in sorted(want)}
    else:
        raise ctx(f"unknown kind {kind!r}", "kind")

    try:
        f = RadialDensity(kind, params, dimension=dim, normalized=normalized)
    except ValueError as e:
        raise ctx(str(e), "data") from None
    if normalized and abs(mass(f, dim) - 1.0) > NORMALIZATION_TOL:
        raise ctx(f"density is flagged normalized but has mass {mass(f, dim)!r} on S^{dim}", "normalized")
    return f


def write_density(f: RadialDensity, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(density_to_dict(f), indent=2) + "\n")
    return path


def read_density(path) -> RadialDensity:
    obj, text = _load_json(path)
    return density_from_dict(obj, path, text)


def loads_density(text: str) -> RadialDensity:
    obj, text = _load_json(text=text)
    return density_from_dict(obj, None, text)


# --------------------------------------------------------------------------
# CLT configs


def read_clt_config(path):
    """Parse a CLT experiment config into a ``CltConfig``.

    Keys: density (inline object) or density_file (relative to the config),
    d, sample_sizes, replicates, seed, regime, init_policy, pole, step_rule,
    tol, max_iter.  Unknown keys are rejected.
    """
    from .clt import CltConfig, InitPolicy, Regime

    obj, text = _load_json(path)

    def ctx(msg, field=None):
        return ConfigError(msg, path, _line_of(text, field), field)

    if not isinstance(obj, dict):
        raise ctx("config must be a JSON object")
    unknown = set(obj) - CONFIG_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ctx("unknown key", key)
    if ("density" in obj) == ("density_file" in obj):
        raise ctx("give exactly one of 'density' and 'density_file'", "density")
    if "density" in obj:
        f = density_from_dict(obj["density"], path, text)
    else:
        f = read_density(Path(path).parent / obj["density_file"])
    d = obj.get("d", f.dimension)
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise ctx("d must be an integer >= 2", "d")
    if f.dimension is not None and f.dimension != d:
        raise ctx(f"density was normalized for d = {f.dimension}", "d")
    f = normalize(f, d)
    for key in ("sample_sizes", "replicates"):
        if key not in obj:
            raise ctx("missing required key", key)
    sizes = obj["sample_sizes"]
    if not isinstance(sizes, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in sizes):
        raise ctx("expected a list of integers", "sample_sizes")
    kw = {}
    for key, typ in (("replicates", int), ("seed", int), ("max_iter", int)):
        if key in obj:
            if not isinstance(obj[key], typ) or isinstance(obj[key], bool):
                raise ctx(f"expected {typ.__name__}", key)
            kw[key] = obj[key]
    if "tol" in obj:
        kw["tol"] = _float(obj["tol"], "tol", ctx)
    for key, enum_type in (("regime", Regime), ("init_policy", InitPolicy)):
        if key in obj:
            try:
                kw[key] = enum_type(obj[key])
            except ValueError:
                allowed = ", ".join(e.value for e in enum_type)
                raise ctx(f"{obj[key]!r} is not one of {allowed}", key) from None
    if "step_rule" in obj:
        kw["step_rule"] = obj["step_rule"]
    if "pole" in obj:
        pole = obj["pole"]
        if not isinstance(pole, list) or len(pole) != d + 1:
            raise ctx(f"expected a list of {d + 1} numbers", "pole")
        kw["pole"] = [_float(v, "pole", ctx) for v in pole]
    try:
        return CltConfig(density=f, d=d, sample_sizes=sizes, **kw)
    except ValueError as e:
        field = "replicates" if "replicates" in str(e) else "sample_sizes" if "sizes" in str(e) else None
        raise ctx(str(e), field) from None
