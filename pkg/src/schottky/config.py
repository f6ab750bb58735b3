"""JSON configuration and report documents.

Complex numbers are ``[re, im]`` arrays everywhere.  Generator and disk
indices in files are 1-based.  Settings that a file omits are filled with
defaults, and the resolved configuration is echoed into every report, so the
echo re-parses to the same :class:`GroupConfig`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .group import Disk, DiskPair, SchottkyGroup, apollonius_disks, disks_from_source
from .moebius import MoebiusError, MoebiusMap, from_fixed_points

CONFIG_SCHEMA = "schottky-config/1"
REPORT_SCHEMA = "schottky-report/1"
DIRECTION_SCHEMA = "schottky-direction/1"
TARGETS_SCHEMA = "schottky-targets/1"


class ConfigError(ValueError):
    """Parse or schema error; ``where`` names the field or line."""

    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


# -- primitive parsers --------------------------------------------------------


def parse_complex(v: Any, where: str) -> complex:
    if (
        isinstance(v, list)
        and len(v) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
    ):
        z = complex(float(v[0]), float(v[1]))
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ConfigError(where, "complex entries must be finite")
        return z
    raise ConfigError(where, f"expected a complex number as [re, im], got {json.dumps(v)}")


def parse_matrix(v: Any, where: str) -> np.ndarray:
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(r, list) and len(r) == 2 for r in v)):
        raise ConfigError(where, "expected a 2x2 matrix [[a, b], [c, d]] of [re, im] pairs")
    return np.array(
        [[parse_complex(v[i][j], f"{where}[{i}][{j}]") for j in range(2)] for i in range(2)]
    )


def _number(v: Any, where: str, positive: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"expected a number, got {json.dumps(v)}")
    if positive and not v > 0:
        raise ConfigError(where, "must be positive")
    return float(v)


def _int(v: Any, where: str, lo: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(where, f"expected an integer, got {json.dumps(v)}")
    if lo is not None and v < lo:
        raise ConfigError(where, f"must be >= {lo}")
    return v


def _get(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    if key not in d:
        raise ConfigError(f"{where}.{key}" if where else key, "missing field")
    return d[key]


def cjson(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def load_json(path: str | Path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None


# -- group configuration ------------------------------------------------------


@dataclass(frozen=True)
class Settings:
    max_word_len: int | None = 8
    tail_tol: float | None = None
    nodes: int = 256
    base_point: complex | None = None

    def to_dict(self) -> dict:
        return {
            "max_word_len": self.max_word_len,
            "tail_tol": self.tail_tol,
            "nodes": self.nodes,
            "base_point": None if self.base_point is None else cjson(self.base_point),
        }


@dataclass(frozen=True)
class GeneratorSpec:
    """Either ``matrix`` or the (attracting, repelling, multiplier) triple."""

    matrix: tuple[complex, complex, complex, complex] | None = None
    attracting: complex | None = None
    repelling: complex | None = None
    multiplier: complex | None = None

    def moebius(self) -> MoebiusMap:
        if self.matrix is not None:
            return MoebiusMap(*self.matrix)
        return from_fixed_points(self.attracting, self.repelling, self.multiplier)

    def to_dict(self) -> dict:
        if self.matrix is not None:
            m = self.matrix
            return {"matrix": [[cjson(m[0]), cjson(m[1])], [cjson(m[2]), cjson(m[3])]]}
        return {
            "attracting": cjson(self.attracting),
            "repelling": cjson(self.repelling),
            "multiplier": cjson(self.multiplier),
        }


@dataclass(frozen=True)
class GroupConfig:
    generators: tuple[GeneratorSpec, ...]
    disks: tuple[DiskPair, ...]
    settings: Settings = field(default_factory=Settings)

    @property
    def genus(self) -> int:
        return len(self.generators)

    def group(self) -> SchottkyGroup:
        return SchottkyGroup(tuple(g.moebius() for g in self.generators), self.disks)

    def with_settings(self, **kw) -> "GroupConfig":
        return replace(self, settings=replace(self.settings, **kw))

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "genus": self.genus,
            "generators": [g.to_dict() for g in self.generators],
            "disks": [
                {
                    "D": {"center": cjson(p.D.center), "radius": p.D.radius},
                    "Dprime": {"center": cjson(p.Dprime.center), "radius": p.Dprime.radius},
                }
                for p in self.disks
            ],
            "settings": self.settings.to_dict(),
        }


def _parse_generator(v: Any, where: str) -> GeneratorSpec:
    if not isinstance(v, dict):
        raise ConfigError(where, "expected an object")
    if "matrix" in v:
        m = parse_matrix(v["matrix"], f"{where}.matrix")
        return GeneratorSpec(matrix=(m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
    return GeneratorSpec(
        attracting=parse_complex(_get(v, "attracting", where), f"{where}.attracting"),
        repelling=parse_complex(_get(v, "repelling", where), f"{where}.repelling"),
        multiplier=parse_complex(_get(v, "multiplier", where), f"{where}.multiplier"),
    )


def _parse_disk(v: Any, where: str) -> Disk:
    c = parse_complex(_get(v, "center", where), f"{where}.center")
    r = _number(_get(v, "radius", where), f"{where}.radius", positive=True)
    return Disk(c, r)


def parse_config(doc: Any) -> GroupConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected an object")
    schema = doc.get("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise ConfigError("schema", f"unsupported schema {schema!r}")
    genus = _int(_get(doc, "genus", ""), "genus", lo=1)
    gens_raw = _get(doc, "generators", "")
    if not isinstance(gens_raw, list):
        raise ConfigError("generators", "expected a list")
    if len(gens_raw) != genus:
        raise ConfigError("generators", f"genus is {genus} but {len(gens_raw)} generators given")
    gens = tuple(_parse_generator(g, f"generators[{i}]") for i, g in enumerate(gens_raw))

    disks_raw = _get(doc, "disks", "")
    if disks_raw == "apollonius":
        if any(g.matrix is not None for g in gens):
            raise ConfigError("disks", "'apollonius' needs fixed-point generators")
        disks = tuple(apollonius_disks(g.attracting, g.repelling, g.multiplier) for g in gens)
    elif isinstance(disks_raw, dict) and "source_radii" in disks_raw:
        radii = disks_raw["source_radii"]
        if not isinstance(radii, list) or len(radii) != genus:
            raise ConfigError("disks.source_radii", f"expected {genus} radii")
        if any(g.matrix is not None for g in gens):
            raise ConfigError("disks", "'source_radii' needs fixed-point generators")
        try:
            disks = tuple(
                disks_from_source(g.moebius(), Disk(g.repelling, _number(r, f"disks.source_radii[{i}]", True)))
                for i, (g, r) in enumerate(zip(gens, radii))
            )
        except MoebiusError as exc:
            raise ConfigError("generators", str(exc)) from None
    elif isinstance(disks_raw, list):
        if len(disks_raw) != genus:
            raise ConfigError("disks", f"genus is {genus} but {len(disks_raw)} disk pairs given")
        disks = tuple(
            DiskPair(_parse_disk(_get(p, "D", f"disks[{i}]"), f"disks[{i}].D"),
                     _parse_disk(_get(p, "Dprime", f"disks[{i}]"), f"disks[{i}].Dprime"))
            for i, p in enumerate(disks_raw)
        )
    else:
        raise ConfigError("disks", "expected a list of disk pairs, 'apollonius' or {source_radii: [...]}")

    s = doc.get("settings", {}) or {}
    if not isinstance(s, dict):
        raise ConfigError("settings", "expected an object")
    d = Settings()
    mwl = s.get("max_word_len", d.max_word_len)
    tail = s.get("tail_tol", d.tail_tol)
    settings = Settings(
        max_word_len=None if mwl is None else _int(mwl, "settings.max_word_len", lo=0),
        tail_tol=None if tail is None else _number(tail, "settings.tail_tol", positive=True),
        nodes=_int(s.get("nodes", d.nodes), "settings.nodes", lo=4),
        base_point=None if s.get("base_point") is None
        else parse_complex(s["base_point"], "settings.base_point"),
    )
    if settings.max_word_len is None and settings.tail_tol is None:
        raise ConfigError("settings", "one of max_word_len or tail_tol is required")
    # constructing the generators surfaces singular matrices as config errors
    try:
        for g in gens:
            g.moebius()
    except MoebiusError as exc:
        raise ConfigError("generators", str(exc)) from None
    return GroupConfig(gens, disks, settings)


def load_config(path: str | Path) -> GroupConfig:
    return parse_config(load_json(path))


def config_for_group(group: SchottkyGroup, settings: Settings = Settings()) -> GroupConfig:
    gens = tuple(GeneratorSpec(matrix=(g.c11, g.c12, g.c21, g.c22)) for g in group.generators)
    return GroupConfig(gens, group.disks, settings)


# -- report output ------------------------------------------------------------


def to_jsonable(obj: Any) -> Any:
    """Complex -> [re, im]; numpy -> lists; non-finite floats -> strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isfinite(f):
            return f
        return "nan" if math.isnan(f) else ("inf" if f > 0 else "-inf")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2) + "\n"
