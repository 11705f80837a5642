"""Run configuration files.

Configs are TOML with an explicit schema version::

    version = 1

    [system]
    kind = "glued"            # constant | glued | desk-variant | final-family
    components = ["a_0 -> a_0.b_0.b_0.a_0; b_0 -> b_0.a_0.a_0.b_0",
                  "a_1 -> a_1.b_1.b_1.b_1; b_1 -> b_1.a_1.a_1.a_1"]
    multipliers = [1, 1]

    [run]
    levels = [0, 1, 2]
    tolerance = 1e-6

Unknown keys are errors, reported with the line and column of the key.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .morphisms import Morphism, MorphismError, parse_morphism, zeta
from .sadic import (
    SequenceError,
    constant_sequence,
    desk_variant,
    final_family,
    glued_powers,
)
from .words import AlphabetError, pair_alphabet

SCHEMA_VERSION = 1
KINDS = ("constant", "glued", "desk-variant", "final-family")
SYSTEM_KEYS = {"kind", "zeta", "morphism", "components", "multipliers", "strict", "L", "d"}
RUN_KEYS = {"k", "k_max", "levels", "depth", "tolerance", "cap", "component", "level",
            "format", "output", "bit_budget"}
FORMATS = ("table", "json", "csv")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 path: str | None = None):
        self.line, self.column, self.path = line, column, path
        where = ""
        if line is not None:
            where = f"{path or '<config>'}:{line}:{column or 1}: "
        elif path:
            where = f"{path}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    zeta: int | None = None
    morphism: str | None = None
    components: tuple[str, ...] = ()
    multipliers: tuple[int, ...] | None = None
    strict: bool = True
    L: int = 6
    d: int = 2


@dataclass(frozen=True)
class RunConfig:
    system: SystemSpec
    k: int | None = None
    k_max: int | None = None
    levels: tuple[int, ...] | None = None
    depth: int | None = None
    tolerance: float = 1e-6
    cap: int = 24
    component: int | None = None
    level: int = 0
    format: str = "table"
    output: str | None = None
    bit_budget: int = 2**16
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        for name in ("k", "k_max"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive")
        if self.depth is not None and self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.cap < 1:
            raise ConfigError("cap must be at least 1")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")


def _locate(text: str, key: str, table: str | None) -> tuple[int | None, int | None]:
    section = None
    pat = re.compile(rf"^(\s*)({re.escape(key)}|\"{re.escape(key)}\")\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[([^\]]+)\]", line)
        if head:
            section = head.group(1).strip()
            continue
        m = pat.match(line)
        if m and section == table:
            return n, len(m.group(1)) + 1
    for n, line in enumerate(text.splitlines(), 1):
        col = line.find(key)
        if col >= 0:
            return n, col + 1
    return None, None


def _error(text: str, path, message: str, key: str, table: str | None) -> ConfigError:
    line, col = _locate(text, key, table)
    return ConfigError(message, line, col, path)


def _decode_error(exc: Exception, path) -> ConfigError:
    msg = str(exc)
    m = re.search(r"\(at line (\d+), column (\d+)\)", msg)
    if m:
        return ConfigError(msg[: m.start()].strip(), int(m.group(1)), int(m.group(2)), path)
    return ConfigError(msg, path=path)


def _tuple(t):
    return t if isinstance(t, tuple) else (t,)


def parse_config(text: str, path: str | None = None) -> RunConfig:
    if not text.strip():
        raise ConfigError("empty config", path=path)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise _decode_error(exc, path) from None
    for key in raw:
        if key not in ("version", "system", "run"):
            raise _error(text, path, f"unknown key {key!r}", key, None)
    if "version" not in raw:
        raise ConfigError("missing 'version'", path=path)
    if raw["version"] != SCHEMA_VERSION:
        raise _error(text, path, f"unsupported version {raw['version']!r}; expected {SCHEMA_VERSION}",
                     "version", None)
    sys_raw = raw.get("system")
    if not isinstance(sys_raw, dict):
        raise ConfigError("missing [system] table", path=path)
    run_raw = raw.get("run", {})
    if not isinstance(run_raw, dict):
        raise _error(text, path, "'run' must be a table", "run", None)
    for key in sys_raw:
        if key not in SYSTEM_KEYS:
            raise _error(text, path, f"unknown key {key!r} in [system]", key, "system")
    for key in run_raw:
        if key not in RUN_KEYS:
            raise _error(text, path, f"unknown key {key!r} in [run]", key, "run")

    kind = sys_raw.get("kind")
    if kind not in KINDS:
        raise _error(text, path, f"system.kind must be one of {', '.join(KINDS)}", "kind", "system")
    spec = SystemSpec(
        kind=kind,
        zeta=_opt(text, path, "system", sys_raw, "zeta", int, "an integer"),
        morphism=_opt(text, path, "system", sys_raw, "morphism", str, "a string"),
        components=tuple(_list(text, path, "system", sys_raw, "components", str, "a list of strings") or ()),
        multipliers=_tuple_or_none(_list(text, path, "system", sys_raw, "multipliers", int, "a list of integers")),
        strict=_opt(text, path, "system", sys_raw, "strict", bool, "a boolean", True),
        L=_opt(text, path, "system", sys_raw, "L", int, "an integer", 6),
        d=_opt(text, path, "system", sys_raw, "d", int, "an integer", 2),
    )
    levels = _list(text, path, "run", run_raw, "levels", int, "a list of integers")
    try:
        return RunConfig(
            system=spec,
            k=_opt(text, path, "run", run_raw, "k", int, "an integer"),
            k_max=_opt(text, path, "run", run_raw, "k_max", int, "an integer"),
            levels=tuple(levels) if levels is not None else None,
            depth=_opt(text, path, "run", run_raw, "depth", int, "an integer"),
            tolerance=float(_opt(text, path, "run", run_raw, "tolerance", (int, float), "a number", 1e-6)),
            cap=_opt(text, path, "run", run_raw, "cap", int, "an integer", 24),
            component=_opt(text, path, "run", run_raw, "component", int, "an integer"),
            level=_opt(text, path, "run", run_raw, "level", int, "an integer", 0),
            format=_opt(text, path, "run", run_raw, "format", str, "a string", "table"),
            output=_opt(text, path, "run", run_raw, "output", str, "a string"),
            bit_budget=_opt(text, path, "run", run_raw, "bit_budget", int, "an integer", 2**16),
        )
    except ConfigError as exc:
        key = str(exc).split()[0]
        raise _error(text, path, str(exc), key, "run") from None


def _opt(text, path, table, raw, key, types, what, default=None):
    if key not in raw:
        return default
    v = raw[key]
    if isinstance(v, bool) and bool not in _tuple(types):
        raise _error(text, path, f"{table}.{key} must be {what}", key, table)
    if not isinstance(v, types):
        raise _error(text, path, f"{table}.{key} must be {what}", key, table)
    return v


def _list(text, path, table, raw, key, item, what):
    if key not in raw:
        return None
    v = raw[key]
    if not isinstance(v, list) or not all(isinstance(x, item) and not isinstance(x, bool) for x in v):
        raise _error(text, path, f"{table}.{key} must be {what}", key, table)
    return v


def _tuple_or_none(v):
    return None if v is None else tuple(v)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=str(p)) from None
    return parse_config(text, str(p))


def build_system(spec: SystemSpec):
    """The directive sequence described by ``spec``."""
    try:
        if spec.kind == "constant":
            if (spec.zeta is None) == (spec.morphism is None):
                raise ConfigError("a constant system needs exactly one of 'zeta' or 'morphism'")
            sigma = zeta(spec.zeta) if spec.zeta is not None else parse_morphism(spec.morphism)
            return constant_sequence(sigma)
        if spec.kind == "glued":
            if not spec.components:
                raise ConfigError("a glued system needs 'components'")
            taus = [_component(text, i) for i, text in enumerate(spec.components)]
            return glued_powers(taus, spec.multipliers, strict=spec.strict, name="glued")
        if spec.kind == "desk-variant":
            return desk_variant(spec.L, spec.d)
        return final_family(spec.L, spec.d)
    except (MorphismError, SequenceError, AlphabetError) as exc:
        raise ConfigError(str(exc)) from None


def _component(text: str, i: int) -> Morphism:
    try:
        return parse_morphism(text, pair_alphabet(i))
    except (MorphismError, AlphabetError):
        tau = parse_morphism(text)
        if tau.source.symbols != ("a", "b"):
            raise
        return tau
