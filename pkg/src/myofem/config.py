"""Human-readable run configuration: parsing, overrides, and echoing.

A run document is INI-structured text with four sections:

    [run]        study, output-dir, threads, deterministic, snapshots
    [study]      any keys of the chosen study's configuration (dotted
                 paths address nested tables, e.g. ``td.alpha``)
    [materials]  optional ``file`` plus ``tissue.parameter`` overrides
    [solver]     iteration limits and tolerances

Values are SI by default; a numeric value may carry an explicit unit
suffix (``52.0008 mm``, ``0.25 s``, ``30 MPa``) converted at parse time.
Unknown sections, keys, and units are rejected with their location. The
resolved echo of a parsed configuration is itself a valid document that
reproduces the run.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .constitutive import (TissueParams, default_materials,
                           load_material_file, with_overrides)
from .errors import ConfigError
from .scenarios import (CP_DEFAULTS, CYCLIC_DEFAULTS, DYNAMIC_PULL_DEFAULTS,
                        GASTROC_ACTIVATE_DEFAULTS, ISOKINETIC_DEFAULTS,
                        STUDIES)
from .solver import NewtonConfig

STUDY_DEFAULTS = {
    "dynamic-pull": DYNAMIC_PULL_DEFAULTS,
    "quasi-vs-dynamic": DYNAMIC_PULL_DEFAULTS,
    "isokinetic": ISOKINETIC_DEFAULTS,
    "cp-force-length": CP_DEFAULTS,
    "cyclic": CYCLIC_DEFAULTS,
    "gastroc-activate": GASTROC_ACTIVATE_DEFAULTS,
}

PRESETS = tuple(sorted(STUDY_DEFAULTS))

_UNITS = {
    "m": 1.0, "mm": 1e-3, "cm": 1e-2, "um": 1e-6,
    "s": 1.0, "ms": 1e-3,
    "Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9,
    "kg/m3": 1.0, "1/s": 1.0, "Hz": 1.0,
}

_RUN_KEYS = ("study", "output-dir", "threads", "deterministic", "snapshots")
_SECTIONS = ("run", "study", "materials", "solver")

_TRUE = ("true", "yes", "on", "1")
_FALSE = ("false", "no", "off", "0")


@dataclass
class RunConfig:
    """A fully validated run request."""

    study: str
    study_config: dict
    newton: NewtonConfig | None = None
    output_dir: str = "out"
    threads: int = 0
    deterministic: bool = False
    snapshots: bool = True
    materials_spec: dict = field(default_factory=dict)
    solver_spec: dict = field(default_factory=dict)


def _quantity(raw: str, where: str) -> float:
    parts = raw.split()
    try:
        if len(parts) == 1:
            return float(parts[0])
        if len(parts) == 2:
            if parts[1] not in _UNITS:
                raise ConfigError(f"unknown unit {parts[1]!r} at {where}")
            return float(parts[0]) * _UNITS[parts[1]]
    except ValueError:
        pass
    raise ConfigError(f"malformed number {raw!r} at {where}")


def _bool(raw: str, where: str) -> bool:
    low = raw.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"expected true/false, got {raw!r} at {where}")


def _typed(default, raw: str, where: str):
    """Convert a raw string to the type of the default it replaces."""
    raw = raw.strip()
    if isinstance(default, bool):
        return _bool(raw, where)
    if isinstance(default, int) and not isinstance(default, bool):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r} at {where}")
    if isinstance(default, float):
        return _quantity(raw, where)
    if isinstance(default, tuple):
        items = [t for t in raw.split(",") if t.strip()]
        if not items:
            raise ConfigError(f"empty list at {where}")
        as_int = all(isinstance(v, int) for v in default) and default
        if as_int:
            try:
                return tuple(int(t) for t in items)
            except ValueError:
                raise ConfigError(f"expected integers at {where}")
        return tuple(_quantity(t.strip(), where) for t in items)
    if isinstance(default, str):
        return raw
    raise ConfigError(f"key at {where} cannot be set from text")


def _read_sections(text: str, origin: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error in {origin}: {exc}") from exc
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{section}] in {origin}; expected one of "
                + ", ".join(f"[{s}]" for s in _SECTIONS))
        out[section] = dict(parser.items(section))
    return out


def apply_overrides(sections: dict[str, dict[str, str]],
                    sets: list[str] | tuple[str, ...]) -> None:
    """Apply ``section.key=value`` entries (as from repeated --set flags)."""
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form "
                              "section.key=value")
        path, value = item.split("=", 1)
        if "." not in path:
            raise ConfigError(f"override key {path!r} needs a section prefix "
                              "(run./study./materials./solver.)")
        section, key = path.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"override {item!r} addresses unknown section "
                              f"[{section}]")
        sections.setdefault(section, {})[key.strip()] = value.strip()


def _build_materials(spec: dict[str, str], origin: str) -> dict:
    mats = (load_material_file(spec["file"]) if "file" in spec
            else default_materials())
    for key, raw in spec.items():
        if key == "file":
            continue
        where = f"{origin} [materials] {key}"
        if "." not in key:
            raise ConfigError(f"material override at {where} must be "
                              "tissue.parameter")
        tissue, param = key.split(".", 1)
        if tissue not in mats:
            raise ConfigError(f"unknown tissue {tissue!r} at {where}; have "
                              + ", ".join(sorted(mats)))
        if param not in {f.name for f in fields(TissueParams)}:
            raise ConfigError(f"unknown material parameter {param!r} at {where}")
        current = getattr(mats[tissue], param)
        if current is None:
            value = (tuple(_quantity(t.strip(), where)
                           for t in raw.split(",") if t.strip())
                     if "," in raw else _quantity(raw, where))
        else:
            value = _typed(current, raw, where)
        mats[tissue] = with_overrides(mats[tissue], **{param: value})
    return mats


def _build_newton(spec: dict[str, str], origin: str) -> NewtonConfig:
    base = NewtonConfig()
    kw = {}
    names = {f.name for f in fields(NewtonConfig)}
    for key, raw in spec.items():
        if key not in names:
            raise ConfigError(f"unknown solver key {key!r} in {origin} "
                              "[solver]; expected one of "
                              + ", ".join(sorted(names)))
        kw[key] = _typed(getattr(base, key), raw, f"{origin} [solver] {key}")
    try:
        return replace(base, **kw).validate()
    except ValueError as exc:
        raise ConfigError(f"invalid solver configuration in {origin}: {exc}")


def _build_study_config(study: str, spec: dict[str, str], origin: str) -> dict:
    defaults = STUDY_DEFAULTS[study]
    out: dict = {}
    for key, raw in spec.items():
        where = f"{origin} [study] {key}"
        root, _, leaf = key.partition(".")
        if root not in defaults:
            raise ConfigError(f"unknown key {root!r} for study {study!r} "
                              f"at {where}")
        if root in ("materials", "newton"):
            raise ConfigError(f"{root!r} is configured through its own "
                              f"section, not [study] (at {where})")
        default = defaults[root]
        if isinstance(default, dict):
            if not leaf:
                raise ConfigError(f"{root!r} is a table; set {root}.<field> "
                                  f"at {where}")
            if leaf not in default:
                raise ConfigError(f"unknown field {leaf!r} of {root!r} "
                                  f"at {where}")
            table = out.setdefault(root, dict(default))
            table[leaf] = _typed(default[leaf], raw, where)
        else:
            if leaf:
                raise ConfigError(f"{root!r} is not a table at {where}")
            out[root] = _typed(default, raw, where)
    return out


def parse_config_text(text: str, origin: str = "<config>",
                      sets: list[str] | tuple[str, ...] = ()) -> RunConfig:
    """Parse a run document (with optional --set overrides) and validate."""
    sections = _read_sections(text, origin)
    apply_overrides(sections, sets)
    run_spec = sections.get("run", {})
    for key in run_spec:
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown key {key!r} in {origin} [run]; "
                              "expected one of " + ", ".join(_RUN_KEYS))
    if "study" not in run_spec:
        raise ConfigError(f"{origin} [run] must name a study; available: "
                          + ", ".join(PRESETS))
    study = run_spec["study"].strip()
    if study not in STUDIES:
        raise ConfigError(f"unknown study {study!r} in {origin} [run]; "
                          "available: " + ", ".join(PRESETS))
    cfg = RunConfig(
        study=study,
        study_config=_build_study_config(study, sections.get("study", {}),
                                         origin),
        output_dir=run_spec.get("output-dir", "out").strip(),
        threads=_typed(0, run_spec.get("threads", "0"),
                       f"{origin} [run] threads"),
        deterministic=_bool(run_spec.get("deterministic", "false"),
                            f"{origin} [run] deterministic"),
        snapshots=_bool(run_spec.get("snapshots", "true"),
                        f"{origin} [run] snapshots"),
        materials_spec=dict(sections.get("materials", {})),
        solver_spec=dict(sections.get("solver", {})),
    )
    if cfg.materials_spec:
        cfg.study_config["materials"] = _build_materials(cfg.materials_spec,
                                                         origin)
    if cfg.solver_spec:
        cfg.newton = _build_newton(cfg.solver_spec, origin)
        cfg.study_config["newton"] = cfg.newton
    if cfg.deterministic:
        cfg.threads = 1
    return cfg


def load_config(path, sets: list[str] | tuple[str, ...] = ()) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, origin=str(path), sets=sets)


def preset_text(study: str) -> str:
    """The minimal document running one named study at its defaults."""
    if study not in STUDY_DEFAULTS:
        raise ConfigError(f"unknown preset {study!r}; available: "
                          + ", ".join(PRESETS))
    return f"[run]\nstudy = {study}\n"


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolved_text(cfg: RunConfig) -> str:
    """Echo the fully resolved configuration; re-parsing reproduces it."""
    out = io.StringIO()
    out.write("[run]\n")
    out.write(f"study = {cfg.study}\n")
    out.write(f"output-dir = {cfg.output_dir}\n")
    out.write(f"threads = {cfg.threads}\n")
    out.write(f"deterministic = {_format_value(cfg.deterministic)}\n")
    out.write(f"snapshots = {_format_value(cfg.snapshots)}\n")

    defaults = STUDY_DEFAULTS[cfg.study]
    out.write("\n[study]\n")
    for key in defaults:
        if key in ("materials", "newton"):
            continue
        value = cfg.study_config.get(key, defaults[key])
        if isinstance(defaults[key], dict):
            for leaf in defaults[key]:
                leaf_v = (value or {}).get(leaf, defaults[key][leaf])
                out.write(f"{key}.{leaf} = {_format_value(leaf_v)}\n")
        else:
            out.write(f"{key} = {_format_value(value)}\n")

    if cfg.materials_spec:
        out.write("\n[materials]\n")
        for key, raw in cfg.materials_spec.items():
            out.write(f"{key} = {raw}\n")
    if cfg.newton is not None:
        out.write("\n[solver]\n")
        for f in fields(NewtonConfig):
            out.write(f"{f.name} = {_format_value(getattr(cfg.newton, f.name))}\n")
    return out.getvalue()
