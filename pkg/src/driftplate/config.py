"""Experiment configuration: TOML in, validated dataclasses out.

Grammar (every section except ``geometry`` and ``drift`` is optional)::

    name = "beam_nu0"                # defaults to the file stem

    [geometry]
    name = "interval"                # a catalogue entry
    params = { length = 1.0 }

    [drift]
    nu = [0.0]                       # ambient components
    unit = false                     # assert |nu| = 1 (translator checks)

    [domain]
    box = [[0.0, 1.0]]               # sub-box of the chart; default: whole chart

    [mesh]
    elements = [100]                 # per parameter coordinate
    quad_order = 8

    [solve]
    k = 2                            # eigenpairs
    tol = 1e-5                       # relative residual bound

    [checks]
    theorems = ["thm1.1", "cor1.1"]
    general_formula = true
    identity_tol = 1e-9
    translator_gate = 1e-9
    sample_refinement = 2            # constant-sampling lattice = refinement x elements
    identity_samples = 1000

    [output]
    dir = "reports"
    deterministic = false

Unknown keys anywhere are rejected.
"""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .catalogue import CATALOGUE
from .errors import ConfigError

THEOREMS = (
    "thm1.1", "cor1.1", "cor1.2", "cor1.3",
    "thm5.1", "cor5.1", "cor5.2", "cor5.3",
    "cor6.1", "cor6.2", "cor6.3",
)
TRANSLATOR_THEOREMS = ("thm5.1", "cor5.1", "cor5.2", "cor5.3")


@dataclass(frozen=True)
class GeometryConfig:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DriftConfig:
    nu: tuple
    unit: bool = False


@dataclass(frozen=True)
class DomainConfig:
    box: tuple | None = None


@dataclass(frozen=True)
class MeshConfig:
    elements: tuple = (32,)
    quad_order: int = 8


@dataclass(frozen=True)
class SolveConfig:
    k: int = 4
    tol: float = 1e-5


@dataclass(frozen=True)
class ChecksConfig:
    theorems: tuple = ()
    general_formula: bool = False
    identity_tol: float = 1e-9
    translator_gate: float = 1e-9
    sample_refinement: int = 2
    identity_samples: int = 1000


@dataclass(frozen=True)
class OutputConfig:
    dir: str | None = None
    deterministic: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    geometry: GeometryConfig
    drift: DriftConfig
    domain: DomainConfig = DomainConfig()
    mesh: MeshConfig = MeshConfig()
    solve: SolveConfig = SolveConfig()
    checks: ChecksConfig = ChecksConfig()
    output: OutputConfig = OutputConfig()

    def as_dict(self) -> dict:
        return asdict(self)

    def with_elements(self, elements) -> "ExperimentConfig":
        return replace(self, mesh=MeshConfig(tuple(int(e) for e in elements), self.mesh.quad_order))

    def with_output(self, dir=None, deterministic=None) -> "ExperimentConfig":
        out = OutputConfig(
            self.output.dir if dir is None else str(dir),
            self.output.deterministic if deterministic is None else bool(deterministic),
        )
        return replace(self, output=out)


_SECTIONS = {
    "geometry": GeometryConfig,
    "drift": DriftConfig,
    "domain": DomainConfig,
    "mesh": MeshConfig,
    "solve": SolveConfig,
    "checks": ChecksConfig,
    "output": OutputConfig,
}


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def _section(cls, raw, where):
    if not isinstance(raw, dict):
        raise ConfigError(f"[{where}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    try:
        return cls(**{k: _tuplify(v) if k != "params" else dict(v) for k, v in raw.items()})
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from None


def from_dict(raw: dict, name: str = "experiment") -> ExperimentConfig:
    raw = dict(raw)
    unknown = sorted(set(raw) - set(_SECTIONS) - {"name"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    for required in ("geometry", "drift"):
        if required not in raw:
            raise ConfigError(f"missing [{required}] section")
    parts = {k: _section(cls, raw[k], k) for k, cls in _SECTIONS.items() if k in raw}
    cfg = ExperimentConfig(name=str(raw.get("name", name)), **parts)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Raise ConfigError unless the configuration is internally consistent."""
    g = cfg.geometry
    if g.name not in CATALOGUE:
        raise ConfigError(f"unknown geometry {g.name!r}; known: {sorted(CATALOGUE)}")
    try:
        imm = CATALOGUE[g.name](**g.params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"geometry {g.name!r}: {exc}") from None
    n, N = imm.intrinsic_dim, imm.ambient_dim
    if len(cfg.drift.nu) != N:
        raise ConfigError(f"drift has {len(cfg.drift.nu)} components; ambient dimension is {N}")
    if len(cfg.mesh.elements) != n:
        raise ConfigError(f"mesh.elements needs {n} entries (one per parameter coordinate)")
    if any(int(e) < 1 for e in cfg.mesh.elements):
        raise ConfigError("mesh.elements must be positive")
    if cfg.domain.box is not None and len(cfg.domain.box) != n:
        raise ConfigError(f"domain.box needs {n} intervals")
    if cfg.solve.k < 1:
        raise ConfigError("solve.k must be at least 1")
    bad = sorted(set(cfg.checks.theorems) - set(THEOREMS))
    if bad:
        raise ConfigError(f"unknown theorem id(s) {bad}; known: {list(THEOREMS)}")
    if cfg.checks.theorems and cfg.solve.k < n + 1:
        raise ConfigError(f"requested theorems need k >= n+1 = {n + 1} eigenpairs (got k = {cfg.solve.k})")
    if cfg.checks.general_formula and cfg.solve.k < N + 1:
        raise ConfigError(f"general formula needs k >= n+p+1 = {N + 1} eigenpairs (got k = {cfg.solve.k})")
    if set(cfg.checks.theorems) & set(TRANSLATOR_THEOREMS) and not cfg.drift.unit:
        raise ConfigError("translator theorems need drift.unit = true")
    if cfg.checks.sample_refinement < 1:
        raise ConfigError("checks.sample_refinement must be at least 1")


def load(path) -> ExperimentConfig:
    """Load a TOML file, or a shipped config by bare name (e.g. ``beam_nu0``)."""
    p = Path(path)
    if not p.exists() and p.parent == Path("."):
        stem = p.name[:-5] if p.name.endswith(".toml") else p.name
        shipped = resources.files("driftplate") / "configs" / f"{stem}.toml"
        if shipped.is_file():
            return from_dict(_parse(shipped.read_text(), stem), stem)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return from_dict(_parse(p.read_text(), str(p)), p.stem)


def _parse(text: str, where: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def shipped_configs() -> list[str]:
    root = resources.files("driftplate") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))
