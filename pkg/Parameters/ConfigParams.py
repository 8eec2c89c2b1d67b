# Parameters/ConfigParams.py
# ======================================================================
# Workbench configuration.
#
# A config file is a dotenv file of dotted keys, grouped under
# `# [section]` comment headers:
#
#     # [market]
#     market.beta=0.5
#     market.theta1=15.0,20.0
#     market.p2=0.6,0.4;0.4,0.6
#
# Lists are comma separated, matrix rows split by ';', booleans true|false.
# Unknown keys, unparsable values and invariant violations raise
# ConfigError(field, message).  The default output folder comes from
# CONTRACTS_OUT_DIR (.env next to the project, or the environment).
# ======================================================================

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field, fields, replace
from os.path import abspath, dirname, join
from pathlib import Path
from typing import Any, Callable

from dotenv import dotenv_values, load_dotenv

from AI.AiParams import TrainerConfig
from Contracts.ContractTypes import ContractError, MarketState, TypeLadder
from Contracts.Oracle import OracleError, OracleSettings
from Economics.EconModel import MB_BITS, EdgeProfile, QualityHyper
from Market.MarketEnv import EnvSettings
from Market.Sampler import SamplingRanges

dotenv_path = join(dirname(abspath(__file__)), "..", ".env")
load_dotenv(dotenv_path)

DEFAULT_CONFIG = Path(dirname(abspath(__file__))) / "workbench.env"


def default_out_dir() -> Path:
    return Path(os.getenv("CONTRACTS_OUT_DIR", "data"))


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


# ────────── market section ───────────────────────────────────────────
@dataclass(frozen=True)
class MarketSpec:
    """The single market instance `solve` works on (σ, P, r override the edge profile)."""
    n_servers: int = 3
    k_types: int = 2
    sigma: float = 0.5
    tx_power_dbm: float = 20.0
    link_rate_mbps: float = 1.0
    e_cloud: float = 20.0
    alpha: float = 200.0
    beta: float = 0.5
    theta1: tuple[float, ...] | None = None
    theta2: tuple[float, ...] | None = None
    p1: tuple[float, ...] | None = None
    p2: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.k_types < 1:
            raise ValueError(f"k_types must be ≥ 1, got {self.k_types}")
        for name in ("theta1", "theta2", "p1"):
            value = getattr(self, name)
            if value is not None and len(value) != self.k_types:
                raise ValueError(f"{name} must have {self.k_types} entries, got {len(value)}")
        if self.p2 is not None and (len(self.p2) != self.k_types
                                    or any(len(row) != self.k_types for row in self.p2)):
            raise ValueError(f"p2 must be {self.k_types}×{self.k_types}")


@dataclass(frozen=True)
class WorkbenchConfig:
    edge: EdgeProfile = field(default_factory=EdgeProfile)
    quality: QualityHyper = field(default_factory=QualityHyper)
    market: MarketSpec = field(default_factory=MarketSpec)
    sampling: SamplingRanges = field(default_factory=SamplingRanges)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    env: EnvSettings = field(default_factory=EnvSettings)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)

    @property
    def env_settings(self) -> EnvSettings:
        """Environment settings with λ taken from the trainer section."""
        return replace(self.env, penalty=self.trainer.penalty)

    def market_state(self) -> MarketState:
        m = self.market
        for name in ("theta1", "theta2", "p1", "p2"):
            if getattr(m, name) is None:
                raise ConfigError(f"market.{name}", "required to build the configured market")
        try:
            ladder = TypeLadder(theta1=m.theta1, theta2=m.theta2, p1=m.p1, p2=m.p2)
            profile = replace(self.edge, unit_energy_cost=m.sigma, tx_power_dbm=m.tx_power_dbm,
                              link_rate_bps=m.link_rate_mbps * 1e6)
            return MarketState(n_servers=m.n_servers, ladder=ladder, profile=profile,
                               hyper=self.quality, alpha=m.alpha, beta=m.beta, e_cloud=m.e_cloud)
        except ValueError as exc:
            raise ConfigError(f"market.{_field_of(str(exc))}", str(exc)) from exc


def _field_of(message: str) -> str:
    return message.split()[0].split("[")[0] if message else "?"


# ────────── value codecs ─────────────────────────────────────────────
def _float(raw: str) -> float:
    return float(raw)


def _int(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(value)


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low not in ("true", "false"):
        raise ValueError(f"expected true or false, got {raw!r}")
    return low == "true"


def _str(raw: str) -> str:
    return raw.strip()


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in raw.split(",") if x.strip())


def _pair(raw: str) -> tuple[float, float]:
    values = _floats(raw)
    if len(values) != 2:
        raise ValueError(f"expected 'low,high', got {raw!r}")
    return values


def _matrix(raw: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(row) for row in raw.split(";") if row.strip())


def _fmt(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ";".join(_fmt(row) for row in value)
        return ",".join(_fmt(float(x)) for x in value)
    return str(value)


Codec = Callable[[str], Any]

_SECTIONS: dict[str, type] = {
    "edge": EdgeProfile, "quality": QualityHyper, "market": MarketSpec,
    "sampling": SamplingRanges, "oracle": OracleSettings, "env": EnvSettings,
    "trainer": TrainerConfig,
}
_EDGE_MB = {"data_feature_mb": "data_feature_bits", "data_agent_mb": "data_agent_bits"}
# fields configured elsewhere: σ/P/r per market, λ under trainer
_HIDDEN = {
    "edge": {"tx_power_dbm", "link_rate_bps", "unit_energy_cost", *_EDGE_MB.values()},
    "env": {"penalty"},
}
_CODECS: dict[str, Codec] = {"int": _int, "float": _float, "bool": _bool, "str": _str}


def _codec(annotation, name: str) -> Codec:
    ann = (annotation.__name__ if isinstance(annotation, type) else str(annotation)).replace(" ", "")
    if ann.endswith("|None"):
        inner = _codec(ann[: -len("|None")], name)
        return lambda raw: None if raw.strip().lower() in ("", "none") else inner(raw)
    if ann in _CODECS:
        return _CODECS[ann]
    if ann == "tuple[float,float]":
        return _pair
    if ann.startswith("tuple[tuple"):
        return _matrix
    if ann.startswith("tuple[float"):
        return _floats
    raise TypeError(f"no codec for {name}: {annotation}")


def _schema(section: str) -> dict[str, Codec]:
    cls = _SECTIONS[section]
    out = {}
    for f in fields(cls):
        if not f.init or f.name in _HIDDEN.get(section, ()):
            continue
        out[f.name] = _codec(f.type, f"{section}.{f.name}")
    if section == "edge":
        out.update({key: _float for key in _EDGE_MB})
    return out


# ────────── parse / dump ─────────────────────────────────────────────
def parse_config(text: str) -> WorkbenchConfig:
    raw = dotenv_values(stream=io.StringIO(text))
    values: dict[str, dict[str, Any]] = {name: {} for name in _SECTIONS}
    for key, value in raw.items():
        section, _, name = key.partition(".")
        if section not in _SECTIONS or name not in _schema(section):
            raise ConfigError(key, "unknown key")
        if value is None:
            raise ConfigError(key, "missing value")
        try:
            parsed = _schema(section)[name](value)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {value!r}: {exc}") from exc
        if section == "edge" and name in _EDGE_MB:
            name, parsed = _EDGE_MB[name], parsed * MB_BITS
        values[section][name] = parsed
    return _build(values)


def _build(values: dict[str, dict[str, Any]]) -> WorkbenchConfig:
    built = {}
    for section, cls in _SECTIONS.items():
        try:
            built[section] = cls(**values[section])
        except (ValueError, OracleError, ContractError) as exc:
            raise ConfigError(f"{section}.{_field_of(str(exc))}", str(exc)) from exc
    cfg = WorkbenchConfig(**built)
    m = cfg.market
    if None not in (m.theta1, m.theta2, m.p1, m.p2):
        cfg.market_state()
    return cfg


def load_config(path: Path | str | None = None) -> WorkbenchConfig:
    path = DEFAULT_CONFIG if path is None else Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"))


def dump_config(cfg: WorkbenchConfig) -> str:
    lines = []
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        lines.append(f"# [{section}]")
        for name in _schema(section):
            if section == "edge" and name in _EDGE_MB:
                value = getattr(obj, _EDGE_MB[name]) / MB_BITS
            else:
                value = getattr(obj, name)
            lines.append(f"{section}.{name}={_fmt(value)}")
        lines.append("")
    return "\n".join(lines)
