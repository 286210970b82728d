"""Strict JSON run configuration."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, GeometryError
from .geometry import Geometry1D
from .nonlinear import ModelParams


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Span(_Strict):
    start: float
    stop: float
    num: int = Field(ge=2)

    @model_validator(mode="after")
    def _nonempty(self):
        if not self.stop > self.start:
            raise ValueError("range must satisfy stop > start")
        return self


class GeometryCfg(_Strict):
    outer: tuple[float, float]
    inner: tuple[float, float]
    gamma1: float = Field(gt=0)
    gamma2: float = Field(gt=0)
    n_per_unit: int = Field(default=96, ge=8)

    @model_validator(mode="after")
    def _layout(self):
        try:
            self.build()
        except GeometryError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def build(self) -> Geometry1D:
        return Geometry1D(self.outer, self.inner, self.gamma1, self.gamma2)


class ParamsCfg(_Strict):
    lambda1: float = 1.0
    lambda2: float = 1.0
    mu: float = 1.0
    alpha1: float = Field(default=1.0, gt=0)
    alpha2: float = Field(default=1.0, gt=0)
    a1: float = Field(default=1.0, ge=0)
    a2: float = Field(default=1.0, ge=0)
    b1: float = Field(default=1.0, ge=0)
    b2: float = Field(default=1.0, ge=0)
    beta: float = Field(default=1.0, gt=0)
    d: float = Field(default=1.0, gt=0)


class EigCfg(_Strict):
    problem: Literal["interface", "scalar"] = "interface"
    region: Literal["Omega", "Omega1", "Omega2"] = "Omega"
    bc: Literal["neumann", "robin_sigma", "dirichlet_sigma"] = "neumann"
    robin_g: float = 1.0
    c: float = 0.0
    c1: float = 0.0
    c2: float = 0.0


class LogisticCfg(_Strict):
    region: Literal["Omega", "Omega1", "Omega2"] = "Omega"
    bc: Literal["neumann", "robin_sigma", "dirichlet_sigma"] = "neumann"
    robin_g: float = 1.0
    dirichlet_value: float = Field(default=0.0, ge=0)
    c: float = 0.0
    mu: Optional[float] = None  # defaults to params.mu


class CoexistCfg(_Strict):
    tol: float = Field(default=1e-9, gt=0)


class EvolveCfg(_Strict):
    t_end: float = Field(default=50.0, gt=0)
    dt: Optional[float] = Field(default=None, gt=0)
    init: Literal["positive", "semitrivial"] = "positive"


class LargeCfg(_Strict):
    m_list: tuple[float, ...] = (1e2, 1e3, 1e4)

    @field_validator("m_list")
    @classmethod
    def _increasing(cls, v):
        if len(v) < 2 or v[0] <= 0 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("m_list must be positive and strictly increasing")
        return v


class MuStarCfg(_Strict):
    window: Optional[tuple[float, float]] = None
    n_scan: int = Field(default=16, ge=3)
    rtol: float = Field(default=1e-3, gt=0)


class RegionMapCfg(_Strict):
    x_range: tuple[float, float]
    mu_range: tuple[float, float]
    nx: int = Field(default=60, ge=1)
    nmu: int = Field(default=60, ge=1)
    equal: bool = False
    confirm: bool = True
    band: int = Field(default=1, ge=0)

    @model_validator(mode="after")
    def _ranges(self):
        if not (self.x_range[1] > self.x_range[0] and self.mu_range[1] > self.mu_range[0]):
            raise ValueError("ranges must be non-empty")
        return self


class BranchCfg(_Strict):
    initial: float = Field(default=0.02, gt=0)
    min_step: float = Field(default=1e-5, gt=0)
    max_step: float = Field(default=0.1, gt=0)
    max_points: int = Field(default=400, ge=2)


class LimitCfg(_Strict):
    m_value: float = Field(default=1e4, gt=0)
    lambda1_list: tuple[float, ...] = (50.0, 200.0, 1000.0)


class OracleCfg(_Strict):
    length: float = Field(default=1.0 / 3.0, gt=0)
    left: Literal["neumann", "robin", "dirichlet"] = "robin"
    right: Literal["neumann", "robin", "dirichlet"] = "robin"
    gamma_left: float = 1.0
    gamma_right: float = 1.0


class CommandsCfg(_Strict):
    eig: EigCfg = EigCfg()
    logistic: LogisticCfg = LogisticCfg()
    coexist: CoexistCfg = CoexistCfg()
    evolve: EvolveCfg = EvolveCfg()
    large: LargeCfg = LargeCfg()
    curve_h: Span = Span(start=-10.0, stop=4.0, num=29)
    curve_g: Span = Span(start=-5.0, stop=10.0, num=31)
    curve_ghat: Span = Span(start=0.0, stop=5.0, num=21)
    mu_star: MuStarCfg = MuStarCfg()
    region_map: Optional[RegionMapCfg] = None
    branch: BranchCfg = BranchCfg()
    limit_system: LimitCfg = LimitCfg()
    oracle: OracleCfg = OracleCfg()


class RunConfig(_Strict):
    geometry: GeometryCfg
    params: ParamsCfg = ParamsCfg()
    commands: CommandsCfg = CommandsCfg()
    output: Optional[str] = None
    seed: int = 0

    def model_params(self) -> ModelParams:
        return ModelParams(self.geometry.build(), **self.params.model_dump())

    def resolved(self) -> dict:
        return self.model_dump(mode="json")


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


__all__ = ["RunConfig", "load_config", "parse_config", "Span", "RegionMapCfg"]
