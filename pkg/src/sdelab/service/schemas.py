"""Pydantic request/response models for the experiment service.

A request carries everything needed to reproduce a run; the canonical JSON
dump of the validated request is echoed into every output set as
config.echo.json. Execution details that cannot change results (worker
count) travel as query parameters, not in the body.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..errors import UsageError
from ..models import ControlFunction, SdeSystem, build_control, build_model

Format = Literal["csv", "json", "both"]


class ModelSpec(BaseModel):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)

    def build(self) -> SdeSystem:
        return build_model(self.name, self.params)


class ControlSpec(BaseModel):
    name: Literal["zero", "linear", "log"] = "linear"
    params: dict[str, float] = Field(default_factory=dict)

    def build(self, kind: str) -> ControlFunction:
        return build_control(self.name, kind, self.params)


class ScalarFnSpec(BaseModel):
    """Deterministic scalar function of t: constant, polynomial or table.

    'auto' (moment runs only) calibrates a constant from the sampled
    moment-condition ratio. Tables are piecewise-linear interpolants; the
    CLI loads table files client-side so the service never touches paths.
    """

    kind: Literal["const", "poly", "table", "auto"] = "const"
    value: float = 1.0
    coeffs: list[float] = Field(default_factory=list)
    ts: list[float] = Field(default_factory=list)
    values: list[float] = Field(default_factory=list)

    def build(self):
        if self.kind == "const":
            v = float(self.value)
            return lambda t: v
        if self.kind == "poly":
            if not self.coeffs:
                raise UsageError("poly scalar function needs coefficients")
            coeffs = list(map(float, self.coeffs))

            def poly(t: float) -> float:
                acc = 0.0
                for c in reversed(coeffs):
                    acc = acc * t + c
                return acc

            return poly
        if self.kind == "table":
            if len(self.ts) != len(self.values) or len(self.ts) < 2:
                raise UsageError("table scalar function needs matching ts/values, >= 2 rows")
            ts = np.asarray(self.ts, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if np.any(np.diff(ts) <= 0):
                raise UsageError("table ts must be strictly increasing")
            return lambda t: float(np.interp(t, ts, vals))
        raise UsageError("scalar function kind 'auto' must be resolved by the caller")


class SimulateRequest(BaseModel):
    model: ModelSpec
    level: int
    T: float
    paths: int = 1
    seed: int = 0
    x0: Optional[list[float]] = None  # defaults to (1,...,1) for the model's d
    R_stop: float = 1e6
    stream_base: int = 0


class CheckRequest(BaseModel):
    condition: Literal["monotonicity", "coercivity", "moment", "confluence", "k-ratio"]
    model: Optional[ModelSpec] = None
    eta: ControlSpec = Field(default_factory=lambda: ControlSpec(name="log"))
    gamma: ControlSpec = Field(default_factory=ControlSpec)
    gamma_r: ControlSpec = Field(default_factory=ControlSpec)
    g: ScalarFnSpec = Field(default_factory=ScalarFnSpec)
    f: ScalarFnSpec = Field(default_factory=ScalarFnSpec)
    R: float = 10.0
    c0: float = 0.5
    K: float = 1.0
    K_radius: float = 1.0
    r_max: float = 100.0
    samples: int = 100_000
    seed: int = 0

    @field_validator("samples")
    @classmethod
    def _positive_samples(cls, v: int) -> int:
        if v < 1:
            raise ValueError("samples must be positive")
        return v


class BoundConstantsSpec(BaseModel):
    C_p: Optional[float] = None
    C_p_prime: Optional[float] = None
    C_p_dprime: Optional[float] = None


class MomentsRequest(BaseModel):
    model: ModelSpec
    p: float
    T: float
    level: int
    paths: int
    seed: int = 0
    x0: Optional[list[float]] = None
    R_stop: float = 1e6
    f: ScalarFnSpec = Field(default_factory=ScalarFnSpec)
    bound: Literal["i", "ii", "both", "none"] = "both"
    constants: BoundConstantsSpec = Field(default_factory=BoundConstantsSpec)
    calibration_samples: int = 50_000
    calibration_r_max: float = 10.0


class ConfluenceRequest(BaseModel):
    model: ModelSpec
    x0: list[float]
    y0: list[float]
    eps: list[float]
    T: float
    level: int
    paths: int
    seed: int = 0
    R_stop: float = 1e6


class MonotoneRequest(BaseModel):
    model: ModelSpec
    x0: float
    y0: float
    T: float
    level: int
    paths: int
    seed: int = 0
    R_stop: float = 1e6


class ConvergeRequest(BaseModel):
    model: ModelSpec
    x0: Optional[list[float]] = None
    T: float
    levels: list[int]
    ref_level: int
    paths: int
    seed: int = 0
    R_stop: float = 1e6
    format: Format = "both"


class StrongErrorRequest(BaseModel):
    model: ModelSpec
    x0: Optional[list[float]] = None
    T: float
    levels: list[int]
    paths: int
    seed: int = 0
    oracle_pad: int = 4
    R_stop: float = 1e6
    format: Format = "both"


class EvalTestFnRequest(BaseModel):
    kind: Literal["phi_delta", "varphi", "Phi_delta"]
    control: ControlSpec
    delta: float = 0.0
    x: float = 0.0
    c0: Optional[float] = None


class FilePayload(BaseModel):
    name: str
    content: str


class RunArtifacts(BaseModel):
    files: list[FilePayload]
    summary: dict[str, Any]


class ErrorDetail(BaseModel):
    kind: str
    message: str
