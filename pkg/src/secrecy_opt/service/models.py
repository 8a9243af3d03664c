"""Pydantic request/response models. These are the wire and file formats:
the CLI reads and writes exactly these shapes, so a saved result file is a
valid service payload and vice versa.

Complex vectors travel as [[re, im], ...]; complex matrices as separate
real/imaginary part tables.
"""
from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..sim import SweepConfig, SweepResult
from ..srm import SecrecyResult
from ..types import Eavesdropper, ProblemInstance, TransmitDesign, db_to_linear

ComplexVec = list[list[float]]


def _vec_to_np(v: ComplexVec) -> np.ndarray:
    return np.array([complex(re, im) for re, im in v], dtype=complex)


def _np_to_vec(v: np.ndarray) -> ComplexVec:
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex).ravel()]


class MatrixParts(BaseModel):
    re: list[list[float]]
    im: list[list[float]]

    @classmethod
    def from_np(cls, m: np.ndarray) -> "MatrixParts":
        m = np.asarray(m, dtype=complex)
        return cls(re=m.real.tolist(), im=m.imag.tolist())

    def to_np(self) -> np.ndarray:
        return np.array(self.re, dtype=float) + 1j * np.array(self.im, dtype=float)


class EveModel(BaseModel):
    g_bar: ComplexVec
    epsilon: float = Field(ge=0)


class InstanceModel(BaseModel):
    """Problem instance. Power is taken in dB; when `power_linear` is also
    present it wins, which lets emitted files round-trip bit-exactly."""

    nt: int = Field(ge=1)
    h: ComplexVec
    eves: list[EveModel] = Field(min_length=1)
    power_db: float
    power_linear: Optional[float] = None

    @field_validator("h")
    @classmethod
    def _pairs(cls, v):
        if any(len(x) != 2 for x in v):
            raise ValueError("complex entries must be [re, im] pairs")
        return v

    def to_instance(self) -> ProblemInstance:
        power = self.power_linear if self.power_linear is not None else db_to_linear(self.power_db)
        return ProblemInstance(
            h=_vec_to_np(self.h),
            eves=tuple(Eavesdropper(_vec_to_np(e.g_bar), e.epsilon) for e in self.eves),
            power=power,
        )

    @classmethod
    def from_instance(cls, inst: ProblemInstance) -> "InstanceModel":
        obj = inst.to_json()
        return cls(**obj)


class DesignModel(BaseModel):
    w: MatrixParts
    sigma: MatrixParts
    beam: Optional[ComplexVec] = None

    def to_design(self) -> TransmitDesign:
        return TransmitDesign(
            W=self.w.to_np(),
            Sigma=self.sigma.to_np(),
            beam=_vec_to_np(self.beam) if self.beam is not None else None,
        )

    @classmethod
    def from_design(cls, d: TransmitDesign) -> "DesignModel":
        return cls(
            w=MatrixParts.from_np(d.W),
            sigma=MatrixParts.from_np(d.Sigma),
            beam=_np_to_vec(d.beam) if d.beam is not None else None,
        )


class TraceSampleModel(BaseModel):
    beta: float
    phi: Optional[float]
    status: str


class EveReportModel(BaseModel):
    k: int
    worst_ratio: float
    worst_g: ComplexVec
    bob_term: float
    secrecy_term: float


class SolveRequest(BaseModel):
    instance: InstanceModel
    grid: int = Field(default=40, ge=2)
    exhaustive: Optional[int] = Field(default=None, ge=2)
    extract_beam: bool = True


class SolveResponse(BaseModel):
    w: MatrixParts
    sigma: MatrixParts
    beam: Optional[ComplexVec]
    beta_star: float
    rate: float
    trace: list[TraceSampleModel]
    per_eve: list[EveReportModel]
    lambda_ratio: Optional[float] = None

    @classmethod
    def from_result(cls, res: SecrecyResult) -> "SolveResponse":
        return cls(
            w=MatrixParts.from_np(res.design.W),
            sigma=MatrixParts.from_np(res.design.Sigma),
            beam=_np_to_vec(res.design.beam) if res.design.beam is not None else None,
            beta_star=res.beta_star,
            rate=res.rate_worst_case,
            trace=[
                TraceSampleModel(beta=s.beta, phi=s.phi, status=s.status)
                for s in res.trace.samples
            ],
            per_eve=[
                EveReportModel(
                    k=r.k,
                    worst_ratio=r.worst_ratio,
                    worst_g=_np_to_vec(r.worst_g),
                    bob_term=r.bob_term,
                    secrecy_term=r.secrecy_term,
                )
                for r in res.per_eve
            ],
            lambda_ratio=res.lambda_ratio,
        )

    def to_design_model(self) -> DesignModel:
        return DesignModel(w=self.w, sigma=self.sigma, beam=self.beam)


class EvaluateRequest(BaseModel):
    instance: InstanceModel
    design: Optional[DesignModel] = None
    baseline: Optional[Literal["isotropic", "mrt"]] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.design is None) == (self.baseline is None):
            raise ValueError("provide exactly one of `design` or `baseline`")
        return self


class EvaluateResponse(BaseModel):
    rate: float
    per_eve: list[EveReportModel]


class SweepConfigModel(BaseModel):
    nt: int = Field(ge=1)
    k: int = Field(ge=1)
    trials: int = Field(ge=1)
    seed: int
    sweep_axis: Literal["power_db", "alpha"]
    axis_values: list[float] = Field(min_length=1)
    fixed: float
    methods: list[Literal["robust", "isotropic", "mrt"]] = ["robust", "isotropic", "mrt"]

    def to_config(self) -> SweepConfig:
        return SweepConfig(
            nt=self.nt,
            k=self.k,
            trials=self.trials,
            seed=self.seed,
            sweep_axis=self.sweep_axis,
            axis_values=tuple(self.axis_values),
            fixed=self.fixed,
            methods=tuple(self.methods),
        )


class SimulateRequest(BaseModel):
    config: SweepConfigModel


class SweepRowModel(BaseModel):
    axis_value: float
    method: str
    mean_rate: float
    stderr: float
    n_success: int
    n_fail: int


class SimulateResponse(BaseModel):
    metadata: dict[str, str]
    rows: list[SweepRowModel]
    csv: str

    @classmethod
    def from_result(cls, result: SweepResult) -> "SimulateResponse":
        return cls(
            metadata={k: str(v) for k, v in result.metadata.items()},
            rows=[
                SweepRowModel(
                    axis_value=r.axis_value,
                    method=r.method,
                    mean_rate=r.mean_rate,
                    stderr=r.stderr,
                    n_success=r.n_success,
                    n_fail=r.n_fail,
                )
                for r in result.rows
            ],
            csv=result.to_csv(),
        )
