"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from ..analytic import FixedMetrics
from ..model import SystemConfig
from ..policy import SchemeParams
from ..sim import Conservation, SimMetrics


class SystemConfigModel(BaseModel):
    """Wire form of the system configuration; mirrors the config file keys."""

    model_config = ConfigDict(populate_by_name=True)

    n: int
    L: int | str
    W: float
    epsilon: float
    gamma_max: float
    lam: float = Field(alias="lambda")
    k_c: int = 6
    a_gamma: float = 0.39
    b_gamma: float = 0.78
    T_0: float | None = None
    P_N: float = -107.0

    def to_config(self) -> SystemConfig:
        return SystemConfig.from_mapping(self.model_dump(by_alias=True))

    @classmethod
    def from_config(cls, config: SystemConfig) -> "SystemConfigModel":
        return cls.model_validate(config.to_mapping())


class SchemeParamsModel(BaseModel):
    p: float
    gamma: float
    T: float

    @classmethod
    def from_params(cls, params: SchemeParams) -> "SchemeParamsModel":
        return cls(p=params.p, gamma=params.gamma, T=params.T)


class FixedParamsRequest(BaseModel):
    system: SystemConfigModel


class AdaptiveParamsRequest(BaseModel):
    system: SystemConfigModel
    k: int


class AnalyticRequest(BaseModel):
    system: SystemConfigModel
    s_seconds: float | None = None
    mh_samples: int = 100_000
    mh_seed: int = 0


class FixedMetricsModel(BaseModel):
    params: SchemeParamsModel
    b: float
    tau: float
    P_s: float
    CBR: float
    EY: float
    EY2: float
    ED: float
    Theta: float
    Theta_bps: float
    Theta_norm: float
    EA: float
    q: list[float]

    @classmethod
    def from_metrics(cls, fm: FixedMetrics) -> "FixedMetricsModel":
        return cls(
            params=SchemeParamsModel.from_params(fm.params),
            b=fm.b,
            tau=fm.tau,
            P_s=fm.P_s,
            CBR=fm.CBR,
            EY=fm.EY,
            EY2=fm.EY2,
            ED=fm.ED,
            Theta=fm.Theta,
            Theta_bps=fm.Theta_bps,
            Theta_norm=fm.Theta_norm,
            EA=fm.EA,
            q=list(fm.q),
        )


class MhEstimateRequest(BaseModel):
    h: int
    gamma: float
    epsilon: float
    samples: int = 100_000
    seed: int = 0


class MhEstimateResponse(BaseModel):
    h: int
    gamma: float
    epsilon: float
    samples: int
    seed: int
    estimate: float
    stderr: float


class SimulateRequest(BaseModel):
    system: SystemConfigModel
    scheme: Literal["fixed", "adaptive"]
    s_seconds: float | None = None
    seed: int = 0
    target_slots: int | None = None
    horizon_s: float | None = None
    warmup_s: float | None = None
    replications: int = 1


class ConservationModel(BaseModel):
    generated: int
    delivered: int
    decode_failures: int
    dropped_engaged: int
    dropped_overwrite: int
    in_flight: int
    balanced: bool

    @classmethod
    def from_counts(cls, c: Conservation) -> "ConservationModel":
        return cls(
            generated=c.generated,
            delivered=c.delivered,
            decode_failures=c.decode_failures,
            dropped_engaged=c.dropped_engaged,
            dropped_overwrite=c.dropped_overwrite,
            in_flight=c.in_flight,
            balanced=c.balanced,
        )


class SimMetricsModel(BaseModel):
    scheme: str
    pdr: float
    pdr_stderr: float
    mean_access_delay_s: float
    delay_stderr: float
    throughput_bps: float
    thr_stderr: float
    normalized_throughput: float
    nthr_stderr: float
    mean_aoi_s: float
    aoi_stderr: float
    cbr: float
    cbr_stderr: float
    pdr_per_generated: float
    slots: int
    transmissions: int
    successes: int
    generated: int
    duration_s: float
    censored: bool
    replications: int
    conservation: ConservationModel

    @classmethod
    def from_metrics(cls, m: SimMetrics) -> "SimMetricsModel":
        return cls(
            scheme=m.scheme,
            pdr=m.pdr,
            pdr_stderr=m.pdr_stderr,
            mean_access_delay_s=m.mean_access_delay_s,
            delay_stderr=m.delay_stderr,
            throughput_bps=m.throughput_bps,
            thr_stderr=m.thr_stderr,
            normalized_throughput=m.normalized_throughput,
            nthr_stderr=m.nthr_stderr,
            mean_aoi_s=m.mean_aoi_s,
            aoi_stderr=m.aoi_stderr,
            cbr=m.cbr,
            cbr_stderr=m.cbr_stderr,
            pdr_per_generated=m.pdr_per_generated,
            slots=m.slots,
            transmissions=m.transmissions,
            successes=m.successes,
            generated=m.generated,
            duration_s=m.duration_s,
            censored=m.censored,
            replications=m.replications,
            conservation=ConservationModel.from_counts(m.conservation),
        )


class SweepRequest(BaseModel):
    system: SystemConfigModel
    out_dir: str
    s_grid: list[float] | None = None
    schemes: list[Literal["fixed", "adaptive"]] = ["fixed", "adaptive"]
    replications: int = 10
    slots_per_rep: int = 11_000
    horizon_s: float | None = None
    warmup_s: float | None = None
    seed_base: int = 20_240
    workers: int = 1
    mh_samples: int = 800_000
    run_compare: bool = True
    z_max: float = 3.0


class MhPrecomputeRequest(BaseModel):
    system: SystemConfigModel
    cache_dir: str
    h_max: int | None = None
    samples: int = 100_000
    seed: int = 0


class CompareRequest(BaseModel):
    analytic_rows: list[dict[str, Any]]
    sim_rows: list[dict[str, Any]]
    z_max: float = 3.0


class CompareEntryModel(BaseModel):
    S_seconds: float
    metric: str
    analytic: float
    simulated: float
    stderr: float
    z: float
    threshold: float
    passed: bool
    skipped: str | None = None


class CompareReportModel(BaseModel):
    passed: bool
    entries: list[CompareEntryModel]
    text: str


class JobModel(BaseModel):
    id: str
    kind: str
    status: Literal["queued", "running", "done", "failed"]
    error: str | None = None
    result: dict[str, Any] | None = None


class HealthModel(BaseModel):
    status: str
    version: str
