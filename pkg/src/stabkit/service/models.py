"""Request and response schemas for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class Manifest(BaseModel):
    command: str
    config_digest: str
    seed: int
    version: str


# -- shared fragments --------------------------------------------------------


class DensityDoc(BaseModel):
    kind: Literal["uniform-box", "piecewise-constant-grid", "truncated-product-beta"]
    support: list[list[float]]
    params: dict[str, Any] = Field(default_factory=dict)
    sup_density: float = 0.0


class ProcessDoc(BaseModel):
    density: DensityDoc
    mode: Literal["poisson", "binomial"]
    intensity: Optional[float] = None
    n: Optional[int] = None
    seed: int = 0

    @model_validator(mode="after")
    def _mode_fields(self):
        if self.mode == "poisson" and self.intensity is None:
            raise ValueError("poisson mode needs an intensity")
        if self.mode == "binomial" and self.n is None:
            raise ValueError("binomial mode needs n")
        return self

    def as_config_dict(self) -> dict:
        doc: dict[str, Any] = {"density": self.density.model_dump(), "mode": self.mode,
                               "seed": self.seed}
        if self.mode == "poisson":
            doc["intensity"] = self.intensity
        else:
            doc["n"] = self.n
        return doc


class StatisticDoc(BaseModel):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)
    scaling: Literal["none", "thermodynamic"] = "none"


class RegionDoc(BaseModel):
    kind: Literal["full", "halfspace"] = "full"
    axis: int = 0
    threshold: float = 0.0


class CloudInput(BaseModel):
    """A cloud given inline as CSV text or as a point list."""

    cloud_csv: Optional[str] = None
    points: Optional[list[list[float]]] = None
    dim: Optional[int] = None

    @model_validator(mode="after")
    def _one_of(self):
        if self.cloud_csv is None and self.points is None:
            raise ValueError("provide cloud_csv or points")
        return self


# -- endpoint payloads -------------------------------------------------------


class SampleRequest(BaseModel):
    process: ProcessDoc
    seed_offset: int = 0


class SampleResponse(BaseModel):
    manifest: Manifest
    dim: int
    n: int
    csv: str


class KnnStatRequest(CloudInput):
    k: int = 1
    theta: float = 1.0
    include_graph: bool = False


class KnnStatResponse(BaseModel):
    manifest: Manifest
    value: float
    k: int
    theta: float
    n: int
    graph_csv: Optional[str] = None


class EntropyStatRequest(CloudInput):
    k: int = 1
    weights: str | list[float] = "kl"  # "kl" | "auto" | explicit


class EntropyStatResponse(BaseModel):
    manifest: Manifest
    value: float
    k: int
    n: int
    weights: list[float]
    residual_sum: float
    residual_moments: list[float]


class EulerStatRequest(CloudInput):
    r: float = 1.0
    kind: Literal["vr", "cech"] = "vr"
    scale_n: Optional[float] = None
    max_time: float = 2.0
    budget: int = 10**7


class EulerStatResponse(BaseModel):
    manifest: Manifest
    chi: float
    counts: list[int]
    kind: str
    r: float
    scale: float
    n: int


class MstStatRequest(CloudInput):
    box: Optional[list[list[float]]] = None
    window_alpha: Optional[float] = None
    window_x: Optional[list[float]] = None
    include_edges: bool = False


class MstWindowGap(BaseModel):
    flexible_cost: float
    full_cost: float
    gap: float


class MstStatResponse(BaseModel):
    manifest: Manifest
    total_length: float
    n: int
    n_edges: int
    edges: Optional[list[list[float]]] = None
    window: Optional[MstWindowGap] = None


class WindowDoc(BaseModel):
    kind: Literal["all", "empty", "ball", "box"] = "all"
    center: Optional[list[float]] = None
    radius: Optional[float] = None
    box: Optional[list[list[float]]] = None


class CostRequest(BaseModel):
    stat: StatisticDoc
    process: ProcessDoc
    op: Literal["add", "marked", "second", "flex"]
    x: list[float]
    y: Optional[list[float]] = None
    x2: Optional[list[float]] = None
    window: Optional[WindowDoc] = None
    seed_offset: int = 0


class CostResponse(BaseModel):
    manifest: Manifest
    op: str
    value: float
    statistic: str
    cloud_size: int


class RadiusRequest(BaseModel):
    stat: StatisticDoc
    process: ProcessDoc
    assumption: Literal["tail", "kexp", "moment"] = "tail"
    x: Optional[list[float]] = None
    radii: Optional[list[float]] = None
    probes: int = 8
    region: Optional[RegionDoc] = None
    distances: Optional[list[float]] = None
    p: Optional[float] = None
    x_grid: Optional[list[list[float]]] = None
    replications: int = 200


class AssumptionReportDoc(BaseModel):
    manifest: Manifest
    kind: str
    grid: list[float]
    estimates: list[float]
    standard_errors: list[float]
    fitted_constants: Optional[dict[str, float]] = None
    degenerate: bool
    extras: dict[str, Any] = Field(default_factory=dict)


class WeightsRequest(BaseModel):
    k: int
    d: int


class WeightsResponse(BaseModel):
    manifest: Manifest
    k: int
    dim: int
    weights: list[float]
    support_set: list[int]
    residual_sum: float
    residual_moments: list[float]


class CltRequest(BaseModel):
    stat: StatisticDoc
    process_template: dict[str, Any]
    grid: list[int]
    replications: int = 2000
    seed: int = 0
    workers: int = 1


class SizeRecordDoc(BaseModel):
    n: int
    mean: float
    variance: float
    d_k: float
    dkw_radius: float
    standardized: list[float]


class RateFitDoc(BaseModel):
    slope: float
    stderr: float
    intercept: float
    curvature: float
    curvature_stderr: float
    non_power_law: bool
    used_points: int


class CltResponse(BaseModel):
    manifest: Manifest
    statistic: dict[str, Any]
    process: dict[str, Any]
    n_grid: list[int]
    replications: int
    seed: int
    records: list[SizeRecordDoc]
    fit: RateFitDoc
    variance_ratios: list[float]
    variance_verdict: str


class ThetaBoundRequest(BaseModel):
    density: DensityDoc
    region: RegionDoc = Field(default_factory=RegionDoc)
    c2: float
    c3: float
    p: float
    s: float
    draws: int = 1 << 17
    seed: int = 0


class ThetaBoundResponse(BaseModel):
    manifest: Manifest
    theta: float
    standard_error: float
    draws: int
    method: str


class GammaBoundRequest(BaseModel):
    stat: StatisticDoc
    process: ProcessDoc
    window: Literal["all", "empty", "ball", "cube"] = "all"
    window_radius: float = 0.0
    window_side: float = 0.0
    triples: int = 24
    inner: int = 48
    var_reps: int = 500
    batches: int = 6
    seed: int = 0


class GammaBoundResponse(BaseModel):
    manifest: Manifest
    gamma_terms: list[float]
    gamma_standard_errors: list[float]
    b_estimates: dict[str, float]
    variance_estimate: float
    intensity: float
    batches: int
    total: float


class ReportCsvRequest(BaseModel):
    report: dict[str, Any]
