from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


def _check_workers(value: int) -> int:
    if value == 0:
        raise ValueError("n_jobs must be a positive worker count or negative for all-but-N")
    return value


class MeshConfig(BaseModel):
    radius: float = Field(1.0, gt=0)
    boundary_segments: int = Field(64, ge=16)
    interior_density: float = Field(1.0, gt=0)
    symmetry: int = Field(16, ge=1)


class ElectrodeConfig(BaseModel):
    slot_count: int = Field(8, ge=4)
    # fraction of the half slot pitch covered by each electrode half-width
    arc_fraction: float = Field(0.5, gt=0, lt=1)
    contact_impedance: float = Field(0.01, gt=0)


class SolverConfig(BaseModel):
    amplitude: float = Field(1.0, gt=0)


class PodConfig(BaseModel):
    center: bool = False
    max_modes: Optional[int] = Field(None, ge=1)


class PlacementConfig(BaseModel):
    slots: int = Field(16, ge=5)
    select: int = Field(8, ge=5)
    modes: int = Field(20, ge=1)
    score: Literal["gram", "data_gram", "volume"] = "gram"
    background: float = Field(1.0, gt=0)
    n_jobs: int = 1

    @field_validator("n_jobs")
    @classmethod
    def check_workers(cls, value: int) -> int:
        return _check_workers(value)

    @model_validator(mode="after")
    def check_select(self) -> "PlacementConfig":
        if self.select > self.slots:
            raise ValueError("select must not exceed slots")
        return self


class ProjectionConfig(BaseModel):
    condition_threshold: float = Field(1e8, gt=1)
    regularize: bool = False
    cutoff: float = Field(1e-10, gt=0, lt=1)
    # least squares on the leading modes; null inverts the square D'-mode restriction
    modes: Optional[int] = Field(5, ge=1)


class SynthConfig(BaseModel):
    contact_noise: float = Field(0.2, ge=0)
    sensor_noise: float = Field(1e-4, ge=0)
    n_jobs: int = 1

    @field_validator("n_jobs")
    @classmethod
    def check_workers(cls, value: int) -> int:
        return _check_workers(value)


class RenderConfig(BaseModel):
    panel_size: int = Field(320, ge=64)
    colormap: str = "RdBu_r"


class SystemConfig(BaseModel):
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    electrodes: ElectrodeConfig = Field(default_factory=ElectrodeConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    pod: PodConfig = Field(default_factory=PodConfig)
    placement: PlacementConfig = Field(default_factory=PlacementConfig)
    projection: ProjectionConfig = Field(default_factory=ProjectionConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    render: RenderConfig = Field(default_factory=RenderConfig)
    output_dir: Optional[str] = None


# --- synthetic session inputs -------------------------------------------------


class Anomaly(BaseModel):
    center: Tuple[float, float]
    radius: float = Field(gt=0)
    conductivity: float

    @field_validator("conductivity")
    @classmethod
    def positive_conductivity(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("conductivity must be strictly positive")
        return value


class Phantom(BaseModel):
    background: float = 1.0
    anomalies: List[Anomaly] = Field(default_factory=list)

    @field_validator("background")
    @classmethod
    def positive_background(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("background conductivity must be strictly positive")
        return value


class TrajectorySpec(BaseModel):
    kind: Literal["static", "orbit", "sweep", "poses"] = "orbit"
    background: float = Field(1.0, gt=0)
    anomaly_conductivity: float = Field(2.0, gt=0)
    anomaly_radius: float = Field(0.2, gt=0)
    # relative radius modulation over the session, 0 keeps the radius fixed
    radius_swing: float = Field(0.0, ge=0, lt=1)
    orbit_radius: float = Field(0.5, ge=0)
    revolutions: float = 1.0
    start: Tuple[float, float] = (-0.5, 0.0)
    end: Tuple[float, float] = (0.5, 0.0)
    poses: List[Tuple[float, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_poses(self) -> "TrajectorySpec":
        if self.kind == "poses" and not self.poses:
            raise ValueError("poses trajectory needs at least one pose")
        return self


class SessionSpec(BaseModel):
    frame_count: int = Field(200, ge=1)
    trajectory: TrajectorySpec = Field(default_factory=TrajectorySpec)
    contact_noise: float = Field(0.2, ge=0)
    sensor_noise: float = Field(1e-4, ge=0)
    seed: int = 0


# --- artifact documents -------------------------------------------------------


class MeshDocument(BaseModel):
    radius: float
    nodes: List[Tuple[float, float]]
    triangles: List[Tuple[int, int, int]]
    boundary: List[int]


class ProtocolDocument(BaseModel):
    electrode_count: int
    measurements: List[Tuple[int, int, int, int]]


class LayoutDocument(BaseModel):
    slot_count: int
    slots: List[int]
    electrode_arc: float
    contact_impedance: List[float]


class BasisDocument(BaseModel):
    protocol_id: str
    protocol: ProtocolDocument
    source: str
    frames: int
    centered: bool
    mean: Optional[List[float]] = None
    eigenvalues: List[float]
    # column-major: modes[i] is the i-th POD mode
    modes: List[List[float]]


class JacobianDocument(BaseModel):
    protocol_id: str
    layout_id: str
    mesh_id: str
    layout: LayoutDocument
    shape: Tuple[int, int]
    background: List[float]
    matrix: List[List[float]]


class PlacementEntry(BaseModel):
    slots: List[int]
    # None encodes a rank-deficient candidate (log score of minus infinity)
    log_score: Optional[float]
    deficient: bool = False
    rank: int


class PlacementReport(BaseModel):
    protocol_id: str
    mesh_id: str
    basis_id: str
    slots: int
    select: int
    modes: int
    score: str
    entries: List[PlacementEntry]


class ErrorSummary(BaseModel):
    median: float
    mean: float
    p95: float


class ProjectionEvaluation(BaseModel):
    metric: str = "measurement-space relative L2 (not MPJPE)"
    protocol_id: str
    truth: str
    projected: str
    bad_electrodes: List[int]
    frames: int
    errors: List[float]
    baseline_errors: List[float]
    summary: ErrorSummary
    baseline: ErrorSummary
    beats_baseline_fraction: float


class ConditioningRow(BaseModel):
    electrodes: List[int]
    valid_count: int
    modes: int
    condition: Optional[float]
    flagged: bool
    residual: Optional[float] = None
    projection_error: Optional[float] = None


class ConditioningReportDocument(BaseModel):
    protocol_id: str
    basis_id: str
    threshold: float
    rows: List[ConditioningRow]
