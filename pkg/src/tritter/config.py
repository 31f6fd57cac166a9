"""Run configuration: TOML file validated against strict schemas."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CalibrationConfig(_Strict):
    voltages: list[float]
    phases: list[float]


class ElementConfig(_Strict):
    type: Literal["coupler", "phase"]
    modes: Optional[list[int]] = None
    reflectivity: Optional[float] = None
    mode: Optional[int] = None
    phase: Optional[float] = None
    voltage: Optional[float] = None

    @model_validator(mode="after")
    def _complete(self):
        if self.type == "coupler":
            if self.modes is None or len(self.modes) != 2 or self.reflectivity is None:
                raise ValueError("coupler needs modes = [i, j] and reflectivity")
        elif self.mode is None or (self.phase is None) == (self.voltage is None):
            raise ValueError("phase element needs mode and exactly one of phase / voltage")
        return self


class CircuitConfig(_Strict):
    kind: Literal["tritter", "ideal", "identity", "elements", "matrix"] = "ideal"
    modes: int = 3
    r1: float = 0.5
    r2: float = 1.0 / 3.0
    phi: Optional[float] = None
    voltage: Optional[float] = None
    calibration: Optional[CalibrationConfig] = None
    elements: list[ElementConfig] = Field(default_factory=list)
    matrix_real: Optional[list[list[float]]] = None
    matrix_imag: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _complete(self):
        if self.phi is not None and self.voltage is not None:
            raise ValueError("give either phi or voltage, not both")
        needs_cal = self.voltage is not None or any(e.voltage is not None for e in self.elements)
        if needs_cal and self.calibration is None:
            raise ValueError("voltage settings need a [circuit.calibration] table")
        if self.kind == "matrix" and self.matrix_real is None:
            raise ValueError("kind = 'matrix' needs matrix_real (and optionally matrix_imag)")
        if self.kind == "elements" and not self.elements:
            raise ValueError("kind = 'elements' needs at least one [[circuit.elements]] entry")
        return self


class SourceConfig(_Strict):
    p1_qd: float = 0.07
    g2: float = 0.071
    m_near: float = 0.90
    m_far: float = 0.88
    # explicit [i, j, M] triples override m_near / m_far
    pairwise: Optional[list[list[float]]] = None


class DetectorConfig(_Strict):
    split_probs: list[float] = Field(default_factory=lambda: [0.5, 0.25, 0.25])
    eta: float = 0.30
    dark_rate: float = 0.0
    window_ns: float = 2.0
    n_events: int = 0
    target_triples: Optional[int] = None
    n_bootstrap: int = 1000


class SimulateConfig(_Strict):
    input_modes: Optional[list[int]] = None


class DemuxConfig(_Strict):
    scheme: Literal["ideal-3arm", "cascaded-binary", "equal-slot", "waveforms"] = "ideal-3arm"
    n_arms: int = 3
    period_ns: float = 200.0
    contrast: float = 1.0
    rise_time_ns: float = 0.0
    dt_ns: float = 0.1
    passive: bool = False
    waveform_csv: list[str] = Field(default_factory=list)
    r_exp: Optional[float] = None
    r_ideal: Optional[float] = None
    export_waveforms: bool = False

    @model_validator(mode="after")
    def _complete(self):
        if self.scheme == "waveforms" and not self.waveform_csv:
            raise ValueError("scheme = 'waveforms' needs waveform_csv paths")
        if self.period_ns <= 0 or self.dt_ns <= 0:
            raise ValueError("period and time step must be positive")
        return self


class ReconstructConfig(_Strict):
    data: Literal["synthetic", "csv"] = "synthetic"
    noise: float = 0.0
    n_trials: int = 1
    n_phase_steps: int = 36
    intensities_csv: Optional[str] = None
    fringes_csv: Optional[str] = None
    reference: Literal["ideal-tritter", "circuit"] = "ideal-tritter"
    tol: float = 0.05

    @model_validator(mode="after")
    def _complete(self):
        if self.data == "csv" and (self.intensities_csv is None or self.fringes_csv is None):
            raise ValueError("data = 'csv' needs intensities_csv and fringes_csv")
        if self.noise < 0 or self.n_trials < 1:
            raise ValueError("noise must be >= 0 and n_trials >= 1")
        return self


class PipelineConfig(_Strict):
    label: str
    rep_rate_hz: float
    fibered_brightness: float
    demux_transmission: float
    chip_transmission: float
    det_efficiency: float
    n: list[int] = Field(default_factory=lambda: [3])
    demux_conversion: Optional[float] = None
    demux_scheme: Literal["equal-slot", "cascaded-binary"] = "equal-slot"
    measured_source_rate_hz: Optional[float] = None


def _default_pipelines():
    return [
        PipelineConfig(label="measured", rep_rate_hz=324e6, fibered_brightness=0.07, demux_transmission=0.63,
                       chip_transmission=0.17, det_efficiency=0.30, n=[3], demux_conversion=0.25,
                       measured_source_rate_hz=3.8e3),
        PipelineConfig(label="projected", rep_rate_hz=1e9, fibered_brightness=0.50, demux_transmission=0.85,
                       chip_transmission=0.60, det_efficiency=0.90, n=[3, 10]),
    ]


class BudgetConfig(_Strict):
    pipeline: list[PipelineConfig] = Field(default_factory=_default_pipelines)


class OracleCheckConfig(_Strict):
    n_cases: int = 100
    max_photons: int = 4
    max_modes: int = 4
    tol: float = 1e-10


class RunConfig(_Strict):
    seed: int = 0
    circuit: CircuitConfig = Field(default_factory=CircuitConfig)
    source: SourceConfig = Field(default_factory=SourceConfig)
    detection: DetectorConfig = Field(default_factory=DetectorConfig)
    simulate: SimulateConfig = Field(default_factory=SimulateConfig)
    demux: DemuxConfig = Field(default_factory=DemuxConfig)
    reconstruct: ReconstructConfig = Field(default_factory=ReconstructConfig)
    budget: BudgetConfig = Field(default_factory=BudgetConfig)
    oracle_check: OracleCheckConfig = Field(default_factory=OracleCheckConfig)

    @model_validator(mode="after")
    def _finite(self):
        def walk(obj):
            if isinstance(obj, float) and not math.isfinite(obj):
                raise ValueError("configuration contains non-finite numbers")
            if isinstance(obj, dict):
                for v in obj.values():
                    walk(v)
            elif isinstance(obj, list):
                for v in obj:
                    walk(v)
        walk(self.model_dump())
        return self


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    with path.open("rb") as fh:
        data = tomllib.load(fh)
    cfg = RunConfig.model_validate(data)
    return _resolve_paths(cfg, path.parent)


def _resolve_paths(cfg: RunConfig, base: Path) -> RunConfig:
    def fix(p):
        return p if p is None or Path(p).is_absolute() else str(base / p)

    demux = cfg.demux.model_copy(update={"waveform_csv": [fix(p) for p in cfg.demux.waveform_csv]})
    rec = cfg.reconstruct.model_copy(update={
        "intensities_csv": fix(cfg.reconstruct.intensities_csv),
        "fringes_csv": fix(cfg.reconstruct.fringes_csv),
    })
    return cfg.model_copy(update={"demux": demux, "reconstruct": rec})
