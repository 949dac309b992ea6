import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from src.schemas.sensor import AnnotationSource, FiniteFloat, TurnAnnotation, TurnDirection, WearRole


class DetectorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rate_threshold: float = Field(math.radians(20.0), gt=0)
    end_threshold: float = Field(math.radians(5.0), gt=0)
    min_angle: float = Field(math.pi / 2, gt=0)
    min_duration: float = Field(0.5, gt=0)
    max_duration: float = Field(10.0, gt=0)
    merge_gap: float = Field(0.2, ge=0)
    filter_cutoff: float = Field(1.5, gt=0)

    @model_validator(mode="after")
    def check_thresholds(self):
        if self.end_threshold > self.rate_threshold:
            raise ValueError("end_threshold must not exceed rate_threshold")
        if self.min_duration >= self.max_duration:
            raise ValueError("min_duration must be shorter than max_duration")
        return self


class Turn(BaseModel):
    model_config = ConfigDict(frozen=True)

    start_s: FiniteFloat
    end_s: FiniteFloat
    angle: FiniteFloat
    peak_rate: FiniteFloat = 0.0
    wear_role: Optional[WearRole] = None

    @model_validator(mode="after")
    def check_duration(self):
        if self.end_s <= self.start_s:
            raise ValueError("turn duration must be positive")
        return self

    @computed_field
    @property
    def duration(self) -> float:
        return self.end_s - self.start_s

    @computed_field
    @property
    def direction(self) -> TurnDirection:
        # positive yaw is counter-clockwise seen from above
        return TurnDirection.left if self.angle >= 0 else TurnDirection.right

    def to_annotation(self, source: AnnotationSource = AnnotationSource.detector) -> TurnAnnotation:
        return TurnAnnotation(start_s=self.start_s, end_s=self.end_s, source=source)


class YawRateSeries(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: np.ndarray
    omega_v: np.ndarray

    @field_validator("t", "omega_v", mode="before")
    @classmethod
    def as_array(cls, v):
        arr = np.array(v, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_grid(self):
        if self.t.shape != self.omega_v.shape:
            raise ValueError("t and omega_v must have the same length")
        if self.t.size > 2:
            dt = np.diff(self.t)
            if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-9):
                raise ValueError("yaw-rate series must be uniformly sampled")
        return self

    @property
    def rate(self) -> float:
        return float(1.0 / np.median(np.diff(self.t)))
