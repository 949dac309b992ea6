import enum
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.conf import messages

FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]
Vector3 = tuple[FiniteFloat, FiniteFloat, FiniteFloat]


class WearLocation(str, enum.Enum):
    belt_front = "belt_front"
    belt_back = "belt_back"
    pocket_front_left = "pocket_front_left"
    pocket_front_right = "pocket_front_right"
    pocket_back_left = "pocket_back_left"
    pocket_back_right = "pocket_back_right"


class WearRole(str, enum.Enum):
    belt_front = "belt_front"
    belt_back = "belt_back"
    pocket_front_inner = "pocket_front_inner"
    pocket_front_outer = "pocket_front_outer"
    pocket_back_inner = "pocket_back_inner"
    pocket_back_outer = "pocket_back_outer"


class Setting(str, enum.Enum):
    supervised = "supervised"
    unsupervised = "unsupervised"


class TurnDirection(str, enum.Enum):
    left = "left"
    right = "right"


class AnnotationSource(str, enum.Enum):
    reference = "reference"
    detector = "detector"
    synthetic_truth = "synthetic-truth"


class SensorSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: FiniteFloat = Field(..., ge=0)
    accel: Vector3
    gyro: Vector3
    mag: Optional[Vector3] = None


class SensorStream(BaseModel):
    """
    Column-major sensor recording: ``t`` (n,), ``accel`` (n, 3) in m/s^2,
    ``gyro`` (n, 3) in rad/s and optional ``mag`` (n, 3) in uT.
    Arrays are read-only once the stream is built.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    mag: Optional[np.ndarray] = None
    nominal_rate: float = Field(50.0, gt=0)
    wear_location: WearLocation = WearLocation.belt_front
    session_id: str = ""
    setting: Setting = Setting.unsupervised
    participant_id: Optional[str] = None
    day: Optional[int] = None
    warnings: tuple[str, ...] = ()

    @field_validator("t", mode="before")
    @classmethod
    def as_time_array(cls, v):
        arr = np.array(v, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @field_validator("accel", "gyro", "mag", mode="before")
    @classmethod
    def as_vector_array(cls, v):
        if v is None:
            return None
        arr = np.array(v, dtype=float).reshape(-1, 3)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_invariants(self):
        n = self.t.shape[0]
        if n == 0:
            raise ValueError(messages.EMPTY_FILE)
        channels = [self.accel, self.gyro] + ([self.mag] if self.mag is not None else [])
        if any(ch.shape[0] != n for ch in channels):
            raise ValueError(messages.MISSING_COLUMNS)
        if not all(np.isfinite(ch).all() for ch in [self.t, *channels]):
            raise ValueError(messages.NON_FINITE_VALUE)
        if self.t[0] < 0:
            raise ValueError(messages.NEGATIVE_TIMESTAMP)
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError(messages.NON_MONOTONE_TIMESTAMPS)
        return self

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def span(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def samples(self) -> list[SensorSample]:
        mag = self.mag if self.mag is not None else [None] * len(self)
        return [
            SensorSample(
                t=float(t),
                accel=tuple(a),
                gyro=tuple(g),
                mag=None if m is None else tuple(m),
            )
            for t, a, g, m in zip(self.t, self.accel, self.gyro, mag)
        ]

    @classmethod
    def from_samples(cls, samples: list[SensorSample], **meta) -> "SensorStream":
        has_mag = bool(samples) and all(s.mag is not None for s in samples)
        return cls(
            t=[s.t for s in samples],
            accel=[s.accel for s in samples],
            gyro=[s.gyro for s in samples],
            mag=[s.mag for s in samples] if has_mag else None,
            **meta,
        )

    def replace(self, **changes) -> "SensorStream":
        data = {name: getattr(self, name) for name in type(self).model_fields}
        data.update(changes)
        return type(self)(**data)


class TurnAnnotation(BaseModel):
    model_config = ConfigDict(frozen=True)

    start_s: FiniteFloat
    end_s: FiniteFloat
    source: AnnotationSource = AnnotationSource.reference

    @model_validator(mode="after")
    def check_order(self):
        if self.end_s <= self.start_s:
            raise ValueError(messages.END_BEFORE_START)
        return self

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s
