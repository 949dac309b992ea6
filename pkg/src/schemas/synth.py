import math
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.schemas.sensor import Setting, WearLocation


class SessionSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_turns: int = Field(12, ge=0)
    turn_duration: Union[float, list[float]] = 2.0
    walk_bout: float = Field(3.0, gt=0)
    pelvis_osc_amp: float = Field(math.radians(15.0), ge=0)
    pelvis_osc_freq: float = Field(1.0, gt=0)
    gyro_noise_sd: float = Field(0.0, ge=0)
    accel_noise_sd: float = Field(0.0, ge=0)
    tilt_deg: float = 0.0
    rate: float = Field(50.0, gt=0)
    first_sign: int = 1
    seed: int = 0
    session_id: str = "synthetic"
    participant_id: Optional[str] = None
    day: Optional[int] = None
    setting: Setting = Setting.supervised
    wear_location: WearLocation = WearLocation.belt_front

    @field_validator("first_sign")
    @classmethod
    def check_sign(cls, v):
        if v not in (1, -1):
            raise ValueError("first_sign must be +1 or -1")
        return v

    @model_validator(mode="after")
    def check_spec(self):
        durations = self.durations()
        if len(durations) != self.n_turns:
            raise ValueError("turn_duration list must have n_turns entries")
        if any(d < 0.1 for d in durations):
            raise ValueError("turn_duration must be at least 0.1 s")
        if self.rate <= 2 * self.pelvis_osc_freq:
            raise ValueError("rate must exceed twice the pelvis oscillation frequency")
        return self

    def durations(self) -> list[float]:
        if isinstance(self.turn_duration, list):
            return list(self.turn_duration)
        return [float(self.turn_duration)] * self.n_turns


class DisabilityLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    weight: float = Field(1.0, gt=0)
    duration_mean: float = Field(..., gt=0.1)
    duration_sd: float = Field(0.1, ge=0)
    day_sd: float = Field(0.12, ge=0)
    turn_sd: float = Field(0.05, ge=0)
    edss_range: tuple[float, float] = (0.0, 3.5)
    ambulation_range: tuple[int, int] = (0, 1)
    t25fw_mean: float = Field(5.0, gt=0)
    fall_prob: float = Field(0.2, ge=0, le=1)
    aid_prob: float = Field(0.2, ge=0, le=1)
    adherence_a: float = Field(4.0, gt=0)
    adherence_b: float = Field(0.826, gt=0)

    @model_validator(mode="after")
    def check_ranges(self):
        if self.edss_range[0] > self.edss_range[1] or self.ambulation_range[0] > self.ambulation_range[1]:
            raise ValueError("covariate ranges must be given as (low, high)")
        return self


def default_levels() -> list[DisabilityLevel]:
    return [
        DisabilityLevel(
            name="mild",
            weight=23,
            duration_mean=1.8,
            duration_sd=0.2,
            edss_range=(0.0, 3.5),
            ambulation_range=(0, 1),
            t25fw_mean=4.8,
            fall_prob=0.15,
            aid_prob=0.05,
        ),
        DisabilityLevel(
            name="moderate",
            weight=30,
            duration_mean=2.4,
            duration_sd=0.25,
            edss_range=(4.0, 5.5),
            ambulation_range=(2, 5),
            t25fw_mean=6.5,
            fall_prob=0.35,
            aid_prob=0.4,
        ),
        DisabilityLevel(
            name="severe",
            weight=38,
            duration_mean=3.2,
            duration_sd=0.35,
            edss_range=(6.0, 6.5),
            ambulation_range=(6, 9),
            t25fw_mean=10.0,
            fall_prob=0.6,
            aid_prob=0.9,
        ),
    ]


class CohortSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_participants: int = Field(91, ge=1)
    levels: list[DisabilityLevel] = Field(default_factory=default_levels, min_length=1)
    n_days: int = Field(14, ge=1)
    turns_per_test: int = Field(10, ge=1)
    walk_bout: float = Field(2.6, gt=0)
    pelvis_osc_amp: float = Field(math.radians(15.0), ge=0)
    gyro_noise_sd: float = Field(0.01, ge=0)
    accel_noise_sd: float = Field(0.05, ge=0)
    rate: float = Field(50.0, gt=0)
    balanced: bool = True
    seed: int = 0
    setting: Setting = Setting.unsupervised
    wear_location: WearLocation = WearLocation.belt_front


class ParticipantRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    participant_id: str
    level: str
    level_index: int
    edss_proxy: float
    ambulation: int
    t25fw_s: float
    fall: bool
    aid: bool
    base_duration: float
    days: list[int]
    sessions: list[SessionSpec]


class CohortBundle(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: CohortSpec
    participants: list[ParticipantRecord]

    def covariate_rows(self) -> list[dict]:
        return [
            {
                "participant_id": p.participant_id,
                "edss_proxy": p.edss_proxy,
                "fall": int(p.fall),
                "aid": int(p.aid),
                "level": p.level,
                "ambulation": p.ambulation,
                "t25fw_s": p.t25fw_s,
            }
            for p in self.participants
        ]

    def test_counts(self) -> list[int]:
        return [len(p.days) for p in self.participants]
