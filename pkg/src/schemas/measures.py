from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.schemas.sensor import Setting, WearLocation
from src.schemas.turn import Turn


class TestResult(BaseModel):
    model_config = ConfigDict(frozen=True)
    __test__ = False

    session_id: str
    participant_id: Optional[str] = None
    setting: Setting = Setting.unsupervised
    wear_location: WearLocation = WearLocation.belt_front
    n_turns: int = Field(..., ge=0)
    turn_speed_median: Optional[float] = None
    turn_duration_median: Optional[float] = None
    angular_speed_median: Optional[float] = None
    per_turn: list[Turn] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_counts(self):
        if self.n_turns != len(self.per_turn):
            raise ValueError("n_turns must equal the number of turns")
        if (self.turn_speed_median is None) != (self.n_turns == 0):
            raise ValueError("turn_speed_median is absent exactly when there are no turns")
        return self


class ParticipantAggregate(BaseModel):
    model_config = ConfigDict(frozen=True)

    participant_id: str
    values: list[float] = Field(..., min_length=1)
    aggregate: float
