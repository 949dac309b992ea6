import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from src.schemas.sensor import TurnAnnotation


class MatchKind(str, enum.Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"


class MatchOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: MatchKind
    detected: Optional[TurnAnnotation] = None
    reference: Optional[TurnAnnotation] = None
    overlap_fraction: Optional[float] = Field(None, ge=0, le=1)
    onset_error_s: Optional[float] = None
    end_error_s: Optional[float] = None


class DetectionScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)
    defined: bool = True
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    mean_overlap_pct: Optional[float] = None
    onset_error_mean: Optional[float] = None
    onset_error_sd: Optional[float] = None
    end_error_mean: Optional[float] = None
    end_error_sd: Optional[float] = None


class ScoreSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    metric: str = "f1"
    n: int
    mean: float
    ci_lower: float
    ci_upper: float
    sd: float
    min: float
    max: float
    p05: float
    q1: float
    median: float
    q3: float
    p95: float


class TemporalErrorRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    wear_location: str
    n_tp: int
    onset_error_mean: Optional[float] = None
    onset_error_sd: Optional[float] = None
    end_error_mean: Optional[float] = None
    end_error_sd: Optional[float] = None
    mean_overlap_pct: Optional[float] = None
