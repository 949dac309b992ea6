from typing import Optional

from pydantic import BaseModel, Field

from src.schemas.match import DetectionScore, MatchOutcome
from src.schemas.sensor import TurnAnnotation


class ScoreRequestSchema(BaseModel):
    detected: list[TurnAnnotation] = Field(default_factory=list)
    reference: list[TurnAnnotation] = Field(default_factory=list)
    overlap_min: float = Field(0.20, gt=0, le=1)


class ScoreResponseSchema(BaseModel):
    outcomes: list[MatchOutcome]
    score: DetectionScore


class AgreeRequestSchema(BaseModel):
    ids: list[str]
    a: list[Optional[float]]
    b: list[Optional[float]]
    n_reps: int = Field(500, ge=10, le=5000)
    seed: int = 0
    label: Optional[str] = None


class CorrelateRequestSchema(BaseModel):
    x: list[Optional[float]]
    y: list[Optional[float]]
    label: Optional[str] = None


class CompareRequestSchema(BaseModel):
    a: list[float]
    b: list[float]
    label: Optional[str] = None
