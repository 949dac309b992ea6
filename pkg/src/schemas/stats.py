import enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.conf import messages


class IccModel(str, enum.Enum):
    two_way_mixed_31 = "two_way_mixed_31"
    two_way_random_21 = "two_way_random_21"


class IccDefinition(str, enum.Enum):
    absolute = "absolute"
    consistency = "consistency"


class BandScheme(str, enum.Enum):
    icc_koo_li = "icc_koo_li"
    rho_swinscow = "rho_swinscow"


class PairedSeries(BaseModel):
    """
    Paired measurements of the same participants by two systems.
    Pairs with a missing value on either side are dropped on construction.
    """

    ids: list[str]
    a: list[Optional[float]]
    b: list[Optional[float]]

    @model_validator(mode="after")
    def drop_incomplete(self):
        if not (len(self.ids) == len(self.a) == len(self.b)):
            raise ValueError("ids, a and b must have equal lengths")
        keep = [
            i
            for i, (x, y) in enumerate(zip(self.a, self.b))
            if x is not None and y is not None and np.isfinite(x) and np.isfinite(y)
        ]
        self.ids = [self.ids[i] for i in keep]
        self.a = [float(self.a[i]) for i in keep]
        self.b = [float(self.b[i]) for i in keep]
        if len(self.ids) < 3:
            raise ValueError(messages.INSUFFICIENT_PARTICIPANTS)
        return self

    def __len__(self) -> int:
        return len(self.ids)

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([self.a, self.b])


class Estimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    ci_lower: Optional[float] = None
    ci_upper: Optional[float] = None


class AgreementResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    speed_median: float
    speed_iqr: float
    icc31: Estimate
    bias: Estimate
    loa_lower: Estimate
    loa_upper: Estimate
    icc_band: str
    label: Optional[str] = None


class ReliabilityResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1)
    n: int = Field(..., ge=0)
    available: bool = True
    icc21: Optional[Estimate] = None
    sem: Optional[Estimate] = None
    mdc: Optional[Estimate] = None
    var_within: Optional[float] = None


class CorrelationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho: float = Field(..., ge=-1, le=1)
    n: int
    band: str
    p_value: Optional[float] = None
    label: Optional[str] = None


class GroupComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    u_statistic: float = Field(..., ge=0)
    p_value: float = Field(..., gt=0, le=1)
    n1: int
    n2: int
    median_difference: float
    method: str
    stars: str
    label: Optional[str] = None

    @field_validator("p_value", mode="before")
    @classmethod
    def clip_p(cls, v):
        # an asymptotic p can underflow to zero for extreme separation
        return float(np.clip(float(v), np.finfo(float).tiny, 1.0))

    @model_validator(mode="after")
    def check_u_range(self):
        if self.u_statistic > self.n1 * self.n2:
            raise ValueError("U statistic exceeds n1*n2")
        return self
