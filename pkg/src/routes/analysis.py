from fastapi import APIRouter, HTTPException, status
from pydantic import ValidationError

from src.schemas.api import (
    AgreeRequestSchema,
    CompareRequestSchema,
    CorrelateRequestSchema,
    ScoreRequestSchema,
    ScoreResponseSchema,
)
from src.schemas.stats import AgreementResult, CorrelationResult, GroupComparison, PairedSeries
from src.servises import match as match_service
from src.servises import stats as stats_service

router = APIRouter(tags=["analysis"])


def _unprocessable(err: Exception) -> HTTPException:
    if isinstance(err, ValidationError):
        detail = "; ".join(str(e["msg"]).removeprefix("Value error, ") for e in err.errors())
    else:
        detail = str(err)
    return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=detail)


@router.post("/score", response_model=ScoreResponseSchema)
def score(body: ScoreRequestSchema):
    """
    The score function matches detected turns against reference turns.

    :param body: ScoreRequestSchema: Both turn lists and the overlap threshold
    :return: Every match outcome and the resulting DetectionScore

    """
    try:
        outcomes = match_service.classify_turns(body.detected, body.reference, body.overlap_min)
    except ValueError as err:
        raise _unprocessable(err)
    return ScoreResponseSchema(outcomes=outcomes, score=match_service.score(outcomes))


@router.post("/agree", response_model=AgreementResult)
def agree(body: AgreeRequestSchema):
    """
    The agree function compares paired measurements of two systems.
    Fewer than 3 complete pairs are rejected.

    :param body: AgreeRequestSchema: Paired values, bootstrap size and seed
    :return: AgreementResult

    """
    try:
        pairs = PairedSeries(ids=body.ids, a=body.a, b=body.b)
        return stats_service.agreement(pairs, n_reps=body.n_reps, seed=body.seed, label=body.label)
    except ValueError as err:
        raise _unprocessable(err)


@router.post("/correlate", response_model=CorrelationResult)
def correlate(body: CorrelateRequestSchema):
    try:
        x = [float("nan") if v is None else v for v in body.x]
        y = [float("nan") if v is None else v for v in body.y]
        return stats_service.spearman(x, y, label=body.label)
    except ValueError as err:
        raise _unprocessable(err)


@router.post("/compare", response_model=GroupComparison)
def compare(body: CompareRequestSchema):
    try:
        return stats_service.mann_whitney(body.a, body.b, label=body.label)
    except ValueError as err:
        raise _unprocessable(err)
