import logging
from typing import Optional

from fastapi import APIRouter, File, HTTPException, Query, UploadFile, status

from src.repository.sessions import parse_stream, session_id_from_path
from src.schemas.measures import TestResult
from src.schemas.sensor import Setting, WearLocation
from src.schemas.turn import DetectorConfig
from src.servises.detect import detect_turns
from src.servises.measures import summarize_test

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/detect", tags=["detect"])


@router.post("/", response_model=TestResult)
async def detect(
    file: UploadFile = File(...),
    session_id: Optional[str] = Query(None),
    wear_location: WearLocation = Query(WearLocation.belt_front),
    setting: Setting = Query(Setting.unsupervised),
):
    """
    The detect function runs the turn detector on an uploaded session file.

    :param file: UploadFile: Sensor recording as CSV or JSON envelope; unreadable files give 400
    :param session_id: str: Session id, taken from the file name when omitted
    :param wear_location: WearLocation: Where the phone was carried
    :param setting: Setting: Supervised or unsupervised test
    :return: The TestResult with every detected turn

    """
    raw = await file.read()
    session_id = session_id or session_id_from_path(file.filename or "upload")
    try:
        stream = parse_stream(raw, "auto", session_id=session_id, wear_location=wear_location, setting=setting)
    except ValueError as err:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(err))
    try:
        turns = detect_turns(stream, DetectorConfig())
    except ValueError as err:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(err))
    logger.info("detect %r: %d turns", session_id, len(turns))
    return summarize_test(
        turns,
        session_id=stream.session_id,
        participant_id=stream.participant_id,
        setting=stream.setting,
        wear_location=stream.wear_location,
    )
