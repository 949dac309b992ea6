import io
import json
import logging
import re
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.conf import messages
from src.schemas.sensor import AnnotationSource, SensorSample, SensorStream, Setting, TurnAnnotation, WearLocation
from src.servises.errors import AnnotationError, StreamFormatError
from src.servises.ingest import gap_warnings

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TIME_COLUMN = "t"
ACCEL_COLUMNS = ["ax", "ay", "az"]
GYRO_COLUMNS = ["gx", "gy", "gz"]
GYRO_DPS_COLUMNS = ["gx_dps", "gy_dps", "gz_dps"]
MAG_COLUMNS = ["mx", "my", "mz"]
ANNOTATION_COLUMNS = ["start_s", "end_s"]

FormatHint = Literal["csv", "json", "auto"]


def participant_from_session(session_id: str) -> str:
    """
    The participant_from_session function derives a participant id from a session id
    of the form ``<participant>_<suffix>``.

    >>> participant_from_session("P007_d03")
    'P007'
    >>> participant_from_session("lab")
    'lab'

    :param session_id: str: Session identifier
    :return: The participant identifier

    """
    return session_id.rsplit("_", 1)[0] if "_" in session_id else session_id


def _decode(raw: Union[str, bytes]) -> str:
    return raw.decode("utf-8") if isinstance(raw, bytes) else raw


def _read_frame(text: str) -> pd.DataFrame:
    if not text.strip():
        raise StreamFormatError(messages.EMPTY_FILE)
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise StreamFormatError(messages.EMPTY_FILE)
    except pd.errors.ParserError as err:
        found = re.search(r"line (\d+)", str(err))
        raise StreamFormatError(messages.MALFORMED_ROW, int(found.group(1)) if found else None)
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    return frame


def _numeric(frame: pd.DataFrame, columns: list[str], line_offset: int) -> np.ndarray:
    values = frame[columns].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values).all(axis=1)
    if bad.any():
        raise StreamFormatError(messages.MALFORMED_ROW, int(np.flatnonzero(bad)[0]) + line_offset)
    return values


def _frame_to_stream(frame: pd.DataFrame, line_offset: int, **meta) -> SensorStream:
    if frame.empty:
        raise StreamFormatError(messages.EMPTY_FILE)
    if all(c in frame.columns for c in GYRO_COLUMNS):
        gyro_columns, gyro_scale = GYRO_COLUMNS, 1.0
    elif all(c in frame.columns for c in GYRO_DPS_COLUMNS):
        gyro_columns, gyro_scale = GYRO_DPS_COLUMNS, np.pi / 180.0
    else:
        raise StreamFormatError(f"{messages.MISSING_COLUMNS}: {', '.join(GYRO_COLUMNS)}")
    required = [TIME_COLUMN, *ACCEL_COLUMNS]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise StreamFormatError(f"{messages.MISSING_COLUMNS}: {', '.join(missing)}")
    has_mag = all(c in frame.columns for c in MAG_COLUMNS)

    values = _numeric(frame, required + gyro_columns + (MAG_COLUMNS if has_mag else []), line_offset)
    t = values[:, 0]
    if t[0] < 0:
        raise StreamFormatError(messages.NEGATIVE_TIMESTAMP, line_offset)
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise StreamFormatError(messages.NON_MONOTONE_TIMESTAMPS, int(np.flatnonzero(steps <= 0)[0]) + 1 + line_offset)

    if meta.get("nominal_rate") is None:
        meta["nominal_rate"] = round(1.0 / float(np.median(steps)), 6) if steps.size else 50.0
    stream = SensorStream(
        t=t,
        accel=values[:, 1:4],
        gyro=values[:, 4:7] * gyro_scale,
        mag=values[:, 7:10] if has_mag else None,
        **{k: v for k, v in meta.items() if v is not None},
    )
    return stream.replace(warnings=gap_warnings(stream))


def _samples_to_stream(records: list[dict], **meta) -> SensorStream:
    samples = []
    for i, record in enumerate(records):
        try:
            samples.append(SensorSample.model_validate(record))
        except ValidationError as err:
            raise StreamFormatError(messages.MALFORMED_ROW, i + 1) from err
    steps = np.diff([s.t for s in samples])
    if np.any(steps <= 0):
        raise StreamFormatError(messages.NON_MONOTONE_TIMESTAMPS, int(np.flatnonzero(steps <= 0)[0]) + 2)
    if meta.get("nominal_rate") is None:
        meta["nominal_rate"] = round(1.0 / float(np.median(steps)), 6) if steps.size else 50.0
    stream = SensorStream.from_samples(samples, **{k: v for k, v in meta.items() if v is not None})
    return stream.replace(warnings=gap_warnings(stream))


def parse_stream(
    raw: Union[str, bytes],
    format_hint: FormatHint = "auto",
    session_id: Optional[str] = None,
    wear_location: Optional[WearLocation] = None,
    setting: Optional[Setting] = None,
    nominal_rate: Optional[float] = None,
) -> SensorStream:
    """
    The parse_stream function reads a sensor recording from CSV or from the JSON session envelope.

    CSV files carry the header ``t,ax,ay,az,gx,gy,gz[,mx,my,mz]`` in SI units; gyroscope
    columns named ``gx_dps,gy_dps,gz_dps`` are converted from deg/s to rad/s. The nominal
    rate is inferred from the median sample spacing unless given.
    JSON envelopes hold ``samples`` as records ``{t, accel: [x, y, z], gyro: [x, y, z][, mag]}``,
    each validated as a SensorSample; flat records with the CSV column names are read as rows.

    :param raw: str | bytes: File contents
    :param format_hint: FormatHint: csv, json or auto (sniffed from the first character)
    :param session_id: str: Session id for CSV input, or an override for JSON
    :param wear_location: WearLocation: Phone location for CSV input
    :param setting: Setting: Supervised or unsupervised
    :param nominal_rate: float: Rate in Hz, inferred when omitted
    :return: A validated SensorStream

    """
    text = _decode(raw)
    fmt = format_hint
    if fmt == "auto":
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    meta = dict(
        session_id=session_id,
        wear_location=wear_location,
        setting=setting,
        nominal_rate=nominal_rate,
    )
    if fmt == "csv":
        meta["participant_id"] = participant_from_session(session_id) if session_id else None
        # header is line 1, first data row is line 2
        return _frame_to_stream(_read_frame(text), line_offset=2, **meta)
    if fmt == "json":
        try:
            envelope = json.loads(text)
        except json.JSONDecodeError as err:
            raise StreamFormatError(messages.MALFORMED_ROW, err.lineno)
        samples = envelope.get("samples") or []
        if not samples:
            raise StreamFormatError(messages.EMPTY_FILE)
        for key in ("session_id", "wear_location", "setting", "nominal_rate", "participant_id", "day"):
            if meta.get(key) is None and envelope.get(key) is not None:
                meta[key] = envelope[key]
        if meta.get("participant_id") is None and meta.get("session_id"):
            meta["participant_id"] = participant_from_session(meta["session_id"])
        if all(isinstance(s, dict) and "accel" in s and "gyro" in s for s in samples):
            return _samples_to_stream(samples, **meta)
        frame = pd.DataFrame(samples).astype(str)
        frame.columns = [str(c).strip().lower() for c in frame.columns]
        return _frame_to_stream(frame, line_offset=1, **meta)
    raise StreamFormatError(f"{messages.UNKNOWN_FORMAT}: {format_hint}")


def _stream_frame(stream: SensorStream) -> pd.DataFrame:
    data = {TIME_COLUMN: stream.t}
    data.update(dict(zip(ACCEL_COLUMNS, stream.accel.T)))
    data.update(dict(zip(GYRO_COLUMNS, stream.gyro.T)))
    if stream.mag is not None:
        data.update(dict(zip(MAG_COLUMNS, stream.mag.T)))
    return pd.DataFrame(data)


def serialize_stream(stream: SensorStream, fmt: Literal["csv", "json"] = "csv") -> str:
    if fmt == "csv":
        return _stream_frame(stream).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    envelope = {
        "session_id": stream.session_id,
        "participant_id": stream.participant_id,
        "day": stream.day,
        "setting": stream.setting.value,
        "wear_location": stream.wear_location.value,
        "nominal_rate": stream.nominal_rate,
        "samples": [sample.model_dump(exclude_none=True) for sample in stream.samples],
    }
    return json.dumps(envelope)


def read_stream(path: Union[str, Path], **meta) -> SensorStream:
    path = Path(path)
    meta.setdefault("session_id", session_id_from_path(path))
    return parse_stream(path.read_bytes(), "json" if path.suffix == ".json" else "csv", **meta)


def write_stream(stream: SensorStream, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_stream(stream, "json" if path.suffix == ".json" else "csv"))
    return path


def session_id_from_path(path: Union[str, Path]) -> str:
    """
    >>> session_id_from_path("runs/P001_d02.turns.csv")
    'P001_d02'
    """
    return Path(path).name.split(".", 1)[0]


def parse_annotations(
    raw: Union[str, bytes], source: AnnotationSource = AnnotationSource.reference
) -> list[TurnAnnotation]:
    """
    The parse_annotations function reads ``start_s,end_s`` rows, sorts them by start
    and rejects reversed or overlapping intervals. Intervals that only touch are allowed.

    :param raw: str | bytes: CSV contents
    :param source: AnnotationSource: Who produced the annotations
    :return: A list of TurnAnnotation sorted by start_s

    """
    text = _decode(raw)
    if not text.strip():
        return []
    frame = _read_frame(text)
    missing = [c for c in ANNOTATION_COLUMNS if c not in frame.columns]
    if missing:
        raise AnnotationError(f"{messages.MISSING_COLUMNS}: {', '.join(missing)}")
    if frame.empty:
        return []
    values = _numeric(frame, ANNOTATION_COLUMNS, line_offset=2)
    for i, (start, end) in enumerate(values):
        if end <= start:
            raise AnnotationError(f"{messages.END_BEFORE_START} (line {i + 2})")
    values = values[np.argsort(values[:, 0], kind="stable")]
    if np.any(values[1:, 0] < values[:-1, 1]):
        raise AnnotationError(messages.OVERLAPPING_ANNOTATIONS)
    return [TurnAnnotation(start_s=float(s), end_s=float(e), source=source) for s, e in values]


def serialize_annotations(annotations: list) -> str:
    frame = pd.DataFrame(
        [(a.start_s, a.end_s) for a in annotations], columns=ANNOTATION_COLUMNS, dtype=float
    )
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_annotations(path: Union[str, Path], source: AnnotationSource = AnnotationSource.reference):
    return parse_annotations(Path(path).read_bytes(), source)


def write_annotations(annotations: list, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_annotations(annotations))
    return path
