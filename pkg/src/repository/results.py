import hashlib
import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.repository.sessions import FLOAT_FORMAT, participant_from_session, serialize_annotations
from src.schemas.manifest import RunManifest
from src.schemas.match import MatchKind, MatchOutcome
from src.schemas.measures import ParticipantAggregate, TestResult
from src.schemas.sensor import AnnotationSource, TurnAnnotation
from src.schemas.turn import Turn

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "session_id",
    "participant_id",
    "setting",
    "wear_location",
    "n_turns",
    "turn_speed_median",
    "turn_duration_median",
    "angular_speed_median",
]
OUTCOME_COLUMNS = ["kind", "det_start", "det_end", "ref_start", "ref_end", "overlap", "onset_err", "end_err"]
PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_test_results(results: Iterable[TestResult], path: PathLike) -> Path:
    """
    The write_test_results function writes one row per test; medians of tests without turns stay empty.

    :param results: Iterable[TestResult]: Per-test results
    :param path: str | Path: Output CSV
    :return: The written path

    """
    rows = [r.model_dump(mode="json", include=set(RESULT_COLUMNS)) for r in results]
    return write_frame(pd.DataFrame(rows, columns=RESULT_COLUMNS), path)


def read_test_results(path: PathLike) -> pd.DataFrame:
    """
    The read_test_results function loads a per-test results CSV.
    A missing participant_id is derived from the session id.

    :param path: str | Path: Results CSV written by write_test_results
    :return: DataFrame with the result columns

    """
    frame = pd.read_csv(path, dtype={"session_id": str, "participant_id": str})
    missing = [c for c in ("session_id", "turn_speed_median") if c not in frame.columns]
    if missing:
        raise ValueError(f"missing columns: {', '.join(missing)}")
    if "participant_id" not in frame.columns:
        frame["participant_id"] = None
    frame["participant_id"] = [
        pid if isinstance(pid, str) and pid else participant_from_session(sid)
        for pid, sid in zip(frame["participant_id"], frame["session_id"])
    ]
    return frame


def per_participant_values(frame: pd.DataFrame, column: str = "turn_speed_median") -> dict[str, list[float]]:
    """
    The per_participant_values function groups a results column by participant, keeping
    session order and leaving out empty values.

    :param frame: pd.DataFrame: Output of read_test_results
    :param column: str: Column to collect
    :return: Values per participant id

    """
    values: dict[str, list[float]] = {}
    for pid, group in frame.sort_values("session_id", kind="stable").groupby("participant_id", sort=True):
        column_values = pd.to_numeric(group[column], errors="coerce").to_numpy(dtype=float)
        values[str(pid)] = [float(v) for v in column_values if np.isfinite(v)]
    return values


def write_participants(aggregates: Iterable[ParticipantAggregate], path: PathLike) -> Path:
    rows = [{"participant_id": a.participant_id, "n_tests": len(a.values), "aggregate": a.aggregate} for a in aggregates]
    return write_frame(pd.DataFrame(rows, columns=["participant_id", "n_tests", "aggregate"]), path)


def write_turns(result: TestResult, out_dir: PathLike) -> tuple[Path, Path]:
    """
    The write_turns function stores the turns of a test twice: ``<id>.turns.csv`` in the
    ``start_s,end_s`` annotation format and ``<id>.turns.json`` with the full turn records.

    :param result: TestResult: A summarized test
    :param out_dir: str | Path: Output directory
    :return: Paths of the CSV and JSON files

    """
    out_dir = Path(out_dir)
    csv_path = _prepare(out_dir / f"{result.session_id}.turns.csv")
    csv_path.write_text(serialize_annotations(result.per_turn))
    json_path = out_dir / f"{result.session_id}.turns.json"
    json_path.write_text(json.dumps(result.model_dump(mode="json"), indent=2))
    return csv_path, json_path


def read_turns(path: PathLike) -> TestResult:
    return TestResult.model_validate_json(Path(path).read_text())


def _interval(item: Optional[TurnAnnotation]) -> tuple:
    return (item.start_s, item.end_s) if item is not None else (None, None)


def outcomes_frame(outcomes: Iterable[MatchOutcome]) -> pd.DataFrame:
    rows = [
        (o.kind.value, *_interval(o.detected), *_interval(o.reference), o.overlap_fraction, o.onset_error_s, o.end_error_s)
        for o in outcomes
    ]
    return pd.DataFrame(rows, columns=OUTCOME_COLUMNS)


def write_outcomes(outcomes: Iterable[MatchOutcome], path: PathLike) -> Path:
    return write_frame(outcomes_frame(outcomes), path)


def read_outcomes(path: PathLike) -> list[MatchOutcome]:
    frame = pd.read_csv(path)
    frame = frame.astype(object).where(frame.notna(), None)

    def annotation(start, end, source) -> Optional[TurnAnnotation]:
        return None if start is None else TurnAnnotation(start_s=start, end_s=end, source=source)

    return [
        MatchOutcome(
            kind=MatchKind(row.kind),
            detected=annotation(row.det_start, row.det_end, AnnotationSource.detector),
            reference=annotation(row.ref_start, row.ref_end, AnnotationSource.reference),
            overlap_fraction=row.overlap,
            onset_error_s=row.onset_err,
            end_error_s=row.end_err,
        )
        for row in frame.itertuples(index=False)
    ]


def _to_jsonable(obj):
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json_report(report, path: PathLike) -> Path:
    """
    The write_json_report function writes a report at full precision.
    Pydantic models, numpy scalars and nested containers are converted.

    :param report: Report object or mapping
    :param path: str | Path: Output JSON file
    :return: The written path

    """
    path = _prepare(path)
    path.write_text(json.dumps(_to_jsonable(report), indent=2, sort_keys=True) + "\n")
    return path


def read_json_report(path: PathLike) -> dict:
    return json.loads(Path(path).read_text())


def file_digest(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(manifest: RunManifest, out_dir: PathLike) -> Path:
    """
    The write_manifest function stores ``<command>.manifest.json`` next to the outputs.

    :param manifest: RunManifest: Run description
    :param out_dir: str | Path: Output directory
    :return: The written path

    """
    return write_json_report(manifest, Path(out_dir) / f"{manifest.command}.manifest.json")


def digests(paths: Sequence[PathLike]) -> dict[str, str]:
    return {Path(p).name: file_digest(p) for p in paths}


def turns_from_annotations(annotations: Iterable[TurnAnnotation]) -> list[Turn]:
    # reference annotations carry no angle; pi marks a U-turn
    return [Turn(start_s=a.start_s, end_s=a.end_s, angle=np.pi) for a in annotations]
