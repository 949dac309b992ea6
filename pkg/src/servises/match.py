"""
Event matching of detected turns against reference annotations.

A detected turn and a reference turn are a candidate pair when their temporal
overlap covers at least ``overlap_min`` of the reference turn. Pairs are
accepted greedily by descending overlap, each turn at most once.
"""

import logging
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from src.conf import messages
from src.schemas.match import DetectionScore, MatchKind, MatchOutcome, ScoreSummary, TemporalErrorRow
from src.schemas.sensor import AnnotationSource, TurnAnnotation
from src.schemas.turn import Turn
from src.servises.errors import InsufficientDataError, MatchInputError

logger = logging.getLogger(__name__)

OVERLAP_MIN = 0.20
Interval = Union[Turn, TurnAnnotation]


def _as_annotation(item: Interval, source: AnnotationSource) -> TurnAnnotation:
    if isinstance(item, TurnAnnotation):
        return item
    return TurnAnnotation(start_s=item.start_s, end_s=item.end_s, source=source)


def _check_sorted(items: Sequence[TurnAnnotation], name: str) -> None:
    for prev, cur in zip(items, items[1:]):
        if cur.start_s < prev.end_s:
            raise MatchInputError(f"{messages.UNSORTED_TURNS}: {name}")


def overlap_fraction(detected: Interval, reference: Interval) -> float:
    """
    >>> round(overlap_fraction(TurnAnnotation(start_s=10.3, end_s=12.4), TurnAnnotation(start_s=10.0, end_s=12.6)), 3)
    0.808
    """
    inter = min(detected.end_s, reference.end_s) - max(detected.start_s, reference.start_s)
    return max(0.0, inter) / (reference.end_s - reference.start_s)


def classify_turns(
    detected: Sequence[Interval], reference: Sequence[Interval], overlap_min: float = OVERLAP_MIN
) -> list[MatchOutcome]:
    """
    The classify_turns function labels every detected turn TP or FP and every reference turn TP or FN.

    Candidate pairs overlap at least overlap_min of the reference duration. They are taken in
    descending overlap, ties going to the earlier reference turn and then the earlier detection.
    Errors are signed: negative means the detected turn started (or ended) first.

    :param detected: Sequence[Turn | TurnAnnotation]: Detected turns, sorted and non-overlapping
    :param reference: Sequence[Turn | TurnAnnotation]: Reference turns, sorted and non-overlapping
    :param overlap_min: float: Minimal overlap as a fraction of the reference duration
    :return: Outcomes ordered by start time

    """
    det = [_as_annotation(d, AnnotationSource.detector) for d in detected]
    ref = [_as_annotation(r, AnnotationSource.reference) for r in reference]
    _check_sorted(det, "detected")
    _check_sorted(ref, "reference")

    matched_det: dict[int, tuple[int, float]] = {}
    if det and ref:
        d_start = np.array([d.start_s for d in det])[:, None]
        d_end = np.array([d.end_s for d in det])[:, None]
        r_start = np.array([r.start_s for r in ref])[None, :]
        r_end = np.array([r.end_s for r in ref])[None, :]
        inter = np.clip(np.minimum(d_end, r_end) - np.maximum(d_start, r_start), 0.0, None)
        overlap = inter / (r_end - r_start)

        di, ri = np.nonzero((overlap >= overlap_min) & (inter > 0))
        order = sorted(zip(di, ri), key=lambda p: (-overlap[p], p[1], p[0]))
        used_ref: set[int] = set()
        for i, j in order:
            if i in matched_det or j in used_ref:
                continue
            matched_det[int(i)] = (int(j), float(overlap[i, j]))
            used_ref.add(int(j))

    outcomes: list[MatchOutcome] = []
    matched_ref = {j for j, _ in matched_det.values()}
    for i, d in enumerate(det):
        if i in matched_det:
            j, frac = matched_det[i]
            r = ref[j]
            outcomes.append(
                MatchOutcome(
                    kind=MatchKind.TP,
                    detected=d,
                    reference=r,
                    overlap_fraction=min(frac, 1.0),
                    onset_error_s=d.start_s - r.start_s,
                    end_error_s=d.end_s - r.end_s,
                )
            )
        else:
            outcomes.append(MatchOutcome(kind=MatchKind.FP, detected=d))
    outcomes += [MatchOutcome(kind=MatchKind.FN, reference=r) for j, r in enumerate(ref) if j not in matched_ref]
    outcomes.sort(key=lambda o: (o.reference or o.detected).start_s)
    return outcomes


def _mean_sd(values: list[float]) -> tuple:
    if not values:
        return None, None
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return float(np.mean(values)), sd


def score(outcomes: Iterable[MatchOutcome]) -> DetectionScore:
    """
    The score function counts outcomes and derives precision, recall and F1.

    With no true positive but at least one FP or FN every ratio is 0. With no turns at all
    the score is returned as undefined.

    :param outcomes: Iterable[MatchOutcome]: Outcomes of one test or participant
    :return: DetectionScore with fractions in [0, 1]

    """
    outcomes = list(outcomes)
    tp = [o for o in outcomes if o.kind is MatchKind.TP]
    fp = sum(o.kind is MatchKind.FP for o in outcomes)
    fn = sum(o.kind is MatchKind.FN for o in outcomes)
    if not tp and not fp and not fn:
        return DetectionScore(defined=False)
    if not tp:
        return DetectionScore(tp=0, fp=fp, fn=fn, precision=0.0, recall=0.0, f1=0.0)

    n_tp = len(tp)
    precision = n_tp / (n_tp + fp)
    recall = n_tp / (n_tp + fn)
    onset_mean, onset_sd = _mean_sd([o.onset_error_s for o in tp])
    end_mean, end_sd = _mean_sd([o.end_error_s for o in tp])
    return DetectionScore(
        tp=n_tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=2 * precision * recall / (precision + recall),
        mean_overlap_pct=100.0 * float(np.mean([o.overlap_fraction for o in tp])),
        onset_error_mean=onset_mean,
        onset_error_sd=onset_sd,
        end_error_mean=end_mean,
        end_error_sd=end_sd,
    )


def summarize_values(values: Sequence[float], metric: str = "f1") -> ScoreSummary:
    """
    The summarize_values function describes a distribution the way detection tables report it.

    The mean CI is the normal approximation mean +- 1.96 SD / sqrt(n); percentiles use linear
    interpolation.

    :param values: Sequence[float]: One value per participant
    :param metric: str: Name carried into the summary
    :return: ScoreSummary

    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InsufficientDataError(messages.EMPTY_SCORES)
    n = int(values.size)
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if n > 1 else 0.0
    half = 1.96 * sd / np.sqrt(n)
    p05, q1, median, q3, p95 = (float(v) for v in np.percentile(values, [5, 25, 50, 75, 95]))
    return ScoreSummary(
        metric=metric,
        n=n,
        mean=mean,
        ci_lower=mean - half,
        ci_upper=mean + half,
        sd=sd,
        min=float(values.min()),
        max=float(values.max()),
        p05=p05,
        q1=q1,
        median=median,
        q3=q3,
        p95=p95,
    )


def cohort_score_stats(per_participant: Sequence[DetectionScore], metric: str = "f1") -> ScoreSummary:
    """
    The cohort_score_stats function summarizes per-participant scores in percent.
    Undefined scores are left out and logged.

    :param per_participant: Sequence[DetectionScore]: One score per participant
    :param metric: str: f1, precision or recall
    :return: ScoreSummary in percent

    """
    if metric not in ("f1", "precision", "recall"):
        raise ValueError(f"unknown metric: {metric}")
    defined = [s for s in per_participant if s.defined]
    skipped = len(per_participant) - len(defined)
    if skipped:
        logger.warning("%s: %d of %d scores left out", messages.UNDEFINED_SCORE, skipped, len(per_participant))
    return summarize_values([100.0 * getattr(s, metric) for s in defined], metric)


def temporal_error_table(outcomes_by_location: Mapping[str, Iterable[MatchOutcome]]) -> list[TemporalErrorRow]:
    """
    The temporal_error_table function reports onset and end errors of true positives per wear location.

    :param outcomes_by_location: Mapping[str, Iterable[MatchOutcome]]: Outcomes grouped by location
    :return: One row per location, in the mapping's order

    """
    rows = []
    for location, outcomes in outcomes_by_location.items():
        tp = [o for o in outcomes if o.kind is MatchKind.TP]
        onset_mean, onset_sd = _mean_sd([o.onset_error_s for o in tp])
        end_mean, end_sd = _mean_sd([o.end_error_s for o in tp])
        rows.append(
            TemporalErrorRow(
                wear_location=str(location),
                n_tp=len(tp),
                onset_error_mean=onset_mean,
                onset_error_sd=onset_sd,
                end_error_mean=end_mean,
                end_error_sd=end_sd,
                mean_overlap_pct=100.0 * float(np.mean([o.overlap_fraction for o in tp])) if tp else None,
            )
        )
    return rows
