import numpy as np
import pytest

from src.schemas.synth import CohortSpec, SessionSpec
from src.servises.detect import detect_turns
from src.servises.match import classify_turns, score
from src.servises.measures import summarize_test
from src.servises.stats import EDSS_GROUPS, compare_groups, per_participant_medians, reliability_curve, spearman
from src.servises.synth import generate_cohort, generate_session


@pytest.fixture(scope="module")
def cohort():
    bundle = generate_cohort(CohortSpec(seed=0))
    tests = {}
    for participant in bundle.participants:
        medians = []
        for session in participant.sessions:
            stream, _ = generate_session(session)
            result = summarize_test(detect_turns(stream), session_id=session.session_id)
            medians.append(result.turn_speed_median)
        tests[participant.participant_id] = medians
    return bundle, per_participant_medians(tests)


def test_clean_sessions_are_detected_exactly():
    rng = np.random.default_rng(20)
    outcomes = []
    for i in range(20):
        spec = SessionSpec(
            n_turns=12,
            turn_duration=[float(d) for d in rng.uniform(1.5, 3.0, 12)],
            tilt_deg=float(rng.uniform(0.0, 30.0)),
            first_sign=1 if i % 2 else -1,
            seed=i,
        )
        stream, truth = generate_session(spec)
        outcomes += classify_turns(detect_turns(stream), truth)
    result = score(outcomes)
    assert result.f1 == 1.0
    assert result.tp == 240
    assert abs(result.onset_error_mean) <= 0.2
    assert abs(result.end_error_mean) <= 0.2
    assert result.mean_overlap_pct >= 80.0


def test_test_availability(cohort):
    bundle, _ = cohort
    assert 10.9 <= np.mean(bundle.test_counts()) <= 12.2


def test_reliability_grows_with_aggregation(cohort):
    _, tests = cohort
    curve = reliability_curve(tests, k_range=range(1, 8), seed=0, n_reps=100)
    available = [r for r in curve if r.available]
    iccs = [r.icc21.value for r in available]
    assert len(available) == 7
    assert all(a < b for a, b in zip(iccs, iccs[1:]))
    ns = [r.n for r in curve]
    assert ns == sorted(ns, reverse=True)
    assert ns[0] > ns[-1]


def test_turn_speed_tracks_disability(cohort):
    bundle, tests = cohort
    speeds = {pid: float(np.median(values)) for pid, values in tests.items() if values}
    edss = {p.participant_id: p.edss_proxy for p in bundle.participants}
    ids = sorted(speeds)
    correlation = spearman([speeds[pid] for pid in ids], [edss[pid] for pid in ids])
    assert correlation.rho <= -0.6
    comparisons = {c.label: c for c in compare_groups(speeds, edss, EDSS_GROUPS)}
    assert comparisons["EDSS [0,3.5] vs EDSS [6,6.5]"].p_value < 0.01
    assert comparisons["EDSS [0,3.5] vs EDSS [6,6.5]"].median_difference > 0
