import unittest

import numpy as np

from src.schemas.match import MatchKind, MatchOutcome
from src.schemas.sensor import AnnotationSource, TurnAnnotation
from src.servises.errors import InsufficientDataError, MatchInputError
from src.servises.match import (
    classify_turns,
    cohort_score_stats,
    overlap_fraction,
    score,
    summarize_values,
    temporal_error_table,
)


def ann(start: float, end: float, source: AnnotationSource = AnnotationSource.reference) -> TurnAnnotation:
    return TurnAnnotation(start_s=start, end_s=end, source=source)


def kinds(outcomes) -> list[str]:
    return [o.kind.value for o in outcomes]


def tp_outcome() -> MatchOutcome:
    return MatchOutcome(
        kind=MatchKind.TP,
        detected=ann(0.0, 2.0, AnnotationSource.detector),
        reference=ann(0.0, 2.0),
        overlap_fraction=1.0,
        onset_error_s=0.0,
        end_error_s=0.0,
    )


def outcomes_of(tp: int, fp: int, fn: int) -> list[MatchOutcome]:
    return (
        [tp_outcome() for _ in range(tp)]
        + [MatchOutcome(kind=MatchKind.FP, detected=ann(5.0, 6.0)) for _ in range(fp)]
        + [MatchOutcome(kind=MatchKind.FN, reference=ann(8.0, 9.0)) for _ in range(fn)]
    )


def realistic_fixture(rng: np.random.Generator) -> tuple[list[TurnAnnotation], list[TurnAnnotation]]:
    """
    Reference turns separated by walking bouts; detections are jittered copies of most of
    them, sometimes split in two, plus short spurious turns in the middle of walking bouts.
    """
    reference, detected = [], []
    cursor = rng.uniform(0.0, 3.0)
    for _ in range(rng.integers(1, 7)):
        duration = rng.uniform(1.5, 3.0)
        reference.append(ann(cursor, cursor + duration))
        cursor += duration + rng.uniform(2.0, 5.0)
    for i, ref in enumerate(reference):
        u = rng.random()
        start = ref.start_s + rng.uniform(-0.3, 0.3)
        end = ref.end_s + rng.uniform(-0.3, 0.3)
        if u < 0.6:
            detected.append(ann(start, end, AnnotationSource.detector))
        elif u < 0.8:
            mid = 0.5 * (ref.start_s + ref.end_s)
            detected.append(ann(start, mid - 0.05, AnnotationSource.detector))
            detected.append(ann(mid + 0.05, end, AnnotationSource.detector))
        if i + 1 < len(reference) and rng.random() < 0.3:
            centre = 0.5 * (ref.end_s + reference[i + 1].start_s)
            half = rng.uniform(0.25, 0.5)
            detected.append(ann(centre - half, centre + half, AnnotationSource.detector))
    return detected[:6], reference


def maximum_matching(detected, reference, overlap_min: float = 0.2) -> int:
    def feasible(d, r):
        inter = min(d.end_s, r.end_s) - max(d.start_s, r.start_s)
        return inter > 0 and inter / (r.end_s - r.start_s) >= overlap_min

    def best(i: int, used: frozenset) -> int:
        if i == len(detected):
            return 0
        result = best(i + 1, used)
        for j, r in enumerate(reference):
            if j not in used and feasible(detected[i], r):
                result = max(result, 1 + best(i + 1, used | {j}))
        return result

    return best(0, frozenset())


class TestClassifyTurns(unittest.TestCase):

    def test_true_positive(self):
        outcomes = classify_turns([ann(10.3, 12.4)], [ann(10.0, 12.6)])
        self.assertEqual(kinds(outcomes), ["TP"])
        self.assertAlmostEqual(outcomes[0].overlap_fraction, 2.1 / 2.6)
        self.assertAlmostEqual(outcomes[0].onset_error_s, 0.3)
        self.assertAlmostEqual(outcomes[0].end_error_s, -0.2)

    def test_small_overlap_is_false_positive_and_negative(self):
        self.assertAlmostEqual(overlap_fraction(ann(12.2, 14.0), ann(10.0, 12.6)), 0.4 / 2.6)
        outcomes = classify_turns([ann(12.2, 14.0)], [ann(10.0, 12.6)])
        self.assertEqual(sorted(kinds(outcomes)), ["FN", "FP"])

    def test_nothing_detected(self):
        self.assertEqual(kinds(classify_turns([], [ann(10.0, 12.6)])), ["FN"])

    def test_highest_overlap_wins(self):
        outcomes = classify_turns([ann(0.0, 1.0), ann(1.2, 3.0)], [ann(0.5, 3.0)])
        tp = [o for o in outcomes if o.kind is MatchKind.TP]
        self.assertEqual(len(tp), 1)
        self.assertEqual(tp[0].detected.start_s, 1.2)

    def test_unsorted_input(self):
        with self.assertRaises(MatchInputError):
            classify_turns([ann(5.0, 6.0), ann(1.0, 2.0)], [])
        with self.assertRaises(MatchInputError):
            classify_turns([], [ann(1.0, 3.0), ann(2.0, 4.0)])

    def test_counts_add_up(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            detected, reference = realistic_fixture(rng)
            outcomes = classify_turns(detected, reference)
            tp = kinds(outcomes).count("TP")
            self.assertEqual(tp + kinds(outcomes).count("FN"), len(reference))
            self.assertEqual(tp + kinds(outcomes).count("FP"), len(detected))

    def test_greedy_attains_maximum_matching(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            detected, reference = realistic_fixture(rng)
            tp = kinds(classify_turns(detected, reference)).count("TP")
            self.assertEqual(tp, maximum_matching(detected, reference))

    def test_raising_overlap_min_never_adds_matches(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            detected, reference = realistic_fixture(rng)
            counts = [kinds(classify_turns(detected, reference, m)).count("TP") for m in (0.1, 0.2, 0.5, 0.8, 1.0)]
            self.assertEqual(counts, sorted(counts, reverse=True))

    def test_time_shift_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            detected, reference = realistic_fixture(rng)
            shift = float(rng.uniform(10.0, 100.0))
            moved = classify_turns(
                [ann(d.start_s + shift, d.end_s + shift, d.source) for d in detected],
                [ann(r.start_s + shift, r.end_s + shift) for r in reference],
            )
            self.assertEqual(kinds(moved), kinds(classify_turns(detected, reference)))


class TestScore(unittest.TestCase):

    def test_one_false_positive(self):
        s = score(outcomes_of(11, 1, 0))
        self.assertAlmostEqual(s.precision, 0.91667, places=5)
        self.assertEqual(s.recall, 1.0)
        self.assertAlmostEqual(s.f1, 0.95652, places=5)

    def test_no_true_positive(self):
        s = score(outcomes_of(0, 2, 1))
        self.assertEqual((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0))

    def test_perfect(self):
        s = score(outcomes_of(5, 0, 0))
        self.assertEqual(s.f1, 1.0)
        self.assertEqual(s.mean_overlap_pct, 100.0)

    def test_undefined(self):
        s = score([])
        self.assertFalse(s.defined)
        self.assertIsNone(s.f1)

    def test_temporal_errors(self):
        outcomes = classify_turns([ann(10.3, 12.4), ann(20.0, 22.0)], [ann(10.0, 12.6), ann(20.1, 22.2)])
        s = score(outcomes)
        self.assertAlmostEqual(s.onset_error_mean, (0.3 - 0.1) / 2)
        self.assertAlmostEqual(s.end_error_mean, (-0.2 - 0.2) / 2)


class TestCohortScoreStats(unittest.TestCase):

    def test_all_perfect(self):
        summary = cohort_score_stats([score(outcomes_of(4, 0, 0))] * 5)
        self.assertEqual(summary.mean, 100.0)
        self.assertEqual(summary.sd, 0.0)
        for key in ("min", "p05", "q1", "median", "q3", "p95", "max"):
            self.assertEqual(getattr(summary, key), 100.0)

    def test_one_failure(self):
        scores = [score(outcomes_of(0, 0, 3))] + [score(outcomes_of(4, 0, 0))] * 3
        summary = cohort_score_stats(scores)
        self.assertEqual(summary.mean, 75.0)
        self.assertEqual(summary.median, 100.0)

    def test_undefined_scores_left_out(self):
        with self.assertLogs("src.servises.match", level="WARNING"):
            summary = cohort_score_stats([score([]), score(outcomes_of(4, 0, 0))])
        self.assertEqual(summary.n, 1)

    def test_empty(self):
        with self.assertRaises(InsufficientDataError):
            cohort_score_stats([score([])])

    def test_percentile_oracle(self):
        rng = np.random.default_rng(96)
        values = rng.uniform(40.0, 100.0, 96)
        summary = summarize_values(values)
        ordered = np.sort(values)

        def percentile(p):
            position = p / 100 * (len(ordered) - 1)
            low = int(np.floor(position))
            high = min(low + 1, len(ordered) - 1)
            return ordered[low] + (ordered[high] - ordered[low]) * (position - low)

        for key, p in (("p05", 5), ("q1", 25), ("median", 50), ("q3", 75), ("p95", 95)):
            self.assertAlmostEqual(getattr(summary, key), percentile(p), places=9)
        self.assertEqual(summary.min, ordered[0])
        self.assertEqual(summary.max, ordered[-1])
        sd = float(np.sqrt(np.sum((values - values.mean()) ** 2) / 95))
        self.assertAlmostEqual(summary.sd, sd, places=9)
        self.assertAlmostEqual(summary.ci_upper - summary.mean, 1.96 * sd / np.sqrt(96), places=9)

    def test_metric_selector(self):
        summary = cohort_score_stats([score(outcomes_of(1, 1, 0))], metric="precision")
        self.assertEqual(summary.metric, "precision")
        self.assertEqual(summary.mean, 50.0)


class TestTemporalErrorTable(unittest.TestCase):

    def test_rows_per_location(self):
        belt = classify_turns([ann(10.3, 12.4)], [ann(10.0, 12.6)])
        pocket = classify_turns([], [ann(10.0, 12.6)])
        rows = temporal_error_table({"belt_front": belt, "pocket_front_inner": pocket})
        self.assertEqual([r.wear_location for r in rows], ["belt_front", "pocket_front_inner"])
        self.assertEqual(rows[0].n_tp, 1)
        self.assertAlmostEqual(rows[0].onset_error_mean, 0.3)
        self.assertEqual(rows[0].onset_error_sd, 0.0)
        self.assertEqual(rows[1].n_tp, 0)
        self.assertIsNone(rows[1].mean_overlap_pct)


if __name__ == "__main__":
    unittest.main()
