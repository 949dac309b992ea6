import logging
import math
from typing import Literal, Optional, Sequence, Union

import numpy as np

from src.conf import messages
from src.schemas.measures import ParticipantAggregate, TestResult
from src.schemas.sensor import Setting, WearLocation
from src.schemas.turn import Turn
from src.servises.errors import InsufficientDataError, InsufficientTestsError

logger = logging.getLogger(__name__)

SplitMode = Literal["random", "chronological"]


def turn_speed(turn: Turn) -> float:
    """
    The turn_speed function returns the speed of a U-turn as pi over its duration.

    The turn angle is taken as pi regardless of the integrated angle.

    >>> round(turn_speed(Turn(start_s=0.0, end_s=2.0, angle=3.1)), 6)
    1.570796

    :param turn: Turn: A detected or reference turn
    :return: Turn speed in rad/s

    """
    return math.pi / turn.duration


def angular_speed(turn: Turn) -> float:
    return abs(turn.angle) / turn.duration


def summarize_test(
    turns: Sequence[Turn],
    session_id: str,
    participant_id: Optional[str] = None,
    setting: Setting = Setting.unsupervised,
    wear_location: WearLocation = WearLocation.belt_front,
) -> TestResult:
    """
    The summarize_test function reduces the turns of one test to their medians.
    An even number of turns takes the midpoint of the two central values.

    :param turns: Sequence[Turn]: Turns detected in the test, possibly none
    :param session_id: str: Session identifier
    :param participant_id: str: Participant identifier
    :param setting: Setting: Supervised or unsupervised
    :param wear_location: WearLocation: Where the phone was carried
    :return: A TestResult; medians are None when there are no turns

    """
    turns = list(turns)
    medians = dict(turn_speed_median=None, turn_duration_median=None, angular_speed_median=None)
    if turns:
        medians = dict(
            turn_speed_median=float(np.median([turn_speed(t) for t in turns])),
            turn_duration_median=float(np.median([t.duration for t in turns])),
            angular_speed_median=float(np.median([angular_speed(t) for t in turns])),
        )
    return TestResult(
        session_id=session_id,
        participant_id=participant_id,
        setting=setting,
        wear_location=wear_location,
        n_turns=len(turns),
        per_turn=turns,
        **medians,
    )


def split_medians(
    values: Sequence[float],
    k: int,
    rng: Optional[np.random.Generator] = None,
    mode: SplitMode = "random",
) -> tuple[float, float]:
    """
    The split_medians function draws two disjoint sets of k values and returns their medians.

    In random mode 2k distinct positions are drawn without replacement and split in draw order;
    in chronological mode the first k values are compared with the next k.

    :param values: Sequence[float]: Per-test medians in chronological order
    :param k: int: Number of tests per set
    :param rng: np.random.Generator: Random source for the random mode
    :param mode: SplitMode: random or chronological
    :return: The medians of the two sets

    """
    values = np.asarray(values, dtype=float)
    first, second = _partition(values.size, k, rng, mode)
    return float(np.median(values[first])), float(np.median(values[second]))


def draw_split_medians(
    values: Sequence[float],
    k: int,
    rng: Optional[np.random.Generator] = None,
    n_draws: int = 1,
    mode: SplitMode = "random",
) -> np.ndarray:
    """
    The draw_split_medians function repeats split_medians n_draws times in one vectorized pass.

    Each row draws its own random order of the values; the chronological split has a single row.

    :param values: Sequence[float]: Per-test medians in chronological order
    :param k: int: Number of tests per set
    :param rng: np.random.Generator: Random source for the random mode
    :param n_draws: int: Number of independent splits
    :param mode: SplitMode: random or chronological
    :return: Array of shape (n_draws, 2) with the medians of both sets

    """
    values = np.asarray(values, dtype=float)
    if mode == "chronological":
        return np.array([split_medians(values, k, rng, mode)])
    if mode != "random":
        raise ValueError(f"unknown split mode: {mode}")
    _check_split(values.size, k)
    rng = rng if rng is not None else np.random.default_rng(0)
    order = np.argsort(rng.random((n_draws, values.size)), axis=1)[:, : 2 * k]
    chosen = values[order]
    return np.column_stack([np.median(chosen[:, :k], axis=1), np.median(chosen[:, k:], axis=1)])


def _check_split(n: int, k: int) -> None:
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < 2 * k:
        raise InsufficientTestsError(messages.INSUFFICIENT_TESTS, int(n), 2 * k)


def _partition(
    n: int, k: int, rng: Optional[np.random.Generator], mode: SplitMode
) -> tuple[np.ndarray, np.ndarray]:
    _check_split(n, k)
    if mode == "chronological":
        return np.arange(k), np.arange(k, 2 * k)
    if mode == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        chosen = rng.choice(n, size=2 * k, replace=False)
        return chosen[:k], chosen[k:]
    raise ValueError(f"unknown split mode: {mode}")


def aggregate_participant(
    tests: Sequence[TestResult],
    k: Optional[int] = None,
    seed: Optional[int] = None,
    participant_id: Optional[str] = None,
    mode: SplitMode = "random",
) -> Union[ParticipantAggregate, tuple[ParticipantAggregate, ParticipantAggregate]]:
    """
    The aggregate_participant function reduces the tests of one participant.

    Without k the aggregate is the median of all per-test medians. With k, two disjoint
    sets of k tests are drawn and one aggregate is returned per set.

    :param tests: Sequence[TestResult]: Tests of one participant; tests without turns are ignored
    :param k: int: Tests per set for test-retest pairs, optional
    :param seed: int: Seed of the random partition
    :param participant_id: str: Overrides the id taken from the tests
    :param mode: SplitMode: random or chronological partition
    :return: A ParticipantAggregate, or a pair of them when k is given

    """
    eligible = [t for t in tests if t.n_turns > 0]
    pid = participant_id or next((t.participant_id for t in tests if t.participant_id), None)
    if pid is None:
        pid = tests[0].session_id if tests else ""
    if not eligible:
        raise InsufficientDataError(f"{messages.INSUFFICIENT_TESTS}: participant {pid!r} has no test with turns")
    values = [t.turn_speed_median for t in eligible]
    if k is None:
        return ParticipantAggregate(participant_id=pid, values=values, aggregate=float(np.median(values)))

    sets = [[values[i] for i in idx] for idx in _partition(len(values), k, np.random.default_rng(seed), mode)]
    first, second = (
        ParticipantAggregate(participant_id=pid, values=s, aggregate=float(np.median(s))) for s in sets
    )
    return first, second


def turn_speed_summary(values: Sequence[float]) -> tuple[float, float]:
    """
    >>> turn_speed_summary([1.0, 2.0, 3.0, 4.0, 5.0])
    (3.0, 2.0)
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InsufficientDataError(messages.EMPTY_INPUT)
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    return float(median), float(q3 - q1)
