"""
Synthetic smartphone recordings with exact turn annotations.

A session alternates walking bouts and U-turns. Each turn is a raised-cosine
pulse of the vertical rotational rate whose integral is exactly pi; walking
bouts carry a tapered sinusoidal pelvis rotation. The phone may be tilted,
in which case gravity and the rotation appear spread over its axes.
"""

import logging
import math
from typing import Iterator

import numpy as np
from scipy.stats import betabinom, laplace, norm

from src.schemas.sensor import AnnotationSource, SensorStream, TurnAnnotation
from src.schemas.synth import CohortBundle, CohortSpec, DisabilityLevel, ParticipantRecord, SessionSpec

logger = logging.getLogger(__name__)

GRAVITY = 9.81
MIN_TURN_DURATION_S = 1.0


def turn_pulse(t: np.ndarray, start: float, duration: float, sign: int = 1) -> np.ndarray:
    """
    The turn_pulse function evaluates a raised-cosine rate pulse of area pi.

    omega(tau) = sign * (pi / D) * (1 - cos(2 pi tau / D)) for 0 <= tau <= D, zero elsewhere.

    :param t: np.ndarray: Time points in seconds
    :param start: float: Pulse onset
    :param duration: float: Pulse length D
    :param sign: int: +1 for a left turn, -1 for a right turn
    :return: The rate in rad/s at every time point

    """
    tau = np.asarray(t, dtype=float) - start
    inside = (tau >= 0) & (tau <= duration)
    pulse = (math.pi / duration) * (1.0 - np.cos(2.0 * math.pi * tau / duration))
    return np.where(inside, sign * pulse, 0.0)


def pelvis_oscillation(t: np.ndarray, start: float, end: float, amplitude: float, freq: float) -> np.ndarray:
    """
    The pelvis_oscillation function returns a sinusoidal rate on [start, end], faded in and
    out with a sin^2 ramp lasting one oscillation period at each end.

    :param t: np.ndarray: Time points in seconds
    :param start: float: Start of the walking bout
    :param end: float: End of the walking bout
    :param amplitude: float: Peak rate in rad/s
    :param freq: float: Oscillation frequency in Hz
    :return: The rate in rad/s at every time point

    """
    tau = np.asarray(t, dtype=float) - start
    length = end - start
    inside = (tau >= 0) & (tau <= length)
    ramp = np.clip(np.minimum(tau, length - tau) * freq, 0.0, 1.0)
    taper = np.sin(0.5 * math.pi * ramp) ** 2
    return np.where(inside, amplitude * np.sin(2.0 * math.pi * freq * tau) * taper, 0.0)


def _timeline(spec: SessionSpec) -> tuple[list[tuple[float, float, int]], list[tuple[float, float]], float]:
    turns, bouts = [], [(0.0, spec.walk_bout)]
    cursor = spec.walk_bout
    sign = spec.first_sign
    for duration in spec.durations():
        turns.append((cursor, duration, sign))
        cursor += duration
        bouts.append((cursor, cursor + spec.walk_bout))
        cursor += spec.walk_bout
        sign = -sign
    return turns, bouts, cursor


def yaw_profile(spec: SessionSpec) -> tuple[np.ndarray, np.ndarray, list[TurnAnnotation]]:
    """
    The yaw_profile function builds the noise-free vertical rate of a session.

    :param spec: SessionSpec: Session layout
    :return: Time grid, rate in rad/s and the truth annotations

    """
    turns, bouts, total = _timeline(spec)
    n = int(math.floor(total * spec.rate + 1e-9)) + 1
    t = np.arange(n) / spec.rate
    omega = np.zeros(n)
    for start, duration, sign in turns:
        omega += turn_pulse(t, start, duration, sign)
    if spec.pelvis_osc_amp > 0:
        for start, end in bouts:
            omega += pelvis_oscillation(t, start, end, spec.pelvis_osc_amp, spec.pelvis_osc_freq)
    truth = [
        TurnAnnotation(start_s=start, end_s=start + duration, source=AnnotationSource.synthetic_truth)
        for start, duration, _ in turns
    ]
    return t, omega, truth


def generate_session(spec: SessionSpec) -> tuple[SensorStream, list[TurnAnnotation]]:
    """
    The generate_session function synthesizes one recording and its ground truth.

    The vertical rate and gravity are expressed in the frame of a phone tilted by tilt_deg
    about its x axis; white noise is added to both sensors. Equal specs give bitwise equal
    streams.

    :param spec: SessionSpec: Session layout, noise levels and seed
    :return: The sensor stream and the exact pulse supports as annotations

    """
    rng = np.random.default_rng(spec.seed)
    t, omega, truth = yaw_profile(spec)
    tilt = math.radians(spec.tilt_deg)
    # world vertical seen from the phone frame
    vertical = np.array([0.0, math.sin(tilt), math.cos(tilt)])
    gyro = omega[:, None] * vertical + rng.normal(0.0, spec.gyro_noise_sd, (t.size, 3))
    accel = GRAVITY * vertical + rng.normal(0.0, spec.accel_noise_sd, (t.size, 3))
    stream = SensorStream(
        t=t,
        accel=accel,
        gyro=gyro,
        nominal_rate=spec.rate,
        session_id=spec.session_id,
        participant_id=spec.participant_id,
        day=spec.day,
        setting=spec.setting,
        wear_location=spec.wear_location,
    )
    logger.debug("synthesized %r: %d samples, %d turns", spec.session_id, len(stream), len(truth))
    return stream, truth


def _allocate_levels(spec: CohortSpec, rng: np.random.Generator) -> np.ndarray:
    weights = np.array([level.weight for level in spec.levels], dtype=float)
    weights /= weights.sum()
    if spec.balanced:
        # largest remainder
        exact = weights * spec.n_participants
        counts = np.floor(exact).astype(int)
        for i in np.argsort(-(exact - counts), kind="stable")[: spec.n_participants - counts.sum()]:
            counts[i] += 1
        levels = np.repeat(np.arange(len(weights)), counts)
        return rng.permutation(levels)
    return rng.choice(len(weights), size=spec.n_participants, p=weights)


def _van_der_corput(i: int) -> float:
    value, denom = 0.0, 1.0
    while i:
        denom *= 2
        i, bit = divmod(i, 2)
        value += bit / denom
    return value


def _spread_positions(m: int) -> np.ndarray:
    # every prefix of this order covers the quantile range evenly
    return np.argsort(np.argsort([_van_der_corput(i + 1) for i in range(m)], kind="stable"), kind="stable")


def _level_draws(level: DisabilityLevel, m: int, spec: CohortSpec, rng: np.random.Generator):
    if spec.balanced:
        u = (np.arange(m) + 0.5) / m
        counts = betabinom.ppf(u, spec.n_days, level.adherence_a, level.adherence_b)[::-1].astype(int)
        bases = level.duration_mean + level.duration_sd * norm.ppf((_spread_positions(m) + 0.5) / m)
        order = rng.permutation(m)
        counts, bases = counts[order], bases[order]
    else:
        counts = rng.binomial(spec.n_days, rng.beta(level.adherence_a, level.adherence_b, m))
        bases = rng.normal(level.duration_mean, level.duration_sd, m)
    return np.clip(counts, 1, spec.n_days), np.maximum(bases, MIN_TURN_DURATION_S)


def _day_effects(n: int, sd: float, balanced: bool, rng: np.random.Generator) -> np.ndarray:
    """
    The _day_effects function draws the log-duration offsets of a participant's test days.

    Day-to-day performance is Laplace distributed: most days sit close to the participant's
    typical pace, a few are clearly better or worse. Balanced cohorts use the n stratified
    Laplace quantiles rescaled to a standard deviation of exactly sd, in random day order.

    :param n: int: Number of test days
    :param sd: float: Day-to-day standard deviation
    :param balanced: bool: Stratified instead of random draws
    :param rng: np.random.Generator: Participant random stream
    :return: One offset per test day

    """
    if not balanced:
        return rng.laplace(0.0, sd / math.sqrt(2.0), n)
    if n < 2:
        return np.zeros(n)
    quantiles = laplace.ppf((np.arange(n) + 0.5) / n)
    return rng.permutation(quantiles / quantiles.std() * sd)


def _participant(
    spec: CohortSpec, index: int, level_index: int, n_tests: int, base: float
) -> ParticipantRecord:
    level = spec.levels[level_index]
    pid = f"P{index + 1:03d}"
    rng = np.random.default_rng([spec.seed, index])
    days = sorted(int(d) + 1 for d in rng.choice(spec.n_days, size=n_tests, replace=False))
    effects = _day_effects(n_tests, level.day_sd, spec.balanced, rng)
    sessions = []
    for day, effect in zip(days, effects):
        durations = base * math.exp(effect) * np.exp(rng.normal(0.0, level.turn_sd, spec.turns_per_test))
        sessions.append(
            SessionSpec(
                n_turns=spec.turns_per_test,
                turn_duration=[float(d) for d in np.maximum(durations, MIN_TURN_DURATION_S)],
                walk_bout=spec.walk_bout,
                pelvis_osc_amp=spec.pelvis_osc_amp,
                gyro_noise_sd=spec.gyro_noise_sd,
                accel_noise_sd=spec.accel_noise_sd,
                rate=spec.rate,
                first_sign=int(rng.choice([1, -1])),
                seed=int(rng.integers(2**31)),
                session_id=f"{pid}_d{day:02d}",
                participant_id=pid,
                day=day,
                setting=spec.setting,
                wear_location=spec.wear_location,
            )
        )
    low, high = level.edss_range
    grid = np.arange(low, high + 0.25, 0.5)
    return ParticipantRecord(
        participant_id=pid,
        level=level.name,
        level_index=level_index,
        edss_proxy=float(rng.choice(grid)),
        ambulation=int(rng.integers(level.ambulation_range[0], level.ambulation_range[1] + 1)),
        t25fw_s=float(level.t25fw_mean * math.exp(rng.normal(0.0, 0.1))),
        fall=bool(rng.random() < level.fall_prob),
        aid=bool(rng.random() < level.aid_prob),
        base_duration=float(base),
        days=days,
        sessions=sessions,
    )


def generate_cohort(spec: CohortSpec) -> CohortBundle:
    """
    The generate_cohort function lays out a cohort of participants with daily test sessions.

    Each participant belongs to one disability level, which sets the distribution of turn
    durations, of the number of tests over n_days (beta-binomial) and of the covariates.
    With balanced set, test counts and base durations are stratified quantiles within each
    level, interleaved so participants with many tests span the whole duration range, and
    Laplace day effects are stratified quantiles scaled to day_sd per participant.

    :param spec: CohortSpec: Cohort layout and seed
    :return: CohortBundle with one record per participant; sessions are specs, rendered by generate_session

    """
    rng = np.random.default_rng(spec.seed)
    assignment = _allocate_levels(spec, rng)
    counts = np.zeros(spec.n_participants, dtype=int)
    bases = np.zeros(spec.n_participants)
    for level_index, level in enumerate(spec.levels):
        members = np.flatnonzero(assignment == level_index)
        if members.size:
            counts[members], bases[members] = _level_draws(level, members.size, spec, rng)
    participants = [
        _participant(spec, i, int(assignment[i]), int(counts[i]), float(bases[i]))
        for i in range(spec.n_participants)
    ]
    logger.info(
        "cohort of %d participants, %d sessions (mean %.2f tests)",
        len(participants),
        int(counts.sum()),
        float(counts.mean()),
    )
    return CohortBundle(spec=spec, participants=participants)


def cohort_sessions(bundle: CohortBundle) -> Iterator[SessionSpec]:
    for participant in bundle.participants:
        yield from participant.sessions
