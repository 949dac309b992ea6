"""
Turn detection on smartphone IMU streams.

The rotational rate about the vertical axis is obtained by projecting the
gyroscope onto a low-passed gravity estimate, then smoothed with a zero-phase
Butterworth filter. Turns are runs of the smoothed rate that reach the trigger
threshold, widened by hysteresis down to the end threshold, merged when
same-direction fragments are close together, and finally gated on angle and
duration.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.integrate import cumulative_trapezoid
from scipy.signal import butter, sosfiltfilt

from src.conf import messages
from src.schemas.sensor import SensorStream
from src.schemas.turn import DetectorConfig, Turn, YawRateSeries
from src.servises.errors import StreamFormatError, StreamQualityError
from src.servises.ingest import is_uniform, resample_uniform, resolve_wear_role

logger = logging.getLogger(__name__)

GRAVITY_CUTOFF_HZ = 0.25
FILTER_ORDER = 4
FREE_FALL_MS2 = 1.0


def lowpass(data: np.ndarray, cutoff: float, rate: float, order: int = FILTER_ORDER) -> np.ndarray:
    """
    The lowpass function applies a zero-phase Butterworth low-pass filter along the first axis.

    :param data: np.ndarray: Samples, time along axis 0
    :param cutoff: float: Cutoff frequency in Hz
    :param rate: float: Sampling rate in Hz
    :param order: int: Filter order of a single pass
    :return: The filtered samples, same shape as data

    """
    if not 0 < cutoff < rate / 2:
        raise ValueError(f"cutoff {cutoff} Hz must lie below the Nyquist frequency {rate / 2} Hz")
    sos = butter(order, cutoff, btype="low", fs=rate, output="sos")
    padlen = min(3 * (2 * len(sos) + 1), data.shape[0] - 1)
    return sosfiltfilt(sos, data, axis=0, padlen=padlen)


def _check_free_fall(stream: SensorStream) -> None:
    magnitude = np.linalg.norm(stream.accel, axis=1)
    window = max(1, int(round(stream.nominal_rate)))
    if magnitude.size < window:
        low = bool(np.all(magnitude < FREE_FALL_MS2))
    else:
        low = bool(np.any(sliding_window_view(magnitude, window).max(axis=1) < FREE_FALL_MS2))
    if low:
        raise StreamQualityError(f"{messages.FREE_FALL} ({stream.session_id or 'session'})")


def estimate_vertical_rate(stream: SensorStream, filter_cutoff: float = 1.5) -> YawRateSeries:
    """
    The estimate_vertical_rate function projects the gyroscope onto the gravity direction.

    Gravity is the accelerometer low-passed at 0.25 Hz and normalized. The projected rate
    is low-passed at filter_cutoff with a 4th-order Butterworth run forward and backward.

    :param stream: SensorStream: Uniformly sampled recording
    :param filter_cutoff: float: Cutoff of the yaw-rate filter in Hz
    :return: YawRateSeries on the stream time grid

    """
    if len(stream) < 2:
        raise StreamFormatError(messages.TOO_FEW_SAMPLES)
    if not is_uniform(stream):
        raise StreamQualityError(messages.NOT_UNIFORM)
    _check_free_fall(stream)
    rate = stream.nominal_rate
    gravity = lowpass(stream.accel, GRAVITY_CUTOFF_HZ, rate)
    norm = np.linalg.norm(gravity, axis=1, keepdims=True)
    if np.any(norm < FREE_FALL_MS2):
        raise StreamQualityError(messages.FREE_FALL)
    omega = np.einsum("ij,ij->i", stream.gyro, gravity / norm)
    return YawRateSeries(t=stream.t, omega_v=lowpass(omega, filter_cutoff, rate))


@dataclass
class _Candidate:
    start_s: float
    end_s: float
    cum_start: float
    cum_end: float
    peak: float

    @property
    def angle(self) -> float:
        return self.cum_end - self.cum_start

    def same_direction(self, other: "_Candidate") -> bool:
        return np.sign(self.angle) == np.sign(other.angle)

    def absorb(self, other: "_Candidate") -> None:
        self.end_s = other.end_s
        self.cum_end = other.cum_end
        self.peak = max(self.peak, other.peak)


def _accept(candidate: _Candidate, config: DetectorConfig) -> Optional[Turn]:
    duration = candidate.end_s - candidate.start_s
    if abs(candidate.angle) < config.min_angle:
        return None
    if not config.min_duration <= duration <= config.max_duration:
        return None
    return Turn(
        start_s=candidate.start_s,
        end_s=candidate.end_s,
        angle=candidate.angle,
        peak_rate=candidate.peak,
    )


def _merge_and_gate(candidates: Iterable[_Candidate], config: DetectorConfig) -> list[Turn]:
    merged: list[_Candidate] = []
    for candidate in candidates:
        if (
            merged
            and merged[-1].same_direction(candidate)
            and candidate.start_s - merged[-1].end_s < config.merge_gap
        ):
            merged[-1].absorb(candidate)
        else:
            merged.append(candidate)
    turns = [_accept(c, config) for c in merged]
    return [turn for turn in turns if turn is not None]


def segment_turns(yaw: YawRateSeries, config: DetectorConfig = DetectorConfig()) -> list[Turn]:
    """
    The segment_turns function finds turns in an already smoothed vertical rate series.

    Runs where the absolute rate stays at or above end_threshold are candidate turns
    when they contain at least one sample at or above rate_threshold. The angle is the
    trapezoidal integral of the rate between the run boundaries.

    :param yaw: YawRateSeries: Smoothed vertical rotational rate
    :param config: DetectorConfig: Thresholds and gates
    :return: Accepted turns, sorted and non-overlapping

    """
    omega = yaw.omega_v
    t = yaw.t
    if omega.size < 2:
        return []
    magnitude = np.abs(omega)
    active = magnitude >= config.end_threshold
    trigger = magnitude >= config.rate_threshold
    edges = np.diff(np.concatenate(([0], active.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    cum = cumulative_trapezoid(omega, t, initial=0)

    candidates = [
        _Candidate(
            start_s=float(t[s]),
            end_s=float(t[e]),
            cum_start=float(cum[s]),
            cum_end=float(cum[e]),
            peak=float(magnitude[s : e + 1].max()),
        )
        for s, e in zip(starts, ends)
        if e > s and trigger[s : e + 1].any()
    ]
    return _merge_and_gate(candidates, config)


class TurnSegmenter:
    """
    Single-pass version of :func:`segment_turns`.

    Feed smoothed vertical rate samples one at a time with :meth:`push`; accepted turns are
    returned as soon as no later fragment can merge into them. Call :meth:`flush` at the end
    of the stream. State is a handful of scalars plus the open run and one pending candidate.
    """

    def __init__(self, config: DetectorConfig = DetectorConfig()):
        self.config = config
        self._prev_t: Optional[float] = None
        self._prev_omega = 0.0
        self._cum = 0.0
        self._run: Optional[_Candidate] = None
        self._run_triggered = False
        self._pending: Optional[_Candidate] = None

    def push(self, t: float, omega: float) -> list[Turn]:
        if self._prev_t is not None:
            self._cum += (t - self._prev_t) * (omega + self._prev_omega) / 2.0
        self._prev_t, self._prev_omega = t, omega
        magnitude = abs(omega)
        emitted: list[Turn] = []

        if magnitude >= self.config.end_threshold:
            if self._run is None:
                self._run = _Candidate(t, t, self._cum, self._cum, magnitude)
                self._run_triggered = False
            self._run.end_s, self._run.cum_end = t, self._cum
            self._run.peak = max(self._run.peak, magnitude)
            self._run_triggered |= magnitude >= self.config.rate_threshold
        elif self._run is not None:
            emitted += self._close_run()

        pending = self._pending
        if pending is not None and t - pending.end_s >= self.config.merge_gap:
            run_may_merge = self._run is not None and self._run.start_s - pending.end_s < self.config.merge_gap
            if not run_may_merge:
                emitted += self._release()
        return emitted

    def flush(self) -> list[Turn]:
        emitted = self._close_run() if self._run is not None else []
        return emitted + self._release()

    def _close_run(self) -> list[Turn]:
        run, triggered = self._run, self._run_triggered
        self._run = None
        if not triggered or run.end_s <= run.start_s:
            return []
        pending = self._pending
        if (
            pending is not None
            and pending.same_direction(run)
            and run.start_s - pending.end_s < self.config.merge_gap
        ):
            pending.absorb(run)
            return []
        emitted = self._release()
        self._pending = run
        return emitted

    def _release(self) -> list[Turn]:
        pending, self._pending = self._pending, None
        if pending is None:
            return []
        turn = _accept(pending, self.config)
        return [] if turn is None else [turn]


def detect_turns(stream: SensorStream, config: DetectorConfig = DetectorConfig()) -> list[Turn]:
    """
    The detect_turns function runs the full detector on a recording.

    Streams that are not uniformly sampled are first resampled to their nominal rate.
    Each accepted turn is labelled with the wear role of the phone for its direction.

    :param stream: SensorStream: The recording
    :param config: DetectorConfig: Thresholds and gates
    :return: Accepted turns, sorted and non-overlapping; an empty list when none

    """
    if len(stream) < 2:
        raise StreamFormatError(messages.TOO_FEW_SAMPLES)
    if stream.span < config.min_duration:
        raise StreamQualityError(messages.STREAM_TOO_SHORT)
    if not is_uniform(stream):
        logger.info("resampling session %r to %.3f Hz", stream.session_id, stream.nominal_rate)
        stream = resample_uniform(stream, stream.nominal_rate)
    yaw = estimate_vertical_rate(stream, config.filter_cutoff)
    turns = [
        turn.model_copy(update={"wear_role": resolve_wear_role(stream.wear_location, turn.direction)})
        for turn in segment_turns(yaw, config)
    ]
    logger.debug("session %r: %d turns", stream.session_id, len(turns))
    return turns
