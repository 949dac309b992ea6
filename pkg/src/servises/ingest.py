import logging
import math

import numpy as np

from src.conf import messages
from src.schemas.sensor import SensorStream, TurnDirection, WearLocation, WearRole
from src.servises.errors import StreamFormatError, StreamQualityError

logger = logging.getLogger(__name__)

MAX_GAP_S = 0.2

_POCKET_ROLES = {
    # (front/back, same side as the turn) -> role
    ("front", True): WearRole.pocket_front_inner,
    ("front", False): WearRole.pocket_front_outer,
    ("back", True): WearRole.pocket_back_inner,
    ("back", False): WearRole.pocket_back_outer,
}


def find_gaps(stream: SensorStream, max_gap: float = MAX_GAP_S) -> list[tuple[float, float]]:
    """
    The find_gaps function lists every pair of consecutive timestamps further apart than max_gap.

    :param stream: SensorStream: The recording to inspect
    :param max_gap: float: Largest tolerated spacing in seconds
    :return: A list of (gap start, gap end) tuples

    """
    dt = np.diff(stream.t)
    idx = np.flatnonzero(dt > max_gap)
    return [(float(stream.t[i]), float(stream.t[i + 1])) for i in idx]


def gap_warnings(stream: SensorStream) -> tuple[str, ...]:
    gaps = find_gaps(stream)
    for start, end in gaps:
        logger.warning(
            "%s in session %r: %.3f s between t=%.3f and t=%.3f",
            messages.TIMESTAMP_GAP,
            stream.session_id,
            end - start,
            start,
            end,
        )
    return tuple(f"{messages.TIMESTAMP_GAP} {start:.3f}-{end:.3f}" for start, end in gaps)


def is_uniform(stream: SensorStream, rtol: float = 1e-6) -> bool:
    if len(stream) < 3:
        return True
    dt = np.diff(stream.t)
    return bool(np.allclose(dt, 1.0 / stream.nominal_rate, rtol=rtol, atol=1e-9))


def resample_uniform(stream: SensorStream, rate: float) -> SensorStream:
    """
    The resample_uniform function linearly interpolates every channel onto the grid
    t0, t0 + 1/rate, ... covering the stream span.

    Gaps are interpolated through; they are reported as warnings on the returned stream.

    :param stream: SensorStream: The recording to resample
    :param rate: float: Target sampling rate in Hz
    :return: A new SensorStream with nominal_rate equal to rate

    """
    if not rate > 0:
        raise StreamFormatError(messages.RATE_NOT_POSITIVE)
    if len(stream) < 2:
        raise StreamFormatError(messages.TOO_FEW_SAMPLES)
    if stream.span < 2.0 / rate - 1e-9:
        raise StreamFormatError(messages.STREAM_TOO_SHORT)

    n = int(math.floor(stream.span * rate + 1e-9)) + 1
    grid = stream.t[0] + np.arange(n) / rate

    def interp(channels: np.ndarray) -> np.ndarray:
        return np.column_stack([np.interp(grid, stream.t, channels[:, j]) for j in range(3)])

    return stream.replace(
        t=grid,
        accel=interp(stream.accel),
        gyro=interp(stream.gyro),
        mag=None if stream.mag is None else interp(stream.mag),
        nominal_rate=float(rate),
        warnings=tuple(dict.fromkeys(stream.warnings + gap_warnings(stream))),
    )


def shift_stream(stream: SensorStream, delta: float) -> SensorStream:
    """
    The shift_stream function adds delta seconds to every timestamp.
    Samples that would land before t = 0 are dropped.

    :param stream: SensorStream: The recording to shift
    :param delta: float: Shift in seconds, positive delays the stream
    :return: A shifted copy of the stream

    """
    t = stream.t + delta
    keep = t >= 0
    return stream.replace(
        t=t[keep],
        accel=stream.accel[keep],
        gyro=stream.gyro[keep],
        mag=None if stream.mag is None else stream.mag[keep],
    )


def align_stream(stream: SensorStream, lag: float) -> SensorStream:
    # undo a delay measured by sync_offset
    return shift_stream(stream, -lag)


def _gyro_magnitude(stream: SensorStream) -> np.ndarray:
    return np.linalg.norm(stream.gyro, axis=1)


def sync_offset(a: SensorStream, b: SensorStream, max_lag: float) -> float:
    """
    The sync_offset function estimates how far stream b lags behind stream a.

    Both streams are compared on a's time stamps, so a difference in start times counts
    toward the lag. For every lag L on the sampling grid in [-max_lag, max_lag] the
    gyroscope magnitude of b is linearly interpolated at t + L and correlated (Pearson)
    with the magnitude of a over the samples where both streams exist. Ties go to the
    smaller absolute lag.

    :param a: SensorStream: Reference stream
    :param b: SensorStream: Stream to align, sampled at the same rate as a
    :param max_lag: float: Largest lag to scan, in seconds
    :return: The lag L in seconds; shifting b by -L aligns it to a

    """
    if not math.isclose(a.nominal_rate, b.nominal_rate, rel_tol=1e-9):
        raise StreamFormatError(messages.RATE_MISMATCH)
    if max_lag >= min(a.span, b.span):
        raise StreamFormatError(messages.MAX_LAG_TOO_LARGE)
    rate = a.nominal_rate
    x = _gyro_magnitude(a)
    y = _gyro_magnitude(b)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise StreamQualityError(messages.ZERO_VARIANCE_CHANNEL)

    eps = 1e-6 / rate
    max_shift = int(math.floor(max_lag * rate + 1e-9))
    best_shift, best_r = 0, -np.inf
    # scan in order of increasing |lag| so the first maximum wins ties
    for shift in sorted(range(-max_shift, max_shift + 1), key=lambda s: (abs(s), s)):
        target = a.t + shift / rate
        inside = (target >= b.t[0] - eps) & (target <= b.t[-1] + eps)
        if np.count_nonzero(inside) < 3:
            continue
        xs = x[inside]
        ys = np.interp(target[inside], b.t, y)
        sx, sy = xs.std(), ys.std()
        if sx == 0 or sy == 0:
            continue
        r = float(np.mean((xs - xs.mean()) * (ys - ys.mean())) / (sx * sy))
        if r > best_r + 1e-12:
            best_shift, best_r = shift, r
    logger.debug("sync offset %d samples (r=%.4f)", best_shift, best_r)
    return best_shift / rate


def resolve_wear_role(physical: WearLocation, turn_direction: TurnDirection) -> WearRole:
    """
    The resolve_wear_role function relabels a pocket location by the role of its leg in the turn:
    the leg on the turning side is inner, the other one is outer. Belt locations keep their label.

    :param physical: WearLocation: Where the phone was carried
    :param turn_direction: TurnDirection: Direction of the turn
    :return: The wear role during that turn

    """
    if physical is WearLocation.belt_front:
        return WearRole.belt_front
    if physical is WearLocation.belt_back:
        return WearRole.belt_back
    _, row, side = physical.value.split("_")
    turning_side = "left" if TurnDirection(turn_direction) is TurnDirection.left else "right"
    return _POCKET_ROLES[(row, side == turning_side)]
