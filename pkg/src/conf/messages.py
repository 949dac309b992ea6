EMPTY_FILE = "empty file"
MALFORMED_ROW = "malformed row"
MISSING_COLUMNS = "missing columns"
NON_MONOTONE_TIMESTAMPS = "non-monotone timestamps"
NEGATIVE_TIMESTAMP = "negative timestamp"
NON_FINITE_VALUE = "non-finite value"
UNKNOWN_FORMAT = "unknown format"
TOO_FEW_SAMPLES = "at least 2 samples are required"
STREAM_TOO_SHORT = "stream span is too short"
RATE_NOT_POSITIVE = "rate must be positive"
RATE_MISMATCH = "streams must share the same sampling rate"
MAX_LAG_TOO_LARGE = "max_lag must be shorter than both stream spans"
ZERO_VARIANCE_CHANNEL = "zero-variance channel"
TIMESTAMP_GAP = "timestamp gap"
FREE_FALL = "accelerometer magnitude below 1 m/s^2 for a full second"
NOT_UNIFORM = "stream is not uniformly sampled"

END_BEFORE_START = "end before start"
OVERLAPPING_ANNOTATIONS = "overlapping annotations"
UNSORTED_TURNS = "turn list is unsorted or overlapping"

INSUFFICIENT_PARTICIPANTS = "insufficient participants"
INSUFFICIENT_TESTS = "insufficient tests"
ZERO_TOTAL_VARIANCE = "zero total variance"
ZERO_RANK_VARIANCE = "zero rank variance"
IDENTICAL_VALUES = "all values identical across both groups"
TOO_MANY_UNDEFINED = "statistic undefined on too many resamples"
EMPTY_SCORES = "no defined scores"
UNDEFINED_SCORE = "undefined detection score"
UNMATCHED_SESSIONS = "unmatched session ids"
RELIABILITY_UNAVAILABLE = "reliability unavailable"
EMPTY_INPUT = "no input files given"
UNREADABLE_INPUT = "cannot read input"
MISSING_WEAR_LOCATION = "rows without wear_location skipped"
