"""
Agreement, test-retest reliability, correlation and group-difference statistics.

Intraclass correlations come from two-way ANOVA mean squares, confidence intervals
from a percentile bootstrap over participants in which every replicate draws its
random stream from ``(seed, replicate_index)``.
"""

import itertools
import logging
import math
from typing import Callable, Literal, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import stats as sps

from src.conf import messages
from src.schemas.stats import (
    AgreementResult,
    BandScheme,
    CorrelationResult,
    Estimate,
    GroupComparison,
    IccDefinition,
    IccModel,
    PairedSeries,
    ReliabilityResult,
)
from src.servises.errors import (
    BootstrapError,
    InsufficientDataError,
    StatisticUndefinedError,
)
from src.servises.measures import SplitMode, draw_split_medians, split_medians, turn_speed_summary

logger = logging.getLogger(__name__)

Z_95 = 1.96
MDC_FACTOR = Z_95 * math.sqrt(2.0)
MAX_UNDEFINED_FRACTION = 0.2
EXACT_MW_LIMIT = 400
T25FW_DISTANCE_M = 7.62

Seed = Union[int, Sequence[int]]
VarianceMethod = Literal["moments", "reml"]

EDSS_GROUPS = {"EDSS [0,3.5]": (0.0, 3.5), "EDSS [4,5.5]": (4.0, 5.5), "EDSS [6,6.5]": (6.0, 6.5)}
AMBULATION_GROUPS = {"Ambulation [0,1]": (0, 1), "Ambulation [2,5]": (2, 5), "Ambulation [6,9]": (6, 9)}
FALL_GROUPS = {"no fall": (0, 0), "fall": (1, 1)}
AID_GROUPS = {"no aid": (0, 0), "aid": (1, 1)}

_ICC_BANDS = [(0.90, "excellent"), (0.75, "good"), (0.50, "moderate")]
_RHO_BANDS = [(0.80, "very strong"), (0.60, "strong"), (0.40, "moderate"), (0.20, "weak")]
_STARS = [(0.0001, "****"), (0.001, "***"), (0.01, "**"), (0.05, "*")]


def anova_mean_squares(matrix: np.ndarray) -> tuple[float, float, float]:
    """
    The anova_mean_squares function decomposes a complete subjects x measurements matrix.

    :param matrix: np.ndarray: n subjects by k measurements, no missing cells
    :return: Mean squares of rows (subjects), columns (measurements) and residual

    """
    x = np.asarray(matrix, dtype=float)
    n, k = x.shape
    grand = x.mean()
    row_means = x.mean(axis=1, keepdims=True)
    col_means = x.mean(axis=0, keepdims=True)
    ss_rows = k * float(np.sum((row_means - grand) ** 2))
    ss_cols = n * float(np.sum((col_means - grand) ** 2))
    ss_resid = float(np.sum((x - row_means - col_means + grand) ** 2))
    return ss_rows / (n - 1), ss_cols / (k - 1), ss_resid / ((n - 1) * (k - 1))


def _check_matrix(matrix) -> np.ndarray:
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if x.shape[0] < 3:
        raise InsufficientDataError(messages.INSUFFICIENT_PARTICIPANTS)
    if x.shape[1] < 2:
        raise InsufficientDataError("at least 2 measurements per subject are required")
    if not np.isfinite(x).all():
        raise ValueError(messages.NON_FINITE_VALUE)
    return x


def icc_agreement_single(
    matrix,
    model: IccModel = IccModel.two_way_mixed_31,
    definition: IccDefinition = IccDefinition.absolute,
) -> float:
    """
    The icc_agreement_single function computes a single-measurement intraclass correlation.

    Absolute agreement is (MSR - MSE) / (MSR + (k - 1) MSE + k (MSC - MSE) / n), the same
    expression for the two-way mixed and the two-way random model. Consistency drops the
    column term.

    :param matrix: n subjects by k measurements, n >= 3, k >= 2
    :param model: IccModel: two_way_mixed_31 or two_way_random_21
    :param definition: IccDefinition: absolute or consistency
    :return: The coefficient, clipped to [-1, 1]

    """
    x = _check_matrix(matrix)
    if float(np.sum((x - x.mean()) ** 2)) == 0.0:
        raise StatisticUndefinedError(messages.ZERO_TOTAL_VARIANCE)
    n, k = x.shape
    msr, msc, mse = anova_mean_squares(x)
    if IccDefinition(definition) is IccDefinition.consistency:
        denominator = msr + (k - 1) * mse
    else:
        denominator = msr + (k - 1) * mse + k * (msc - mse) / n
    if denominator <= 0:
        raise StatisticUndefinedError(messages.ZERO_TOTAL_VARIANCE)
    logger.debug("ICC %s/%s on %dx%d", IccModel(model).value, IccDefinition(definition).value, n, k)
    return float(np.clip((msr - mse) / denominator, -1.0, 1.0))


def within_variance(matrix, method: VarianceMethod = "moments") -> float:
    """
    The within_variance function estimates the within-subject residual variance of a
    one-way random-intercept model.

    The method of moments returns the within-subject mean square. REML on the balanced
    design agrees with it unless the between-subject component would be negative, in
    which case that component is fixed at zero and the pooled variance is returned.

    :param matrix: n subjects by k repeated measurements
    :param method: VarianceMethod: moments or reml
    :return: Residual variance

    """
    x = _check_matrix(matrix)
    n, k = x.shape
    row_means = x.mean(axis=1, keepdims=True)
    msw = float(np.sum((x - row_means) ** 2)) / (n * (k - 1))
    if method == "moments":
        return msw
    if method == "reml":
        msb = k * float(np.sum((row_means - x.mean()) ** 2)) / (n - 1)
        if msb >= msw:
            return msw
        return float(np.sum((x - x.mean()) ** 2)) / (n * k - 1)
    raise ValueError(f"unknown variance method: {method}")


def bland_altman(pairs: PairedSeries) -> tuple[float, float, float]:
    """
    The bland_altman function returns the bias and the 95% limits of agreement of a - b.

    :param pairs: PairedSeries: At least 3 complete pairs
    :return: (bias, lower limit, upper limit)

    """
    d = np.asarray(pairs.a, dtype=float) - np.asarray(pairs.b, dtype=float)
    if d.size < 3:
        raise InsufficientDataError(messages.INSUFFICIENT_PARTICIPANTS)
    bias = float(d.mean())
    spread = Z_95 * float(d.std(ddof=1))
    return bias, bias - spread, bias + spread


def _replicate_rng(seed: Seed, index: int) -> np.random.Generator:
    prefix = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    return np.random.default_rng([*prefix, index])


def bootstrap_replicates(
    stat: Callable,
    data: Sequence,
    n_reps: int = 500,
    seed: Seed = 0,
    pass_rng: bool = False,
) -> np.ndarray:
    """
    The bootstrap_replicates function evaluates stat on participant resamples.

    Replicate i resamples len(data) items with replacement using
    ``np.random.default_rng([*seed, i])``; with pass_rng the same generator is handed to stat
    for any further randomization. A replicate on which stat raises a ValueError or returns
    a non-finite value is recorded as NaN.

    :param stat: Callable: stat(sample) or stat(sample, rng), scalar or tuple valued
    :param data: Sequence: One item per participant
    :param n_reps: int: Number of replicates
    :param seed: int | Sequence[int]: Seed prefix
    :param pass_rng: bool: Whether stat takes the replicate generator
    :return: Array of shape (n_reps, m)

    """
    n = len(data)
    if n < 3:
        raise InsufficientDataError(messages.INSUFFICIENT_PARTICIPANTS)
    as_array = isinstance(data, np.ndarray)
    rows: list[Optional[np.ndarray]] = []
    for i in range(n_reps):
        rng = _replicate_rng(seed, i)
        idx = rng.integers(0, n, size=n)
        sample = data[idx] if as_array else [data[j] for j in idx]
        try:
            value = stat(sample, rng) if pass_rng else stat(sample)
        except ValueError:
            rows.append(None)
            continue
        rows.append(np.atleast_1d(np.asarray(value, dtype=float)))
    width = next((r.size for r in rows if r is not None), 1)
    values = np.vstack([np.full(width, np.nan) if r is None else r for r in rows])
    values[~np.isfinite(values)] = np.nan
    return values


def percentile_ci(replicates: np.ndarray, max_undefined: float = MAX_UNDEFINED_FRACTION) -> np.ndarray:
    """
    The percentile_ci function turns replicate columns into (2.5th, 97.5th) percentile intervals.

    :param replicates: np.ndarray: Output of bootstrap_replicates
    :param max_undefined: float: Largest tolerated fraction of undefined replicates
    :return: Array of shape (m, 2)

    """
    replicates = np.atleast_2d(replicates)
    n_reps = replicates.shape[0]
    bounds = []
    for column in replicates.T:
        undefined = int(np.isnan(column).sum())
        if undefined > max_undefined * n_reps:
            raise BootstrapError(messages.TOO_MANY_UNDEFINED, undefined, n_reps)
        bounds.append(np.percentile(column[~np.isnan(column)], [2.5, 97.5]))
    return np.array(bounds)


def bootstrap_ci(
    stat: Callable,
    data: Sequence,
    n_reps: int = 500,
    seed: Seed = 0,
    pass_rng: bool = False,
) -> tuple[float, float]:
    """
    The bootstrap_ci function returns a percentile 95% confidence interval of a scalar statistic.

    :param stat: Callable: Statistic over a resample of data
    :param data: Sequence: One item per participant, at least 3
    :param n_reps: int: Number of replicates
    :param seed: int | Sequence[int]: Seed prefix, results are identical for identical seeds
    :param pass_rng: bool: Hand the replicate generator to stat
    :return: (lower, upper)

    """
    lower, upper = percentile_ci(bootstrap_replicates(stat, data, n_reps, seed, pass_rng))[0]
    return float(lower), float(upper)


def classify_band(value: float, scheme: BandScheme = BandScheme.icc_koo_li) -> str:
    """
    >>> classify_band(0.87)
    'good'
    >>> classify_band(-0.79, BandScheme.rho_swinscow)
    'strong'
    """
    if BandScheme(scheme) is BandScheme.rho_swinscow:
        magnitude = abs(value)
        return next((label for cut, label in _RHO_BANDS if magnitude >= cut), "very weak")
    return next((label for cut, label in _ICC_BANDS if value >= cut), "poor")


def p_stars(p: float) -> str:
    """
    >>> p_stars(0.0004), p_stars(0.2)
    ('***', 'ns')
    """
    return next((stars for cut, stars in _STARS if p < cut), "ns")


def agreement(
    pairs: PairedSeries, n_reps: int = 500, seed: int = 0, label: Optional[str] = None
) -> AgreementResult:
    """
    The agreement function compares two measurement systems on the same participants.

    It reports ICC(3,1) for absolute agreement, Bland-Altman bias and limits of agreement,
    all with bootstrap CIs over participants, and the median and IQR of system a.

    :param pairs: PairedSeries: a is the system under test, b the reference
    :param n_reps: int: Bootstrap replicates
    :param seed: int: Bootstrap seed
    :param label: str: Row label for reports, such as the wear location
    :return: AgreementResult

    """
    matrix = pairs.as_matrix()

    def stat(sample: np.ndarray) -> tuple:
        icc = icc_agreement_single(sample, IccModel.two_way_mixed_31)
        d = sample[:, 0] - sample[:, 1]
        bias, spread = d.mean(), Z_95 * d.std(ddof=1)
        return icc, bias, bias - spread, bias + spread

    icc = icc_agreement_single(matrix, IccModel.two_way_mixed_31)
    bias, loa_lower, loa_upper = bland_altman(pairs)
    ci = percentile_ci(bootstrap_replicates(stat, matrix, n_reps, seed))
    speed_median, speed_iqr = turn_speed_summary(pairs.a)
    estimates = [
        Estimate(value=v, ci_lower=float(lo), ci_upper=float(hi))
        for v, (lo, hi) in zip((icc, bias, loa_lower, loa_upper), ci)
    ]
    return AgreementResult(
        n=len(pairs),
        speed_median=speed_median,
        speed_iqr=speed_iqr,
        icc31=estimates[0],
        bias=estimates[1],
        loa_lower=estimates[2],
        loa_upper=estimates[3],
        icc_band=classify_band(icc),
        label=label,
    )


def _split_matrix(values: Sequence[np.ndarray], k: int, rng: np.random.Generator, mode: SplitMode) -> np.ndarray:
    return np.array([split_medians(v, k, rng, mode) for v in values])


def _reliability_point(
    values: Sequence[np.ndarray],
    k: int,
    rng: np.random.Generator,
    n_partitions: int,
    mode: SplitMode,
    variance_method: VarianceMethod,
) -> tuple[float, float]:
    # participants x partitions x 2
    stack = np.stack([draw_split_medians(v, k, rng, n_partitions, mode) for v in values])
    iccs, variances = [], []
    for p in range(stack.shape[1]):
        matrix = stack[:, p, :]
        iccs.append(icc_agreement_single(matrix, IccModel.two_way_random_21))
        variances.append(within_variance(matrix, variance_method))
    return float(np.mean(iccs)), float(np.mean(variances))


def reliability_curve(
    per_participant_tests: Mapping[str, Sequence[float]],
    k_range: Sequence[int] = range(1, 8),
    seed: int = 0,
    n_reps: int = 500,
    n_partitions: int = 500,
    mode: SplitMode = "random",
    variance_method: VarianceMethod = "moments",
) -> list[ReliabilityResult]:
    """
    The reliability_curve function computes test-retest reliability of participant aggregates
    built from k tests, for every k in k_range.

    Participants with at least 2k tests are retained. Their tests are split into two
    disjoint sets of k and each set is reduced to its median. ICC(2,1) and the within-participant
    variance of the resulting n x 2 matrix are averaged over n_partitions random splits;
    SEM is the square root of that variance and MDC = 1.96 * sqrt(2) * SEM. CIs come from a
    participant bootstrap in which every replicate draws a fresh split.

    :param per_participant_tests: Mapping[str, Sequence[float]]: Per-test turn speed medians
    :param k_range: Sequence[int]: Numbers of aggregated tests
    :param seed: int: Seed for partitions and bootstrap
    :param n_reps: int: Bootstrap replicates
    :param n_partitions: int: Random splits averaged into the point estimate, drawn in one vectorized pass
    :param mode: SplitMode: random or chronological split
    :param variance_method: VarianceMethod: moments or reml
    :return: One ReliabilityResult per k

    """
    tests = {pid: np.asarray(v, dtype=float) for pid, v in per_participant_tests.items()}
    if sum(v.size >= 2 for v in tests.values()) < 3:
        raise InsufficientDataError(messages.INSUFFICIENT_PARTICIPANTS)

    results = []
    for k in k_range:
        retained = [v for v in tests.values() if v.size >= 2 * k]
        excluded = len(tests) - len(retained)
        if excluded:
            logger.warning("k=%d: %d participants with fewer than %d tests excluded", k, excluded, 2 * k)
        if len(retained) < 3:
            logger.warning("%s for k=%d: %d participants retained", messages.RELIABILITY_UNAVAILABLE, k, len(retained))
            results.append(ReliabilityResult(k=k, n=len(retained), available=False))
            continue

        icc, var_within = _reliability_point(
            retained, k, np.random.default_rng([seed, k]), n_partitions, mode, variance_method
        )
        sem = math.sqrt(var_within)

        def stat(sample, rng, k=k):
            matrix = _split_matrix(sample, k, rng, mode)
            return (
                icc_agreement_single(matrix, IccModel.two_way_random_21),
                math.sqrt(within_variance(matrix, variance_method)),
            )

        (icc_lo, icc_hi), (sem_lo, sem_hi) = percentile_ci(
            bootstrap_replicates(stat, retained, n_reps, (seed, k), pass_rng=True)
        )
        results.append(
            ReliabilityResult(
                k=k,
                n=len(retained),
                icc21=Estimate(value=icc, ci_lower=float(icc_lo), ci_upper=float(icc_hi)),
                sem=Estimate(value=sem, ci_lower=float(sem_lo), ci_upper=float(sem_hi)),
                mdc=Estimate(
                    value=MDC_FACTOR * sem,
                    ci_lower=MDC_FACTOR * float(sem_lo),
                    ci_upper=MDC_FACTOR * float(sem_hi),
                ),
                var_within=var_within,
            )
        )
    return results


def mdc_from_sem(sem: float) -> float:
    """
    >>> round(mdc_from_sem(0.15), 4)
    0.4158
    """
    return MDC_FACTOR * sem


def _complete_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal lengths")
    keep = np.isfinite(x) & np.isfinite(y)
    return x[keep], y[keep]


def spearman(x: Sequence[float], y: Sequence[float], label: Optional[str] = None) -> CorrelationResult:
    """
    The spearman function computes Spearman's rank correlation with tie-averaged ranks.

    :param x: Sequence[float]: First variable; incomplete pairs are dropped
    :param y: Sequence[float]: Second variable
    :param label: str: Row label for reports
    :return: CorrelationResult with the strength band and a two-sided p-value

    """
    x, y = _complete_pairs(x, y)
    if x.size < 3:
        raise InsufficientDataError(messages.INSUFFICIENT_PARTICIPANTS)
    rx, ry = sps.rankdata(x), sps.rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        raise StatisticUndefinedError(messages.ZERO_RANK_VARIANCE)
    rho = float(np.clip(np.corrcoef(rx, ry)[0, 1], -1.0, 1.0))
    p_value = float(sps.spearmanr(x, y).pvalue)
    return CorrelationResult(
        rho=rho,
        n=int(x.size),
        band=classify_band(rho, BandScheme.rho_swinscow),
        p_value=p_value if np.isfinite(p_value) else None,
        label=label,
    )


def mann_whitney(a: Sequence[float], b: Sequence[float], label: Optional[str] = None) -> GroupComparison:
    """
    The mann_whitney function compares two independent groups with the Mann-Whitney U test.

    The exact distribution is used when n1 * n2 <= 400 and there are no ties, otherwise the
    normal approximation with tie and continuity corrections.

    :param a: Sequence[float]: First group
    :param b: Sequence[float]: Second group
    :param label: str: Row label for reports
    :return: GroupComparison; u_statistic is U of group a

    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = a[np.isfinite(a)], b[np.isfinite(b)]
    if a.size < 1 or b.size < 1 or a.size + b.size < 4:
        raise InsufficientDataError(messages.INSUFFICIENT_PARTICIPANTS)
    pooled = np.concatenate([a, b])
    if np.ptp(pooled) == 0:
        raise StatisticUndefinedError(messages.IDENTICAL_VALUES)
    ties = np.unique(pooled).size < pooled.size
    method = "exact" if a.size * b.size <= EXACT_MW_LIMIT and not ties else "asymptotic"
    result = sps.mannwhitneyu(a, b, alternative="two-sided", method=method, use_continuity=True)
    p_value = float(result.pvalue)
    return GroupComparison(
        u_statistic=float(result.statistic),
        p_value=p_value,
        n1=int(a.size),
        n2=int(b.size),
        median_difference=float(np.median(a) - np.median(b)),
        method=method,
        stars=p_stars(p_value),
        label=label,
    )


def gait_speed_from_t25fw(seconds: float) -> float:
    """
    >>> round(gait_speed_from_t25fw(6.0), 3)
    1.27
    """
    if not seconds > 0:
        raise ValueError("T25FW time must be positive")
    return T25FW_DISTANCE_M / seconds


def group_by_bands(
    covariates: Mapping[str, float], bands: Mapping[str, tuple[float, float]]
) -> dict[str, list[str]]:
    """
    The group_by_bands function assigns participants to the first band [low, high] containing
    their covariate. Participants outside every band, or without a value, are left out.

    :param covariates: Mapping[str, float]: Covariate per participant
    :param bands: Mapping[str, tuple[float, float]]: Inclusive ranges by group name
    :return: Participant ids per group, every group present

    """
    groups: dict[str, list[str]] = {name: [] for name in bands}
    for pid, value in covariates.items():
        if value is None or not np.isfinite(value):
            continue
        for name, (low, high) in bands.items():
            if low <= value <= high:
                groups[name].append(pid)
                break
    return groups


def compare_groups(
    speeds: Mapping[str, float],
    covariates: Mapping[str, float],
    bands: Mapping[str, tuple[float, float]],
) -> list[GroupComparison]:
    """
    The compare_groups function runs a Mann-Whitney test for every pair of covariate bands.
    Pairs that are too small or carry no variation are skipped with a warning.

    :param speeds: Mapping[str, float]: Aggregate turn speed per participant
    :param covariates: Mapping[str, float]: Covariate per participant
    :param bands: Mapping[str, tuple[float, float]]: Group definitions
    :return: One GroupComparison per testable pair, labelled "<group> vs <group>"

    """
    groups = group_by_bands({pid: covariates.get(pid) for pid in speeds}, bands)
    comparisons = []
    for first, second in itertools.combinations(groups, 2):
        label = f"{first} vs {second}"
        a = [speeds[pid] for pid in groups[first]]
        b = [speeds[pid] for pid in groups[second]]
        try:
            comparisons.append(mann_whitney(a, b, label=label))
        except (InsufficientDataError, StatisticUndefinedError) as err:
            logger.warning("%s skipped: %s", label, err)
    return comparisons


def per_participant_medians(tests: Mapping[str, Sequence[Optional[float]]]) -> dict[str, list[float]]:
    # tests without turns carry no median
    return {pid: [v for v in values if v is not None and np.isfinite(v)] for pid, values in tests.items()}
