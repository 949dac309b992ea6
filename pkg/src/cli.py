"""
Batch command line interface.

Every command reads its inputs, writes machine-readable outputs into the output
directory and finishes with ``<command>.manifest.json``. Exit codes: 0 success,
1 partial failure, 2 usage or configuration error.
"""

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.conf import messages
from src.conf.config import config, dump_detector_config, load_detector_config
from src.repository.results import (
    digests,
    per_participant_values,
    read_json_report,
    read_test_results,
    read_turns,
    turns_from_annotations,
    write_frame,
    write_json_report,
    write_manifest,
    write_outcomes,
    write_participants,
    write_test_results,
    write_turns,
)
from src.repository.sessions import (
    participant_from_session,
    read_annotations,
    read_stream,
    session_id_from_path,
    write_annotations,
    write_stream,
)
from src.schemas.manifest import RunManifest
from src.schemas.measures import TestResult
from src.schemas.sensor import AnnotationSource, Setting, WearLocation
from src.schemas.stats import PairedSeries
from src.schemas.synth import CohortSpec, SessionSpec
from src.servises.detect import detect_turns
from src.servises.errors import InsufficientDataError
from src.servises.match import classify_turns, cohort_score_stats, score, temporal_error_table
from src.servises.measures import aggregate_participant, summarize_test
from src.servises.plots import bland_altman_plot, concordance_plot
from src.servises.stats import (
    AID_GROUPS,
    AMBULATION_GROUPS,
    EDSS_GROUPS,
    FALL_GROUPS,
    agreement,
    compare_groups,
    gait_speed_from_t25fw,
    reliability_curve,
    spearman,
)
from src.servises.synth import generate_cohort, generate_session

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2
DERIVED_MARKERS = (".turns.", ".truth.", ".outcomes.", ".manifest.")
INDEX_FILES = {"covariates.csv", "sessions.csv", "results.csv", "participants.csv", "errors.csv", "paired.csv"}
GROUPINGS = {"edss_proxy": EDSS_GROUPS, "edss": EDSS_GROUPS, "ambulation": AMBULATION_GROUPS, "fall": FALL_GROUPS, "aid": AID_GROUPS}
REPORTS = ("score", "agreement", "reliability", "correlation")


class UsageError(Exception):
    pass


def tool_version() -> str:
    try:
        return metadata.version("uturn_analysis")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def setup_logging(verbose: bool = False, log_file: Optional[Path] = None) -> None:
    package_logger = logging.getLogger("src")
    package_logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    package_logger.handlers = []

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    package_logger.addHandler(console)
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_file, mode="w")
        fh.setFormatter(logging.Formatter("%(levelname)s - %(name)s - %(message)s"))
        package_logger.addHandler(fh)


class RunRecorder:
    """
    Collects the inputs and outputs of one command for its RunManifest.
    """

    def __init__(self, command: str, args: argparse.Namespace, seed: int = 0):
        self.command = command
        self.out_dir = Path(args.out)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.config = {
            key: value if isinstance(value, (int, float, bool, type(None))) else str(value)
            for key, value in sorted(vars(args).items())
            if key not in ("func", "verbose", "log_file", "jobs")
        }
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []

    def path(self, *parts: str) -> Path:
        return self.out_dir.joinpath(*parts)

    def add_inputs(self, paths: Sequence[Path]) -> None:
        self.inputs += [Path(p) for p in paths]

    def add_output(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return path

    def write_errors(self, errors: list[dict]) -> None:
        if errors:
            self.add_output(write_frame(pd.DataFrame(errors, columns=["input", "error"]), self.path("errors.csv")))

    def finish(self) -> Path:
        manifest = RunManifest(
            command=self.command,
            config=self.config,
            input_digests=digests(sorted(p for p in set(self.inputs) if p.is_file())),
            seed=self.seed,
            tool_version=tool_version(),
            outputs=sorted({p.relative_to(self.out_dir).as_posix() for p in self.outputs}),
        )
        return write_manifest(manifest, self.out_dir)


def _error(errors: list[dict], source, err: Exception) -> None:
    logger.error("%s: %s", source, err)
    errors.append({"input": str(source), "error": str(err)})


def _read_input(path: Path, reader, *args, **kwargs):
    try:
        return reader(path, *args, **kwargs)
    except (OSError, ValueError) as err:
        raise UsageError(f"{messages.UNREADABLE_INPUT}: {path}: {err}")


def _read_table(path: Path, required: Sequence[str] = ()) -> pd.DataFrame:
    """
    The _read_table function loads a CSV command input with participant ids kept as text.
    Unreadable files and missing columns are usage errors.

    :param path: Path: CSV file
    :param required: Sequence[str]: Columns that must be present
    :return: The table

    """
    frame = _read_input(path, pd.read_csv, dtype={"participant_id": str})
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise UsageError(f"{messages.MISSING_COLUMNS} in {path}: {', '.join(missing)}")
    return frame


def _collect_sessions(inputs: Sequence[str]) -> list[Path]:
    paths = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            paths += [
                p
                for p in path.iterdir()
                if p.suffix in (".csv", ".json")
                and p.name not in INDEX_FILES
                and not any(marker in p.name for marker in DERIVED_MARKERS)
            ]
        else:
            paths.append(path)
    return sorted(set(paths))


def _detect_one(job: tuple) -> tuple[str, object]:
    path, detector, meta = job
    try:
        stream = read_stream(path, **meta)
        turns = detect_turns(stream, detector)
        result = summarize_test(
            turns,
            session_id=stream.session_id,
            participant_id=stream.participant_id or participant_from_session(stream.session_id),
            setting=stream.setting,
            wear_location=stream.wear_location,
        )
        return "ok", result
    except (ValueError, OSError) as err:
        return "error", str(err)


def _detector_overrides(args: argparse.Namespace) -> dict:
    def rad(value):
        return None if value is None else math.radians(value)

    return {
        "rate_threshold": rad(args.rate_threshold_dps),
        "end_threshold": rad(args.end_threshold_dps),
        "min_angle": rad(args.min_angle_deg),
        "min_duration": args.min_duration,
        "max_duration": args.max_duration,
        "merge_gap": args.merge_gap,
        "filter_cutoff": args.filter_cutoff,
    }


def cmd_detect(args: argparse.Namespace) -> int:
    paths = _collect_sessions(args.inputs)
    if not paths:
        raise UsageError(messages.EMPTY_INPUT)
    try:
        detector = load_detector_config(args.config, _detector_overrides(args))
    except ValueError as err:
        raise UsageError(f"invalid detector configuration: {err}")
    run = RunRecorder("detect", args)
    run.config["detector"] = detector.model_dump()
    run.add_inputs(paths + ([Path(args.config)] if args.config else []))
    meta = {k: v for k, v in (("wear_location", args.wear_location), ("setting", args.setting)) if v}
    jobs = [(path, detector, meta) for path in paths]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_detect_one, jobs))
    else:
        outcomes = [_detect_one(job) for job in jobs]

    results: list[TestResult] = []
    errors: list[dict] = []
    for path, (status, value) in zip(paths, outcomes):
        if status == "ok":
            results.append(value)
            for written in write_turns(value, run.path("turns")):
                run.add_output(written)
        else:
            _error(errors, path, value)

    run.add_output(write_test_results(results, run.path("results.csv")))
    aggregates = []
    by_participant: dict[str, list[TestResult]] = {}
    for result in results:
        by_participant.setdefault(result.participant_id, []).append(result)
    for pid, tests in sorted(by_participant.items()):
        try:
            aggregates.append(aggregate_participant(tests, participant_id=pid))
        except InsufficientDataError as err:
            logger.warning("participant %s left out of participants.csv: %s", pid, err)
    run.add_output(write_participants(aggregates, run.path("participants.csv")))
    (run.path("detector.env")).write_text(dump_detector_config(detector))
    run.add_output(run.path("detector.env"))
    run.write_errors(errors)
    run.finish()
    logger.info("detect: %d sessions, %d errors", len(results), len(errors))
    return EXIT_PARTIAL if errors else EXIT_OK


def _wear_location_of(turns_json: Path) -> str:
    if not turns_json.exists():
        return "unknown"
    return read_turns(turns_json).wear_location.value


def _paired_speeds(speeds: list[dict]) -> pd.DataFrame:
    # per participant and location: median over sessions of the per-test turn speed medians
    columns = ["participant_id", "a", "b", "wear_location"]
    frame = pd.DataFrame(speeds, columns=columns).dropna(subset=["a", "b"])
    if frame.empty:
        return pd.DataFrame(columns=columns)
    paired = frame.groupby(["participant_id", "wear_location"], sort=True)[["a", "b"]].median().reset_index()
    return paired[columns]


def cmd_score(args: argparse.Namespace) -> int:
    detected_dir, reference_dir = Path(args.detected), Path(args.reference)
    detected = {session_id_from_path(p): p for p in sorted(detected_dir.glob("*.turns.csv"))}
    reference = {
        session_id_from_path(p): p
        for p in sorted(reference_dir.glob("*.csv"))
        if ".turns." not in p.name and p.name not in INDEX_FILES
    }
    if not detected and not reference:
        raise UsageError(messages.EMPTY_INPUT)
    run = RunRecorder("score", args)
    errors: list[dict] = []
    for sid in sorted(set(detected) ^ set(reference)):
        _error(errors, sid, ValueError(f"{messages.UNMATCHED_SESSIONS}: {sid}"))

    by_participant: dict[str, list] = {}
    by_location: dict[str, list] = {}
    speeds: list[dict] = []
    for sid in sorted(set(detected) & set(reference)):
        try:
            det = read_annotations(detected[sid], AnnotationSource.detector)
            ref = read_annotations(reference[sid], AnnotationSource.reference)
            outcomes = classify_turns(det, ref, args.overlap_min)
            location = _wear_location_of(detected_dir / f"{sid}.turns.json")
        except (ValueError, OSError) as err:
            _error(errors, sid, err)
            continue
        run.add_inputs([detected[sid], reference[sid]])
        run.add_output(write_outcomes(outcomes, run.path("outcomes", f"{sid}.outcomes.csv")))
        pid = participant_from_session(sid)
        by_participant.setdefault(pid, []).extend(outcomes)
        by_location.setdefault(location, []).extend(outcomes)
        speeds.append(
            {
                "participant_id": pid,
                "wear_location": location,
                "a": summarize_test(turns_from_annotations(det), session_id=sid).turn_speed_median,
                "b": summarize_test(turns_from_annotations(ref), session_id=sid).turn_speed_median,
            }
        )

    scores = {pid: score(outcomes) for pid, outcomes in sorted(by_participant.items())}
    rows = [{"participant_id": pid, **s.model_dump()} for pid, s in scores.items()]
    run.add_output(write_frame(pd.DataFrame(rows), run.path("scores.csv")))
    run.add_output(write_frame(_paired_speeds(speeds), run.path("paired.csv")))
    report = {
        "per_participant": scores,
        "overall": score([o for outcomes in by_participant.values() for o in outcomes]),
        "temporal_errors": temporal_error_table(dict(sorted(by_location.items()))),
    }
    try:
        report["summary"] = {metric: cohort_score_stats(list(scores.values()), metric) for metric in ("f1", "precision", "recall")}
    except InsufficientDataError as err:
        _error(errors, "cohort", err)
    run.add_output(write_frame(pd.DataFrame([r.model_dump() for r in report["temporal_errors"]]), run.path("temporal_errors.csv")))
    run.add_output(write_json_report(report, run.path("score_report.json")))
    run.write_errors(errors)
    run.finish()
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_agree(args: argparse.Namespace) -> int:
    path = Path(args.paired)
    frame = _read_table(path, ("participant_id", "a", "b"))
    seed = args.seed if args.seed is not None else 0
    run = RunRecorder("agree", args, seed)
    run.add_inputs([path])

    results, errors = [], []
    if "wear_location" in frame.columns:
        unlabeled = int(frame["wear_location"].isna().sum())
        if unlabeled:
            _error(errors, path, ValueError(f"{unlabeled} {messages.MISSING_WEAR_LOCATION}"))
        groups = dict(tuple(frame.dropna(subset=["wear_location"]).groupby("wear_location", sort=True)))
    else:
        groups = {"all": frame}
    for label, group in groups.items():
        label = str(label)
        try:
            pairs = PairedSeries(ids=group["participant_id"].tolist(), a=group["a"].tolist(), b=group["b"].tolist())
            results.append(agreement(pairs, n_reps=args.n_reps, seed=seed, label=label))
        except ValueError as err:
            _error(errors, label, ValueError(messages.INSUFFICIENT_PARTICIPANTS if "insufficient" in str(err) else str(err)))
            continue
        a, b = np.asarray(pairs.a), np.asarray(pairs.b)
        plot_data = pd.DataFrame({"participant_id": pairs.ids, "a": a, "b": b, "mean": (a + b) / 2, "difference": a - b})
        run.add_output(write_frame(plot_data, run.path(f"bland_altman_{label}.csv")))
        if not args.no_plots:
            run.add_output(bland_altman_plot(pairs, run.path(f"bland_altman_{label}.svg"), title=label))
            run.add_output(concordance_plot(pairs, run.path(f"concordance_{label}.svg"), title=label))

    rows = [
        {
            "label": r.label,
            "n": r.n,
            "speed_median": r.speed_median,
            "speed_iqr": r.speed_iqr,
            **{f"{name}{suffix}": getattr(getattr(r, name), field) for name in ("icc31", "bias", "loa_lower", "loa_upper") for suffix, field in (("", "value"), ("_ci_lower", "ci_lower"), ("_ci_upper", "ci_upper"))},
            "icc_band": r.icc_band,
        }
        for r in results
    ]
    run.add_output(write_frame(pd.DataFrame(rows), run.path("agreement.csv")))
    run.add_output(write_json_report({"agreement": results}, run.path("agreement_report.json")))
    run.write_errors(errors)
    run.finish()
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_reliability(args: argparse.Namespace) -> int:
    path = Path(args.results)
    seed = args.seed if args.seed is not None else 0
    values = per_participant_values(_read_input(path, read_test_results))
    run = RunRecorder("reliability", args, seed)
    run.add_inputs([path])
    try:
        curve = reliability_curve(
            values,
            k_range=range(1, args.k_max + 1),
            seed=seed,
            n_reps=args.n_reps,
            n_partitions=args.n_partitions,
            mode=args.split,
            variance_method=args.variance,
        )
    except InsufficientDataError as err:
        errors: list[dict] = []
        _error(errors, path, err)
        run.write_errors(errors)
        run.finish()
        return EXIT_PARTIAL
    rows = []
    for r in curve:
        row = {"k": r.k, "n": r.n, "available": r.available, "var_within": r.var_within}
        for name in ("icc21", "sem", "mdc"):
            estimate = getattr(r, name)
            row[name] = estimate.value if estimate else None
            row[f"{name}_ci_lower"] = estimate.ci_lower if estimate else None
            row[f"{name}_ci_upper"] = estimate.ci_upper if estimate else None
        rows.append(row)
    run.add_output(write_frame(pd.DataFrame(rows), run.path("reliability.csv")))
    run.add_output(write_json_report({"reliability": curve, "n_participants": len(values)}, run.path("reliability_report.json")))
    run.finish()
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    participants_path, covariates_path = Path(args.participants), Path(args.covariates)
    participants = _read_table(participants_path, ("participant_id", "aggregate"))
    covariates = _read_table(covariates_path, ("participant_id",))
    run = RunRecorder("correlate", args)
    run.add_inputs([participants_path, covariates_path])
    frame = participants[["participant_id", "aggregate"]].merge(covariates, on="participant_id", how="inner")
    if "t25fw_s" in frame.columns:
        seconds = pd.to_numeric(frame["t25fw_s"], errors="coerce")
        frame["t25fw_gait_speed"] = [gait_speed_from_t25fw(s) if s > 0 else np.nan for s in seconds]
    numeric = [
        c
        for c in frame.columns
        if c not in ("participant_id", "aggregate", "n_tests") and pd.api.types.is_numeric_dtype(frame[c])
    ]

    errors: list[dict] = []
    correlations = []
    for column in numeric:
        try:
            correlations.append(spearman(frame["aggregate"], frame[column], label=column))
        except ValueError as err:
            _error(errors, column, err)

    speeds = dict(zip(frame["participant_id"], frame["aggregate"].astype(float)))
    comparisons, group_rows = {}, []
    for column, bands in GROUPINGS.items():
        if column not in frame.columns:
            continue
        values = dict(zip(frame["participant_id"], frame[column].astype(float)))
        comparisons[column] = compare_groups(speeds, values, bands)
        for pid, value in values.items():
            group = next((name for name, (low, high) in bands.items() if low <= value <= high), None)
            if group is not None:
                group_rows.append({"grouping": column, "group": group, "participant_id": pid, "aggregate": speeds[pid]})

    run.add_output(write_frame(pd.DataFrame([c.model_dump() for c in correlations]), run.path("correlations.csv")))
    comparison_rows = [{"grouping": g, **c.model_dump()} for g, items in comparisons.items() for c in items]
    run.add_output(write_frame(pd.DataFrame(comparison_rows), run.path("comparisons.csv")))
    run.add_output(write_frame(pd.DataFrame(group_rows, columns=["grouping", "group", "participant_id", "aggregate"]), run.path("groups.csv")))
    run.add_output(write_json_report({"correlations": correlations, "comparisons": comparisons}, run.path("correlation_report.json")))
    run.write_errors(errors)
    run.finish()
    return EXIT_PARTIAL if errors else EXIT_OK


def _write_session(spec: SessionSpec, run: RunRecorder, fmt: str) -> None:
    stream, truth = generate_session(spec)
    run.add_output(write_stream(stream, run.path("sessions", f"{spec.session_id}.{fmt}")))
    run.add_output(write_annotations(truth, run.path("truth", f"{spec.session_id}.truth.csv")))


def cmd_synth(args: argparse.Namespace) -> int:
    spec_path = Path(args.spec) if args.spec else None
    text = _read_input(spec_path, Path.read_text) if spec_path else None
    try:
        if args.kind == "session":
            spec = SessionSpec.model_validate_json(text) if text else SessionSpec()
        else:
            spec = CohortSpec.model_validate_json(text) if text else CohortSpec()
            overrides = {"n_participants": args.participants, "n_days": args.days}
            if args.unbalanced:
                overrides["balanced"] = False
            spec = CohortSpec(**{**spec.model_dump(), **{k: v for k, v in overrides.items() if v is not None}})
        if args.seed is not None:
            spec = type(spec)(**{**spec.model_dump(), "seed": args.seed})
    except ValueError as err:
        raise UsageError(f"invalid synthesis spec: {err}")

    run = RunRecorder("synth", args, spec.seed)
    run.config["spec"] = spec.model_dump(mode="json")
    if spec_path:
        run.add_inputs([spec_path])
    if isinstance(spec, SessionSpec):
        _write_session(spec, run, args.format)
    else:
        bundle = generate_cohort(spec)
        index = []
        for participant in bundle.participants:
            for session in participant.sessions:
                _write_session(session, run, args.format)
                index.append(
                    {
                        "session_id": session.session_id,
                        "participant_id": participant.participant_id,
                        "day": session.day,
                        "level": participant.level,
                        "n_turns": session.n_turns,
                    }
                )
        run.add_output(write_frame(pd.DataFrame(bundle.covariate_rows()), run.path("covariates.csv")))
        run.add_output(write_frame(pd.DataFrame(index), run.path("sessions.csv")))
    run.finish()
    return EXIT_OK


def _fmt(value, digits: int) -> str:
    return "" if value is None or (isinstance(value, float) and not math.isfinite(value)) else f"{value:.{digits}f}"


def _estimate(estimate: Optional[dict], digits: int = 2) -> str:
    if not estimate:
        return ""
    return f"{_fmt(estimate['value'], digits)} ({_fmt(estimate['ci_lower'], digits)}; {_fmt(estimate['ci_upper'], digits)})"


def _markdown(frame: pd.DataFrame) -> str:
    header = "| " + " | ".join(map(str, frame.columns)) + " |"
    rule = "|" + "|".join(" --- " for _ in frame.columns) + "|"
    body = ["| " + " | ".join(str(v) for v in row) + " |" for row in frame.itertuples(index=False)]
    return "\n".join([header, rule, *body])


def _score_table(report: dict) -> pd.DataFrame:
    rows = []
    for metric, s in report.get("summary", {}).items():
        rows.append(
            {
                "metric": metric,
                "n": s["n"],
                "mean (95% CI)": f"{_fmt(s['mean'], 1)} ({_fmt(s['ci_lower'], 1)}; {_fmt(s['ci_upper'], 1)})",
                **{key.upper(): _fmt(s[key], 1) for key in ("sd", "min", "p05", "q1", "median", "q3", "p95", "max")},
            }
        )
    return pd.DataFrame(rows)


def _agreement_table(report: dict) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "location": r["label"],
                "n": r["n"],
                "turn speed median (IQR)": f"{_fmt(r['speed_median'], 2)} ({_fmt(r['speed_iqr'], 2)})",
                "ICC(3,1)": _estimate(r["icc31"]),
                "band": r["icc_band"],
                "bias": _estimate(r["bias"]),
                "LoA lower": _estimate(r["loa_lower"]),
                "LoA upper": _estimate(r["loa_upper"]),
            }
            for r in report["agreement"]
        ]
    )


def _reliability_table(report: dict) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "k": r["k"],
                "n": r["n"],
                "ICC(2,1)": _estimate(r["icc21"]),
                "SEM": _estimate(r["sem"]),
                "MDC": _estimate(r["mdc"]),
            }
            for r in report["reliability"]
        ]
    )


def _correlation_table(report: dict) -> pd.DataFrame:
    rows = [
        {"comparison": c["label"], "statistic": f"rho {_fmt(c['rho'], 2)}", "band / stars": c["band"], "p": _fmt(c["p_value"], 4)}
        for c in report["correlations"]
    ]
    rows += [
        {"comparison": c["label"], "statistic": f"diff {_fmt(c['median_difference'], 2)}", "band / stars": c["stars"], "p": _fmt(c["p_value"], 4)}
        for items in report["comparisons"].values()
        for c in items
    ]
    return pd.DataFrame(rows)


def cmd_report(args: argparse.Namespace) -> int:
    source = Path(args.directory)
    run = RunRecorder("report", args)
    builders = {
        "score": _score_table,
        "agreement": _agreement_table,
        "reliability": _reliability_table,
        "correlation": _correlation_table,
    }
    sections = []
    for name in REPORTS:
        path = source / f"{name}_report.json"
        if not path.exists():
            continue
        run.add_inputs([path])
        table = builders[name](_read_input(path, read_json_report))
        run.add_output(write_frame(table, run.path(f"{name}_table.csv")))
        sections.append(f"## {name.capitalize()}\n\n{_markdown(table)}\n")
    if not sections:
        errors: list[dict] = []
        _error(errors, source, FileNotFoundError(f"{messages.EMPTY_INPUT}: no *_report.json"))
        run.write_errors(errors)
        run.finish()
        return EXIT_PARTIAL
    summary = run.path("report.md")
    summary.write_text("# Turn analysis report\n\n" + "\n".join(sections))
    run.add_output(summary)
    run.finish()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=config.OUTPUT_DIR, help="Output directory (default: $UTURN_OUTPUT_DIR or output)")
    common.add_argument("--seed", type=int, default=None, help="Seed of every random draw (default: 0)")
    common.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    common.add_argument("--log-file", default=None, help="Also log into this file")

    parser = argparse.ArgumentParser(prog="uturn", description="U-turn detection and turn speed analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", parents=[common], help="Detect turns in session recordings")
    detect.add_argument("inputs", nargs="*", help="Session files (.csv/.json) or directories")
    detect.add_argument("--config", default=None, help="Detector key=value file")
    detect.add_argument("--rate-threshold-dps", type=float, default=None)
    detect.add_argument("--end-threshold-dps", type=float, default=None)
    detect.add_argument("--min-angle-deg", type=float, default=None)
    detect.add_argument("--min-duration", type=float, default=None)
    detect.add_argument("--max-duration", type=float, default=None)
    detect.add_argument("--merge-gap", type=float, default=None)
    detect.add_argument("--filter-cutoff", type=float, default=None)
    detect.add_argument("--wear-location", choices=[w.value for w in WearLocation], default=None)
    detect.add_argument("--setting", choices=[s.value for s in Setting], default=None)
    detect.add_argument("--jobs", type=int, default=1, help="Worker processes")
    detect.set_defaults(func=cmd_detect)

    score_cmd = sub.add_parser("score", parents=[common], help="Score detected turns against reference annotations")
    score_cmd.add_argument("--detected", required=True, help="Directory with <session>.turns.csv files")
    score_cmd.add_argument("--reference", required=True, help="Directory with <session>[.truth].csv annotations")
    score_cmd.add_argument("--overlap-min", type=float, default=0.20)
    score_cmd.set_defaults(func=cmd_score)

    agree = sub.add_parser("agree", parents=[common], help="Agreement of paired turn speed medians")
    agree.add_argument("paired", help="CSV with participant_id,a,b[,wear_location]")
    agree.add_argument("--n-reps", type=int, default=500)
    agree.add_argument("--no-plots", action="store_true")
    agree.set_defaults(func=cmd_agree)

    reliability = sub.add_parser("reliability", parents=[common], help="Test-retest reliability over aggregated tests")
    reliability.add_argument("results", help="Per-test results CSV written by detect")
    reliability.add_argument("--k-max", type=int, default=7)
    reliability.add_argument("--n-reps", type=int, default=500)
    reliability.add_argument("--n-partitions", type=int, default=500)
    reliability.add_argument("--split", choices=["random", "chronological"], default="random")
    reliability.add_argument("--variance", choices=["moments", "reml"], default="moments")
    reliability.set_defaults(func=cmd_reliability)

    correlate = sub.add_parser("correlate", parents=[common], help="Clinical correlations and group comparisons")
    correlate.add_argument("participants", help="participants.csv written by detect")
    correlate.add_argument("covariates", help="CSV with participant_id and covariate columns")
    correlate.set_defaults(func=cmd_correlate)

    synth = sub.add_parser("synth", parents=[common], help="Generate synthetic sessions with truth annotations")
    synth.add_argument("--spec", default=None, help="JSON SessionSpec or CohortSpec")
    synth.add_argument("--kind", choices=["cohort", "session"], default="cohort")
    synth.add_argument("--participants", type=int, default=None)
    synth.add_argument("--days", type=int, default=None)
    synth.add_argument("--unbalanced", action="store_true")
    synth.add_argument("--format", choices=["csv", "json"], default="csv")
    synth.set_defaults(func=cmd_synth)

    report = sub.add_parser("report", parents=[common], help="Render JSON reports into rounded tables")
    report.add_argument("directory", help="Directory holding *_report.json files")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    setup_logging(args.verbose, Path(args.log_file) if args.log_file else None)
    try:
        return args.func(args)
    except UsageError as err:
        logger.error("%s", err)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
