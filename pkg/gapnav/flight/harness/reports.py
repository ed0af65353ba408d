# PEP-8
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path

import gapnav
from utils.log import logger

from .errors import ReportIntegrityError
from .metrics import TILT_BUCKETS, mean_or_nan, success_rate, tilt_bucket


SUMMARY_VERSION = 1

TRIAL_COLUMNS = (
    "trial", "seed", "gap", "tilt_deg", "crossed", "success", "position_error",
    "attitude_error", "clearance", "crossing_step", "reset_step",
    "trial_success", "min_clearance", "steps", "outcome",
)


@dataclass(frozen=True)
class GapRecord:
    gap: int
    tilt_deg: float
    crossed: bool
    success: bool
    position_error: float = math.nan
    attitude_error: float = math.nan
    clearance: float = math.inf
    crossing_step: int = -1
    reset_step: int = -1


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: str
    success: bool
    min_clearance: float
    steps: int
    outcome: str
    gaps: tuple[GapRecord, ...] = ()

    @property
    def tilt_deg(self) -> float:
        return self.gaps[0].tilt_deg

    @property
    def position_error(self) -> float:
        return self.gaps[0].position_error

    @property
    def attitude_error(self) -> float:
        return self.gaps[0].attitude_error


def compute_aggregates(trials) -> dict[str, float]:
    trials = list(trials)
    gaps = [g for t in trials for g in t.gaps]
    values: dict[str, float] = {
        "trials": float(len(trials)),
        "success_rate": success_rate(t.success for t in trials),
    }

    def describe(prefix: str, selected: list[GapRecord]) -> None:
        crossed = [g for g in selected if g.crossed]
        values[f"{prefix}.count"] = float(len(selected))
        values[f"{prefix}.success_rate"] = success_rate(g.success for g in selected)
        values[f"{prefix}.position_error"] = mean_or_nan(g.position_error for g in crossed)
        values[f"{prefix}.attitude_error"] = mean_or_nan(g.attitude_error for g in crossed)

    for name, _, _ in TILT_BUCKETS:
        describe(f"bucket.{name}", [g for g in gaps if tilt_bucket(g.tilt_deg) == name])
    for index in sorted({g.gap for g in gaps}):
        describe(f"gap.{index}", [g for g in gaps if g.gap == index])

    timed = [g for g in gaps if g.reset_step >= 0 and g.crossing_step >= 0]
    values["reset_within_3"] = success_rate(abs(g.reset_step - g.crossing_step) <= 3 for g in timed)
    return values


def _same(a: float, b: float) -> bool:
    if math.isnan(a) and math.isnan(b):
        return True
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


@dataclass(frozen=True)
class EvalReport:
    kind: str
    trials: tuple[TrialRecord, ...]
    aggregates: dict[str, float] = field(default_factory=dict)
    meta: dict[str, str] = field(default_factory=dict)

    @classmethod
    def build(cls, kind: str, trials, **meta) -> EvalReport:
        trials = tuple(trials)
        return cls(kind, trials, compute_aggregates(trials), {k: str(v) for k, v in meta.items()})

    @property
    def success_rate(self) -> float:
        return self.aggregates["success_rate"]

    def bucket(self, name: str) -> dict[str, float]:
        prefix = f"bucket.{name}."
        return {k.removeprefix(prefix): v for k, v in self.aggregates.items() if k.startswith(prefix)}

    def gap(self, index: int) -> dict[str, float]:
        prefix = f"gap.{index}."
        return {k.removeprefix(prefix): v for k, v in self.aggregates.items() if k.startswith(prefix)}

    def audit(self) -> None:
        """Raise ReportIntegrityError unless every aggregate follows from the records."""
        recomputed = compute_aggregates(self.trials)
        for key in sorted(set(recomputed) | set(self.aggregates)):
            stored = self.aggregates.get(key)
            value = recomputed.get(key)
            if stored is None or value is None or not _same(stored, value):
                raise ReportIntegrityError(key, stored, value)
        for trial in self.trials:
            expected = bool(trial.gaps) and all(g.success for g in trial.gaps)
            if trial.success != expected:
                raise ReportIntegrityError(f"trial.{trial.trial}.success", trial.success, expected)
            for g in trial.gaps:
                if g.success and not (g.crossed and g.clearance > 0):
                    raise ReportIntegrityError(f"trial.{trial.trial}.gap.{g.gap}.success", g.success, False)

    def rows(self) -> list[dict]:
        return [
            {
                "trial": t.trial,
                "seed": t.seed,
                "gap": g.gap,
                "tilt_deg": g.tilt_deg,
                "crossed": int(g.crossed),
                "success": int(g.success),
                "position_error": g.position_error,
                "attitude_error": g.attitude_error,
                "clearance": g.clearance,
                "crossing_step": g.crossing_step,
                "reset_step": g.reset_step,
                "trial_success": int(t.success),
                "min_clearance": t.min_clearance,
                "steps": t.steps,
                "outcome": t.outcome,
            }
            for t in self.trials
            for g in t.gaps
        ]


def _cell(value):
    return repr(value) if isinstance(value, float) else value


def write_rows(path: str | Path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    return path


def write_summary(path: str | Path, values: dict) -> Path:
    """Flat ``key=value`` lines, sorted, led by the format version."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"version={SUMMARY_VERSION}", f"gapnav={gapnav.__version__}"]
    lines += [f"{k}={_cell(v)}" for k, v in sorted(values.items()) if k not in ("version", "gapnav")]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_summary(path: str | Path) -> dict[str, str]:
    values = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: malformed summary line {line!r}")
        values[key.strip()] = value.strip()
    version = values.get("version")
    if version != str(SUMMARY_VERSION):
        raise ValueError(f"{path}: unsupported summary version {version!r}")
    return values


def write_report(report: EvalReport, out_dir: str | Path, stem: str) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    csv_path = write_rows(out_dir / f"{stem}_trials.csv", TRIAL_COLUMNS, report.rows())
    summary_path = write_summary(
        out_dir / f"{stem}_summary.txt",
        {"kind": report.kind, **report.meta, **report.aggregates},
    )
    logger.info(f"Report written to {csv_path} and {summary_path}")
    return csv_path, summary_path


def _bool(value: str) -> bool:
    return value.strip() in ("1", "True", "true")


def load_report(csv_path: str | Path, summary_path: str | Path) -> EvalReport:
    """Read a written report back and audit it against its own records."""
    with Path(csv_path).open(newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    trials = []
    for _, group in groupby(rows, key=lambda r: int(r["trial"])):
        group = list(group)
        first = group[0]
        gaps = tuple(
            GapRecord(
                gap=int(r["gap"]),
                tilt_deg=float(r["tilt_deg"]),
                crossed=_bool(r["crossed"]),
                success=_bool(r["success"]),
                position_error=float(r["position_error"]),
                attitude_error=float(r["attitude_error"]),
                clearance=float(r["clearance"]),
                crossing_step=int(r["crossing_step"]),
                reset_step=int(r["reset_step"]),
            )
            for r in group
        )
        trials.append(TrialRecord(
            trial=int(first["trial"]),
            seed=first["seed"],
            success=_bool(first["trial_success"]),
            min_clearance=float(first["min_clearance"]),
            steps=int(first["steps"]),
            outcome=first["outcome"],
            gaps=gaps,
        ))

    summary = read_summary(summary_path)
    kind = summary.pop("kind", "")
    aggregates = {}
    meta = {}
    for key, value in summary.items():
        if key in ("version", "gapnav"):
            continue
        if key.startswith(("bucket.", "gap.")) or key in ("trials", "success_rate", "reset_within_3"):
            aggregates[key] = float(value)
        else:
            meta[key] = value
    report = EvalReport(kind, tuple(trials), aggregates, meta)
    report.audit()
    return report
