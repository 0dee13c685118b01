"""
Parameter sweeps for the qubit codes, the coherent-state codes and the Gaussian no-go check.

Grid points are independent; with WORKERS > 1 they are spread over a thread pool and
gathered back in (parameter, code) order, so the tables do not depend on scheduling.
"""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import BaseModel, Field, field_validator, model_validator
from tqdm import tqdm

from overlap.coherent import cat_codeword_overlap, cat_concurrence, overlap_limited_gate_error
from overlap.config import settings
from overlap.errors import InvalidParameter
from overlap.gaussian import CHANNEL_KINDS, verify_nogo
from overlap.measures import (
    codeword_overlap,
    find_crossings,
    find_esd_gamma,
    ordering_concordance,
    safeguarded_concurrence,
)
from overlap.models import CODE_IDS, CatCode, NogoReport, SphereSampling
from overlap.performance import SweepTiming, log_timing, track_stage
from overlap.qubit_codes import get_code

logger = logging.getLogger(__name__)

COLUMNS = ["parameter", "code", "f_cw", "concurrence"]
FIG2_CODES: tuple[str, ...] = ("direct", "rep3", "rep5", "rep11", "rep51")
# Loss range over which the two rankings are compared in the fig1 log
CONCORDANCE_RANGE = (0.05, 0.6)


def grid_from_range(start: float, stop: float, step: float) -> List[float]:
    """Inclusive evenly spaced grid, rounded to 12 digits."""
    if step <= 0:
        raise InvalidParameter(f"step must be positive, got {step}")
    count = int(round((stop - start) / step)) + 1
    if count < 1:
        raise InvalidParameter(f"Empty grid {start}:{stop}:{step}")
    return [float(x) for x in np.round(start + step * np.arange(count), 12)]


def default_gamma_grid() -> List[float]:
    return grid_from_range(0.0, 1.0, 0.02)


def default_alpha_grid() -> List[float]:
    return grid_from_range(0.05, 3.0, 0.05)


def cat_code_from_id(code_id: str, alpha: float) -> CatCode:
    """'direct' or 'rep<N>' at the given amplitude."""
    if code_id == "direct":
        return CatCode(n_modes=1, alpha=alpha)
    if code_id.startswith("rep") and code_id[3:].isdigit():
        return CatCode(n_modes=int(code_id[3:]), alpha=alpha)
    raise InvalidParameter(f"Unknown coherent-state code '{code_id}'")


class SweepConfig(BaseModel):
    """One experiment: what to sweep, over which codes, and where to write it."""

    experiment: Literal["fig1_gamma", "fig2_alpha", "gaussian_nogo"]
    grid: List[float] = Field(default_factory=list)
    codes: List[str] = Field(default_factory=list)
    sampling: SphereSampling = Field(default_factory=SphereSampling)
    gamma: float = Field(default=0.32, ge=0.0, le=1.0, description="Fixed loss for fig2")
    gate_error: float = Field(
        default=0.0, ge=0.0, le=1.0, description="Scale of the fig2 repetition-code gate error"
    )
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    samples: int = Field(default=100_000, ge=1, description="No-go sample count")
    nogo_kind: Optional[Literal["interior", "boundary", "symplectic"]] = None
    output_path: Optional[Path] = None
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)

    @field_validator("codes")
    @classmethod
    def validate_codes(cls, v: List[str]) -> List[str]:
        """Strip whitespace and drop duplicates, keeping order."""
        seen: Dict[str, None] = {}
        for code in v:
            seen.setdefault(code.strip(), None)
        return list(seen)

    @model_validator(mode="after")
    def check_experiment(self) -> "SweepConfig":
        if self.experiment == "fig1_gamma":
            if not self.grid:
                self.grid = default_gamma_grid()
            if not self.codes:
                self.codes = list(CODE_IDS)
            if any(not 0.0 <= g <= 1.0 for g in self.grid):
                raise ValueError("gamma grid must lie in [0, 1]")
            unknown = [c for c in self.codes if c not in CODE_IDS]
            if unknown:
                raise ValueError(f"unknown code id(s): {', '.join(unknown)}")
        elif self.experiment == "fig2_alpha":
            if not self.grid:
                self.grid = default_alpha_grid()
            if not self.codes:
                self.codes = list(FIG2_CODES)
            if any(a <= 0.0 for a in self.grid):
                raise ValueError("alpha grid must be positive")
            for code in self.codes:
                try:
                    cat_code_from_id(code, 1.0)
                except (InvalidParameter, ValueError) as e:
                    raise ValueError(f"invalid coherent-state code '{code}': {e}") from None
        return self


@dataclass
class SweepResult:
    """Rows (parameter, code, f_cw, concurrence) plus the metadata that produced them."""
    rows: pd.DataFrame
    metadata: Dict[str, object]
    violations: List[str] = field(default_factory=list)
    timing: Optional[SweepTiming] = None


def _metadata(config: SweepConfig) -> Dict[str, object]:
    return {
        "tool": settings.app_name,
        "version": settings.app_version,
        "experiment": config.experiment,
        "grid": list(config.grid),
        "codes": list(config.codes),
        "gamma": config.gamma if config.experiment == "fig2_alpha" else None,
        "gate_error": config.gate_error if config.experiment == "fig2_alpha" else None,
        "sampling": config.sampling.model_dump(),
        "seed": config.seed,
    }


def _run_tasks(
    tasks: Sequence[tuple[float, str]],
    evaluate: Callable[[float, str], tuple[float, float]],
    workers: int,
    timing: SweepTiming,
) -> pd.DataFrame:
    """Evaluate every (parameter, code) task and return rows sorted by (parameter, code)."""
    def run(task):
        parameter, code = task
        start = time.perf_counter()
        f_cw, concurrence = evaluate(parameter, code)
        timing.observe(parameter, code, time.perf_counter() - start)
        return parameter, code, f_cw, concurrence

    desc = timing.stage
    disable = not settings.progress
    if workers <= 1:
        rows = [run(task) for task in tqdm(tasks, desc=desc, disable=disable)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(tqdm(pool.map(run, tasks), total=len(tasks), desc=desc, disable=disable))

    frame = pd.DataFrame(rows, columns=COLUMNS)
    return frame.sort_values(["parameter", "code"], kind="mergesort").reset_index(drop=True)


def _range_violations(frame: pd.DataFrame) -> List[str]:
    problems = []
    for column in ("f_cw", "concurrence"):
        bad = frame[(frame[column] < 0.0) | (frame[column] > 1.0) | frame[column].isna()]
        for _, row in bad.iterrows():
            problems.append(f"{column} out of range at {row['parameter']} for {row['code']}")
    return problems


def run_fig1(config: SweepConfig) -> SweepResult:
    """Overlap and concurrence of the qubit codes over the loss grid."""
    logger.info(f"🚀 fig1: {len(config.grid)} loss values x {len(config.codes)} codes")

    def evaluate(gamma: float, code_id: str) -> tuple[float, float]:
        code = get_code(code_id)
        return (
            codeword_overlap(code, gamma, config.sampling).value,
            safeguarded_concurrence(code, gamma),
        )

    tasks = [(g, c) for g in config.grid for c in config.codes]
    with track_stage("fig1", "gamma") as timing:
        frame = _run_tasks(tasks, evaluate, config.workers, timing)
    log_timing(timing)

    result = SweepResult(frame, _metadata(config), _range_violations(frame), timing)
    _log_fig1_summary(result, config)
    if config.output_path is not None:
        write_sweep(result, config.output_path)
    return result


def _log_fig1_summary(result: SweepResult, config: SweepConfig) -> None:
    for code_id in config.codes:
        esd = find_esd_gamma(get_code(code_id))
        if esd is None:
            logger.info(f"📊 {code_id}: concurrence stays positive below full loss")
    lower, upper = CONCORDANCE_RANGE
    try:
        report = ordering_concordance(result.rows, lower=lower, upper=upper)
    except InvalidParameter:
        return
    logger.info(
        f"📊 Best code agrees between overlap and concurrence at "
        f"{report.fraction:.0%} of {report.n_points} points in [{lower}, {upper}]"
    )
    _log_crossings(result.rows)


def _log_crossings(frame: pd.DataFrame) -> None:
    codes = sorted(frame["code"].unique())
    pivot_f = frame.pivot(index="parameter", columns="code", values="f_cw")
    pivot_c = frame.pivot(index="parameter", columns="code", values="concurrence")
    grid = pivot_f.index.to_numpy()
    for i, a in enumerate(codes):
        for b in codes[i + 1:]:
            by_f = find_crossings(grid, pivot_f[a], pivot_f[b])
            by_c = find_crossings(grid, pivot_c[a], pivot_c[b])
            if by_f or by_c:
                logger.info(f"   {a} vs {b}: overlap crossings {by_f}, concurrence crossings {by_c}")


def run_fig2(config: SweepConfig) -> SweepResult:
    """Overlap and concurrence of coherent-state codes over the amplitude grid at fixed loss."""
    logger.info(
        f"🚀 fig2: {len(config.grid)} amplitudes x {len(config.codes)} codes at gamma={config.gamma}"
        + (f", gate error scale {config.gate_error}" if config.gate_error > 0 else "")
    )

    gate_error = overlap_limited_gate_error(config.gate_error) if config.gate_error > 0 else None

    def evaluate(alpha: float, code_id: str) -> tuple[float, float]:
        code = cat_code_from_id(code_id, alpha)
        # direct transmission has no encoding gates
        gate = gate_error if code.n_modes > 1 else None
        return (
            cat_codeword_overlap(code, config.gamma, config.sampling, gate_error=gate).value,
            cat_concurrence(code, config.gamma, gate_error=gate),
        )

    tasks = [(a, c) for a in config.grid for c in config.codes]
    with track_stage("fig2", "alpha") as timing:
        frame = _run_tasks(tasks, evaluate, config.workers, timing)
    log_timing(timing)

    result = SweepResult(frame, _metadata(config), _range_violations(frame), timing)
    try:
        report = ordering_concordance(frame)
        logger.info(
            f"📊 Best code agrees between overlap and concurrence at {report.fraction:.0%} "
            f"of {report.n_points} amplitudes"
        )
    except InvalidParameter:
        pass
    if config.output_path is not None:
        write_sweep(result, config.output_path)
    return result


def format_nogo_report(report: NogoReport) -> str:
    """Plain-text report with one 'field: value' line per entry."""
    def fmt(value) -> str:
        if value is None:
            return "none"
        if isinstance(value, float):
            return f"{value:.12g}"
        return str(value)

    lines = [
        f"samples: {report.samples}",
        f"seed: {report.seed}",
        f"kind: {report.kind}",
        f"min_margin: {fmt(report.min_margin)}",
        f"violations: {report.violations}",
    ]
    for group_name, group in (("det", report.by_det), ("kind", report.by_kind)):
        for name, stratum in group.items():
            for key, value in stratum.model_dump().items():
                lines.append(f"{group_name}.{name}.{key}: {fmt(value)}")
    return "\n".join(lines) + "\n"


def run_nogo(config: SweepConfig) -> NogoReport:
    """Randomized search for a fidelity-decreasing Gaussian channel."""
    logger.info(f"🚀 nogo: {config.samples:,} samples, seed {config.seed}")
    with track_stage("nogo", "samples") as timing:
        report = verify_nogo(config.samples, config.seed, kind=config.nogo_kind)
    logger.info(f"📊 nogo: {config.samples:,} samples in {timing.seconds:.2f}s")
    if config.output_path is not None:
        path = Path(config.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_nogo_report(report), encoding="utf-8")
        logger.info(f"✅ Report written to {path}")
    return report


def metadata_path(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + ".meta.json")


def write_sweep(result: SweepResult, path: Path) -> None:
    """Write the CSV table and its metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    result.rows[COLUMNS].to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    metadata_path(path).write_text(
        json.dumps(result.metadata, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    logger.info(f"✅ {len(result.rows)} rows written to {path}")


def read_sweep(path: Path) -> SweepResult:
    """Read a CSV table (and its sidecar when present) back."""
    path = Path(path)
    frame = pd.read_csv(path)
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise InvalidParameter(f"{path} lacks column(s) {', '.join(missing)}")
    meta_file = metadata_path(path)
    metadata = json.loads(meta_file.read_text(encoding="utf-8")) if meta_file.exists() else {}
    return SweepResult(frame[COLUMNS], metadata)


def load_config_file(path: Path) -> Dict[str, str]:
    """
    Read a flat KEY=value file.

    Keys are lowercased; empty values are dropped.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidParameter(f"Config file not found: {path}")
    values = dotenv_values(path)
    return {k.lower(): v for k, v in values.items() if v not in (None, "")}


__all__ = [
    "CHANNEL_KINDS",
    "COLUMNS",
    "FIG2_CODES",
    "SweepConfig",
    "SweepResult",
    "cat_code_from_id",
    "default_alpha_grid",
    "default_gamma_grid",
    "format_nogo_report",
    "grid_from_range",
    "load_config_file",
    "read_sweep",
    "run_fig1",
    "run_fig2",
    "run_nogo",
    "write_sweep",
]
