"""
Wall-clock timing of sweeps, broken down by grid point and code.

Timings are kept off the CSV and its sidecar: those files have to be byte-identical
between runs, and durations never are.
"""
import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from overlap.config import settings

logger = logging.getLogger(__name__)


@dataclass
class SweepTiming:
    """Durations of one sweep, keyed by the grid parameter (gamma or alpha) and the code id."""

    stage: str
    parameter_name: str = "gamma"
    seconds: float = 0.0
    points: int = 0
    by_code: Dict[str, float] = field(default_factory=dict)
    by_parameter: Dict[float, float] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def observe(self, parameter: float, code: str, seconds: float) -> None:
        """Add one evaluated (parameter, code) point. Safe to call from worker threads."""
        with self._lock:
            self.points += 1
            self.by_code[code] = self.by_code.get(code, 0.0) + seconds
            self.by_parameter[parameter] = self.by_parameter.get(parameter, 0.0) + seconds

    def slowest_parameter(self) -> Optional[Tuple[float, float]]:
        """(parameter, seconds) of the grid value that cost the most, summed over codes."""
        if not self.by_parameter:
            return None
        return max(self.by_parameter.items(), key=lambda item: (item[1], -item[0]))

    def slowest_codes(self, n: int = 3) -> List[Tuple[str, float]]:
        return sorted(self.by_code.items(), key=lambda item: (-item[1], item[0]))[:n]

    def summary(self) -> Dict[str, object]:
        slowest = self.slowest_parameter()
        return {
            "stage": self.stage,
            "seconds": round(self.seconds, 3),
            "points": self.points,
            "by_code": {code: round(s, 3) for code, s in sorted(self.by_code.items())},
            f"slowest_{self.parameter_name}": None if slowest is None else slowest[0],
        }


def log_timing(timing: SweepTiming) -> None:
    """One INFO line for the stage, then the codes that took longest."""
    slowest = timing.slowest_parameter()
    where = "" if slowest is None else (
        f", slowest at {timing.parameter_name}={slowest[0]:g} ({slowest[1] * 1000:.0f}ms)"
    )
    logger.info(f"📊 {timing.stage}: {timing.points} points in {timing.seconds:.2f}s{where}")
    for code, seconds in timing.slowest_codes():
        logger.debug(f"   {code}: {seconds:.3f}s")


@contextmanager
def track_stage(
    stage: str, parameter_name: str = "gamma", slow_seconds: Optional[float] = None
) -> Iterator[SweepTiming]:
    """
    Time a sweep stage.

    Usage:
        with track_stage("fig2", "alpha") as timing:
            ...
            timing.observe(alpha, code_id, elapsed)
    """
    threshold = settings.slow_stage_seconds if slow_seconds is None else slow_seconds
    timing = SweepTiming(stage=stage, parameter_name=parameter_name)
    start = time.perf_counter()
    try:
        yield timing
    finally:
        timing.seconds = time.perf_counter() - start
        if timing.seconds > threshold:
            slowest = timing.slowest_parameter()
            hint = "" if slowest is None else f", worst {parameter_name}={slowest[0]:g}"
            logger.warning(f"Slow stage: {stage} took {timing.seconds:.1f}s{hint}")
