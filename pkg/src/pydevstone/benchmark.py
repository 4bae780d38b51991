"""The DEVStone metric: benchmark set, timed replications and reporting.

Each replication builds a fresh model and engine and injects the stimulus
before the clock starts; only :meth:`SimulationEngine.run_to_completion` is
timed. The metric is the number of full benchmark sets (DEVStone units) that
fit in one minute, ``60 / sum(per-model mean seconds)``.
"""

from __future__ import annotations

import datetime as _dt
import gc
import math
import platform
import socket
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from . import __version__
from .burn import ClockError
from .devstone import DevstoneConfig, DevstoneType, build_devstone
from .kernel import DEFAULT_TRANSITION_BUDGET, SimulationStats, build_engine
from .stats import ci95, mean

ENGINE_NAME = "pydevstone"
MIN_OFFICIAL_REPLICATIONS = 30

_SHAPES = {
    DevstoneType.LI: ((200, 200), (200, 40), (40, 200)),
    DevstoneType.HI: ((200, 200), (200, 40), (40, 200)),
    DevstoneType.HO: ((200, 200), (200, 40), (40, 200)),
    DevstoneType.HMOD: ((20, 20), (20, 4), (4, 20)),
}


class NondeterminismError(RuntimeError):
    """Two replications of one configuration produced different counters."""


def benchmark_set() -> List[DevstoneConfig]:
    """The 12 zero-delay models of one DEVStone unit, balanced/deep/wide per type."""
    return [
        DevstoneConfig(kind, depth, width)
        for kind, shapes in _SHAPES.items()
        for depth, width in shapes
    ]


@dataclass
class ModelTiming:
    config: DevstoneConfig
    samples: List[float]
    stats: SimulationStats

    @property
    def mean_s(self) -> float:
        return mean(self.samples)

    @property
    def ci95_half_width_s(self) -> Optional[float]:
        return ci95(self.samples) if len(self.samples) >= 2 else None


def _timed_run(config: DevstoneConfig, budget: int) -> tuple:
    model = build_devstone(config)
    engine = build_engine(model)
    engine.inject(model.in_ports, 0)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        stats = engine.run_to_completion(budget)
        stop = time.perf_counter()
    finally:
        if gc_was_enabled:
            gc.enable()
    if stop < start:
        raise ClockError(f"monotonic clock went backwards ({start} -> {stop})")
    return stop - start, stats


def run_replications(
    config: DevstoneConfig,
    n: int,
    warmup: int = 0,
    budget: int = DEFAULT_TRANSITION_BUDGET,
) -> ModelTiming:
    if n < 1:
        raise ValueError("at least one replication is required")
    for _ in range(warmup):
        _timed_run(config, budget)
    samples = []
    reference = None
    for rep in range(n):
        seconds, stats = _timed_run(config, budget)
        if reference is None:
            reference = stats
        elif stats != reference:
            raise NondeterminismError(
                f"{config.label}: replication {rep + 1} gave {stats}, expected {reference}"
            )
        samples.append(seconds)
    return ModelTiming(config, samples, reference)


def devstone_metric(per_model_means: Sequence[float]) -> float:
    """DEVStones per minute for the given per-model mean times (seconds)."""
    if len(per_model_means) == 0:
        raise ValueError("no model times given")
    for t in per_model_means:
        if not math.isfinite(t) or t <= 0:
            raise ValueError(f"model times must be positive and finite, got {t!r}")
    return 60.0 / math.fsum(per_model_means)


def machine_descriptor() -> Dict[str, str]:
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {
        "hostname": socket.gethostname(),
        "os": platform.platform(),
        "cpu": cpu,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def engine_descriptor() -> Dict[str, str]:
    return {"name": ENGINE_NAME, "version": __version__}


@dataclass
class MetricReport:
    models: List[ModelTiming]
    replications: int
    machine: Dict[str, str] = field(default_factory=machine_descriptor)
    engine: Dict[str, str] = field(default_factory=engine_descriptor)

    @property
    def total_mean_s(self) -> float:
        return math.fsum(m.mean_s for m in self.models)

    @property
    def devstones_per_minute(self) -> float:
        return devstone_metric([m.mean_s for m in self.models])

    def replication_totals(self) -> List[float]:
        """Seconds per DEVStone unit for each replication index."""
        return [math.fsum(s) for s in zip(*(m.samples for m in self.models))]

    @property
    def total_ci95_s(self) -> Optional[float]:
        totals = self.replication_totals()
        return ci95(totals) if len(totals) >= 2 else None

    @property
    def devstones_ci95(self) -> Optional[float]:
        # first-order propagation through D = 60 / T
        dt = self.total_ci95_s
        if dt is None:
            return None
        total = self.total_mean_s
        return 60.0 * dt / (total * total)

    @property
    def breakdown_pct(self) -> Dict[str, float]:
        return breakdown(self)


def breakdown(report: MetricReport) -> Dict[str, float]:
    """Percentage of the total mean time spent on each DEVStone type."""
    total = report.total_mean_s
    pct = {kind.value: 0.0 for kind in DevstoneType}
    for m in report.models:
        pct[m.config.type.value] += m.mean_s
    return {k: 100.0 * v / total for k, v in pct.items()}


def run_benchmark(
    reps: int = MIN_OFFICIAL_REPLICATIONS,
    warmup: int = 0,
    budget: int = DEFAULT_TRANSITION_BUDGET,
    configs: Optional[Sequence[DevstoneConfig]] = None,
    progress: Optional[Callable[[ModelTiming], None]] = None,
) -> MetricReport:
    """Time every model of the benchmark set, one after the other."""
    timings = []
    for config in configs if configs is not None else benchmark_set():
        timing = run_replications(config, reps, warmup=warmup, budget=budget)
        timings.append(timing)
        if progress is not None:
            progress(timing)
    return MetricReport(timings, reps)
