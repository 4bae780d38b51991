"""Dhrystone-style busy work used for DEVStone transition delays.

The loop mixes integer add, multiply, xor and compare over a small working
set, in the spirit of Dhrystone with its string and record copies replaced by
integer operations. It is calibrated once per process against the monotonic
clock; :func:`burn` then runs calibrated chunks until the requested wall-clock
time has passed.
"""

from __future__ import annotations

import time

CALIBRATION_MS = 50.0
CHUNK_MS = 0.25

_iterations_per_ms: float | None = None
_sink = 0


class ClockError(RuntimeError):
    """The platform does not offer a usable monotonic clock."""


def _check_clock() -> None:
    try:
        info = time.get_clock_info("perf_counter")
    except (AttributeError, ValueError) as exc:  # pragma: no cover
        raise ClockError("perf_counter is unavailable") from exc
    if not info.monotonic:  # pragma: no cover
        raise ClockError("perf_counter is not monotonic on this platform")


def dhrystone_loop(iterations: int, seed: int = 7) -> int:
    work = [seed, 3, 5, 7, 11, 13, 17, 19]
    acc = seed
    for i in range(iterations):
        j = i & 7
        x = (work[j] * 31 + i) & 0xFFFFFFFF
        x ^= acc >> 3
        if x > work[(j + 1) & 7]:
            acc = (acc + x) & 0xFFFFFFFF
        else:
            acc = (acc - x) & 0xFFFFFFFF
        work[j] = x
    return acc


def calibrate_burn(force: bool = False) -> float:
    """Return loop iterations per millisecond, measured once per process."""
    global _iterations_per_ms, _sink
    if _iterations_per_ms is not None and not force:
        return _iterations_per_ms
    _check_clock()
    n = 1000
    while True:
        start = time.perf_counter()
        _sink ^= dhrystone_loop(n)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        if elapsed_ms >= CALIBRATION_MS:
            break
        n *= 2
    _iterations_per_ms = n / elapsed_ms
    return _iterations_per_ms


def burn(ms: float) -> int:
    """Keep the CPU busy for ``ms`` milliseconds. Returns iterations executed."""
    global _sink
    if ms <= 0:
        return 0
    chunk = max(1, int(calibrate_burn() * CHUNK_MS))
    deadline = time.perf_counter() + ms / 1e3
    done = 0
    while True:
        _sink ^= dhrystone_loop(chunk, done)
        done += chunk
        if time.perf_counter() >= deadline:
            return done
