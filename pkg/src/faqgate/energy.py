"""Device-integral energy accounting.

Power is sampled at a fixed rate (or replayed from CSV), integrated with the
trapezoidal rule to Wh, and attributed per request.  The sampler shells out
to an external command instead of binding a vendor library, so the math stays
portable and replay-testable.
"""

from __future__ import annotations

import csv
import math
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, ValidationError


@dataclass(frozen=True)
class PowerSample:
    t: float
    power_w: float
    vram_mib: float = 0.0


@dataclass(frozen=True)
class EnergyReport:
    total_wh: float
    n_requests: int
    mwh_per_request: float
    vram_avg_mib: float
    vram_peak_mib: float
    latency_mean_s: float | None = None
    latency_p95_s: float | None = None

    def to_dict(self) -> dict:
        return {
            "total_wh": self.total_wh,
            "n_requests": self.n_requests,
            "mwh_per_request": self.mwh_per_request,
            "vram_avg_mib": self.vram_avg_mib,
            "vram_peak_mib": self.vram_peak_mib,
            "latency_mean_s": self.latency_mean_s,
            "latency_p95_s": self.latency_p95_s,
        }


def _trace_arrays(trace: list[PowerSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.ascontiguousarray([s.t for s in trace], dtype=np.float64)
    p = np.ascontiguousarray([s.power_w for s in trace], dtype=np.float64)
    v = np.ascontiguousarray([s.vram_mib for s in trace], dtype=np.float64)
    return t, p, v


def _check_monotone(t: np.ndarray) -> None:
    deltas = np.diff(t)
    bad = np.flatnonzero(deltas <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise ValidationError(f"trace timestamps not strictly increasing at index {i}")


def integrate_trace(trace: list[PowerSample]) -> float:
    """Trapezoidal integral of the power trace, in watt-hours."""
    if len(trace) < 2:
        raise DegenerateInputError("integration needs at least 2 samples")
    t, p, _ = _trace_arrays(trace)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
        raise ValidationError("trace contains non-finite values")
    _check_monotone(t)
    return kernels.trapezoid(t, p) / 3600.0


def per_request(total_wh: float, n_requests: int) -> float:
    """Milliwatt-hours attributed to each request."""
    if n_requests < 1:
        raise ValidationError("n_requests must be >= 1")
    return 1000.0 * total_wh / n_requests


def vram_stats(trace: list[PowerSample]) -> tuple[float, float]:
    """(time-weighted average, peak) VRAM over the trace.

    Time weighting matters because sampler jitter makes intervals unequal.
    """
    if not trace:
        raise DegenerateInputError("vram_stats needs a non-empty trace")
    t, _, v = _trace_arrays(trace)
    peak = float(np.max(v))
    if len(trace) == 1:
        return float(v[0]), peak
    _check_monotone(t)
    span = float(t[-1] - t[0])
    avg = kernels.trapezoid(t, v) / span
    return float(avg), peak


def latency_stats(durations_s: list[float]) -> tuple[float, float]:
    """(mean, p95) of request durations; p95 is the nearest-rank percentile."""
    if not durations_s:
        raise DegenerateInputError("latency_stats needs at least one duration")
    arr = sorted(durations_s)
    mean = sum(arr) / len(arr)
    rank = max(1, math.ceil(0.95 * len(arr)))
    return mean, arr[rank - 1]


def build_report(trace: list[PowerSample], n_requests: int,
                 latencies_s: list[float] | None = None) -> EnergyReport:
    total_wh = integrate_trace(trace)
    vram_avg, vram_peak = vram_stats(trace)
    lat_mean = lat_p95 = None
    if latencies_s:
        lat_mean, lat_p95 = latency_stats(latencies_s)
    return EnergyReport(
        total_wh=total_wh,
        n_requests=n_requests,
        mwh_per_request=per_request(total_wh, n_requests),
        vram_avg_mib=vram_avg,
        vram_peak_mib=vram_peak,
        latency_mean_s=lat_mean,
        latency_p95_s=lat_p95,
    )


# ---------------------------------------------------------------------------
# trace CSV i/o
# ---------------------------------------------------------------------------

CSV_HEADER = ["t_s", "power_w", "vram_mib"]


def write_trace_csv(trace: list[PowerSample], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in trace:
            writer.writerow([repr(s.t), repr(s.power_w), repr(s.vram_mib)])


def read_trace_csv(path: str) -> list[PowerSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValidationError(f"unexpected trace header {header!r}")
        trace = []
        for row in reader:
            if not row:
                continue
            trace.append(PowerSample(t=float(row[0]), power_w=float(row[1]), vram_mib=float(row[2])))
        return trace


# ---------------------------------------------------------------------------
# live sampling
# ---------------------------------------------------------------------------

class PowerSampler:
    """Reads ``power_w,vram_mib`` lines from an external command's stdout.

    The source is expected to emit roughly one line per interval (the way
    ``nvidia-smi --loop=1`` does).  Malformed lines are dropped and counted,
    never fatal; a dead source stops the sampler with the partial trace
    flagged.  The buffer is bounded: when the consumer stalls, the oldest
    samples are dropped rather than blocking the reader.
    """

    def __init__(self, source_cmd: str, interval_s: float = 1.0, max_samples: int = 86400):
        if interval_s <= 0:
            raise ValidationError("interval_s must be positive")
        self.source_cmd = source_cmd
        self.interval_s = interval_s
        self.max_samples = max_samples
        self.dropped_count = 0
        self.buffer_dropped = 0
        self.partial = False
        self.jitter_s: list[float] = []
        self._samples: list[PowerSample] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._proc: subprocess.Popen | None = None
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._proc = subprocess.Popen(
            shlex.split(self.source_cmd),
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        assert self._proc and self._proc.stdout
        expected = None
        for line in self._proc.stdout:
            if self._stop.is_set():
                break
            now = time.monotonic()
            if expected is not None:
                self.jitter_s.append(now - expected)
            expected = now + self.interval_s
            parts = line.strip().split(",")
            try:
                power = float(parts[0])
                vram = float(parts[1]) if len(parts) > 1 else 0.0
            except (ValueError, IndexError):
                self.dropped_count += 1
                continue
            with self._lock:
                if len(self._samples) >= self.max_samples:
                    self._samples.pop(0)
                    self.buffer_dropped += 1
                self._samples.append(PowerSample(t=now, power_w=power, vram_mib=vram))
        if not self._stop.is_set():
            self.partial = True

    def stop(self) -> list[PowerSample]:
        self._stop.set()
        if self._proc:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        if self._thread:
            self._thread.join(timeout=5)
        with self._lock:
            return list(self._samples)

    def snapshot(self) -> list[PowerSample]:
        with self._lock:
            return list(self._samples)


def sample_live(source_cmd: str, interval_s: float = 1.0,
                duration_s: float | None = None,
                stop_signal: threading.Event | None = None) -> tuple[list[PowerSample], PowerSampler]:
    """Run the sampler until duration elapses or stop_signal fires."""
    sampler = PowerSampler(source_cmd, interval_s=interval_s)
    sampler.start()
    deadline = time.monotonic() + duration_s if duration_s else None
    try:
        while True:
            if stop_signal is not None and stop_signal.is_set():
                break
            if deadline is not None and time.monotonic() >= deadline:
                break
            if sampler._proc is not None and sampler._proc.poll() is not None:
                time.sleep(0.05)  # let the reader drain remaining lines
                break
            time.sleep(min(0.05, interval_s))
    finally:
        trace = sampler.stop()
    return trace, sampler
