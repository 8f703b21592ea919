"""Per-cycle arrival traces: Poisson, self-similar, and Hurst validation.

Traces are struct-of-arrays: one int64 packet count and byte total per
scheduling cycle. Packet lengths are only materialized on request
(``keep_lengths``); large traces carry counts and byte volumes only, with
per-cycle packet counts derived from the 791 B mean of the uniform
64..1518 B length distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .chassis import MEAN_PACKET_BYTES

MIN_PACKET_BYTES = 64
MAX_PACKET_BYTES = 1518
MIN_HURST_CYCLES = 1024

#: Aggregation levels of the variance-time estimator span 1..256.
MAX_AGGREGATION_LEVEL = 256

#: On/off sources superposed by the self-similar generator.
DEFAULT_SOURCES = 32


@dataclass(frozen=True)
class TrafficTrace:
    """Arrival volumes for a run of equal-length scheduling cycles."""

    cycle_length: float
    packet_counts: np.ndarray
    byte_totals: np.ndarray
    kind: str
    seed: int | None = None
    packet_lengths: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        counts = np.ascontiguousarray(self.packet_counts, dtype=np.int64)
        totals = np.ascontiguousarray(self.byte_totals, dtype=np.int64)
        object.__setattr__(self, "packet_counts", counts)
        object.__setattr__(self, "byte_totals", totals)
        if self.cycle_length <= 0:
            raise ValueError("cycle_length must be > 0")
        if counts.shape != totals.shape or counts.ndim != 1:
            raise ValueError("packet_counts and byte_totals must be 1-D and equal length")
        if np.any(counts < 0) or np.any(totals < 0):
            raise ValueError("arrival volumes must be >= 0")
        if self.packet_lengths is not None:
            if len(self.packet_lengths) != len(counts):
                raise ValueError("one length array per cycle required")
            for c, lens in enumerate(self.packet_lengths):
                if len(lens) != counts[c] or lens.sum() != totals[c]:
                    raise ValueError(f"cycle {c}: lengths disagree with count/total")
                if len(lens) and (
                    lens.min() < MIN_PACKET_BYTES or lens.max() > MAX_PACKET_BYTES
                ):
                    raise ValueError(f"cycle {c}: packet length outside 64..1518 B")

    @property
    def cycles(self) -> int:
        return len(self.byte_totals)

    @property
    def total_bytes(self) -> int:
        return int(self.byte_totals.sum())

    @property
    def mean_rate(self) -> float:
        """Average offered rate in bits/second."""
        return self.total_bytes * 8.0 / (self.cycles * self.cycle_length)


def poisson_trace(
    lambda_a: float,
    cycles: int,
    T: float,
    seed: int,
    packet_bits: float = 10_000.0,
) -> TrafficTrace:
    """I.i.d. Poisson per-cycle packet counts at ``lambda_a`` packets/second.

    Every packet carries ``packet_bits`` bits (the analytic model's fixed
    size), so byte totals are exact multiples of the packet size.
    """
    if lambda_a < 0:
        raise ValueError("arrival rate must be >= 0")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if T <= 0:
        raise ValueError("cycle length must be > 0")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(lambda_a * T, cycles).astype(np.int64)
    totals = counts * int(packet_bits) // 8
    return TrafficTrace(T, counts, totals, kind="poisson", seed=seed)


def constant_trace(
    rate: float, cycles: int, T: float, packet_bits: float = 10_000.0
) -> TrafficTrace:
    """Deterministic trace offering ``rate`` bits/second every cycle."""
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    bytes_per_cycle = int(round(rate * T / 8.0))
    count = int(round(bytes_per_cycle * 8.0 / packet_bits)) if bytes_per_cycle else 0
    count = max(count, 1) if bytes_per_cycle > 0 else 0
    counts = np.full(cycles, count, dtype=np.int64)
    totals = np.full(cycles, bytes_per_cycle, dtype=np.int64)
    return TrafficTrace(T, counts, totals, kind="constant", seed=None)


def self_similar_trace(
    mean_rate: float,
    hurst: float,
    cycles: int,
    T: float,
    seed: int,
    sources: int = DEFAULT_SOURCES,
    method: str = "pareto",
    keep_lengths: bool = False,
) -> TrafficTrace:
    """Long-range-dependent per-cycle byte volumes at the requested mean rate.

    ``pareto`` superposes ``sources`` on/off sources whose on and off
    periods are Pareto with shape 3 - 2*hurst (asymptotically self-similar);
    ``fgn`` synthesizes exact fractional Gaussian noise via circulant
    embedding. ``keep_lengths`` materializes uniform 64..1518 B packets per
    cycle (small traces only); otherwise packet counts use the 791 B mean
    length.
    """
    if not 0.5 < hurst < 1.0:
        raise ValueError("hurst must lie strictly between 0.5 and 1")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if T <= 0:
        raise ValueError("cycle length must be > 0")
    if mean_rate < 0:
        raise ValueError("mean_rate must be >= 0")
    rng = np.random.default_rng(seed)
    if method == "pareto":
        volumes = _onoff_byte_volumes(rng, mean_rate, hurst, cycles, T, sources)
    elif method == "fgn":
        volumes = _fgn_byte_volumes(rng, mean_rate, hurst, cycles, T)
    else:
        raise ValueError(f"unknown method {method!r}")
    counts, totals, lengths = _packetize(rng, volumes, keep_lengths)
    return TrafficTrace(
        T, counts, totals, kind="self-similar", seed=seed, packet_lengths=lengths
    )


def _add_interval(acc: np.ndarray, start: float, end: float) -> None:
    """Add the coverage of [start, end) to unit-width bins."""
    i0 = int(start)
    i1 = int(end)
    if i0 == i1:
        acc[i0] += end - start
        return
    acc[i0] += i0 + 1 - start
    if i1 > i0 + 1:
        acc[i0 + 1 : i1] += 1.0
    if i1 < len(acc):
        acc[i1] += end - i1


def _onoff_byte_volumes(rng, mean_rate, hurst, cycles, T, sources):
    """Aggregate of alternating Pareto on/off sources, in bytes per cycle.

    On and off periods share the same distribution, so each source is on
    half the time and emits at twice its share of the mean rate. A warm-up
    stretch is discarded to wash out the synchronized start.
    """
    shape = 3.0 - 2.0 * hurst
    warmup = min(cycles, 1024)
    horizon = cycles + warmup
    on_time = np.zeros(horizon)
    for _ in range(sources):
        pos = 0.0
        on = bool(rng.random() < 0.5)
        while pos < horizon:
            for duration in (rng.pareto(shape, 512) + 1.0):
                if on:
                    _add_interval(on_time, pos, min(pos + duration, horizon))
                pos += duration
                on = not on
                if pos >= horizon:
                    break
    rate_while_on = 2.0 * mean_rate / sources
    return on_time[warmup:] * rate_while_on * T / 8.0


def _fgn_byte_volumes(rng, mean_rate, hurst, cycles, T):
    """Fractional Gaussian byte volumes, sigma = mean/4, clipped at zero."""
    mean_bytes = mean_rate * T / 8.0
    noise = _fractional_gaussian_noise(rng, hurst, cycles)
    return np.clip(mean_bytes + (mean_bytes / 4.0) * noise, 0.0, None)


def _fractional_gaussian_noise(rng, hurst, n):
    """Unit-variance fractional Gaussian noise by circulant embedding."""
    if n == 1:
        return rng.standard_normal(1)
    k = np.arange(n, dtype=float)
    h2 = 2.0 * hurst
    autocov = 0.5 * ((k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)
    row = np.concatenate([autocov, autocov[n - 2 : 0 : -1]])
    m = row.size
    eigenvalues = np.fft.fft(row).real
    eigenvalues[eigenvalues < 0] = 0.0  # roundoff guard
    half = m // 2
    w = np.zeros(m, dtype=complex)
    w[0] = math.sqrt(eigenvalues[0] / m) * rng.standard_normal()
    w[half] = math.sqrt(eigenvalues[half] / m) * rng.standard_normal()
    re = rng.standard_normal(half - 1)
    im = rng.standard_normal(half - 1)
    w[1:half] = np.sqrt(eigenvalues[1:half] / (2.0 * m)) * (re + 1j * im)
    w[half + 1 :] = np.conj(w[1:half][::-1])
    return np.fft.fft(w).real[:n]


def _packetize(rng, volumes, keep_lengths):
    totals = np.rint(volumes).astype(np.int64)
    totals[totals < 0] = 0
    if not keep_lengths:
        counts = np.rint(totals / MEAN_PACKET_BYTES).astype(np.int64)
        counts[(totals > 0) & (counts == 0)] = 1
        return counts, totals, None

    lengths: list[np.ndarray] = []
    counts = np.zeros(len(totals), dtype=np.int64)
    exact = np.zeros(len(totals), dtype=np.int64)
    for c, target in enumerate(int(t) for t in totals):
        if target < MIN_PACKET_BYTES:
            lengths.append(np.empty(0, dtype=np.int64))
            continue
        drawn: list[np.ndarray] = []
        got = 0
        while got < target:
            need = max(8, int((target - got) / MEAN_PACKET_BYTES) + 4)
            batch = rng.integers(
                MIN_PACKET_BYTES, MAX_PACKET_BYTES + 1, size=need, dtype=np.int64
            )
            cum = got + np.cumsum(batch)
            cut = int(np.searchsorted(cum, target, side="left")) + 1
            if cut >= len(batch):
                drawn.append(batch)
                got = int(cum[-1])
            else:
                drawn.append(batch[:cut])
                got = int(cum[cut - 1])
        lens = np.concatenate(drawn)
        lengths.append(lens)
        counts[c] = len(lens)
        exact[c] = got
    return counts, exact, tuple(lengths)


def estimate_hurst(trace: TrafficTrace) -> float:
    """Hurst exponent of the trace's byte-volume series."""
    return hurst_exponent(trace.byte_totals)


def hurst_exponent(series, max_level: int = MAX_AGGREGATION_LEVEL) -> float:
    """Variance-time Hurst estimate of a stationary series.

    Aggregates the series at log-spaced block sizes up to ``max_level``,
    fits log variance against log block size, and maps the slope beta to
    H = 1 + beta/2 (i.i.d. series give beta = -1, hence H = 0.5).
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < MIN_HURST_CYCLES:
        raise ValueError(f"need a 1-D series of at least {MIN_HURST_CYCLES} cycles")
    if np.var(x) == 0.0:
        raise ValueError("constant series has no defined Hurst exponent")
    top = min(max_level, len(x) // 8)
    levels = np.unique(
        np.rint(np.logspace(0.0, math.log10(top), 24)).astype(int)
    )
    log_m, log_v = [], []
    for m in levels:
        blocks = len(x) // m
        agg = x[: blocks * m].reshape(blocks, m).mean(axis=1)
        v = agg.var()
        if v > 0:
            log_m.append(math.log10(m))
            log_v.append(math.log10(v))
    if len(log_m) < 3:
        raise ValueError("series too degenerate for a variance-time fit")
    slope = np.polyfit(log_m, log_v, 1)[0]
    return 1.0 + slope / 2.0


def trace_to_csv(trace: TrafficTrace, path) -> None:
    """Write (cycle_index, packet_count, byte_total) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle_index", "packet_count", "byte_total"])
        for c in range(trace.cycles):
            writer.writerow(
                [c, int(trace.packet_counts[c]), int(trace.byte_totals[c])]
            )


def trace_from_csv(path, cycle_length: float, kind: str = "imported") -> TrafficTrace:
    """Read a trace written by :func:`trace_to_csv`."""
    counts, totals = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            counts.append(int(row["packet_count"]))
            totals.append(int(row["byte_total"]))
    return TrafficTrace(
        cycle_length,
        np.asarray(counts, dtype=np.int64),
        np.asarray(totals, dtype=np.int64),
        kind=kind,
    )
