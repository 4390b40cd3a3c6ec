"""Seeded discrete-event simulation of a single FCFS queue.

Poisson arrivals at a total rate lambda share one server of capacity C
(packets/s); each arrival is independently marked as belonging to the tagged
flow with probability ``tagged_fraction``. Service times are exponential with
mean 1/C (unit-mean packet sizes) or deterministic 1/C. The buffer is either
unbounded (requires lambda < C) or holds ``buffer_capacity`` packets counting
the one in service; arrivals to a full system are tail-dropped.

The per-run randomness comes from one numpy Generator seeded by the config;
the draw order is fixed (interarrivals, then service times when exponential,
then tagging uniforms), so identical configs reproduce bit-identical packet
streams. Sweeps derive per-point child seeds with a documented splitmix64
mix, making every point re-runnable in isolation.

Delay variation is measured between consecutive tagged packets: each pair of
adjacent entries of the tagged subsequence contributes |T_next - T_prev| when
both were delivered; a dropped tagged packet breaks the pair (the delay of a
dropped packet is undefined). The first ``warmup_fraction`` of arrivals is
excluded from all summary statistics to remove the empty-queue start-up bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import (
    DomainError,
    EmptyRunError,
    InconsistentGroupError,
    InstabilityError,
)

SERVICE_EXPONENTIAL = "exponential"
SERVICE_DETERMINISTIC = "deterministic"
_SERVICE_KINDS = (SERVICE_EXPONENTIAL, SERVICE_DETERMINISTIC)

#: Fixed fallback seed used when callers do not supply one. Never wall-clock.
DEFAULT_SEED = 1729

_MASK64 = (1 << 64) - 1

PACKET_TRACE_HEADER = "index,flow,arrival_s,service_s,departure_s,sojourn_s,dropped"


def splitmix64(value: int) -> int:
    """One step of the splitmix64 finalizer (public-domain constants)."""
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = value
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def child_seed(base_seed: int, *indices: int) -> int:
    """Derive an independent child seed from a base seed and grid indices.

    Recipe: starting from the base seed, fold in each index with
    ``s = splitmix64(s XOR (index + 1))``. Documented so any point of a sweep
    can be reproduced standalone.
    """
    s = base_seed & _MASK64
    for ix in indices:
        s = splitmix64(s ^ ((ix + 1) & _MASK64))
    return s


@dataclass(frozen=True)
class SimConfig:
    """Everything one run depends on, including the seed."""

    capacity_C: float
    arrival_rate_lambda: float
    tagged_fraction: float = 0.1
    buffer_capacity: int | None = None
    horizon_packets: int = 100_000
    warmup_fraction: float = 0.1
    seed: int = DEFAULT_SEED
    service_distribution: str = SERVICE_EXPONENTIAL

    def __post_init__(self):
        if not (isinstance(self.capacity_C, (int, float)) and self.capacity_C > 0
                and math.isfinite(self.capacity_C)):
            raise DomainError(f"capacity must be a positive finite rate, got {self.capacity_C!r}")
        if not (isinstance(self.arrival_rate_lambda, (int, float))
                and self.arrival_rate_lambda > 0 and math.isfinite(self.arrival_rate_lambda)):
            raise DomainError(
                f"arrival rate must be a positive finite rate, got {self.arrival_rate_lambda!r}"
            )
        if self.buffer_capacity is None:
            if self.arrival_rate_lambda >= self.capacity_C:
                raise InstabilityError(
                    f"unbounded buffer requires lambda < C; got load {self.rho:.6g}"
                )
        else:
            if not (isinstance(self.buffer_capacity, int) and self.buffer_capacity >= 1):
                raise DomainError(
                    f"buffer capacity must be a positive packet count or None, "
                    f"got {self.buffer_capacity!r}"
                )
        if not (0.0 < self.tagged_fraction <= 1.0):
            raise DomainError(f"tagged fraction must lie in (0, 1], got {self.tagged_fraction!r}")
        if not (isinstance(self.horizon_packets, int) and self.horizon_packets >= 0):
            raise DomainError(f"horizon must be a packet count, got {self.horizon_packets!r}")
        if self.horizon_packets == 0:
            raise EmptyRunError("horizon of zero packets: nothing to simulate")
        if not (0.0 <= self.warmup_fraction < 0.5):
            raise DomainError(f"warmup fraction must lie in [0, 0.5), got {self.warmup_fraction!r}")
        if not isinstance(self.seed, int):
            raise DomainError(f"seed must be an integer, got {self.seed!r}")
        if self.service_distribution not in _SERVICE_KINDS:
            raise DomainError(
                f"service distribution must be one of {_SERVICE_KINDS}, "
                f"got {self.service_distribution!r}"
            )

    @property
    def rho(self) -> float:
        return self.arrival_rate_lambda / self.capacity_C

    @classmethod
    def from_rho(cls, capacity_C: float, rho: float, **kwargs) -> "SimConfig":
        return cls(capacity_C, rho * capacity_C, **kwargs)


@dataclass(frozen=True)
class PacketRecord:
    """One simulated packet. Dropped packets have no departure or sojourn."""

    index: int
    flow: str                       # "tagged" | "background"
    arrival_time: float
    service_time: float
    departure_time: float | None
    sojourn_T: float | None
    dropped: bool


class PacketLog:
    """Column-oriented store of one run's packets.

    Behaves as a sequence of PacketRecord while keeping the underlying numpy
    arrays available for fast analysis (departure and sojourn hold NaN for
    dropped packets).
    """

    def __init__(self, arrival_times, service_times, departure_times, sojourn_times,
                 tagged, dropped):
        self.arrival_times = arrival_times
        self.service_times = service_times
        self.departure_times = departure_times
        self.sojourn_times = sojourn_times
        self.tagged = tagged
        self.dropped = dropped

    def __len__(self) -> int:
        return len(self.arrival_times)

    def __getitem__(self, index: int) -> PacketRecord:
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(index)
        dropped = bool(self.dropped[index])
        return PacketRecord(
            index=index,
            flow="tagged" if self.tagged[index] else "background",
            arrival_time=float(self.arrival_times[index]),
            service_time=float(self.service_times[index]),
            departure_time=None if dropped else float(self.departure_times[index]),
            sojourn_T=None if dropped else float(self.sojourn_times[index]),
            dropped=dropped,
        )

    def __iter__(self) -> Iterator[PacketRecord]:
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class RunSummary:
    """Post-warmup statistics of one run.

    ``loss_B`` is computed from the offered/delivered counters, which is the
    counting form of the loss/throughput identity; ``offered_lambda`` and
    ``throughput_X`` divide the same counters by the same measurement window,
    so the rate form holds to arithmetic precision.
    """

    mean_sojourn: float
    empirical_jitter_J: float
    throughput_X: float
    offered_lambda: float
    loss_B: float
    n_jitter_samples: int
    seed: int
    offered_count: int
    delivered_count: int
    config: SimConfig


def fcfs_departures(arrival_times, service_times, buffer_capacity: int | None = None):
    """Run the FCFS queue over explicit arrival and service times.

    This is the deterministic core of the simulator and doubles as a test
    hook for hand-built packet patterns. Returns ``(departures, dropped)``
    where departures holds NaN for dropped packets. A departure occurring
    exactly at an arrival instant frees its buffer slot first.
    """
    arr = np.ascontiguousarray(arrival_times, dtype=float)
    srv = np.ascontiguousarray(service_times, dtype=float)
    if arr.ndim != 1 or srv.ndim != 1 or arr.shape != srv.shape:
        raise DomainError("arrival and service times must be 1-D arrays of equal length")
    n = arr.size
    if n == 0:
        return np.empty(0), np.empty(0, dtype=bool)
    if np.any(np.diff(arr) < 0):
        raise DomainError("arrival times must be non-decreasing")
    if np.any(srv < 0) or not np.all(np.isfinite(srv)) or not np.all(np.isfinite(arr)):
        raise DomainError("times must be finite and service times non-negative")

    if buffer_capacity is None:
        # Lindley recursion in closed form: the waiting time is the running
        # cumulative sum of (service - interarrival) minus its running minimum.
        increments = srv[:-1] - np.diff(arr)
        prefix = np.concatenate(([0.0], np.cumsum(increments)))
        waits = prefix - np.minimum.accumulate(prefix)
        departures = arr + waits + srv
        return departures, np.zeros(n, dtype=bool)

    if buffer_capacity < 1:
        raise DomainError(f"buffer capacity must be >= 1, got {buffer_capacity}")

    a = arr.tolist()
    s = srv.tolist()
    departures = [math.nan] * n
    dropped = [False] * n
    accepted_dep = [0.0] * n     # departures of accepted packets, in order
    n_acc = 0
    head = 0                     # accepted packets departed by current time
    for i in range(n):
        t = a[i]
        while head < n_acc and accepted_dep[head] <= t:
            head += 1
        if n_acc - head >= buffer_capacity:
            dropped[i] = True
            continue
        if n_acc and accepted_dep[n_acc - 1] > t:
            start = accepted_dep[n_acc - 1]
        else:
            start = t
        d = start + s[i]
        accepted_dep[n_acc] = d
        n_acc += 1
        departures[i] = d
    return np.asarray(departures), np.asarray(dropped)


def _jitter_pair_samples(sojourn, tagged_idx, dropped):
    """|sojourn difference| over adjacent tagged pairs with both ends delivered."""
    if tagged_idx.size < 2:
        return np.empty(0)
    u = tagged_idx[:-1]
    v = tagged_idx[1:]
    ok = ~dropped[u] & ~dropped[v]
    return np.abs(sojourn[v[ok]] - sojourn[u[ok]])


def simulate_run(config: SimConfig) -> tuple[PacketLog, RunSummary]:
    """Generate, queue, and summarize one packet stream."""
    n = config.horizon_packets
    rng = np.random.default_rng(config.seed & _MASK64)
    interarrivals = rng.exponential(1.0 / config.arrival_rate_lambda, size=n)
    arrivals = np.cumsum(interarrivals)
    if config.service_distribution == SERVICE_EXPONENTIAL:
        services = rng.exponential(1.0 / config.capacity_C, size=n)
    else:
        services = np.full(n, 1.0 / config.capacity_C)
    tagged = rng.random(size=n) < config.tagged_fraction

    departures, dropped = fcfs_departures(arrivals, services, config.buffer_capacity)
    sojourn = departures - arrivals

    log = PacketLog(arrivals, services, departures, sojourn, tagged, dropped)

    first = int(n * config.warmup_fraction)
    t_start = float(arrivals[first - 1]) if first > 0 else 0.0
    t_end = float(arrivals[-1])
    window = t_end - t_start
    offered = n - first
    delivered = int(np.count_nonzero(~dropped[first:]))

    delivered_sojourns = sojourn[first:][~dropped[first:]]
    mean_sojourn = float(delivered_sojourns.mean()) if delivered_sojourns.size else math.nan

    tagged_idx = np.flatnonzero(tagged[first:]) + first
    samples = _jitter_pair_samples(sojourn, tagged_idx, dropped)
    jitter = float(samples.mean()) if samples.size else math.nan

    summary = RunSummary(
        mean_sojourn=mean_sojourn,
        empirical_jitter_J=jitter,
        throughput_X=delivered / window,
        offered_lambda=offered / window,
        loss_B=(offered - delivered) / offered,
        n_jitter_samples=int(samples.size),
        seed=config.seed,
        offered_count=offered,
        delivered_count=delivered,
        config=config,
    )
    return log, summary


def simulate_sweep(
    base_config: SimConfig,
    rho_grid,
    seeds_per_point: int = 1,
    vary: str = "arrival",
) -> list[RunSummary]:
    """One run per (rho, seed) over a load grid.

    ``vary="arrival"`` substitutes lambda = rho * C at fixed capacity (the
    model-validation sweep). ``vary="capacity"`` substitutes C = lambda / rho
    at fixed arrival rate, reproducing a link whose capacity degrades under a
    constant offered rate. Child seeds come from ``child_seed(base, i, j)``.
    """
    if vary not in ("arrival", "capacity"):
        raise DomainError(f"vary must be 'arrival' or 'capacity', got {vary!r}")
    if not (isinstance(seeds_per_point, int) and seeds_per_point >= 1):
        raise DomainError(f"seeds_per_point must be >= 1, got {seeds_per_point!r}")
    summaries = []
    for i, rho in enumerate(rho_grid):
        if not (isinstance(rho, (int, float)) and math.isfinite(rho) and rho > 0):
            raise DomainError(f"rho_grid[{i}] = {rho!r} is not a positive load")
        for j in range(seeds_per_point):
            seed = child_seed(base_config.seed, i, j)
            try:
                if vary == "arrival":
                    cfg = replace(
                        base_config,
                        arrival_rate_lambda=rho * base_config.capacity_C,
                        seed=seed,
                    )
                else:
                    cfg = replace(
                        base_config,
                        capacity_C=base_config.arrival_rate_lambda / rho,
                        seed=seed,
                    )
                _, summary = simulate_run(cfg)
            except (DomainError, InstabilityError) as exc:
                raise type(exc)(
                    f"rho={rho!r} (grid index {i}, seed index {j}): {exc}"
                ) from exc
            summaries.append(summary)
    return summaries


@dataclass(frozen=True)
class SweepAggregate:
    """Per-load aggregate over seeds. stderr is None for a single run."""

    capacity_C: float
    arrival_rate_lambda: float
    load_rho: float
    buffer_capacity: int | None
    service_distribution: str
    n_runs: int
    jitter_mean: float
    jitter_stderr: float | None
    throughput_mean: float
    loss_mean: float
    mean_sojourn_mean: float


def merge_summaries(summaries) -> SweepAggregate:
    """Aggregate runs that share (C, lambda, buffer, service distribution).

    Summaries are sorted by seed before reducing, so the result does not
    depend on the order runs finished in.
    """
    group = list(summaries)
    if not group:
        raise DomainError("cannot merge an empty group of summaries")
    key = None
    for s in group:
        k = (
            s.config.capacity_C,
            s.config.arrival_rate_lambda,
            s.config.buffer_capacity,
            s.config.service_distribution,
        )
        if key is None:
            key = k
        elif k != key:
            raise InconsistentGroupError(
                f"summaries mix parameters: {k} vs {key}; group them by load first"
            )
    group.sort(key=lambda s: s.seed)
    jitters = np.array([s.empirical_jitter_J for s in group])
    stderr = float(jitters.std(ddof=1) / math.sqrt(len(group))) if len(group) >= 2 else None
    return SweepAggregate(
        capacity_C=key[0],
        arrival_rate_lambda=key[1],
        load_rho=key[1] / key[0],
        buffer_capacity=key[2],
        service_distribution=key[3],
        n_runs=len(group),
        jitter_mean=float(jitters.mean()),
        jitter_stderr=stderr,
        throughput_mean=float(np.mean([s.throughput_X for s in group])),
        loss_mean=float(np.mean([s.loss_B for s in group])),
        mean_sojourn_mean=float(np.mean([s.mean_sojourn for s in group])),
    )


def write_packet_trace(log: PacketLog, path) -> None:
    """Dump one packet per line; floats carry 17 significant digits so the
    file round-trips to the exact same doubles."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(PACKET_TRACE_HEADER + "\n")
        for i in range(len(log)):
            flow = "tagged" if log.tagged[i] else "background"
            arr = f"{log.arrival_times[i]:.17g}"
            srv = f"{log.service_times[i]:.17g}"
            if log.dropped[i]:
                fh.write(f"{i},{flow},{arr},{srv},,,1\n")
            else:
                dep = f"{log.departure_times[i]:.17g}"
                soj = f"{log.sojourn_times[i]:.17g}"
                fh.write(f"{i},{flow},{arr},{srv},{dep},{soj},0\n")


def read_packet_trace(path) -> PacketLog:
    """Inverse of write_packet_trace."""
    arrivals, services, departures, sojourns, tagged, dropped = [], [], [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != PACKET_TRACE_HEADER:
            raise DomainError(f"unexpected packet trace header: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 7:
                raise DomainError(f"malformed packet trace line: {line!r}")
            _, flow, arr, srv, dep, soj, drop = parts
            arrivals.append(float(arr))
            services.append(float(srv))
            is_dropped = drop == "1"
            departures.append(math.nan if is_dropped else float(dep))
            sojourns.append(math.nan if is_dropped else float(soj))
            tagged.append(flow == "tagged")
            dropped.append(is_dropped)
    return PacketLog(
        np.asarray(arrivals),
        np.asarray(services),
        np.asarray(departures),
        np.asarray(sojourns),
        np.asarray(tagged, dtype=bool),
        np.asarray(dropped, dtype=bool),
    )
