"""Field-log schema, canonical CSV round-trip, and synthetic drive-test traces.

The log format is one row per second: timestamp, position (with an integrity
level), distance and speed, and the measured throughput, jitter, and loss
counters for that second. The trace generator reproduces three measurement
scenarios over a straight track served by one base station: a static point, a
constant-speed run, and a stepped variable-speed run. Link quality enters
only through a distance-to-rate map; the vehicle position is integrated each
second, the per-second rate feeds a single FCFS queue under a constant
offered load, and each second's deliveries are summarized into one row.

The queue carries its state across seconds, so a rate drop builds a backlog
whose drain is exactly the jitter mechanism visible in the logs. Internally
each packet carries an exponential unit-mean amount of work and the link
drains work at the current rate; mapping arrivals into cumulative-work
coordinates turns the varying-rate queue into the constant-rate FCFS engine,
and reduces to it exactly when the rate is constant. Seconds with zero rate
are outages: every packet arriving in one is dropped (no signal), while
packets already queued simply wait.

All defaults here (the rate map anchors, the speed schedule, the offered load
and buffer) are synthetic calibrations, chosen to be plausible for a short
suburban radio link; they are configurable through the scenario file.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, EmptyTraceError, TraceParseError
from .sim import DEFAULT_SEED, fcfs_departures

LOG_HEADER = "t_unix_s,lat_deg,lon_deg,integrity,dist_m,speed_kmh,tput_Bps,jitter_ms,lost_pkts,total_pkts"

KIND_STATIC = "static"
KIND_CONSTANT_SPEED = "constant_speed"
KIND_VARIABLE_SPEED = "variable_speed"
_KINDS = (KIND_STATIC, KIND_CONSTANT_SPEED, KIND_VARIABLE_SPEED)

_METERS_PER_DEGREE = 111_320.0


@dataclass(frozen=True)
class QosLogRow:
    """One per-second sample of a measurement log."""

    t_unix_s: int
    lat_deg: float
    lon_deg: float
    integrity: int
    dist_m: float
    speed_kmh: float
    tput_Bps: float
    jitter_ms: float
    lost_pkts: int
    total_pkts: int

    def __post_init__(self):
        if not isinstance(self.t_unix_s, int):
            raise DomainError(f"timestamp must be an integer second, got {self.t_unix_s!r}")
        if not (isinstance(self.integrity, int) and self.integrity >= 0):
            raise DomainError(f"integrity level must be a small non-negative int, got {self.integrity!r}")
        for name in ("lat_deg", "lon_deg", "dist_m", "speed_kmh", "tput_Bps", "jitter_ms"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise DomainError(f"{name} must be finite, got {v!r}")
        for name in ("dist_m", "speed_kmh", "tput_Bps", "jitter_ms"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if not (isinstance(self.lost_pkts, int) and isinstance(self.total_pkts, int)):
            raise DomainError("packet counters must be integers")
        if self.lost_pkts < 0 or self.total_pkts < 0:
            raise DomainError("packet counters must be non-negative")
        if self.lost_pkts > self.total_pkts:
            raise DomainError(
                f"lost_pkts {self.lost_pkts} exceeds total_pkts {self.total_pkts}"
            )


def _fmt9(value: float) -> str:
    return f"{value:.9g}"


def write_log(rows: Iterable[QosLogRow]) -> bytes:
    """Serialize rows to the canonical CSV: fixed column order, floats with up
    to 9 significant digits, Unix newlines. Inverse of parse_log."""
    rows = list(rows)
    out = [LOG_HEADER]
    prev_t = None
    for i, row in enumerate(rows):
        if not isinstance(row, QosLogRow):
            raise DomainError(f"rows[{i}] is not a QosLogRow")
        if prev_t is not None and row.t_unix_s <= prev_t:
            raise DomainError(
                f"rows[{i}]: timestamp {row.t_unix_s} does not increase over {prev_t}"
            )
        prev_t = row.t_unix_s
        out.append(
            ",".join(
                (
                    str(row.t_unix_s),
                    _fmt9(row.lat_deg),
                    _fmt9(row.lon_deg),
                    str(row.integrity),
                    _fmt9(row.dist_m),
                    _fmt9(row.speed_kmh),
                    _fmt9(row.tput_Bps),
                    _fmt9(row.jitter_ms),
                    str(row.lost_pkts),
                    str(row.total_pkts),
                )
            )
        )
    return ("\n".join(out) + "\n").encode("utf-8")


def _parse_int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{what} is not an integer: {text!r}") from None


def _parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{what} is not a number: {text!r}") from None


def parse_log(data: bytes | str) -> list[QosLogRow]:
    """Parse and validate a canonical log. Rejections name the 1-based line."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines:
        raise TraceParseError(1, "empty file, expected the canonical header")
    if lines[0] != LOG_HEADER:
        raise TraceParseError(1, f"unexpected header {lines[0]!r}")
    rows: list[QosLogRow] = []
    prev_t = None
    for line_no, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise TraceParseError(line_no, f"expected 10 fields, got {len(parts)}")
        try:
            row = QosLogRow(
                t_unix_s=_parse_int(parts[0], "t_unix_s"),
                lat_deg=_parse_float(parts[1], "lat_deg"),
                lon_deg=_parse_float(parts[2], "lon_deg"),
                integrity=_parse_int(parts[3], "integrity"),
                dist_m=_parse_float(parts[4], "dist_m"),
                speed_kmh=_parse_float(parts[5], "speed_kmh"),
                tput_Bps=_parse_float(parts[6], "tput_Bps"),
                jitter_ms=_parse_float(parts[7], "jitter_ms"),
                lost_pkts=_parse_int(parts[8], "lost_pkts"),
                total_pkts=_parse_int(parts[9], "total_pkts"),
            )
        except (DomainError, ValueError) as exc:
            raise TraceParseError(line_no, str(exc)) from None
        if prev_t is not None and row.t_unix_s <= prev_t:
            raise TraceParseError(
                line_no, f"timestamp {row.t_unix_s} does not increase over {prev_t}"
            )
        prev_t = row.t_unix_s
        rows.append(row)
    return rows


@dataclass(frozen=True)
class RateDistanceMap:
    """Distance-to-deliverable-rate calibration.

    Anchor rates must be non-increasing with distance; masked intervals force
    the rate to zero regardless of the anchors (shadowed areas with no
    signal), and so does any distance beyond the last anchor.
    """

    anchors: tuple[tuple[float, float], ...]
    interpolation: str = "linear"
    mask_zones: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.anchors:
            raise DomainError("a rate map needs at least one anchor")
        prev_d = -math.inf
        prev_r = math.inf
        for d, r in self.anchors:
            if d <= prev_d:
                raise DomainError("anchor distances must be strictly increasing")
            if r < 0:
                raise DomainError(f"anchor rates must be non-negative, got {r!r}")
            if r > prev_r:
                raise DomainError("anchor rates must be non-increasing with distance")
            prev_d, prev_r = d, r
        if self.interpolation not in ("step", "linear"):
            raise DomainError(f"interpolation must be 'step' or 'linear', got {self.interpolation!r}")
        for lo, hi in self.mask_zones:
            if not (0 <= lo < hi):
                raise DomainError(f"mask zone ({lo!r}, {hi!r}) is not a valid interval")


def default_rate_map() -> RateDistanceMap:
    """Synthetic default calibration: about 1 MB/s up close, under a quarter
    of that at the far end of the track, fading to nothing past 2 km."""
    return RateDistanceMap(
        anchors=(
            (540.0, 1_000_000.0),
            (800.0, 820_000.0),
            (1200.0, 450_000.0),
            (1570.0, 230_000.0),
            (2000.0, 0.0),
        ),
        interpolation="linear",
    )


def rate_at_distance(rate_map: RateDistanceMap, dist_m: float) -> float:
    """Deliverable rate at a distance: 0 in mask zones and beyond the last
    anchor, clamped to the first anchor up close, interpolated between."""
    if not (dist_m >= 0 and math.isfinite(dist_m)):
        raise DomainError(f"distance must be non-negative, got {dist_m!r}")
    for lo, hi in rate_map.mask_zones:
        if lo <= dist_m <= hi:
            return 0.0
    anchors = rate_map.anchors
    if dist_m > anchors[-1][0]:
        return 0.0
    if dist_m <= anchors[0][0]:
        return anchors[0][1]
    distances = [a[0] for a in anchors]
    i = bisect_right(distances, dist_m) - 1
    d0, r0 = anchors[i]
    if rate_map.interpolation == "step" or dist_m == d0:
        return r0
    d1, r1 = anchors[i + 1]
    return r0 + (r1 - r0) * (dist_m - d0) / (d1 - d0)


def speed_at(profile, t_s: float) -> float:
    """Piecewise-constant speed lookup: the last step at or before t applies."""
    steps = list(profile)
    if not steps:
        raise DomainError("speed profile must not be empty")
    starts = [s[0] for s in steps]
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise DomainError("speed profile steps must be strictly time-ordered")
    if t_s < starts[0]:
        raise DomainError(f"t={t_s!r} is before the first profile step at {starts[0]!r}")
    return steps[bisect_right(starts, t_s) - 1][1]


#: Stepped speed schedule cycled by the default variable-speed scenario.
DEFAULT_SPEED_CYCLE_KMH = (10.0, 20.0, 30.0, 40.0, 50.0, 40.0, 30.0, 20.0)


def default_speed_profile(duration_s: int, step_s: float = 60.0) -> tuple[tuple[float, float], ...]:
    """60-second steps cycling 10 - 20 - 30 - 40 - 50 - 40 - ... km/h."""
    steps = []
    t = 0.0
    k = 0
    while t < duration_s:
        steps.append((t, DEFAULT_SPEED_CYCLE_KMH[k % len(DEFAULT_SPEED_CYCLE_KMH)]))
        t += step_s
        k += 1
    return tuple(steps) if steps else ((0.0, DEFAULT_SPEED_CYCLE_KMH[0]),)


@dataclass(frozen=True)
class MobilityScenario:
    """A synthetic measurement drive: geometry, motion, link map, traffic."""

    kind: str
    duration_s: int
    seed: int = DEFAULT_SEED
    static_dist_m: float = 1570.0
    speed_kmh: float = 50.0
    speed_profile: tuple[tuple[float, float], ...] | None = None
    track_min_m: float = 540.0
    track_max_m: float = 1570.0
    start_dist_m: float | None = None
    rate_map: RateDistanceMap = field(default_factory=default_rate_map)
    offered_Bps: float = 1_200_000.0
    packet_size_B: int = 1000
    buffer_pkts: int = 100
    t0_unix_s: int = 1_700_000_000
    base_lat_deg: float = 0.0
    base_lon_deg: float = 0.0
    track_bearing_deg: float = 90.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not (isinstance(self.duration_s, int) and self.duration_s >= 0):
            raise DomainError(f"duration must be a non-negative integer, got {self.duration_s!r}")
        if not (0 < self.track_min_m < self.track_max_m):
            raise DomainError(
                f"track bounds must satisfy 0 < min < max, got ({self.track_min_m!r}, {self.track_max_m!r})"
            )
        if self.static_dist_m < 0:
            raise DomainError(f"static distance must be non-negative, got {self.static_dist_m!r}")
        if self.speed_kmh < 0:
            raise DomainError(f"speed must be non-negative, got {self.speed_kmh!r}")
        if not (self.offered_Bps > 0 and math.isfinite(self.offered_Bps)):
            raise DomainError(f"offered rate must be positive, got {self.offered_Bps!r}")
        if not (isinstance(self.packet_size_B, int) and self.packet_size_B >= 1):
            raise DomainError(f"packet size must be a positive byte count, got {self.packet_size_B!r}")
        if not (isinstance(self.buffer_pkts, int) and self.buffer_pkts >= 1):
            raise DomainError(f"buffer must be a positive packet count, got {self.buffer_pkts!r}")
        if self.start_dist_m is None:
            object.__setattr__(self, "start_dist_m", self.track_min_m)
        if not (self.track_min_m <= self.start_dist_m <= self.track_max_m):
            raise DomainError(
                f"start distance {self.start_dist_m!r} is outside the track bounds"
            )
        if self.kind == KIND_VARIABLE_SPEED and self.speed_profile is None:
            object.__setattr__(self, "speed_profile", default_speed_profile(self.duration_s))
        if self.speed_profile is not None:
            for _, v in self.speed_profile:
                if v < 0:
                    raise DomainError(f"profile speeds must be non-negative, got {v!r}")

    @classmethod
    def static(cls, dist_m: float, duration_s: int, **kwargs) -> "MobilityScenario":
        return cls(kind=KIND_STATIC, duration_s=duration_s, static_dist_m=dist_m, **kwargs)

    @classmethod
    def constant_speed(cls, speed_kmh: float, duration_s: int, **kwargs) -> "MobilityScenario":
        return cls(kind=KIND_CONSTANT_SPEED, duration_s=duration_s, speed_kmh=speed_kmh, **kwargs)

    @classmethod
    def variable_speed(cls, duration_s: int, **kwargs) -> "MobilityScenario":
        return cls(kind=KIND_VARIABLE_SPEED, duration_s=duration_s, **kwargs)


def _per_second_kinematics(scenario: MobilityScenario):
    """Speed and track position at the start of every second.

    Positions fold the accumulated path length onto the track with a triangle
    wave, which is the reflecting round-trip motion between the bounds.
    """
    d = scenario.duration_s
    if scenario.kind == KIND_STATIC:
        speeds = np.zeros(d)
        positions = np.full(d, scenario.static_dist_m)
        return speeds, positions
    if scenario.kind == KIND_CONSTANT_SPEED:
        profile = ((0.0, scenario.speed_kmh),)
    else:
        profile = scenario.speed_profile
    speeds = np.array([speed_at(profile, float(k)) for k in range(d)])
    increments = speeds / 3.6  # km/h -> m per one-second step
    path = np.concatenate(([0.0], np.cumsum(increments)))[:d]
    span = scenario.track_max_m - scenario.track_min_m
    phase = (scenario.start_dist_m - scenario.track_min_m + path) % (2.0 * span)
    positions = scenario.track_min_m + span - np.abs(span - phase)
    return speeds, positions


def _poisson_arrivals(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    """Arrival instants of a Poisson process on [0, horizon).

    Draws interarrival blocks until the horizon is covered (deterministic for
    a given generator state), then truncates.
    """
    block = int(rate * horizon + 6.0 * math.sqrt(rate * horizon) + 16.0)
    times = np.cumsum(rng.exponential(1.0 / rate, size=block))
    while times.size == 0 or times[-1] < horizon:
        more = np.cumsum(rng.exponential(1.0 / rate, size=block)) + (
            times[-1] if times.size else 0.0
        )
        times = np.concatenate((times, more))
    return times[times < horizon]


def synth_mobility_trace(scenario: MobilityScenario) -> list[QosLogRow]:
    """Generate one canonical log row per second of the scenario.

    Deterministic for a given scenario (including its seed). Packets still
    queued when the trace ends are neither delivered nor lost.
    """
    d = scenario.duration_s
    if d == 0:
        raise EmptyTraceError("zero-duration scenario produces no rows")
    speeds, positions = _per_second_kinematics(scenario)
    rates_Bps = np.array([rate_at_distance(scenario.rate_map, p) for p in positions])
    rates_pkts = rates_Bps / scenario.packet_size_B

    rng = np.random.default_rng(scenario.seed)
    lam = scenario.offered_Bps / scenario.packet_size_B
    arrivals = _poisson_arrivals(rng, lam, float(d))
    work = rng.exponential(1.0, size=arrivals.size)

    sec = np.floor(arrivals).astype(np.int64)
    outage = rates_pkts[sec] == 0.0

    # Work coordinate: breaks[k] is the work the link can have drained by the
    # start of second k; within a second the mapping is linear at that
    # second's rate. In this coordinate the varying-rate queue is the plain
    # unit-rate FCFS queue.
    breaks = np.concatenate(([0.0], np.cumsum(rates_pkts)))
    live = ~outage
    a_t = arrivals[live]
    a_sec = sec[live]
    a_w = breaks[a_sec] + rates_pkts[a_sec] * (a_t - a_sec)
    dep_w, dropped_q = fcfs_departures(a_w, work[live], scenario.buffer_pkts)

    delivered_mask = ~dropped_q
    dep_w_del = dep_w[delivered_mask]
    in_horizon = dep_w_del <= breaks[-1]
    dep_w_del = dep_w_del[in_horizon]
    seg = np.searchsorted(breaks, dep_w_del, side="left") - 1
    dep_t = seg + (dep_w_del - breaks[seg]) / rates_pkts[seg]
    sojourns = dep_t - a_t[delivered_mask][in_horizon]
    dep_sec = np.floor(dep_t).astype(np.int64)
    dep_sec = np.minimum(dep_sec, d - 1)  # departures at the exact horizon edge

    total_per_sec = np.bincount(sec, minlength=d)
    lost_outage = np.bincount(sec[outage], minlength=d)
    lost_queue = np.bincount(a_sec[dropped_q], minlength=d)
    lost_per_sec = lost_outage + lost_queue
    delivered_per_sec = np.bincount(dep_sec, minlength=d)

    bounds = np.searchsorted(dep_sec, np.arange(d + 1))
    rows = []
    theta = math.radians(scenario.track_bearing_deg)
    coslat = math.cos(math.radians(scenario.base_lat_deg))
    for k in range(d):
        chunk = sojourns[bounds[k]:bounds[k + 1]]
        if chunk.size >= 2:
            jitter_ms = float(np.abs(np.diff(chunk)).mean()) * 1000.0
        else:
            jitter_ms = 0.0
        dist = float(positions[k])
        rows.append(
            QosLogRow(
                t_unix_s=scenario.t0_unix_s + k,
                lat_deg=scenario.base_lat_deg + dist * math.cos(theta) / _METERS_PER_DEGREE,
                lon_deg=scenario.base_lon_deg + dist * math.sin(theta) / (_METERS_PER_DEGREE * coslat),
                integrity=1,
                dist_m=dist,
                speed_kmh=float(speeds[k]),
                tput_Bps=float(delivered_per_sec[k] * scenario.packet_size_B),
                jitter_ms=jitter_ms,
                lost_pkts=int(lost_per_sec[k]),
                total_pkts=int(total_per_sec[k]),
            )
        )
    return rows


# --- scenario files -------------------------------------------------------
#
# Flat "key = value" text, one key per line, '#' starts a comment. Keys
# mirror the MobilityScenario fields:
#
#   kind                static | constant_speed | variable_speed  (required)
#   duration_s          integer seconds                           (required)
#   seed                integer
#   static_dist_m       meters (static kind)
#   speed_kmh           km/h (constant_speed kind)
#   speed_profile       "start:speed, start:speed, ..." (variable_speed kind)
#   track_min_m / track_max_m / start_dist_m    meters
#   rate_anchors        "dist:rate_Bps, dist:rate_Bps, ..."
#   rate_interpolation  step | linear
#   mask_zones          "lo-hi; lo-hi; ..." meters, may be empty
#   offered_Bps / packet_size_B / buffer_pkts   traffic source
#   t0_unix_s / base_lat_deg / base_lon_deg / track_bearing_deg

def _parse_pairs(text: str, what: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = item.split(":")
            pairs.append((float(a), float(b)))
        except ValueError:
            raise DomainError(f"cannot parse {what} entry {item!r}, expected 'a:b'") from None
    if not pairs:
        raise DomainError(f"{what} must contain at least one 'a:b' pair")
    return tuple(pairs)


def _parse_zones(text: str) -> tuple[tuple[float, float], ...]:
    zones = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = item.split("-")
            zones.append((float(a), float(b)))
        except ValueError:
            raise DomainError(f"cannot parse mask zone {item!r}, expected 'lo-hi'") from None
    return tuple(zones)


def parse_scenario(text: str) -> MobilityScenario:
    """Parse the flat key/value scenario format documented above."""
    raw: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"scenario line {line_no}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise DomainError(f"scenario line {line_no}: duplicate key {key!r}")
        raw[key] = value

    if "kind" not in raw or "duration_s" not in raw:
        raise DomainError("a scenario needs at least 'kind' and 'duration_s'")

    kwargs: dict = {"kind": raw.pop("kind"), "duration_s": int(raw.pop("duration_s"))}
    converters = {
        "seed": int,
        "static_dist_m": float,
        "speed_kmh": float,
        "track_min_m": float,
        "track_max_m": float,
        "start_dist_m": float,
        "offered_Bps": float,
        "packet_size_B": int,
        "buffer_pkts": int,
        "t0_unix_s": int,
        "base_lat_deg": float,
        "base_lon_deg": float,
        "track_bearing_deg": float,
    }
    map_kwargs: dict = {}
    for key, value in raw.items():
        if key in converters:
            try:
                kwargs[key] = converters[key](value)
            except ValueError:
                raise DomainError(f"scenario key {key!r}: cannot parse {value!r}") from None
        elif key == "speed_profile":
            kwargs["speed_profile"] = _parse_pairs(value, "speed_profile")
        elif key == "rate_anchors":
            map_kwargs["anchors"] = _parse_pairs(value, "rate_anchors")
        elif key == "rate_interpolation":
            map_kwargs["interpolation"] = value
        elif key == "mask_zones":
            map_kwargs["mask_zones"] = _parse_zones(value)
        else:
            raise DomainError(f"unknown scenario key {key!r}")
    if map_kwargs:
        base = default_rate_map()
        kwargs["rate_map"] = RateDistanceMap(
            anchors=map_kwargs.get("anchors", base.anchors),
            interpolation=map_kwargs.get("interpolation", base.interpolation),
            mask_zones=map_kwargs.get("mask_zones", ()),
        )
    return MobilityScenario(**kwargs)


def load_scenario(path) -> MobilityScenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
