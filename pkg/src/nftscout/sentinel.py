"""Longitudinal monitoring: blocklist coverage, takedown times, detections.

Simulation is first-class: scripted providers answer polls from fixture
files and a virtual clock advances poll-by-poll, so a "week at 10-minute
polls" runs in milliseconds. Poll grids are anchored at each target's
first_seen; a listing that happens between grid points is observed at the
next poll. Blocklist pairs stop polling once listed; liveness pairs stop
after two consecutive inactive polls (single-poll blips are not deaths).

Provider fixture CSV header:
    url,provider,listed_after_minutes,count_series,inactive_after_minutes
Exactly one of the last three columns is set per row and decides the
provider kind. listed_after_minutes accepts an integer, "never", or
"error" (provider errors at every poll); count_series is a
semicolon-separated list indexed by poll number (last value repeats);
inactive_after_minutes accepts an integer or "never".
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from . import stats
from .timefmt import parse_rfc3339, to_rfc3339

COHORTS = ("nft", "regular")


class MonitorError(ValueError):
    pass


@dataclass(frozen=True)
class MonitorTarget:
    url: str
    first_seen: datetime  # t0 for every speed measurement
    cohort: str

    def __post_init__(self):
        if self.cohort not in COHORTS:
            raise MonitorError(f"unknown cohort: {self.cohort!r}")


@dataclass(frozen=True)
class PollSample:
    url: str
    provider: str
    polled_at: datetime
    kind: str  # blocklist | detection | liveness
    outcome: str | None = None  # listed | unlisted | error
    detection_count: int | None = None
    liveness: str | None = None  # active | inactive


class MonitorLog:
    """Append-only sample log plus the monitored-target index."""

    def __init__(self, targets):
        self.targets: dict[str, MonitorTarget] = {t.url: t for t in targets}
        self._samples: list[PollSample] = []
        self._last_poll: dict[tuple[str, str], datetime] = {}

    def append(self, sample: PollSample) -> None:
        key = (sample.url, sample.provider)
        last = self._last_poll.get(key)
        if last is not None and sample.polled_at < last:
            raise MonitorError(
                f"non-monotone polled_at for {key}: {sample.polled_at} < {last}"
            )
        self._last_poll[key] = sample.polled_at
        self._samples.append(sample)

    def sorted_samples(self) -> list[PollSample]:
        return sorted(
            self._samples, key=lambda s: (s.polled_at, s.provider, s.url)
        )

    def pair_samples(self, url: str, provider: str) -> list[PollSample]:
        return sorted(
            (s for s in self._samples if s.url == url and s.provider == provider),
            key=lambda s: s.polled_at,
        )

    def __len__(self) -> int:
        return len(self._samples)


# ---------------------------------------------------------------- providers


class ScriptedBlocklistProvider:
    kind = "blocklist"

    def __init__(self, provider_id: str):
        self.provider_id = provider_id
        self._listed_after: dict[str, float | None | str] = {}

    def script(self, url: str, listed_after_minutes):
        self._listed_after[url] = listed_after_minutes

    def poll(self, url: str, minutes: float) -> str:
        behavior = self._listed_after.get(url)
        if behavior == "error":
            return "error"
        if behavior is None or behavior == "never":
            return "unlisted"
        return "listed" if minutes >= float(behavior) else "unlisted"


class ScriptedDetectionProvider:
    kind = "detection"

    def __init__(self, provider_id: str):
        self.provider_id = provider_id
        self._series: dict[str, list[int]] = {}

    def script(self, url: str, counts: list[int]):
        if not counts:
            raise MonitorError(f"{self.provider_id}: empty count series for {url}")
        self._series[url] = counts

    def poll(self, url: str, poll_index: int) -> int:
        series = self._series.get(url, [0])
        return series[min(poll_index - 1, len(series) - 1)]


class ScriptedLivenessProvider:
    kind = "liveness"

    def __init__(self, provider_id: str):
        self.provider_id = provider_id
        self._dead_after: dict[str, float | None] = {}

    def script(self, url: str, inactive_after_minutes):
        self._dead_after[url] = inactive_after_minutes

    def poll(self, url: str, minutes: float) -> str:
        dead = self._dead_after.get(url)
        if dead is None or dead == "never":
            return "active"
        return "inactive" if minutes >= float(dead) else "active"


def load_provider_fixtures(path: str | Path) -> dict[str, object]:
    """Load scripted providers from one CSV file or a directory of them."""
    path = Path(path)
    files = sorted(path.glob("*.csv")) if path.is_dir() else [path]
    providers: dict[str, object] = {}
    for file in files:
        with file.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                url = row["url"].strip()
                pid = row["provider"].strip()
                listed = (row.get("listed_after_minutes") or "").strip()
                series = (row.get("count_series") or "").strip()
                dead = (row.get("inactive_after_minutes") or "").strip()
                set_fields = [bool(listed), bool(series), bool(dead)]
                if sum(set_fields) != 1:
                    raise MonitorError(
                        f"{file}: row for {url}/{pid} must set exactly one "
                        "behavior column"
                    )
                if listed:
                    prov = providers.setdefault(pid, ScriptedBlocklistProvider(pid))
                    if prov.kind != "blocklist":
                        raise MonitorError(f"{pid}: mixed provider kinds in fixtures")
                    prov.script(url, listed if listed in ("never", "error") else float(listed))
                elif series:
                    prov = providers.setdefault(pid, ScriptedDetectionProvider(pid))
                    if prov.kind != "detection":
                        raise MonitorError(f"{pid}: mixed provider kinds in fixtures")
                    prov.script(url, [int(x) for x in series.split(";")])
                else:
                    prov = providers.setdefault(pid, ScriptedLivenessProvider(pid))
                    if prov.kind != "liveness":
                        raise MonitorError(f"{pid}: mixed provider kinds in fixtures")
                    prov.script(url, dead if dead == "never" else float(dead))
    return providers


# ------------------------------------------------------------------ monitor


def run_monitor(
    targets,
    providers,
    interval_minutes: float,
    horizon_minutes: float,
) -> MonitorLog:
    """Simulate polling every (target, provider) pair on the virtual clock.

    Each pair is sampled at interval, 2*interval, ... up to the horizon or
    its terminal state: a blocklist listing, or a death confirmed by two
    consecutive inactive liveness polls. Provider errors are recorded as
    samples and never abort the run.
    """
    if interval_minutes <= 0:
        raise MonitorError("interval must be positive")
    if horizon_minutes < interval_minutes:
        raise MonitorError("horizon must be at least one interval")
    log = MonitorLog(targets)
    provider_list = list(providers.values()) if isinstance(providers, dict) else list(providers)
    n_polls = int(horizon_minutes // interval_minutes)

    for target in log.targets.values():
        for provider in provider_list:
            prev_inactive = False
            for i in range(1, n_polls + 1):
                minutes = i * interval_minutes
                at = target.first_seen + timedelta(minutes=minutes)
                if provider.kind == "blocklist":
                    outcome = provider.poll(target.url, minutes)
                    log.append(PollSample(
                        url=target.url, provider=provider.provider_id,
                        polled_at=at, kind="blocklist", outcome=outcome,
                    ))
                    if outcome == "listed":
                        break
                elif provider.kind == "detection":
                    count = provider.poll(target.url, i)
                    log.append(PollSample(
                        url=target.url, provider=provider.provider_id,
                        polled_at=at, kind="detection", detection_count=count,
                    ))
                else:
                    state = provider.poll(target.url, minutes)
                    log.append(PollSample(
                        url=target.url, provider=provider.provider_id,
                        polled_at=at, kind="liveness", liveness=state,
                    ))
                    if state == "inactive" and prev_inactive:
                        break
                    prev_inactive = state == "inactive"
    return log


# ------------------------------------------------------------------ reports


@dataclass(frozen=True)
class CoverageReport:
    provider: str
    cohort: str
    coverage_fraction: float
    median_speed: timedelta | None  # None when nothing was detected
    n_detected: int
    n_total: int


def _detection_time(log: MonitorLog, url: str, provider: str) -> timedelta | None:
    for sample in log.pair_samples(url, provider):
        if sample.outcome == "listed":
            return sample.polled_at - log.targets[url].first_seen
    return None


def coverage_stats(log: MonitorLog, provider: str, cohort: str) -> CoverageReport:
    """Coverage fraction and median detection speed for one provider/cohort.

    Undetected targets count in the denominator but are excluded from the
    median.
    """
    cohort_targets = [t for t in log.targets.values() if t.cohort == cohort]
    if not cohort_targets:
        raise MonitorError(f"no targets in cohort {cohort!r}")
    speeds = []
    for target in cohort_targets:
        speed = _detection_time(log, target.url, provider)
        if speed is not None:
            speeds.append(speed)
    median = None
    if speeds:
        median = timedelta(
            minutes=stats.median([s.total_seconds() / 60.0 for s in speeds])
        )
    return CoverageReport(
        provider=provider,
        cohort=cohort,
        coverage_fraction=len(speeds) / len(cohort_targets),
        median_speed=median,
        n_detected=len(speeds),
        n_total=len(cohort_targets),
    )


def coverage_timeseries(log: MonitorLog, provider: str, cohort: str):
    """(minutes, cumulative coverage fraction) points for one provider."""
    cohort_targets = [t for t in log.targets.values() if t.cohort == cohort]
    if not cohort_targets:
        raise MonitorError(f"no targets in cohort {cohort!r}")
    times = sorted(
        t.total_seconds() / 60.0
        for t in (
            _detection_time(log, target.url, provider) for target in cohort_targets
        )
        if t is not None
    )
    n = len(cohort_targets)
    return [(m, (i + 1) / n) for i, m in enumerate(times)]


@dataclass(frozen=True)
class TakedownSummary:
    times: dict  # url -> timedelta, censored targets omitted
    censored: tuple[str, ...]  # still active through the horizon
    quartiles_hours: tuple[float, float, float] | None  # (q1, median, q3)


def takedown_stats(log: MonitorLog) -> TakedownSummary:
    """Per-target inactivity time, anchored at the first poll of the
    confirming inactive pair, plus a linear-interpolation quartile summary."""
    times: dict[str, timedelta] = {}
    censored: list[str] = []
    liveness_providers = sorted(
        {s.provider for s in log.sorted_samples() if s.kind == "liveness"}
    )
    for url, target in sorted(log.targets.items()):
        best: timedelta | None = None
        saw_liveness = False
        for provider in liveness_providers:
            samples = [
                s for s in log.pair_samples(url, provider) if s.kind == "liveness"
            ]
            if samples:
                saw_liveness = True
            for a, b in zip(samples, samples[1:]):
                if a.liveness == "inactive" and b.liveness == "inactive":
                    dt = a.polled_at - target.first_seen
                    if best is None or dt < best:
                        best = dt
                    break
        if best is not None:
            times[url] = best
        elif saw_liveness:
            censored.append(url)
    quartiles = None
    if times:
        hours = [t.total_seconds() / 3600.0 for t in times.values()]
        quartiles = (
            stats.quantile(hours, 0.25),
            stats.quantile(hours, 0.5),
            stats.quantile(hours, 0.75),
        )
    return TakedownSummary(
        times=times, censored=tuple(censored), quartiles_hours=quartiles
    )


def detection_histogram(log: MonitorLog, providers) -> dict[int, int]:
    """Histogram of each target's maximum observed detection count."""
    if isinstance(providers, str):
        providers = {providers}
    providers = set(providers)
    maxima: dict[str, int] = {}
    for sample in log.sorted_samples():
        if sample.kind != "detection" or sample.provider not in providers:
            continue
        held = maxima.get(sample.url)
        if held is None or sample.detection_count > held:
            maxima[sample.url] = sample.detection_count
    histogram: dict[int, int] = {}
    for count in maxima.values():
        histogram[count] = histogram.get(count, 0) + 1
    return dict(sorted(histogram.items()))


# ----------------------------------------------------------------- file io


def write_targets(path: str | Path, targets) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in targets:
            fh.write(json.dumps({
                "url": t.url,
                "first_seen": to_rfc3339(t.first_seen),
                "cohort": t.cohort,
            }, sort_keys=True) + "\n")


def read_targets(path: str | Path) -> list[MonitorTarget]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out.append(MonitorTarget(
                    url=obj["url"],
                    first_seen=parse_rfc3339(obj["first_seen"]),
                    cohort=obj["cohort"],
                ))
    return out


def write_log(path: str | Path, log: MonitorLog) -> None:
    """Event log as NDJSON, one PollSample per line, in read order."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for s in log.sorted_samples():
            record = {
                "url": s.url,
                "provider": s.provider,
                "polled_at": to_rfc3339(s.polled_at),
                "kind": s.kind,
            }
            if s.outcome is not None:
                record["outcome"] = s.outcome
            if s.detection_count is not None:
                record["detection_count"] = s.detection_count
            if s.liveness is not None:
                record["liveness"] = s.liveness
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_log(path: str | Path, targets) -> MonitorLog:
    log = MonitorLog(targets)
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            log.append(PollSample(
                url=obj["url"],
                provider=obj["provider"],
                polled_at=parse_rfc3339(obj["polled_at"]),
                kind=obj["kind"],
                outcome=obj.get("outcome"),
                detection_count=obj.get("detection_count"),
                liveness=obj.get("liveness"),
            ))
    return log


__all__ = [
    "COHORTS",
    "CoverageReport",
    "MonitorError",
    "MonitorLog",
    "MonitorTarget",
    "PollSample",
    "ScriptedBlocklistProvider",
    "ScriptedDetectionProvider",
    "ScriptedLivenessProvider",
    "TakedownSummary",
    "coverage_stats",
    "coverage_timeseries",
    "detection_histogram",
    "load_provider_fixtures",
    "read_log",
    "read_targets",
    "run_monitor",
    "takedown_stats",
    "write_log",
    "write_targets",
]
