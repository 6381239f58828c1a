"""Conservative lower-bound model of ad-library data transmission.

One leak event per (ad library, app, day) when the app was run that day
and the library can exercise at least one permission in that app. Daily
rates divide by observed usage days per device unless calendar-day
denominators are requested.
"""

from dataclasses import dataclass

from .errors import NoUsageData


@dataclass(frozen=True)
class LeakEvent:
    device_id: str
    day: int
    app_id: str
    library_id: str
    network_id: str


@dataclass(frozen=True)
class DeviceLeakage:
    device_id: str
    observed_days: int
    event_count: int
    leaks_per_day: float
    networks_per_day: float


@dataclass(frozen=True)
class LeakageSummary:
    mean_leaks_per_device_day: float
    mean_distinct_networks_per_device_day: float
    max_leaks_any_device_day: int
    per_device: tuple  # DeviceLeakage rows, sorted by device_id
    # Variant restricted to devices with >= 1 leak event (the aggregation
    # universe is ambiguous; both readings are reported).
    mean_leaks_per_exposed_device_day: float = 0.0
    mean_networks_per_exposed_device_day: float = 0.0


def daily_leak_events(device, corpus, catalog, skip_counter=None) -> list:
    """Leak events for one device, sorted by (day, app, library)."""
    events = []
    for day, app_id in sorted(device.usage):
        analysis = corpus.get(app_id)
        if analysis is None:
            if skip_counter is not None:
                skip_counter.append(app_id)
            continue
        for library_id in sorted(analysis.libraries_present):
            if not catalog.is_ad_library(library_id):
                continue
            if not analysis.library_perms.get(library_id):
                continue
            events.append(LeakEvent(device.device_id, day, app_id, library_id,
                                    catalog.network_for(library_id)))
    return events


def _device_days(device, calendar_days: bool) -> int:
    days = {day for day, _ in device.usage}
    if not days:
        return 0
    if calendar_days:
        return max(days) - min(days) + 1
    return len(days)


def summarize_leakage(population, corpus, catalog,
                      calendar_days: bool = False) -> LeakageSummary:
    """Population means of leaks/day and distinct ad networks/day."""
    per_device = []
    max_per_day = 0
    for device in sorted(population, key=lambda d: d.device_id):
        denominator = _device_days(device, calendar_days)
        if denominator == 0:
            continue
        events = daily_leak_events(device, corpus, catalog)
        networks_by_day = {}
        counts_by_day = {}
        for event in events:
            networks_by_day.setdefault(event.day, set()).add(event.network_id)
            counts_by_day[event.day] = counts_by_day.get(event.day, 0) + 1
        if counts_by_day:
            max_per_day = max(max_per_day, max(counts_by_day.values()))
        # Days with usage but no events contribute 0 distinct networks.
        networks_per_day = sum(len(n) for n in networks_by_day.values()) / denominator
        per_device.append(DeviceLeakage(
            device_id=device.device_id,
            observed_days=denominator,
            event_count=len(events),
            leaks_per_day=len(events) / denominator,
            networks_per_day=networks_per_day,
        ))

    if not per_device:
        raise NoUsageData("no device has any usage days")

    def mean(rows, attr):
        return sum(getattr(row, attr) for row in rows) / len(rows) if rows else 0.0

    exposed = [row for row in per_device if row.event_count > 0]
    return LeakageSummary(
        mean_leaks_per_device_day=mean(per_device, "leaks_per_day"),
        mean_distinct_networks_per_device_day=mean(per_device, "networks_per_day"),
        max_leaks_any_device_day=max_per_day,
        per_device=tuple(per_device),
        mean_leaks_per_exposed_device_day=mean(exposed, "leaks_per_day"),
        mean_networks_per_exposed_device_day=mean(exposed, "networks_per_day"),
    )
