"""Two-snapshot comparison of collusion potential over a fixed device set.

Both snapshots are restricted to their common app_ids before any metric is
computed, so differences reflect app evolution rather than corpus churn.
"""

from dataclasses import dataclass

from . import engine
from .errors import EmptyIntersection, NoBenefitingFindings

# Sentinel emitted for pct_change when the old share is zero.
UNDEFINED = "undefined"

DIFF_ADDITIONAL_BUCKETS = ("1", "2+")


@dataclass(frozen=True)
class CorpusSnapshot:
    label: str
    analyses: dict  # app_id -> AppAnalysis


@dataclass(frozen=True)
class ReportRow:
    bucket: str
    old_share: float
    new_share: float
    pct_change: float | None  # None when old_share == 0


@dataclass(frozen=True)
class LongitudinalReport:
    old_label: str
    new_label: str
    common_app_count: int
    rows: tuple


def percent_change(old: float, new: float) -> float | None:
    """(new - old) / old * 100; None on a zero baseline."""
    if old == 0:
        return None
    return (new - old) / old * 100.0


def align_snapshots(old: CorpusSnapshot, new: CorpusSnapshot):
    """Restrict both snapshots to their common app_ids."""
    common = old.analyses.keys() & new.analyses.keys()
    if not common:
        raise EmptyIntersection("snapshots share no app_ids")
    return (
        CorpusSnapshot(old.label, {k: old.analyses[k] for k in sorted(common)}),
        CorpusSnapshot(new.label, {k: new.analyses[k] for k in sorted(common)}),
    )


def _report(old, new, old_dist, new_dist, buckets):
    rows = tuple(
        ReportRow(bucket, old_dist.get(bucket, 0.0), new_dist.get(bucket, 0.0),
                  percent_change(old_dist.get(bucket, 0.0), new_dist.get(bucket, 0.0)))
        for bucket in buckets
    )
    return LongitudinalReport(old.label, new.label, len(old.analyses), rows)


def diff_benefiting_counts(old: CorpusSnapshot, new: CorpusSnapshot,
                           population) -> LongitudinalReport:
    """Per-bucket change in benefiting-library counts per device."""
    old_dist = engine.benefiting_count_distribution(population, old.analyses)
    new_dist = engine.benefiting_count_distribution(population, new.analyses)
    return _report(old, new, old_dist, new_dist, engine.COUNT_BUCKETS)


def _collapse_additional(dist):
    return {
        "1": dist.get("1", 0.0),
        "2+": sum(share for bucket, share in dist.items() if bucket != "1"),
    }


def diff_additional_perms(old: CorpusSnapshot, new: CorpusSnapshot,
                          population) -> LongitudinalReport:
    """Change in the additional-permission distribution, buckets 1 and 2+."""
    old_dist = _collapse_additional(engine.additional_perm_distribution(population, old.analyses))
    new_dist = _collapse_additional(engine.additional_perm_distribution(population, new.analyses))
    return _report(old, new, old_dist, new_dist, DIFF_ADDITIONAL_BUCKETS)


def share_shift(old: CorpusSnapshot, new: CorpusSnapshot, population) -> dict:
    """library_id -> (old_share, new_share), outer-joined with zeros."""
    try:
        old_shares = engine.library_benefit_shares(population, old.analyses)
    except NoBenefitingFindings:
        raise NoBenefitingFindings(old.label) from None
    try:
        new_shares = engine.library_benefit_shares(population, new.analyses)
    except NoBenefitingFindings:
        raise NoBenefitingFindings(new.label) from None
    libraries = sorted(old_shares.keys() | new_shares.keys())
    return {library_id: (old_shares.get(library_id, 0.0), new_shares.get(library_id, 0.0))
            for library_id in libraries}


def format_pct_change(value: float | None, decimals: int = 4) -> str:
    """Machine formatting; the zero-baseline sentinel is spelled out."""
    if value is None:
        return UNDEFINED
    return f"{value:.{decimals}f}"
