"""Static per-library permission analysis for Android app corpora.

Pipeline: open an APK container, parse its DEX payloads and manifest,
attribute classes to cataloged libraries, intersect demanded permissions
with the declared dangerous permissions, then run set-algebraic analytics
over device install lists (cross-app permission unions, longitudinal
snapshot diffs, and ad-library leakage lower bounds).
"""

from .archive import ApkArchive, dex_payloads, manifest_payload, open_archive
from .attribution import (
    APP_CODE,
    ApiPermissionMap,
    AppAnalysis,
    CatalogEntry,
    DangerousPermissionList,
    LibraryCatalog,
    analyze_app,
    classify_class,
    demanded_permissions,
)
from .dex import DexFile, InvocationRecord, MethodRef, extract_invocations, parse_dex
from .engine import (
    DeviceProfile,
    IlcFinding,
    additional_perm_distribution,
    analyze_device,
    benefiting_count_distribution,
    library_benefit_shares,
    library_prevalence,
    mean_libraries_per_device,
)
from .leakage import LeakageSummary, LeakEvent, daily_leak_events, summarize_leakage
from .longitudinal import (
    CorpusSnapshot,
    LongitudinalReport,
    align_snapshots,
    diff_additional_perms,
    diff_benefiting_counts,
    percent_change,
    share_shift,
)
from .manifest import ManifestInfo, SdkBucket, parse_manifest, target_sdk_bucket

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
