"""Class-to-library attribution and usable-permission computation.

Classes are attributed to cataloged libraries by longest package-prefix
match; invocation permission demands come from a PScout-style mapping and
are intersected with the manifest-declared dangerous permissions to get the
set each library can actually exercise inside an app.
"""

from dataclasses import dataclass, field

from . import archive as archive_mod
from . import dex as dex_mod
from . import manifest as manifest_mod
from .diag import DiagnosticSink, sink_or_new

# Owner marker for classes matching no catalog prefix.
APP_CODE = "<app>"

CATEGORIES = ("ad", "analytics", "social", "utility", "other")


@dataclass(frozen=True)
class CatalogEntry:
    prefix: str          # package path, e.g. "com/facebook/ads"
    library_id: str
    category: str
    network_id: str | None = None


class LibraryCatalog:
    """Package-prefix whitelist identifying known third-party library code."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        self._by_prefix = {}
        self._by_library = {}
        for entry in self.entries:
            if not entry.prefix:
                raise ValueError("empty catalog prefix")
            if entry.prefix in self._by_prefix:
                raise ValueError(f"duplicate catalog prefix {entry.prefix!r}")
            if entry.category not in CATEGORIES:
                raise ValueError(f"unknown category {entry.category!r}")
            self._by_prefix[entry.prefix] = entry
            self._by_library.setdefault(entry.library_id, entry)

    def classify(self, class_descriptor: str) -> str:
        """library_id of the longest matching prefix, or APP_CODE."""
        if not (class_descriptor.startswith("L") and class_descriptor.endswith(";")):
            return APP_CODE
        path = class_descriptor[1:-1]
        best = None
        for prefix, entry in self._by_prefix.items():
            if path == prefix or path.startswith(prefix + "/"):
                if best is None or len(prefix) > len(best.prefix):
                    best = entry
        return best.library_id if best is not None else APP_CODE

    def entry_for_library(self, library_id: str) -> CatalogEntry | None:
        return self._by_library.get(library_id)

    def is_ad_library(self, library_id: str) -> bool:
        entry = self._by_library.get(library_id)
        return entry is not None and entry.category == "ad"

    def network_for(self, library_id: str) -> str:
        entry = self._by_library.get(library_id)
        if entry is not None and entry.network_id:
            return entry.network_id
        return library_id


# Back-compat style free function mirroring the catalog method.
def classify_class(class_descriptor: str, catalog: LibraryCatalog) -> str:
    return catalog.classify(class_descriptor)


class ApiPermissionMap:
    """(class descriptor, method name, full descriptor) -> permission names."""

    def __init__(self, entries, api_level_label: str = ""):
        self.api_level_label = api_level_label
        self._entries = {}
        for key, perms in dict(entries).items():
            self._entries[tuple(key)] = frozenset(perms)

    def lookup(self, method_ref) -> frozenset:
        key = (method_ref.defining_class, method_ref.name, method_ref.descriptor)
        return self._entries.get(key, frozenset())

    def __len__(self):
        return len(self._entries)

    def items(self):
        return self._entries.items()


@dataclass(frozen=True)
class DangerousPermissionList:
    names: frozenset

    def __post_init__(self):
        if not self.names:
            raise ValueError("dangerous permission list must be non-empty")

    def __contains__(self, name):
        return name in self.names


@dataclass
class AnalysisStats:
    """Corpus-quality counters; not part of the AppAnalysis contract."""
    total_classes: int = 0
    unattributed_classes: int = 0
    total_invocations: int = 0
    mapped_invocations: int = 0

    @property
    def unattributed_fraction(self) -> float:
        return self.unattributed_classes / self.total_classes if self.total_classes else 0.0


@dataclass(frozen=True)
class AppAnalysis:
    app_id: str
    version_label: str
    declared: frozenset
    target_sdk: int | None
    library_perms: dict          # library_id -> frozenset of permission names
    app_code_perms: frozenset
    libraries_present: frozenset
    stats: AnalysisStats | None = field(default=None, compare=False)


def demanded_permissions(invocations, catalog: LibraryCatalog,
                         permission_map: ApiPermissionMap,
                         dangerous: DangerousPermissionList,
                         stats: AnalysisStats | None = None) -> dict:
    """Per-owner union of dangerous permissions demanded by invocations.

    Owner is the invoking class's library (or APP_CODE); unmapped callees
    contribute nothing and are counted in stats.
    """
    demands = {}
    for record in invocations:
        if stats is not None:
            stats.total_invocations += 1
        perms = permission_map.lookup(record.callee)
        if not perms:
            continue
        perms = perms & dangerous.names
        if not perms:
            continue
        if stats is not None:
            stats.mapped_invocations += 1
        owner = catalog.classify(record.caller_class)
        demands.setdefault(owner, set()).update(perms)
    return demands


def analyze_app(apk: archive_mod.ApkArchive, catalog: LibraryCatalog,
                permission_map: ApiPermissionMap, dangerous: DangerousPermissionList,
                include_sdk23: bool = True,
                warnings: DiagnosticSink | None = None) -> AppAnalysis:
    """Full per-app pipeline: manifest + all DEX payloads -> usable sets.

    usable(L) = demanded(L) ∩ declared ∩ dangerous; a library is present as
    soon as it defines one class, even with an empty usable set.
    """
    warnings = sink_or_new(warnings)
    info = manifest_mod.parse_manifest(archive_mod.manifest_payload(apk),
                                       include_sdk23=include_sdk23)

    stats = AnalysisStats()
    invocations = []
    libraries_present = set()
    for payload in archive_mod.dex_payloads(apk):
        dex = dex_mod.parse_dex(payload)
        for class_def in dex.class_defs:
            stats.total_classes += 1
            owner = catalog.classify(class_def.descriptor)
            if owner == APP_CODE:
                stats.unattributed_classes += 1
            else:
                libraries_present.add(owner)
        invocations.extend(dex_mod.extract_invocations(dex, warnings=warnings))

    demands = demanded_permissions(invocations, catalog, permission_map, dangerous,
                                   stats=stats)
    granted = info.declared_permissions & dangerous.names

    library_perms = {}
    for library_id in libraries_present:
        library_perms[library_id] = frozenset(demands.get(library_id, set()) & granted)
    app_code_perms = frozenset(demands.get(APP_CODE, set()) & granted)

    return AppAnalysis(
        app_id=info.package,
        version_label=apk.source_name,
        declared=info.declared_permissions,
        target_sdk=info.target_sdk,
        library_perms=library_perms,
        app_code_perms=app_code_perms,
        libraries_present=frozenset(libraries_present),
        stats=stats,
    )
