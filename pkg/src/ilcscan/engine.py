"""Cross-app permission-union analytics over device install lists.

A finding pairs one device with one library present in its resolved apps
and compares the union of per-app usable permission sets against the
largest single-app set; the library "benefits" when the union is strictly
bigger.
"""

from dataclasses import dataclass

from .errors import EmptyCorpus, EmptyPopulation, NoBenefitingFindings

COUNT_BUCKETS = ("0", "1", "2", "3", "4", "5+")
ADDITIONAL_BUCKETS = ("1", "2", "3", "4", "5+")


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    installed: frozenset          # app_ids
    usage: frozenset = frozenset()  # (day, app_id) pairs, duplicates collapsed

    def __post_init__(self):
        for day, app_id in self.usage:
            if day < 0:
                raise ValueError("usage days must be non-negative")
            if app_id not in self.installed:
                raise ValueError(f"usage references app {app_id!r} not installed")


@dataclass(frozen=True)
class IlcFinding:
    device_id: str
    library_id: str
    hosting_apps: tuple           # sorted app_ids
    per_app_sets: tuple           # frozensets aligned with hosting_apps
    union_set: frozenset
    single_app_max: int
    additional: int
    benefits: bool


def count_bucket(count: int) -> str:
    return str(count) if count < 5 else "5+"


def additional_bucket(additional: int) -> str:
    return str(additional) if additional < 5 else "5+"


def analyze_device(device: DeviceProfile, corpus: dict,
                   skip_counter: list | None = None) -> list:
    """One IlcFinding per library present in any corpus-resolved installed app.

    Apps missing from the corpus are skipped; each skip appends the app_id
    to skip_counter when given. Findings are sorted by library_id.
    """
    resolved = []
    for app_id in sorted(device.installed):
        analysis = corpus.get(app_id)
        if analysis is None:
            if skip_counter is not None:
                skip_counter.append(app_id)
            continue
        resolved.append((app_id, analysis))

    libraries = sorted({lib for _, analysis in resolved
                        for lib in analysis.libraries_present})
    findings = []
    for library_id in libraries:
        hosting = [(app_id, analysis.library_perms.get(library_id, frozenset()))
                   for app_id, analysis in resolved
                   if library_id in analysis.libraries_present]
        per_app_sets = tuple(perms for _, perms in hosting)
        union = frozenset().union(*per_app_sets) if per_app_sets else frozenset()
        single_app_max = max((len(perms) for perms in per_app_sets), default=0)
        additional = len(union) - single_app_max
        findings.append(IlcFinding(
            device_id=device.device_id,
            library_id=library_id,
            hosting_apps=tuple(app_id for app_id, _ in hosting),
            per_app_sets=per_app_sets,
            union_set=union,
            single_app_max=single_app_max,
            additional=additional,
            benefits=additional > 0 and len(hosting) >= 2,
        ))
    return findings


def _all_findings(population, corpus):
    for device in population:
        yield from analyze_device(device, corpus)


def benefiting_count_distribution(population, corpus) -> dict:
    """Share of devices per count of benefiting libraries, buckets 0..4, 5+."""
    if not population:
        raise EmptyPopulation("no devices")
    counts = {bucket: 0 for bucket in COUNT_BUCKETS}
    for device in population:
        benefiting = sum(1 for finding in analyze_device(device, corpus)
                         if finding.benefits)
        counts[count_bucket(benefiting)] += 1
    total = len(population)
    return {bucket: counts[bucket] / total for bucket in COUNT_BUCKETS}


def additional_perm_distribution(population, corpus) -> dict:
    """Share of benefiting findings per additional-permission count."""
    counts = {bucket: 0 for bucket in ADDITIONAL_BUCKETS}
    total = 0
    for finding in _all_findings(population, corpus):
        if finding.benefits:
            counts[additional_bucket(finding.additional)] += 1
            total += 1
    if total == 0:
        raise NoBenefitingFindings()
    return {bucket: counts[bucket] / total for bucket in ADDITIONAL_BUCKETS}


def library_benefit_shares(population, corpus) -> dict:
    """Per-library share of all benefiting findings across devices."""
    counts = {}
    total = 0
    for finding in _all_findings(population, corpus):
        if finding.benefits:
            counts[finding.library_id] = counts.get(finding.library_id, 0) + 1
            total += 1
    if total == 0:
        raise NoBenefitingFindings()
    return {library_id: count / total for library_id, count in sorted(counts.items())}


def library_prevalence(corpus) -> dict:
    """Fraction of corpus apps containing each library."""
    if not corpus:
        raise EmptyCorpus("no analyzed apps")
    counts = {}
    for analysis in corpus.values():
        for library_id in analysis.libraries_present:
            counts[library_id] = counts.get(library_id, 0) + 1
    total = len(corpus)
    return {library_id: count / total for library_id, count in sorted(counts.items())}


def mean_libraries_per_device(population, corpus) -> float:
    """Mean count of distinct libraries across each device's resolved apps."""
    if not population:
        raise EmptyPopulation("no devices")
    total = 0
    for device in population:
        libraries = set()
        for app_id in device.installed:
            analysis = corpus.get(app_id)
            if analysis is not None:
                libraries |= analysis.libraries_present
        total += len(libraries)
    return total / len(population)
