"""On-disk formats for sidecar inputs and analysis results.

Catalog / API-map / dangerous-list files are tab-separated UTF-8 text with
'#' comments. Device profiles are JSON-lines or CSV. AppAnalysis records
round-trip through JSON; a snapshot is a directory of those plus an index.
"""

import csv
import io
import json
from importlib import resources
from pathlib import Path

from .attribution import (
    AppAnalysis,
    ApiPermissionMap,
    CatalogEntry,
    DangerousPermissionList,
    LibraryCatalog,
)
from .engine import DeviceProfile

DEFAULT_DANGEROUS_RESOURCE = "dangerous_permissions_api23.txt"

SNAPSHOT_INDEX = "index.json"


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_catalog(text: str) -> LibraryCatalog:
    entries = []
    for lineno, line in _data_lines(text):
        fields = line.split("\t")
        if len(fields) < 3:
            raise ValueError(f"catalog line {lineno}: expected at least 3 tab-separated fields")
        prefix, library_id, category = fields[0], fields[1], fields[2]
        network_id = fields[3] if len(fields) > 3 and fields[3] else None
        if network_id is not None and category != "ad":
            raise ValueError(f"catalog line {lineno}: network_id only valid for ad libraries")
        entries.append(CatalogEntry(prefix, library_id, category, network_id))
    return LibraryCatalog(entries)


def load_catalog(path) -> LibraryCatalog:
    return parse_catalog(Path(path).read_text("utf-8"))


def parse_api_map(text: str, api_level_label: str = "") -> ApiPermissionMap:
    entries = {}
    for lineno, line in _data_lines(text):
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(f"api map line {lineno}: expected 4 tab-separated fields")
        permission, class_descriptor, method_name, method_descriptor = fields
        key = (class_descriptor, method_name, method_descriptor)
        entries.setdefault(key, set()).add(permission)
    return ApiPermissionMap(entries, api_level_label)


def load_api_map(path) -> ApiPermissionMap:
    path = Path(path)
    return parse_api_map(path.read_text("utf-8"), api_level_label=path.stem)


def parse_dangerous_list(text: str) -> DangerousPermissionList:
    names = {line for _, line in _data_lines(text)}
    return DangerousPermissionList(frozenset(names))


def load_dangerous_list(path) -> DangerousPermissionList:
    return parse_dangerous_list(Path(path).read_text("utf-8"))


def default_dangerous_list() -> DangerousPermissionList:
    text = resources.files("ilcscan.data").joinpath(DEFAULT_DANGEROUS_RESOURCE).read_text("utf-8")
    return parse_dangerous_list(text)


# --- device profiles ---

def parse_devices_jsonl(text: str) -> list:
    devices = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        obj = json.loads(line)
        installed = frozenset(obj["installed"])
        usage = frozenset((int(day), app_id) for day, app_id in obj.get("usage", []))
        devices.append(DeviceProfile(obj["device_id"], installed, usage))
    return devices


def parse_devices_csv(install_text: str, usage_text: str | None = None) -> list:
    installed = {}
    for row in csv.reader(io.StringIO(install_text)):
        if not row or row[0].startswith("#"):
            continue
        if row[0] == "device_id":  # optional header
            continue
        device_id, app_id = row[0].strip(), row[1].strip()
        installed.setdefault(device_id, set()).add(app_id)

    usage = {device_id: set() for device_id in installed}
    if usage_text:
        for row in csv.reader(io.StringIO(usage_text)):
            if not row or row[0].startswith("#") or row[0] == "device_id":
                continue
            device_id, day, app_id = row[0].strip(), int(row[1]), row[2].strip()
            usage.setdefault(device_id, set()).add((day, app_id))

    return [DeviceProfile(device_id, frozenset(apps),
                          frozenset(usage.get(device_id, ())))
            for device_id, apps in sorted(installed.items())]


def load_devices(path, usage_path=None) -> list:
    """Autodetect JSON-lines vs CSV device-profile input."""
    path = Path(path)
    text = path.read_text("utf-8")
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json") or text.lstrip().startswith("{"):
        return parse_devices_jsonl(text)
    usage_text = Path(usage_path).read_text("utf-8") if usage_path else None
    return parse_devices_csv(text, usage_text)


# --- AppAnalysis JSON ---

def analysis_to_dict(analysis: AppAnalysis) -> dict:
    return {
        "app_id": analysis.app_id,
        "version_label": analysis.version_label,
        "declared": sorted(analysis.declared),
        "target_sdk": analysis.target_sdk,
        "library_perms": {library_id: sorted(perms)
                          for library_id, perms in sorted(analysis.library_perms.items())},
        "app_code_perms": sorted(analysis.app_code_perms),
        "libraries_present": sorted(analysis.libraries_present),
    }


def analysis_from_dict(obj: dict) -> AppAnalysis:
    return AppAnalysis(
        app_id=obj["app_id"],
        version_label=obj.get("version_label", ""),
        declared=frozenset(obj["declared"]),
        target_sdk=obj.get("target_sdk"),
        library_perms={library_id: frozenset(perms)
                       for library_id, perms in obj["library_perms"].items()},
        app_code_perms=frozenset(obj["app_code_perms"]),
        libraries_present=frozenset(obj["libraries_present"]),
    )


def dump_analysis_json(analysis: AppAnalysis) -> str:
    return json.dumps(analysis_to_dict(analysis), indent=2, sort_keys=True) + "\n"


def load_analysis_json(path) -> AppAnalysis:
    return analysis_from_dict(json.loads(Path(path).read_text("utf-8")))


# --- snapshot directories ---

def _safe_filename(app_id: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in app_id) or "_"


def write_snapshot(directory, analyses: dict, errors: dict | None = None):
    """Write one JSON per app plus an index; returns the index dict."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {"apps": {}, "errors": dict(sorted((errors or {}).items()))}
    for app_id in sorted(analyses):
        filename = _safe_filename(app_id) + ".json"
        (directory / filename).write_text(dump_analysis_json(analyses[app_id]), "utf-8")
        index["apps"][app_id] = filename
    (directory / SNAPSHOT_INDEX).write_text(
        json.dumps(index, indent=2, sort_keys=True) + "\n", "utf-8")
    return index


def load_snapshot(directory) -> dict:
    """app_id -> AppAnalysis from a snapshot directory (index or glob)."""
    directory = Path(directory)
    index_path = directory / SNAPSHOT_INDEX
    analyses = {}
    if index_path.exists():
        index = json.loads(index_path.read_text("utf-8"))
        for app_id, filename in index["apps"].items():
            analyses[app_id] = load_analysis_json(directory / filename)
    else:
        for path in sorted(directory.glob("*.json")):
            analysis = load_analysis_json(path)
            analyses[analysis.app_id] = analysis
    return analyses
