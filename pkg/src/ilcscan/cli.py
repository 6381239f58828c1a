"""Command-line front end.

Subcommands: analyze, ilc, targetsdk, longitudinal, leakage, dump-dex,
dump-manifest. All outputs are CSV/JSON with stable ordering and fixed
decimal formatting so identical inputs give byte-identical files
regardless of --jobs.

Exit codes: 0 success, 1 usage error, 2 input-format error, 3 empty result.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import archive as archive_mod
from . import datafiles, dex, engine, leakage, longitudinal
from .attribution import analyze_app
from .errors import (
    EmptyCorpus,
    EmptyIntersection,
    EmptyPopulation,
    IlcScanError,
    NoBenefitingFindings,
    NoUsageData,
)
from .manifest import SdkBucket, parse_manifest, target_sdk_bucket

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_EMPTY = 3

_EMPTY_ERRORS = (EmptyCorpus, EmptyIntersection, EmptyPopulation,
                 NoBenefitingFindings, NoUsageData)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", "utf-8")


# --- analyze ---

_WORKER_STATE = {}


def _init_worker(catalog_text, map_text, dangerous_text, include_sdk23):
    _WORKER_STATE["catalog"] = datafiles.parse_catalog(catalog_text)
    _WORKER_STATE["map"] = datafiles.parse_api_map(map_text)
    _WORKER_STATE["dangerous"] = datafiles.parse_dangerous_list(dangerous_text)
    _WORKER_STATE["include_sdk23"] = include_sdk23


def _analyze_one(path_str):
    path = Path(path_str)
    try:
        apk = archive_mod.open_archive(path.read_bytes(), source_name=path.name)
        analysis = analyze_app(apk, _WORKER_STATE["catalog"], _WORKER_STATE["map"],
                               _WORKER_STATE["dangerous"],
                               include_sdk23=_WORKER_STATE["include_sdk23"])
        return path.name, datafiles.analysis_to_dict(analysis), None
    except Exception as exc:  # per-app isolation: any failure aborts this app only
        return path.name, None, f"{type(exc).__name__}: {exc}"


def cmd_analyze(args) -> int:
    corpus_dir = Path(args.corpus)
    apk_paths = sorted(p for p in corpus_dir.iterdir()
                       if p.suffix.lower() in (".apk", ".zip"))
    json_paths = sorted(corpus_dir.glob("*.json"))

    catalog_text = Path(args.catalog).read_text("utf-8")
    map_text = Path(args.map).read_text("utf-8")
    dangerous_text = (Path(args.dangerous).read_text("utf-8") if args.dangerous
                      else datafiles.resources.files("ilcscan.data")
                      .joinpath(datafiles.DEFAULT_DANGEROUS_RESOURCE).read_text("utf-8"))

    init_args = (catalog_text, map_text, dangerous_text, not args.no_sdk23)
    results = []
    if args.jobs > 1 and len(apk_paths) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs, initializer=_init_worker,
                                 initargs=init_args) as pool:
            results = list(pool.map(_analyze_one, [str(p) for p in apk_paths]))
    else:
        _init_worker(*init_args)
        results = [_analyze_one(str(p)) for p in apk_paths]

    analyses = {}
    errors = {}
    for source, payload, error in results:
        if error is not None:
            errors[source] = error
        else:
            analyses[payload["app_id"]] = datafiles.analysis_from_dict(payload)

    # Pre-extracted analysis JSON passes straight through.
    for path in json_paths:
        try:
            analysis = datafiles.load_analysis_json(path)
            analyses[analysis.app_id] = analysis
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            errors[path.name] = f"{type(exc).__name__}: {exc}"

    datafiles.write_snapshot(args.out, analyses, errors)
    print(f"analyzed {len(analyses)} apps, {len(errors)} failures -> {args.out}")
    if not analyses:
        return EXIT_EMPTY
    return EXIT_OK


# --- ilc ---

def cmd_ilc(args) -> int:
    corpus = datafiles.load_snapshot(args.snapshot)
    population = datafiles.load_devices(args.devices, args.usage)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    prevalence = engine.library_prevalence(corpus)
    _write_csv(out / "prevalence.csv", ("library_id", "share"),
               [(lib, _fmt(share)) for lib, share in prevalence.items()])

    counts = engine.benefiting_count_distribution(population, corpus)
    _write_csv(out / "benefiting_counts.csv", ("bucket", "share"),
               [(bucket, _fmt(counts[bucket])) for bucket in engine.COUNT_BUCKETS])

    findings_rows = []
    for device in sorted(population, key=lambda d: d.device_id):
        for finding in engine.analyze_device(device, corpus):
            findings_rows.append((finding.device_id, finding.library_id,
                                  len(finding.hosting_apps), len(finding.union_set),
                                  finding.single_app_max, finding.additional,
                                  str(finding.benefits).lower()))
    _write_csv(out / "findings.csv",
               ("device_id", "library_id", "n_hosting_apps", "union_size",
                "single_app_max", "additional", "benefits"), findings_rows)

    summary = {"mean_libraries_per_device":
               engine.mean_libraries_per_device(population, corpus)}
    try:
        additional = engine.additional_perm_distribution(population, corpus)
        _write_csv(out / "additional_perms.csv", ("bucket", "share"),
                   [(bucket, _fmt(additional[bucket]))
                    for bucket in engine.ADDITIONAL_BUCKETS])
        shares = engine.library_benefit_shares(population, corpus)
        _write_csv(out / "benefit_shares.csv", ("library_id", "share"),
                   [(lib, _fmt(share)) for lib, share in shares.items()])
    except NoBenefitingFindings:
        _write_csv(out / "additional_perms.csv", ("bucket", "share"), [])
        _write_csv(out / "benefit_shares.csv", ("library_id", "share"), [])
        summary["benefiting_findings"] = 0
    _write_json(out / "summary.json", summary)
    return EXIT_OK


# --- targetsdk ---

def cmd_targetsdk(args) -> int:
    corpus = datafiles.load_snapshot(args.snapshot)
    if not corpus:
        raise EmptyCorpus("snapshot has no analyses")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    histogram = {}
    buckets = {bucket: 0 for bucket in SdkBucket}
    for analysis in corpus.values():
        key = analysis.target_sdk if analysis.target_sdk is not None else "unknown"
        histogram[key] = histogram.get(key, 0) + 1
        if analysis.target_sdk is None:
            buckets[SdkBucket.UNKNOWN] += 1
        elif analysis.target_sdk >= 23:
            buckets[SdkBucket.AT_LEAST_23] += 1
        else:
            buckets[SdkBucket.PRE_23] += 1

    rows = sorted(((str(k), v) for k, v in histogram.items()),
                  key=lambda item: (item[0] == "unknown", item[0].zfill(8)))
    _write_csv(out / "targetsdk.csv", ("target_sdk", "count"), rows)
    total = len(corpus)
    _write_csv(out / "targetsdk_buckets.csv", ("bucket", "share"),
               [(bucket.value, _fmt(buckets[bucket] / total)) for bucket in SdkBucket])
    return EXIT_OK


# --- longitudinal ---

def _write_report(path, report):
    rows = [(row.bucket, _fmt(row.old_share), _fmt(row.new_share),
             longitudinal.format_pct_change(row.pct_change))
            for row in report.rows]
    _write_csv(path, ("bucket", "old_share", "new_share", "pct_change"), rows)


def cmd_longitudinal(args) -> int:
    old = longitudinal.CorpusSnapshot("OLD", datafiles.load_snapshot(args.old))
    new = longitudinal.CorpusSnapshot("NEW", datafiles.load_snapshot(args.new))
    population = datafiles.load_devices(args.devices, args.usage)
    old, new = longitudinal.align_snapshots(old, new)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    _write_report(out / "benefiting_counts_diff.csv",
                  longitudinal.diff_benefiting_counts(old, new, population))
    _write_report(out / "additional_perms_diff.csv",
                  longitudinal.diff_additional_perms(old, new, population))
    shifts = longitudinal.share_shift(old, new, population)
    _write_csv(out / "share_shift.csv", ("library_id", "old_share", "new_share"),
               [(lib, _fmt(pair[0]), _fmt(pair[1])) for lib, pair in shifts.items()])
    _write_json(out / "longitudinal_summary.json",
                {"common_app_count": len(old.analyses)})
    return EXIT_OK


# --- leakage ---

def cmd_leakage(args) -> int:
    corpus = datafiles.load_snapshot(args.snapshot)
    population = datafiles.load_devices(args.devices, args.usage)
    catalog = datafiles.load_catalog(args.catalog)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    event_rows = []
    for device in sorted(population, key=lambda d: d.device_id):
        for event in leakage.daily_leak_events(device, corpus, catalog):
            event_rows.append((event.device_id, event.day, event.app_id,
                               event.library_id, event.network_id))
    _write_csv(out / "leak_events.csv",
               ("device_id", "day", "app_id", "library_id", "network_id"), event_rows)

    summary = leakage.summarize_leakage(population, corpus, catalog,
                                        calendar_days=args.calendar_days)
    _write_json(out / "leakage_summary.json", {
        "mean_leaks_per_device_day": summary.mean_leaks_per_device_day,
        "mean_distinct_networks_per_device_day":
            summary.mean_distinct_networks_per_device_day,
        "max_leaks_any_device_day": summary.max_leaks_any_device_day,
        "mean_leaks_per_exposed_device_day": summary.mean_leaks_per_exposed_device_day,
        "mean_networks_per_exposed_device_day":
            summary.mean_networks_per_exposed_device_day,
        "per_device": [
            {"device_id": row.device_id, "observed_days": row.observed_days,
             "event_count": row.event_count, "leaks_per_day": row.leaks_per_day,
             "networks_per_day": row.networks_per_day}
            for row in summary.per_device
        ],
    })
    return EXIT_OK


# --- dumps ---

def _load_container(path):
    data = Path(path).read_bytes()
    if data[:4] == b"PK\x03\x04" or data[:4] == b"PK\x05\x06":
        return archive_mod.open_archive(data, source_name=Path(path).name)
    return data


def cmd_dump_dex(args) -> int:
    loaded = _load_container(args.file)
    if isinstance(loaded, archive_mod.ApkArchive):
        payloads = archive_mod.dex_payloads(loaded)
    else:
        payloads = [loaded]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("caller_class", "callee_class", "callee_name",
                     "callee_descriptor", "kind"))
    for payload in payloads:
        parsed = dex.parse_dex(payload)
        writer.writerows(dex.invocation_csv_rows(dex.extract_invocations(parsed)))
    return EXIT_OK


def cmd_dump_manifest(args) -> int:
    loaded = _load_container(args.file)
    if isinstance(loaded, archive_mod.ApkArchive):
        payload = archive_mod.manifest_payload(loaded)
    else:
        payload = loaded
    info = parse_manifest(payload)
    json.dump({"package": info.package,
               "permissions": sorted(info.declared_permissions),
               "targetSdk": info.target_sdk,
               "minSdk": info.min_sdk}, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ilcscan",
                     description="Per-library permission analysis for app corpora "
                                 "and device install lists")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze a corpus directory of APKs")
    analyze.add_argument("--corpus", required=True)
    analyze.add_argument("--catalog", required=True)
    analyze.add_argument("--map", required=True)
    analyze.add_argument("--dangerous", default=None,
                         help="dangerous-permission list (default: bundled API 23 list)")
    analyze.add_argument("--out", required=True)
    analyze.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    analyze.add_argument("--no-sdk23", action="store_true",
                         help="ignore uses-permission-sdk-23 declarations")
    analyze.set_defaults(func=cmd_analyze)

    ilc = sub.add_parser("ilc", help="device-level collusion metrics")
    ilc.add_argument("--snapshot", required=True)
    ilc.add_argument("--devices", required=True)
    ilc.add_argument("--usage", default=None)
    ilc.add_argument("--out", required=True)
    ilc.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ilc.set_defaults(func=cmd_ilc)

    targetsdk = sub.add_parser("targetsdk", help="targetSdk histogram over a snapshot")
    targetsdk.add_argument("--snapshot", required=True)
    targetsdk.add_argument("--out", required=True)
    targetsdk.set_defaults(func=cmd_targetsdk)

    longit = sub.add_parser("longitudinal", help="compare two corpus snapshots")
    longit.add_argument("--old", required=True)
    longit.add_argument("--new", required=True)
    longit.add_argument("--devices", required=True)
    longit.add_argument("--usage", default=None)
    longit.add_argument("--out", required=True)
    longit.set_defaults(func=cmd_longitudinal)

    leak = sub.add_parser("leakage", help="ad-library leakage lower bound")
    leak.add_argument("--snapshot", required=True)
    leak.add_argument("--devices", required=True)
    leak.add_argument("--usage", default=None)
    leak.add_argument("--catalog", required=True)
    leak.add_argument("--out", required=True)
    leak.add_argument("--calendar-days", action="store_true",
                      help="divide by calendar span instead of observed days")
    leak.set_defaults(func=cmd_leakage)

    dump_dex = sub.add_parser("dump-dex", help="dump invocation records as CSV")
    dump_dex.add_argument("file")
    dump_dex.set_defaults(func=cmd_dump_dex)

    dump_manifest = sub.add_parser("dump-manifest", help="dump manifest info as JSON")
    dump_manifest.add_argument("file")
    dump_manifest.set_defaults(func=cmd_dump_manifest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _EMPTY_ERRORS as exc:
        print(f"empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (IlcScanError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
