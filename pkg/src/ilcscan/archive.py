"""APK container reader.

Reads ZIP archives via the central directory, which is authoritative for
sizes and offsets (local headers with data descriptors are not trusted).
Only stored and deflate entries are supported; ZIP64 archives are rejected.
"""

import re
import struct
import zlib
from dataclasses import dataclass, field

from .diag import DiagnosticSink, sink_or_new
from .errors import (
    CrcMismatch,
    MissingEndOfCentralDirectory,
    MissingManifest,
    TruncatedEntry,
    UnsupportedCompressionMethod,
    UnsupportedFeature,
)

_EOCD_SIG = 0x06054B50
_CDIR_SIG = 0x02014B50
_LOCAL_SIG = 0x04034B50

# Multidex names: classes2.dex, classes3.dex, ... (N >= 2, no leading zero).
_DEX_NAME_RE = re.compile(r"^classes([2-9]|[1-9][0-9]+)\.dex$")

MANIFEST_ENTRY = "AndroidManifest.xml"


@dataclass(frozen=True)
class ApkArchive:
    source_name: str
    entries: tuple  # of (name, payload bytes), central-directory order
    warnings: DiagnosticSink = field(default_factory=DiagnosticSink, compare=False)

    def names(self):
        return [name for name, _ in self.entries]

    def payload(self, name):
        for entry_name, payload in self.entries:
            if entry_name == name:
                return payload
        raise KeyError(name)

    def __contains__(self, name):
        return any(entry_name == name for entry_name, _ in self.entries)


def _find_eocd(data: bytes) -> int:
    # EOCD is within the last 64KiB + 22 bytes (max comment length).
    tail_start = max(0, len(data) - 0x10000 - 22)
    pos = data.rfind(struct.pack("<I", _EOCD_SIG), tail_start)
    if pos < 0 or pos + 22 > len(data):
        raise MissingEndOfCentralDirectory("no end-of-central-directory record")
    return pos


def open_archive(data: bytes, source_name: str = "<bytes>",
                 warnings: DiagnosticSink | None = None) -> ApkArchive:
    """Parse ZIP bytes into an ApkArchive with decompressed payloads."""
    warnings = sink_or_new(warnings)
    eocd = _find_eocd(data)
    (total_entries, cd_size, cd_off) = struct.unpack_from("<H I I", data, eocd + 10)
    disk_entries = struct.unpack_from("<H", data, eocd + 8)[0]
    if total_entries == 0xFFFF or cd_off == 0xFFFFFFFF or cd_size == 0xFFFFFFFF:
        raise UnsupportedFeature("ZIP64 archive")
    if disk_entries != total_entries:
        raise UnsupportedFeature("multi-disk archive")

    records = []
    pos = cd_off
    for _ in range(total_entries):
        if pos + 46 > len(data) or struct.unpack_from("<I", data, pos)[0] != _CDIR_SIG:
            raise MissingEndOfCentralDirectory("central directory corrupt or truncated")
        (method, crc, comp_size, uncomp_size, name_len, extra_len,
         comment_len) = struct.unpack_from("<H 4x I I I H H H", data, pos + 10)
        local_off = struct.unpack_from("<I", data, pos + 42)[0]
        name_end = pos + 46 + name_len
        if name_end > len(data):
            raise MissingEndOfCentralDirectory("central directory corrupt or truncated")
        name = data[pos + 46:name_end].decode("utf-8", "replace")
        if comp_size == 0xFFFFFFFF or uncomp_size == 0xFFFFFFFF or local_off == 0xFFFFFFFF:
            raise UnsupportedFeature("ZIP64 entry: " + name)
        records.append((name, method, crc, comp_size, uncomp_size, local_off))
        pos = name_end + extra_len + comment_len

    # Duplicate names: last central-directory record wins.
    by_name = {}
    for record in records:
        if record[0] in by_name:
            warnings.warn("duplicate-entry", f"duplicate entry {record[0]!r}; keeping last",
                          record[0])
        by_name[record[0]] = record

    entries = []
    seen = set()
    for record in reversed(records):
        if record[0] in seen:
            continue
        seen.add(record[0])
        entries.append(_extract(data, record))
    entries.reverse()
    return ApkArchive(source_name=source_name, entries=tuple(entries), warnings=warnings)


def _extract(data: bytes, record) -> tuple:
    name, method, crc, comp_size, uncomp_size, local_off = record
    if local_off + 30 > len(data) or struct.unpack_from("<I", data, local_off)[0] != _LOCAL_SIG:
        raise TruncatedEntry(name)
    name_len, extra_len = struct.unpack_from("<H H", data, local_off + 26)
    data_start = local_off + 30 + name_len + extra_len
    data_end = data_start + comp_size
    if data_end > len(data):
        raise TruncatedEntry(name)
    raw = data[data_start:data_end]
    if method == 0:
        payload = raw
    elif method == 8:
        try:
            payload = zlib.decompress(raw, -15)
        except zlib.error:
            raise TruncatedEntry(name) from None
    else:
        raise UnsupportedCompressionMethod(method, name)
    if len(payload) != uncomp_size:
        raise TruncatedEntry(name)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise CrcMismatch(name)
    return (name, payload)


def dex_payloads(archive: ApkArchive) -> list:
    """Payloads of classes.dex then classesN.dex in ascending N; may be empty."""
    keyed = []
    for name, payload in archive.entries:
        if name == "classes.dex":
            keyed.append((1, payload))
        else:
            match = _DEX_NAME_RE.match(name)
            if match:
                keyed.append((int(match.group(1)), payload))
    keyed.sort(key=lambda item: item[0])
    return [payload for _, payload in keyed]


def manifest_payload(archive: ApkArchive) -> bytes:
    """Root-level AndroidManifest.xml payload; nested copies do not count."""
    for name, payload in archive.entries:
        if name == MANIFEST_ENTRY:
            return payload
    raise MissingManifest(f"{archive.source_name}: no root-level {MANIFEST_ENTRY}")
