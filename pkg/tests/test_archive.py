import io
import struct
import zipfile

import pytest

from ilcscan.archive import dex_payloads, manifest_payload, open_archive
from ilcscan.errors import (
    CrcMismatch,
    MissingEndOfCentralDirectory,
    MissingManifest,
    TruncatedEntry,
    UnsupportedCompressionMethod,
)
from tests.builders.apkbuilder import build_zip


def test_single_stored_entry():
    data = build_zip([("classes.dex", b"\x01\x02\x03\x04")])
    archive = open_archive(data)
    assert archive.names() == ["classes.dex"]
    assert archive.payload("classes.dex") == b"\x01\x02\x03\x04"


def test_empty_zip():
    data = build_zip([])
    archive = open_archive(data)
    assert archive.entries == ()


def test_missing_eocd():
    with pytest.raises(MissingEndOfCentralDirectory):
        open_archive(b"not a zip at all")


def test_deflate_round_trip():
    payload = b"the quick brown fox " * 50
    data = build_zip([("a.txt", payload)], compress=True)
    assert open_archive(data).payload("a.txt") == payload


def test_round_trip_many_entries():
    entries = [(f"f{i}.bin", bytes([i]) * (i * 7 + 1)) for i in range(20)]
    archive = open_archive(build_zip(entries, compress=True))
    assert list(archive.entries) == entries


def test_unsupported_compression_method():
    data = bytearray(build_zip([("x", b"abc")]))
    # Patch the method field in both local and central headers to bzip2 (12).
    sig_local = data.find(b"PK\x03\x04")
    struct.pack_into("<H", data, sig_local + 8, 12)
    sig_central = data.find(b"PK\x01\x02")
    struct.pack_into("<H", data, sig_central + 10, 12)
    with pytest.raises(UnsupportedCompressionMethod) as excinfo:
        open_archive(bytes(data))
    assert excinfo.value.code == 12


def test_crc_mismatch():
    data = bytearray(build_zip([("x", b"abc")]))
    sig_central = data.find(b"PK\x01\x02")
    struct.pack_into("<I", data, sig_central + 16, 0xDEADBEEF)
    with pytest.raises(CrcMismatch):
        open_archive(bytes(data))


def test_truncated_entry():
    data = bytearray(build_zip([("x", b"abcdef")]))
    sig_central = data.find(b"PK\x01\x02")
    # Claim a compressed size far beyond the file end.
    struct.pack_into("<I", data, sig_central + 20, 1 << 20)
    with pytest.raises(TruncatedEntry):
        open_archive(bytes(data))


def test_duplicate_entry_last_wins():
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as zf:
        zf.writestr("dup.txt", b"first")
        zf.writestr("dup.txt", b"second")
    archive = open_archive(buffer.getvalue())
    assert archive.payload("dup.txt") == b"second"
    assert archive.names().count("dup.txt") == 1
    assert any(d.kind == "duplicate-entry" for d in archive.warnings)


def test_dex_payload_ordering():
    data = build_zip([
        ("classes3.dex", b"three"),
        ("AndroidManifest.xml", b"m"),
        ("classes.dex", b"one"),
        ("classes2.dex", b"two"),
    ])
    assert dex_payloads(open_archive(data)) == [b"one", b"two", b"three"]


def test_dex_payloads_empty():
    archive = open_archive(build_zip([("AndroidManifest.xml", b"m")]))
    assert dex_payloads(archive) == []


def test_dex_name_filter():
    # classes0.dex / classes1.dex / classes02.dex are not multidex names.
    data = build_zip([("classes0.dex", b"a"), ("classes1.dex", b"b"),
                      ("classes02.dex", b"c"), ("classes10.dex", b"d"),
                      ("classes.dex", b"e")])
    assert dex_payloads(open_archive(data)) == [b"e", b"d"]


def test_manifest_payload():
    payload = b"x" * 100
    archive = open_archive(build_zip([("AndroidManifest.xml", payload)]))
    assert manifest_payload(archive) == payload


def test_manifest_missing():
    archive = open_archive(build_zip([("classes.dex", b"d")]))
    with pytest.raises(MissingManifest):
        manifest_payload(archive)


def test_manifest_nested_does_not_count():
    archive = open_archive(build_zip([("res/AndroidManifest.xml", b"nested")]))
    with pytest.raises(MissingManifest):
        manifest_payload(archive)


def test_open_archive_is_pure():
    data = build_zip([("a", b"1"), ("b", b"2")], compress=True)
    assert open_archive(data).entries == open_archive(data).entries
