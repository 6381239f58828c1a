"""Android manifest extraction.

Handles both packaged binary XML (AXML) and plaintext XML sources and
yields the same ManifestInfo for either form: package name, declared
permissions, and the SDK-version attributes.
"""

import struct
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum

from .errors import MissingRootElement, StringPoolCorrupt, UnrecognizedFormat

ANDROID_NS = "http://schemas.android.com/apk/res/android"

_RES_XML_TYPE = 0x0003
_RES_STRING_POOL_TYPE = 0x0001
_RES_XML_START_ELEMENT = 0x0102
_RES_XML_END_ELEMENT = 0x0103

_UTF8_FLAG = 1 << 8

_TYPE_REFERENCE = 0x01
_TYPE_STRING = 0x03
_TYPE_INT_DEC = 0x10
_TYPE_INT_HEX = 0x11

_PERMISSION_TAGS = ("uses-permission", "uses-permission-sdk-23")


class SdkBucket(Enum):
    PRE_23 = "pre_23"
    AT_LEAST_23 = "at_least_23"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ManifestInfo:
    package: str
    declared_permissions: frozenset
    target_sdk: int | None = None
    min_sdk: int | None = None


def target_sdk_bucket(info: ManifestInfo) -> SdkBucket:
    """Runtime-permission eligibility split at targetSdkVersion 23."""
    if info.target_sdk is None:
        return SdkBucket.UNKNOWN
    return SdkBucket.AT_LEAST_23 if info.target_sdk >= 23 else SdkBucket.PRE_23


def parse_manifest(data: bytes, include_sdk23: bool = True) -> ManifestInfo:
    """Parse binary or plaintext manifest bytes.

    include_sdk23 controls whether uses-permission-sdk-23 declarations are
    merged into the permission set (on by default; they are granted on
    modern devices).
    """
    if len(data) >= 4 and struct.unpack_from("<H", data)[0] == _RES_XML_TYPE:
        elements = _parse_axml(data)
    else:
        elements = _parse_plaintext(data)
    return _collect(elements, include_sdk23)


def _collect(elements, include_sdk23):
    """elements: iterable of (tag, {attr_name: value}) in document order."""
    package = None
    saw_root = False
    permissions = set()
    target_sdk = None
    min_sdk = None
    permission_tags = _PERMISSION_TAGS if include_sdk23 else _PERMISSION_TAGS[:1]

    for tag, attrs in elements:
        if not saw_root:
            if tag != "manifest":
                raise MissingRootElement(f"root element is {tag!r}, expected 'manifest'")
            saw_root = True
            package = attrs.get("package", "")
        if tag in permission_tags:
            name = attrs.get("name")
            if name:
                name = name.strip()
                if name:
                    permissions.add(name)
        elif tag == "uses-sdk":
            target_sdk = _as_sdk_int(attrs.get("targetSdkVersion"))
            min_sdk = _as_sdk_int(attrs.get("minSdkVersion"))

    if not saw_root:
        raise MissingRootElement("no manifest element found")
    return ManifestInfo(package or "", frozenset(permissions), target_sdk, min_sdk)


def _as_sdk_int(value):
    # Resource references (and anything non-decimal) resolve to unknown.
    if value is None or isinstance(value, int):
        return value
    try:
        return int(value.strip())
    except ValueError:
        return None


# --- plaintext form ---

def _parse_plaintext(data: bytes):
    text = data.decode("utf-8-sig", "replace")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise UnrecognizedFormat(f"not binary XML and not parseable XML: {exc}") from None

    def attrs_of(element):
        attrs = {}
        for key, value in element.attrib.items():
            if key.startswith("{"):
                ns, _, local = key[1:].partition("}")
                if ns == ANDROID_NS:
                    attrs[local] = value
            else:
                attrs[key] = value
        return attrs

    yield root.tag, attrs_of(root)
    for element in root.iter():
        if element is not root:
            yield element.tag, attrs_of(element)


# --- binary form ---

def _parse_axml(data: bytes):
    if len(data) < 8:
        raise UnrecognizedFormat("binary XML too short")
    doc_size = struct.unpack_from("<I", data, 4)[0]
    doc_size = min(doc_size, len(data))

    strings = None
    elements = []
    pos = 8
    while pos + 8 <= doc_size:
        chunk_type, header_size = struct.unpack_from("<HH", data, pos)
        chunk_size = struct.unpack_from("<I", data, pos + 4)[0]
        if chunk_size < 8 or pos + chunk_size > doc_size:
            raise UnrecognizedFormat("binary XML chunk overruns document")
        if chunk_type == _RES_STRING_POOL_TYPE:
            strings = _parse_string_pool(data, pos, chunk_size)
        elif chunk_type == _RES_XML_START_ELEMENT:
            if strings is None:
                raise StringPoolCorrupt("element chunk before string pool")
            elements.append(_parse_start_element(data, pos, header_size, strings))
        pos += chunk_size

    if strings is None:
        raise StringPoolCorrupt("no string pool chunk")
    return elements


def _pool_string(strings, index):
    if index == 0xFFFFFFFF:
        return None
    if index >= len(strings):
        raise StringPoolCorrupt(f"string index {index} out of range")
    return strings[index]


def _parse_string_pool(data, pos, chunk_size):
    if chunk_size < 28:
        raise StringPoolCorrupt("string pool header truncated")
    count, _style_count, flags, strings_start, _styles_start = struct.unpack_from(
        "<5I", data, pos + 8)
    utf8 = bool(flags & _UTF8_FLAG)
    if pos + 28 + 4 * count > pos + chunk_size:
        raise StringPoolCorrupt("string pool offsets truncated")
    offsets = struct.unpack_from(f"<{count}I", data, pos + 28)
    base = pos + strings_start

    strings = []
    for off in offsets:
        start = base + off
        if start >= pos + chunk_size:
            raise StringPoolCorrupt("string data out of bounds")
        try:
            if utf8:
                strings.append(_read_utf8_string(data, start))
            else:
                strings.append(_read_utf16_string(data, start))
        except (struct.error, IndexError, UnicodeDecodeError) as exc:
            raise StringPoolCorrupt(str(exc)) from None
    return strings


def _read_utf16_string(data, pos):
    length = struct.unpack_from("<H", data, pos)[0]
    if length & 0x8000:  # long form: high word first
        length = ((length & 0x7FFF) << 16) | struct.unpack_from("<H", data, pos + 2)[0]
        pos += 2
    end = pos + 2 + 2 * length
    return data[pos + 2:end].decode("utf-16-le")


def _read_utf8_string(data, pos):
    # Two lengths: UTF-16 unit count, then byte count; each 1 or 2 bytes.
    def read_len(pos):
        value = data[pos]
        if value & 0x80:
            return ((value & 0x7F) << 8) | data[pos + 1], pos + 2
        return value, pos + 1

    _, pos = read_len(pos)
    byte_len, pos = read_len(pos)
    return data[pos:pos + byte_len].decode("utf-8")


def _parse_start_element(data, pos, header_size, strings):
    body = pos + header_size
    _ns, name_idx, attr_start, attr_size, attr_count = struct.unpack_from(
        "<IIHHH", data, body)
    tag = _pool_string(strings, name_idx)
    if tag is None:
        raise StringPoolCorrupt("element with no name")

    attrs = {}
    attr_pos = body + attr_start
    for _ in range(attr_count):
        _attr_ns, attr_name_idx, raw_value_idx = struct.unpack_from("<III", data, attr_pos)
        data_type = data[attr_pos + 15]
        typed_data = struct.unpack_from("<I", data, attr_pos + 16)[0]
        name = _pool_string(strings, attr_name_idx)
        if name is not None:
            attrs[name] = _attribute_value(strings, raw_value_idx, data_type, typed_data)
        attr_pos += attr_size
    return tag, attrs


def _attribute_value(strings, raw_value_idx, data_type, typed_data):
    if data_type == _TYPE_STRING:
        return _pool_string(strings, typed_data)
    if data_type in (_TYPE_INT_DEC, _TYPE_INT_HEX):
        return typed_data - (1 << 32) if typed_data >= 1 << 31 else typed_data
    if data_type == _TYPE_REFERENCE:
        return f"@{typed_data:#010x}"
    raw = _pool_string(strings, raw_value_idx)
    return raw if raw is not None else str(typed_data)
