"""DEX container parser and invocation extractor.

Parses the string/type/proto/method tables and every concrete method body,
then walks instruction streams to collect method invocations. Only the
invoke opcodes are decoded semantically; everything else is skipped using a
per-opcode code-unit width table, with the three variable-width payload
pseudo-instructions tracked as data regions declared by their anchors.
"""

import struct
from dataclasses import dataclass

from .diag import DiagnosticSink, sink_or_new
from .errors import BadMagic, IndexOutOfBounds, TruncatedSection, UnsupportedVersion

SUPPORTED_VERSIONS = ("035", "037", "038", "039")

NO_INDEX = 0xFFFFFFFF


@dataclass(frozen=True)
class MethodRef:
    defining_class: str
    name: str
    parameter_descriptors: tuple
    return_descriptor: str

    @property
    def descriptor(self) -> str:
        return "(" + "".join(self.parameter_descriptors) + ")" + self.return_descriptor

    def __str__(self):
        return f"{self.defining_class}->{self.name}{self.descriptor}"


@dataclass(frozen=True)
class MethodCode:
    method_index: int
    registers_size: int
    insns: bytes        # raw 16-bit code units, little endian
    insns_size: int     # declared length in units


@dataclass(frozen=True)
class ClassDef:
    descriptor: str
    method_bodies: tuple  # of MethodCode


@dataclass(frozen=True)
class DexFile:
    version: str
    string_pool: tuple
    type_ids: tuple       # descriptor strings
    proto_ids: tuple      # of (parameter_descriptors tuple, return_descriptor)
    method_ids: tuple     # of MethodRef
    class_defs: tuple     # of ClassDef


@dataclass(frozen=True)
class InvocationRecord:
    caller_class: str
    callee: MethodRef
    invoke_kind: str


_INVOKE_KINDS = {
    0x6E: "virtual", 0x6F: "super", 0x70: "direct", 0x71: "static", 0x72: "interface",
    0x74: "virtual/range", 0x75: "super/range", 0x76: "direct/range",
    0x77: "static/range", 0x78: "interface/range",
    # invoke-polymorphic resolves a plain method_id; widened to virtual.
    0xFA: "virtual", 0xFB: "virtual/range",
}

_ANCHOR_OPS = frozenset({0x26, 0x2B, 0x2C})  # fill-array-data, packed-switch, sparse-switch


def _build_width_table():
    """Code-unit widths per opcode; 0 marks opcodes we refuse to walk past."""
    width = [0] * 256

    def fill(first, last, units):
        for op in range(first, last + 1):
            width[op] = units

    fill(0x00, 0x0D, 1)
    for op in (0x02, 0x05, 0x08):
        width[op] = 2
    for op in (0x03, 0x06, 0x09):
        width[op] = 3
    fill(0x0E, 0x12, 1)
    width[0x13] = 2
    width[0x14] = 3
    width[0x15] = 2
    width[0x16] = 2
    width[0x17] = 3
    width[0x18] = 5
    width[0x19] = 2
    width[0x1A] = 2
    width[0x1B] = 3
    width[0x1C] = 2
    width[0x1D] = 1
    width[0x1E] = 1
    fill(0x1F, 0x20, 2)
    width[0x21] = 1
    fill(0x22, 0x23, 2)
    fill(0x24, 0x26, 3)
    width[0x27] = 1
    width[0x28] = 1
    width[0x29] = 2
    width[0x2A] = 3
    fill(0x2B, 0x2C, 3)
    fill(0x2D, 0x31, 2)
    fill(0x32, 0x3D, 2)
    fill(0x44, 0x6D, 2)
    fill(0x6E, 0x72, 3)
    fill(0x74, 0x78, 3)
    fill(0x7B, 0x8F, 1)
    fill(0x90, 0xAF, 2)
    fill(0xB0, 0xCF, 1)
    fill(0xD0, 0xD7, 2)
    fill(0xD8, 0xE2, 2)
    width[0xFA] = 4
    width[0xFB] = 4
    width[0xFC] = 3
    width[0xFD] = 3
    width[0xFE] = 2
    width[0xFF] = 2
    return tuple(width)


OPCODE_WIDTH = _build_width_table()


def decode_mutf8(raw: bytes) -> str:
    """Decode modified UTF-8 (nulls as C0 80, surrogates encoded separately)."""
    units = []
    i = 0
    n = len(raw)
    while i < n:
        b0 = raw[i]
        if b0 < 0x80:
            units.append(b0)
            i += 1
        elif b0 >> 5 == 0b110:
            if i + 1 >= n:
                raise TruncatedSection("string_data")
            units.append(((b0 & 0x1F) << 6) | (raw[i + 1] & 0x3F))
            i += 2
        elif b0 >> 4 == 0b1110:
            if i + 2 >= n:
                raise TruncatedSection("string_data")
            units.append(((b0 & 0x0F) << 12) | ((raw[i + 1] & 0x3F) << 6) | (raw[i + 2] & 0x3F))
            i += 3
        else:
            raise TruncatedSection("string_data")
    return b"".join(struct.pack(">H", u) for u in units).decode("utf-16-be", "surrogatepass")


def _read_uleb128(data: bytes, pos: int):
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise TruncatedSection("uleb128")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 35:
            raise TruncatedSection("uleb128")


def parse_dex(data: bytes) -> DexFile:
    """Parse DEX bytes into a fully indexed, immutable DexFile."""
    if len(data) < 0x70:
        raise TruncatedSection("header")
    if data[0:4] != b"dex\n":
        raise BadMagic("not a DEX file")
    if data[7:8] != b"\x00":
        raise BadMagic("malformed DEX magic")
    version = data[4:7].decode("ascii", "replace")
    if version not in SUPPORTED_VERSIONS:
        raise UnsupportedVersion(f"DEX version {version!r}")

    (string_ids_size, string_ids_off, type_ids_size, type_ids_off,
     proto_ids_size, proto_ids_off, field_ids_size, field_ids_off,
     method_ids_size, method_ids_off, class_defs_size,
     class_defs_off) = struct.unpack_from("<12I", data, 0x38)

    def section(name, off, count, item_size):
        if count and (off + count * item_size > len(data) or off < 0x70):
            raise TruncatedSection(name)

    section("string_ids", string_ids_off, string_ids_size, 4)
    section("type_ids", type_ids_off, type_ids_size, 4)
    section("proto_ids", proto_ids_off, proto_ids_size, 12)
    section("field_ids", field_ids_off, field_ids_size, 8)
    section("method_ids", method_ids_off, method_ids_size, 8)
    section("class_defs", class_defs_off, class_defs_size, 32)

    strings = []
    for i in range(string_ids_size):
        off = struct.unpack_from("<I", data, string_ids_off + 4 * i)[0]
        if off >= len(data):
            raise TruncatedSection("string_data")
        _, pos = _read_uleb128(data, off)
        end = data.find(b"\x00", pos)
        if end < 0:
            raise TruncatedSection("string_data")
        strings.append(decode_mutf8(data[pos:end]))
    strings = tuple(strings)

    type_descriptors = []
    for i in range(type_ids_size):
        idx = struct.unpack_from("<I", data, type_ids_off + 4 * i)[0]
        if idx >= len(strings):
            raise IndexOutOfBounds("type_ids", i)
        type_descriptors.append(strings[idx])
    type_descriptors = tuple(type_descriptors)

    protos = []
    for i in range(proto_ids_size):
        _, return_idx, params_off = struct.unpack_from("<3I", data, proto_ids_off + 12 * i)
        if return_idx >= len(type_descriptors):
            raise IndexOutOfBounds("proto_ids", i)
        params = ()
        if params_off:
            if params_off + 4 > len(data):
                raise TruncatedSection("type_list")
            count = struct.unpack_from("<I", data, params_off)[0]
            if params_off + 4 + 2 * count > len(data):
                raise TruncatedSection("type_list")
            indices = struct.unpack_from(f"<{count}H", data, params_off + 4)
            for idx in indices:
                if idx >= len(type_descriptors):
                    raise IndexOutOfBounds("type_list", i)
            params = tuple(type_descriptors[idx] for idx in indices)
        protos.append((params, type_descriptors[return_idx]))
    protos = tuple(protos)

    method_ids = []
    for i in range(method_ids_size):
        class_idx, proto_idx, name_idx = struct.unpack_from("<HHI", data, method_ids_off + 8 * i)
        if class_idx >= len(type_descriptors):
            raise IndexOutOfBounds("method_ids", i)
        if proto_idx >= len(protos):
            raise IndexOutOfBounds("method_ids", i)
        if name_idx >= len(strings):
            raise IndexOutOfBounds("method_ids", i)
        params, ret = protos[proto_idx]
        method_ids.append(MethodRef(type_descriptors[class_idx], strings[name_idx], params, ret))
    method_ids = tuple(method_ids)

    class_defs = []
    for i in range(class_defs_size):
        class_idx = struct.unpack_from("<I", data, class_defs_off + 32 * i)[0]
        class_data_off = struct.unpack_from("<I", data, class_defs_off + 32 * i + 24)[0]
        if class_idx >= len(type_descriptors):
            raise IndexOutOfBounds("class_defs", i)
        bodies = []
        if class_data_off:
            bodies = _parse_class_data(data, class_data_off, len(method_ids))
        class_defs.append(ClassDef(type_descriptors[class_idx], tuple(bodies)))

    return DexFile(version, strings, type_descriptors, protos, method_ids, tuple(class_defs))


def _parse_class_data(data, off, method_count):
    pos = off
    static_fields, pos = _read_uleb128(data, pos)
    instance_fields, pos = _read_uleb128(data, pos)
    direct_methods, pos = _read_uleb128(data, pos)
    virtual_methods, pos = _read_uleb128(data, pos)
    for _ in range(static_fields + instance_fields):
        _, pos = _read_uleb128(data, pos)  # field_idx_diff
        _, pos = _read_uleb128(data, pos)  # access_flags

    bodies = []
    for group_size in (direct_methods, virtual_methods):
        method_idx = 0
        for _ in range(group_size):
            diff, pos = _read_uleb128(data, pos)
            method_idx += diff
            _, pos = _read_uleb128(data, pos)  # access_flags
            code_off, pos = _read_uleb128(data, pos)
            if method_idx >= method_count:
                raise IndexOutOfBounds("class_data", method_idx)
            if code_off:
                bodies.append(_parse_code_item(data, code_off, method_idx))
    return bodies


def _parse_code_item(data, off, method_idx):
    if off + 16 > len(data):
        raise TruncatedSection("code_item")
    registers_size = struct.unpack_from("<H", data, off)[0]
    insns_size = struct.unpack_from("<I", data, off + 12)[0]
    end = off + 16 + 2 * insns_size
    if end > len(data):
        raise TruncatedSection("code_item")
    return MethodCode(method_idx, registers_size, data[off + 16:end], insns_size)


def _payload_width(units, pos, size):
    """Width in units of a payload pseudo-instruction at pos, or None."""
    ident = units[pos]
    if ident == 0x0100:  # packed-switch-payload
        if pos + 2 > size:
            return None
        return units[pos + 1] * 2 + 4
    if ident == 0x0200:  # sparse-switch-payload
        if pos + 2 > size:
            return None
        return units[pos + 1] * 4 + 2
    if ident == 0x0300:  # fill-array-data-payload
        if pos + 4 > size:
            return None
        element_width = units[pos + 1]
        count = units[pos + 2] | (units[pos + 3] << 16)
        return (count * element_width + 1) // 2 + 4
    return None


def extract_invocations(dex: DexFile,
                        warnings: DiagnosticSink | None = None) -> list:
    """Collect one InvocationRecord per invoke instruction, in stream order.

    An unknown opcode or a misaligned stream stops that body only; records
    extracted so far are kept and a warning is recorded.
    """
    warnings = sink_or_new(warnings)
    records = []
    for class_def in dex.class_defs:
        for body in class_def.method_bodies:
            _walk_body(dex, class_def.descriptor, body, records, warnings)
    return records


def _walk_body(dex, caller_class, body, records, warnings):
    size = body.insns_size
    units = struct.unpack(f"<{size}H", body.insns) if size else ()
    payload_starts = set()
    pos = 0
    while pos < size:
        unit = units[pos]
        op = unit & 0xFF
        high = unit >> 8

        if op == 0x00 and high in (1, 2, 3):
            # Payload data region; normally reached via a recorded anchor.
            width = _payload_width(units, pos, size)
            if width is None or pos + width > size:
                warnings.warn("misaligned-stream",
                              f"truncated payload in {caller_class} at unit {pos}",
                              caller_class, pos)
                return
            if pos not in payload_starts:
                warnings.warn("orphan-payload",
                              f"payload without anchor in {caller_class} at unit {pos}",
                              caller_class, pos)
            pos += width
            continue

        width = OPCODE_WIDTH[op]
        if width == 0:
            warnings.warn("unknown-opcode",
                          f"unknown opcode 0x{op:02x} in {caller_class} at unit {pos}",
                          op, caller_class, pos)
            return
        if pos + width > size:
            warnings.warn("misaligned-stream",
                          f"instruction overruns body in {caller_class} at unit {pos}",
                          caller_class, pos)
            return

        if op in _INVOKE_KINDS:
            method_idx = units[pos + 1]
            if method_idx >= len(dex.method_ids):
                raise IndexOutOfBounds("method_ids", method_idx)
            records.append(InvocationRecord(caller_class, dex.method_ids[method_idx],
                                            _INVOKE_KINDS[op]))
        elif op in (0xFC, 0xFD):
            # invoke-custom targets a call site, not a method_id; no record.
            warnings.warn("invoke-custom-skipped",
                          f"invoke-custom in {caller_class} at unit {pos}",
                          caller_class, pos)
        elif op in _ANCHOR_OPS:
            offset = units[pos + 1] | (units[pos + 2] << 16)
            if offset >= 1 << 31:
                offset -= 1 << 32
            target = pos + offset
            if 0 <= target < size:
                payload_starts.add(target)

        pos += width

    if pos != size:
        warnings.warn("misaligned-stream",
                      f"walk ended at unit {pos} of {size} in {caller_class}",
                      caller_class, pos)


def invocation_csv_rows(records):
    """Rows for the CLI dump: caller, callee class/name/descriptor, kind."""
    for record in records:
        yield (record.caller_class, record.callee.defining_class, record.callee.name,
               record.callee.descriptor, record.invoke_kind)
