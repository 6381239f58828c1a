"""Assembled multi-method DEX suite with a known invocation multiset.

Generates bodies mixing all ten plain invoke opcodes, the polymorphic
variants, and the three variable-width payload pseudo-instructions, and
returns the exact multiset of (caller, callee, kind) records the extractor
must produce.
"""

import random

from . import dexbuilder as db

KINDS = ("virtual", "super", "direct", "static", "interface")

TARGETS = [
    db.mref("Landroid/telephony/TelephonyManager;", "getDeviceId", (), "Ljava/lang/String;"),
    db.mref("Landroid/location/LocationManager;", "getLastKnownLocation",
            ("Ljava/lang/String;",), "Landroid/location/Location;"),
    db.mref("Ljava/lang/Object;", "hashCode", (), "I"),
    db.mref("Lcom/vendor/sdk/Api;", "send", ("I", "J"), "Z"),
    db.mref("Landroid/media/AudioRecord;", "startRecording", (), "V"),
]

_POLY_PROTO = (("Ljava/lang/Object;",), "Ljava/lang/Object;")


class BodyBuilder:
    """Linear unit stream with patched-up anchor offsets for payloads."""

    def __init__(self):
        self.units = []
        self._payloads = []  # (anchor_pos, payload_units)

    def raw(self, units):
        self.units.extend(units)

    def anchored(self, make_anchor, payload_units):
        anchor_pos = len(self.units)
        self.raw(make_anchor(0, 0))  # placeholder offset, patched in finish()
        self._payloads.append((anchor_pos, payload_units))

    def finish(self):
        self.raw(db.RETURN_VOID)
        for anchor_pos, payload_units in self._payloads:
            if len(self.units) % 2:  # payloads sit at even code offsets
                self.raw(db.NOP)
            offset = len(self.units) - anchor_pos
            patched = offset & 0xFFFFFFFF
            self.units[anchor_pos + 1] = patched & 0xFFFF
            self.units[anchor_pos + 2] = patched >> 16
            self.raw(payload_units)
        return self.units


def _filler(rng, body):
    choice = rng.randrange(4)
    if choice == 0:
        body.raw(db.NOP)
    elif choice == 1:
        body.raw(db.const4(rng.randrange(8), rng.randrange(8)))
    elif choice == 2:
        body.raw(db.const16(rng.randrange(8), rng.randrange(1 << 16)))
    else:
        body.raw(db.const_wide(0, rng.randrange(1 << 60)))


def _payload(rng, body):
    choice = rng.randrange(3)
    if choice == 0:
        targets = [rng.randrange(100) for _ in range(rng.randint(1, 5))]
        body.anchored(db.packed_switch, db.packed_switch_payload(rng.randrange(50), targets))
    elif choice == 1:
        pairs = [(rng.randrange(100), rng.randrange(100))
                 for _ in range(rng.randint(1, 4))]
        body.anchored(db.sparse_switch, db.sparse_switch_payload(pairs))
    else:
        width = rng.choice((1, 2, 4))
        count = rng.randint(1, 7)
        payload = db.fill_array_data_payload(width, bytes(range(width * count)))
        body.anchored(db.fill_array_data, payload)


def build_suite(seed=1, method_count=60):
    """(dex bytes, expected multiset of (caller, callee str, kind))."""
    rng = random.Random(seed)
    builder = db.DexBuilder()
    expected = []

    classes = [f"Lfix/suite/C{i};" for i in range(8)]
    for i in range(method_count):
        caller = classes[i % len(classes)]
        body = BodyBuilder()
        # Guarantee opcode coverage across the first methods, then randomize.
        if i < len(KINDS):
            forced = [("plain", KINDS[i])]
        elif i < 2 * len(KINDS):
            forced = [("range", KINDS[i - len(KINDS)])]
        elif i == 2 * len(KINDS):
            forced = [("poly", None)]
        elif i == 2 * len(KINDS) + 1:
            forced = [("poly-range", None)]
        else:
            forced = []

        actions = forced + [
            rng.choice([("plain", rng.choice(KINDS)), ("range", rng.choice(KINDS)),
                        ("filler", None), ("payload", None)])
            for _ in range(rng.randint(1, 6))
        ]
        for action, kind in actions:
            _filler(rng, body)
            target = rng.choice(TARGETS)
            if action == "plain":
                regs = list(range(rng.randint(0, 5)))
                body.raw(db.invoke(kind, target, *regs))
                expected.append((caller, _callee_str(target), kind))
            elif action == "range":
                body.raw(db.invoke_range(kind, target, 0, rng.randint(1, 6)))
                expected.append((caller, _callee_str(target), kind + "/range"))
            elif action == "poly":
                body.raw(db.invoke_polymorphic(target, _POLY_PROTO, 0, 1))
                expected.append((caller, _callee_str(target), "virtual"))
            elif action == "poly-range":
                body.raw(db.invoke_polymorphic_range(target, _POLY_PROTO, 0, 2))
                expected.append((caller, _callee_str(target), "virtual/range"))
            elif action == "payload":
                _payload(rng, body)

        builder.add_method(caller, f"m{i}", body.finish(), registers=16)

    builder.version = "038"  # polymorphic invokes need 038+
    return builder.build(), expected


def _callee_str(target):
    cls, name, params, ret = target
    return f"{cls}->{name}({''.join(params)}){ret}"
