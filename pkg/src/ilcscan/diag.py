"""Structured warning channel.

Library code never prints; it appends Diagnostic records to a caller-supplied
sink, and the CLI decides how to render them.
"""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    context: tuple = ()


class DiagnosticSink:
    """Collects Diagnostic records; safe to pass as an optional sink."""

    def __init__(self):
        self.records: list[Diagnostic] = []

    def warn(self, kind: str, message: str, *context):
        self.records.append(Diagnostic(kind, message, tuple(context)))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def sink_or_new(sink):
    return sink if sink is not None else DiagnosticSink()
