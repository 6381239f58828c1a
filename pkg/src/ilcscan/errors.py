"""Exception hierarchy shared across the toolkit."""


class IlcScanError(Exception):
    """Base class for all toolkit errors."""


# --- archive ---

class ArchiveError(IlcScanError):
    pass


class MissingEndOfCentralDirectory(ArchiveError):
    pass


class UnsupportedCompressionMethod(ArchiveError):
    def __init__(self, code, name=""):
        self.code = code
        self.name = name
        super().__init__(f"unsupported compression method {code} for entry {name!r}")


class TruncatedEntry(ArchiveError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"truncated entry {name!r}")


class CrcMismatch(ArchiveError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"CRC mismatch for entry {name!r}")


class UnsupportedFeature(ArchiveError):
    pass


class MissingManifest(ArchiveError):
    pass


# --- dex ---

class DexError(IlcScanError):
    pass


class BadMagic(DexError):
    pass


class UnsupportedVersion(DexError):
    pass


class IndexOutOfBounds(DexError):
    def __init__(self, section, index):
        self.section = section
        self.index = index
        super().__init__(f"index {index} out of bounds in {section}")


class TruncatedSection(DexError):
    def __init__(self, section):
        self.section = section
        super().__init__(f"truncated section {section}")


# --- manifest ---

class ManifestError(IlcScanError):
    pass


class UnrecognizedFormat(ManifestError):
    pass


class StringPoolCorrupt(ManifestError):
    pass


class MissingRootElement(ManifestError):
    pass


# --- analytics ---

class EmptyPopulation(IlcScanError):
    pass


class NoBenefitingFindings(IlcScanError):
    def __init__(self, side=""):
        self.side = side
        super().__init__(f"no benefiting findings{' in ' + side if side else ''}")


class EmptyCorpus(IlcScanError):
    pass


class EmptyIntersection(IlcScanError):
    pass


class NoUsageData(IlcScanError):
    pass
