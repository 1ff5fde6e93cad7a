"""Exception types shared across the package."""


class PlacerankError(Exception):
    """Base class for every error raised by this package."""


class MissingFile(PlacerankError):
    pass


class ParseError(PlacerankError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DuplicateId(PlacerankError):
    def __init__(self, id_: str):
        super().__init__(f"duplicate id {id_!r}")
        self.id = id_


class UnknownFrame(PlacerankError):
    def __init__(self, value: str):
        super().__init__(f"unknown coordinate frame {value!r} (expected 'utm' or 'wgs84')")
        self.value = value


class DimMismatch(PlacerankError):
    def __init__(self, message: str, id_: str | None = None, got: int | None = None, want: int | None = None):
        super().__init__(message)
        self.id = id_
        self.got = got
        self.want = want


class CorruptHeader(PlacerankError):
    pass


class EmptyInput(PlacerankError):
    pass


class NonPositiveP(PlacerankError):
    pass


class ZeroVector(PlacerankError):
    pass


class UnsupportedImageType(PlacerankError):
    def __init__(self, ext: str):
        super().__init__(f"unsupported image type {ext!r}")
        self.ext = ext


class NoJsonFound(PlacerankError):
    pass


class EmptyScoreSet(PlacerankError):
    pass


class NoValidSamples(PlacerankError):
    pass


class EmptyCandidateList(PlacerankError):
    pass


class TransportError(PlacerankError):
    pass


class ProtocolError(PlacerankError):
    pass


class AuthError(PlacerankError):
    pass


class FrameMismatch(PlacerankError):
    pass


class UnknownId(PlacerankError):
    def __init__(self, id_: str):
        super().__init__(f"id {id_!r} not found in manifest")
        self.id = id_


class MismatchedConfigs(PlacerankError):
    pass


class ConfigError(PlacerankError):
    pass


class UsageError(PlacerankError):
    pass
