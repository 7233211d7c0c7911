"""Exception types shared across the package."""


class D3StereoError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(D3StereoError):
    pass


class DimensionMismatch(D3StereoError):
    pass


class TooSmallForDepth(D3StereoError):
    pass


class InsufficientCandidates(D3StereoError):
    pass


class DiffusionDiverged(D3StereoError):
    pass


class PatchOutOfBounds(D3StereoError):
    pass


class InsufficientSeeds(D3StereoError):
    pass


class DegenerateFit(D3StereoError):
    pass


class NoValidPixels(D3StereoError):
    pass


class ImageTooSmall(D3StereoError):
    pass


class NoValidWindows(D3StereoError):
    pass


# --- file format errors -------------------------------------------------

class FormatError(D3StereoError):
    """Base class for file parsing/serialization failures."""


class MalformedHeader(FormatError):
    pass


class MalformedInput(FormatError):
    pass


class UnexpectedEof(FormatError):
    pass


class TrailingGarbage(FormatError):
    pass


class ColorPfmUnsupported(FormatError):
    pass


class IoFailure(FormatError):
    pass


class BadMagic(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class NonHalvingResolution(FormatError):
    pass


class NonFiniteFeature(FormatError):
    pass


class UnsupportedFormat(FormatError):
    pass


class DecodeError(FormatError):
    pass
