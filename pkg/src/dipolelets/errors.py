"""Exception hierarchy shared by the library and the CLI."""


class DipoleletError(Exception):
    """Base class. ``code`` is a stable machine-readable identifier."""

    code = "error"


class ConfigurationError(DipoleletError, ValueError):
    code = "configuration"


class ConstructionError(DipoleletError):
    """A window family could not be built (e.g. a gap between angular windows)."""

    code = "construction"


class NumericalConsistencyError(DipoleletError, ArithmeticError):
    code = "numerical_consistency"


class DivergenceError(DipoleletError, ArithmeticError):
    code = "divergence"


class VolumeFileError(DipoleletError, IOError):
    code = "volume_file"


class MalformedHeaderError(VolumeFileError):
    code = "malformed_header"


class TruncatedPayloadError(VolumeFileError):
    code = "truncated_payload"


class VersionMismatchError(VolumeFileError):
    code = "version_mismatch"


class UnsupportedFeatureError(VolumeFileError):
    """Raised by the NIfTI reader; ``field`` names the offending header field."""

    code = "unsupported_feature"

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
