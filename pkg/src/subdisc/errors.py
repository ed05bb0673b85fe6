"""Exception hierarchy and process exit codes."""


class SubdiscError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SubdiscError):
    """Invalid or inconsistent configuration."""


class DataError(SubdiscError):
    """Malformed or inconsistent input data (manifests, labels, items)."""


class CodecError(DataError):
    """Corrupt or truncated binary feature/model file."""


class DimensionError(SubdiscError):
    """Shape or dimensionality mismatch between arrays/models."""


class StageError(SubdiscError):
    """A pipeline stage failed."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_IO = 4
