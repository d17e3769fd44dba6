"""
Error types
Every error carries the process exit code the CLI should return
"""

from config import EXIT_CODES


class EAGError(Exception):
    """Base class for all corpus-builder failures"""

    exit_code = EXIT_CODES["data"]


class UsageError(EAGError):
    """Bad flags, bad config values, unmet preconditions on arguments"""

    exit_code = EXIT_CODES["usage"]


class DataError(EAGError):
    """Input data is unusable"""

    exit_code = EXIT_CODES["data"]


class LineCountMismatchError(DataError):
    def __init__(self, pivot_path, pivot_count, other_path, other_count):
        self.pivot_count = pivot_count
        self.other_count = other_count
        super().__init__(
            f"line count mismatch: {pivot_path} has {pivot_count} lines, "
            f"{other_path} has {other_count} lines"
        )


class DecodeError(DataError):
    def __init__(self, path, line_number, reason):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}: line {line_number} is not valid UTF-8 ({reason})")


class LanguageMismatchError(DataError):
    pass


class EmptyCorpusError(DataError):
    pass


class VocabularyError(DataError):
    pass


class OracleSizeError(DataError):
    pass


class TransportError(EAGError):
    """Generator service unreachable, timed out, or retries exhausted"""

    exit_code = EXIT_CODES["transport"]


class ProtocolError(TransportError):
    """Generator answered, but the answer breaks the wire protocol"""

    def __init__(self, message, request_id=None):
        self.request_id = request_id
        super().__init__(message)


class StageError(EAGError):
    """A pipeline stage failed; carries where to resume from"""

    def __init__(self, stage, cause, pair=None, checkpoint=None):
        self.stage = stage
        self.pair = pair
        self.checkpoint = checkpoint
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_CODES["data"])
        where = f" for {pair}" if pair else ""
        resume = f" (resume after candidate {checkpoint})" if checkpoint is not None else ""
        super().__init__(f"stage '{stage}' failed{where}: {cause}{resume}")
