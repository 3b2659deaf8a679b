"""Exception hierarchy shared across the package."""


class SkipgramMCIError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SkipgramMCIError, ValueError):
    """A transcript could not be parsed.

    ``line`` is the 1-based line number of the offending line, or None when
    the problem concerns the file as a whole.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ManifestError(SkipgramMCIError, ValueError):
    pass


class CorpusError(SkipgramMCIError):
    pass


class TrainingError(SkipgramMCIError, ValueError):
    pass


class ParticipantOverlapError(SkipgramMCIError, ValueError):
    def __init__(self, shared):
        self.shared = sorted(shared)
        super().__init__(
            "participants present in both corpora: " + ", ".join(self.shared)
        )
