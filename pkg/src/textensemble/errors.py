"""Exception hierarchy shared by every module of the toolkit."""


class TextEnsembleError(Exception):
    """Base class; the CLI maps any subclass to exit code 1."""


class EmptyCorpus(TextEnsembleError):
    pass


class EmptyVocabulary(TextEnsembleError):
    pass


class MalformedLine(TextEnsembleError):
    def __init__(self, line_no: int, reason: str = "expected 'label<TAB>text'"):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class DimensionMismatch(TextEnsembleError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class InvalidPartitionCount(TextEnsembleError):
    pass


class ZeroVector(TextEnsembleError):
    pass


class SingleClassCorpus(TextEnsembleError):
    pass


class InvalidParams(TextEnsembleError):
    pass


class LengthMismatch(TextEnsembleError):
    pass


class WrongArity(TextEnsembleError):
    pass


class InvalidDistribution(TextEnsembleError):
    pass


class EmptyTestSet(TextEnsembleError):
    pass


class InsufficientClassCount(TextEnsembleError):
    pass


class InvalidSpec(TextEnsembleError):
    pass


class ArchiveError(TextEnsembleError):
    """Unreadable, corrupted or version-incompatible model archive."""
