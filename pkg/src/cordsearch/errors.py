"""Exception types shared across the toolkit."""


class CordSearchError(Exception):
    """Base class for all toolkit errors."""


# corpus
class MissingColumn(CordSearchError):
    pass


class DuplicateDocId(CordSearchError):
    pass


class MalformedRow(CordSearchError):
    pass


# index
class EmptyCorpus(CordSearchError):
    pass


class DuplicateSurrogateId(CordSearchError):
    pass


class IoFailure(CordSearchError):
    pass


class FormatVersionMismatch(CordSearchError):
    pass


# query
class MalformedXml(CordSearchError):
    pass


class MissingField(CordSearchError):
    pass


# retrieval
class TokenizerMismatch(CordSearchError):
    pass


class UnknownDocId(CordSearchError):
    pass


class DimensionMismatch(CordSearchError):
    pass


class MissingVector(CordSearchError):
    pass


# fusion
class EmptyRunList(CordSearchError):
    pass


class TopicSetMismatch(CordSearchError):
    pass


class WrongRunCount(CordSearchError):
    pass


class WrongGroupShape(CordSearchError):
    pass


class TooFewRuns(CordSearchError):
    pass


class InvalidFraction(CordSearchError):
    pass


# run/qrels files
class MalformedLine(CordSearchError):
    pass


class RankGap(CordSearchError):
    pass


class InvalidGrade(CordSearchError):
    pass


class DuplicateJudgment(CordSearchError):
    pass


class NoOverlap(CordSearchError):
    pass


# cli / pipeline
class ConfigInvalid(CordSearchError):
    pass


class CapExceededWarning(UserWarning):
    """A run holds more entries per topic than the submission cap allows."""
