"""Exception types shared across the package."""


class PerturbMineError(Exception):
    """Base class for every error this package raises deliberately."""


class EncodingFailure(PerturbMineError):
    """A word cannot be phonetically encoded."""


class EmptyAfterFold(EncodingFailure):
    """Visual folding left no letters to encode."""


class IoFailure(PerturbMineError):
    """An input or output file could not be read or written."""


class FormatError(PerturbMineError):
    """A file does not match its expected on-disk format."""


class ChecksumMismatch(FormatError):
    """Stored checksum does not match the file body."""


class EmptyGold(PerturbMineError):
    """A gold set required for scoring is empty."""


class ScorerFailure(PerturbMineError):
    """A scorer could not produce probabilities."""


class TransportFailure(ScorerFailure):
    """A remote scorer endpoint could not be reached."""


class TimeoutFailure(ScorerFailure):
    """A remote scorer did not answer in time."""


class MalformedResponse(ScorerFailure):
    """A remote scorer answered with an invalid payload."""


class NotCorrectlyPredicted(PerturbMineError):
    """The scorer already mispredicts the unperturbed input."""


class DegenerateData(PerturbMineError):
    """Training data does not contain at least two labels."""


class NoValidExamples(PerturbMineError):
    """No input survived the correct-prediction precondition."""


class EmptyInput(PerturbMineError):
    """An operation received an empty collection it cannot score."""
