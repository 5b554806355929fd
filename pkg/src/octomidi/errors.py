"""Exception hierarchy shared by all octomidi modules."""


class OctomidiError(Exception):
    """Base class for all octomidi errors."""


class MalformedFileError(OctomidiError):
    """Raised when MIDI bytes cannot be parsed (bad magic, truncated chunk, ...)."""


class UnsupportedFormatError(OctomidiError):
    """Raised for SMF format 2 files and SMPTE time divisions."""


class UnsupportedTimeSigError(OctomidiError):
    """Raised when a time signature falls outside the token vocabulary."""


class BarOverflowError(OctomidiError):
    """Raised when a note lands in a bar index beyond the vocabulary range."""


class MaskedTokenPresentError(OctomidiError):
    """Raised when decoding a sequence that still contains MASK ids."""


class OutOfVocabularyError(OctomidiError):
    """Raised when an id or value is outside its field vocabulary."""


class MethodNotAllowedError(OctomidiError):
    """Raised when a corruption is combined with a selection method it does not allow."""


class EmptySequenceError(OctomidiError):
    """Raised when an operation requires at least one musical token."""


class AlignmentMismatchError(OctomidiError):
    """Raised when a label source does not align 1:1 with the tokens."""


class TooFewBarsError(OctomidiError):
    """Raised when a metric requires more non-empty bars than the input has."""


class AllEmptyError(OctomidiError):
    """Raised when every histogram passed to an entropy computation is empty."""


class DimensionMismatchError(OctomidiError):
    """Raised when two Gaussian summaries have different dimensions."""


class DegenerateCountError(OctomidiError):
    """Raised when a Gaussian summary was fitted on fewer than two samples."""


class FormatError(OctomidiError):
    """Raised when a token, pair, or label file does not follow the wire format."""
