"""Exception types shared across the package.

Grouping: FormatError covers malformed files and streams; InvalidParams
covers bad arguments to library calls; the rest are one-off conditions
named after the contract they enforce.
"""


class RandlabError(Exception):
    """Base class for errors raised by this package."""


class InvalidParams(RandlabError, ValueError):
    """An argument is outside its documented domain."""


class InvalidWidth(InvalidParams):
    """Requested integer width is outside 1..64 bits."""


class InvalidBounds(InvalidParams):
    """Bounded draw called with lo >= hi or non-finite bounds."""


class InvalidConfig(InvalidParams):
    """A model configuration violates its invariants."""


class ReplayExhausted(RandlabError):
    """A replay source was asked for more bits than its recording holds."""


class NotNormalized(RandlabError):
    """A qubit state's squared amplitudes do not sum to 1 within tolerance."""


class TooFewBits(RandlabError):
    """A statistical test was given fewer bits than its minimum."""


class BadLag(InvalidParams):
    """Serial-correlation lag is non-positive or too large for the stream."""


class GatePrecondition(RandlabError):
    """A gated statistical test ran after its gating test failed."""


class FormatError(RandlabError):
    """A file or stream does not match the expected on-disk format."""


class ParseError(FormatError):
    """A CSV cell failed to parse as a finite real.

    Carries 1-based file coordinates in `row` and `col`.
    """

    def __init__(self, row, col, message):
        super().__init__(f"row {row}, column {col}: {message}")
        self.row = row
        self.col = col


class MissingLabelColumn(FormatError):
    """The named label column is absent from the CSV header."""


class EmptyFile(FormatError):
    """A data file contains no data rows."""


class BadMagic(FormatError):
    """An IDX file's magic number is wrong."""


class CountMismatch(FormatError):
    """Image and label IDX files disagree on the item count."""


class TruncatedFile(FormatError):
    """A binary file is shorter than its header promises."""


class ClassTooSmall(RandlabError):
    """A stratified operation needs at least 2 rows in every class."""


class KTooLarge(InvalidParams):
    """More cross-validation folds requested than rows available."""


class EmptyDataset(RandlabError):
    """An operation requiring data received zero rows."""


class WidthMismatch(InvalidParams):
    """A row's feature count differs from the model's training width."""


class NonFiniteLoss(RandlabError):
    """Training produced a non-finite loss or parameter (divergence)."""


class EmptyInput(InvalidParams):
    """An aggregate was asked for statistics of an empty collection."""
