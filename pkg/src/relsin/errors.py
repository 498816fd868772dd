"""Exception hierarchy.

Every failure raised by the library derives from :class:`RelSinError`, so
callers (the CLI in particular) can map whole families to exit codes.
"""


class RelSinError(Exception):
    """Base class for all library errors."""


class NonFiniteError(RelSinError, ValueError):
    pass


class DimensionMismatchError(RelSinError, ValueError):
    pass


class NotPositiveDefiniteError(RelSinError, ArithmeticError):
    """Raised when a matrix that must be SPD is not.

    ``pivot`` is the 0-based index of the failing Cholesky pivot when the
    failure was detected during factorization, otherwise ``None``.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ConvergenceFailureError(RelSinError, ArithmeticError):
    pass


class BadBlockSizeError(RelSinError, ValueError):
    pass


class NotOrthonormalError(RelSinError, ValueError):
    pass


class NotMOrthonormalError(NotOrthonormalError):
    pass


class CorrectionNotPDError(NotPositiveDefiniteError):
    """I - X~^T dM X~ is not positive definite: perturbation too large."""


class SingularCorrectionError(RelSinError, ArithmeticError):
    pass


class EtaOutOfRangeError(RelSinError, ValueError):
    pass


class EtaTooLargeError(EtaOutOfRangeError):
    pass


class EtaHTooLargeError(EtaOutOfRangeError):
    pass


class EmptySpectrumError(RelSinError, ValueError):
    pass


class BadPError(RelSinError, ValueError):
    pass


class ZeroGapError(RelSinError, ArithmeticError):
    pass


class ZeroChordalGapError(ZeroGapError):
    pass


class DichotomyViolatedError(RelSinError, ValueError):
    pass


class ResonantSpectraError(RelSinError, ArithmeticError):
    pass


class IndefinitePairError(RelSinError, ArithmeticError):
    pass


class EmptyKernelError(RelSinError, ValueError):
    pass


class UnknownExampleError(RelSinError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


# Matrix Market ingestion ---------------------------------------------------


class MtxError(RelSinError, ValueError):
    """Malformed or unsupported Matrix Market input.

    ``line`` is the 1-based line number the problem was detected on.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BadBannerError(MtxError):
    pass


class UnsupportedFormatError(MtxError):
    pass


class IndexOutOfRangeError(MtxError):
    pass


class DuplicateEntryError(MtxError):
    pass


class NotSquareError(MtxError):
    pass


class NotSymmetricError(MtxError):
    pass


class ParseError(MtxError):
    pass


class IoFailureError(RelSinError, OSError):
    pass
