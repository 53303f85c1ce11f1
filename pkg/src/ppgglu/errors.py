"""Exception hierarchy.

Two families map onto CLI exit codes: :class:`InputError` (bad data, bad
config, bad arguments; exit 2) and :class:`NumericError` (runtime numeric
failure; exit 3).
"""


class PpgGluError(Exception):
    pass


class InputError(PpgGluError, ValueError):
    pass


class NumericError(PpgGluError, ArithmeticError):
    pass


# tensor / autograd
class ShapeMismatch(InputError):
    pass


class InvalidKernel(InputError):
    pass


class InvalidInput(InputError):
    pass


class InvalidBatch(InputError):
    pass


class NotScalar(InputError):
    pass


class MissingGradient(InputError):
    pass


class EmptyInput(InputError):
    pass


# signal conditioning
class NyquistViolation(InputError):
    pass


class SignalTooShort(InputError):
    pass


class InvalidRate(InputError):
    pass


class DegenerateSignal(InputError):
    pass


class InvalidSigma(InputError):
    pass


# dataset
class MissingFile(InputError, FileNotFoundError):
    pass


class MalformedCsv(InputError):
    pass


class LabelOutOfRange(InputError):
    pass


class InvalidBins(InputError):
    pass


class TooFewSamples(InputError):
    pass


# model
class InvalidConfig(InputError):
    pass


class FormatVersionMismatch(InputError):
    pass


class ChecksumMismatch(InputError):
    pass


# training
class EmptySplit(InputError):
    pass


class NonFiniteLoss(NumericError):
    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class FoldFailure(NumericError):
    def __init__(self, fold, cause):
        super().__init__(f"fold {fold} failed: {cause}")
        self.fold = fold
        self.cause = cause


# evaluation
class ZeroReference(InputError):
    pass


class ConstantReference(InputError):
    pass


class OutOfPhysiologicalRange(InputError):
    pass


class UnsupportedFormat(InputError):
    pass
