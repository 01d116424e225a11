# Copyright (c) 2026, shrinklasso contributors. See LICENSE.txt for details.

"""
Exception hierarchy. ``InputError`` subclasses describe bad input that the
caller can fix (the CLI exits with status 2), ``NumericalError`` subclasses
describe numerical failures on otherwise valid input (exit status 3).
"""


class ShrinkLassoError(Exception):
    exit_code = 3


class InputError(ShrinkLassoError, ValueError):
    exit_code = 2


class NumericalError(ShrinkLassoError, ArithmeticError):
    exit_code = 3


class InvalidParameter(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class SchemaError(InputError):
    pass


class EmptyFile(InputError):
    pass


class MissingColumn(InputError):
    def __init__(self, column):
        super(MissingColumn, self).__init__(
            "column %r not found in header" % (column,)
        )
        self.column = column


class NonNumericCell(InputError):
    def __init__(self, row, column, value):
        super(NonNumericCell, self).__init__(
            "non-numeric cell %r at row %d, column %r" % (value, row, column)
        )
        self.row = row
        self.column = column
        self.value = value


class RankDeficientRestriction(InputError):
    pass


class DegenerateResponse(InputError):
    pass


class QTooSmall(InputError):
    pass


class SingularDesign(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class DivergentMoment(NumericalError):
    pass


class DegenerateStatistic(NumericalError):
    pass


class CellAborted(NumericalError):
    pass
