"""Exception hierarchy shared by every module of the package."""


class EffortError(ValueError):
    """Base class for all validation and fitting errors raised here."""


# -- dataset ---------------------------------------------------------------

class MissingHeader(EffortError):
    def __init__(self, missing, found):
        self.missing = tuple(missing)
        self.found = tuple(found)
        super().__init__(
            f"missing required column(s) {', '.join(self.missing)}; "
            f"header has {', '.join(self.found) or '<empty>'}"
        )


class NonNumericCell(EffortError):
    def __init__(self, row, col, value):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"row {row}, column {col!r}: {value!r} is not a finite number")


class TooFewRows(EffortError):
    def __init__(self, n, minimum):
        self.n = n
        self.minimum = minimum
        super().__init__(f"dataset has {n} rows, need at least {minimum}")


class TooFewValues(EffortError):
    def __init__(self, n, minimum):
        self.n = n
        self.minimum = minimum
        super().__init__(f"got {n} values, need at least {minimum}")


class ZeroVariance(EffortError):
    pass


class ConstantColumn(EffortError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"column {name!r} is constant and cannot be min-max scaled")


class DegenerateSplit(EffortError):
    pass


# -- fitting ---------------------------------------------------------------

class FitError(EffortError):
    """A base learner could not produce a model for the given data."""


class RankDeficient(FitError):
    pass


class NotConverged(FitError):
    def __init__(self, iterations, model=None, message=None):
        self.iterations = iterations
        self.model = model
        super().__init__(message or f"no convergence after {iterations} iterations")


class DimensionMismatch(EffortError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"model expects {expected} feature(s), got {got}")


class AllComponentsFailed(FitError):
    pass


class DegenerateFolds(EffortError):
    pass


class UnknownModelName(EffortError):
    def __init__(self, name, valid):
        self.name = name
        self.valid = tuple(valid)
        super().__init__(f"unknown model {name!r}; valid names: {', '.join(self.valid)}")


# -- stats -----------------------------------------------------------------

class LengthMismatch(EffortError):
    pass


class EmptyInput(EffortError):
    pass


class NonPositiveBaseline(EffortError):
    pass


class AllZeroDifferences(EffortError):
    pass


# -- harness ---------------------------------------------------------------

class UnknownModel(EffortError):
    pass


class ExperimentError(EffortError):
    def __init__(self, iteration, model, cause):
        self.iteration = iteration
        self.model = model
        self.cause = cause
        super().__init__(f"iteration {iteration}, model {model}: {cause}")


class StackingFitError(FitError):
    def __init__(self, fold, family, cause):
        self.fold = fold
        self.family = family
        self.cause = cause
        where = "deployment refit" if fold is None else f"fold {fold}"
        super().__init__(f"stacking {where}, level-0 family {family}: {cause}")
