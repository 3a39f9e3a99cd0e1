"""Exception hierarchy.

Every error carries an ``exit_code`` used by the CLI:
2 for invalid input, 3 for resource caps, 1 for analysis warnings.
"""


class PermshiftError(Exception):
    exit_code = 2


class AlphaOutOfRange(PermshiftError):
    pass


class InfeasibleSeed(PermshiftError):
    pass


class DegeneratePermutedSet(PermshiftError):
    pass


class MaterializationTooLarge(PermshiftError):
    exit_code = 3


class PositionOutOfRange(PermshiftError):
    pass


class PrefixBeyondMaxLevel(PermshiftError):
    pass


class InputTooLarge(PermshiftError):
    exit_code = 3


class IndexTooLarge(PermshiftError):
    exit_code = 3


class TupleBudgetExceeded(PermshiftError):
    exit_code = 3


class NotStabilized(PermshiftError):
    exit_code = 1


class BoundViolated(PermshiftError):
    exit_code = 1


class InsufficientData(PermshiftError):
    pass


class LemmaBoundViolated(PermshiftError):
    exit_code = 1


class NotInLanguage(PermshiftError):
    pass


class WindowTooShort(PermshiftError):
    pass


class VariantUnsupported(PermshiftError):
    pass


class BudgetExceeded(PermshiftError):
    exit_code = 3

    def __init__(self, message, lower_bound=None):
        super().__init__(message)
        self.lower_bound = lower_bound


class LevelTooSmall(PermshiftError):
    pass


class InfeasiblePlacement(PermshiftError):
    pass
