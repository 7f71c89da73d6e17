"""Exception hierarchy.

Every error carries the CLI exit code it maps to: validation problems exit
with 2, numeric-policy violations with 3.
"""


class GaussKError(Exception):
    exit_code = 1


class ValidationError(GaussKError, ValueError):
    exit_code = 2


class NumericPolicyError(GaussKError, ArithmeticError):
    exit_code = 3


class DimensionMismatch(ValidationError):
    pass


class SingularStructure(ValidationError):
    pass


class IncompatiblePair(ValidationError):
    pass


class NotAComplexStructure(ValidationError):
    pass


class FermionDisplacement(ValidationError):
    pass


class NotGroupElement(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class DegenerateForm(ValidationError):
    pass


class InvalidSubsystem(ValidationError):
    pass


class WrongStatistics(ValidationError):
    pass


class UnstableHamiltonian(ValidationError):
    pass


class SingularJ(ValidationError):
    pass


class NoCartanDecomposition(ValidationError):
    """Fermionic group element (or pair of states) in the component not
    connected to the identity: Delta has an odd number of (-1, -1) pairs."""


class IllConditioned(NumericPolicyError):
    pass


class BranchViolation(NumericPolicyError):
    pass


class SpectrumClassificationFailure(NumericPolicyError):
    pass


class SpectrumOutOfRange(NumericPolicyError):
    pass


class DegenerateSpectrum(NumericPolicyError):
    pass


class PureDirection(NumericPolicyError):
    pass


class TruncationTooSmall(NumericPolicyError):
    pass


class DegenerateKernel(NumericPolicyError):
    pass


class BudgetExceeded(NumericPolicyError):
    pass


class SamplerFailure(NumericPolicyError):
    def __init__(self, t, cause):
        super().__init__(f"Hamiltonian sampler failed at t={t!r}: {cause}")
        self.t = t
        self.cause = cause


class NonUniqueWarning(UserWarning):
    """Fermionic (-1,-1,-1,-1) blocks: the square root of Delta is not unique."""


class AsymptoticSeriesWarning(UserWarning):
    """A truncated adiabatic series is far from a complex structure."""
