"""
Exception hierarchy for the periodic mountain-pass toolkit.

Operational failures raise one of these. Outcomes that are data (a condition
that fails on its sample, a failed certificate, a stalled relaxation, a
Newton start that does not converge inside multistart) are returned in the
reports instead.
"""

from typing import Optional


class DiscreteSystemError(ValueError):
    pass


# sequence has wrong shape or non-finite entries
class InvalidSequenceError(DiscreteSystemError):
    pass


# two sequences (or a sequence and a potential) live in different E_M
class PeriodMismatchError(DiscreteSystemError):
    pass


class IndexOutOfRangeError(DiscreteSystemError):
    pass


# potential parameters or condition checks that cannot be carried out
class ConditionError(DiscreteSystemError):
    pass


class FunctionalError(DiscreteSystemError):
    pass


# mountain geometry could not be built or is invalid
class GeometryError(DiscreteSystemError):
    pass


class FlowError(DiscreteSystemError):
    pass


class PathError(DiscreteSystemError):
    pass


# stored certificate flags disagree with a fresh recomputation
class CertificateError(DiscreteSystemError):
    pass


class OracleError(DiscreteSystemError):
    pass


class SingularJacobianError(OracleError):

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message)
        self.condition = condition


class DivergenceError(OracleError):
    pass


# malformed problem config; message names the json path of the field
class ConfigError(DiscreteSystemError):

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# report envelope failed validation before writing or after reloading
class ReportError(DiscreteSystemError):
    pass
