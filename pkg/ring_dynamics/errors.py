#!/usr/bin/env python3

from typing import Optional


class CrqError(Exception):
    """Base error for the chiral ring toolkit"""

    exit_code = 1


class MissingKey(CrqError):
    """A required parameter is absent"""

    exit_code = 2

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing required key '{key}'")


class InvalidValue(CrqError):
    """A parameter is present but unusable"""

    exit_code = 2

    def __init__(self, key: str, reason: str = "invalid value"):
        self.key = key
        self.reason = reason
        super().__init__(f"invalid value for '{key}': {reason}")


class ConfigError(CrqError):
    """Scenario configuration could not be resolved"""

    exit_code = 2

    def __init__(self, key: str, reason: Optional[str] = None):
        self.key = key
        self.reason = reason
        message = key if reason is None else f"{key}: {reason}"
        super().__init__(message)


class IoError(CrqError):
    exit_code = 3


class RegimeError(CrqError):
    """Operation only defined at the phi = pi/2 band crossing"""


class StepTooLarge(CrqError):
    pass


class GridMismatch(CrqError):
    pass


class GridIncommensurate(CrqError):
    pass


class PoleProximity(CrqError):
    pass


class WrongParity(CrqError):
    """Ring size outside the parity class a formula was derived for"""


class DomainError(CrqError):
    pass


class InvalidState(CrqError):
    pass
