"""Exception hierarchy.

Every error carries a module-qualified ``code`` (e.g. ``"core_state.NotNormalized"``)
that the CLI reports verbatim.
"""

from __future__ import annotations


class SimplexCollapseError(Exception):
    """Base class for all library errors."""

    code = "simplex_collapse.Error"


class ValidationError(SimplexCollapseError, ValueError):
    """An input failed a domain-type invariant."""

    code = "core_state.Validation"


class NotNormalized(ValidationError):
    code = "core_state.NotNormalized"


class TooShort(ValidationError):
    code = "core_state.TooShort"


class NotHermitian(ValidationError):
    code = "core_state.NotHermitian"


class NotPositiveSemidefinite(ValidationError):
    code = "core_state.NotPositiveSemidefinite"


class NonRealDiagonal(ValidationError):
    code = "core_state.NonRealDiagonal"


class InvalidNoise(ValidationError):
    code = "core_state.InvalidNoise"


class InvalidSigns(ValidationError):
    code = "core_state.InvalidSigns"


class NonPositiveInput(ValidationError):
    code = "exact_oracle.NonPositiveInput"


class LimitError(SimplexCollapseError):
    """A computation was refused because it would exceed a resource limit."""

    code = "simplex_collapse.Limit"


class DimensionTooLarge(LimitError):
    code = "exact_oracle.DimensionTooLarge"


class DegenerateDenominator(SimplexCollapseError, ArithmeticError):
    code = "mapping.DegenerateDenominator"


class GridTooNarrow(SimplexCollapseError):
    code = "two_state.GridTooNarrow"


class StepTooLarge(SimplexCollapseError):
    code = "diffusion.StepTooLarge"


class ConfigError(SimplexCollapseError):
    """Configuration could not be loaded; ``pointer`` is a JSON pointer."""

    code = "cli.Config"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.reason = message


class ConfigIoError(ConfigError):
    code = "cli.Io"


class ConfigSyntaxError(ConfigError):
    code = "cli.Syntax"


class ConfigValidationError(ConfigError):
    code = "cli.Validation"
