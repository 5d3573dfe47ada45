"""Exceptions raised by the library.

Each exception knows the exit code the command line maps it to, so the
commands only need to catch ``ModalAssemblyError``.
"""

from modal_assembly.constants import ExitErrors


class ModalAssemblyError(Exception):
    """Base class for every error raised by the package."""

    exit_code: ExitErrors = ExitErrors.COMPUTATION_ERROR


class InvalidArgumentError(ModalAssemblyError, ValueError):
    """An argument violates a documented precondition."""

    exit_code = ExitErrors.VALIDATION_ERROR


class DegenerateInputError(ModalAssemblyError):
    """Input data cannot support the computation (eg collinear points)."""


class DegenerateBasisError(ModalAssemblyError):
    """The truncated modal basis is rank deficient."""


class FormatError(ModalAssemblyError):
    """A basis or signature file is corrupt or does not match its header."""

    exit_code = ExitErrors.VALIDATION_ERROR


class NoStableContactError(ModalAssemblyError):
    """The force axis pierces no facet facing the counterpart."""


class InternalError(ModalAssemblyError):
    """Something that valid inputs should never produce."""
