"""Exception types raised by the solvers."""

from __future__ import annotations


class CloseoutError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CloseoutError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularParameterError(CloseoutError, ArithmeticError):
    """The parameter combination makes a formula singular (e.g. lambda + r == mu)."""


class ConvergenceError(CloseoutError, RuntimeError):
    """A root bracket could not be established or bisection did not converge."""
