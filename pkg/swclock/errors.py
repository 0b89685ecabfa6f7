"""
Exception types raised by the clock model, the recorder and the Monte-Carlo layer.
"""


class ClockError(Exception):
    """Base class for all swclock errors."""


class ConfigError(ClockError):
    """Clock parameters are missing, inconsistent or unphysical."""


class PairingError(ClockError):
    """The recorder could not pair a 2-hat quantum with its triad partner."""


class MonteCarloError(ClockError):
    """A Monte-Carlo request cannot produce meaningful statistics."""
