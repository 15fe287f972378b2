"""
Exception hierarchy for the watchdog coding lab.

Library code raises these; only the CLI maps them to exit codes.
"""


class WatchdogLabError(Exception):
    """Base class for every error raised by this project."""


# --- Finite fields ---

class FieldError(WatchdogLabError):
    pass


class NotPrimePower(FieldError):
    pass


class UnsupportedField(FieldError):
    pass


class ReduciblePolynomial(FieldError):
    pass


class ZeroInverse(FieldError, ZeroDivisionError):
    pass


class FieldMismatch(FieldError):
    pass


# --- Linear algebra ---

class AlgebraError(WatchdogLabError):
    pass


class NoSolution(AlgebraError):
    pass


class DimensionMismatch(AlgebraError, ValueError):
    pass


# --- Block codes ---

class CodecError(WatchdogLabError):
    pass


class LengthExceedsField(CodecError):
    pass


class LengthMismatch(CodecError, ValueError):
    pass


class TooLargeForExhaustive(CodecError):
    pass


class MissingPackets(CodecError):
    pass


class NotSystematic(CodecError):
    pass


# --- Closed forms ---

class AnalyticError(WatchdogLabError):
    pass


class NoCodeAvailable(AnalyticError):
    """The selection rule leaves no valid message length (k < 1)."""


# --- Watchdog / attacker state machines ---

class ProtocolError(WatchdogLabError):
    pass


class StrategyCodeMismatch(ProtocolError):
    pass


class NoUndetectableError(ProtocolError):
    """The checker's kernel is trivial, so every tampering is caught."""


# --- Simulation / configuration ---

class SimulationError(WatchdogLabError):
    pass


class ConfigError(WatchdogLabError):
    pass
