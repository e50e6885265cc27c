"""Exception hierarchy for the simulator.

Pure property functions raise :class:`DomainError` (a ``ValueError``) when an
argument is outside the physical domain of the correlation.  Stage drivers
raise :class:`SimulationError` subclasses carrying the model time and stage
name at which the run gave up.  Scenario parsing raises
:class:`ScenarioError`; the CLI maps these onto distinct exit codes.
"""

from __future__ import annotations


class LyosimError(Exception):
    """Base class for all simulator errors."""


class DomainError(LyosimError, ValueError):
    """An argument lies outside the valid domain of a correlation or model."""


class ConfigurationError(LyosimError, ValueError):
    """A parameter object violates one of its declared invariants."""


class ScenarioError(LyosimError):
    """A scenario file failed schema validation or cannot be assembled."""


class SimulationError(LyosimError):
    """A stage driver failed to complete.

    Parameters
    ----------
    message : str
        Human-readable description.
    stage : str, optional
        Stage name ("preconditioning", "primary_drying", ...).
    t : float, optional
        Model time (s) at which the failure occurred.
    """

    def __init__(self, message: str, *, stage: str | None = None, t: float | None = None):
        self.stage = stage
        self.t = t
        tag = []
        if stage is not None:
            tag.append(f"stage={stage}")
        if t is not None:
            tag.append(f"t={t:.6g} s")
        if tag:
            message = f"{message} ({', '.join(tag)})"
        super().__init__(message)


class StageTimeoutError(SimulationError):
    """A stage did not reach its completion event within its time horizon."""


class SolverError(SimulationError):
    """The ODE integrator reported a hard failure (step-size underflow,
    repeated convergence failure of the implicit stage solve, ...)."""


class ComparisonError(LyosimError):
    """Reference comparison could not be carried out (for example the
    simulated and reference series share no overlapping time window)."""
