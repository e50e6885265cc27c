"""Adaptive stiff integration with event detection.

Thin, typed wrapper around ``scipy.integrate.solve_ivp``.  The stage models
are stiff (thermal relaxation times from seconds to hours in one system, and
a moving-front transform that becomes singular near completion), so the
default method is the variable-order BDF family with an analytically
supplied Jacobian sparsity pattern.  An explicit Runge-Kutta method is kept
available as a cross-check reference.

Event localization on the dense output is exposed separately as
:func:`locate_event` so stage drivers and tests can refine or audit event
times against the interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, SolverError

__all__ = ["IntegratorConfig", "EventSpec", "IntegrationResult",
           "integrate_adaptive", "locate_event"]

_METHODS = {"bdf": "BDF", "lsoda": "LSODA", "explicit": "RK45", "rk45": "RK45"}


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and method selection for one integration.

    ``atol`` may be a scalar or a per-component array.  ``method`` is
    "bdf" (default, stiff) or "explicit"/"rk45" (reference).  ``event_tol``
    bounds the time error of event localization (s).
    """

    rtol: float = 1.0e-6
    atol: float | np.ndarray = 1.0e-9
    method: str = "bdf"
    max_step: float = np.inf
    first_step: float | None = None
    event_tol: float = 1.0e-6

    def __post_init__(self) -> None:
        if self.rtol <= 0.0:
            raise ConfigurationError("rtol must be positive")
        if np.any(np.asarray(self.atol) <= 0.0):
            raise ConfigurationError("atol must be positive")
        if self.method.lower() not in _METHODS:
            raise ConfigurationError(
                f"unknown method {self.method!r}; choose from {sorted(_METHODS)}")
        if self.max_step <= 0.0:
            raise ConfigurationError("max_step must be positive")
        if self.event_tol <= 0.0:
            raise ConfigurationError("event_tol must be positive")

    def scipy_method(self) -> str:
        return _METHODS[self.method.lower()]

    def replace(self, **kw) -> "IntegratorConfig":
        from dataclasses import replace as _replace
        return _replace(self, **kw)


@dataclass
class EventSpec:
    """Scalar event g(t, y) = 0 watched during integration.

    ``direction`` > 0 triggers only on rising zero crossings, < 0 only on
    falling ones, 0 on any.  ``terminal`` stops the integration at the
    event.  ``name`` labels the event in results and errors.
    """

    func: Callable[[float, np.ndarray], float]
    terminal: bool = True
    direction: float = 0.0
    name: str = "event"


@dataclass
class IntegrationResult:
    """Integration outcome: accepted-step mesh, dense interpolant, events."""

    t: np.ndarray
    y: np.ndarray  # shape (n_state, n_time)
    sol: Callable[[float | np.ndarray], np.ndarray]
    t_events: dict[str, np.ndarray] = field(default_factory=dict)
    y_events: dict[str, np.ndarray] = field(default_factory=dict)
    nfev: int = 0
    njev: int = 0
    status: int = 0
    message: str = ""

    @property
    def terminated_by_event(self) -> bool:
        return self.status == 1

    def first_event_time(self, name: str) -> float | None:
        te = self.t_events.get(name)
        if te is None or te.size == 0:
            return None
        return float(te[0])


def _wrap_events(events: Sequence[EventSpec] | None):
    if not events:
        return None
    wrapped = []
    for ev in events:
        # scipy reads .terminal/.direction attributes off the callable
        def g(t, y, _f=ev.func):
            return _f(t, y)

        g.terminal = ev.terminal
        g.direction = ev.direction
        wrapped.append(g)
    return wrapped


def integrate_adaptive(rhs: Callable[[float, np.ndarray], np.ndarray],
                       t_span: tuple[float, float],
                       y0: np.ndarray,
                       config: IntegratorConfig = IntegratorConfig(),
                       events: Sequence[EventSpec] | None = None,
                       jac_sparsity: np.ndarray | None = None,
                       t_eval: np.ndarray | None = None) -> IntegrationResult:
    """Integrate ``y' = rhs(t, y)`` over ``t_span`` with dense output.

    Returns an :class:`IntegrationResult`; raises :class:`SolverError` when
    the integrator fails (the error reports the last reached time and
    state).  ``jac_sparsity`` is forwarded to the implicit methods so the
    finite-difference Jacobian uses column grouping.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    method = config.scipy_method()
    kwargs = {}
    if jac_sparsity is not None and method in ("BDF", "Radau"):
        kwargs["jac_sparsity"] = jac_sparsity
    if config.first_step is not None:
        kwargs["first_step"] = config.first_step
    res = solve_ivp(
        rhs,
        t_span,
        y0,
        method=method,
        rtol=config.rtol,
        atol=config.atol,
        max_step=config.max_step,
        dense_output=True,
        events=_wrap_events(events),
        t_eval=t_eval,
        **kwargs,
    )
    if res.status == -1:
        t_last = float(res.t[-1]) if res.t.size else float(t_span[0])
        y_last = res.y[:, -1] if res.t.size else y0
        raise SolverError(
            f"integration failed: {res.message}; last state {np.array2string(y_last, precision=6)}",
            t=t_last,
        )
    t_events: dict[str, np.ndarray] = {}
    y_events: dict[str, np.ndarray] = {}
    if events:
        for ev, te, ye in zip(events, res.t_events, res.y_events):
            t_events[ev.name] = te
            y_events[ev.name] = ye
    return IntegrationResult(
        t=res.t,
        y=res.y,
        sol=res.sol,
        t_events=t_events,
        y_events=y_events,
        nfev=res.nfev,
        njev=res.njev,
        status=res.status,
        message=res.message,
    )


def locate_event(sol: Callable[[float], np.ndarray],
                 event: EventSpec,
                 t_lo: float,
                 t_hi: float,
                 time_tol: float = 1.0e-9) -> float:
    """Refine the root of ``event.func`` on a dense solution segment.

    Requires a sign change (or an exact zero at an endpoint, which is
    returned without refinement) across ``[t_lo, t_hi]`` consistent with
    ``event.direction``; raises :class:`DomainError` otherwise.
    """
    if t_hi <= t_lo:
        raise DomainError("locate_event needs t_lo < t_hi")

    def g(t: float) -> float:
        return float(event.func(t, np.atleast_1d(sol(t))))

    g_lo, g_hi = g(t_lo), g(t_hi)
    if g_lo == 0.0:
        return float(t_lo)
    if g_hi == 0.0:
        return float(t_hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise DomainError(
            f"event {event.name!r} has no sign change on [{t_lo:.6g}, {t_hi:.6g}]")
    if event.direction > 0 and not (g_lo < 0.0 < g_hi):
        raise DomainError(f"event {event.name!r}: crossing is not rising on the segment")
    if event.direction < 0 and not (g_lo > 0.0 > g_hi):
        raise DomainError(f"event {event.name!r}: crossing is not falling on the segment")
    return float(brentq(g, t_lo, t_hi, xtol=time_tol, rtol=8.881784197001252e-16))
