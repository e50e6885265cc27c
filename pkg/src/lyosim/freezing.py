"""Freezing of a suspended vial: five-stage lumped-capacitance model.

The vial hangs without shelf contact, so all heat enters or leaves through
gas films on the top, bottom, and side surfaces plus radiation between the
lateral glass surface and the chamber wall.  The stages are

1. preconditioning: single-phase cooldown of the liquid fill;
2. vacuum-induced surface freezing (optional): the chamber total pressure
   is lowered so surface evaporation chills the liquid to the nucleation
   temperature;
3. nucleation: an instantaneous jump in which just enough ice forms to
   bring the supercooled solution to its depressed freezing point;
4. solidification: quasi-steady ice growth with the product temperature
   slaved to the freezing-point depression of the concentrating solution,
   and with growing conductive resistances of the bottom ice slab and the
   lateral ice annulus;
5. final cooling: sensible cooldown of the fully frozen product.

Nucleation may instead be stochastic: a Poisson process whose hazard rate
grows as a power of supercooling, sampled on fixed intervals with a seeded
generator, replacing stage 2 entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, SimulationError, StageTimeoutError
from .schedules import Schedule
from .solver import EventSpec, IntegratorConfig, integrate_adaptive
from .thermo import (
    MixtureProperties,
    RadiationSpec,
    T_FREEZE_WATER,
    freezing_point,
    heat_of_vaporization,
    linearized_radiation_htc,
    overall_htc_cylinder,
    overall_htc_slab,
    psat_evaporation,
    radiation_exchange,
)
from .trajectory import Trajectory

__all__ = [
    "STAGE_PRECONDITIONING", "STAGE_VISF", "STAGE_SOLIDIFICATION", "STAGE_FINAL_COOLING",
    "DH_FUSION",
    "VialState", "ControlledNucleation", "StochasticNucleation", "FreezingProtocol",
    "FreezingSystem",
    "preconditioning_rhs", "visf_rhs", "nucleate_controlled",
    "nucleation_hazard", "nucleation_probability", "sample_stochastic_nucleation",
    "first_nucleation_time", "solidification_rhs", "run_freezing",
]

STAGE_PRECONDITIONING = "preconditioning"
STAGE_VISF = "visf"
STAGE_SOLIDIFICATION = "solidification"
STAGE_FINAL_COOLING = "final_cooling"

DH_FUSION = 3.34e5  # J/kg, heat of fusion of water

# fraction of the fill-height scale below which a computed negative bottom
# ice thickness is attributed to surface evaporation loss and clamped to 0
_BOTTOM_ICE_SLACK = 5.0e-3
# chunk length of the vectorized Bernoulli walk used for stochastic nucleation
_WALK_CHUNK = 8192


@dataclass
class VialState:
    """Lumped product state during freezing: one temperature, the liquid
    water mass, and the ice mass (kg).  ``t`` is model time (s)."""

    T: float
    m_w: float
    m_i: float = 0.0
    stage: str = STAGE_PRECONDITIONING
    t: float = 0.0


@dataclass(frozen=True)
class ControlledNucleation:
    """Deterministic trigger: nucleation fires when T reaches ``temperature_K``."""

    temperature_K: float = 268.0

    def __post_init__(self) -> None:
        if self.temperature_K <= 0.0:
            raise ConfigurationError("nucleation temperature must be positive")


@dataclass(frozen=True)
class StochasticNucleation:
    """Poisson nucleation: hazard k_n * (T_eq - T)^b_n * V_liquid.

    ``rate_prefactor`` (k_n) has units 1/(m^3 s K^b_n); ``rate_exponent``
    (b_n) is dimensionless.  The Bernoulli approximation of the process is
    sampled every ``sampling_interval_s`` with a generator seeded by
    ``seed``; nucleation is assigned to the end of the successful interval.
    """

    rate_prefactor: float = 1.0e-5
    rate_exponent: float = 10.0
    seed: int | None = None
    sampling_interval_s: float = 0.1

    def __post_init__(self) -> None:
        if self.rate_prefactor < 0.0:
            raise ConfigurationError("nucleation rate prefactor must be nonnegative")
        if self.rate_exponent <= 0.0:
            raise ConfigurationError("nucleation rate exponent must be positive")
        if self.sampling_interval_s <= 0.0:
            raise ConfigurationError("sampling interval must be positive")


@dataclass(frozen=True)
class FreezingProtocol:
    """Operating conditions and stage controls for the freezing chambers.

    Temperature and pressure schedules are functions of time measured from
    the start of freezing.  ``h_top``/``h_bottom``/``h_side`` are the gas
    film coefficients of the exposed top, vial bottom, and lateral surface
    (W/m^2/K); ``h_mass`` is the evaporative mass-transfer coefficient
    (kg/m^2/s) active while the chamber is depressurized.
    ``visf_start_s`` schedules the depressurization; ``None`` disables the
    stage (nucleation then triggers directly on temperature, or
    stochastically).
    """

    gas_temperature: Schedule
    wall_temperature: Schedule
    upper_temperature: Schedule
    total_pressure: Schedule
    h_top: float = 5.0
    h_bottom: float = 10.0
    h_side: float = 8.0
    h_mass: float = 6.34e-3
    p_w_chamber: float = 0.0
    nucleation: ControlledNucleation | StochasticNucleation = ControlledNucleation()
    visf_start_s: float | None = 3600.0
    solidification_fraction: float = 0.95
    final_temperature_K: float = 235.0
    final_tolerance_K: float = 0.5
    dH_fus: float = DH_FUSION
    stage_time_limit_s: float = 1.0e6

    def __post_init__(self) -> None:
        for name in ("h_top", "h_bottom", "h_side"):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"FreezingProtocol.{name} must be nonnegative")
        if self.h_mass < 0.0:
            raise ConfigurationError("h_mass must be nonnegative")
        if self.p_w_chamber < 0.0:
            raise ConfigurationError("chamber water partial pressure must be nonnegative")
        if not 0.85 <= self.solidification_fraction <= 0.95:
            raise ConfigurationError(
                "solidification fraction must lie in [0.85, 0.95], got "
                f"{self.solidification_fraction}")
        if self.final_tolerance_K <= 0.0:
            raise ConfigurationError("final temperature tolerance must be positive")
        if self.dH_fus <= 0.0:
            raise ConfigurationError("heat of fusion must be positive")
        if self.stage_time_limit_s <= 0.0:
            raise ConfigurationError("stage time limit must be positive")
        if self.visf_start_s is not None:
            if self.visf_start_s < 0.0:
                raise ConfigurationError("visf_start_s must be nonnegative")
            if isinstance(self.nucleation, StochasticNucleation):
                raise ConfigurationError(
                    "stochastic nucleation replaces the depressurization trigger; "
                    "set visf_start_s to null")


@dataclass(frozen=True)
class FreezingSystem:
    """Bundle of everything the freezing operators need: derived mixture
    quantities, radiation factors, and the operating protocol."""

    mixture: MixtureProperties
    radiation: RadiationSpec
    protocol: FreezingProtocol


def _heat_capacity_liquid(m_w: float, mx: MixtureProperties) -> float:
    f = mx.formulation
    return mx.m_s * f.Cp_s + m_w * f.Cp_w


def _plain_heat_total(state: VialState, sys: FreezingSystem) -> float:
    """Sum of film and radiative heat flows (W) with no ice resistance."""
    p, mx, rad = sys.protocol, sys.mixture, sys.radiation
    t, T = state.t, state.T
    A_z = mx.A_z
    A_r = mx.side_area(max(state.m_w, 0.0), max(state.m_i, 0.0))
    T_g = p.gas_temperature(t)
    q = p.h_top * A_z * (p.upper_temperature(t) - T)
    q += p.h_bottom * A_z * (T_g - T)
    q += p.h_side * A_r * (T_g - T)
    q += radiation_exchange(T, p.wall_temperature(t), rad.F_side, A_r, rad.sigma)
    return q


def preconditioning_rhs(state: VialState, sys: FreezingSystem) -> float:
    """dT/dt (K/s) of the single-phase liquid during preconditioning."""
    return _plain_heat_total(state, sys) / _heat_capacity_liquid(state.m_w, sys.mixture)


def _final_cooling_rhs(state: VialState, sys: FreezingSystem) -> float:
    """dT/dt (K/s) of the fully frozen product (ice heat capacity included)."""
    f = sys.mixture.formulation
    C = _heat_capacity_liquid(state.m_w, sys.mixture) + state.m_i * f.Cp_i
    return _plain_heat_total(state, sys) / C


def _vapor_mass_fraction(p_w: float, p_t: float, M_w: float, M_in: float) -> float:
    """Mass fraction of water vapor in a water/inert mixture at partial
    pressure ``p_w`` and total pressure ``p_t``."""
    if not 0.0 <= p_w <= p_t:
        raise DomainError(f"need 0 <= p_w <= p_t, got p_w={p_w}, p_t={p_t}")
    return p_w * M_w / (p_w * M_w + (p_t - p_w) * M_in)


def visf_rhs(state: VialState, sys: FreezingSystem) -> tuple[float, float]:
    """(dT/dt, dm_w/dt) during vacuum-induced surface freezing.

    Evaporation from the exposed top surface is driven by the vapor
    mass-fraction difference between saturation at the product temperature
    and the chamber; the latent heat it carries supplements the film and
    radiative exchange of :func:`preconditioning_rhs`.
    """
    p, mx = sys.protocol, sys.mixture
    f = mx.formulation
    p_t = p.total_pressure(state.t)
    p_sat = psat_evaporation(state.T)
    if p_t <= p_sat:
        raise DomainError(
            f"total pressure {p_t:.3g} Pa is below water saturation {p_sat:.3g} Pa; "
            "the evaporation model needs an inert-gas-rich atmosphere")
    x_sat = _vapor_mass_fraction(p_sat, p_t, f.M_w, f.M_in)
    x_cham = _vapor_mass_fraction(min(p.p_w_chamber, p_t), p_t, f.M_w, f.M_in)
    dm_w = -p.h_mass * mx.A_z * (x_sat - x_cham)
    Q = _plain_heat_total(state, sys)
    dT = (Q + heat_of_vaporization(state.T) * dm_w) / _heat_capacity_liquid(state.m_w, mx)
    return dT, dm_w


def nucleate_controlled(state: VialState, sys: FreezingSystem) -> tuple[float, float]:
    """Instantaneous nucleation jump from the supercooled state.

    Solves the coupled energy balance and cryoscopic relation

        (T_eq - T_n) (m_s Cp_s + m_w Cp_w) = m_i,n dH_fus
        T_eq = T_f,pure - (K_f / M_s) m_s / (m_w - m_i,n)

    for the ice mass ``m_i,n`` formed and the post-nucleation equilibrium
    temperature ``T_eq``.  Raises :class:`DomainError` when the state is not
    supercooled (no solution with positive ice mass exists).
    """
    mx = sys.mixture
    f = mx.formulation
    T_n, m_w = state.T, state.m_w
    D = f.K_f * mx.m_s / f.M_s  # depression constant, K*kg
    C = _heat_capacity_liquid(m_w, mx)
    dH = sys.protocol.dH_fus
    if T_n >= T_FREEZE_WATER - D / m_w:
        raise DomainError(
            f"state at T={T_n:.3f} K is not supercooled below the depressed freezing "
            f"point {T_FREEZE_WATER - D / m_w:.3f} K; nucleation has no solution")

    def g(m_i: float) -> float:
        return (T_FREEZE_WATER - D / (m_w - m_i) - T_n) * C - m_i * dH

    # g(0) > 0 by the supercooling check and g -> -inf as m_i -> m_w
    m_hi = m_w * (1.0 - 1.0e-12)
    m_i_n = float(brentq(g, 0.0, m_hi, xtol=1.0e-25, rtol=8.881784197001252e-16))
    T_eq = T_FREEZE_WATER - D / (m_w - m_i_n)
    return T_eq, m_i_n


def nucleation_hazard(T, m_w: float, sys: FreezingSystem):
    """Poisson nucleation rate lambda (1/s); accepts scalar or array T.

    lambda = k_n * max(T_eq - T, 0)^b_n * V_liquid, with the supercooling
    measured from the depressed freezing point of the current solution.
    """
    nuc = sys.protocol.nucleation
    if not isinstance(nuc, StochasticNucleation):
        raise ConfigurationError("nucleation_hazard needs a stochastic nucleation spec")
    mx = sys.mixture
    f = mx.formulation
    T_eq = freezing_point(mx.m_s, m_w, f)
    V_liq = mx.m_s / f.rho_s + m_w / f.rho_w
    dT = np.clip(T_eq - np.asarray(T, dtype=float), 0.0, None)
    lam = nuc.rate_prefactor * dT**nuc.rate_exponent * V_liq
    return float(lam) if np.isscalar(T) or getattr(T, "ndim", 0) == 0 else lam


def nucleation_probability(lam: float, dt: float) -> float:
    """P(nucleate within dt) = 1 - exp(-lambda dt) for a Poisson process."""
    if lam < 0.0 or dt <= 0.0:
        raise DomainError("need lambda >= 0 and dt > 0")
    return -math.expm1(-lam * dt)


def sample_stochastic_nucleation(state: VialState, sys: FreezingSystem, dt: float,
                                 rng: np.random.Generator) -> bool:
    """One Bernoulli draw: did nucleation occur within the next ``dt`` seconds?"""
    lam = nucleation_hazard(state.T, state.m_w, sys)
    return bool(rng.random() < nucleation_probability(lam, dt))


def first_nucleation_time(T: float, m_w: float, sys: FreezingSystem,
                          rng: np.random.Generator, *, t_max: float = 1.0e6) -> float | None:
    """First nucleation time (s) at a held temperature, or None within ``t_max``.

    Walks the Bernoulli approximation of the process on the protocol's
    sampling interval, assigning nucleation to the end of the successful
    interval.  Draws one uniform per interval in chronological order, so a
    seeded generator reproduces the same time exactly.
    """
    nuc = sys.protocol.nucleation
    dt = nuc.sampling_interval_s
    lam = nucleation_hazard(T, m_w, sys)
    if lam <= 0.0:
        return None
    prob = nucleation_probability(lam, dt)
    n_windows = int(math.floor(t_max / dt))
    k = 0
    while k < n_windows:
        n = min(_WALK_CHUNK, n_windows - k)
        hits = np.nonzero(rng.random(n) < prob)[0]
        if hits.size:
            return (k + int(hits[0]) + 1) * dt
        k += n
    return None


def _ice_geometry(m_w: float, m_i: float, mx: MixtureProperties) -> tuple[float, float, float]:
    """(bottom slab thickness, liquid core radius, lateral area) during
    solidification.

    The liquid core keeps the fill's aspect ratio and shrinks self-similarly
    with the cube root of its volume; whatever total volume is left over
    below the core is the bottom ice slab.  Tiny negative slab thicknesses
    (surface evaporation removed volume from the top, not the bottom) are
    clamped to zero.
    """
    f = mx.formulation
    V_liq = mx.m_s / f.rho_s + m_w / f.rho_w
    V_tot = V_liq + m_i / f.rho_i
    h_fill = f.V_l / mx.A_z
    scale = (V_liq / f.V_l) ** (1.0 / 3.0)
    ell = V_tot / mx.A_z - h_fill * scale
    if ell < -_BOTTOM_ICE_SLACK * h_fill:
        raise DomainError(
            f"bottom ice thickness {ell:.3e} m is negative beyond the evaporation-loss "
            "allowance; the self-similar core geometry does not describe this state")
    return max(ell, 0.0), (mx.d / 2.0) * scale, 4.0 * V_tot / mx.d


def solidification_rhs(state: VialState, sys: FreezingSystem, *,
                       h_rad_side: float) -> tuple[float, float]:
    """(dm_i/dt, dT/dt) during quasi-steady solidification.

    The product temperature is slaved to the freezing-point depression of
    the concentrating solution, which turns the energy balance into a
    single ODE for the ice mass.  Film coefficients on the bottom and side
    are degraded by the conductive resistance of the growing ice slab and
    annulus; the side radiation link uses the stage-start linearized
    coefficient ``h_rad_side``.
    """
    p, mx, rad = sys.protocol, sys.mixture, sys.radiation
    f = mx.formulation
    t, T, m_w, m_i = state.t, state.T, state.m_w, state.m_i
    if m_w <= 0.0:
        raise DomainError("solidification needs remaining liquid water")
    ell, r_core, A_r = _ice_geometry(m_w, m_i, mx)
    r_o = mx.d / 2.0
    U_bottom = overall_htc_slab(p.h_bottom, ell, f.k_i)
    U_side = overall_htc_cylinder(p.h_side, r_o, r_core, f.k_i)
    U_side_rad = overall_htc_cylinder(h_rad_side, r_o, r_core, f.k_i)
    T_g = p.gas_temperature(t)
    Q = p.h_top * mx.A_z * (p.upper_temperature(t) - T)
    Q += U_bottom * mx.A_z * (T_g - T)
    Q += U_side * A_r * (T_g - T)
    Q += U_side_rad * A_r * (p.wall_temperature(t) - T)
    D = f.K_f * mx.m_s / f.M_s
    C = _heat_capacity_liquid(m_w, mx)
    # dT/dm_i = -D/m_w^2 through the slaved depression relation
    dm_i = -Q / (p.dH_fus + C * D / m_w**2)
    dT = -(D / m_w**2) * dm_i
    return dm_i, dT


def _resample(sol, t0: float, t1: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a dense solution on a uniform grid over [t0, t1]."""
    if t1 <= t0:
        ts = np.array([t0])
    else:
        ts = np.linspace(t0, t1, n)
    return ts, np.atleast_2d(sol(ts))


def run_freezing(initial: VialState, sys: FreezingSystem,
                 config: IntegratorConfig = IntegratorConfig(), *,
                 samples_per_stage: int = 200,
                 rng: np.random.Generator | None = None,
                 stop_after: str = "final_cooling") -> Trajectory:
    """Drive the freezing stage machine from ``initial`` to the frozen,
    cooled product.

    Returns a :class:`Trajectory` whose events map the stage transitions
    (``preconditioning_end_s``, ``visf_end_s``, ``nucleation_s``,
    ``solidification_end_s``, ``freezing_end_s``) to absolute model times.
    The final state for chaining into drying is stored under
    ``meta["final_state"]``.  Raises :class:`StageTimeoutError` when a stage
    fails to reach its completion event within the protocol's horizon.
    ``stop_after="solidification"`` ends the run once the target ice
    fraction is reached, for protocols that move the vial onward without
    the final cooling hold.
    """
    p, mx = sys.protocol, sys.mixture
    f = mx.formulation
    nuc = p.nucleation
    if stop_after not in ("final_cooling", "solidification"):
        raise ConfigurationError("stop_after must be 'final_cooling' or 'solidification'")
    if initial.m_i != 0.0:
        raise ConfigurationError("freezing must start from an ice-free liquid fill")
    t = float(initial.t)
    T = float(initial.T)
    m_w = float(initial.m_w)
    limit = p.stage_time_limit_s
    parts: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, str]] = []
    events: dict[str, float] = {}
    meta: dict[str, Any] = {}

    def record(ts, Ts, mws, mis, label: str) -> None:
        n = ts.shape[0]
        parts.append((ts, np.broadcast_to(np.asarray(Ts, float), (n,)).copy(),
                      np.broadcast_to(np.asarray(mws, float), (n,)).copy(),
                      np.broadcast_to(np.asarray(mis, float), (n,)).copy(), label))

    def precond_rhs(tt: float, y: np.ndarray):
        return (preconditioning_rhs(VialState(T=y[0], m_w=m_w, t=tt), sys),)

    # ---- stage 1 + 2: cool down and trigger nucleation -------------------
    if isinstance(nuc, ControlledNucleation):
        T_n = nuc.temperature_K
        if p.visf_start_s is not None:
            t1 = t + p.visf_start_s
            if p.visf_start_s > 0.0:
                res = integrate_adaptive(precond_rhs, (t, t1), [T], config)
                ts, ys = _resample(res.sol, t, t1, samples_per_stage)
                record(ts, ys[0], m_w, 0.0, STAGE_PRECONDITIONING)
                T = float(ys[0, -1])
                t = t1
            events["preconditioning_end_s"] = t
            if T > T_n:
                reach = EventSpec(lambda tt, y: y[0] - T_n, terminal=True,
                                  direction=-1.0, name="reach_nucleation_T")
                floor = EventSpec(lambda tt, y: y[1] - 1.0e-3 * m_w, terminal=True,
                                  direction=-1.0, name="water_depleted")

                def rhs2(tt: float, y: np.ndarray):
                    s = VialState(T=y[0], m_w=max(y[1], 0.0), t=tt, stage=STAGE_VISF)
                    return visf_rhs(s, sys)

                res = integrate_adaptive(rhs2, (t, t + limit), [T, m_w], config,
                                         events=[reach, floor])
                if res.first_event_time("water_depleted") is not None:
                    raise SimulationError(
                        "surface evaporation exhausted the liquid fill before the "
                        "nucleation temperature was reached", stage=STAGE_VISF,
                        t=res.first_event_time("water_depleted"))
                t2 = res.first_event_time("reach_nucleation_T")
                if t2 is None:
                    raise StageTimeoutError(
                        "depressurized cooling never reached the nucleation temperature",
                        stage=STAGE_VISF, t=res.t[-1])
                ts, ys = _resample(res.sol, t, t2, samples_per_stage)
                record(ts, ys[0], ys[1], 0.0, STAGE_VISF)
                T, m_w = float(ys[0, -1]), float(ys[1, -1])
                t = t2
            events["visf_end_s"] = t
        else:
            if T > T_n:
                reach = EventSpec(lambda tt, y: y[0] - T_n, terminal=True,
                                  direction=-1.0, name="reach_nucleation_T")
                res = integrate_adaptive(precond_rhs, (t, t + limit), [T], config,
                                         events=[reach])
                t1 = res.first_event_time("reach_nucleation_T")
                if t1 is None:
                    raise StageTimeoutError(
                        "preconditioning never reached the nucleation temperature",
                        stage=STAGE_PRECONDITIONING, t=res.t[-1])
                ts, ys = _resample(res.sol, t, t1, samples_per_stage)
                record(ts, ys[0], m_w, 0.0, STAGE_PRECONDITIONING)
                T = float(ys[0, -1])
                t = t1
            events["preconditioning_end_s"] = t
            events["visf_end_s"] = t
    else:
        generator = rng if rng is not None else np.random.default_rng(nuc.seed)
        res = integrate_adaptive(precond_rhs, (t, t + limit), [T], config)
        dt = nuc.sampling_interval_s
        n_windows = int(math.floor(limit / dt))
        T_eq = freezing_point(mx.m_s, m_w, f)
        V_liq = mx.m_s / f.rho_s + m_w / f.rho_w
        t_nuc = None
        k = 0
        while k < n_windows:
            n = min(_WALK_CHUNK, n_windows - k)
            tw = t + (k + np.arange(n)) * dt
            Tw = res.sol(tw)[0]
            lam = nuc.rate_prefactor * np.clip(T_eq - Tw, 0.0, None)**nuc.rate_exponent * V_liq
            hits = np.nonzero(generator.random(n) < -np.expm1(-lam * dt))[0]
            if hits.size:
                t_nuc = float(tw[int(hits[0])] + dt)
                break
            k += n
        if t_nuc is None:
            raise StageTimeoutError(
                "no stochastic nucleation event within the stage horizon",
                stage=STAGE_PRECONDITIONING, t=t + limit)
        ts, ys = _resample(res.sol, t, t_nuc, samples_per_stage)
        record(ts, ys[0], m_w, 0.0, STAGE_PRECONDITIONING)
        T = float(ys[0, -1])
        t = t_nuc
        events["preconditioning_end_s"] = t
        events["visf_end_s"] = t

    # ---- stage 3: nucleation jump ----------------------------------------
    T_post, m_i_n = nucleate_controlled(VialState(T=T, m_w=m_w, t=t), sys)
    events["nucleation_s"] = t
    m_w_nuc = m_w  # liquid water at the nucleation instant, before the jump
    meta["nucleation"] = {
        "trigger_temperature_K": T,
        "post_temperature_K": T_post,
        "ice_mass_kg": m_i_n,
        "water_mass_kg": m_w_nuc - m_i_n,
    }
    meta["visf_water_loss_kg"] = float(initial.m_w) - m_w
    T = T_post

    # ---- stage 4: solidification ------------------------------------------
    h_rad = linearized_radiation_htc(sys.radiation.F_side,
                                     0.5 * (T + p.wall_temperature(t)),
                                     sys.radiation.sigma)
    # completion: total ice reaches the stated fraction of the water present
    # at nucleation
    m_target = p.solidification_fraction * m_w_nuc
    D = f.K_f * mx.m_s / f.M_s

    def rhs4(tt: float, y: np.ndarray):
        m_i = min(max(y[0], 0.0), m_w_nuc * (1.0 - 1.0e-12))
        m_rem = m_w_nuc - m_i
        s = VialState(T=T_FREEZE_WATER - D / m_rem, m_w=m_rem, m_i=m_i, t=tt,
                      stage=STAGE_SOLIDIFICATION)
        return (solidification_rhs(s, sys, h_rad_side=h_rad)[0],)

    done = EventSpec(lambda tt, y: y[0] - m_target, terminal=True, direction=1.0,
                     name="solidified")
    res = integrate_adaptive(rhs4, (t, t + limit), [m_i_n], config, events=[done])
    t4 = res.first_event_time("solidified")
    if t4 is None:
        raise StageTimeoutError("solidification did not reach the target ice fraction",
                                stage=STAGE_SOLIDIFICATION, t=res.t[-1])
    ts, ys = _resample(res.sol, t, t4, samples_per_stage)
    m_is = np.clip(ys[0], 0.0, m_w_nuc)
    m_ws = m_w_nuc - m_is
    Ts = T_FREEZE_WATER - D / m_ws
    record(ts, Ts, m_ws, m_is, STAGE_SOLIDIFICATION)
    t = t4
    m_i = float(m_is[-1])
    m_w = m_w_nuc - m_i
    T = T_FREEZE_WATER - D / m_w
    events["solidification_end_s"] = t

    # ---- stage 5: final cooling --------------------------------------------
    target, tol = p.final_temperature_K, p.final_tolerance_K
    if stop_after == "solidification":
        pass
    elif abs(T - target) > tol:
        falling = T > target  # approach direction decides the band edge crossed

        def rhs5(tt: float, y: np.ndarray):
            s = VialState(T=y[0], m_w=m_w, m_i=m_i, t=tt, stage=STAGE_FINAL_COOLING)
            return (_final_cooling_rhs(s, sys),)

        band = EventSpec(lambda tt, y: abs(y[0] - target) - tol, terminal=True,
                         direction=-1.0, name="target_band")
        res = integrate_adaptive(rhs5, (t, t + limit), [T], config, events=[band])
        t5 = res.first_event_time("target_band")
        if t5 is None:
            raise StageTimeoutError(
                f"final cooling never entered the {target} +/- {tol} K band "
                f"({'cooling' if falling else 'heating'} stalled at {res.y[0, -1]:.2f} K)",
                stage=STAGE_FINAL_COOLING, t=res.t[-1])
        ts, ys = _resample(res.sol, t, t5, samples_per_stage)
        record(ts, ys[0], m_w, m_i, STAGE_FINAL_COOLING)
        T = float(ys[0, -1])
        t = t5
    else:
        record(np.array([t]), T, m_w, m_i, STAGE_FINAL_COOLING)
    events["freezing_end_s"] = t

    # ---- assemble ------------------------------------------------------------
    t_all = np.concatenate([pt[0] for pt in parts])
    T_all = np.concatenate([pt[1] for pt in parts])
    mw_all = np.concatenate([pt[2] for pt in parts])
    mi_all = np.concatenate([pt[3] for pt in parts])
    stage_all: list[str] = []
    for pt in parts:
        stage_all.extend([pt[4]] * pt[0].shape[0])
    meta["final_state"] = VialState(T=T, m_w=m_w, m_i=m_i, t=t, stage=parts[-1][4])
    return Trajectory(
        t=t_all,
        stage=stage_all,
        series={
            "temperature_avg_K": T_all,
            "temperature_bottom_K": T_all.copy(),
            "temperature_top_K": T_all.copy(),
            "water_mass_kg": mw_all,
            "ice_mass_kg": mi_all,
        },
        events=events,
        meta=meta,
    )
