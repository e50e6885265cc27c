"""Secondary drying: desorption of bound water from the dried cake.

The cake occupies the fixed domain z in [0, H] (node 0 at the exposed top,
node n_z - 1 at the vial bottom).  Bound water desorbs node-by-node with
first-order linear-driving-force kinetics whose rate constant is Arrhenius
in the local temperature; desorption is endothermic and shows up as a heat
sink in the energy balance.  Heat enters through the bottom film against
the shelf-gas temperature, radiation from the upper surface onto the top,
and distributed radiation from the chamber wall through the glass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StageTimeoutError
from .schedules import Schedule
from .solver import EventSpec, IntegratorConfig, integrate_adaptive
from .thermo import GAS_CONSTANT, RadiationSpec, VialGeometry
from .trajectory import Trajectory

__all__ = [
    "STAGE_SECONDARY",
    "SecondaryState", "DesorptionKinetics", "DryingConditions",
    "desorption_rate", "secondary_rhs", "run_secondary",
]

STAGE_SECONDARY = "secondary_drying"


@dataclass
class SecondaryState:
    """Distributed state: node temperatures (K) and bound-water contents
    (kg water per kg solid), top node first."""

    T: np.ndarray
    c_w: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class DesorptionKinetics:
    """Desorption kinetics and effective dried-cake properties.

    dc_w/dt = -f_a exp(-E_a / (R T)) (c_w - c_eq); ``rho_d`` converts the
    per-solid water content into a volumetric source, ``dH_des`` is the
    desorption heat, and ``k_e``/``rho_e``/``Cp_e`` are the effective
    conduction properties of the cake.
    """

    f_a: float = 1.5e-3  # 1/s
    E_a: float = 6500.0  # J/mol
    R: float = GAS_CONSTANT
    c_eq: float = 0.0  # kg/kg equilibrium bound water
    rho_d: float = 212.21  # kg/m^3 solid basis for the desorption heat source
    dH_des: float = 2.68e6  # J/kg
    k_e: float = 0.217  # W/m/K
    rho_e: float = 215.0  # kg/m^3
    Cp_e: float = 2590.0  # J/kg/K

    def __post_init__(self) -> None:
        if self.f_a < 0.0 or self.E_a < 0.0:
            raise ConfigurationError("Arrhenius parameters must be nonnegative")
        if self.R <= 0.0:
            raise ConfigurationError("gas constant must be positive")
        if self.c_eq < 0.0:
            raise ConfigurationError("equilibrium bound water must be nonnegative")
        for name in ("rho_d", "dH_des", "k_e", "rho_e", "Cp_e"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"DesorptionKinetics.{name} must be positive")

    def rate_constant(self, T):
        """Arrhenius desorption rate constant k_d (1/s); accepts arrays."""
        return self.f_a * np.exp(-self.E_a / (self.R * np.asarray(T, dtype=float)))


@dataclass(frozen=True)
class DryingConditions:
    """Boundary conditions of a fixed-grid drying stage."""

    shelf_temperature: Schedule
    wall_temperature: Schedule
    upper_temperature: Schedule
    h_b: float = 15.0

    def __post_init__(self) -> None:
        if self.h_b <= 0.0:
            raise ConfigurationError("bottom film coefficient must be positive")


def desorption_rate(T, c_w, kin: DesorptionKinetics):
    """dc_w/dt (1/s, per kg solid) of the linear-driving-force model;
    vanishes at equilibrium and is negative above it.  Vectorized."""
    return -kin.rate_constant(T) * (np.asarray(c_w, dtype=float) - kin.c_eq)


def _volume_average(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    w = np.full(n, 1.0 / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return values @ w


def secondary_rhs(state: SecondaryState, kin: DesorptionKinetics, rad: RadiationSpec,
                  cond: DryingConditions, geom: VialGeometry) -> tuple[np.ndarray, np.ndarray]:
    """(dT/dt, dc_w/dt) of the discretized cake equations."""
    T = np.asarray(state.T, dtype=float)
    c = np.asarray(state.c_w, dtype=float)
    n_z = T.shape[0]
    if n_z < 3:
        raise ConfigurationError("need at least 3 grid nodes")
    dz = geom.H / (n_z - 1)
    t = state.t
    dc = desorption_rate(T, c, kin)
    rho_cp = kin.rho_e * kin.Cp_e
    T_b = cond.shelf_temperature(t)
    T_u = cond.upper_temperature(t)
    T_c = cond.wall_temperature(t)
    Te = np.empty(n_z + 2)
    Te[1:-1] = T
    # ghost nodes carry the top radiative flux and the bottom film condition
    Te[0] = T[1] + (2.0 * dz / kin.k_e) * rad.sigma * rad.F_top * (T_u**4 - T[0]**4)
    Te[-1] = T[n_z - 2] - (2.0 * dz * cond.h_b / kin.k_e) * (T[n_z - 1] - T_b)
    diff = (Te[2:] - 2.0 * T + Te[:-2]) * (kin.k_e / (rho_cp * dz**2))
    sink = (kin.rho_d * kin.dH_des / rho_cp) * dc
    # lateral radiation: A_side / V_cake = 4 / d regardless of fill height
    q_rad = (rad.sigma * rad.F_side * 4.0 / (geom.d * rho_cp)) * (T_c**4 - T**4)
    return diff + sink + q_rad, dc


def jac_sparsity(n_z: int) -> np.ndarray:
    """Block sparsity: tridiagonal T block, diagonal T<->c coupling."""
    n = 2 * n_z
    A = np.zeros((n, n), dtype=int)
    idx = np.arange(n_z)
    A[idx, idx] = 1
    A[idx[:-1], idx[:-1] + 1] = 1
    A[idx[1:], idx[1:] - 1] = 1
    A[idx, n_z + idx] = 1  # dT/dt senses the local desorption rate
    A[n_z + idx, idx] = 1  # dc/dt senses the local temperature
    A[n_z + idx, n_z + idx] = 1
    return A


def run_secondary(initial_temperature: float | np.ndarray,
                  initial_bound_water: float | np.ndarray,
                  kin: DesorptionKinetics, rad: RadiationSpec,
                  cond: DryingConditions, geom: VialGeometry, *,
                  c_target: float = 0.01,
                  n_z: int = 51,
                  config: IntegratorConfig = IntegratorConfig(),
                  t0: float = 0.0,
                  time_limit_s: float = 1.0e6,
                  samples: int = 400,
                  require_target: bool = True,
                  stage_label: str = STAGE_SECONDARY) -> Trajectory:
    """Integrate secondary drying until the volume-averaged bound water
    falls to ``c_target`` (kg/kg).

    Initial fields may be scalars (uniform) or length-``n_z`` arrays; the
    chained start copies the primary-drying profile node by node.  With
    ``require_target=False`` the run simply ends at the horizon when the
    target is not reached (used for fixed-duration conduction holds);
    otherwise that raises :class:`StageTimeoutError`.  ``stage_label``
    renames the stage column and end event, e.g. for post-heating holds.
    """
    def as_profile(v, name: str) -> np.ndarray:
        a = np.asarray(v, dtype=float)
        if a.ndim == 0:
            return np.full(n_z, float(a))
        if a.shape != (n_z,):
            raise ConfigurationError(f"{name} must be scalar or shape ({n_z},)")
        return a.copy()

    T0 = as_profile(initial_temperature, "initial temperature")
    c0 = as_profile(initial_bound_water, "initial bound water")
    if np.any(c0 < 0.0):
        raise ConfigurationError("bound water cannot be negative")
    w = np.full(n_z, 1.0 / (n_z - 1))
    w[0] *= 0.5
    w[-1] *= 0.5

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        dT, dc = secondary_rhs(SecondaryState(T=y[:n_z], c_w=y[n_z:], t=t),
                               kin, rad, cond, geom)
        return np.concatenate([dT, dc])

    if float(c0 @ w) <= c_target:
        # nothing to remove; the stage completes instantly
        traj = _package(np.array([t0]), T0[None, :], c0[None, :], w, t0, stage_label)
        traj.meta["final_state"] = SecondaryState(T=T0, c_w=c0, t=t0)
        return traj

    done = EventSpec(lambda t, y: float(y[n_z:] @ w) - c_target, terminal=True,
                     direction=-1.0, name="dry_enough")
    events = [done] if c_target >= 0.0 else []
    res = integrate_adaptive(rhs, (t0, t0 + time_limit_s),
                             np.concatenate([T0, c0]), config,
                             events=events, jac_sparsity=jac_sparsity(n_z))
    t_end = res.first_event_time("dry_enough") if events else None
    if t_end is None:
        if require_target:
            c_last = float(res.y[n_z:, -1] @ w)
            raise StageTimeoutError(
                f"average bound water only fell to {c_last:.4g} kg/kg (target "
                f"{c_target:.4g}) within the horizon", stage=STAGE_SECONDARY,
                t=res.t[-1])
        t_end = float(res.t[-1])

    ts = np.linspace(t0, t_end, samples)
    ys = res.sol(ts)
    T_hist = ys[:n_z, :].T
    c_hist = ys[n_z:, :].T
    traj = _package(ts, T_hist, c_hist, w, t_end, stage_label)
    traj.meta["final_state"] = SecondaryState(T=T_hist[-1].copy(), c_w=c_hist[-1].copy(),
                                              t=float(t_end))
    return traj


def _package(ts: np.ndarray, T_hist: np.ndarray, c_hist: np.ndarray,
             w: np.ndarray, t_end: float, stage_label: str) -> Trajectory:
    traj = Trajectory(
        t=ts,
        stage=[stage_label] * ts.shape[0],
        series={
            "temperature_avg_K": T_hist @ w,
            "temperature_bottom_K": T_hist[:, -1].copy(),
            "temperature_top_K": T_hist[:, 0].copy(),
            "bound_water_avg_kg_per_kg": c_hist @ w,
        },
        fields={"temperature_K": T_hist, "bound_water_kg_per_kg": c_hist},
        events={f"{stage_label}_end_s": float(t_end)},
    )
    traj.meta["duration_s"] = float(ts[-1] - ts[0])
    traj.meta["n_z"] = T_hist.shape[1]
    return traj
