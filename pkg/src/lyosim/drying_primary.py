"""Primary drying: a sublimation front recedes through the frozen product.

The frozen region occupies z in [S(t), H], with z measured downward from
the exposed product top, so the front sits at z = S and the vial bottom at
z = H.  The coordinate map xi = (z - S)/(H - S) fixes the moving domain to
[0, 1]; the price is an advection-like term proportional to the front
velocity.  Spatial derivatives are discretized with second-order central
differences on a uniform xi grid (node 0 on the front, node n_z - 1 on the
bottom); both Neumann boundaries are folded in by ghost-node elimination,
which keeps the scheme second order.

Vapor leaving the front crosses the already-dried cake whose resistance
grows with cake depth, R_p(S) = Rp0 + Rp1 S / (Rp2 + S); the flux is
proportional to the gap between the ice saturation pressure at the front
temperature and the chamber water partial pressure, clamped at zero
because recondensation from the chamber is not modeled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, StageTimeoutError
from .schedules import Schedule
from .solver import EventSpec, IntegratorConfig, integrate_adaptive
from .thermo import RadiationSpec, VialGeometry, psat_sublimation
from .trajectory import Trajectory

__all__ = [
    "STAGE_PRIMARY",
    "PrimaryState", "DryingParams",
    "cake_resistance", "sublimation_flux", "primary_rhs", "run_primary",
]

STAGE_PRIMARY = "primary_drying"


@dataclass
class PrimaryState:
    """Distributed state during primary drying: node temperatures T (K,
    node 0 at the sublimation front) and front position S (m, measured
    from the product top)."""

    T: np.ndarray
    S: float
    t: float = 0.0


@dataclass(frozen=True)
class DryingParams:
    """Frozen/dried-region properties and operating conditions.

    ``rho_f``/``Cp_f``/``k_f`` describe the frozen matrix, ``rho_e`` the
    dried cake; their difference sets how much mass one meter of front
    travel removes.  ``shelf_temperature`` drives the bottom film ``h_b``;
    the top exchanges radiatively with ``upper_temperature`` and the side
    with ``wall_temperature``.  Cake-resistance constants: ``Rp0`` (m/s),
    ``Rp1`` (1/s), ``Rp2`` (m).
    """

    shelf_temperature: Schedule
    wall_temperature: Schedule
    upper_temperature: Schedule
    rho_f: float = 937.0
    Cp_f: float = 2163.0
    k_f: float = 2.07
    rho_e: float = 215.0
    h_b: float = 15.0
    Rp0: float = 1.5e4
    Rp1: float = 3.0e7
    Rp2: float = 10.0
    dH_sub: float = 2.84e6
    p_w_chamber: float = 3.0

    def __post_init__(self) -> None:
        if not self.rho_f > self.rho_e > 0.0:
            raise ConfigurationError("need rho_f > rho_e > 0")
        for name in ("Cp_f", "k_f", "h_b", "Rp0", "Rp2", "dH_sub"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"DryingParams.{name} must be positive")
        if self.Rp1 < 0.0:
            raise ConfigurationError("Rp1 must be nonnegative")
        if self.p_w_chamber < 0.0:
            raise ConfigurationError("chamber water partial pressure must be nonnegative")


def cake_resistance(S: float, dp: DryingParams) -> float:
    """Dried-cake resistance to vapor flow (Pa s m^2/kg equivalent, m/s form)."""
    if S < 0.0:
        raise DomainError("front position must be nonnegative")
    return dp.Rp0 + dp.Rp1 * S / (dp.Rp2 + S)


def sublimation_flux(T_interface: float, S: float, dp: DryingParams,
                     p_w_chamber: float | None = None) -> float:
    """Sublimation mass flux N_w (kg/m^2/s) off the front.

    Clamped at zero when the chamber partial pressure exceeds saturation
    at the front; vapor does not recondense onto the product.
    """
    p_c = dp.p_w_chamber if p_w_chamber is None else p_w_chamber
    driving = psat_sublimation(T_interface) - p_c
    if driving <= 0.0:
        return 0.0
    return driving / cake_resistance(S, dp)


def _make_core(dp: DryingParams, rad: RadiationSpec, geom: VialGeometry,
               n_z: int, gap_floor_rel: float = 0.5e-3
               ) -> Callable[[float, np.ndarray, float, float],
                             tuple[np.ndarray, float, float]]:
    """Build the discretized right-hand side shared by the fixed-pressure
    and chamber-coupled drivers.

    The returned callable maps (t, T, S, p_w_chamber) to (dT/dt, dS/dt,
    N_w) and is total: implicit-solver trial steps may probe unphysical
    states, so the flux vanishes for nonpositive front temperatures (the
    continuous limit, since saturation pressure vanishes there) and the gap
    H - S is floored at ``gap_floor_rel * H`` so the 1/gap^2 diffusion
    coefficient stays bounded when a trial step overshoots the terminal
    event.  Callers tie the floor to half their front-completion margin.
    """
    if n_z < 3:
        raise ConfigurationError("need at least 3 grid nodes")
    H = geom.H
    dxi = 1.0 / (n_z - 1)
    xi = np.linspace(0.0, 1.0, n_z)
    upwind_coef = 1.0 - xi  # advection coefficient (1 - xi_j), zero at the bottom
    k = dp.k_f
    rho_cp = dp.rho_f * dp.Cp_f
    drho = dp.rho_f - dp.rho_e
    side_rad = rad.sigma * rad.F_side * 4.0 * H / geom.d  # A_r / (A_z H) folded in
    gap_floor = gap_floor_rel * H

    def core(t: float, T: np.ndarray, S: float, p_w_c: float):
        gap = max(H - S, gap_floor)
        T_front = T[0]
        # T_front > 0 is False for NaN too; both want a dead flux
        N_w = (sublimation_flux(T_front, max(S, 0.0), dp, p_w_c)
               if T_front > 0.0 else 0.0)
        dS = N_w / drho
        T_b = dp.shelf_temperature(t)
        T_u = dp.upper_temperature(t)
        T_c = dp.wall_temperature(t)
        q_top_rad = rad.sigma * rad.F_top * (T_u**4 - T_front**4)
        Te = np.empty(n_z + 2)
        Te[1:-1] = T
        # ghost nodes fold the front energy balance and the bottom film in
        Te[0] = T[1] - (2.0 * dxi * gap / k) * (N_w * dp.dH_sub - q_top_rad)
        Te[-1] = T[n_z - 2] - (2.0 * dxi * gap * dp.h_b / k) * (T[n_z - 1] - T_b)
        diff = (Te[2:] - 2.0 * T + Te[:-2]) * (k / (rho_cp * gap**2 * dxi**2))
        conv = (Te[2:] - Te[:-2]) * (upwind_coef * dS / (2.0 * dxi * gap))
        q_rad = (side_rad / (rho_cp * gap)) * (T_c**4 - T**4)
        return diff + conv + q_rad, dS, N_w

    return core


def primary_rhs(state: PrimaryState, dp: DryingParams, rad: RadiationSpec,
                geom: VialGeometry) -> tuple[np.ndarray, float]:
    """(dT/dt per node, dS/dt) at a fixed chamber partial pressure."""
    core = _make_core(dp, rad, geom, state.T.shape[0])
    dT, dS, _ = core(state.t, np.asarray(state.T, dtype=float), state.S, dp.p_w_chamber)
    return dT, dS


def jac_sparsity(n_z: int, extra_cols: int = 0) -> np.ndarray:
    """Jacobian sparsity of the discretized system: tridiagonal in T, plus
    full coupling to the front node (through dS/dt) and to S (through the
    gap).  ``extra_cols`` appends further dense state columns/rows (the
    chamber pressure in failure mode)."""
    n = n_z + 1 + extra_cols
    A = np.zeros((n, n), dtype=int)
    idx = np.arange(n_z)
    A[idx, idx] = 1
    A[idx[:-1], idx[:-1] + 1] = 1
    A[idx[1:], idx[1:] - 1] = 1
    A[:, 0] = 1  # every equation senses the front temperature via dS/dt
    A[:, n_z:] = 1  # the front position (and any appended states) enter everywhere
    A[n_z:, 0] = 1
    A[n_z:, n_z:] = 1
    return A


def _volume_average(values: np.ndarray) -> np.ndarray:
    """Trapezoidal average over a uniform grid; works on (..., n_z) arrays."""
    n = values.shape[-1]
    w = np.full(n, 1.0 / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return values @ w


def run_primary(initial_temperature: float | np.ndarray,
                dp: DryingParams, rad: RadiationSpec, geom: VialGeometry, *,
                n_z: int = 51,
                config: IntegratorConfig = IntegratorConfig(),
                t0: float = 0.0,
                S0: float = 0.0,
                time_limit_s: float = 1.0e6,
                samples: int = 400,
                front_epsilon_rel: float = 1.0e-3) -> Trajectory:
    """Integrate primary drying until the front reaches the vial bottom.

    ``initial_temperature`` may be a scalar (uniform profile, the usual
    chained start) or a length-``n_z`` array.  The moving-domain transform
    is singular at S = H, so the integration stops at the terminal event
    S = H (1 - front_epsilon_rel) and the removal of the remaining ice
    sliver (a fraction ``front_epsilon_rel`` of the ice) is completed by
    linear extrapolation at the terminal front speed; the final trajectory
    row marks completion with the front at H, zero flux, and zero ice.  If
    the horizon ``time_limit_s`` elapses before the event a
    :class:`StageTimeoutError` reports whether the front stalled for lack
    of driving force.  The trajectory carries the full temperature field
    under ``fields["temperature_K"]``.
    """
    H = geom.H
    if samples < 2:
        raise ConfigurationError("need at least 2 trajectory samples")
    if not 0.0 < front_epsilon_rel < 0.1:
        raise ConfigurationError("front_epsilon_rel must lie in (0, 0.1)")
    S_stop = H * (1.0 - front_epsilon_rel)
    if not 0.0 <= S0 < S_stop:
        raise ConfigurationError(
            "initial front position must lie in [0, H (1 - front_epsilon_rel))")
    T0 = np.asarray(initial_temperature, dtype=float)
    if T0.ndim == 0:
        T0 = np.full(n_z, float(T0))
    elif T0.shape != (n_z,):
        raise ConfigurationError(f"initial profile must have shape ({n_z},)")
    core = _make_core(dp, rad, geom, n_z, gap_floor_rel=0.5 * front_epsilon_rel)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        dT, dS, _ = core(t, y[:n_z], y[n_z], dp.p_w_chamber)
        return np.concatenate([dT, [dS]])

    done = EventSpec(lambda t, y: y[n_z] - S_stop, terminal=True, direction=1.0,
                     name="front_complete")
    res = integrate_adaptive(rhs, (t0, t0 + time_limit_s),
                             np.concatenate([T0, [S0]]), config,
                             events=[done], jac_sparsity=jac_sparsity(n_z))
    t_end = res.first_event_time("front_complete")
    if t_end is None:
        S_last = float(res.y[n_z, -1])
        flux = sublimation_flux(float(res.y[0, -1]), S_last, dp)
        detail = ("sublimation driving force is nonpositive (front temperature too "
                  "cold for the chamber pressure)" if flux <= 0.0
                  else f"front still moving at {flux:.3e} kg/m^2/s")
        raise StageTimeoutError(
            f"front reached {S_last / H:.4f} of the product height within the time "
            f"horizon; {detail}", stage=STAGE_PRIMARY, t=res.t[-1])

    # extrapolate removal of the last ice sliver at the terminal front speed
    y_end = res.sol(t_end)
    T_end = y_end[:n_z].copy()
    dS_end = sublimation_flux(T_end[0], S_stop, dp) / (dp.rho_f - dp.rho_e)
    t_complete = t_end + (H - S_stop) / dS_end if dS_end > 0.0 else t_end

    ts = np.linspace(t0, t_end, samples - 1)
    ys = res.sol(ts)
    T_hist = np.vstack([ys[:n_z, :].T, T_end])  # (n_time, n_z)
    S_hist = np.append(np.clip(ys[n_z, :], 0.0, H), H)
    ts = np.append(ts, t_complete)
    N_w = np.array([sublimation_flux(T_hist[i, 0], S_hist[i], dp)
                    for i in range(ts.shape[0] - 1)] + [0.0])
    A_z = geom.A_z
    ice = (dp.rho_f - dp.rho_e) * A_z * (H - S_hist)
    traj = Trajectory(
        t=ts,
        stage=[STAGE_PRIMARY] * ts.shape[0],
        series={
            "temperature_avg_K": _volume_average(T_hist),
            "temperature_bottom_K": T_hist[:, -1].copy(),
            "temperature_top_K": T_hist[:, 0].copy(),
            "ice_mass_kg": ice,
            "front_position_m": S_hist.copy(),
            "sublimation_flux_kg_per_m2s": N_w,
            "chamber_water_pressure_Pa": np.full(ts.shape, dp.p_w_chamber),
        },
        fields={"temperature_K": T_hist},
        events={"primary_drying_end_s": float(t_complete)},
    )
    traj.meta["final_state"] = PrimaryState(T=T_end, S=H, t=float(t_complete))
    traj.meta["sublimed_mass_kg"] = float((dp.rho_f - dp.rho_e) * A_z * H)
    traj.meta["duration_s"] = float(t_complete - t0)
    traj.meta["n_z"] = n_z
    return traj


def steady_profile_residual(state: PrimaryState, dp: DryingParams,
                            rad: RadiationSpec, geom: VialGeometry) -> float:
    """Max |dT/dt| of a candidate steady profile; diagnostic for tests."""
    dT, _ = primary_rhs(state, dp, rad, geom)
    return float(np.max(np.abs(dT)))
