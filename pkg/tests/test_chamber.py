"""Chamber water balance and condenser-limited primary drying."""

import numpy as np
import pytest

from lyosim import (
    ChamberModel,
    ConfigurationError,
    DryingParams,
    IntegratorConfig,
    RadiationSpec,
    Schedule,
    VialGeometry,
    run_primary,
    run_primary_with_condenser,
)
from lyosim.chamber import chamber_pressure_rhs
from lyosim.drying_primary import sublimation_flux


def _default_dp(**kw):
    base = dict(
        shelf_temperature=Schedule.constant(270.0),
        wall_temperature=Schedule.constant(265.0),
        upper_temperature=Schedule.constant(265.0),
    )
    base.update(kw)
    return DryingParams(**base)


@pytest.fixture(scope="module")
def geom():
    return VialGeometry(d=0.024, H=7.2124292981419705e-3)


def test_chamber_model_validation():
    ChamberModel()
    with pytest.raises(ConfigurationError):
        ChamberModel(V_c=0.0)
    with pytest.raises(ConfigurationError):
        ChamberModel(n_vial=0)
    with pytest.raises(ConfigurationError):
        ChamberModel(j_w_max=-1.0)
    with pytest.raises(ConfigurationError):
        ChamberModel(T_bar=-10.0)
    with pytest.raises(ConfigurationError):
        ChamberModel(p_setpoint=-1.0)
    ChamberModel(j_w_max=0.0)  # dead condenser is allowed


def test_pressure_rhs_oracle():
    ch = ChamberModel()
    # ideal-gas factor R T / (V M) converts net kg/s into Pa/s
    factor = 8.314 * 260.0 / (0.118 * 0.018)
    assert chamber_pressure_rhs(10.0, ch.j_w_max + 1.0e-6, ch) == pytest.approx(
        1.0e-6 * factor, rel=1e-12)
    assert chamber_pressure_rhs(10.0, ch.j_w_max + 1.0e-6, ch) == pytest.approx(
        1.0177212806026368, rel=1e-12)
    # balance point: zero derivative exactly at capacity
    assert chamber_pressure_rhs(10.0, ch.j_w_max, ch) == 0.0


def test_pressure_rhs_setpoint_clamp():
    ch = ChamberModel()
    # at or below the setpoint with spare capacity the controller holds
    assert chamber_pressure_rhs(3.0, 0.5 * ch.j_w_max, ch) == 0.0
    assert chamber_pressure_rhs(2.0, 0.0, ch) == 0.0
    # above the setpoint the condenser is free to pull the pressure down
    assert chamber_pressure_rhs(3.1, 0.5 * ch.j_w_max, ch) < 0.0
    # overload raises the pressure regardless
    assert chamber_pressure_rhs(3.0, 2.0 * ch.j_w_max, ch) > 0.0


@pytest.fixture(scope="module")
def failure_run(geom):
    dp = _default_dp()
    ch = ChamberModel()
    return run_primary_with_condenser(235.0, dp, RadiationSpec(), geom, ch,
                                      config=IntegratorConfig(), samples=300)


def test_pressure_rises_to_plateau(failure_run, geom):
    p = failure_run.series["chamber_water_pressure_Pa"]
    assert p[0] == pytest.approx(3.0)
    assert np.all(p >= 3.0 - 1e-12)
    assert p.max() > 10.0  # far above the setpoint
    # plateau: the collective load balances the condenser capacity, so at
    # the pressure peak |n j_w A - j_max| / j_max is small
    ch = ChamberModel()
    dp = _default_dp()
    i = int(np.argmax(p))
    T_front = failure_run.series["temperature_top_K"][i]
    S = float(failure_run.series["front_position_m"][i])
    load = ch.n_vial * geom.A_z * sublimation_flux(T_front, S, dp, float(p[i]))
    assert abs(load - ch.j_w_max) / ch.j_w_max < 1.0e-3


def test_failure_slows_drying_and_heats_product(failure_run, geom):
    base = run_primary(235.0, _default_dp(), RadiationSpec(), geom,
                       config=IntegratorConfig(), samples=100)
    t_fail = failure_run.events["primary_drying_end_s"]
    t_base = base.events["primary_drying_end_s"]
    assert t_fail > t_base
    assert failure_run.series["temperature_avg_K"].max() > \
        base.series["temperature_avg_K"].max()


def test_front_completes_under_failure(failure_run, geom):
    S = failure_run.series["front_position_m"]
    assert S[-1] == geom.H
    assert np.all(np.diff(S) >= 0.0)
    assert failure_run.series["ice_mass_kg"][-1] == 0.0


def test_oversized_condenser_matches_fixed_pressure(geom):
    # with ample capacity the chamber stays at the setpoint and the run
    # reduces to the uncoupled one
    dp = _default_dp()
    ch = ChamberModel(j_w_max=1.0)
    coupled = run_primary_with_condenser(235.0, dp, RadiationSpec(), geom, ch,
                                         config=IntegratorConfig(), samples=50)
    plain = run_primary(235.0, dp, RadiationSpec(), geom,
                        config=IntegratorConfig(), samples=50)
    p = coupled.series["chamber_water_pressure_Pa"]
    assert np.all(np.abs(p - 3.0) < 1e-9)
    assert coupled.events["primary_drying_end_s"] == pytest.approx(
        plain.events["primary_drying_end_s"], rel=1e-6)


def test_more_vials_push_pressure_higher(geom):
    dp = _default_dp()
    cfg = IntegratorConfig()
    p_peaks = []
    for n in (150, 300):
        traj = run_primary_with_condenser(235.0, dp, RadiationSpec(), geom,
                                          ChamberModel(n_vial=n), config=cfg,
                                          samples=50)
        p_peaks.append(traj.series["chamber_water_pressure_Pa"].max())
    assert p_peaks[1] > p_peaks[0]


def test_run_validations(geom):
    dp = _default_dp()
    ch = ChamberModel()
    with pytest.raises(ConfigurationError):
        run_primary_with_condenser(235.0, dp, RadiationSpec(), geom, ch, samples=1)
    with pytest.raises(ConfigurationError):
        run_primary_with_condenser(235.0, dp, RadiationSpec(), geom, ch,
                                   front_epsilon_rel=0.2)
    with pytest.raises(ConfigurationError):
        run_primary_with_condenser(235.0, dp, RadiationSpec(), geom, ch,
                                   S0=geom.H)
