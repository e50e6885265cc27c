"""Five-stage freezing model: stage RHS oracles, events, and conservation."""

import math

import numpy as np
import pytest

from lyosim import (
    ConfigurationError,
    ControlledNucleation,
    DomainError,
    Formulation,
    FreezingProtocol,
    FreezingSystem,
    IntegratorConfig,
    RadiationSpec,
    Schedule,
    StochasticNucleation,
    VialState,
    mixture_properties,
    run_freezing,
)
from lyosim.freezing import (
    first_nucleation_time,
    nucleate_controlled,
    nucleation_hazard,
    nucleation_probability,
    preconditioning_rhs,
    sample_stochastic_nucleation,
    solidification_rhs,
    visf_rhs,
)
from lyosim.thermo import freezing_point


@pytest.fixture(scope="module")
def mix():
    return mixture_properties(Formulation(), Cp_f_override=2163.0, k_f_override=2.07)


def _isothermal_system(mix, T_env, p_t=1.0e4, **kw):
    proto = FreezingProtocol(
        gas_temperature=Schedule.constant(T_env),
        wall_temperature=Schedule.constant(T_env),
        upper_temperature=Schedule.constant(T_env),
        total_pressure=Schedule.constant(p_t),
        **kw,
    )
    return FreezingSystem(mixture=mix, radiation=RadiationSpec(), protocol=proto)


# --- protocol validation ------------------------------------------------------

def test_protocol_validation(mix):
    base = dict(
        gas_temperature=Schedule.constant(250.0),
        wall_temperature=Schedule.constant(250.0),
        upper_temperature=Schedule.constant(250.0),
        total_pressure=Schedule.constant(1.0e4),
    )
    FreezingProtocol(**base)
    with pytest.raises(ConfigurationError):
        FreezingProtocol(**base, h_top=-1.0)
    with pytest.raises(ConfigurationError):
        FreezingProtocol(**base, solidification_fraction=0.5)
    with pytest.raises(ConfigurationError):
        FreezingProtocol(**base, solidification_fraction=0.99)
    with pytest.raises(ConfigurationError):
        FreezingProtocol(**base, final_tolerance_K=0.0)
    # a stochastic trigger replaces the depressurization stage entirely
    with pytest.raises(ConfigurationError):
        FreezingProtocol(**base, nucleation=StochasticNucleation(), visf_start_s=100.0)
    FreezingProtocol(**base, nucleation=StochasticNucleation(), visf_start_s=None)


def test_nucleation_spec_validation():
    with pytest.raises(ConfigurationError):
        ControlledNucleation(temperature_K=0.0)
    with pytest.raises(ConfigurationError):
        StochasticNucleation(rate_prefactor=-1.0)
    with pytest.raises(ConfigurationError):
        StochasticNucleation(rate_exponent=0.0)
    with pytest.raises(ConfigurationError):
        StochasticNucleation(sampling_interval_s=0.0)


# --- single-phase cooling ------------------------------------------------------

def test_preconditioning_cools_toward_gas(mix):
    sys_ = _isothermal_system(mix, 250.0)
    state = VialState(T=293.15, m_w=mix.m_w0)
    assert preconditioning_rhs(state, sys_) < 0.0
    # at the environment temperature every driving force vanishes
    state_eq = VialState(T=250.0, m_w=mix.m_w0)
    assert preconditioning_rhs(state_eq, sys_) == pytest.approx(0.0, abs=1e-15)
    # below it the product warms back up
    state_cold = VialState(T=240.0, m_w=mix.m_w0)
    assert preconditioning_rhs(state_cold, sys_) > 0.0


# --- vacuum-induced surface freezing --------------------------------------------

def test_visf_flux_oracle(mix):
    # environment pinned at the product temperature isolates the latent term:
    # dm_w = -h_m A_z x_sat(268 K), dT = dH_vap dm_w / C
    sys_ = _isothermal_system(mix, 268.0, p_t=1.0e4)
    dT, dm_w = visf_rhs(VialState(T=268.0, m_w=mix.m_w0), sys_)
    assert dm_w == pytest.approx(-7.754590684670247e-8, rel=1e-12)
    assert dT == pytest.approx(-0.016044101301645207, rel=1e-12)


def test_visf_cooling_strengthens_at_low_pressure(mix):
    sys_lo = _isothermal_system(mix, 268.0, p_t=5.0e3)
    sys_hi = _isothermal_system(mix, 268.0, p_t=5.0e4)
    st = VialState(T=268.0, m_w=mix.m_w0)
    dT_lo, dm_lo = visf_rhs(st, sys_lo)
    dT_hi, dm_hi = visf_rhs(st, sys_hi)
    assert dm_lo < dm_hi < 0.0
    assert dT_lo < dT_hi < 0.0


def test_visf_rejects_saturated_atmosphere(mix):
    # total pressure below the water saturation pressure
    sys_ = _isothermal_system(mix, 268.0, p_t=100.0)
    with pytest.raises(DomainError):
        visf_rhs(VialState(T=268.0, m_w=mix.m_w0), sys_)


# --- nucleation jump -------------------------------------------------------------

def test_controlled_nucleation_oracle(mix):
    sys_ = _isothermal_system(mix, 268.0)
    T_eq, m_i = nucleate_controlled(VialState(T=268.0, m_w=mix.m_w0), sys_)
    assert T_eq == pytest.approx(272.84521643688333, rel=1e-12)
    assert m_i == pytest.approx(1.7904124950395895e-4, rel=1e-10)


def test_nucleation_jump_is_self_consistent(mix):
    sys_ = _isothermal_system(mix, 260.0)
    f = mix.formulation
    T_n, m_w = 262.0, mix.m_w0
    T_eq, m_i = nucleate_controlled(VialState(T=T_n, m_w=m_w), sys_)
    # post-jump temperature equals the depressed freezing point of what is left
    assert T_eq == pytest.approx(freezing_point(mix.m_s, m_w - m_i, f), abs=1e-9)
    # latent heat released matches the sensible heating, to machine precision
    C = mix.m_s * f.Cp_s + m_w * f.Cp_w
    assert (T_eq - T_n) * C == pytest.approx(m_i * 3.34e5, rel=1e-12)
    # deeper supercooling freezes more water instantly
    T_eq2, m_i2 = nucleate_controlled(VialState(T=258.0, m_w=m_w), sys_)
    assert m_i2 > m_i
    assert T_eq2 < T_eq


def test_nucleation_requires_supercooling(mix):
    sys_ = _isothermal_system(mix, 272.0)
    with pytest.raises(DomainError):
        nucleate_controlled(VialState(T=273.0, m_w=mix.m_w0), sys_)


# --- stochastic nucleation --------------------------------------------------------

def _stochastic_system(mix, T_env, **nuc_kw):
    proto = FreezingProtocol(
        gas_temperature=Schedule.constant(T_env),
        wall_temperature=Schedule.constant(T_env),
        upper_temperature=Schedule.constant(T_env),
        total_pressure=Schedule.constant(1.0e5),
        nucleation=StochasticNucleation(**nuc_kw),
        visf_start_s=None,
    )
    return FreezingSystem(mixture=mix, radiation=RadiationSpec(), protocol=proto)


def test_hazard_oracle(mix):
    sys_ = _stochastic_system(mix, 250.0)
    T_eq = freezing_point(mix.m_s, mix.m_w0, mix.formulation)
    # lambda = k_n dT^10 V_liq with V_liq = 3.0e-6 m^3
    assert nucleation_hazard(T_eq - 5.0, mix.m_w0, sys_) == pytest.approx(
        2.9296875e-4, rel=1e-12)
    # no supercooling, no hazard
    assert nucleation_hazard(T_eq + 1.0, mix.m_w0, sys_) == 0.0
    lam = nucleation_hazard(np.array([T_eq - 5.0, T_eq, T_eq + 5.0]), mix.m_w0, sys_)
    assert lam[0] > 0.0 and lam[1] == 0.0 and lam[2] == 0.0


def test_hazard_requires_stochastic_spec(mix):
    sys_ = _isothermal_system(mix, 250.0)
    with pytest.raises(ConfigurationError):
        nucleation_hazard(260.0, mix.m_w0, sys_)


def test_nucleation_probability():
    assert nucleation_probability(0.0, 1.0) == 0.0
    assert nucleation_probability(0.5, 2.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)
    # saturates, never exceeds 1
    assert nucleation_probability(1.0e6, 1.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        nucleation_probability(-1.0, 1.0)
    with pytest.raises(DomainError):
        nucleation_probability(1.0, 0.0)


def test_first_nucleation_time_reproducible(mix, rng):
    sys_ = _stochastic_system(mix, 250.0, sampling_interval_s=0.5)
    T_eq = freezing_point(mix.m_s, mix.m_w0, mix.formulation)
    T_held = T_eq - 9.0
    t1 = first_nucleation_time(T_held, mix.m_w0, sys_, np.random.default_rng(42))
    t2 = first_nucleation_time(T_held, mix.m_w0, sys_, np.random.default_rng(42))
    t3 = first_nucleation_time(T_held, mix.m_w0, sys_, np.random.default_rng(43))
    assert t1 == t2
    assert t1 != t3
    # times land on interval ends
    assert t1 is not None and t1 % 0.5 == 0.0 and t1 > 0.0


def test_first_nucleation_time_none_without_hazard(mix, rng):
    sys_ = _stochastic_system(mix, 280.0)
    T_eq = freezing_point(mix.m_s, mix.m_w0, mix.formulation)
    assert first_nucleation_time(T_eq + 2.0, mix.m_w0, sys_, rng) is None
    # bounded walk gives up at t_max
    sys_slow = _stochastic_system(mix, 250.0)
    assert first_nucleation_time(T_eq - 0.5, mix.m_w0, sys_slow, rng,
                                 t_max=10.0) is None


def test_sample_stochastic_nucleation_bernoulli(mix):
    sys_ = _stochastic_system(mix, 250.0)
    T_eq = freezing_point(mix.m_s, mix.m_w0, mix.formulation)
    st = VialState(T=T_eq - 12.0, m_w=mix.m_w0)
    lam = nucleation_hazard(st.T, st.m_w, sys_)
    dt = 0.1
    n = 4000
    rng = np.random.default_rng(7)
    hits = sum(sample_stochastic_nucleation(st, sys_, dt, rng) for _ in range(n))
    p = nucleation_probability(lam, dt)
    # binomial 4-sigma band
    assert abs(hits / n - p) < 4.0 * math.sqrt(p * (1.0 - p) / n)


# --- solidification ---------------------------------------------------------------

def test_solidification_grows_ice_when_cooled(mix):
    sys_ = _isothermal_system(mix, 230.0)
    T_eq, m_i0 = nucleate_controlled(VialState(T=265.0, m_w=mix.m_w0), sys_)
    st = VialState(T=T_eq, m_w=mix.m_w0 - m_i0, m_i=m_i0)
    dm_i, dT = solidification_rhs(st, sys_, h_rad_side=2.5)
    assert dm_i > 0.0
    # temperature slaved to the deepening depression
    assert dT < 0.0
    f = mix.formulation
    D = f.K_f * mix.m_s / f.M_s
    assert dT == pytest.approx(-(D / st.m_w**2) * dm_i, rel=1e-12)


def test_solidification_needs_liquid(mix):
    sys_ = _isothermal_system(mix, 230.0)
    with pytest.raises(DomainError):
        solidification_rhs(VialState(T=270.0, m_w=0.0, m_i=mix.m_w0), sys_,
                           h_rad_side=2.5)


# --- full stage machine -------------------------------------------------------------

@pytest.fixture(scope="module")
def controlled_run(mix):
    proto = FreezingProtocol(
        gas_temperature=Schedule(((3600.0, 268.0), (3630.0, 230.0))),
        wall_temperature=Schedule(((3600.0, 273.0), (3630.0, 240.0))),
        upper_temperature=Schedule(((3600.0, 273.0), (3630.0, 240.0))),
        total_pressure=Schedule(((3600.0, 1.0e5), (3630.0, 1.0e4))),
        visf_start_s=3600.0,
        final_temperature_K=235.0,
        final_tolerance_K=0.5,
    )
    sys_ = FreezingSystem(mixture=mix, radiation=RadiationSpec(), protocol=proto)
    initial = VialState(T=298.15, m_w=mix.m_w0)
    return run_freezing(initial, sys_, IntegratorConfig(), samples_per_stage=150)


def test_stage_events_ordered(controlled_run):
    ev = controlled_run.events
    order = ["preconditioning_end_s", "visf_end_s", "nucleation_s",
             "solidification_end_s", "freezing_end_s"]
    for name in order:
        assert name in ev
    times = [ev[k] for k in order]
    assert times == sorted(times)
    assert ev["preconditioning_end_s"] == pytest.approx(3600.0)
    assert ev["visf_end_s"] == ev["nucleation_s"]


def test_time_axis_and_stage_labels(controlled_run):
    t = controlled_run.t
    assert np.all(np.diff(t) >= 0.0)
    stages = list(dict.fromkeys(controlled_run.stage))
    assert stages == ["preconditioning", "visf", "solidification", "final_cooling"]


def test_masses_conserved_and_nonnegative(controlled_run, mix):
    m_w = controlled_run.series["water_mass_kg"]
    m_i = controlled_run.series["ice_mass_kg"]
    T = controlled_run.series["temperature_avg_K"]
    assert np.all(m_w >= 0.0) and np.all(m_i >= 0.0)
    assert np.all(T > 0.0)
    # ice only appears at nucleation, water only decreases
    assert m_i[0] == 0.0
    assert np.all(np.diff(m_w) <= 1e-18)
    # during solidification the condensed total is pinned to the
    # post-nucleation inventory exactly
    sol = np.array(controlled_run.stage) == "solidification"
    total = m_w[sol] + m_i[sol]
    nuc = controlled_run.meta["nucleation"]
    expected = nuc["water_mass_kg"] + nuc["ice_mass_kg"]
    assert np.max(np.abs(total - expected)) == 0.0


def test_visf_water_loss_recorded(controlled_run, mix):
    loss = controlled_run.meta["visf_water_loss_kg"]
    assert loss > 0.0
    m_w = controlled_run.series["water_mass_kg"]
    assert m_w[0] == pytest.approx(mix.m_w0)
    nuc = controlled_run.meta["nucleation"]
    # all pre-nucleation loss is evaporation
    assert mix.m_w0 - (nuc["water_mass_kg"] + nuc["ice_mass_kg"]) == pytest.approx(
        loss, rel=1e-9)
    # trigger temperature honors the controlled setting
    assert nuc["trigger_temperature_K"] == pytest.approx(268.0, abs=1e-6)
    assert nuc["post_temperature_K"] > nuc["trigger_temperature_K"]


def test_final_state_in_band(controlled_run):
    fs = controlled_run.meta["final_state"]
    assert fs.stage == "final_cooling"
    assert abs(fs.T - 235.0) <= 0.5 + 1e-9
    assert fs.m_w < 0.06 * (fs.m_w + fs.m_i)  # ~95% of the water frozen


def test_solidified_fraction_matches_protocol(controlled_run, mix):
    nuc = controlled_run.meta["nucleation"]
    fs = controlled_run.meta["final_state"]
    m_w_nuc = nuc["water_mass_kg"] + nuc["ice_mass_kg"]
    assert fs.m_i == pytest.approx(0.95 * m_w_nuc, rel=1e-9)


def test_stop_after_truncates_stages(mix):
    proto = FreezingProtocol(
        gas_temperature=Schedule.constant(240.0),
        wall_temperature=Schedule.constant(240.0),
        upper_temperature=Schedule.constant(240.0),
        total_pressure=Schedule.constant(1.0e5),
        nucleation=ControlledNucleation(temperature_K=266.0),
        visf_start_s=None,
    )
    sys_ = FreezingSystem(mixture=mix, radiation=RadiationSpec(), protocol=proto)
    traj = run_freezing(VialState(T=290.0, m_w=mix.m_w0), sys_,
                        IntegratorConfig(), stop_after="solidification")
    # the overall end marker coincides with the truncation point
    assert traj.events["freezing_end_s"] == traj.events["solidification_end_s"]
    assert traj.stage[-1] == "solidification"
    assert traj.meta["final_state"].stage == "solidification"


def test_stochastic_runs_reproducible(mix):
    def build(seed):
        proto = FreezingProtocol(
            gas_temperature=Schedule.constant(240.0),
            wall_temperature=Schedule.constant(240.0),
            upper_temperature=Schedule.constant(240.0),
            total_pressure=Schedule.constant(1.0e5),
            nucleation=StochasticNucleation(seed=seed),
            visf_start_s=None,
            final_temperature_K=242.0,
            final_tolerance_K=1.0,
        )
        sys_ = FreezingSystem(mixture=mix, radiation=RadiationSpec(), protocol=proto)
        return run_freezing(VialState(T=285.0, m_w=mix.m_w0), sys_,
                            IntegratorConfig(), samples_per_stage=100)

    a, b, c = build(11), build(11), build(12)
    assert a.events["nucleation_s"] == b.events["nucleation_s"]
    assert np.array_equal(a.t, b.t)
    for k in a.series:
        assert np.array_equal(a.series[k], b.series[k])
    assert c.events["nucleation_s"] != a.events["nucleation_s"]
