import numpy as np
import pytest

from compressor_ofo import controller as ofo
from compressor_ofo.compressor import DEFAULT_POLY, DEFAULT_RHO, GasProperties
from compressor_ofo.gp import GpHyperParams
from compressor_ofo.simulation import (PROBE_FLOWS, DemandProfile, GpSnapshot, MapKind, Mode,
                                       Scenario, SimulationTrace, StationConfig, actual_errors,
                                       belief_maps, build_plant, compute_metrics, excess,
                                       plant_respond, run_scenario, steady_mask, sweep_scenarios)

STATION = StationConfig()
SHORT = dict(horizon=150.0)


@pytest.fixture(scope="module")
def short_profile():
    return DemandProfile.generate(3, horizon=150.0)


def test_demand_generator_properties():
    p = DemandProfile.generate(7)
    levels = np.array([M for _, M in p.segments])
    assert len(levels) == 200
    np.testing.assert_array_equal(p.starts(), np.arange(200) * 25.0)
    assert levels.min() >= 220 and levels.max() <= 340
    assert np.abs(np.diff(levels)).max() <= 40 + 1e-12
    assert DemandProfile.generate(7) == p
    assert DemandProfile.generate(8) != p


def test_demand_profile_lookup_and_validation():
    p = DemandProfile(((0, 250.0), (10, 300.0)))
    np.testing.assert_array_equal(p.at(np.array([0.0, 9.9, 10.0, 50.0])), [250, 250, 300, 300])
    with pytest.raises(ValueError):
        DemandProfile(((5, 250.0),))
    with pytest.raises(ValueError):
        DemandProfile(((0, 250.0), (0, 260.0)))
    with pytest.raises(ofo.InfeasibleDemand):
        DemandProfile(((0, 400.0),)).validate((60,) * 3, (125,) * 3)


def test_scenario_validation_and_labels():
    with pytest.raises(ValueError):
        Scenario(horizon=0)
    with pytest.raises(ValueError):
        Scenario(adapt_period=2.5, controller_step=1.0)
    with pytest.raises(ValueError):
        Scenario(demand_period=30.0, adapt_period=25.0)
    with pytest.raises(ValueError):
        Scenario(truth_noise=-0.001)
    assert Scenario(mode="nlp").label == "nlp-polynomial"
    assert Scenario(mode="ofo-adapt", truth_map_kind="sinusoidal", truth_noise=0.001,
                    belief_order="linear").label == "ofo-adapt-sinusoidal-noise-linear"
    assert Scenario().n_steps == 5000


def test_sweep_has_twelve_distinct_cases():
    cases = sweep_scenarios(Scenario())
    assert len(cases) == 12
    assert len({c.label for c in cases}) == 12
    assert all(c.mode is Mode.ADAPT for c in cases)


def test_plant_respond_steady_and_lag():
    plant = build_plant(Scenario(), STATION)
    u = np.array([80.0, 100.0, 110.0])
    y = plant_respond(plant, u, step=0)
    np.testing.assert_array_equal(y.m_c, u)
    prev = np.array([70.0, 70.0, 70.0])
    lag = plant_respond(plant, u, 0, prev, dt=1.0, tau_f=2.0)
    np.testing.assert_allclose(lag.m_c, prev + (1 - np.exp(-0.5)) * (u - prev))
    fast = plant_respond(plant, u, 0, prev, dt=1.0, tau_f=1e-6)
    np.testing.assert_allclose(fast.m_c, u, atol=1e-12)


def test_perfect_belief_power_equals_estimate():
    sc = Scenario(mode=Mode.PERFECT)
    plant = build_plant(sc, STATION)
    belief = [ofo.Belief(b) for b in belief_maps(sc, STATION)]
    u = np.array([75.0, 95.0, 118.0])
    y = plant_respond(plant, u, step=3)
    est = [ofo.estimate_power(belief, GasProperties(), DEFAULT_RHO, u[i], i) for i in range(3)]
    np.testing.assert_allclose(y.W, est, rtol=1e-14)


def test_belief_maps_by_mode():
    assert belief_maps(Scenario(mode=Mode.PERFECT), STATION) == DEFAULT_POLY
    mism = belief_maps(Scenario(mode=Mode.NO_ADAPT, belief_order="constant"), STATION)
    assert mism[0].as_array().tolist() == pytest.approx([0.95 * 0.6291, 0, 0, 0, 0, 0])


def test_nlp_mode_tracks_demand_exactly(short_profile):
    res = run_scenario(Scenario(mode=Mode.NLP, **SHORT), short_profile, STATION)
    np.testing.assert_allclose(res.trace.m_c.sum(axis=1), res.trace.demand, atol=1e-9)
    assert res.metrics.mae_demand <= 1e-9
    assert len(res.nlp_points) == 6
    assert all(m.k == 0 for m in res.gp_models)


def test_adapt_run_records_every_adaptation(short_profile):
    res = run_scenario(Scenario(mode=Mode.ADAPT, **SHORT), short_profile, STATION)
    assert len(res.gp_history) == 6
    assert [s.time for s in res.gp_history] == [0, 25, 50, 75, 100, 125]
    assert all(1 <= m.k <= 6 for m in res.gp_models)
    assert res.trace.gp_probe.shape == (150, 3, 3)


def test_replay_is_bit_identical(short_profile, tmp_path):
    sc = Scenario(mode=Mode.ADAPT, truth_noise=0.001, seed=5, **SHORT)
    a = run_scenario(sc, short_profile, STATION)
    b = run_scenario(sc, short_profile, STATION)
    a.trace.to_csv(tmp_path / "a.csv")
    b.trace.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    c = run_scenario(Scenario(mode=Mode.ADAPT, truth_noise=0.001, seed=6, **SHORT),
                     short_profile, STATION)
    assert not np.array_equal(a.trace.W, c.trace.W)


def test_lag_mode_runs(short_profile):
    res = run_scenario(Scenario(mode=Mode.PERFECT, tau_f=0.5, **SHORT), short_profile, STATION)
    assert not np.array_equal(res.trace.m_c, res.trace.u)
    assert res.metrics.mae_demand < 0.05 * res.metrics.mean_demand


def test_sinusoidal_truth_runs(short_profile):
    res = run_scenario(Scenario(mode=Mode.ADAPT, truth_map_kind=MapKind.SINUSOIDAL, **SHORT),
                       short_profile, STATION)
    assert np.all(np.isfinite(res.trace.W))


def test_trace_csv_columns(short_profile, tmp_path):
    res = run_scenario(Scenario(mode=Mode.PERFECT, **SHORT), short_profile, STATION)
    res.trace.to_csv(tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "time_h,demand,u1,u2,u3,mc1,mc2,mc3,W1,W2,W3,W_total"
    table = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(table[:, 11], table[:, 8:11].sum(axis=1), rtol=1e-11)


def test_steady_mask_excludes_first_fifth():
    p = DemandProfile(((0, 250.0), (10, 260.0)))
    mask = steady_mask(np.arange(20.0), p)
    assert mask.tolist() == [False, False] + [True] * 8 + [False, False] + [True] * 8


def _synthetic_trace(flows_equal_demand=True):
    t = np.arange(10.0)
    demand = np.full(10, 270.0)
    u = np.tile([90.0, 90.0, 90.0], (10, 1))
    mc = u if flows_equal_demand else u + 1.0
    W = np.full((10, 3), 1e7)
    return SimulationTrace(t, demand, u, mc, W, np.zeros((10, 3, 3)))


def test_metrics_trivial_cases():
    sc = Scenario(mode=Mode.NO_ADAPT)
    plant, bases = build_plant(sc, STATION), belief_maps(sc, STATION)
    eps = actual_errors(plant, bases, STATION)
    snaps = [GpSnapshot(float(k), eps.copy(), (0, 0, 0), (GpHyperParams(),) * 3) for k in range(3)]
    profile = DemandProfile(((0, 270.0),))
    m = compute_metrics(_synthetic_trace(), snaps, plant, bases, [], profile, STATION)
    assert m.mae_demand == 0.0
    np.testing.assert_array_equal(m.mae_gp, 0.0)
    np.testing.assert_array_equal(m.delta_fin, 0.0)
    # trapezoid of a constant 3e7 W over 9 h
    assert m.integrated_power == pytest.approx(3e7 * 9 * 3600)
    off = compute_metrics(_synthetic_trace(False), snaps, plant, bases, [], profile, STATION)
    assert off.mae_demand == pytest.approx(3.0)


def test_actual_errors_shape_and_sign():
    sc = Scenario(mode=Mode.NO_ADAPT)
    eps = actual_errors(build_plant(sc, STATION), belief_maps(sc, STATION), STATION)
    assert eps.shape == (3, len(PROBE_FLOWS))
    # the mismatched models scale efficiencies down, so the true map is higher
    assert np.all(eps > 0)


def test_excess():
    assert excess(105.0, 100.0) == pytest.approx(0.05)
