import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cbf_formation.delay_network import Topology, TopologyError
from cbf_formation.dynamics import RobotParams, RobotState
from cbf_formation.passivation import FilterConfig, Variant
from cbf_formation.simulator import Scenario, SimulationError, Trace, metrics, run


def pair(separation=1.5, d=1.0, delay=0.0, **kw):
    top = Topology.from_edges(2, [(0, 1, d)], delay)
    states = [RobotState.at_rest([0.0, 0.0]), RobotState.at_rest([separation, 0.0])]
    return Scenario(top, RobotParams(1.0), states, **kw)


def triangle(delays, dt, h0=0.0, duration=10.0, alpha=1.0):
    top = Topology.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], delays)
    states = [
        RobotState.at_rest([0.0, 0.0]),
        RobotState.at_rest([1.4, 0.1]),
        RobotState.at_rest([0.3, 1.2]),
    ]
    return Scenario(
        top, RobotParams(0.3), states, control_period=dt, duration=duration,
        filter=FilterConfig(alpha=alpha, h0=h0),
    )


TRIANGLE_DELAYS = {(0, 1): 0.2, (1, 0): 0.05, (1, 2): 0.3, (2, 1): 0.1, (0, 2): 0.0, (2, 0): 0.25}


def test_lone_robot_at_rest_stays_put():
    top = Topology(1, {}, {})
    sc = Scenario(top, RobotParams(1.0), [RobotState.at_rest([0.3, -0.7])], duration=5.0)
    tr = run(sc)
    assert tr.z.shape == (sc.n_steps + 1, 1, 2)
    np.testing.assert_array_equal(tr.z[:, 0], np.tile([0.3, -0.7], (len(tr.time), 1)))
    np.testing.assert_array_equal(tr.x, 0.0)


def test_pair_converges_and_matches_adaptive_reference():
    sc = pair(control_period=0.005, duration=30.0)
    tr = run(sc)
    assert abs(tr.edge_distance[-1, 0] - 1.0) <= 0.01

    # continuous-time closed loop of the same pair, integrated adaptively
    def rhs(t, s):
        z0, z1, x0, x1 = s[0:2], s[2:4], s[4:6], s[6:8]
        r = z1 - z0
        w = r @ r - 1.0
        return np.concatenate([x0, x1, -x0 + w * r, -x1 - w * r])

    s0 = np.array([0.0, 0.0, 1.5, 0.0, 0, 0, 0, 0])
    ref = solve_ivp(rhs, (0, 30), s0, method="DOP853", rtol=1e-11, atol=1e-12, t_eval=tr.time)
    ref_dist = np.linalg.norm(ref.y[2:4] - ref.y[0:2], axis=0)
    assert abs(ref_dist[-1] - 1.0) <= 0.01
    # zero-order hold over 5 ms keeps the sampled loop close to the continuous one
    assert np.max(np.abs(tr.edge_distance[:, 0] - ref_dist)) < 5e-3


def test_same_scenario_gives_identical_trace():
    a = run(triangle(TRIANGLE_DELAYS, 0.02, h0=0.01, duration=3.0))
    b = run(triangle(TRIANGLE_DELAYS, 0.02, h0=0.01, duration=3.0))
    assert a.as_table().tobytes() == b.as_table().tobytes()


def test_trace_layout():
    tr = run(triangle(TRIANGLE_DELAYS, 0.05, h0=0.01, duration=1.0))
    table = tr.as_table()
    cols = tr.columns()
    assert table.shape == (21, len(cols))
    assert cols[:13] == [
        "time", "z0_x", "z0_y", "x0_x", "x0_y", "unom0_x", "unom0_y",
        "u0_x", "u0_y", "sigma0", "h0", "slack0", "supply0",
    ]
    assert cols[-3:] == ["dist_0_1", "dist_0_2", "dist_1_2"]
    np.testing.assert_allclose(tr.time, np.arange(21) * 0.05)


def test_csv_round_trip(tmp_path):
    tr = run(triangle(TRIANGLE_DELAYS, 0.05, h0=0.01, duration=1.0))
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == tr.columns()
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back, tr.as_table())


def test_filter_keeps_ledger_nonnegative_and_slack():
    tr = run(triangle(TRIANGLE_DELAYS, 0.02, h0=0.0))
    # alpha * dt < 1 keeps the discrete ledger nonnegative up to cancellation roundoff
    assert np.nanmin(tr.h) >= -1e-15
    assert np.nanmin(tr.slack) >= -1e-12


def test_certificate_and_conservation_are_first_order():
    results = []
    for dt in (0.02, 0.01, 0.005):
        sc = triangle(TRIANGLE_DELAYS, dt, h0=0.01)
        results.append(metrics(run(sc), sc.topology))
    cons = [r["conservation_residual"] for r in results]
    margin = [max(0.0, r["certificate_margin"]) for r in results]
    assert cons[0] > 1e-6  # the check is not vacuous
    for coarse, fine in zip(cons, cons[1:]):
        assert fine <= 0.5 * coarse * 1.1  # first order, 10% slack for the asymptotic regime
        assert 0.3 * coarse < fine  # and not better than first order: the leak is real
    for coarse, fine in zip(margin, margin[1:]):
        assert fine <= 0.5 * coarse + 1e-15
    assert all(r["ledger_violation"] <= 1e-15 for r in results)


def test_zero_delay_filter_with_large_budget_is_transparent():
    filtered = triangle(0.0, 0.02, h0=1.0, duration=30.0)
    plain = triangle(0.0, 0.02, duration=30.0)
    plain.filter = None
    m_f = metrics(run(filtered), filtered.topology)
    m_p = metrics(run(plain), plain.topology)
    assert m_p["rms_overall"] > 0.0
    assert abs(m_f["rms_overall"] / m_p["rms_overall"] - 1.0) <= 0.10


def test_external_input_enters_supply():
    sc = pair(separation=1.0, control_period=0.01, duration=1.0, filter=FilterConfig(h0=0.0))
    sc.external_input = np.array([[1.0, 0.0], [0.0, 0.0]])
    tr = run(sc)
    # robot 0 is pushed along +x: supply is the integral of v.y = x0_x
    assert tr.supply[-1, 0] > 0.0 and tr.supply[-1, 1] == 0.0
    np.testing.assert_allclose(tr.supply[-1, 0], 0.01 * np.sum(tr.x[:-1, 0, 0]), rtol=1e-12)


def test_callable_external_input():
    sc = pair(separation=1.0, control_period=0.01, duration=0.5)
    sc.external_input = lambda t: np.array([[0.0, t], [0.0, 0.0]])
    tr = run(sc)
    assert tr.x[-1, 0, 1] > 0.0


def test_blow_up_reports_step():
    sc = pair(separation=10.0, control_period=0.5, duration=50.0, nominal_gain=1e6)
    with np.errstate(all="ignore"), pytest.raises(SimulationError) as info:
        run(sc)
    assert info.value.step is not None and "step" in str(info.value)


def test_bad_scenarios_rejected():
    with pytest.raises(ValueError):
        run(pair(control_period=0.0))
    with pytest.raises(ValueError):
        run(pair(duration=-1.0))
    bad = pair()
    bad.topology.delays[(0, 1)] = -0.5
    with pytest.raises(TopologyError, match="negative delay"):
        run(bad)
    short = pair()
    short.initial_states = short.initial_states[:1]
    with pytest.raises(ValueError, match="initial states"):
        run(short)


def hand_trace():
    # two robots, one edge with d = 1; three rows with edge distances 1.1, 0.8, 1.0
    z = np.zeros((3, 2, 2))
    z[:, 1, 0] = [1.1, 0.8, 1.0]
    zeros = np.zeros((3, 2, 2))
    u_nom = zeros.copy()
    u = zeros.copy()
    u[1, 0] = [0.3, 0.4]
    return Trace(
        time=np.array([0.0, 1.0, 2.0]), z=z, x=zeros.copy(), u_nom=u_nom, u=u,
        sigma=np.zeros((3, 2)), h=np.full((3, 2), np.nan), slack=np.full((3, 2), np.nan),
        supply=np.zeros((3, 2)), edges=[(0, 1)], edge_distance=np.array([[1.1], [0.8], [1.0]]),
    )


def test_metrics_on_hand_built_trace():
    top = Topology.from_edges(2, [(0, 1, 1.0)])
    m = metrics(hand_trace(), top, final_fraction=1.0)
    expected = np.sqrt((0.1**2 + 0.2**2 + 0.0**2) / 3)
    assert m["edge_rms"]["0-1"] == pytest.approx(expected, rel=1e-12)
    assert m["rms_overall"] == pytest.approx(expected, rel=1e-12)
    assert m["final_relative_error"] == pytest.approx(0.0, abs=1e-15)
    assert m["max_input_deviation"] == pytest.approx(0.5, rel=1e-12)
    # window covering only the last half of the run keeps rows at t = 1 and t = 2
    m = metrics(hand_trace(), top, final_fraction=0.5)
    assert m["edge_rms"]["0-1"] == pytest.approx(np.sqrt(0.2**2 / 2), rel=1e-12)


def test_metrics_without_filter_omit_ledger_fields():
    m = metrics(hand_trace(), Topology.from_edges(2, [(0, 1, 1.0)]))
    for key in ("min_h", "ledger_violation", "certificate_margin", "conservation_residual"):
        assert m[key] is None


def test_metrics_frozen_at_formation():
    top = Topology.from_edges(2, [(0, 1, 1.0)])
    sc = Scenario(top, RobotParams(1.0), [RobotState.at_rest([0, 0]), RobotState.at_rest([1, 0])],
                  duration=2.0, filter=FilterConfig(variant=Variant.INPUT_ONLY))
    m = metrics(run(sc), top)
    assert m["rms_overall"] == 0.0
    assert m["max_input_deviation"] == 0.0
    assert m["min_h"] == 1.0 and m["certificate_margin"] <= 0.0
