import dataclasses
import math

import numpy as np
import pytest

from inertia import analysis, games
from inertia.dynamics import DynamicsSpec, PhasePoint, quadratic_objective
from inertia.errors import ConfigError, DomainError
from inertia.integrator import IntegratorConfig, integrate
from inertia.kernels import log_barrier, riemannian_norm, shahshahani


def corrupt(record, **arrays):
    return dataclasses.replace(record, **arrays)


@pytest.fixture(scope="module")
def damped_run():
    spec = DynamicsSpec("id", games.named_game("coordination_2x2"), (log_barrier(),), 1.0)
    start = PhasePoint(([0.3, 0.7], [0.6, 0.4]), ([0.05, -0.05], [-0.1, 0.1]))
    return integrate(spec, start, IntegratorConfig(t_end=60.0, sample_interval=0.01))


def test_energy_dissipation_passes_and_negative_control(damped_run):
    assert analysis.check_energy_dissipation(damped_run, 1.0).passed
    bad = corrupt(damped_run, E=np.zeros_like(damped_run.E))
    assert not analysis.check_energy_dissipation(bad, 1.0).passed
    with pytest.raises(DomainError):
        analysis.check_energy_dissipation(corrupt(damped_run, t=damped_run.t[:2]), 1.0)


def test_energy_check_conservative_case():
    spec = DynamicsSpec("id", games.named_game("coordination_2x2"), (log_barrier(),))
    start = PhasePoint(([0.3, 0.7], [0.6, 0.4]), ([0.05, -0.05], [-0.1, 0.1]))
    rec = integrate(spec, start, IntegratorConfig(t_end=30.0, sample_interval=0.05))
    rep = analysis.check_energy_dissipation(rec, 0.0)
    assert rep.passed and rep.metric < 1e-6
    assert analysis.check_energy_conservation(rec).passed
    drifted = corrupt(rec, E=rec.E + 1e-3 * rec.t)
    assert not analysis.check_energy_conservation(drifted).passed


def test_energy_check_without_potential():
    spec = DynamicsSpec("id", games.named_game("matching_pennies"), (log_barrier(),), 1.0)
    rec = integrate(spec, PhasePoint(([0.3, 0.7], [0.6, 0.4])), IntegratorConfig(t_end=2.0))
    assert np.all(np.isnan(rec.E))
    assert not analysis.check_energy_dissipation(rec, 1.0).passed


def test_velocity_decay():
    c = np.array([0.5, 0.3, 0.2])
    spec = DynamicsSpec("id", quadratic_objective(c), (log_barrier(),), 1.0)
    start = PhasePoint(([0.4, 0.35, 0.25],), ([0.02, -0.01, -0.01],))
    rec = integrate(spec, start, IntegratorConfig(t_end=100.0, sample_interval=0.5))
    rep = analysis.check_velocity_decay(rec)
    assert rep.passed and "(converged)" in rep.details
    bad = corrupt(rec, K=np.full_like(rec.K, 0.5))
    assert not analysis.check_velocity_decay(bad).passed


def test_velocity_decay_near_vertex_is_slow(damped_run):
    # log-barrier speed falls off like 1/t on the way to a vertex
    assert not analysis.check_velocity_decay(damped_run).passed


def test_velocity_persists_without_friction():
    spec = DynamicsSpec("id", games.zero_game(2), (log_barrier(),))
    rec = integrate(spec, PhasePoint(([0.4, 0.6],), ([0.1, -0.1],)), IntegratorConfig(t_end=50.0))
    assert not analysis.check_velocity_decay(rec).passed


def test_velocity_decay_at_rest():
    spec = DynamicsSpec("id", games.zero_game(3), (log_barrier(),), 1.0)
    rec = integrate(spec, PhasePoint((np.ones(3) / 3,)), IntegratorConfig(t_end=50.0))
    rep = analysis.check_velocity_decay(rec)
    assert rep.passed and rep.metric == 0.0


def test_restricted_criticality_residual_examples():
    assert analysis.restricted_criticality_residual(np.array([3.0, 1.0]), np.array([1.0, 0.0])) == 0.0
    assert analysis.restricted_criticality_residual(np.array([2.0, 2.0, 2.0]), np.ones(3) / 3) == 0.0
    x = np.array([0.5, 0.5])
    assert analysis.restricted_criticality_residual(np.array([2 * x[0], 0.0]), x) == pytest.approx(1.0)
    per_player = analysis.restricted_criticality_residual(
        [np.array([1.0, 1.0]), np.array([0.0, 0.3])],
        [np.array([0.5, 0.5]), np.array([0.5, 0.5])])
    assert per_player == pytest.approx(0.3)


def test_convergence_to_strict_vertex_and_negative_control():
    spec = DynamicsSpec("id", games.named_game("coordination_2x2"), (log_barrier(),), 1.0)
    start = PhasePoint(([0.95, 0.05], [0.95, 0.05]))
    rec = integrate(spec, start, IntegratorConfig(t_end=1500.0, sample_interval=5.0, max_step=2.0))
    target = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
    assert analysis.check_convergence_to_point(rec, target).passed
    other = [np.array([0.0, 1.0]), np.array([0.0, 1.0])]
    assert not analysis.check_convergence_to_point(rec, other).passed
    # a record that wanders away over its tail is not monotone
    wobble = rec.x.copy()
    wobble[-3, 1] += 1e-4
    wobble[-3, 0] -= 1e-4
    assert not analysis.check_convergence_to_point(corrupt(rec, x=wobble), target, tol=1.0).passed


def test_convergence_from_the_target_itself():
    c = np.array([0.5, 0.3, 0.2])
    spec = DynamicsSpec("id", quadratic_objective(c), (log_barrier(),), 1.0)
    rec = integrate(spec, PhasePoint((c,)), IntegratorConfig(t_end=10.0))
    assert analysis.check_convergence_to_point(rec, c).metric == 0.0


def test_convergence_to_interior_maximiser():
    c = np.array([0.5, 0.3, 0.2])
    spec = DynamicsSpec("id", quadratic_objective(c), (log_barrier(),), 1.0)
    start = PhasePoint(([0.45, 0.33, 0.22],), ([0.005, -0.002, -0.003],))
    rec = integrate(spec, start, IntegratorConfig(t_end=200.0, sample_interval=1.0))
    rep = analysis.check_convergence_to_point(rec, c)
    assert rep.passed and rep.metric < 1e-3


def test_convergence_requires_completed_run():
    spec = DynamicsSpec("id", games.zero_game(2), (shahshahani(),))
    rec = integrate(spec, PhasePoint(([0.25, 0.75],), ([0.5, -0.5],)), IntegratorConfig(t_end=5.0))
    assert not analysis.check_convergence_to_point(rec, [0.0, 1.0]).passed


def test_closed_form_helpers():
    assert analysis.shahshahani_closed_form(0.0, 1.2, 0.7) == pytest.approx(1.2)
    t = math.pi / 4 * math.sqrt(2)
    assert analysis.shahshahani_closed_form(t, math.sqrt(2), 1.0) == pytest.approx(2.0)
    assert analysis.shahshahani_exit_time(math.sqrt(2), 1.0) == pytest.approx(t)
    assert np.allclose(analysis.shahshahani_closed_form(np.linspace(0, 9, 5), 0.8, 0.0), 0.8)
    assert math.isinf(analysis.shahshahani_exit_time(0.8, 0.0))
    # amplitude-phase form 2 sin(w t + asin(xi0 / 2))
    w = 1 / math.sqrt(3)
    assert analysis.shahshahani_closed_form(1.3, 1.0, 1.0) == pytest.approx(2 * math.sin(w * 1.3 + math.pi / 6))
    assert analysis.shahshahani_exit_time(1.0, -1.0) == pytest.approx((math.pi / 6) * math.sqrt(3))
    with pytest.raises(DomainError):
        analysis.shahshahani_closed_form(0.0, 2.0, 1.0)


def test_log_barrier_invariant_is_speed():
    x = np.array([0.2, 0.7])
    xd = np.array([0.1, -0.05])
    C = analysis.log_barrier_invariant(x, xd)
    for xi, vi, ci in zip(x, xd, C):
        speed = riemannian_norm(log_barrier(), np.array([xi, 1 - xi]), np.array([vi, -vi]))
        assert abs(ci) == pytest.approx(speed)


def test_log_barrier_invariant_check():
    spec = DynamicsSpec("id", games.zero_game(2), (log_barrier(),))
    rec = integrate(spec, PhasePoint(([0.25, 0.75],), ([0.1, -0.1],)),
                    IntegratorConfig(t_end=100.0, sample_interval=0.1))
    assert analysis.check_log_barrier_invariant(rec).passed
    still = integrate(spec, PhasePoint(([0.25, 0.75],)), IntegratorConfig(t_end=10.0))
    rep = analysis.check_log_barrier_invariant(still)
    assert rep.passed and rep.metric == 0.0
    bad_v = rec.v.copy()
    bad_v[20] *= 1.01
    assert not analysis.check_log_barrier_invariant(corrupt(rec, v=bad_v)).passed


def test_nearby_starts_respect_radius_and_speed():
    x_star = [np.array([1.0, 0.0]), np.array([0.0, 0.0, 1.0])]
    K = log_barrier()
    starts = analysis.nearby_starts(x_star, [K], count=25, radius=0.05, speed=0.01, seed=4)
    assert len(starts) == 25
    for st in starts:
        dist = max(np.max(np.abs(p - b)) for p, b in zip(st.position, x_star))
        assert 0 < dist <= 0.05
        assert all(np.min(p) > 0 for p in st.position)
        speed = math.sqrt(sum(riemannian_norm(K, p, v) ** 2 for p, v in zip(st.position, st.velocity)))
        assert speed <= 0.01 + 1e-15
    again = analysis.nearby_starts(x_star, [K], count=25, radius=0.05, speed=0.01, seed=4)
    assert all(np.array_equal(a.position[0], b.position[0]) for a, b in zip(starts, again))


def test_thread_count(monkeypatch):
    monkeypatch.setenv("INERTIA_THREADS", "3")
    assert analysis.thread_count() == 3
    monkeypatch.setenv("INERTIA_THREADS", "zero")
    with pytest.raises(ConfigError):
        analysis.thread_count()
    monkeypatch.delenv("INERTIA_THREADS")
    assert analysis.thread_count() >= 1


def test_run_many_keeps_order(monkeypatch):
    monkeypatch.setenv("INERTIA_THREADS", "4")
    assert analysis.run_many(lambda v: v * v, range(10)) == [v * v for v in range(10)]


def test_folk_theorem_matching_pennies_stationarity():
    g = games.named_game("matching_pennies")
    spec = DynamicsSpec("id", g, (log_barrier(),), 1.0)
    scen = analysis.ProbeScenario(t_end=20.0, starts=2, interior_runs=1)
    reports = analysis.folk_theorem_suite(g, spec, scen)
    uniform = [r for r in reports if r.name == "stationarity[(0.5,0.5)/(0.5,0.5)]"]
    assert uniform and uniform[0].passed
    # no strict equilibria, so no basin probes
    assert not any(r.name.startswith("basin") for r in reports)


def test_folk_theorem_refuses_ill_posed_kernel():
    g = games.named_game("prisoners_dilemma")
    spec = DynamicsSpec("id", g, (shahshahani(),), 1.0)
    reports = analysis.folk_theorem_suite(g, spec)
    assert len(reports) == 1 and not reports[0].passed


def test_ess_experiment_partnership_vertices():
    g = games.SymmetricGame([[1, 0], [0, 1]])
    # vertex approach is algebraic, so the horizon has to be long
    scen = analysis.ProbeScenario(t_end=1500.0, max_step=2.0, sample_interval=5.0)
    for x_star in ([1.0, 0.0], [0.0, 1.0]):
        assert analysis.ess_stability_experiment(g, x_star, scenario=scen).passed


def test_ess_experiment_preconditions():
    rps = games.named_game("rps")
    assert not analysis.ess_stability_experiment(rps, np.ones(3) / 3).passed
    hd = games.hawk_dove()
    assert not analysis.ess_stability_experiment(hd, [1.0, 0.0]).passed
    assert not analysis.ess_stability_experiment(hd, [0.5, 0.5], friction=0.0).passed
    assert not analysis.ess_stability_experiment(hd, [0.5, 0.5], kernel="shahshahani").passed


def test_suite_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        analysis.load_suite({"batteries": [{"type": "mystery"}]})
    with pytest.raises(ConfigError):
        analysis.load_suite(str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError):
        analysis.run_suite({"batteries": [{"type": "folk-theorem", "game": "hawk_dove"}]})
    assert analysis.run_suite({"batteries": []}) == []


def test_suite_threshold_zero_fails():
    reports = analysis.run_suite({"batteries": [{"type": "first-integral", "threshold": 0.0}]})
    assert len(reports) == 1 and not reports[0].passed


def test_summary_json_shape():
    text = analysis.summary_json([analysis.CheckReport("a", True, 0.5, 1.0, "x"),
                                  analysis.CheckReport("b", False, math.nan, 1.0)])
    assert '"metric": null' in text
    assert '"details"' not in text


def test_strict_basin_converges_on_long_horizon():
    # the losing coordinate decays like 1/t, so 1e-3 needs t of order 10^3
    g = games.named_game("prisoners_dilemma")
    spec = DynamicsSpec("id", g, (log_barrier(),), 1.0)
    scen = analysis.ProbeScenario(t_end=1500.0, max_step=2.0, sample_interval=5.0, interior_runs=0)
    basins = [r for r in analysis.folk_theorem_suite(g, spec, scen) if r.name.startswith("basin")]
    assert len(basins) == 1 and basins[0].passed and basins[0].metric < 1e-3
