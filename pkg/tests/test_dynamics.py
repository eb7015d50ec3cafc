import numpy as np
import pytest

from foce.dynamics import (
    DynamicsError,
    EmpiricalDistribution,
    StepSchedule,
    eval_curve,
    run_partial_adversarial,
    run_pga,
    sample_uniform,
    telescoping_sum,
    velocity,
)
from foce.games import matching_pennies, multilinear_extension, random_normal_form


@pytest.fixture
def pennies():
    return matching_pennies()


def test_pga_examples(pennies):
    traj = run_pga(pennies, [0.5, 0.5], 1, StepSchedule.constant(0.1))
    assert np.allclose(traj.iterates[1], [0.45, 0.55])
    # x1 moves by -0.1 * 0.99, x2 clamps at the upper bound
    traj = run_pga(pennies, [0.5, 0.99], 1, StepSchedule.constant(0.1))
    assert np.allclose(traj.iterates[1], [0.401, 1.0])
    traj = run_pga(pennies, [0.5, 0.99], 1, StepSchedule.custom([0.0]))
    assert np.allclose(traj.iterates[1], [0.5, 0.99])


def test_pga_rejects_bad_input(pennies):
    with pytest.raises(DynamicsError):
        run_pga(pennies, [2.0, 0.0], 5, StepSchedule.constant(0.1))
    with pytest.raises(DynamicsError):
        run_pga(pennies, [0.0, 0.0], 0, StepSchedule.constant(0.1))
    with pytest.raises(DynamicsError):
        StepSchedule.custom([0.1, 0.2])
    with pytest.raises(DynamicsError):
        StepSchedule.custom([0.1, 0.0], "inverse_eta").mus(np.array([0.1, 0.0]))


def test_curve_examples(pennies):
    traj = run_pga(pennies, [0.5, 0.5], 3, StepSchedule.constant(0.1))
    for t in range(3):
        assert np.allclose(eval_curve(traj, traj.tau_start[t]), traj.iterates[t])
    assert np.allclose(eval_curve(traj, 0.05), [0.475, 0.525])
    traj = run_pga(pennies, [0.5, 0.5], 50, StepSchedule.inverse_sqrt(0.5, "inverse_eta"))
    assert np.allclose(traj.span, 1.0) and traj.tau_bar == pytest.approx(50)


def test_curve_continuity_and_feasibility(pennies):
    traj = run_pga(pennies, [0.9, -0.2], 200, StepSchedule.inverse_sqrt(0.8))
    ends = np.array([traj.point(t, traj.span[t]) for t in range(traj.T)])
    assert np.allclose(ends, traj.iterates[1:], atol=1e-9)
    taus = np.random.default_rng(0).uniform(0, traj.tau_bar, 2000)
    assert all(pennies.space.contains(x) for x in eval_curve(traj, taus))


def test_velocity_examples(pennies):
    traj = run_pga(pennies, [0.1, 0.2], 1, StepSchedule.constant(0.1))
    assert np.allclose(velocity(traj, 0.05), pennies.gradients([0.1, 0.2]))
    traj2 = run_pga(pennies, [0.1, 0.2], 1, StepSchedule.constant(0.5, "inverse_eta"))
    assert np.allclose(velocity(traj2, 0.5), 0.5 * pennies.gradients([0.1, 0.2]))
    # x2 pinned at its upper bound with gradient x1 > 0 pushing outward
    traj = run_pga(pennies, [0.5, 1.0], 1, StepSchedule.constant(0.1))
    assert velocity(traj, 0.05)[1] == 0.0
    with pytest.raises(DynamicsError):
        velocity(traj, 0.0)


def test_sampling(pennies):
    traj = run_pga(pennies, [0.5, 0.5], 20, StepSchedule.constant(0.1))
    dist = sample_uniform(traj, 1, seed=0, times=[0.0])
    assert np.allclose(dist.points[0], [0.5, 0.5])
    rng = np.random.default_rng(3)
    taus = rng.uniform(0, traj.tau_bar, 100_000)
    assert abs(taus.mean() - traj.tau_bar / 2) <= 3 * traj.tau_bar / np.sqrt(12 * 1e5)
    d1, d2 = sample_uniform(traj, 500, seed=4), sample_uniform(traj, 500, seed=4)
    assert np.array_equal(d1.points, d2.points)
    assert all(pennies.space.contains(x) for x in d1.points)


def test_partial_adversarial(pennies):
    sched = StepSchedule.inverse_sqrt(0.5, "inverse_eta")
    full = run_pga(pennies, [0.3, 0.4], 30, sched)
    both = run_partial_adversarial(pennies, [0, 1], lambda t, h: [], [0.3, 0.4], 30, sched)
    assert np.allclose(full.iterates, both.iterates)
    still = run_partial_adversarial(pennies, [0], lambda t, h: [np.array([0.0])], [0.3, 0.0], 30, sched)
    assert np.allclose(still.iterates[:, 0], 0.3)


def test_telescoping_bound():
    rng = np.random.default_rng(2)
    ext = multilinear_extension(random_normal_form(rng, (3, 3)))
    traj = run_pga(ext, ext.space.center(), 300, StepSchedule.inverse_sqrt(0.5, "inverse_eta"))
    Q = rng.normal(size=(ext.dim, ext.dim))
    Q = Q + Q.T
    c = rng.normal(size=ext.dim)
    h = lambda X: 0.5 * np.einsum("...i,ij,...j->...", X, Q, X) + X @ c  # noqa: E731
    G_h = np.linalg.norm(Q, 2) * np.sqrt(2) + np.linalg.norm(c)
    d = ext.space.diameter()
    assert abs(telescoping_sum(traj, h)) <= 2 * d * G_h * (traj.mu[-1] + traj.mu[0]) + 1e-9


def test_trajectory_is_deterministic_and_csv(pennies, tmp_path):
    sched = StepSchedule.inverse_sqrt(0.5)
    a = run_pga(pennies, [0.5, 0.3], 100, sched)
    b = run_pga(pennies, [0.5, 0.3], 100, sched)
    assert np.array_equal(a.iterates, b.iterates)
    text = a.to_csv(tmp_path / "t.csv")
    lines = text.splitlines()
    assert lines[0] == "step,tau_start,eta,mu,coord_0,coord_1"
    assert len(lines) == 102 and lines[-1].split(",")[2:4] == ["", ""]
    assert float(lines[5].split(",")[4]) == a.iterates[4, 0]
    assert (tmp_path / "t.csv").read_text() == text


def test_empirical_distribution_validation():
    with pytest.raises(DynamicsError):
        EmpiricalDistribution(np.zeros((2, 2)), np.array([0.5, 0.6]))
    d = EmpiricalDistribution(np.array([[0.0, 1.0], [2.0, 3.0]]), np.array([0.25, 0.75]))
    assert np.allclose(d.mean(), [1.5, 2.5])
