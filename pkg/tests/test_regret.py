import numpy as np
import pytest

from foce.deviations import FieldFamily, extension_family_2x2, pull_to_point_family, radial_field
from foce.dynamics import EmpiricalDistribution, StepSchedule, run_pga, telescoping_sum
from foce.games import matching_pennies, multilinear_extension, random_normal_form
from foce.regret import (
    NO_GUARANTEE,
    TheoremViolation,
    adversarial_bound,
    bound_formula,
    curve_local_regrets,
    curve_stationary_regret,
    curve_stationary_regrets,
    local_regret,
    poly_factor,
    regret_report,
    stationary_regret,
    weighted_path_integral,
)


@pytest.fixture(scope="module")
def pennies():
    return matching_pennies()


@pytest.fixture(scope="module")
def fields():
    return {f.name: f for f in extension_family_2x2()}


def test_point_mass_examples(pennies, fields):
    origin = EmpiricalDistribution.point_mass([0.0, 0.0])
    assert stationary_regret(origin, pennies, fields["g1+"]) == 0
    assert local_regret(origin, pennies, fields["f1+"]) == 0
    assert local_regret(EmpiricalDistribution.point_mass([0.5, 0.5]), pennies, fields["f1+"]) == pytest.approx(-0.25)


def test_circle_examples(pennies, fields):
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, 4000)
    circle = EmpiricalDistribution.uniform(np.stack([np.cos(theta), np.sin(theta)], axis=1))
    assert stationary_regret(circle, pennies, radial_field(pennies)) == pytest.approx(0, abs=1e-12)
    both = FieldFamily([fields["g1-"], fields["g2+"]])
    from foce.deviations import combine

    val = stationary_regret(circle, pennies, combine(both, [1, 1]))
    assert abs(val - 1) <= 3 / np.sqrt(4000)


def test_local_equals_stationary_in_interior():
    rng = np.random.default_rng(1)
    ext = multilinear_extension(random_normal_form(rng, (3, 3)))
    dist = EmpiricalDistribution.uniform(ext.space.sample(rng, 50))
    for f in pull_to_point_family(ext):
        assert local_regret(dist, ext, f) == pytest.approx(stationary_regret(dist, ext, f), abs=1e-12)


def test_stationary_point_curve(pennies):
    traj = run_pga(pennies, [0.0, 0.0], 50, StepSchedule.inverse_sqrt(0.5))
    for f in pull_to_point_family(pennies):
        assert curve_stationary_regret(traj, pennies, f) == 0


def test_quadrature_is_exact_on_boxes(pennies):
    traj = run_pga(pennies, [0.9, -0.4], 500, StepSchedule.inverse_sqrt(0.7, "inverse_eta"))
    fam = pull_to_point_family(pennies) + FieldFamily([radial_field(pennies)])
    lo, hi = curve_stationary_regrets(traj, pennies, fam, M=16), curve_stationary_regrets(traj, pennies, fam, M=64)
    assert np.all(np.abs(lo - hi) <= 1e-6 * (1 + np.abs(hi)))
    lo, hi = curve_local_regrets(traj, pennies, fam, M=16), curve_local_regrets(traj, pennies, fam, M=64)
    assert np.all(np.abs(lo - hi) <= 1e-6 * (1 + np.abs(hi)))


def test_telescoping_cross_check():
    rng = np.random.default_rng(5)
    ext = multilinear_extension(random_normal_form(rng, (2, 3)))
    traj = run_pga(ext, ext.space.center(), 400, StepSchedule.inverse_sqrt(0.6, "inverse_eta"))
    for f in pull_to_point_family(ext):
        assert weighted_path_integral(traj, f) == pytest.approx(telescoping_sum(traj, f.potential), abs=1e-6 * traj.T)


def test_bound_formula_arithmetic():
    T, C, G_h = 10_000, 0.5, 2.0
    d = 2 * np.sqrt(2)
    etas = C / np.sqrt(np.arange(1, T + 1))
    # mu_0 + mu_{T-1} = (1 + sqrt(T)) / C under inverse_eta
    expected = 2 * d * G_h * (np.sqrt(T) + 1) / (C * T) + etas.sum() / (2 * T) * G_h * (1 * 2 + 1 * 2)
    got = bound_formula("acute", [1, 1], [1, 1], G_h, 0.0, d, T, C, "inverse_eta")
    assert got == pytest.approx(expected, rel=1e-12)
    assert bound_formula("curved", [1, 1], [1, 1], G_h, 0.0, d, T, C, "inverse_eta") == pytest.approx(got)
    assert bound_formula("no-guarantee", [1, 1], [1, 1], G_h, 0.0, d, T, C, "unit") == NO_GUARANTEE
    ratio = bound_formula("acute", [1, 1], [1, 1], G_h, 0.0, d, 4 * T, C, "inverse_eta") / got
    assert 0.45 < ratio < 0.55


def test_poly_and_adversarial_bounds():
    assert poly_factor("acute", [1, 1], [1, 1], 2.0) == pytest.approx(9.0)
    assert poly_factor("curved", [1, 1], [1, 1], 2.0, K=[0.5, 0]) == pytest.approx(10.0)
    eta = 0.5 / np.sqrt(np.arange(1, 1001))
    curve = adversarial_bound([1, 1], [1, 1], 2.0, 1.0, 0.0, 2.0, eta, [0])
    disc = adversarial_bound([1, 1], [1, 1], 2.0, 1.0, 0.0, 2.0, eta, [0], discrete=True)
    assert disc > curve > 0


def test_report(pennies, tmp_path):
    traj = run_pga(pennies, [0.5, 0.3], 2000, StepSchedule.inverse_sqrt(0.5, "inverse_eta"))
    rep = regret_report(traj, pennies, pull_to_point_family(pennies), "stationary")
    rep.assert_compliance()
    assert not rep.violations()
    text = rep.to_text()
    assert text.startswith("mode=stationary\n") and "field_id=pull_p0_(+1)" in text
    empty = regret_report(traj, pennies, FieldFamily([]), "stationary")
    assert empty.family_max == 0 and empty.entries == []
    rep.entries[0].bound = 0.0
    with pytest.raises(TheoremViolation):
        rep.assert_compliance()


def test_report_for_distribution(pennies):
    dist = EmpiricalDistribution.point_mass([0.0, 0.0])
    rep = regret_report(dist, pennies, extension_family_2x2(), "local")
    assert all(e.raw == 0 and e.bound == "n/a" for e in rep.entries)
