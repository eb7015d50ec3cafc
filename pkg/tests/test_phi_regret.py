import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foce.certify import check_equilibrium, induce_action_distribution
from foce.deviations import AffineField, FieldFamily, ce_field_family, combine, extension_family_2x2, pull_to_point_family
from foce.dynamics import EmpiricalDistribution
from foce.games import matching_pennies, multilinear_extension, random_normal_form
from foce.phi_regret import (
    FixedPointResult,
    MatcherError,
    OracleFailure,
    _line_search,
    fixed_point_affine,
    fixed_point_residual,
    instantaneous_regret,
    regret_match_local,
    regret_match_stationary,
    theorem_bound,
)
from foce.regret import TheoremViolation


@pytest.fixture(scope="module")
def pennies():
    return matching_pennies()


@pytest.fixture(scope="module")
def ext_family():
    return extension_family_2x2()


def _weights(fam, **named):
    w = np.zeros(len(fam))
    for k, v in named.items():
        w[fam.names.index(k.replace("_plus", "+").replace("_minus", "-"))] = v
    return w


def test_fixed_point_examples(pennies, ext_family):
    res = fixed_point_affine(ext_family, _weights(ext_family, f1_plus=1), pennies.space)
    assert res.converged and res.point[0] == pytest.approx(1.0)
    res = fixed_point_affine(ext_family, _weights(ext_family, g1_minus=1, g2_plus=1), pennies.space)
    assert np.allclose(res.point, 0, atol=1e-9)
    res = fixed_point_affine(ext_family, np.zeros(8), pennies.space)
    assert res.iterations == 0 and np.allclose(res.point, 0)


@pytest.mark.parametrize("seed", range(6))
def test_fixed_point_methods_on_simplices(seed):
    rng = np.random.default_rng(seed)
    ext = multilinear_extension(random_normal_form(rng, (3, 3)))
    fam = ce_field_family(ext)
    mu = rng.exponential(size=len(fam)) * (rng.random(len(fam)) < 0.6)
    mu[0] += 0.1
    comb = combine(fam, mu)
    for method in ("pgd", "enumerate", "auto"):
        res = fixed_point_affine(fam, mu, ext.space, tol=1e-9, method=method, max_iter=200_000)
        assert ext.space.contains(res.point)
        if res.converged:
            assert fixed_point_residual(comb.P, comb.q, ext.space, res.point) <= 1e-8
    assert fixed_point_affine(fam, mu, ext.space, tol=1e-9).converged


def test_fixed_point_rejects_non_affine(pennies):
    from foce.deviations import CustomField

    fam = FieldFamily([CustomField(lambda x: -x, G=2, L=1, name="c")])
    with pytest.raises(MatcherError):
        fixed_point_affine(fam, [1.0], pennies.space)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_line_search_beats_harmonic(seed, rectified):
    rng = np.random.default_rng(seed)
    n, t = int(rng.integers(1, 8)), int(rng.integers(1, 50))
    mu, r = rng.normal(size=(2, n))

    def potential(v):
        v = np.maximum(v, 0) if rectified else v
        return float(v @ v)

    a = _line_search(mu, r, rectified)
    assert 0 < a < 1
    harmonic = 1 / (t + 1)
    assert potential((1 - a) * mu + a * r) <= potential((1 - harmonic) * mu + harmonic * r) + 1e-12


def test_recursion_is_exact(pennies):
    fam = pull_to_point_family(pennies)
    history = []
    state = regret_match_stationary(
        pennies, fam, EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-4, 60, strict=False,
        callback=lambda s: history.append(s.snapshot()),
    )
    assert history
    for prev, cur in zip(history[:-1], history[1:]):
        r = instantaneous_regret(pennies, cur.points[-1], fam, "stationary")
        assert np.allclose((prev.t + 1) * cur.raw_mu, prev.t * prev.raw_mu + r, atol=1e-12)
    recomputed = instantaneous_regret(pennies, state.points, fam, "stationary") @ state.distribution.weights
    assert np.allclose(recomputed, state.raw_mu, atol=1e-9)


def test_matcher_meets_bound(pennies):
    fam = pull_to_point_family(pennies)
    for rule in ("harmonic", "line_search"):
        state = regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([0.5, 0.3]), 0.05, 20_000, alpha_rule=rule)
        assert state.converged and not state.bound_violations
        assert state.score() <= 0.05
        assert all(row["max_regret"] <= row["bound"] + 1e-9 for row in state.log)
        assert state.log[-1]["bound"] == pytest.approx(theorem_bound(pennies, fam, state.iterations))


def test_immediate_return(pennies, ext_family):
    state = regret_match_stationary(pennies, pull_to_point_family(pennies), EmpiricalDistribution.point_mass([0, 0]), 1e-3, 10)
    assert state.converged and state.t == 1 and state.iterations == 0 and len(state.points) == 1
    # the corner (1, 1) has no strictly profitable tangential deviation in the extension family
    sigma = EmpiricalDistribution.point_mass([0.0, 0.0])
    state = regret_match_local(pennies, ext_family, sigma, 1e-3, 10)
    assert state.converged and state.t == 1


def test_local_matcher_drift_term(pennies, ext_family):
    state = regret_match_local(pennies, ext_family, EmpiricalDistribution.point_mass([0.5, 0.3]), 0.02, 3000)
    assert state.converged
    G_sum = float(np.sum(pennies.G))
    for x, row in zip(state.points[1:], state.log[1:]):
        assert row["residual"] <= 1e-9
    # the rectified combination is tangential, so the fixed-point drift is bounded by the oracle tolerance
    final = state.points[-1]
    comb = combine(ext_family, state.log and np.maximum(state.raw_mu, 0))
    drift = float(comb(final) @ pennies.gradients(final))
    assert abs(drift) <= 1e-6 * (1 + G_sum) * (1 + np.abs(state.mu).sum())


@pytest.mark.parametrize("seed", [0, 3])
def test_ce_family_gives_approximate_ce(seed):
    nf = random_normal_form(np.random.default_rng(seed), (2, 2))
    ext = multilinear_extension(nf)
    fam = ce_field_family(ext)
    eps = 0.01
    state = regret_match_local(ext, fam, EmpiricalDistribution.point_mass(ext.space.center()), eps, 20_000)
    assert state.converged
    sigma = induce_action_distribution(state.distribution, nf)
    assert check_equilibrium(nf, sigma, "CE").max_violation <= eps + 1e-9


def test_non_tangential_family(pennies, caplog):
    outward = AffineField(np.zeros((2, 2)), np.array([1.0, 0.0]), name="outward", G=1.0)
    fam = FieldFamily([outward])
    with pytest.raises(MatcherError, match="outward"):
        regret_match_local(pennies, fam, EmpiricalDistribution.point_mass([0, 0]), 0.1, 5)
    with caplog.at_level(logging.WARNING):
        regret_match_local(pennies, fam, EmpiricalDistribution.point_mass([0, 0]), 0.1, 5, allow_non_tangential=True, strict=False)
    assert "non-tangential" in caplog.text


def test_bad_oracle_is_reported(pennies):
    fam = pull_to_point_family(pennies)

    def liar(mu, family, space):
        return FixedPointResult(np.array([0.7, -0.2]), 0.0, 1, True, "liar")

    with pytest.raises(OracleFailure) as err:
        regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-3, 50, oracle=liar)
    assert err.value.state is not None and err.value.state.t == 1

    def outside(mu, family, space):
        return FixedPointResult(np.array([3.0, 0.0]), 0.0, 1, True, "outside")

    with pytest.raises(OracleFailure):
        regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-3, 50, oracle=outside)


def test_strict_bound_violation_raises(pennies):
    fam = pull_to_point_family(pennies)
    # understated norm bounds make the guarantee false from the first row
    huge = FieldFamily([AffineField(f.P, f.q, name=f.name, G=1e-6) for f in fam])
    with pytest.raises(TheoremViolation):
        regret_match_stationary(pennies, huge, EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-3, 50)
    state = regret_match_stationary(pennies, huge, EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-3, 3, strict=False)
    assert state.bound_violations


def test_errors_and_limits(pennies):
    fam = pull_to_point_family(pennies)
    with pytest.raises(MatcherError):
        regret_match_stationary(pennies, FieldFamily([]), EmpiricalDistribution.point_mass([0, 0]), 0.1, 5)
    with pytest.raises(MatcherError):
        regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([2, 0]), 0.1, 5)
    with pytest.raises(MatcherError):
        regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([0, 0]), 0.1, 5, alpha_rule="newton")
    state = regret_match_stationary(pennies, fam, EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-12, 3)
    assert state.hit_max_iter and not state.converged and state.iterations == 3


def test_log_csv(pennies):
    state = regret_match_stationary(pennies, pull_to_point_family(pennies), EmpiricalDistribution.point_mass([0.5, 0.3]), 1e-12, 4)
    lines = state.log_csv().splitlines()
    assert lines[0] == "t,max_regret,alpha,oracle_residual,oracle_iterations,bound"
    assert len(lines) == 6 and lines[1].startswith("1,") and lines[1].split(",")[2] == ""
    snap = state.snapshot()
    snap.raw_mu[:] = 99
    assert not np.any(state.raw_mu == 99)
