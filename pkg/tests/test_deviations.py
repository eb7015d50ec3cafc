import numpy as np
import pytest

from foce.deviations import (
    AffineField,
    CustomField,
    FieldError,
    FieldFamily,
    aggregated_pull_field,
    ce_field_family,
    check_tangential,
    combine,
    extension_family_2x2,
    gradient_quadratic,
    projection_family,
    pull_to_point_family,
    radial_field,
)
from foce.games import matching_pennies, multilinear_extension, random_normal_form
from foce.geometry import ProductSet, Simplex


@pytest.fixture
def ext_family():
    return {f.name: f for f in extension_family_2x2()}


def test_extension_family_examples(ext_family):
    assert np.allclose(ext_family["f1+"](np.array([0.5, 0.3])), [0.5, 0])
    assert np.allclose(ext_family["g1-"](np.array([0.5, 0.3])), [-0.8, 0])
    assert np.allclose(ext_family["g2+"](np.array([0.4, -0.2])), [0, 0.6])
    assert np.allclose(ext_family["f1-"](np.array([-1.0, 0.4])), [0, 0])
    pennies = matching_pennies()
    x = np.array([0.6, 0.8])
    fld = ext_family["g1-"](x) + ext_family["g2+"](x)
    assert fld @ pennies.gradients(x) == pytest.approx(1.0)


def test_combine_examples():
    fam = extension_family_2x2()
    x = np.random.default_rng(0).uniform(-1, 1, (20, 2))
    assert np.allclose(combine(fam, np.zeros(8))(x), 0)
    onehot = np.eye(8)[4]
    assert np.allclose(combine(fam, onehot)(x), fam[4](x))
    w = np.zeros(8)
    w[fam.names.index("g1-")] = w[fam.names.index("g2+")] = 1
    expected = np.stack([-x[:, 0] - x[:, 1], x[:, 0] - x[:, 1]], axis=1)
    assert np.allclose(combine(fam, w)(x), expected)
    with pytest.raises(FieldError):
        combine(fam, -w, conical=True)


def test_combine_is_linear():
    rng = np.random.default_rng(1)
    fam = extension_family_2x2()
    x = rng.uniform(-1, 1, (50, 2))
    a, b = rng.normal(size=(2, 8))
    assert np.allclose(combine(fam, a + b)(x), combine(fam, a)(x) + combine(fam, b)(x), atol=1e-12)


def test_pull_to_point_examples():
    ext = multilinear_extension(random_normal_form(np.random.default_rng(0), (2, 2)))
    fam = pull_to_point_family(ext)
    assert len(fam) == 4
    x = np.array([1.0, 0.0, 0.5, 0.5])
    assert np.allclose(fam.evaluate(x)[0][:2], 0)
    ext3 = multilinear_extension(random_normal_form(np.random.default_rng(0), (3, 2)))
    fam3 = pull_to_point_family(ext3)
    bary = np.array([1 / 3, 1 / 3, 1 / 3, 0.5, 0.5])
    assert np.allclose(fam3[0](bary)[:3], [2 / 3, -1 / 3, -1 / 3])


def test_ce_family_examples():
    nf = random_normal_form(np.random.default_rng(0), (2, 2))
    fam = ce_field_family(nf)
    assert len(fam) == 4
    f = fam[fam.names.index("ce_p0_0to1")]
    assert np.allclose(f(np.array([0.3, 0.7, 0.5, 0.5]))[:2], [-0.3, 0.3])
    assert np.allclose(f(np.array([0.0, 1.0, 0.5, 0.5]))[:2], [0, 0])


def test_tangentiality():
    pennies = matching_pennies()
    for f in extension_family_2x2():
        assert check_tangential(f, pennies.space, 5000).tangential
    space = ProductSet((Simplex(3), Simplex(2)))
    for f in ce_field_family(random_normal_form(np.random.default_rng(2), (3, 2))):
        assert check_tangential(f, space, 5000).tangential
    outward = AffineField(np.zeros((2, 2)), np.array([1.0, 0.0]), name="outward", G=1.0)
    rep = check_tangential(outward, pennies.space, 5000)
    assert not rep.tangential and rep.worst_normal_norm == pytest.approx(1.0)


def test_gradient_quadratic_matches_potential():
    rng = np.random.default_rng(3)
    ext = multilinear_extension(random_normal_form(rng, (3, 2)))
    Q = rng.normal(size=(3, 3))
    Q = Q + Q.T
    f = gradient_quadratic(ext.space, {0: (Q, rng.normal(size=3)), 1: (-np.eye(2), np.zeros(2))}, "h")
    assert f.is_gradient
    x = ext.space.center()
    eps = 1e-6
    fd = np.array([(f.potential(x + eps * e) - f.potential(x - eps * e)) / (2 * eps) for e in np.eye(ext.dim)])
    assert np.allclose(fd, f(x), atol=1e-6)


def test_declared_G_bounds_samples():
    rng = np.random.default_rng(4)
    ext = multilinear_extension(random_normal_form(rng, (3, 3)))
    fams = [pull_to_point_family(ext), ce_field_family(ext), FieldFamily([radial_field(ext), aggregated_pull_field(ext, [0, 2])])]
    X = ext.space.sample(rng, 2000, boundary_fraction=0.5)
    for fam in fams:
        norms = np.linalg.norm(fam.evaluate(X), axis=-1).max(axis=1)
        assert np.all(norms <= fam.G + 1e-12)


def test_family_rejects_duplicate_names():
    f = extension_family_2x2()[0]
    with pytest.raises(FieldError):
        FieldFamily([f, f])


def test_custom_field():
    f = CustomField(lambda x: -x, G=2.0, L=1.0, name="shrink", is_gradient=True, potential=lambda x: -0.5 * np.sum(x**2, -1))
    assert np.allclose(f(np.array([1.0, 2.0])), [-1, -2])
    fam = FieldFamily([f])
    assert not fam.all_affine and fam.coarse


def test_conical_combination_commutes_with_tangent_part():
    space = matching_pennies().space
    fam = extension_family_2x2()
    rng = np.random.default_rng(6)
    X = space.sample(rng, 300, boundary_fraction=0.8)
    for _ in range(5):
        mu = rng.exponential(size=len(fam))
        comb = combine(fam, mu, conical=True)
        lhs = np.array([space.tangent(x, comb(x)) for x in X])
        rhs = sum(m * np.array([space.tangent(x, f(x)) for x in X]) for m, f in zip(mu, fam))
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_projection_family():
    pennies = matching_pennies()
    fam = projection_family(pennies, [(0, [2.0]), (1, [-1.0])])
    assert fam.names == ["proj_p0_(+1)", "proj_p1_(-1)"]
    x = np.array([[0.3, -0.2], [1.0, 1.0]])
    assert np.allclose(fam[0](x), [[1, 0], [1, 0]]) and np.allclose(fam[1](x), [[0, -1], [0, -1]])
    assert fam[0].is_gradient and np.allclose(fam[0].potential(x), [0.3, 1.0])
    with pytest.raises(FieldError):
        projection_family(pennies, [(0, [0.0])])
    with pytest.raises(FieldError):
        projection_family(pennies, [(2, [1.0])])
