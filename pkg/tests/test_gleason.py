import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kspectral.curves import BoundaryCurve, discretize
from kspectral.double_layer import MeasureVector
from kspectral.errors import GridMismatch, InputError, NearPole, TooCloseToBoundary
from kspectral.gleason import (
    Character, GleasonConfig, antisymmetry_falsifier, cauchy_annihilator, character_eval, extend_measure,
    get_domain, gleason_distance_lb, load_catalog, measure_part_decomposition, mobius_gleason_distance,
    mutual_continuity_check, peak_check, poisson_representing_measure, same_part_predicate,
)
from kspectral.rational import RationalFunction, rat_eval
from kspectral.scenarios import mobius_bruteforce

from conftest import crandn

U1 = RationalFunction.coordinate()
LIGHT = GleasonConfig(degree=8, restarts=4, iterations=200)
UNIT = BoundaryCurve.disc(0, 1)


@pytest.fixture(scope="module")
def disc():
    return get_domain("disc")


@pytest.fixture(scope="module")
def two_discs():
    return get_domain("two_discs")


@pytest.fixture(scope="module")
def separator(two_discs):
    return gleason_distance_lb(0, 5, two_discs, GleasonConfig(degree=12, restarts=4, iterations=200))


# catalog


def test_catalog_contents():
    cat = load_catalog()
    assert {"disc", "two_discs", "annulus", "ellipse"} <= set(cat)
    with pytest.raises(InputError):
        get_domain("square")


def test_catalog_geometry(two_discs):
    assert two_discs.component_of(0.3j) == 0
    assert two_discs.component_of(5.5) == 1
    assert two_discs.component_of(2.5) is None
    assert two_discs.on_boundary(1.0)
    annulus = get_domain("annulus")
    assert not annulus.contains(0.2)
    assert annulus.contains(0.75)
    assert annulus.shilov_sampler(64).samples.size == 128


# characters


def test_character_examples():
    assert character_eval(Character(0), U1) == 0
    assert character_eval(Character(0.5), RationalFunction.simple_pole(2)) == pytest.approx(-2 / 3, abs=1e-15)
    x = Character(0.3 + 0.1j)
    assert x(U1 * U1) == pytest.approx(x(U1) ** 2, abs=1e-15)
    with pytest.raises(NearPole):
        character_eval(Character(2), RationalFunction.simple_pole(2))


@given(st.integers(0, 2**32 - 1))
def test_character_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    x = Character(complex(*rng.uniform(-0.7, 0.7, 2)))
    u = RationalFunction(tuple(crandn(rng, 3)), ((2 + 1j, 1),))
    v = RationalFunction(tuple(crandn(rng, 2)), ((-3, 2),))
    lhs, rhs = x(u * v), x(u) * x(v)
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(rhs))
    assert x(RationalFunction.constant(1)) == 1


# representing measures


def test_poisson_examples():
    nu = poisson_representing_measure(0, UNIT, 512)
    assert np.abs(nu.density - 1 / 512).max() <= 1e-15
    nu = poisson_representing_measure(0.5, UNIT, 512)
    assert nu.mass() == pytest.approx(1, abs=1e-10)
    assert nu.integrate(U1) == pytest.approx(0.5, abs=1e-9)
    assert np.all(nu.density > 0)
    with pytest.raises(TooCloseToBoundary):
        poisson_representing_measure(0.9999, UNIT)


def test_poisson_reproduces_polynomials(rng):
    x = 0.5 + 0.2j
    nu = poisson_representing_measure(x, BoundaryCurve.disc(1j, 2), 512)
    for _ in range(50):
        u = RationalFunction(tuple(crandn(rng, int(rng.integers(1, 10)))))
        assert abs(nu.integrate(u) - rat_eval(u, x)) <= 1e-8


def test_mutual_continuity_examples(two_discs):
    nu0 = poisson_representing_measure(0, UNIT, 512)
    nu5 = poisson_representing_measure(0.5, UNIT, 512)
    assert mutual_continuity_check(nu5, nu5, 0.99)
    # density ratio 0.75/|ζ - 0.5|² runs over [1/3, 3], extremes at ζ = -1 and 1
    assert mutual_continuity_check(nu0, nu5, 1 / 3)
    assert not mutual_continuity_check(nu0, nu5, 0.4)

    grid = two_discs.grid(512)
    a = extend_measure(poisson_representing_measure(0, UNIT, 512), grid, 0)
    b = extend_measure(poisson_representing_measure(5, BoundaryCurve.disc(5, 1), 512), grid, 1)
    for c in (1e-6, 0.5):
        assert not mutual_continuity_check(a, b, c)
    with pytest.raises(GridMismatch):
        mutual_continuity_check(a, nu0, 0.5)


# Gleason distance


def test_mobius_closed_form_matches_bruteforce():
    for x1, x2 in ((0, 0.5), (0.2j, -0.4), (0.6, 0.6 + 0.3j)):
        assert mobius_bruteforce(x1, x2) == pytest.approx(mobius_gleason_distance(x1, x2), abs=1e-6)
    assert mobius_gleason_distance(0, 0.5) == pytest.approx(0.5359, abs=1e-4)


def test_distance_equal_points(disc):
    assert gleason_distance_lb(0.3, 0.3, disc, LIGHT).d_hat == 0


def test_disc_distance(disc):
    est = gleason_distance_lb(0, 0.5, disc, LIGHT)
    assert 0.530 <= est.d_hat <= 0.536
    assert est.d_hat <= mobius_gleason_distance(0, 0.5) + 1e-9
    assert est.verification_sup <= 1 + 1e-9
    assert est.to_json()["d_hat"] == est.d_hat


def test_two_disc_separation(separator, two_discs):
    assert separator.d_hat >= 1.8
    assert separator.verification_sup <= 1 + 1e-9
    verdict = same_part_predicate(separator.d_hat, 0.1, two_discs, 0, 5)
    assert verdict.by_bound == "different"
    assert verdict.by_metadata == "different"


def test_distance_symmetry(disc):
    a = gleason_distance_lb(0.1, 0.4j, disc, LIGHT)
    b = gleason_distance_lb(0.4j, 0.1, disc, LIGHT)
    assert abs(a.d_hat - b.d_hat) <= 1e-6


def test_warm_start_keeps_degree_ladder_monotone(disc):
    prev, d = None, []
    for deg in (2, 4, 8):
        cfg = GleasonConfig(degree=deg, restarts=4, iterations=100)
        est = gleason_distance_lb(0, 0.5, disc, cfg, warm_start=prev)
        prev = est.certificate
        d.append(est.d_hat)
    assert d == sorted(d)


def test_certificate_triangle_inequality(disc):
    x1, x2, x3 = 0, 0.5, 0.3j
    u = gleason_distance_lb(x1, x3, disc, LIGHT).certificate
    v = lambda x: rat_eval(u, x)  # noqa: E731
    assert abs(v(x1) - v(x3)) <= abs(v(x1) - v(x2)) + abs(v(x2) - v(x3)) + 1e-15


def test_outside_point_rejected(disc):
    with pytest.raises(InputError):
        gleason_distance_lb(0, 2, disc, LIGHT)


# part predicate


def test_same_part_predicate(disc):
    assert same_part_predicate(1.95, 0.1).by_bound == "different"
    v = same_part_predicate(0.54, 0.1, disc, 0, 0.5)
    assert (v.by_bound, v.by_metadata) == ("undecided", "same")
    v = same_part_predicate(0.0, 0.1, disc, 0.2, 0.2)
    assert (v.by_bound, v.by_metadata) == ("undecided", "same")
    assert not disc.same_part(1.0, 0)


# measures over parts


def test_part_decomposition_examples(two_discs, rng):
    grid = two_discs.grid(256)
    left = np.where(grid.component == 0, crandn(rng, grid.M), 0)
    dec = measure_part_decomposition(MeasureVector(grid, left), two_discs)
    assert np.array_equal(dec.parts[0].values, left)
    assert np.all(dec.parts[1].values == 0)
    assert np.all(dec.mu0.values == 0)

    mu = MeasureVector(grid, crandn(rng, grid.M))
    dec = measure_part_decomposition(mu, two_discs)
    assert np.array_equal(dec.parts[0].values + dec.parts[1].values, mu.values)
    assert dec.supports_disjoint()
    assert dec.tv_defect() == 0


def test_part_decomposition_keeps_annihilators(two_discs, rng):
    grid = two_discs.grid(256)
    mu = MeasureVector(grid, cauchy_annihilator(grid, 0, 0).values + cauchy_annihilator(grid, 1, 5, 2j).values)
    dec = measure_part_decomposition(mu, two_discs)
    for _ in range(20):
        pole = complex(2.5, rng.choice([-1, 1]) * rng.uniform(1, 3))
        u = RationalFunction(tuple(crandn(rng, 4)), ((pole, 1),))
        for part in dec.parts:
            assert abs(part.integrate(u)) <= 1e-8


def test_annulus_routes_everything_to_the_part(rng):
    annulus = get_domain("annulus")
    grid = annulus.grid(128)
    mu = MeasureVector(grid, crandn(rng, grid.M))
    dec = measure_part_decomposition(mu, annulus)
    assert np.array_equal(dec.parts[0].values, mu.values)
    assert np.all(dec.mu0.values == 0)


def test_part_decomposition_grid_mismatch(two_discs):
    g = discretize(UNIT, 64)
    with pytest.raises(GridMismatch):
        measure_part_decomposition(MeasureVector(g, np.zeros(64)), two_discs)


# antisymmetry and peaks


def test_antisymmetry_examples(disc, two_discs, separator):
    samples = disc.component_samples(0)
    assert antisymmetry_falsifier(RationalFunction.constant(0.7), samples, 1e-9) == "consistent"
    assert antisymmetry_falsifier(U1, samples, 1e-9) == "consistent"
    # rotate the separating certificate so it is close to +1 and -1 on the two discs
    u = separator.certificate
    phase = np.conj(rat_eval(u, 0)) / abs(rat_eval(u, 0))
    u = u * phase
    for comp in (0, 1):
        pts = two_discs.component_samples(comp)
        assert np.abs(rat_eval(u, pts).imag).max() <= 0.05  # the check is not vacuous
        assert antisymmetry_falsifier(u, pts, 0.05) == "consistent"


def test_antisymmetry_violation_detected():
    pts = np.linspace(-1, 1, 300).astype(complex)
    assert antisymmetry_falsifier(U1, pts, 1e-9) == "violation"
    with pytest.raises(InputError):
        antisymmetry_falsifier(U1, pts[:10], 1e-9)


def test_peak_check_examples(disc):
    samples = np.concatenate([disc.shilov_sampler(1024).samples, disc.interior_samples(0)])
    u = RationalFunction((0.5, 0.5))  # (1 + z)/2
    assert peak_check(u, 1, samples, 1e-3)
    assert not peak_check(u, 0, samples, 1e-3)
    assert not peak_check(RationalFunction.constant(1), 1, samples, 1e-3)
