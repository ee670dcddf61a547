import numpy as np
import pytest

from stabkit.density import ConfigurationError, DensitySpec, unit_ball_volume


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0, abs=1e-15)
    assert unit_ball_volume(2) == pytest.approx(np.pi, abs=1e-14)
    # Gamma(5/2) = 3 sqrt(pi) / 4, so the d=3 volume is 4 pi / 3.
    assert unit_ball_volume(3) == pytest.approx(4.0 * np.pi / 3.0, abs=1e-14)


def test_grid_density_must_normalize():
    with pytest.raises(ConfigurationError):
        DensitySpec.grid([[0, 1], [0, 1]], np.array([[1.0, 1.0], [1.0, 1.5]]))


def test_sup_witness_validated():
    with pytest.raises(ConfigurationError):
        DensitySpec.grid([[0, 1], [0, 1]], np.array([[1.8, 0.2], [0.2, 1.8]]),
                         sup_density=1.0)
    with pytest.raises(ConfigurationError):
        DensitySpec.product_beta([[0, 1]], [2.0], [2.0], sup_density=1.0)


def test_ball_mass_zero_radius(unit_square):
    assert unit_square.ball_mass([0.5, 0.5], 0.0) == 0.0


def test_ball_mass_interior_disc(unit_square):
    got = unit_square.ball_mass([0.5, 0.5], 0.1)
    assert got == pytest.approx(np.pi * 0.01, abs=1e-10)


def test_ball_mass_clipped_vs_quadrature(unit_square):
    # Half-disc at the boundary: area pi r^2 / 2.
    got = unit_square.ball_mass([0.0, 0.5], 0.2)
    assert got == pytest.approx(np.pi * 0.04 / 2.0, abs=1e-8)


def test_ball_mass_growth_bound(unit_square, rng):
    # mass(B_x(r)) <= sup_density * V_d * r^d for random centers and radii
    v2 = unit_ball_volume(2)
    for _ in range(100):
        x = rng.uniform(-0.2, 1.2, size=2)
        r = rng.uniform(0.0, 0.5)
        mass = unit_square.ball_mass(x, r)
        assert mass <= unit_square.sup_density * v2 * r**2 + 1e-8


def test_ball_mass_grid_vs_monte_carlo(rng):
    dens = DensitySpec.grid([[0, 1], [0, 1]], np.array([[1.8, 0.2], [0.2, 1.8]]))
    x, r = np.array([0.4, 0.45]), 0.3
    exact = dens.ball_mass(x, r)
    pts = rng.random((200_000, 2))
    inside = np.sum((pts - x) ** 2, axis=1) <= r * r
    mc = float(np.mean(dens.pdf(pts)[inside].sum() / len(pts)))
    assert exact == pytest.approx(mc, abs=4e-3)


def test_beta_ball_mass_vs_monte_carlo(rng):
    dens = DensitySpec.product_beta([[0, 1], [0, 1]], [2.0, 2.0], [2.0, 2.0],
                                    sup_density=2.26)
    x, r = np.array([0.5, 0.5]), 0.2
    exact = dens.ball_mass(x, r)
    pts = dens.sample(rng, 200_000)
    mc = float(np.mean(np.sum((pts - x) ** 2, axis=1) <= r * r))
    assert exact == pytest.approx(mc, abs=4e-3)


def test_beta_sampling_moments(rng):
    dens = DensitySpec.product_beta([[0, 2]], [2.0], [5.0], sup_density=1.3)
    pts = dens.sample(rng, 100_000).ravel()
    assert pts.mean() == pytest.approx(2.0 * 2.0 / 7.0, abs=0.01)
    assert pts.min() >= 0.0 and pts.max() <= 2.0


def test_grid_sampling_proportions(rng):
    dens = DensitySpec.grid([[0, 1]], np.array([1.5, 0.5]))
    pts = dens.sample(rng, 50_000).ravel()
    assert np.mean(pts < 0.5) == pytest.approx(0.75, abs=0.01)


def test_json_round_trip(unit_square):
    doc = unit_square.to_dict()
    again = DensitySpec.from_dict(doc)
    assert again.to_dict() == doc
    beta = DensitySpec.product_beta([[0, 1], [0, 3]], [1.5, 2.0], [2.0, 1.0],
                                    sup_density=2.0)
    assert DensitySpec.from_dict(beta.to_dict()).to_dict() == beta.to_dict()
