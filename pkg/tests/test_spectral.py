import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_scalar, random_vector
from nlcflow.spectral import (
    FieldIntegrityError,
    Grid,
    ScalarField,
    VectorField3,
    dealias,
    divergence_residual,
    half_spectrum,
    lambda_power,
    leray_project,
    lp_norm,
    norm,
    partial_derivative,
    sobolev_seminorm,
    spectral_quadratic_form,
    transform,
)


def sines(grid, fn):
    x, y, z = grid.mesh()
    return ScalarField(grid, np.broadcast_to(fn(x, y, z), grid.shape).copy())


@pytest.mark.parametrize("N, L", [(7, 1.0), (6, 1.0), (16, 0.0), (16, -1.0), (16, math.inf)])
def test_grid_rejects_bad_parameters(N, L):
    with pytest.raises(ValueError):
        Grid(N, L)


def test_mode_index_and_wavenumbers():
    g = Grid(8, 4 * math.pi)
    assert list(g.mode_index) == [0, 1, 2, 3, -4, -3, -2, -1]
    assert g.wavenumbers[1] == pytest.approx(0.5)


def test_zero_field_has_zero_coefficients(box):
    assert not np.any(ScalarField.zeros(box).coeffs())


def test_sine_coefficients(box):
    c = sines(box, lambda x, y, z: np.sin(x)).coeffs()
    assert c[1, 0, 0] == pytest.approx(-0.5j, abs=1e-15)
    assert c[-1, 0, 0] == pytest.approx(0.5j, abs=1e-15)
    c[1, 0, 0] = c[-1, 0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_round_trip(box):
    f = random_scalar(box, 0)
    back = f.to_spectral().to_physical()
    assert np.abs(back.data - f.data).max() <= 1e-12 * np.abs(f.data).max()
    assert transform(f, "physical") is f


def test_transform_rejects_unknown_basis(box):
    with pytest.raises(ValueError):
        transform(ScalarField.zeros(box), "fourier")


def test_non_finite_and_non_hermitian_inputs_rejected(box):
    bad = np.zeros(box.shape)
    bad[1, 2, 3] = np.nan
    with pytest.raises(FieldIntegrityError):
        ScalarField(box, bad)
    c = np.zeros(box.shape, complex)
    c[1, 0, 0] = 1.0  # no conjugate partner
    with pytest.raises(FieldIntegrityError):
        ScalarField(box, c, "spectral")


def test_vector_components_must_share_grid(box):
    with pytest.raises(ValueError):
        VectorField3((ScalarField.zeros(box), ScalarField.zeros(box), ScalarField.zeros(Grid(8, 1.0))))


@pytest.mark.parametrize("seed", range(100))
def test_parseval(seed):
    g = Grid(16, float(np.random.default_rng(seed).uniform(1, 30)))
    f = random_scalar(g, seed, slope=0.0)
    phys = g.dx**3 * np.sum(f.data**2)
    spec = spectral_quadratic_form(f)
    assert spec == pytest.approx(phys, rel=1e-12)


def test_lambda_power_examples(box):
    f = random_scalar(box, 1)
    assert np.allclose(lambda_power(f, 0).coeffs(), f.coeffs(), rtol=0, atol=1e-15)
    s1 = sines(box, lambda x, y, z: np.sin(x))
    assert np.abs(lambda_power(s1, 0.5).values() - s1.data).max() < 1e-14
    s2 = sines(box, lambda x, y, z: np.sin(2 * x))
    assert np.abs(lambda_power(s2, 2).values() - 4 * s2.data).max() < 1e-13
    with pytest.raises(ValueError):
        lambda_power(f, -1)


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.integers(0, 2**31))
def test_lambda_power_composes(a, b, seed):
    g = Grid(8, 5.0)
    f = random_scalar(g, seed, mean_free=True)
    lhs = lambda_power(lambda_power(f, a), b).coeffs()
    rhs = lambda_power(f, a + b).coeffs()
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_derivative_examples(box):
    s = sines(box, lambda x, y, z: np.sin(x))
    assert np.abs(partial_derivative(s, 1).values() - np.cos(box.coords)[:, None, None]).max() <= 1e-12
    const = ScalarField(box, np.full(box.shape, 3.0))
    assert np.abs(partial_derivative(const, 2).values()).max() == 0
    s2 = sines(box, lambda x, y, z: np.sin(2 * y))
    assert np.abs(partial_derivative(s2, 2, 2).values() + 4 * s2.data).max() <= 1e-12


def test_derivative_argument_checks(box):
    f = ScalarField.zeros(box)
    with pytest.raises(ValueError):
        partial_derivative(f, 0)
    with pytest.raises(ValueError):
        partial_derivative(f, 1, 0)


def test_derivatives_commute(box):
    f = random_scalar(box, 2)
    a = partial_derivative(partial_derivative(f, 1), 2).coeffs()
    b = partial_derivative(partial_derivative(f, 2), 1).coeffs()
    # same two factors applied in the other order: equal up to the last rounding
    assert np.abs(a - b).max() <= 1e-15 * np.abs(a).max()


def test_odd_derivative_of_nyquist_mode_vanishes():
    g = Grid(8, 2 * math.pi)
    f = ScalarField(g, np.broadcast_to(np.cos(4 * g.coords)[:, None, None], g.shape).copy())
    assert np.abs(partial_derivative(f, 1).values()).max() == 0
    assert np.abs(partial_derivative(f, 1, 2).values() + 16 * f.data).max() < 1e-12


def test_leray_examples(box):
    grad = VectorField3.from_array(box, np.stack([np.broadcast_to(-np.sin(box.coords)[:, None, None], box.shape), np.zeros(box.shape), np.zeros(box.shape)]))
    assert np.abs(leray_project(grad).values()).max() < 1e-15
    shear = VectorField3.from_array(box, np.stack([np.broadcast_to(np.sin(box.coords)[None, :, None], box.shape), np.zeros(box.shape), np.zeros(box.shape)]))
    assert np.abs(leray_project(shear).values() - shear.array).max() < 1e-15


@given(st.integers(0, 2**31), st.sampled_from([0.0, 1.0, 3.0]))
def test_leray_idempotent_and_solenoidal(seed, slope):
    # slope 0 leaves energy in the Nyquist rows, which must still project cleanly
    g = Grid(8, 3.0)
    v = random_vector(g, seed, slope)
    p1 = leray_project(v)
    p2 = leray_project(p1)
    scale = np.abs(p1.array).max()
    assert np.abs(p2.array - p1.array).max() <= 1e-12 * scale
    assert divergence_residual(p1) <= 1e-14


def test_leray_keeps_mean(box):
    v = random_vector(box, 3)
    assert np.allclose(leray_project(v).array[:, 0, 0, 0], v.to_spectral().array[:, 0, 0, 0], atol=1e-16)


def test_dealias_rule():
    g = Grid(32, 2 * math.pi)
    x = g.coords[:, None, None]
    keep = ScalarField(g, np.broadcast_to(np.cos(10 * x), g.shape).copy())
    drop = ScalarField(g, np.broadcast_to(np.cos(12 * x), g.shape).copy())
    assert np.abs(dealias(keep).values() - keep.data).max() < 1e-14
    assert np.abs(dealias(drop).values()).max() < 1e-14


def test_dealias_identity_on_band_limited():
    g = Grid(32, 2 * math.pi)
    f = random_scalar(g, 4)
    limited = dealias(f)
    assert np.array_equal(dealias(limited).coeffs(), limited.coeffs())


def test_norm_examples():
    g = Grid(16, 2 * math.pi)
    c = ScalarField(g, np.full(g.shape, 2.0))
    assert norm(c, "lp", 2) == pytest.approx(2 * (2 * math.pi) ** 1.5, rel=1e-14)
    assert norm(c, "lp", math.inf) == 2.0
    u = VectorField3.from_array(g, np.stack([np.broadcast_to(np.sin(g.coords)[None, :, None], g.shape), np.zeros(g.shape), np.zeros(g.shape)]))
    assert norm(u, "sobolev_seminorm", 0) == pytest.approx(math.sqrt(4 * math.pi**3), rel=1e-13)
    assert sobolev_seminorm(u, 1) == pytest.approx(sobolev_seminorm(u, 0), rel=1e-13)
    with pytest.raises(ValueError):
        norm(u, "h1", 1)
    with pytest.raises(ValueError):
        lp_norm(u, 0.5)


def test_lp_norm_of_constant_scales_with_volume():
    g = Grid(8, 3.0)
    f = ScalarField(g, np.full(g.shape, 1.5))
    for p in (1, 2, 4, 7.5):
        assert lp_norm(f, p) == pytest.approx(1.5 * 27 ** (1 / p), rel=1e-13)


class TestHalfSpectrum:
    def test_round_trip(self, box):
        hs = half_spectrum(box)
        f = random_scalar(box, 5).data
        assert np.abs(hs.inverse(hs.forward(f)) - f).max() < 1e-14

    def test_seminorms_match_full_spectrum(self, box):
        hs = half_spectrum(box)
        v = random_vector(box, 6, slope=0.0)
        got = hs.seminorms_sq(hs.forward(v.array), 3)
        for k in range(4):
            assert got[k] == pytest.approx(sobolev_seminorm(v, k) ** 2, rel=1e-12)
            assert hs.seminorm_sq(hs.forward(v.array), k) == pytest.approx(got[k], rel=1e-14)

    def test_projection_matches_leray(self, box):
        hs = half_spectrum(box)
        v = random_vector(box, 7, slope=0.0)
        a = hs.inverse(hs.project(hs.forward(v.array)))
        b = leray_project(v).values()
        assert np.abs(a - b).max() < 1e-14
        assert hs.divergence_residual(hs.forward(a)) < 1e-14

    def test_cached_per_grid(self, box):
        assert half_spectrum(box) is half_spectrum(Grid(16, 2 * math.pi))
