"""Wiener path generation, coarsening and one-step stochastic maps."""

import numpy as np
import pytest

from splitburg import (
    ConfigError,
    FieldState,
    NoiseAmplitude,
    ResourceLimit,
    SpatialGrid,
    coarsen,
    em_step,
    exact_linear_sde,
    generate_path,
    milstein_step,
)

EXP_HALF = 1.6487212707001282  # e^{1/2}


def test_amplitude_kinds():
    linear = NoiseAmplitude("linear", 0.5)
    assert linear(2.0) == 1.0
    assert linear.deriv(2.0) == 0.5
    assert np.array_equal(linear(np.array([1.0, -2.0])), [0.5, -1.0])

    constant = NoiseAmplitude("constant", 0.3)
    assert constant(17.0) == 0.3
    assert constant.deriv(17.0) == 0.0
    assert np.array_equal(constant(np.zeros(3)), np.full(3, 0.3))


def test_amplitude_validation():
    with pytest.raises(ConfigError):
        NoiseAmplitude("quadratic", 0.5)
    with pytest.raises(ConfigError):
        NoiseAmplitude("linear", -0.1)


def test_path_is_reproducible_per_seed():
    a = generate_path(42, 1.0, 1e-3)
    b = generate_path(42, 1.0, 1e-3)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, generate_path(43, 1.0, 1e-3).increments)


def test_path_geometry():
    path = generate_path(1, 0.01, 1e-3)
    assert path.n_steps == 10
    assert path.t_end == pytest.approx(0.01)
    assert 2 in path.levels and 5 in path.levels and 10 in path.levels
    assert 3 not in path.levels


def test_path_increments_have_the_right_moments():
    pooled = np.concatenate(
        [generate_path(seed, 1.0, 1e-3).increments for seed in range(50)]
    )
    assert pooled.size == 50_000
    assert abs(pooled.mean()) < 4 * np.sqrt(1e-3 / pooled.size)
    assert 0.9e-3 < pooled.var() < 1.1e-3


def test_path_argument_validation():
    with pytest.raises(ConfigError):
        generate_path(-1, 1.0, 1e-3)
    with pytest.raises(ConfigError):
        generate_path(1, 1.0, 0.0)
    with pytest.raises(ConfigError):
        generate_path(1, 0.0105, 1e-2)
    with pytest.raises(ResourceLimit):
        generate_path(1, 1.0, 1e-3, max_steps=100)


def test_increment_over_matches_slice_sum():
    path = generate_path(5, 0.1, 1e-3)
    total = path.increment_over(0, path.n_steps)
    assert total == path.total
    assert path.increment_over(3, 3) == 0.0
    with pytest.raises(ValueError):
        path.increment_over(0, path.n_steps + 1)
    with pytest.raises(ValueError):
        path.increment_over(-1, 2)


def test_coarsen_agrees_with_increment_over_bitwise():
    path = generate_path(9, 0.2, 1e-3)
    for factor in (1, 2, 4, 8, 25, 200):
        coarse = coarsen(path, factor)
        assert coarse.size == path.n_steps // factor
        for i in range(coarse.size):
            assert coarse[i] == path.increment_over(i * factor, (i + 1) * factor)


def test_coarsen_validation():
    path = generate_path(2, 0.01, 1e-3)
    with pytest.raises(ConfigError):
        coarsen(path, 3)
    with pytest.raises(ConfigError):
        coarsen(path, 0)


def test_em_step_values():
    sigma = NoiseAmplitude("linear", 0.5)
    assert em_step(2.0, sigma, 0.1) == pytest.approx(2.1)
    assert np.array_equal(
        em_step(np.array([1.0, 2.0]), sigma, 0.2), [1.1, 2.2]
    )


def test_milstein_oracle_values():
    # 2 + 1*0.1 + (1/2)*1*0.5*(0.01 - 0.01): the correction cancels exactly
    assert milstein_step(2.0, NoiseAmplitude("linear", 0.5), 0.1, 0.01) == 2.1
    # 1 + 0.2 + (1/2)*1*1*(0.04 - 0.01)
    assert milstein_step(1.0, NoiseAmplitude("linear", 1.0), 0.2, 0.01) == pytest.approx(1.215)


def test_milstein_reduces_to_em_for_state_independent_noise():
    sigma = NoiseAmplitude("constant", 0.7)
    rng = np.random.default_rng(21)
    for _ in range(50):
        c = rng.normal(size=6)
        dw = float(rng.normal(scale=0.1))
        assert np.array_equal(
            milstein_step(c, sigma, dw, 0.01), em_step(c, sigma, dw)
        )


def test_stochastic_steps_accept_field_states():
    grid = SpatialGrid(0.0, 1.0, 3)
    state = FieldState(grid, np.array([1.0, 2.0, 3.0]), time=0.4)
    sigma = NoiseAmplitude("linear", 0.5)
    after = milstein_step(state, sigma, 0.1, 0.01)
    assert isinstance(after, FieldState)
    assert after.time == 0.4  # time bookkeeping is the caller's job
    assert np.array_equal(
        after.values, milstein_step(state.values, sigma, 0.1, 0.01)
    )


def test_exact_linear_sde_values():
    assert exact_linear_sde(1.0, 1.0, 1.0, 1.0) == pytest.approx(EXP_HALF, rel=1e-15)
    assert exact_linear_sde(3.0, 0.0, 1.7, 2.0) == 3.0
    # W_t = 0 leaves only the Ito drift correction
    assert exact_linear_sde(2.0, 0.5, 0.0, 1.0) == pytest.approx(2.0 * np.exp(-0.125))
    with pytest.raises(ConfigError):
        exact_linear_sde(1.0, -0.5, 0.0, 1.0)
    with pytest.raises(ConfigError):
        exact_linear_sde(1.0, 0.5, 0.0, -1.0)


def test_milstein_beats_em_on_geometric_brownian_motion():
    # one-step strong accuracy at coarse dt, 400 seeds
    lam, dt = 0.5, 0.25
    err_mil, err_em = 0.0, 0.0
    sigma = NoiseAmplitude("linear", lam)
    for seed in range(400):
        path = generate_path(seed, dt, dt / 64)
        w = path.total
        exact = exact_linear_sde(1.0, lam, w, dt)
        err_mil += abs(milstein_step(1.0, sigma, w, dt) - exact)
        err_em += abs(em_step(1.0, sigma, w) - exact)
    assert err_mil < err_em
