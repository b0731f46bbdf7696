import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mitoclock import (
    ClosedFormRate,
    ConfigurationError,
    Model,
    TabulatedRate,
    ValidationError,
    equilibrium,
    gre_functional,
    solve_lambda,
)
from mitoclock.spectral import AgeProfile, build_grid, renewal_residual

FIT_ERFC_MU = Model(family="erfc-mu", beta0=0.17879, m=25.007, sigma=3.6141, mu=0.00333)


def constant_rate(b0, span=None):
    # survival drops below tolerance once b0 * span >> 27.6
    span = span if span is not None else 40.0 / b0
    return TabulatedRate([0.0, span], [b0, b0])


def test_constant_rate_growth_equals_rate():
    for b0 in (0.1, 0.25, 0.5):
        lam = solve_lambda(constant_rate(b0), 0.0)
        assert lam == pytest.approx(b0, abs=1e-12)


def test_growth_rate_is_positive_without_death():
    for model in (Model(family="gamma1", m=17.0, sigma=2.0), Model(family="erfc", beta0=0.14204, m=24.456, sigma=3.3451)):
        assert solve_lambda(ClosedFormRate(model), 0.0) > 0


@given(
    b0=st.floats(min_value=0.05, max_value=0.6),
    mu=st.floats(min_value=0.0, max_value=0.05),
    delta=st.floats(min_value=0.0, max_value=0.05),
)
@settings(max_examples=25, deadline=None)
def test_death_rate_shift_identity(b0, mu, delta):
    rate = constant_rate(b0)
    grid = build_grid(rate, step=0.05)
    base = solve_lambda(rate, mu, grid=grid)
    shifted = solve_lambda(rate, mu + delta, grid=grid)
    assert shifted == pytest.approx(base - delta, abs=1e-10)


def test_shift_identity_for_fitted_rate():
    rate = ClosedFormRate(FIT_ERFC_MU)
    grid = build_grid(rate, step=0.05)
    base = solve_lambda(rate, 0.00333, grid=grid)
    shifted = solve_lambda(rate, 0.00333 + 0.01, grid=grid)
    assert shifted == pytest.approx(base - 0.01, abs=1e-10)


def test_fitted_rate_growth_matches_experiment():
    lam = solve_lambda(ClosedFormRate(FIT_ERFC_MU), 0.00333)
    assert lam == pytest.approx(0.022, rel=0.10)
    assert lam == pytest.approx(0.022565, abs=2e-4)  # regression pin


def test_renewal_residual_vanishes_at_solution():
    rate = ClosedFormRate(FIT_ERFC_MU)
    grid = build_grid(rate, step=0.05)
    lam = solve_lambda(rate, 0.00333, grid=grid)
    assert abs(renewal_residual(rate, 0.00333, lam, grid)) < 1e-10


def test_renewal_value_is_decreasing_in_lambda():
    rate = ClosedFormRate(FIT_ERFC_MU)
    grid = build_grid(rate, step=0.05)
    values = [renewal_residual(rate, 0.00333, lam, grid) for lam in (-0.002, 0.0, 0.01, 0.02, 0.05, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_zero_rate_rejected():
    zero = TabulatedRate([0.0, 100.0], [0.0, 0.0])
    with pytest.raises(ConfigurationError):
        solve_lambda(zero, 0.0)


def test_nondivergent_grid_rejected():
    rate = ClosedFormRate(Model(family="erfc", beta0=0.14, m=24.0, sigma=3.3))
    with pytest.raises(ConfigurationError):
        solve_lambda(rate, 0.0, grid=np.linspace(0.0, 30.0, 601))


def test_equilibrium_constant_rate_is_exponential_with_unit_adjoint():
    b0 = 0.5
    rate = constant_rate(b0)
    pair = equilibrium(rate, 0.0)
    expected = 2.0 * b0 * np.exp(-2.0 * b0 * pair.grid)
    np.testing.assert_allclose(pair.p_hat, expected, rtol=1e-3)
    assert pair.p_hat[0] == pytest.approx(2.0 * b0, rel=1e-3)
    # phi = 1 away from the imposed-decay layer at the top of the grid
    interior = pair.grid <= pair.grid[-1] - 20.0
    np.testing.assert_allclose(pair.phi[interior], 1.0, atol=1e-6)


def test_equilibrium_invariants_for_fitted_rate():
    rate = ClosedFormRate(FIT_ERFC_MU)
    pair = equilibrium(rate, 0.00333)
    grid = pair.grid
    assert abs(np.trapezoid(pair.p_hat, grid) - 1.0) < 1e-8
    assert abs(np.trapezoid(pair.p_hat * pair.phi, grid) - 1.0) < 1e-6
    assert np.all(pair.p_hat > 0)
    assert np.all(np.diff(pair.p_hat) <= 1e-15)  # monotone decreasing
    # essentially supported below m + 6 sigma
    tail = grid > FIT_ERFC_MU.m + 6.0 * FIT_ERFC_MU.sigma
    assert np.trapezoid(pair.p_hat[tail], grid[tail]) < 1e-4
    # renewal boundary identity, self-consistent quadrature
    assert abs(renewal_residual(rate, 0.00333, pair.lam, grid)) < 1e-10
    # and with the plain trapezoid (smooth rate, so this stays tight)
    births = 2.0 * np.trapezoid(np.asarray(rate(grid)) * pair.p_hat, grid)
    assert abs(pair.p_hat[0] - births) < 1e-6 * pair.p_hat[0]


@pytest.mark.parametrize("family", ["gamma1", "gamma2"])
def test_equilibrium_boundary_identity_for_kinked_rates(family):
    rate = ClosedFormRate(Model(family=family, m=17.0, sigma=2.0))
    pair = equilibrium(rate, 0.0)
    assert abs(renewal_residual(rate, 0.0, pair.lam, pair.grid)) < 1e-10
    births = 2.0 * np.trapezoid(np.asarray(rate(pair.grid)) * pair.p_hat, pair.grid)
    assert abs(pair.p_hat[0] - births) < 1e-4 * pair.p_hat[0]


def test_adjoint_satisfies_its_equation():
    rate = ClosedFormRate(FIT_ERFC_MU)
    pair = equilibrium(rate, 0.00333)
    grid, phi = pair.grid, pair.phi
    beta = np.asarray(rate(grid))
    dphi = np.gradient(phi, grid)
    residual = pair.lam * phi - dphi + (beta + 0.00333) * phi - 2.0 * phi[0] * beta
    assert np.abs(residual[5:-5]).max() < 1e-3 * max(1.0, phi.max())


def test_gre_functional_normalization_and_linearity():
    rate = ClosedFormRate(FIT_ERFC_MU)
    pair = equilibrium(rate, 0.00333)
    value = gre_functional(pair.profile(), pair.adjoint(), pair.lam, 0.0)
    assert value == pytest.approx(1.0, abs=1e-12)
    scaled = AgeProfile(pair.grid, 3.5 * pair.p_hat)
    assert gre_functional(scaled, pair.adjoint(), pair.lam, 0.0) == pytest.approx(3.5, rel=1e-12)
    # discounting in time
    later = gre_functional(pair.profile(), pair.adjoint(), pair.lam, 10.0)
    assert later == pytest.approx(np.exp(-pair.lam * 10.0), rel=1e-12)


def test_gre_functional_grid_mismatch():
    rate = ClosedFormRate(FIT_ERFC_MU)
    pair = equilibrium(rate, 0.00333)
    other = AgeProfile(pair.grid + 0.5, pair.phi)
    with pytest.raises(ValidationError):
        gre_functional(pair.profile(), other, pair.lam, 0.0)


def test_eigenpair_csv_export(tmp_path):
    pair = equilibrium(constant_rate(0.5), 0.0)
    path = tmp_path / "pair.csv"
    pair.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[:, 0], pair.grid)
    np.testing.assert_allclose(data[:, 1], pair.p_hat)
    np.testing.assert_allclose(data[:, 2], pair.phi)


def test_build_grid_extends_until_survival_is_negligible():
    rate = ClosedFormRate(Model(family="erfc", beta0=0.14204, m=24.456, sigma=3.3451))
    grid = build_grid(rate, step=0.05)
    assert float(np.exp(-rate.hazard(grid[-1]))) < 1e-12
    assert grid[0] == 0.0
    assert np.allclose(np.diff(grid), 0.05)
