import numpy as np
import pytest

from pskmeans.basis import eval_basis, make_knots
from pskmeans.errors import DegenerateRoughnessError
from pskmeans.select import (default_lambda_grid, penalty_floor, select_lambda,
                             vcurve_from_psi_phi, vcurve_trace)
from pskmeans.simgen import ar1_noise
from pskmeans.smooth import Series, fit_pspline, predict


def _noisy_sine(seed, n=50, sigma=0.2):
    rng = np.random.default_rng(seed)
    x = np.linspace(0, 1, n)
    truth = np.sin(2 * np.pi * x)
    return x, truth, truth + sigma * rng.standard_normal(n)


def test_v_nonnegative_and_shape():
    x, _, y = _noisy_sine(1)
    trace = vcurve_trace(Series.from_arrays(x, y), make_knots(0, 1, 20, 3))
    assert trace.v.shape == (trace.lambdas.size - 1,)
    assert np.all(trace.v >= 0)
    np.testing.assert_allclose(trace.v, np.hypot(np.diff(trace.psi), np.diff(trace.phi)), rtol=0, atol=0)


def test_constant_series_degenerate():
    x = np.linspace(0, 1, 30)
    with pytest.raises(DegenerateRoughnessError):
        vcurve_trace(Series.from_arrays(x, np.full(30, 4.2)), make_knots(0, 1, 8, 3), 3, [0.1, 1.0, 10.0])


@pytest.mark.parametrize("seed", range(10))
def test_noisy_sinusoid_beats_grid_ends(seed):
    x, truth, y = _noisy_sine(seed)
    grid = make_knots(0, 1, 40, 3)
    series = Series.from_arrays(x, y)
    lams = default_lambda_grid(1e-5, 1e8, 100)
    lam_star = select_lambda(series, grid, 3, lams)

    def rmse(lam):
        return np.sqrt(np.mean((predict(fit_pspline(series, grid, lam, 3), x) - truth) ** 2))

    chosen = rmse(lam_star)
    assert chosen <= 0.5 * np.mean([rmse(lams[0]), rmse(lams[-1])])
    # and close to the best the grid can offer
    assert chosen <= 1.5 * min(rmse(lam) for lam in lams)


def test_midpoint_convention():
    lams = np.array([1.0, 10.0, 100.0, 1000.0])
    psi = np.array([0.0, 1.0, 1.1, 3.0])
    phi = np.array([0.0, 0.0, 0.0, 0.0])
    v, k, lam = vcurve_from_psi_phi(lams, psi, phi)
    np.testing.assert_allclose(v, [1.0, 0.1, 1.9])
    assert k == 1
    assert lam == pytest.approx(np.sqrt(10.0 * 100.0))


def test_tie_goes_to_smaller_lambda():
    lams = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    psi = np.array([0.0, 0.5, 2.0, 2.5, 5.0])
    v, k, lam = vcurve_from_psi_phi(lams, psi, np.zeros(5))
    assert v[0] == v[2]
    assert k == 0
    assert lam == pytest.approx(np.sqrt(2.0))


def test_search_start_respected():
    lams = np.geomspace(1, 1e4, 5)
    psi = np.array([0.0, 0.0, 1.0, 1.5, 3.0])
    _, k, _ = vcurve_from_psi_phi(lams, psi, np.zeros(5), start=1)
    assert k == 2


@pytest.mark.parametrize("seed", range(5))
def test_ar1_fit_does_not_interpolate(seed):
    rho = 0.5
    rng = np.random.default_rng(seed)
    x = np.linspace(0, 1, 100)
    truth = 4 + np.sin(2 * np.pi * x)
    eps = ar1_noise(100, rho, 0.4, rng)
    series = Series.from_arrays(x, truth + eps)
    grid = make_knots(0, 1, 25, 3)
    fit = fit_pspline(series, grid, select_lambda(series, grid, 3), 3)
    assert fit.fit_ss > 0.5 * np.sum(eps ** 2)


@pytest.mark.parametrize("seed", range(4))
def test_grid_refinement_stability(seed):
    x, _, y = _noisy_sine(seed, n=100)
    grid = make_knots(0, 1, 25, 3)
    series = Series.from_arrays(x, y)
    coarse = default_lambda_grid(1e-5, 1e8, 100)
    fine = default_lambda_grid(1e-5, 1e8, 199)
    step = np.log10(coarse[1] / coarse[0])
    a = select_lambda(series, grid, 3, coarse)
    b = select_lambda(series, grid, 3, fine)
    assert abs(np.log10(a) - np.log10(b)) < step


def test_trace_matches_fresh_fits():
    x, _, y = _noisy_sine(3)
    mask = np.zeros(50, bool)
    mask[[4, 17, 30]] = True
    series = Series.from_arrays(x, y, mask)
    grid = make_knots(0, 1, 15, 3)
    lams = default_lambda_grid(1e-3, 1e5, 25)
    trace = vcurve_trace(series, grid, 3, lams)
    fits = [fit_pspline(series, grid, lam, 3) for lam in lams]
    psi = np.log([f.fit_ss for f in fits])
    phi = np.log([f.roughness for f in fits])
    np.testing.assert_allclose(trace.v, np.hypot(np.diff(psi), np.diff(phi)), rtol=0, atol=1e-10)


def test_deterministic():
    x, _, y = _noisy_sine(9)
    grid = make_knots(0, 1, 20, 3)
    a = select_lambda(Series.from_arrays(x, y), grid)
    b = select_lambda(Series.from_arrays(x.copy(), y.copy()), grid)
    assert a == b


def test_penalty_floor():
    grid = make_knots(0, 1, 10, 3)
    b = eval_basis(grid, np.linspace(0, 1, 100)).values
    from pskmeans.smooth import difference_matrix
    dtd = difference_matrix(grid.n_basis, 3).gram
    s_max = np.max(np.linalg.eigvals(np.linalg.solve(b.T @ b, dtd)).real)
    assert penalty_floor(b.T @ b, dtd, 10.0) == pytest.approx(10.0 / s_max, rel=1e-8)
    assert penalty_floor(b.T @ b, dtd, 0.0) == 0.0
    # singular B^T B: no floor
    b_short = eval_basis(grid, np.linspace(0, 1, 6)).values
    assert penalty_floor(b_short.T @ b_short, dtd, 10.0) == 0.0


def test_invalid_grid():
    x, _, y = _noisy_sine(0)
    grid = make_knots(0, 1, 10, 3)
    s = Series.from_arrays(x, y)
    for bad in ([1.0, 2.0], [1.0, 1.0, 2.0], [-1.0, 1.0, 2.0], [3.0, 2.0, 1.0]):
        with pytest.raises(ValueError):
            vcurve_trace(s, grid, 3, bad)
