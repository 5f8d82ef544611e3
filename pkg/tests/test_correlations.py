import numpy as np
import pytest

import recurlab as rl
from recurlab.correlations import CorrelationSeries, _ball_mass_exact
from recurlab.maps import GridBackedMap

from oracles import ball_mass_weighted_1d, naive_correlation_1d


def _const_obs(grid, c):
    return rl.GridTableObservable(grid, np.full(grid.cell_count, c))


def test_constant_observable_gives_zero_exactly(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    phi = _const_obs(system.grid, 3.7)
    assert rl.correlation(system, phi, phi, 5) == 0.0


def test_identity_map_correlation_is_variance(shift1_m10):
    grid = shift1_m10.grid
    system = GridBackedMap(rl.GridPermutation.identity(grid))
    phi = rl.CoordinateTrig(((1.0,),))
    vals = phi.values(grid.all_centers())[:, 0]
    var = float(np.mean(vals * vals) - vals.mean() ** 2)
    for n in (1, 7, 500):
        assert rl.correlation(system, phi, phi, n) == pytest.approx(var, abs=1e-12)


def test_correlation_rejects_vector_observables(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    phi = rl.CoordinateTrig(((1.0,), (2.0,)))
    with pytest.raises(ValueError):
        rl.correlation(system, phi, phi, 1)


def test_correlation_matches_naive_oracle():
    grid = rl.torus_grid(1, 5)
    gp = rl.discretize(rl.golden_rotation(), grid)
    system = GridBackedMap(gp)
    phi = rl.CoordinateTrig(((1.0,),))
    for n in (1, 3, 10):
        got = rl.correlation(system, phi, phi, n)
        want = naive_correlation_1d(gp.forward.tolist(), 5,
                                    lambda x: np.cos(2 * np.pi * x), n)
        assert got == pytest.approx(want, abs=1e-12)


def test_cat_map_correlations_reproducible_across_resolutions(cat_grid_m7):
    # the discretized cat map is an exact lattice automorphism, so the
    # full-grid correlation of a single Fourier mode vanishes to rounding
    phi = rl.CoordinateTrig(((1.0, 0.0),))
    sys7 = GridBackedMap(cat_grid_m7)
    sys8 = GridBackedMap(rl.discretize(rl.cat_map(), rl.torus_grid(2, 8)))
    c7 = rl.correlation(sys7, phi, phi, 10)
    c8 = rl.correlation(sys8, phi, phi, 10)
    norm = rl.lipschitz_norm(phi, sys8.grid)
    assert c8 <= 1e-2 * norm ** 2
    assert abs(c7 - c8) < 1e-3


def test_full_grid_and_monte_carlo_agree(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    phi = rl.CoordinateTrig(((1.0,),))
    n = 13
    exact = rl.correlation(system, phi, phi, n)
    mc = rl.correlation(system, phi, phi, n, scheme="monte-carlo",
                        samples=20_000, seed=17)
    # product variance bounded by 1; allow 3 standard errors of the mean
    se = 1.0 / np.sqrt(20_000)
    assert abs(mc - exact) <= 3 * se


def test_correlation_symmetric_at_time_zero(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    phi = rl.CoordinateTrig(((1.0,),))
    psi = rl.CoordinateTrig(((2.0,),))
    assert rl.correlation(system, phi, psi, 0) == pytest.approx(
        rl.correlation(system, psi, phi, 0), abs=1e-15
    )


def test_correlation_crude_bound(cat_grid_m5):
    system = GridBackedMap(cat_grid_m5)
    phi = rl.CoordinateTrig(((1.0, 0.0),))
    psi = rl.CoordinateTrig(((0.0, 1.0),))
    pts = system.grid.all_centers()
    sup_phi = np.abs(phi.values(pts)).max()
    sup_psi = np.abs(psi.values(pts)).max()
    mean_prod = abs(phi.values(pts).mean() * psi.values(pts).mean())
    for n in (1, 4, 16):
        assert rl.correlation(system, phi, psi, n) <= sup_phi * sup_psi + mean_prod


def test_theta_scale_invariance(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    grid = system.grid
    base = np.cos(2 * np.pi * grid.all_centers()[:, 0])
    phi = rl.GridTableObservable(grid, base)
    phi_scaled = rl.GridTableObservable(grid, 2.5 * base)
    ns = [1, 2, 4, 8, 16, 32, 64, 128]
    a = rl.correlation_series(system, phi, phi, ns)
    b = rl.correlation_series(system, phi_scaled, phi_scaled, ns)
    assert np.allclose(a.theta_hat, b.theta_hat, atol=1e-12)


def test_lipschitz_constant_observable():
    grid = rl.torus_grid(1, 5)
    assert rl.lipschitz_norm(_const_obs(grid, -4.2), grid) == pytest.approx(4.2)


def test_lipschitz_cosine_close_to_analytic():
    grid = rl.torus_grid(2, 8)
    phi = rl.CoordinateTrig(((1.0, 0.0),))
    norm = rl.lipschitz_norm(phi, grid)
    assert norm == pytest.approx(1.0 + 2.0 * np.pi, rel=0.02)


def test_lipschitz_gridtable_with_wrap_neighbors():
    grid = rl.torus_grid(1, 2)
    phi = rl.GridTableObservable(grid, np.array([0.0, 1.0, 0.0, 1.0]))
    # neighbor difference 1 over distance 0.25, sup 1
    assert rl.lipschitz_norm(phi, grid) == pytest.approx(5.0)


def _series(ns, theta, norm=1.0):
    return CorrelationSeries("phi", "psi", tuple(ns), tuple(theta),
                             norm_phi=norm, norm_psi=1.0, scheme="full-grid")


def test_superpoly_exponential_beats_polynomial():
    ns = [1, 2, 4, 8, 16, 32, 64, 128]
    series = _series(ns, [2.0 ** -n for n in ns])
    fit = rl.superpoly_test(series, [4.0])
    assert fit.verdicts[0].verdict == "consistent-with-decay"


def test_superpoly_constant_is_not_decaying():
    ns = [1, 2, 4, 8, 16, 32, 64, 128]
    series = _series(ns, [0.35] * len(ns))
    fit = rl.superpoly_test(series, [1.0])
    v = fit.verdicts[0]
    assert v.verdict == "not-decaying"
    assert v.weighted[-1] == max(v.weighted)


def test_superpoly_all_zero_is_consistent():
    ns = [1, 2, 4, 8, 16, 32, 64, 128]
    series = _series(ns, [0.0] * 4 + [1e-15] * 4)  # below the numeric floor
    fit = rl.superpoly_test(series, [1.0, 4.0])
    assert all(v.verdict == "consistent-with-decay" for v in fit.verdicts)


def test_superpoly_towerized_map_along_dominant_period(towerized_golden):
    system = GridBackedMap(towerized_golden.permutation)
    phi = rl.CoordinateTrig(((1.0,),))
    p_star = towerized_golden.p_star
    ns = [p_star * k for k in (1, 2, 4, 8, 16, 32, 64, 128)]
    series = rl.correlation_series(system, phi, phi, ns)
    fit = rl.superpoly_test(series, [1.0])
    assert fit.verdicts[0].verdict == "not-decaying"


def test_superpoly_requires_enough_points():
    with pytest.raises(ValueError):
        rl.superpoly_test(_series([1, 2, 4, 8, 16, 32, 64], [0.1] * 7), [1.0])
    with pytest.raises(ValueError):
        rl.superpoly_test(_series([1, 2, 3, 4, 5, 6, 7, 8], [0.1] * 8), [1.0])


def test_local_dimension_torus_slopes():
    for dim, want in ((1, 1.0), (2, 2.0)):
        measure = rl.MeasureModel(rl.torus(dim), rl.torus_grid(dim, 10))
        est = rl.local_dimension(measure, np.full(dim, 0.37), 2.0 ** -9, 2.0 ** -4)
        assert abs(est.slope - want) <= 0.05
        assert est.residual < 1e-9


def test_local_dimension_line_embedded_in_torus():
    # mass concentrated on one coordinate line; balls grow linearly
    grid = rl.torus_grid(2, 6)
    mi = grid.multi_index(np.arange(grid.cell_count))
    weights = (mi[:, 1] == 20).astype(float)
    measure = rl.MeasureModel(rl.torus(2), grid)
    y = grid.centers(np.int64(20 * 64 + 20))  # a point on the loaded line
    est = rl.local_dimension(measure, y, 2.0 ** -5, 2.0 ** -1, weights=weights)
    assert abs(est.slope - 1.0) <= 0.1


def test_ball_mass_matches_weighted_oracle():
    grid = rl.torus_grid(1, 6)
    rng = np.random.Generator(np.random.Philox(key=5))
    weights = rng.random(grid.cell_count)
    weights /= weights.sum()
    measure = rl.MeasureModel(rl.torus(1), grid)
    y = np.array([0.333])
    for r in (0.01, 0.1, 0.27):
        got = _ball_mass_exact(measure.space, weights, grid, y, r)
        want = ball_mass_weighted_1d(weights.tolist(), 6, 0.333, r)
        assert got == pytest.approx(want, abs=1e-12)


def test_local_dimension_additivity_of_product_slopes():
    m1 = rl.MeasureModel(rl.torus(1), rl.torus_grid(1, 10))
    m2 = rl.MeasureModel(rl.torus(2), rl.torus_grid(2, 10))
    s1 = rl.local_dimension(m1, np.array([0.2]), 2.0 ** -8, 2.0 ** -4).slope
    s2 = rl.local_dimension(m2, np.array([0.2, 0.9]), 2.0 ** -8, 2.0 ** -4).slope
    assert abs((s1 + s1) - s2) <= 0.1


def test_local_dimension_monte_carlo_tracks_exact():
    measure = rl.uniform_measure(rl.torus(2))
    y = np.array([0.5, 0.5])
    exact = rl.local_dimension(measure, y, 2.0 ** -6, 2.0 ** -2)
    mc = rl.local_dimension(measure, y, 2.0 ** -6, 2.0 ** -2, samples=200_000, seed=3)
    for em, mm in zip(exact.masses, mc.masses):
        se = max(np.sqrt(em * (1 - em) / 200_000), 1e-9)
        assert abs(em - mm) <= 4 * se


def test_local_dimension_excludes_empty_radii():
    grid = rl.torus_grid(1, 6)
    weights = np.zeros(grid.cell_count)
    weights[32] = 1.0  # a single loaded cell at center 0.5078
    measure = rl.MeasureModel(rl.torus(1), grid)
    y = np.array([0.6])  # small balls miss the loaded cell entirely
    est = rl.local_dimension(measure, y, 2.0 ** -6, 2.0 ** -1, weights=weights)
    assert len(est.excluded_radii) > 0
    assert all(m > 0 for r, m in zip(est.radii, est.masses)
               if r not in est.excluded_radii)


def test_local_dimension_validation():
    measure = rl.uniform_measure(rl.torus(1))
    with pytest.raises(ValueError):
        rl.local_dimension(measure, np.array([0.1]), 0.2, 0.1)
    with pytest.raises(ValueError):
        rl.local_dimension(measure, np.array([0.1]), 2.0 ** -3, 2.0 ** -1)


def test_local_dimension_masses_nondecreasing_in_radius():
    measure = rl.MeasureModel(rl.torus(2), rl.torus_grid(2, 8))
    est = rl.local_dimension(measure, np.array([0.21, 0.84]), 2.0 ** -7, 2.0 ** -2)
    # radii are listed descending, so masses must descend with them
    assert all(a >= b for a, b in zip(est.masses, est.masses[1:]))
