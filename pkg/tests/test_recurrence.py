import numpy as np
import pytest

import recurlab as rl
from recurlab.maps import GridBackedMap
from recurlab.recurrence import MeasureEstimate, RecurrenceWindow

from oracles import grid_score_1d, grid_window_union_1d, rotation_score_fast

GOLDEN = rl.maps.GOLDEN_MEAN


def _id_obs(system):
    return rl.IdentityObservable(system.space)


def test_identity_map_scores_zero():
    system = rl.Identity(rl.torus(2))
    s = rl.recurrence_score(system, _id_obs(system), rl.Power(1.0),
                            np.array([0.3, 0.8]), 50)
    assert s == 0.0


def test_period_four_rotation_hits_exactly():
    system = rl.Rotation((0.25,))
    s = rl.recurrence_score(system, _id_obs(system), rl.Power(1.0), np.array([0.0]), 4)
    assert s == pytest.approx(0.0, abs=1e-12)


def test_golden_rotation_score_matches_brute_force():
    # frozen oracle values: min-from-1 is 0.381966..., the tail half-window
    # proxy sits at 1/sqrt(5) = 0.447213...
    system = rl.golden_rotation()
    f, r = _id_obs(system), rl.Power(1.0)
    horizon = 10 ** 5
    full = rl.recurrence_score(system, f, r, np.array([0.613]), horizon)
    tail = rl.recurrence_score(system, f, r, np.array([0.613]), horizon,
                               n_start=horizon // 2)
    assert full == pytest.approx(rotation_score_fast(GOLDEN, 1, horizon), abs=1e-9)
    assert full == pytest.approx(0.3819660112501051, abs=1e-9)
    assert tail == pytest.approx(rotation_score_fast(GOLDEN, horizon // 2, horizon), abs=1e-6)
    assert 0.44 <= tail <= 0.48  # about 1/sqrt(5)


def test_score_nonincreasing_in_horizon(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    f, r = _id_obs(system), rl.Power(1.0)
    x = np.array([0.111])
    scores = [rl.recurrence_score(system, f, r, x, n) for n in (1, 5, 25, 125, 400)]
    assert all(b <= a for a, b in zip(scores, scores[1:]))


def test_grid_score_matches_naive_oracle(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    f, r = _id_obs(system), rl.Power(1.0)
    forward = golden_grid_m10.forward.tolist()
    for cell in (0, 17, 500, 1023):
        x = golden_grid_m10.grid.centers(np.int64(cell))
        got = rl.recurrence_score(system, f, r, x, 200)
        want = grid_score_1d(forward, 10, cell, float, 1, 200)
        assert got == pytest.approx(want, abs=1e-12)


def test_in_window_identity_always_true():
    system = rl.Identity(rl.torus(1))
    assert rl.in_window_set(system, _id_obs(system), rl.Power(1.0),
                            np.array([0.4]), 7, 1e-9)


def test_in_window_half_rotation_threshold():
    system = rl.Rotation((0.5,))
    f, r = _id_obs(system), rl.Power(1.0)
    x = np.array([0.25])
    # distance after one step is exactly 0.5 under the wrap metric
    assert not rl.in_window_set(system, f, r, x, 1, 0.4)
    assert rl.in_window_set(system, f, r, x, 1, 0.6)


def test_in_window_monotone_in_threshold(golden_grid_m10, rng):
    system = GridBackedMap(golden_grid_m10)
    f, r = _id_obs(system), rl.Power(1.0)
    for _ in range(100):
        x = rng.random(1)
        n = int(rng.integers(1, 50))
        k = float(rng.uniform(0.01, 2.0))
        if rl.in_window_set(system, f, r, x, n, k):
            assert rl.in_window_set(system, f, r, x, n, k * 1.5)


def test_window_union_identity_is_one():
    system = rl.Identity(rl.torus(1))
    est = rl.window_union_measure(system, _id_obs(system), rl.Power(1.0),
                                  RecurrenceWindow(1, 10, 0.5), 200, seed=1)
    assert est.value == 1.0


def test_window_union_single_cycle_is_zero():
    # a single N-cycle moves every cell at least one width per step until
    # the period closes, so thresholds below r_1 * width never fire
    grid = rl.torus_grid(1, 5)
    system = GridBackedMap(rl.GridPermutation.cyclic_shift(grid, 1))
    k = 0.9 * grid.cell_width
    window = RecurrenceWindow(1, grid.cell_count - 1, k)
    est = rl.window_union_measure(system, _id_obs(system), rl.Power(1.0),
                                  window, 300, seed=2)
    assert est.value == 0.0
    exact = rl.window_union_exhaustive(system, _id_obs(system), rl.Power(1.0), window)
    assert exact == 0.0


def test_window_union_towerized_covers_short_period_mass(towerized_golden):
    # cells on cycles of length <= P* return exactly, so any k > 0 works
    report = towerized_golden
    system = GridBackedMap(report.permutation)
    window = RecurrenceWindow(1, report.p_star, 1e-6)
    exact = rl.window_union_exhaustive(system, _id_obs(system), rl.Power(1.0), window)
    assert exact >= report.p_star_fraction >= 0.9


def test_monte_carlo_tracks_exhaustive(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    f, r = _id_obs(system), rl.Power(1.0)
    window = RecurrenceWindow(1, 40, 0.35)
    exact = rl.window_union_exhaustive(system, f, r, window)
    est = rl.window_union_measure(system, f, r, window, 4000, seed=5)
    se = max(est.stderr, 1e-6)
    assert abs(est.value - exact) <= 3 * se


def test_window_union_matches_naive_oracle():
    grid = rl.torus_grid(1, 5)
    gp = rl.discretize(rl.golden_rotation(), grid)
    system = GridBackedMap(gp)
    f, r = _id_obs(system), rl.Power(1.0)
    for (m, l, k) in ((1, 10, 0.3), (3, 25, 0.8), (2, 31, 0.05)):
        got = rl.window_union_exhaustive(system, f, r, RecurrenceWindow(m, l, k))
        want = grid_window_union_1d(gp.forward.tolist(), 5, float, m, l, k)
        assert got == pytest.approx(want, abs=1e-12)


def test_window_union_monotone_in_l_and_k_same_seed(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    f, r = _id_obs(system), rl.Power(1.0)
    sizes = [rl.window_union_measure(system, f, r, RecurrenceWindow(1, l, 0.3),
                                     500, seed=9).value
             for l in (5, 20, 60)]
    assert sizes[0] <= sizes[1] <= sizes[2]
    ks = [rl.window_union_measure(system, f, r, RecurrenceWindow(1, 20, k),
                                  500, seed=9).value
          for k in (0.1, 0.3, 0.9)]
    assert ks[0] <= ks[1] <= ks[2]


def test_window_union_deterministic_given_seed(golden_grid_m10):
    system = GridBackedMap(golden_grid_m10)
    f, r = _id_obs(system), rl.Power(1.0)
    window = RecurrenceWindow(1, 30, 0.4)
    a = rl.window_union_measure(system, f, r, window, 500, seed=123)
    b = rl.window_union_measure(system, f, r, window, 500, seed=123)
    assert a.value == b.value


def test_score_window_equivalence_small_exhaustive():
    # score < k iff some window set fires, for every cell and a k ladder
    grid = rl.torus_grid(1, 4)
    system = GridBackedMap(rl.discretize(rl.golden_rotation(), grid))
    f, r = _id_obs(system), rl.Power(1.0)
    horizon = 40
    ks = np.geomspace(0.01, 2.0, 8)
    for cell in range(grid.cell_count):
        x = grid.centers(np.int64(cell))
        score = rl.recurrence_score(system, f, r, x, horizon)
        for k in ks:
            fired = any(rl.in_window_set(system, f, r, x, n, k)
                        for n in range(1, horizon + 1))
            assert (score < k) == fired


def test_measure_estimate_stderr_formula():
    est = MeasureEstimate(0.25, 400, seed=0)
    assert est.stderr == pytest.approx(np.sqrt(0.25 * 0.75 / 400))
    with pytest.raises(ValueError):
        MeasureEstimate(1.5, 100, seed=0)


def test_window_validation():
    with pytest.raises(ValueError):
        RecurrenceWindow(5, 4, 0.1)
    with pytest.raises(ValueError):
        RecurrenceWindow(1, 4, 0.0)
    with pytest.raises(ValueError):
        rl.window_union_measure(
            rl.Identity(rl.torus(1)), rl.IdentityObservable(rl.torus(1)),
            rl.Power(1.0), RecurrenceWindow(1, 5, 0.1), 50, seed=0,
        )  # fewer than 100 samples


def test_score_rejects_bad_window():
    system = rl.Identity(rl.torus(1))
    f = _id_obs(system)
    with pytest.raises(ValueError):
        rl.recurrence_score(system, f, rl.Power(1.0), np.array([0.1]), 0)
    with pytest.raises(ValueError):
        rl.recurrence_score(system, f, rl.Power(1.0), np.array([0.1]), 10, n_start=11)
