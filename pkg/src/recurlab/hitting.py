"""Finite-horizon hitting and shrinking-target statistics.

"Hits infinitely often" is proxied by "hits at least once in an explicit
index window [m, N]"; m excludes the initial transient and both ends are
reported alongside every output.  With the identity observable and
y = x the hitting score coincides exactly with the recurrence score.

Targets are assumed to have zero-mass observable fibers.  For tabulated
observables this is checkable exactly via
``GridTableObservable.fiber_fraction``; for analytic observables it is an
assumption, not a verified fact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps import GridBackedMap, SystemMap
from .observables import Observable
from .rates import RateSequence, Shrinking
from .recurrence import (
    MeasureEstimate,
    first_hit_fraction,
    score_scan,
    _natural_measure,
)
from .spaces import MeasureModel

_CHUNK = 4096


@dataclass(frozen=True)
class HittingTarget:
    """Target point y with its cached observable value f(y)."""

    y: tuple
    fy: tuple

    @classmethod
    def build(cls, observable: Observable, space, y) -> "HittingTarget":
        y = space.wrap(np.asarray(y, dtype=np.float64))
        fy = observable.values(y[None, :])[0]
        return cls(tuple(float(v) for v in y), tuple(float(v) for v in fy))

    def verify(self, observable: Observable) -> bool:
        fy = observable.values(np.asarray(self.y)[None, :])[0]
        return bool(np.array_equal(fy, np.asarray(self.fy)))


@dataclass(frozen=True)
class WpWindow:
    """Ball-scale multiplier p with index window [m, l]."""

    p: int
    m: int
    l: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be a positive integer")
        if not (1 <= self.m <= self.l):
            raise ValueError("window needs 1 <= m <= l")


@dataclass(frozen=True)
class ShrinkingTargetSpec:
    """Target y with radii t_n = n^(-1/beta)."""

    y: tuple
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def radii(self) -> Shrinking:
        return Shrinking(self.beta)


def hitting_score(
    system_map: SystemMap,
    observable: Observable,
    rate: RateSequence,
    x: np.ndarray,
    y: np.ndarray,
    horizon: int,
    n_start: int = 1,
) -> float:
    """min over n in [n_start, horizon] of r_n d(f(T^n x), f(y)).

    Nonincreasing in ``horizon``; equals the recurrence score when y = x.
    """
    space = system_map.space
    x = space.wrap(np.asarray(x, dtype=np.float64))
    y = space.wrap(np.asarray(y, dtype=np.float64))
    ref = observable.values(y[None, :])[0]
    return score_scan(system_map, observable, rate, x, ref, horizon, n_start)


def wp_hit_count(
    system_map: SystemMap,
    observable: Observable,
    rate: RateSequence,
    x: np.ndarray,
    y: np.ndarray,
    window: WpWindow,
) -> int:
    """Exact count of n in [m, l] with d(f(T^n x), f(y)) < p / r_n."""
    space = system_map.space
    x = space.wrap(np.asarray(x, dtype=np.float64))
    y = space.wrap(np.asarray(y, dtype=np.float64))
    ref = observable.values(y[None, :])[0]
    count = 0
    cur = x
    n = 0
    while n < window.l:
        block_len = min(_CHUNK, window.l - n)
        block = system_map.step_block(cur, block_len)
        cur = block[-1]
        ns = np.arange(n + 1, n + block_len + 1)
        n += block_len
        mask = ns >= window.m
        if not mask.any():
            continue
        dist = observable.distance(observable.values(block[mask]), ref[None, :])
        count += int(np.count_nonzero(dist < window.p / rate.values(ns[mask])))
    return count


def wp_union_measure(
    system_map: SystemMap,
    observable: Observable,
    rate: RateSequence,
    y: np.ndarray,
    window: WpWindow,
    samples: int,
    seed: int,
    measure: MeasureModel | None = None,
) -> MeasureEstimate:
    """Monte Carlo measure of points hitting B(f(y), p/r_n) within the window.

    Forward-orbit evaluation with per-sample early exit; by construction
    the value equals the fraction of samples with wp_hit_count >= 1 on the
    same window and seed.
    """
    if samples < 100:
        raise ValueError("union-measure estimates need at least 100 samples")
    if measure is None:
        measure = _natural_measure(system_map)
    space = system_map.space
    y = space.wrap(np.asarray(y, dtype=np.float64))
    ref = observable.values(y[None, :])[0]
    pts = measure.sample(samples, seed)
    radii = window.p / rate.values(np.arange(window.m, window.l + 1))

    def hit(n, cur, idx):
        d = observable.distance(observable.values(cur), ref[None, :])
        return d < radii[n - window.m]

    frac = first_hit_fraction(system_map, pts, window.m, window.l, hit)
    return MeasureEstimate(frac, samples, seed)


def wp_union_exhaustive(
    system_map: GridBackedMap,
    observable: Observable,
    rate: RateSequence,
    y: np.ndarray,
    window: WpWindow,
) -> float:
    """Exact wp-union measure by enumerating every grid cell."""
    if not isinstance(system_map, GridBackedMap):
        raise ValueError("exhaustive evaluation needs a grid-backed map")
    space = system_map.space
    y = space.wrap(np.asarray(y, dtype=np.float64))
    ref = observable.values(y[None, :])[0]
    pts = system_map.grid.all_centers()
    radii = window.p / rate.values(np.arange(window.m, window.l + 1))

    def hit(n, cur, idx):
        d = observable.distance(observable.values(cur), ref[None, :])
        return d < radii[n - window.m]

    return first_hit_fraction(system_map, pts, window.m, window.l, hit)


def borel_cantelli_fraction(
    system_map: SystemMap,
    spec: ShrinkingTargetSpec,
    m: int,
    horizon: int,
    samples: int,
    seed: int,
    measure: MeasureModel | None = None,
) -> float:
    """Fraction of sampled orbits entering B(y, t_n) for some n in [m, horizon].

    Finite proxy for the shrinking-target "infinitely many n" event;
    deterministic given the seed.
    """
    if not (1 <= m < horizon):
        raise ValueError("need 1 <= m < horizon")
    if measure is None:
        measure = _natural_measure(system_map)
    space = system_map.space
    y = space.wrap(np.asarray(spec.y, dtype=np.float64))
    pts = measure.sample(samples, seed)
    radii = spec.radii.values(np.arange(m, horizon + 1))

    def hit(n, cur, idx):
        return space.distance(cur, y[None, :]) < radii[n - m]

    return first_hit_fraction(system_map, pts, m, horizon, hit)
