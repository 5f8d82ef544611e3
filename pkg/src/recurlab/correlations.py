"""Correlation decay tests and local dimension estimation.

Correlations are the absolute centered cross moments
|E[(phi o T^n) psi] - E[phi] E[psi]| of scalar observables, normalized by
the product of their norms.  The norm convention is sup|phi| + Lip(phi)
(recorded in every series so alternative conventions can rescale).

The decay verdicts are pragmatic classifiers over finite horizon lists,
not estimators of an asymptotic limit; the raw n^p-weighted sequences are
always emitted so a verdict can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec
from .maps import GridBackedMap, SystemMap
from .observables import Observable
from .spaces import MeasureModel, Space

# Full-grid sums are exact up to accumulated rounding; normalized values
# at or below this floor are treated as exactly zero by the decay test.
NUMERIC_ZERO = 1e-12


@dataclass(frozen=True)
class CorrelationSeries:
    """Raw and normalized correlations over an increasing horizon list."""

    phi: str
    psi: str
    ns: tuple
    c_hat: tuple
    norm_phi: float
    norm_psi: float
    scheme: str  # "full-grid" or "monte-carlo"
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise ValueError("horizon list must be strictly increasing")
        if any(v < 0 for v in self.c_hat):
            raise ValueError("correlations are absolute values, hence >= 0")

    @property
    def theta_hat(self) -> tuple:
        denom = self.norm_phi * self.norm_psi
        return tuple(v / denom for v in self.c_hat)


def _exact_mean(vals: np.ndarray) -> float:
    """Correctly rounded mean; keeps constant observables at exactly zero."""
    return math.fsum(vals) / vals.size


def _observable_scalar(obs: Observable, pts: np.ndarray) -> np.ndarray:
    vals = obs.values(pts)
    if vals.ndim == 2:
        if vals.shape[1] != 1:
            raise ValueError("correlation needs scalar observables")
        vals = vals[:, 0]
    return vals


def correlation(
    system_map: SystemMap,
    phi: Observable,
    psi: Observable,
    n: int,
    scheme: str = "full-grid",
    samples: int = 10_000,
    seed: int = 0,
    measure: MeasureModel | None = None,
) -> float:
    """|E[(phi o T^n) psi] - E[phi] E[psi]| under the uniform measure.

    The full-grid scheme sums exactly over all cells of a grid-backed
    map; the monte-carlo scheme averages over ``samples`` seeded draws.

    Raises:
        ValueError: non-scalar observables, or full-grid on a non-grid map.
    """
    if n < 0:
        raise ValueError("time index must be >= 0")
    if n == 0:
        # Plain covariance of the base values; no orbit pass needed.
        if scheme == "full-grid":
            if not isinstance(system_map, GridBackedMap):
                raise ValueError("full-grid scheme needs a grid-backed map")
            pts = system_map.grid.all_centers()
        elif scheme == "monte-carlo":
            if measure is None:
                from .recurrence import _natural_measure

                measure = _natural_measure(system_map)
            pts = measure.sample(samples, seed)
        else:
            raise ValueError(f"unknown correlation scheme {scheme!r}")
        pv = _observable_scalar(phi, pts)
        sv = _observable_scalar(psi, pts)
        pv = pv - _exact_mean(pv)
        sv = sv - _exact_mean(sv)
        return abs(float(np.mean(pv * sv)))
    series = correlation_series(system_map, phi, psi, [n], scheme, samples, seed, measure)
    return series.c_hat[0]


def correlation_series(
    system_map: SystemMap,
    phi: Observable,
    psi: Observable,
    ns,
    scheme: str = "full-grid",
    samples: int = 10_000,
    seed: int = 0,
    measure: MeasureModel | None = None,
) -> CorrelationSeries:
    """Correlations at every horizon in ``ns`` from one incremental orbit pass."""
    ns = [int(v) for v in ns]
    if any(v < 1 for v in ns):
        raise ValueError("horizons must be >= 1")
    if scheme == "full-grid":
        if not isinstance(system_map, GridBackedMap):
            raise ValueError("full-grid scheme needs a grid-backed map")
        grid = system_map.grid
        pts = grid.all_centers()
        phi_vals = _observable_scalar(phi, pts)
        psi_vals = _observable_scalar(psi, pts)
        perm = system_map.permutation.forward
        cur = np.arange(grid.cell_count)
        # Centered evaluation with correctly rounded means, so constant
        # observables give exactly zero.
        phi_c = phi_vals - _exact_mean(phi_vals)
        psi_c = psi_vals - _exact_mean(psi_vals)
        out = []
        reached = 0
        for target in sorted(set(ns)):
            while reached < target:
                cur = perm[cur]
                reached += 1
            out.append(abs(float(np.mean(phi_c[cur] * psi_c))))
        values = dict(zip(sorted(set(ns)), out))
        c_hat = [values[v] for v in ns]
        norm_grid = grid
        samples_used, seed_used = 0, 0
    elif scheme == "monte-carlo":
        if measure is None:
            from .recurrence import _natural_measure

            measure = _natural_measure(system_map)
        pts = measure.sample(samples, seed)
        phi0 = _observable_scalar(phi, pts)
        psi0 = _observable_scalar(psi, pts)
        mean_phi = _exact_mean(phi0)
        psi_c = psi0 - _exact_mean(psi0)
        cur = pts
        out = {}
        reached = 0
        for target in sorted(set(ns)):
            while reached < target:
                cur = system_map.step(cur)
                reached += 1
            cross = float(np.mean((_observable_scalar(phi, cur) - mean_phi) * psi_c))
            out[target] = abs(cross)
        c_hat = [out[v] for v in ns]
        norm_grid = _default_norm_grid(system_map)
        samples_used, seed_used = samples, seed
    else:
        raise ValueError(f"unknown correlation scheme {scheme!r}")

    return CorrelationSeries(
        phi.describe(),
        psi.describe(),
        tuple(ns),
        tuple(c_hat),
        lipschitz_norm(phi, norm_grid),
        lipschitz_norm(psi, norm_grid),
        scheme,
        samples_used,
        seed_used,
    )


def _default_norm_grid(system_map: SystemMap) -> GridSpec:
    if isinstance(system_map, GridBackedMap):
        return system_map.grid
    return GridSpec(system_map.space.dim, 8, system_map.space)


def lipschitz_norm(obs: Observable, grid: GridSpec) -> float:
    """sup|phi| + Lip(phi) estimated over grid-neighbor cell pairs.

    The slope is the max of |delta phi| / (center distance) over pairs of
    axis-adjacent cells (with wrap on tori); exact for tabulated
    observables at their native grid, and a from-below estimate for
    smooth observables.
    """
    vals = obs.values(grid.all_centers())
    if vals.ndim == 2:
        if vals.shape[1] != 1:
            raise ValueError("lipschitz norm is defined for scalar observables")
        vals = vals[:, 0]
    n = grid.cells_per_axis
    shape = (n,) * grid.dim
    field = vals.reshape(shape)
    lip = 0.0
    for axis in range(grid.dim):
        if grid.space.kind == "torus":
            diff = np.abs(np.roll(field, -1, axis=axis) - field)
        else:
            sl_hi = [slice(None)] * grid.dim
            sl_lo = [slice(None)] * grid.dim
            sl_hi[axis] = slice(1, None)
            sl_lo[axis] = slice(None, -1)
            diff = np.abs(field[tuple(sl_hi)] - field[tuple(sl_lo)])
        if diff.size:
            lip = max(lip, float(diff.max()) / grid.cell_width)
    return float(np.abs(vals).max()) + lip


@dataclass(frozen=True)
class DecayVerdict:
    exponent: float
    weighted: tuple  # s_n = n^p * theta_hat_n
    peak_index: int
    last_over_peak: float
    verdict: str  # consistent-with-decay | not-decaying | inconclusive


@dataclass(frozen=True)
class DecayFitReport:
    series: CorrelationSeries
    verdicts: tuple  # of DecayVerdict

    def verdict_for(self, p: float) -> str:
        for v in self.verdicts:
            if v.exponent == p:
                return v.verdict
        raise KeyError(f"no verdict for exponent {p}")


def superpoly_test(series: CorrelationSeries, p_list, zero_tol: float = NUMERIC_ZERO) -> DecayFitReport:
    """Classify n^p-weighted normalized correlations for each p.

    Rules, applied to s_n = n^p * theta_n with theta values at or below
    ``zero_tol`` clamped to exact zero:

      * consistent-with-decay when the last value is <= 0.1 x peak
        (an all-zero sequence is consistent by convention);
      * not-decaying when the last value is >= 0.9 x peak and the peak
        sits in the final decade of the horizon list;
      * inconclusive otherwise.

    Raises:
        ValueError: fewer than 8 horizons or a span under two decades.
    """
    ns = np.asarray(series.ns, dtype=np.float64)
    if len(ns) < 8:
        raise ValueError(f"superpoly test needs >= 8 horizon points, got {len(ns)}")
    if ns[-1] / ns[0] < 100.0:
        raise ValueError("horizon list must span at least two decades")
    theta = np.asarray(series.theta_hat, dtype=np.float64)
    theta = np.where(theta <= zero_tol, 0.0, theta)
    verdicts = []
    for p in p_list:
        s = ns ** float(p) * theta
        peak_idx = int(np.argmax(s))
        peak = float(s[peak_idx])
        last = float(s[-1])
        if peak == 0.0 or last <= 0.1 * peak:
            verdict = "consistent-with-decay"
        elif last >= 0.9 * peak and ns[peak_idx] >= ns[-1] / 10.0:
            verdict = "not-decaying"
        else:
            verdict = "inconclusive"
        verdicts.append(
            DecayVerdict(
                exponent=float(p),
                weighted=tuple(float(v) for v in s),
                peak_index=peak_idx,
                last_over_peak=(last / peak) if peak > 0 else 0.0,
                verdict=verdict,
            )
        )
    return DecayFitReport(series, tuple(verdicts))


@dataclass(frozen=True)
class LocalDimensionEstimate:
    """Least-squares slope of log mass against log radius."""

    y: tuple
    radii: tuple
    masses: tuple
    slope: float
    residual: float  # RMS of the log-log fit residuals
    scheme: str
    excluded_radii: tuple = ()


def _ball_mass_exact(space: Space, weights, grid: GridSpec | None, y: np.ndarray, r: float) -> float:
    """Exact measure of the L-infinity ball B(y, r).

    For the uniform continuous measure the per-axis covered length is
    min(2r, extent) on the torus and the clipped overlap on a box.  For
    cell weights the mass is the overlap-weighted sum over cells, which
    reduces to the same expression when the weights are uniform.
    """
    if grid is None:
        if space.kind == "torus":
            covered = min(2.0 * r, 1.0)
            return covered ** space.dim
        lo = np.maximum(y - r, -space.half_width)
        hi = np.minimum(y + r, space.half_width)
        side = np.clip(hi - lo, 0.0, None)
        return float(np.prod(side / space.extent))

    # Per-axis overlap of [y_a - r, y_a + r] with each cell, as a fraction
    # of the cell width; the d-dimensional overlap is the product.
    n = grid.cells_per_axis
    width = grid.cell_width
    axis_fracs = []
    for a in range(grid.dim):
        lo_edge = grid.space.origin + width * np.arange(n)
        hi_edge = lo_edge + width
        ya = float(y[a])
        if space.kind == "torus":
            frac = np.zeros(n)
            for shift in (-1.0, 0.0, 1.0):
                lo = np.maximum(lo_edge + shift, ya - r)
                hi = np.minimum(hi_edge + shift, ya + r)
                frac += np.clip(hi - lo, 0.0, None)
            frac = np.minimum(frac / width, 1.0)
        else:
            lo = np.maximum(lo_edge, ya - r)
            hi = np.minimum(hi_edge, ya + r)
            frac = np.clip(hi - lo, 0.0, None) / width
        axis_fracs.append(frac)
    overlap = axis_fracs[0]
    for frac in axis_fracs[1:]:
        overlap = np.multiply.outer(overlap, frac)
    return float(np.sum(weights.reshape(overlap.shape) * overlap))


def local_dimension(
    measure,
    y,
    r_min: float,
    r_max: float,
    samples: int = 0,
    seed: int = 0,
    weights: np.ndarray | None = None,
) -> LocalDimensionEstimate:
    """Slope of log mu(B(y, r)) versus log r over dyadic radii.

    ``measure`` is a MeasureModel; for grid-backed models (or when an
    explicit ``weights`` array over cells is given) ball masses are exact
    overlap-weighted cell sums, otherwise exact uniform-volume masses.
    Passing ``samples`` > 0 switches to Monte Carlo mass estimates.
    Radii with zero mass are excluded from the fit and reported.

    Raises:
        ValueError: bad radius range or fewer than 5 dyadic radii in it.
    """
    space = measure.space
    if not (0.0 < r_min < r_max <= space.diameter):
        raise ValueError("need 0 < r_min < r_max <= space diameter")
    y = space.wrap(np.asarray(y, dtype=np.float64))

    k_lo = int(np.ceil(np.log2(r_min)))
    k_hi = int(np.floor(np.log2(r_max)))
    radii = [2.0 ** k for k in range(k_hi, k_lo - 1, -1)]
    if len(radii) < 5:
        raise ValueError("need at least 5 dyadic radii between r_min and r_max")

    grid = measure.grid
    if weights is not None:
        if grid is None:
            raise ValueError("cell weights need a grid-backed measure")
        weights = np.asarray(weights, dtype=np.float64)
        total = weights.sum()
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        weights = weights / total
    elif grid is not None:
        weights = np.full(grid.cell_count, 1.0 / grid.cell_count)

    masses = []
    scheme = "exact-cells" if grid is not None else "exact-volume"
    if samples > 0:
        scheme = "monte-carlo"
        pts = measure.sample(samples, seed)
        dists = space.distance(pts, y[None, :])
        for r in radii:
            masses.append(float(np.count_nonzero(dists < r)) / samples)
    else:
        for r in radii:
            masses.append(_ball_mass_exact(space, weights, grid, y, r))

    radii_arr = np.asarray(radii)
    mass_arr = np.asarray(masses)
    keep = mass_arr > 0
    excluded = tuple(float(r) for r in radii_arr[~keep])
    if keep.sum() < 2:
        raise ValueError("not enough non-empty radii to fit a slope")
    lr = np.log(radii_arr[keep])
    lm = np.log(mass_arr[keep])
    slope, intercept = np.polyfit(lr, lm, 1)
    resid = lm - (slope * lr + intercept)
    return LocalDimensionEstimate(
        y=tuple(float(v) for v in y),
        radii=tuple(float(r) for r in radii),
        masses=tuple(float(v) for v in masses),
        slope=float(slope),
        residual=float(np.sqrt(np.mean(resid ** 2))),
        scheme=scheme,
        excluded_radii=excluded,
    )
