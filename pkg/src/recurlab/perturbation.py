"""Tower-redirect perturbations: nearby permutations with short cycles.

Given any grid permutation tau, ``towerize`` produces a permutation g
with two hard guarantees, asserted on every run:

  * g is a bijection and, for every cell z, g(z) and tau(z) lie in the
    same cover cube (or are equal), so the cell-center displacement
    between g and tau is strictly below the cube diameter delta;
  * every redirected orbit closes into a cycle whose length equals its
    first-return time to the cube where it was closed.

The construction processes the cover cubes sequentially (lexicographic
corner order): for cube U it computes the first-return map R of the
current permutation to U and post-composes with R^{-1} on U.  Each cell
is rewritten at most once overall because the cubes tile the grid and a
rewritten image stays inside its cube.  Short-cycle mass is measured and
reported, never promised for arbitrary inputs.

``extend_to_box`` embeds box dynamics into a larger box by the identity,
reporting the annulus mass it adds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridPermutation, GridSpec, PeriodicityReport, cycle_decomposition
from .spaces import box, make_rng


class CoverError(ValueError):
    """Raised when no admissible cube cover exists at the grid resolution."""


@dataclass(frozen=True)
class CubeCover:
    """Disjoint dyadic cubes tiling the grid, with inner concentric cubes.

    The tiling uses a single dyadic edge (``edge_cells`` per axis), so the
    outer cubes carry full mass.  ``v_edge_cells`` is the edge of the
    concentric inner cube V within each U; V's mass is bookkeeping for
    the construction's provenance and plays no role in the redirect.
    """

    grid: GridSpec
    edge_cells: int
    v_edge_cells: int
    delta: float
    epsilon: float

    def __post_init__(self):
        if not (1 <= self.v_edge_cells <= self.edge_cells):
            raise ValueError("inner cube edge must fit inside the outer cube")

    @property
    def cubes_per_axis(self) -> int:
        return self.grid.cells_per_axis // self.edge_cells

    @property
    def cube_count(self) -> int:
        return self.cubes_per_axis ** self.grid.dim

    @property
    def degenerate(self) -> bool:
        """True when only single-cell cubes fit under delta."""
        return self.edge_cells == 1

    @property
    def outer_mass(self) -> float:
        return 1.0  # the cubes tile the whole grid

    @property
    def inner_mass(self) -> float:
        per_cube = self.v_edge_cells ** self.grid.dim
        return per_cube * self.cube_count / self.grid.cell_count

    def cube_of_cells(self) -> np.ndarray:
        """Flat cube id of every cell, C-order over cube coordinates."""
        mi = self.grid.multi_index(np.arange(self.grid.cell_count))
        cube_mi = mi // self.edge_cells
        n = self.cubes_per_axis
        out = np.zeros(self.grid.cell_count, dtype=np.int64)
        for axis in range(self.grid.dim):
            out = out * n + cube_mi[:, axis]
        return out


def build_cover(grid: GridSpec, delta: float, epsilon: float) -> CubeCover:
    """Deterministic full tiling by the largest dyadic cubes of size <= delta.

    The scale is the largest power-of-two edge s with s * cell_width <=
    delta, so within-cube center displacements stay strictly below delta.
    The inner cube edge is ceil((1-epsilon)^(1/d) * s), clipped to [1, s].
    With delta below 2 * cell_width the cover degenerates to single-cell
    cubes (the tower redirect then has nothing to close); this is allowed
    and flagged rather than rejected so that every requested resolution
    can at least run the hard-guarantee checks.

    Raises:
        CoverError: if delta < cell_width (not even single cells fit).
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    width = grid.cell_width
    if delta < width:
        raise CoverError(
            f"delta {delta:g} below the cell width {width:g}; the minimum "
            f"feasible delta at this resolution is {width:g} "
            f"({2 * width:g} for a non-degenerate tower)"
        )
    edge = 1
    while edge * 2 <= grid.cells_per_axis and (edge * 2) * width <= delta:
        edge *= 2
    v_edge = int(np.ceil((1.0 - epsilon) ** (1.0 / grid.dim) * edge))
    v_edge = min(max(v_edge, 1), edge)
    return CubeCover(grid, edge, v_edge, float(delta), float(epsilon))


@dataclass(frozen=True)
class PerturbationReport:
    """Outcome of ``towerize``: the permutation plus measured guarantees."""

    permutation: GridPermutation
    cover: CubeCover
    max_displacement: float
    periodicity: PeriodicityReport
    redirects_per_cube: tuple
    p_star: int
    p_star_fraction: float

    @property
    def total_redirects(self) -> int:
        return int(sum(self.redirects_per_cube))


def _first_return_map(forward: np.ndarray, cells: np.ndarray, in_cube: np.ndarray):
    """Return points of each cube cell under the permutation.

    All cube cells are chased in lock-step; each round advances exactly
    the orbits that have not yet re-entered the cube, so the total work
    is the sum of the return times.
    """
    ret = forward[cells].copy()
    pending = ~in_cube[ret]
    while pending.any():
        ret[pending] = forward[ret[pending]]
        pending[pending] = ~in_cube[ret[pending]]
    return ret


def towerize(
    tau: GridPermutation, cover: CubeCover, soundness_sample: int = 10_000,
    soundness_seed: int = 0,
) -> PerturbationReport:
    """Close orbits into cycles cube by cube via inverse first-return maps.

    For each cube U in lexicographic order: compute the first-return map
    R of the current permutation g to U, then replace g(z) by
    R^{-1}(g(z)) wherever g(z) lands in U.  The redirected orbit of a
    cube cell u closes with period equal to u's return time; later cubes
    only ever split cycles, never merge or grow them.

    The three hard guarantees (bijectivity, same-cube displacement below
    delta, g = tau wherever tau's image is outside the processed cubes)
    are checked before returning; per-cube redirect counts are reported.

    Raises:
        ValueError: if the cover was built for a different grid.
        AssertionError: if a hard guarantee fails (construction bug).
    """
    grid = tau.grid
    if cover.grid != grid:
        raise ValueError("cover and permutation grids differ")
    n_cells = grid.cell_count
    cube_of = cover.cube_of_cells()
    g = tau.forward.copy()

    redirects = []
    rng = make_rng(soundness_seed)
    for cube in range(cover.cube_count):
        cells = np.nonzero(cube_of == cube)[0]
        in_cube = np.zeros(n_cells, dtype=bool)
        in_cube[cells] = True
        returns = _first_return_map(g, cells, in_cube)
        # R^{-1}: the cube cell whose return point is v, for each v in U.
        r_inv = np.full(n_cells, -1, dtype=np.int64)
        r_inv[returns] = cells
        rewrite = in_cube[g]
        old = g[rewrite]
        g[rewrite] = r_inv[old]
        redirects.append(int(np.count_nonzero(g[rewrite] != old)))

        # Spot-check: freshly closed cycles have period == return time.
        check = cells if cells.size <= soundness_sample else rng.choice(
            cells, size=soundness_sample, replace=False
        )
        times = _return_times(g, check, in_cube)
        if not _cycles_close(g, check, times):
            raise AssertionError("redirected orbit failed to close at its return time")

    perm = GridPermutation(grid, g)

    disp = perm.displacement_cells(tau)
    max_disp = float(disp.max())
    moved = perm.forward != tau.forward
    if np.any(cube_of[perm.forward[moved]] != cube_of[tau.forward[moved]]):
        raise AssertionError("a redirect crossed cube boundaries")
    if max_disp >= cover.delta:
        raise AssertionError("displacement bound violated")

    periodicity = cycle_decomposition(perm)
    lengths = np.array(sorted(periodicity.histogram))
    masses = np.cumsum([periodicity.histogram[int(ln)] for ln in lengths])
    target = (1.0 - cover.epsilon) * periodicity.total_cells
    pos = int(np.searchsorted(masses, target, side="right"))
    pos = min(pos, len(lengths) - 1)
    p_star = int(lengths[pos])
    return PerturbationReport(
        permutation=perm,
        cover=cover,
        max_displacement=max_disp,
        periodicity=periodicity,
        redirects_per_cube=tuple(redirects),
        p_star=p_star,
        p_star_fraction=periodicity.fraction_within(p_star),
    )


def _return_times(forward: np.ndarray, cells: np.ndarray, in_cube: np.ndarray):
    times = np.ones(cells.shape[0], dtype=np.int64)
    z = forward[cells].copy()
    pending = ~in_cube[z]
    while pending.any():
        z[pending] = forward[z[pending]]
        times[pending] += 1
        pending[pending] = ~in_cube[z[pending]]
    return times


def _cycles_close(forward: np.ndarray, cells: np.ndarray, times: np.ndarray) -> bool:
    z = cells.copy()
    open_mask = np.ones(cells.shape[0], dtype=bool)
    for step in range(1, int(times.max()) + 1):
        z[open_mask] = forward[z[open_mask]]
        due = open_mask & (times == step)
        if np.any(z[due] != cells[due]):
            return False
        open_mask &= times != step
    return True


@dataclass(frozen=True)
class BoxExtension:
    """Result of extending box dynamics by the identity on a larger box."""

    permutation: GridPermutation
    inner_half_width: float
    mid_half_width: float
    annulus_mass: float  # volume of C1 minus C
    identity_mass_fraction: float  # fraction of big-box cells fixed by design


def extend_to_box(
    g: GridPermutation, c1_half_width: float, big_half_width: float
) -> BoxExtension:
    """Embed a box permutation into [-L, L]^d, identity outside its box.

    The output grid keeps the cell width of g's grid, so L must be a
    power-of-two multiple of g's half-width and c1 must align to the cell
    lattice.  The output equals g on the cells of C and fixes every cell
    of C1 - C and of the complement of C1; the annulus volume is reported.

    Raises:
        ValueError: on misaligned or non-nested geometry.
    """
    small = g.grid
    if small.space.kind != "box":
        raise ValueError("extension starts from a box-space permutation")
    c = small.space.half_width
    d = small.dim
    width = small.cell_width
    if not (c <= c1_half_width <= big_half_width):
        raise ValueError("need C inside C1 inside the target box")
    ratio = big_half_width / c
    j = int(round(np.log2(ratio)))
    if abs(ratio - 2.0 ** j) > 1e-9 or j < 0:
        raise ValueError("target half-width must be a power-of-two multiple of C's")
    if abs((c1_half_width - c) / width - round((c1_half_width - c) / width)) > 1e-9:
        raise ValueError("C1 must align to the cell lattice")

    big = GridSpec(d, small.m + j, box(d, big_half_width))
    offset_cells = int(round((big_half_width - c) / width))

    small_mi = small.multi_index(np.arange(small.cell_count))
    big_src = big.flat_index(small_mi + offset_cells)
    big_dst = big.flat_index(small.multi_index(g.forward) + offset_cells)

    forward = np.arange(big.cell_count, dtype=np.int64)
    forward[big_src] = big_dst
    perm = GridPermutation(big, forward)

    annulus = (2 * c1_half_width) ** d - (2 * c) ** d
    identity_fraction = 1.0 - small.cell_count / big.cell_count
    return BoxExtension(
        permutation=perm,
        inner_half_width=c,
        mid_half_width=float(c1_half_width),
        annulus_mass=float(annulus),
        identity_mass_fraction=float(identity_fraction),
    )


def restrict_to_box(gp: GridPermutation, inner_half_width: float) -> GridPermutation:
    """Inverse of ``extend_to_box``: the induced permutation on the sub-box.

    Raises:
        ValueError: if the sub-box is misaligned or not invariant.
    """
    big = gp.grid
    if big.space.kind != "box":
        raise ValueError("restriction needs a box-space permutation")
    width = big.cell_width
    ratio = big.space.half_width / inner_half_width
    j = int(round(np.log2(ratio)))
    if abs(ratio - 2.0 ** j) > 1e-9 or j < 0:
        raise ValueError("sub-box half-width must divide the box dyadically")
    small = GridSpec(big.dim, big.m - j, box(big.dim, inner_half_width))
    offset_cells = int(round((big.space.half_width - inner_half_width) / width))
    small_mi = small.multi_index(np.arange(small.cell_count))
    big_src = big.flat_index(small_mi + offset_cells)
    images = gp.forward[big_src]
    img_mi = big.multi_index(images) - offset_cells
    if np.any(img_mi < 0) or np.any(img_mi >= small.cells_per_axis):
        raise ValueError("sub-box is not invariant under the permutation")
    return GridPermutation(small, small.flat_index(img_mi))
