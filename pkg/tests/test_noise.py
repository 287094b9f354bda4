import numpy as np
import pytest

from heatlab import GridSpec, Seed, derive_seed, sample_noise
from heatlab.errors import ConfigurationError, DomainError, GridAlignmentError
from heatlab.noise import BLOCK_ROWS, noise_rect, noise_rows


def test_grid_rejects_unstable_time_step():
    with pytest.raises(ConfigurationError, match="stability"):
        GridSpec(T=1.0, dt=0.25, dx=0.25, x_lo=0.0, x_hi=1.0)


def test_grid_rejects_misaligned_horizon():
    with pytest.raises(ConfigurationError, match="integer number"):
        GridSpec(T=0.05, dt=2.0 ** -11, dx=2.0 ** -5, x_lo=0.0, x_hi=1.0)


def test_grid_rejects_off_lattice_right_edge():
    with pytest.raises(ConfigurationError, match="lattice"):
        GridSpec(T=2.0 ** -4, dt=2.0 ** -9, dx=2.0 ** -4, x_lo=0.0, x_hi=1.03)


def test_grid_needs_an_interior_node():
    with pytest.raises(ConfigurationError, match="interior"):
        GridSpec(T=2.0 ** -4, dt=2.0 ** -9, dx=0.5, x_lo=0.0, x_hi=0.5)


def test_grid_respects_cell_budget():
    with pytest.raises(ConfigurationError, match="max_cells"):
        GridSpec(T=1.0, dt=2.0 ** -9, dx=2.0 ** -4, x_lo=0.0, x_hi=1.0,
                 max_cells=100)


def test_for_window_pads_by_sqrt_horizon():
    T, dx, pad = 2.0 ** -4, 2.0 ** -4, 6.0
    g = GridSpec.for_window(T=T, dx=dx, window=(0.0, 1.0), pad=pad)
    margin = pad * np.sqrt(T)
    assert g.x_lo <= 0.0 - margin + dx * 1e-9
    assert g.x_hi >= 1.0 + margin - dx * 1e-9
    # window endpoints are nodes
    assert g.space_index(0.0) >= 0
    assert g.space_index(1.0) < g.n_x
    assert g.dt == dx * dx / 2.0


def test_index_lookup_rejects_off_node_queries(tiny_grid):
    with pytest.raises(GridAlignmentError):
        tiny_grid.time_index(tiny_grid.dt * 1.5)
    with pytest.raises(GridAlignmentError):
        tiny_grid.space_index(tiny_grid.x_lo + tiny_grid.dx * 0.49)
    with pytest.raises(GridAlignmentError):
        tiny_grid.time_index(tiny_grid.T + tiny_grid.dt)


def test_seed_key_is_injective_over_components_and_replications():
    keys = {tuple(Seed(7, c, r).key()) for c in range(4) for r in range(4)}
    assert len(keys) == 16
    assert derive_seed(7, 2, 3) == Seed(7, 2, 3)


def test_seed_validation():
    with pytest.raises(DomainError):
        Seed(-1, 0, 0)
    with pytest.raises(DomainError):
        Seed(0, 0, 2 ** 32)
    with pytest.raises(DomainError):
        Seed(2 ** 64, 0, 0)


def test_noise_is_reproducible_bitwise(tiny_grid):
    a = sample_noise(tiny_grid, Seed(11, 0, 0)).xi
    b = sample_noise(tiny_grid, Seed(11, 0, 0)).xi
    c = sample_noise(tiny_grid, Seed(11, 0, 1)).xi
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noise_rows_match_full_field_across_block_boundary():
    # tall grid so the row range straddles a counter-block boundary
    g = GridSpec(T=2.0 ** -2, dt=2.0 ** -10, dx=2.0 ** -4, x_lo=0.0, x_hi=1.0)
    assert g.n_steps > BLOCK_ROWS
    s = Seed(5, 1, 2)
    full = sample_noise(g, s).xi
    lo, hi = BLOCK_ROWS - 3, BLOCK_ROWS + 5
    assert np.array_equal(noise_rows(g, s, lo, hi), full[lo:hi])
    assert np.array_equal(noise_rows(g, s, 0, g.n_steps), full)


def test_noise_rect_matches_row_slices(tiny_grid):
    s = Seed(5, 0, 0)
    full = sample_noise(tiny_grid, s).xi
    rect = noise_rect(tiny_grid, s, 4, 9, 10, 20)
    assert np.array_equal(rect, full[4:9, 10:20])


def test_noise_rows_validation(tiny_grid):
    with pytest.raises(DomainError):
        noise_rows(tiny_grid, Seed(0, 0, 0), 5, 5)
    with pytest.raises(DomainError):
        noise_rows(tiny_grid, Seed(0, 0, 0), -1, 3)


def test_noise_moments_standardized(tiny_grid):
    xi = sample_noise(tiny_grid, Seed(42, 0, 0)).xi
    n = xi.size
    assert abs(xi.mean()) < 5.0 / np.sqrt(n)
    assert abs(xi.var() - 1.0) < 5.0 * np.sqrt(2.0 / n)
