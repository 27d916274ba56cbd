import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_epidemic import ActiveWindow, Grid, Kernel, active_quadrature, boundary_flux, nonlocal_convolve
from nonlocal_epidemic.errors import InvalidParameter, NegativeField, WindowOutOfGrid
from nonlocal_epidemic.quadgrid import Side, trapezoid_weights

K = Kernel("compact_quadratic", 1.0)


def loop_weights(grid, g, h):
    """Straight-line trapezoid with the field pinned to 0 at g and h."""
    wts = {}
    inside = [i for i, xi in enumerate(grid.x) if g < xi < h]
    for a, b in zip(inside, inside[1:]):
        wts[a] = wts.get(a, 0) + grid.dx / 2
        wts[b] = wts.get(b, 0) + grid.dx / 2
    if inside:
        wts[inside[0]] = wts.get(inside[0], 0) + (grid.x[inside[0]] - g) / 2
        wts[inside[-1]] = wts.get(inside[-1], 0) + (h - grid.x[inside[-1]]) / 2
    return wts


def test_grid_layout():
    grid = Grid(2.0, 5)
    np.testing.assert_array_equal(grid.x, [-2, -1, 0, 1, 2])
    assert grid.dx == 1.0
    assert grid.x[grid.center] == 0.0


@pytest.mark.parametrize("n", [4, 1, 2])
def test_grid_needs_odd_n(n):
    with pytest.raises(InvalidParameter):
        Grid(1.0, n)


@pytest.mark.parametrize("g, h", [(-1.0, 1.0), (-0.37, 2.21), (0.01, 0.02), (-3.3, -3.2001)])
def test_weights_match_loop_oracle(g, h):
    grid = Grid(5.0, 101)
    lo, hi, wts = trapezoid_weights(ActiveWindow(g, h), grid)
    ref = loop_weights(grid, g, h)
    if not ref:
        assert lo > hi
        return
    assert (lo, hi) == (min(ref), max(ref))
    np.testing.assert_allclose(wts, [ref[i] for i in range(lo, hi + 1)], atol=1e-15)


def test_quadrature_of_zero():
    grid = Grid(5.0, 101)
    assert active_quadrature(np.zeros(grid.n), ActiveWindow(-1, 1), grid) == 0.0


def test_quadrature_of_one_approaches_window_length():
    errs = []
    for n in (201, 401, 801, 1601):
        grid = Grid(5.0, n)
        errs.append(abs(active_quadrature(np.ones(n), ActiveWindow(-0.993, 1.007), grid) - 2.0))
    assert errs[-1] < 5e-3
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_quadrature_of_odd_function_vanishes():
    grid = Grid(5.0, 1001)
    assert abs(active_quadrature(grid.x, ActiveWindow(-1, 1), grid)) < 1e-12


def test_window_out_of_grid():
    grid = Grid(5.0, 101)
    with pytest.raises(WindowOutOfGrid):
        active_quadrature(np.ones(grid.n), ActiveWindow(-6, 1), grid)
    with pytest.raises(WindowOutOfGrid):
        nonlocal_convolve(np.ones(grid.n), ActiveWindow(0, 5.5), K, grid)


def test_convolve_zero_field():
    grid = Grid(5.0, 101)
    assert not nonlocal_convolve(np.zeros(grid.n), ActiveWindow(-1, 1), K, grid).any()


@pytest.mark.parametrize("family", ["gaussian", "laplace", "compact_quadratic"])
def test_convolve_unit_mass_in_wide_window(family):
    grid = Grid(30.0, 6001)
    out = nonlocal_convolve(np.ones(grid.n), ActiveWindow(-25, 25), Kernel(family, 1.0), grid)
    assert out[grid.center] == pytest.approx(1.0, abs=1e-6)


def test_convolve_half_window_converges_to_half():
    # f = 1 on [0, 2]; at x = 0 only the right half of the kernel is covered.
    # The unit-mass symmetric stencil puts exactly half its mass on each side,
    # so the value is 1/2 at every resolution, not just in the limit.
    for n in (401, 801, 1601, 3201):
        grid = Grid(4.0, n)
        out = nonlocal_convolve(np.ones(n), ActiveWindow(-1e-13, 2.0), K, grid)
        assert abs(out[grid.center] - 0.5) < 1e-12


def test_convolve_second_order_on_smooth_profile():
    # int_{-1}^{1} (3/4)(1 - y^2)^2 dy = 4/5
    errs = []
    for n in (201, 401, 801, 1601):
        grid = Grid(4.0, n)
        f = np.clip(1 - grid.x**2, 0, None)
        out = nonlocal_convolve(f, ActiveWindow(-1, 1), K, grid)
        errs.append(abs(out[grid.center] - 0.8))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert min(ratios) >= 3.5, (errs, ratios)


def test_convolve_matches_loop_oracle():
    grid = Grid(3.0, 121)
    g, h = -0.83, 1.37
    f = np.where((grid.x > g) & (grid.x < h), np.cos(grid.x), 0.0)
    wts = loop_weights(grid, g, h)
    _, jk = grid.kernel_offsets(K)
    scale = jk[len(jk) // 2] / K.density(0.0)   # stencil normalization factor
    out = nonlocal_convolve(f, ActiveWindow(g, h), K, grid)
    for i in wts:
        ref = sum(wj * K.density(grid.x[i] - grid.x[j]) * f[j] for j, wj in wts.items()) * scale
        assert out[i] == pytest.approx(ref, abs=1e-14)
    outside = [i for i in range(grid.n) if i not in wts]
    assert not out[outside].any()


def test_flux_of_zero():
    grid = Grid(5.0, 101)
    assert boundary_flux(np.zeros(grid.n), ActiveWindow(-1, 1), K, grid, "right") == 0.0


def test_flux_of_one_matches_closed_form():
    # int_{-1}^{1} T(1 - x) dx = int_0^2 T(s) ds = int_0^1 (1/2 - 3s/4 + s^3/4) ds = 3/16
    errs = []
    for n in (401, 801, 1601):
        grid = Grid(4.0, n)
        val = boundary_flux(np.ones(n), ActiveWindow(-1 - 1e-13, 1 + 1e-13), K, grid, Side.RIGHT)
        errs.append(abs(val - 3 / 16))
    assert errs[-1] < 1e-5
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_flux_symmetric_sides():
    grid = Grid(5.0, 1001)
    f = np.clip(1 - (grid.x / 1.3) ** 2, 0, None)
    w = ActiveWindow(-1.3, 1.3)
    left = boundary_flux(f, w, K, grid, Side.LEFT)
    right = boundary_flux(f, w, K, grid, Side.RIGHT)
    assert abs(left - right) < 1e-12


def test_flux_rejects_negative_field():
    grid = Grid(5.0, 101)
    f = np.ones(grid.n)
    f[grid.center] = -1e-6
    with pytest.raises(NegativeField):
        boundary_flux(f, ActiveWindow(-1, 1), K, grid, "left")


windows = st.tuples(st.floats(-8, 7.5), st.floats(0.05, 8)).map(lambda t: (t[0], min(t[0] + t[1], 8.0)))
families = st.sampled_from(["gaussian", "laplace", "compact_quadratic"])


def random_field(grid, g, h, seed):
    rng = np.random.default_rng(seed)
    inside = (grid.x > g) & (grid.x < h)
    return np.where(inside, rng.uniform(0, 1, grid.n), 0.0)


@given(win=windows, family=families, seed=st.integers(0, 2**16))
@settings(max_examples=60, deadline=None)
def test_convolution_preserves_positivity_and_contracts_mass(win, family, seed):
    grid = Grid(10.0, 801)
    g, h = win
    if not g < h:
        return
    w, k = ActiveWindow(g, h), Kernel(family, 0.7)
    f = random_field(grid, g, h, seed)
    out = nonlocal_convolve(f, w, k, grid)
    assert out.min() >= 0
    assert active_quadrature(out, w, grid) <= active_quadrature(f, w, grid) + 1e-10


@given(win=windows, family=families, seed=st.integers(0, 2**16))
@settings(max_examples=60, deadline=None)
def test_flux_mass_identity(win, family, seed):
    # kernel mass splits into inside / left tail / right tail; the partial end
    # cells make the discrete split first order in dx
    grid = Grid(10.0, 801)
    g, h = win
    if not g < h:
        return
    w, k = ActiveWindow(g, h), Kernel(family, 0.7)
    f = random_field(grid, g, h, seed)
    total = active_quadrature(f, w, grid)
    split = (boundary_flux(f, w, k, grid, "left") + boundary_flux(f, w, k, grid, "right")
             + active_quadrature(nonlocal_convolve(f, w, k, grid), w, grid))
    assert abs(split - total) <= 2 * grid.dx * float(k.density(0.0)) * total + 1e-12
