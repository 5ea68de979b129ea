import math

import numpy as np
import pytest

from levykit import presets
from levykit.density import (
    DensityGrid,
    GridParams,
    LatticeLadder,
    design_grid,
    direct_density,
    invert,
    on_diagonal_check,
)
from levykit.errors import DegenerateModelError, GridResolutionError, PreconditionError
from levykit.levy_model import SpectralMeasure


def cauchy(t, x):
    return t / (math.pi * (t * t + x * x))


@pytest.fixture(scope="module")
def cauchy_grid():
    return invert(presets.cauchy_1d(), 1.0, tol=1e-10, keep_cf=True)


def test_cauchy_lattice_values(cauchy_grid):
    g = cauchy_grid
    x = g.axis()
    sel = np.abs(x) <= 10
    rel = np.abs(g.values[sel] / cauchy(1.0, x[sel]) - 1)
    assert rel.max() <= 1e-6


def test_cauchy_off_lattice_and_sup(cauchy_grid):
    assert cauchy_grid.at([0.3141]) == pytest.approx(cauchy(1.0, 0.3141), rel=1e-6)
    val, arg = cauchy_grid.sup()
    assert val == pytest.approx(1 / math.pi, rel=1e-9)
    assert abs(arg[0]) < 1e-4


def test_design_grid_cutoff_is_frozen(frozen):
    # Re Φ = π|ξ| for unit atoms at ±1, so the cutoff is log(1e12)/π
    pair = presets.make_stable(1, 1.0, SpectralMeasure.atomic([[1.0], [-1.0]], [1.0, 1.0]))
    p = design_grid(pair, 1.0, tol=1e-12, c_lower=math.pi)
    assert p.xi_max == pytest.approx(frozen["cauchy_pi_xi_cut_1e-12"], rel=1e-12)
    assert p.dx == pytest.approx(math.pi / p.xi_max)


def test_design_grid_monotone():
    m = presets.tempered_1d()
    a = design_grid(m, 1.0, tol=1e-6)
    b = design_grid(m, 1.0, tol=1e-12)
    assert b.xi_max > a.xi_max and b.n >= a.n
    # longer times need fewer frequencies
    assert design_grid(m, 4.0, tol=1e-10).xi_max < design_grid(m, 0.25, tol=1e-10).xi_max


def test_design_grid_rejects_bad_input():
    m = presets.tempered_1d()
    with pytest.raises(PreconditionError):
        design_grid(m, 0.0)
    with pytest.raises(PreconditionError):
        design_grid(m, 1.0, tol=2.0)


@pytest.mark.parametrize("name", ["stable_1d", "layered_1d", "tempered_1d", "relativistic_1d", "stable_2d"])
def test_mass_and_negativity(name):
    m = presets.REFERENCE[name]()
    g = invert(m, 1.0, tol=1e-8)
    assert abs(g.mass - 1) <= 1e-4
    assert g.values.min() >= -1e-6 * g.values.max()


def test_symmetric_density_is_even():
    g = invert(presets.tempered_1d(), 0.5, tol=1e-10)
    v = g.values
    # index N/2 is the origin, so the mirror of index k is N - k
    assert np.max(np.abs(v[1:] - v[1:][::-1])) <= 1e-12 * v.max()


def _scaled_pair(model, t):
    base = design_grid(model, 1.0, tol=1e-10, max_n=2 ** 20 if model.d == 1 else 2 ** 10)
    s = t ** (1.0 / model.alpha)
    p1 = invert(model, 1.0, base)
    pt = invert(model, t, GridParams(base.xi_max / s, base.n, base.dx * s))
    return p1, pt


@pytest.mark.parametrize("t", [0.25, 4.0])
def test_scaling_identity_1d(t):
    m = presets.stable_1d()
    p1, pt = _scaled_pair(m, t)
    sel = p1.values > 1e-8 * p1.values.max()
    pred = t ** (-1 / m.alpha) * p1.values[sel]
    assert np.max(np.abs(pt.values[sel] / pred - 1)) <= 1e-4


def test_scaling_fails_for_non_stable():
    # the tempered law has no scaling property; the same check must notice
    m = presets.tempered_1d()
    p1, pt = _scaled_pair(m, 4.0)
    sel = p1.values > 1e-6 * p1.values.max()
    pred = 4.0 ** (-1 / m.alpha) * p1.values[sel]
    assert np.max(np.abs(pt.values[sel] / pred - 1)) > 1e-2


def test_chapman_kolmogorov():
    m = presets.tempered_1d()
    p = design_grid(m, 1.0, tol=1e-12, max_n=2 ** 16, cover=60.0)
    one = invert(m, 1.0, p)
    two = invert(m, 2.0, p)
    # node i sits at (i - N/2) dx, so index k of the full convolution is node k - N/2
    full = np.convolve(one.values, one.values) * p.dx
    conv = full[p.n // 2: p.n // 2 + p.n]
    assert np.sum(np.abs(conv - two.values)) * p.dx <= 1e-3


def test_refinement_changes_little():
    m = presets.layered_1d()
    p = design_grid(m, 1.0, tol=1e-10, max_n=2 ** 18)
    a = invert(m, 1.0, p)
    fine = invert(m, 1.0, GridParams(p.xi_max, 2 * p.n, p.dx))
    # halving dxi doubles the period; compare on the common nodes
    c = fine.values[p.n // 2: p.n // 2 + p.n]
    assert np.max(np.abs(c - a.values)) <= 1e-6 * a.values.max()


def test_direct_density_agrees():
    m = presets.stable_1d()
    g = invert(m, 1.0, tol=1e-12, keep_cf=True)
    for x in (-2.0, 0.0, 0.7, 3.0):
        assert g.at([x]) == pytest.approx(direct_density(m, 1.0, [x]), rel=1e-7, abs=1e-12)


def test_grid_resolution_error_on_coarse_frequency():
    m = presets.tempered_1d()
    with pytest.raises(GridResolutionError):
        invert(m, 1.0, GridParams(2.0, 256, math.pi / 2.0))


def test_degenerate_model_rejected():
    m = presets.stable_2d()
    bad = m.__class__(alpha=1.5, beta=1.5, mu=SpectralMeasure.atomic([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0]),
                      gamma=1.0, drift=np.zeros(2), name="flat")
    with pytest.raises(DegenerateModelError):
        invert(bad, 1.0)


def test_binary_roundtrip(tmp_path):
    g = invert(presets.tempered_1d(), 1.0, tol=1e-8)
    path = tmp_path / "grid.bin"
    g.to_binary(path)
    back = DensityGrid.from_binary(path)
    assert back.n == g.n and back.dx == g.dx and back.t == g.t
    np.testing.assert_array_equal(back.values, g.values)
    raw = path.read_bytes()
    assert raw[:4] == b"LVKG" and len(raw) == 32 + 8 * g.n


def test_binary_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"nope" + bytes(40))
    with pytest.raises(PreconditionError):
        DensityGrid.from_binary(path)


def test_csv_window_and_clamp():
    g = invert(presets.tempered_1d(), 1.0, tol=1e-8)
    text = g.to_csv(window=2.0)
    rows = [r.split(",") for r in text.strip().splitlines()]
    assert rows[0] == ["x1", "p"]
    xs = np.array([float(r[0]) for r in rows[1:]])
    ps = np.array([float(r[1]) for r in rows[1:]])
    assert np.all(np.abs(xs) <= 2.0 + 1e-12) and np.all(ps >= 0)
    assert len(xs) == 2 * int(2.0 / g.dx + 1e-9) + 1


def test_ladder_far_field_cauchy():
    lad = LatticeLadder(presets.cauchy_1d(), 1.0)
    pts = np.array([[0.5], [20.0], [500.0], [5e3], [2e4]])
    nodes, vals, floors, levels = lad.evaluate(pts)
    assert levels[-1] > levels[0]
    exact = cauchy(1.0, nodes[:, 0])
    ok = vals > floors
    assert ok.all()
    assert np.max(np.abs(vals / exact - 1)) <= 1e-3


def test_on_diagonal_cauchy():
    rep = on_diagonal_check(presets.cauchy_1d(), [0.1, 1.0, 10.0])
    np.testing.assert_allclose(rep.scaled, 1 / math.pi, rtol=1e-8)
    assert rep.passed and rep.ratio - 1 <= 1e-6
