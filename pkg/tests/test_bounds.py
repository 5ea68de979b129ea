import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from levykit import presets
from levykit.bounds import (
    BoundParams,
    BoundedSupport,
    convolution_ball_bound,
    convolution_oracle,
    convolution_power_bound,
    decay_g,
    fit_constants,
    g_decay_check,
    h_scale,
    pbar_ball_bound,
    pi_density_bound,
    pi_tail_bound,
    pi_tail_check,
    tail_integral_lemma_check,
    theorem1_bound,
    theorem1_shape,
    truncated_density_bound,
)
from levykit.errors import PreconditionError
from levykit.levy_model import LevyModel, SpectralMeasure, tail_mass_psi
from levykit.simulate import sample_large_jumps


def test_h_scale_examples():
    assert h_scale(1.0, 0.5, 2.0) == 1.0
    assert h_scale(4.0, 1.0, 2.0) == pytest.approx(2.0)
    assert h_scale(0.25, 1.0, 2.0) == pytest.approx(0.25)
    assert h_scale(8.0, 1.5, 1.5) == pytest.approx(4.0)
    with pytest.raises(PreconditionError):
        h_scale(0.0, 1.0, 2.0)


def test_decay_g_values():
    assert decay_g(0.0) == 1.0
    assert decay_g(2.0, 0.5, 1.0) == pytest.approx(math.exp(-math.log(3.0)))


def test_stable_shape_reduces_to_power_law():
    m = presets.stable_1d()
    a = m.alpha
    for t in (0.1, 1.0):
        for x in (0.05, 0.5, 3.0, 40.0):
            want = t ** (-1 / a) * min(1.0, t ** (1 + 1 / a) * x ** (-1 - a))
            assert theorem1_shape(m, t, x) == pytest.approx(want, rel=1e-12)


def test_layered_shape_by_hand():
    m = presets.layered_1d()
    # t^{-1/α} · t^{1+1/α} |x|^{-1-α} (1+|x|)^{α-m} at t = 1/2, |x| = 2
    want = 0.5 ** -2 * 0.5 ** 3 * 2.0 ** -1.5 * 3.0 ** -2.5
    assert theorem1_shape(m, 0.5, 2.0) == pytest.approx(want, rel=1e-12)


def test_large_time_adds_decay_term():
    m = presets.tempered_1d()
    t, x = 9.0, 12.0
    s = x / 3.0
    core = min(1.0, t ** 1.5 * x ** -2 * math.exp(-x / 4))
    assert theorem1_shape(m, t, x) == pytest.approx(t ** -0.5 * (core + decay_g(s)), rel=1e-12)


def test_tempered_small_time_form():
    # φ(|x|/4) = e^{-λ|x|/4}: the small-time bound carries e^{-c|x|} with c = λ/4
    m = presets.tempered_1d(lam=2.0)
    for t, x in ((0.1, 0.5), (0.5, 3.0), (1.0, 10.0)):
        want = t ** -1 * min(1.0, t ** 2 * x ** -2 * math.exp(-0.5 * x))
        assert theorem1_shape(m, t, x) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("name", ["stable_1d", "layered_1d", "tempered_1d"])
@pytest.mark.parametrize("t", [0.1, 4.0])
def test_shape_continuous_across_branch_switch(name, t):
    m = presets.REFERENCE[name]()
    x = np.logspace(-3, math.log10(20.0), 40001)
    v = theorem1_shape(m, t, x)
    # on a fine log grid a continuous decreasing shape moves by small relative steps
    assert np.max(np.abs(np.diff(np.log(v)))) < 0.01


@pytest.mark.parametrize("t", [0.05, 1.0, 25.0])
def test_shape_at_origin(t):
    m = presets.tempered_1d()
    assert theorem1_shape(m, t, 0.0) == pytest.approx(float(h_scale(t, 1.0, 2.0)) ** -1)


@given(st.floats(0.01, 50.0), st.floats(1e-9, 100.0), st.floats(1e-9, 100.0))
def test_shape_nonincreasing(t, x, y):
    # x = 0 carries the fixed on-diagonal value h^{-d}, which for t > 1 sits
    # below the limit 2 h^{-d}; monotonicity is a statement about |x| > 0
    m = presets.layered_1d()
    lo, hi = sorted((x, y))
    assert theorem1_shape(m, t, hi) <= theorem1_shape(m, t, lo) * (1 + 1e-12)


def test_bound_uses_the_right_constant():
    m = presets.tempered_1d()
    p = BoundParams(c_main=3.0, c1=7.0)
    assert theorem1_bound(m, 0.5, 1.0, p) == pytest.approx(3.0 * theorem1_shape(m, 0.5, 1.0))
    assert theorem1_bound(m, 5.0, 1.0, p) == pytest.approx(7.0 * theorem1_shape(m, 5.0, 1.0))
    m2 = presets.stable_2d()
    v = theorem1_bound(m2, 0.5, np.array([[3.0, 4.0]]))
    assert v[0] == pytest.approx(theorem1_shape(m2, 0.5, 5.0))


def test_fit_on_degenerate_model_fails():
    flat = LevyModel(alpha=1.5, mu=SpectralMeasure.atomic([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0]))
    params, rep = fit_constants(flat)
    assert not rep.passed and math.isinf(params.c_main)
    assert "span" in rep.notes[0]


# bounded-support compound Poisson ------------------------------------------

SUPPORT = BoundedSupport(np.array([-2.0, -0.5, 0.5, 1.5]), np.array([0.3, 1.0, 2.0, 0.7]))


def test_bounded_support_summaries():
    assert SUPPORT.radius == 2.0
    assert SUPPORT.xi0 == pytest.approx(abs(-2.0 * 0.3 + 1.5 * 0.7))
    assert SUPPORT.M == pytest.approx(4 * 0.3 + 0.25 + 0.5 + 2.25 * 0.7)
    assert SUPPORT.compensator == pytest.approx(-0.5 + 1.0)


def test_pi_tail_bound_value_and_precondition():
    r, M, xi0 = 2.0, 3.0, 0.5
    a_min = 2 * (xi0 + M / math.e)
    with pytest.raises(PreconditionError):
        pi_tail_bound(0.99 * a_min, r, M, xi0)
    a = 10.0
    assert pi_tail_bound(a, r, M, xi0) == pytest.approx(2 * math.exp(-(a / 6) * math.log(a / 6)))
    vals = pi_tail_bound(np.linspace(a_min, 50, 40), r, M, xi0)
    assert np.all(np.diff(vals) < 0)


def test_pi_tail_monte_carlo():
    rep = pi_tail_check(SUPPORT, n=200_000, seed=3)
    assert rep["violations"] == 0
    assert np.all(rep["a"] >= 2 * (rep["xi0"] + rep["M"] / math.e) - 1e-12)


def test_pi_density_bound_scaling():
    kw = dict(r=1.0, M=1.0, xi0=0.0, m0=1.0)
    x = 50.0
    for d in (1, 2, 3):
        a = pi_density_bound(x, m1=1.0, d=d, **kw)
        b = pi_density_bound(x, m1=2.0, d=d, **kw)
        assert b / a == pytest.approx(2 ** (d / (d + 1)))
    with pytest.raises(PreconditionError):
        pi_density_bound(0.1, m1=1.0, **kw)
    far = pi_density_bound(np.array([20.0, 40.0, 80.0]), m1=1.0, **kw)
    # faster than any power: the log-ratio per doubling keeps growing
    steps = -np.diff(np.log(far))
    assert steps[1] > steps[0] > 0


# large jumps -----------------------------------------------------------------

def test_convolution_power_bound_structure():
    m = presets.stable_2d()
    psi = float(tail_mass_psi(m, 1.0))
    b1 = convolution_power_bound(m, 1.0, 1, 3.0, 2.0, c=2.0)
    b2 = convolution_power_bound(m, 1.0, 2, 3.0, 2.0, c=2.0)
    assert b2 / b1 == pytest.approx(2.0 * psi)
    wide = convolution_power_bound(m, 1.0, 1, 3.0, 4.0, c=2.0)
    assert wide / b1 == pytest.approx(2.0 ** m.gamma)
    with pytest.raises(PreconditionError):
        convolution_power_bound(m, 1.0, 1, 0.0, 1.0)


def test_ball_bound_preconditions():
    m = presets.tempered_1d()
    with pytest.raises(PreconditionError):
        convolution_ball_bound(m, 1.0, 2, [4.0], 2.5)
    with pytest.raises(PreconditionError):
        pbar_ball_bound(m, 1.0, 1.0, [4.0], 0.0)
    assert convolution_ball_bound(m, 1.0, 2, [4.0], 1.0) > 0


def test_pbar_ball_bound_is_linear_for_small_t():
    m = presets.tempered_1d()
    a = pbar_ball_bound(m, 1.0, 1e-6, [5.0], 1.0)
    b = pbar_ball_bound(m, 1.0, 2e-6, [5.0], 1.0)
    assert b / a == pytest.approx(2.0, rel=1e-5)


def test_convolution_oracle_first_power_matches_quadrature():
    m = presets.tempered_1d()
    orc = convolution_oracle(m, r=1.0, n_max=1, cells=2 ** 14)
    for lo, hi, got in zip(orc.radii[:-1], orc.radii[1:], orc.masses[0]):
        # both half-lines carry weight 1/2
        want, _ = integrate.quad(lambda s: s ** -2 * math.exp(-s), lo, hi, epsrel=1e-12)
        assert got == pytest.approx(want, rel=1e-6)
    assert abs(orc.lost[0]) < 1e-12


def test_pbar_ball_against_monte_carlo():
    m = presets.tempered_1d()
    t, r = 1.0, 1.0
    batch = sample_large_jumps(m, r, t, 400_000, seed=11)
    x = batch.samples[:, 0]
    ratios = []
    for centre in (3.0, 5.0, 8.0):
        rho = 0.5
        p = np.mean(np.abs(x - centre) < rho)
        ratios.append(p / pbar_ball_bound(m, r, t, [centre], rho))
    # a single constant of moderate size covers every ball
    assert max(ratios) < 10.0


# truncated density and helpers ---------------------------------------------

def test_truncated_bound_at_origin():
    m = presets.stable_1d()
    assert truncated_density_bound(m, 4.0, 0.0, c1=2.0) == pytest.approx(2.0 * 4.0 ** (-1 / 1.5))


def test_g_decay_check():
    mono, const = g_decay_check(gamma=2.0)
    assert mono and math.isfinite(const)


def test_tail_integral_lemma_power():
    f = lambda s: (1 + s) ** -4
    rep = tail_integral_lemma_check(f, a=2.0, v=0.0, r0=0.5, c1=1 / 3, r_grid=np.logspace(-1, 3, 20))
    assert rep["status"] == "checked" and rep["pass"] is True
    assert all(row["r"] >= 0.5 for row in rep["rows"])


def test_tail_integral_lemma_layered_kernel():
    a_, m_ = 0.5, 3.0
    f = lambda s: s ** (-1 - a_) * (1 + s) ** (a_ - m_)
    rep = tail_integral_lemma_check(f, a=2.0, v=2 - a_, r0=0.1, c1=1 / (2 - a_),
                                    r_grid=np.logspace(-1, 2, 12))
    assert rep["pass"] is True


def test_tail_integral_lemma_zero_and_bad_hypothesis():
    assert tail_integral_lemma_check(lambda s: 0.0, 2.0, 1.0, 0.1, 1.0, [0.5, 5.0])["pass"] is True
    rep = tail_integral_lemma_check(lambda s: (1 + s) ** -4, 2.0, 0.0, 0.5, 1e-6, [1.0, 10.0])
    assert rep["pass"] is None
    with pytest.raises(PreconditionError):
        tail_integral_lemma_check(lambda s: 0.0, 1.0, 1.0, 0.1, 1.0, [1.0])
