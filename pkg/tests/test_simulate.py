import csv
import math

import numpy as np
import pytest
from scipy import stats

from levykit import _config, presets
from levykit.density import invert
from levykit.errors import AcceptanceRateError, ValidationError
from levykit.levy_model import (
    LevyModel,
    ProfileFunction,
    RadialProfile,
    SpectralMeasure,
    large_jump_mass,
    truncation_moments,
)
from levykit.simulate import SimConfig, empirical_density, sample_increment, sample_large_jumps


def fft_bins(model, t, lo_q=5e-4, hi_q=1 - 5e-4, bins=40):
    """Bin edges between two quantiles of the lattice density and the exact bin masses."""
    g = invert(model, t, tol=1e-10)
    ax = g.axis() + 0.5 * g.dx
    cdf = np.cumsum(g.values) * g.dx
    lo, hi = np.interp([lo_q, hi_q], cdf, ax)
    edges = np.linspace(lo, hi, bins + 1)
    return edges, np.diff(np.interp(edges, ax, cdf))


def l1(x, edges, probs):
    counts, _ = np.histogram(x, edges)
    return float(np.abs(counts / len(x) - probs).sum())


def test_same_seed_same_batch():
    m = presets.tempered_1d()
    cfg = SimConfig(n=1000, seed=7)
    a = sample_increment(m, 1.0, cfg)
    b = sample_increment(m, 1.0, cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = sample_increment(m, 1.0, SimConfig(n=1000, seed=8))
    assert not np.array_equal(a.samples, c.samples)


def test_thread_count_does_not_change_output():
    m = presets.stable_2d()
    cfg = SimConfig(n=150_000, seed=3)
    try:
        _config.set_threads(1)
        one = sample_increment(m, 0.5, cfg).samples
        _config.set_threads(3)
        three = sample_increment(m, 0.5, cfg).samples
    finally:
        _config.set_threads(None)
    np.testing.assert_array_equal(one, three)


def test_poisson_count_mean():
    m = presets.tempered_1d()
    r, t, n = 0.5, 2.0, 100_000
    batch = sample_large_jumps(m, r, t, n, seed=1)
    rate = t * large_jump_mass(m, r)
    assert batch.large_rate == pytest.approx(rate)
    assert abs(batch.counts.mean() - rate) <= 3 * math.sqrt(rate / n)


def test_one_sided_jumps_are_positive():
    m = presets.make_stable(1, 0.5, SpectralMeasure.atomic([[1.0]], [1.0]))
    batch = sample_large_jumps(m, 1.0, 1.0, 20_000, seed=2)
    hit = batch.counts > 0
    assert hit.any() and np.all(batch.samples[hit, 0] >= 1.0)
    assert np.all(batch.samples[~hit, 0] == 0.0)


def test_symmetric_mean_vanishes():
    m = presets.tempered_1d()
    x = sample_increment(m, 1.0, SimConfig(n=100_000, seed=4)).samples[:, 0]
    assert abs(x.mean()) <= 3 * x.std() / math.sqrt(len(x))


def _var_check(x, target):
    v = x.var()
    se = math.sqrt((np.mean((x - x.mean()) ** 4) - v * v) / len(x))
    return abs(v - target) / se


def test_variance_gaussian_scheme():
    # tempered, unit atoms of weight 1/2: ∫|y|² ν = ∫ e^{-s} ds = 1
    m = presets.tempered_1d()
    t = 0.5
    batch = sample_increment(m, t, SimConfig(n=200_000, seed=5))
    assert batch.small_variance[0, 0] == pytest.approx(t * truncation_moments(m, 0.0, batch.r).second_moment)
    assert _var_check(batch.samples[:, 0], t * 1.0) <= 3


def test_variance_discard_scheme():
    m = presets.tempered_1d()
    t, rho = 1.0, 0.2
    batch = sample_increment(m, t, SimConfig(n=200_000, seed=6, scheme="discard", rho=rho))
    # what survives is t ∫_{|y|≥ρ} |y|² ν = t e^{-ρ}
    assert _var_check(batch.samples[:, 0], t * math.exp(-rho)) <= 3
    assert batch.discarded_second_moment == pytest.approx(t * (1 - math.exp(-rho)), rel=1e-8)
    assert batch.chebyshev_bound(1.0) == pytest.approx(batch.discarded_second_moment)


def test_discard_needs_rho():
    with pytest.raises(ValidationError):
        SimConfig(n=10, seed=0, scheme="discard")
    with pytest.raises(ValidationError):
        SimConfig(n=10, seed=0, scheme="discard", r=0.5, rho=0.5)
    with pytest.raises(ValidationError):
        sample_increment(presets.tempered_1d(), 1.0, SimConfig(n=10, seed=0, scheme="discard", rho=2.0))
    with pytest.raises(ValidationError):
        SimConfig(n=10, seed=0, scheme="exact")
    assert SimConfig(n=10, seed=0, scheme="moment-matched-normal").scheme == "gaussian"


@pytest.mark.parametrize("name,n", [("tempered_1d", 100_000), ("stable_1d", 50_000)])
def test_discard_bias_shrinks_with_rho(name, n):
    m = presets.REFERENCE[name]()
    edges, probs = fft_bins(m, 1.0)
    dist = []
    for frac in (0.5, 0.1, 0.01):
        cfg = SimConfig(n=n, seed=9, scheme="discard", r=1.0, rho=frac)
        dist.append(l1(sample_increment(m, 1.0, cfg).samples[:, 0], edges, probs))
    assert dist[0] > dist[1] > dist[2]


def test_semigroup_two_sample():
    # with a fixed threshold the simulated law is itself a Lévy process
    m = presets.tempered_1d()
    full = sample_increment(m, 1.0, SimConfig(n=100_000, seed=21, r=0.1)).samples[:, 0]
    halves = sum(sample_increment(m, 0.5, SimConfig(n=100_000, seed=s, r=0.1)).samples[:, 0]
                 for s in (22, 23))
    assert stats.ks_2samp(full, halves).pvalue > 0.01


def test_empirical_density_mass():
    x = np.random.default_rng(0).standard_cauchy(5000)
    for bins in (10, 37, 200):
        assert empirical_density(x, bins).mass == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        empirical_density(x, 5)
    h = empirical_density(x, 50, range=(-3, 3))
    assert h.mass == pytest.approx(1.0) and h.edges[0][0] == -3
    two = empirical_density(np.random.default_rng(1).standard_normal((4000, 2)), 20)
    assert two.density.shape == (20, 20) and two.mass == pytest.approx(1.0)


def test_cauchy_histogram_matches_closed_form():
    m = presets.cauchy_1d()
    batch = sample_increment(m, 1.0, SimConfig(n=1_000_000, seed=12, r=0.1))
    edges = np.linspace(-20.0, 20.0, 101)
    hist = empirical_density(batch, edges)
    # the histogram is normalized on [-20, 20]; compare there with the conditional law
    probs = np.diff(np.arctan(edges)) / math.pi
    probs = probs / probs.sum()
    assert float(np.abs(hist.density * hist.widths[0] - probs).sum()) <= 0.01


def test_acceptance_rate_error():
    # acceptance is about α/(r λ) when exp(-λ s) collapses right after r
    steep = LevyModel(alpha=0.1, beta=2.0, mu=SpectralMeasure.atomic([[1.0], [-1.0]], [0.5, 0.5]),
                      profile=RadialProfile(phi=ProfileFunction("exp", rate=1000.0)))
    with pytest.raises(AcceptanceRateError):
        sample_large_jumps(steep, 0.5, 1.0, 10, seed=0)


def test_csv_export(tmp_path):
    batch = sample_increment(presets.stable_2d(), 1.0, SimConfig(n=50, seed=1))
    path = tmp_path / "s.csv"
    batch.to_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["index", "x1", "x2", "jumps"] and len(rows) == 51
    np.testing.assert_allclose([float(v) for v in rows[1][1:3]], batch.samples[0])
    assert batch.summary()["n"] == 50
