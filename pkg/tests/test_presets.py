import math

import numpy as np
import pytest

from levykit import presets
from levykit.errors import DegenerateModelError, PreconditionError, ValidationError
from levykit.exponent import require_lower_bound
from levykit.levy_model import LevyModel, SpectralMeasure, tail_mass_psi, validate_model


@pytest.mark.parametrize("name", sorted(presets.REFERENCE))
def test_reference_presets_validate(name):
    m = presets.REFERENCE[name]()
    rep = validate_model(m)
    assert rep.passed, [c for c in rep.checks if not c.passed]
    assert require_lower_bound(m) > 0
    assert m.name == name


def test_one_sided_stable_drift():
    # α > 1: b = -∫_{|y|>1} y ν(dy) = -1/(α-1) for a unit atom at +1
    m = presets.make_stable(1, 1.5, SpectralMeasure.atomic([[1.0]], [1.0]))
    assert m.drift[0] == pytest.approx(-2.0)
    # α < 1: b = ∫_{|y|<1} y ν(dy) = 1/(1-α)
    m = presets.make_stable(1, 0.5, SpectralMeasure.atomic([[1.0]], [1.0]))
    assert m.drift[0] == pytest.approx(2.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_symmetric_stable_has_no_drift(alpha):
    assert np.all(presets.make_stable(2, alpha).drift == 0.0)


def test_stable_alpha_one_needs_centering():
    with pytest.raises(PreconditionError):
        presets.make_stable(1, 1.0, SpectralMeasure.atomic([[1.0]], [1.0]))
    assert presets.cauchy_1d().drift[0] == 0.0


def test_stable_rejects_degenerate():
    with pytest.raises(DegenerateModelError):
        presets.make_stable(2, 1.5, SpectralMeasure.atomic([[1.0, 0.0]], [1.0]))


def test_layered_profile_between_regimes():
    m = presets.layered_1d()
    s = np.logspace(-4, 4, 200)
    q = np.exp(m.profile.q.log(s))
    two_piece = np.where(s < 1, 1.0, s ** (m.alpha - 3.0))
    ratio = q / two_piece
    assert ratio.max() / ratio.min() <= 2 ** 2.5 + 1e-9
    with pytest.raises(ValidationError):
        presets.make_layered(1, 0.5, 2.0)


def test_tempered_profile():
    m = presets.tempered_1d()
    assert float(np.exp(m.profile.phi.log(np.array([2.0])))[0]) == pytest.approx(math.exp(-2.0))
    assert m.beta == 2.0
    with pytest.raises(ValidationError):
        presets.make_tempered(1, 1.0, 0.0)


def test_tempered_psi_decays_exponentially():
    m = presets.tempered_1d()
    r = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    psi = np.array([float(tail_mass_psi(m, v)) for v in r])
    ratios = psi[1:] / psi[:-1]
    assert np.all(np.isfinite(psi)) and np.all(np.diff(ratios) < 0) and ratios[-1] < 1e-2


def test_gamma_follows_spectral_measure():
    assert presets.make_stable(2, 1.2).gamma == 1.0
    assert presets.make_stable(2, 1.2, SpectralMeasure.uniform(2, 32)).gamma == 2.0
    assert presets.make_relativistic(3, 1.0, resolution=16).gamma == 3.0


@pytest.mark.parametrize("d,alpha", [(1, 1.0), (2, 0.5), (3, 1.5)])
def test_relativistic_kernel_frozen(frozen, d, alpha):
    for s, want in frozen["relativistic_kernel"][f"{d},{alpha}"].items():
        got = presets.relativistic_kernel(d, alpha, float(s))
        assert got == pytest.approx(want, rel=1e-10)
        assert presets.relativistic_kernel_bessel(d, alpha, float(s)) == pytest.approx(want, rel=1e-10)


def test_relativistic_limit_and_window():
    for d in (1, 2, 3):
        for alpha in (0.5, 1.0, 1.5):
            lim = presets.relativistic_limit(d, alpha)
            assert presets.relativistic_kernel(d, alpha, 1e-3) == pytest.approx(lim, rel=1e-4)
            ratio = presets.relativistic_ratio_table(d, alpha)[:, 3]
            assert ratio.max() <= 32 and ratio.min() >= 1 / 32
    with pytest.raises(PreconditionError):
        presets.relativistic_kernel(1, 1.0, 0.0)


@pytest.mark.parametrize("d,alpha,sign", [(1, 0.5, 1), (1, 1.0, 1), (2, 1.0, 0), (3, 1.5, -1), (3, 1.0, -1)])
def test_relativistic_ratio_monotone(tmp_path, d, alpha, sign):
    # K/asymptotic behaves like s^{(d+α-3)/2}-corrections: its direction follows the sign of 3 - d - α
    path = tmp_path / "ratio.csv"
    table = presets.relativistic_ratio_csv(path, d, alpha)
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back, table)
    step = np.diff(table[:, 3])
    if sign == 0:
        assert np.max(np.abs(step)) <= 1e-9 * table[0, 3]
    else:
        assert np.all(sign * step > 0)


def test_relativistic_sandwich():
    c_up, c_lo, rows = presets.relativistic_sandwich(presets.relativistic_1d())
    assert 0 < c_lo <= c_up < math.inf
    assert all(r["reliable"] >= 20 for r in rows)
    with pytest.raises(PreconditionError):
        presets.relativistic_sandwich(presets.relativistic_1d(), t_grid=(2.0,))


def test_relativistic_profile_starts_at_one():
    m = presets.relativistic_1d()
    assert float(np.exp(m.profile.phi.log(np.array([1e-9])))[0]) == pytest.approx(1.0, abs=1e-6)


def test_build_by_family_and_reference():
    m = presets.build("tempered", d=2, alpha=0.8, mu="axes", **{"lambda": 2.0})
    assert m.d == 2 and m.alpha == 0.8 and m.gamma == 1.0
    assert presets.build("stable", d=1, alpha=1.5, mu="skewed", skew=0.9).mu.weights[0] == pytest.approx(0.9)
    assert presets.build("stable_1d", alpha=1.2).alpha == 1.2
    assert presets.build("layered", m=4).profile.q.params["a"] == pytest.approx(3.0)
    with pytest.raises(ValidationError):
        presets.build("stable", colour="red")
    with pytest.raises(ValidationError):
        presets.build("nope")


def test_build_roundtrip_hash():
    a = presets.build("relativistic", d=2, alpha=1.0, resolution=16)
    b = LevyModel.from_dict(a.to_dict())
    assert a.model_hash == b.model_hash
