"""Ready-made models: stable, layered stable, tempered stable, relativistic."""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from . import _radial
from .errors import DegenerateModelError, PreconditionError, ValidationError
from .exponent import stable_reference_drift
from .levy_model import LevyModel, ProfileFunction, RadialProfile, SpectralMeasure


def _default_mu(d, mu):
    if mu is None:
        return SpectralMeasure.symmetric(d, mass=float(d))
    if mu.dimension != d:
        raise ValidationError(f"spectral measure lives in R^{mu.dimension}, expected R^{d}")
    return mu


def _gamma_of(mu: SpectralMeasure) -> float:
    return float(mu.dimension) if mu.isotropic else 1.0


def _require_nondegenerate(mu):
    if not mu.nondegenerate:
        raise DegenerateModelError("spectral measure support does not span R^d")


def make_stable(d=1, alpha=1.0, mu=None, name=None) -> LevyModel:
    """q ≡ φ ≡ 1, β = α.  The drift is ∫_{|y|<1} y ν(dy) for α < 1, 0 for
    α = 1 and -∫_{|y|>1} y ν(dy) for α > 1, which makes the exponent equal
    the closed stable form."""
    mu = _default_mu(d, mu)
    _require_nondegenerate(mu)
    if alpha == 1.0 and np.any(np.abs(mu.first_moment) > 1e-12 * mu.total_mass):
        raise PreconditionError("alpha = 1 needs a centered spectral measure (∫θ μ(dθ) = 0)")
    return LevyModel(alpha=alpha, beta=alpha, mu=mu, gamma=_gamma_of(mu),
                     drift=stable_reference_drift(mu, alpha), name=name or "stable")


def make_layered(d=1, alpha=0.5, m=3.0, mu=None, name=None) -> LevyModel:
    """Radial density ≍ s^{-1-α} near 0 and ≍ s^{-1-m} at infinity, realized
    as q(s) = (1+s)^{α-m}, φ ≡ 1, β = 2."""
    if not m > 2:
        raise ValidationError("layered profile needs m > 2")
    mu = _default_mu(d, mu)
    _require_nondegenerate(mu)
    prof = RadialProfile(q=ProfileFunction("powerlaw", a=m - alpha))
    return LevyModel(alpha=alpha, beta=2.0, mu=mu, profile=prof, gamma=_gamma_of(mu),
                     name=name or "layered")


def make_tempered(d=1, alpha=1.0, lam=1.0, mu=None, name=None) -> LevyModel:
    """q ≡ 1, φ(s) = exp(-λ s), β = 2."""
    if not lam > 0:
        raise ValidationError("tempering rate must be positive")
    mu = _default_mu(d, mu)
    _require_nondegenerate(mu)
    prof = RadialProfile(phi=ProfileFunction("exp", rate=lam))
    return LevyModel(alpha=alpha, beta=2.0, mu=mu, profile=prof, gamma=_gamma_of(mu),
                     name=name or "tempered")


def relativistic_limit(d, alpha) -> float:
    """lim_{s→0} K_{d,α}(s) = 2^{d+α} Γ((d+α)/2)."""
    return 2.0 ** (d + alpha) * math.gamma(0.5 * (d + alpha))


def relativistic_kernel(d, alpha, s, rel=1e-12) -> float:
    """K_{d,α}(s) = s^{d+α} ∫_0^∞ e^{-u} e^{-s²/(4u)} u^{-(2+d+α)/2} du.

    Integrated in w with u = s e^w, which turns it into
    s^{(d+α)/2} ∫ exp(-s(e^w + e^{-w}/4) - (d+α) w / 2) dw.
    """
    if not s > 0:
        raise PreconditionError("s must be positive")
    nu = 0.5 * (d + alpha)
    f = lambda w: math.exp(-s * (math.exp(w) + 0.25 * math.exp(-w)) - nu * w)
    lo, hi = math.log(s / 400.0), math.log(100.0 / s)
    # the mass sits near the stationary point; give quad a breakpoint there
    z = (math.hypot(nu, s) - nu) / (2.0 * s)
    peak = math.log(z) if z > 0 else lo
    pts = [p for p in (peak, math.log(0.5)) if lo < p < hi]
    val, _ = _radial._quad(f, lo, hi, rel, epsabs=0.0, points=pts or None)
    return s ** nu * val


def relativistic_kernel_bessel(d, alpha, s):
    """Same kernel via 2^{1+ν} s^ν K_ν(s), ν = (d+α)/2 (independent check)."""
    nu = 0.5 * (d + alpha)
    s = np.asarray(s, dtype=float)
    return 2.0 ** (1 + nu) * s ** nu * special.kv(nu, s)


def relativistic_asymptotic(d, alpha, s):
    """(1+s)^{(d+α-1)/2} e^{-s}, the comparison shape."""
    s = np.asarray(s, dtype=float)
    return (1.0 + s) ** (0.5 * (d + alpha - 1)) * np.exp(-s)


def relativistic_ratio_table(d, alpha, s_grid=None):
    """Rows (s, K, asymptotic, ratio) on s ∈ [0.1, 30] by default."""
    s = np.logspace(-1, math.log10(30.0), 60) if s_grid is None else np.asarray(s_grid, dtype=float)
    k = np.array([relativistic_kernel(d, alpha, v) for v in s])
    a = relativistic_asymptotic(d, alpha, s)
    return np.column_stack([s, k, a, k / a])


def relativistic_ratio_csv(path, d, alpha, s_grid=None):
    """Write the ratio table as CSV with columns s, K, asymptotic, ratio."""
    table = relativistic_ratio_table(d, alpha, s_grid)
    np.savetxt(path, table, delimiter=",", header="s,K,asymptotic,ratio", comments="", fmt="%.17g")
    return table


def relativistic_sandwich(model: LevyModel, t_grid=(0.05, 0.2, 1.0), reach=40.0, n_radial=48):
    """Empirical two-sided check for t ≤ 1 against the forms
    min{t^{-d/α}, t|x|^{-d-α} e^{-k|x|}} with k = 1/5 (upper) and k = 2 (lower).

    Returns (c_upper, c_lower, rows): the smallest c_upper with p ≤ c_upper·upper
    and the largest c_lower with p ≥ c_lower·lower over lattice values above
    the noise floor.  No claim is made about the size of either constant.
    """
    from .bounds import h_scale
    from .density import LatticeLadder

    d, a = model.d, model.alpha

    def form(t, x, k):
        with np.errstate(divide="ignore"):
            tail = t * x ** (-d - a) * np.exp(-k * x)
        return np.minimum(t ** (-d / a), tail)

    c_up, c_lo = 0.0, math.inf
    rows = []
    for t in t_grid:
        if t > 1:
            raise PreconditionError("the two-sided forms are stated for t <= 1")
        h = float(h_scale(t, a, model.beta))
        lad = LatticeLadder(model, t)
        radii = np.logspace(math.log10(h / 8.0), math.log10(reach), n_radial)
        pts = np.zeros((n_radial, d))
        pts[:, 0] = radii
        nodes, vals, floors, _ = lad.evaluate(pts)
        x = np.linalg.norm(nodes, axis=1)
        ok = (vals > floors) & (x > 0)
        up = vals[ok] / form(t, x[ok], 0.2)
        lo = vals[ok] / form(t, x[ok], 2.0)
        c_up, c_lo = max(c_up, float(up.max())), min(c_lo, float(lo.min()))
        rows.append({"t": t, "reliable": int(ok.sum()), "upper": float(up.max()), "lower": float(lo.min()),
                     "reach": float(x[ok].max())})
        lad.release()
    return c_up, c_lo, rows


def make_relativistic(d=1, alpha=1.0, resolution=64, name=None) -> LevyModel:
    """Uniform surface μ (γ = d), q ≡ 1, φ = K_{d,α}/K_{d,α}(0+), β = 2."""
    if not (d >= 1 and 0 < alpha < 2):
        raise ValidationError("need d >= 1 and alpha in (0, 2)")
    mu = SpectralMeasure.uniform(d, resolution) if d > 1 else SpectralMeasure.uniform(1)
    prof = RadialProfile(phi=ProfileFunction("relativistic", d=d, alpha=alpha))
    return LevyModel(alpha=alpha, beta=2.0, mu=mu, profile=prof, gamma=float(d),
                     name=name or "relativistic")


# reference presets used by the acceptance suite ---------------------------

def cauchy_1d() -> LevyModel:
    """Symmetric 1-stable with Re Φ(ξ) = |ξ|: atoms ±1 of weight 1/π."""
    mu = SpectralMeasure.atomic([[1.0], [-1.0]], [1 / math.pi, 1 / math.pi])
    return make_stable(1, 1.0, mu, name="cauchy_1d")


def stable_1d(alpha=1.5, skew=0.7) -> LevyModel:
    mu = SpectralMeasure.atomic([[1.0], [-1.0]], [skew, 1.0 - skew])
    return make_stable(1, alpha, mu, name="stable_1d")


def stable_2d(alpha=1.5) -> LevyModel:
    """Two atoms at e1 and e2 (γ = 1)."""
    mu = SpectralMeasure.atomic(np.eye(2), [1.0, 1.0])
    return make_stable(2, alpha, mu, name="stable_2d")


def layered_1d(alpha=0.5, m=3.0) -> LevyModel:
    mu = SpectralMeasure.atomic([[1.0], [-1.0]], [0.5, 0.5])
    return make_layered(1, alpha, m, mu, name="layered_1d")


def tempered_1d(alpha=1.0, lam=1.0) -> LevyModel:
    mu = SpectralMeasure.atomic([[1.0], [-1.0]], [0.5, 0.5])
    return make_tempered(1, alpha, lam, mu, name="tempered_1d")


def relativistic_1d(alpha=1.0) -> LevyModel:
    return make_relativistic(1, alpha, name="relativistic_1d")


REFERENCE = {
    "cauchy_1d": cauchy_1d,
    "stable_1d": stable_1d,
    "stable_2d": stable_2d,
    "layered_1d": layered_1d,
    "tempered_1d": tempered_1d,
    "relativistic_1d": relativistic_1d,
}


def _mu_from_params(d, params):
    kind = params.pop("mu", "symmetric")
    if kind == "symmetric":
        return SpectralMeasure.symmetric(d, mass=float(params.pop("mass", d)))
    if kind == "uniform":
        return SpectralMeasure.uniform(d, int(params.pop("resolution", 64)), float(params.pop("mass", 1.0)))
    if kind == "axes":
        return SpectralMeasure.atomic(np.eye(d), np.full(d, float(params.pop("mass", d)) / d))
    if kind == "onesided":
        if d != 1:
            raise ValidationError("onesided spectral measure is one-dimensional")
        return SpectralMeasure.atomic([[1.0]], [float(params.pop("mass", 1.0))])
    if kind == "skewed":
        if d != 1:
            raise ValidationError("skewed spectral measure is one-dimensional")
        p = float(params.pop("skew", 0.7))
        return SpectralMeasure.atomic([[1.0], [-1.0]], [p, 1.0 - p])
    raise ValidationError(f"unknown spectral choice {kind!r}")


def build(name: str, **params) -> LevyModel:
    """Preset by family name (stable, layered, tempered, relativistic) or by
    reference name (cauchy_1d, stable_2d, ...)."""
    params = dict(params)
    if name in REFERENCE:
        return REFERENCE[name](**{k: float(v) for k, v in params.items()})
    d = int(params.pop("d", 1))
    alpha = float(params.pop("alpha", 1.0))
    if name == "relativistic":
        res = int(params.pop("resolution", 64))
        _no_extra(params)
        return make_relativistic(d, alpha, res)
    mu = _mu_from_params(d, params)
    if name == "stable":
        _no_extra(params)
        return make_stable(d, alpha, mu)
    if name == "layered":
        m = float(params.pop("m", 3.0))
        _no_extra(params)
        return make_layered(d, alpha, m, mu)
    if name == "tempered":
        lam = float(params.pop("lambda", params.pop("lam", 1.0)))
        _no_extra(params)
        return make_tempered(d, alpha, lam, mu)
    raise ValidationError(f"unknown preset {name!r}")


def _no_extra(params):
    if params:
        raise ValidationError(f"unexpected preset parameters: {sorted(params)}")
