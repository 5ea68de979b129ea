"""Lévy–Khinchin exponent of a polar-form model.

Sign and compensation convention:

    Φ(ξ) = -∫ (e^{i⟨ξ,y⟩} - 1 - i⟨ξ,y⟩ 1_{|y|<1}) ν(dy) - i⟨ξ,b⟩,

so the characteristic function of the time-t law is exp(-tΦ(ξ)).

Along a direction θ the jump part only depends on u = ⟨ξ,θ⟩ through the
radial function F(u) = R(u) - iG(u) (see ``_radial.oscillatory_parts``),
with F(-u) = conj F(u).  Lattice evaluation goes through, in order of
preference, a closed form (stable, relativistic), or a piecewise Chebyshev
table of F in log u built from adaptive quadrature.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C

from . import _radial
from .errors import DegenerateModelError, NumericalError, PreconditionError
from .levy_model import LevyModel, SpectralMeasure, large_jump_mass, sphere_area

EULER_GAMMA = 0.5772156649015329

# Chebyshev panels: half a decade of u each, 24 nodes
PANELS_PER_DECADE = 2
PANEL_NODES = 24
TABLE_U_MIN = 1e-8


def stable_constant(alpha: float) -> float:
    """a_α = π / (2 sin(πα/2) Γ(1+α))."""
    return math.pi / (2.0 * math.sin(0.5 * math.pi * alpha) * math.gamma(1.0 + alpha))


def isotropic_stable_constant(d: int, alpha: float) -> float:
    """C with ∫ (1 - cos⟨ξ,y⟩) |y|^{-d-α} dy = C |ξ|^α."""
    if d == 1:
        sphere_moment = 2.0
    else:
        sphere_moment = (2.0 * math.pi ** ((d - 1) / 2) * math.gamma((alpha + 1) / 2)
                         / math.gamma((d + alpha) / 2))
    return stable_constant(alpha) * sphere_moment


def _as_points(xi, d):
    xi = np.asarray(xi, dtype=float)
    if d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        xi = xi[..., None]
    if xi.shape[-1] != d:
        raise PreconditionError(f"frequency vectors must have {d} components")
    return xi


def stable_exponent_closed_form(mu: SpectralMeasure, alpha: float, xi):
    """Closed-form stable exponent.

    α ≠ 1:  a_α Σ w |u|^α (1 - i tan(πα/2) sgn u)
    α = 1:  a_1 Σ w |u| (1 + i (2/π) sgn(u) log|u|)

    with u = ⟨ξ,θ⟩ over the atoms (or quadrature nodes) of μ.  Accepts one
    vector or an array of shape (..., d).
    """
    if not 0.0 < alpha < 2.0:
        raise PreconditionError("alpha must lie in (0, 2)")
    if alpha == 1.0 and np.any(np.abs(mu.first_moment) > 1e-12 * mu.total_mass):
        raise PreconditionError(
            "alpha = 1 closed form requires a centered spectral measure (∫θ μ(dθ) = 0)")
    pts = _as_points(xi, mu.dimension)
    u = pts @ mu.directions.T
    au = np.abs(u)
    if alpha == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(au > 0, np.log(np.where(au > 0, au, 1.0)), 0.0)
        terms = au + 1j * (2.0 / math.pi) * u * lg
    else:
        terms = au ** alpha * (1.0 - 1j * math.tan(0.5 * math.pi * alpha) * np.sign(u))
    out = stable_constant(alpha) * (terms @ mu.weights)
    return complex(out) if out.ndim == 0 else out


def stable_reference_drift(mu: SpectralMeasure, alpha: float) -> np.ndarray:
    """Drift for which the unit-compensated stable exponent equals the closed form.

    α < 1: ∫_{|y|<1} y ν(dy);  α = 1: 0;  α > 1: -∫_{|y|>1} y ν(dy).
    """
    m1 = mu.first_moment
    if alpha == 1.0:
        return np.zeros(mu.dimension)
    return m1 / (1.0 - alpha)


# --------------------------------------------------------------------------
# radial function F along one direction
# --------------------------------------------------------------------------

_PARTS = {
    # part: (compensation, uses lower cut, uses upper cut)
    "full": "unit",
    "truncated": "full",
    "large": "none",
}


def _limits(part, r):
    if part == "full":
        return 0.0, math.inf
    if r is None or not r > 0:
        raise PreconditionError(f"part {part!r} needs a truncation radius r > 0")
    if part == "truncated":
        return 0.0, float(r)
    if part == "large":
        return float(r), math.inf
    raise PreconditionError(f"unknown exponent part {part!r}")


def radial_function(model: LevyModel, u: float, part="full", r=None):
    """F(u) = R(u) - iG(u) for one projected frequency u (any sign)."""
    if u == 0.0:
        return 0j
    lo, hi = _limits(part, r)
    if part == "truncated" and math.isinf(hi):
        lo, hi = 0.0, math.inf
    if part == "large" and math.isinf(lo):
        return 0j
    R, G = _radial.oscillatory_parts(abs(u), model.g, model.alpha, lo, hi, _PARTS[part])
    val = complex(R, -G)
    return val if u > 0 else val.conjugate()


def evaluate_exponent(model: LevyModel, xi, part="full", r=None) -> complex:
    """Φ(ξ) by radial-angular quadrature.

    ``part`` selects the full exponent, the exponent of the measure
    restricted to |y| < r with full compensation ("truncated"), or the
    uncompensated large-jump exponent of ν restricted to |y| ≥ r ("large").
    The drift term -i⟨ξ,b⟩ belongs to the full exponent only.
    """
    xi = _as_points(xi, model.d).reshape(model.d)
    if part == "truncated" and r is not None and math.isinf(r):
        part = "full_nodrift"
    total = 0j
    cache = {}
    for th, w in zip(model.mu.directions, model.mu.weights):
        u = float(xi @ th)
        if u == 0.0:
            continue
        key = abs(u)
        if key not in cache:
            if part == "full_nodrift":
                cache[key] = radial_function(model, key, "full")
            else:
                cache[key] = radial_function(model, key, part, r)
        val = cache[key]
        total += w * (val if u > 0 else val.conjugate())
    if part == "full":
        total -= 1j * float(xi @ model.drift)
    return complex(total)


# --------------------------------------------------------------------------
# Chebyshev table of F
# --------------------------------------------------------------------------

def _profile_key(model: LevyModel, part, r):
    try:
        prof = model.profile.to_dict()
    except Exception:
        prof = {"id": id(model.profile)}
    blob = json.dumps({"alpha": model.alpha, "profile": prof, "part": part,
                       "r": None if r is None else float(r),
                       "panels": [PANELS_PER_DECADE, PANEL_NODES]}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def _cache_dir() -> Optional[Path]:
    path = os.environ.get("LEVYKIT_CACHE_DIR")
    if not path:
        return None
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


class RadialTable:
    """Piecewise Chebyshev interpolant of F(u) for u > 0.

    Panel j covers log10 u ∈ [j/2, (j+1)/2); panels are built on first use.
    Below ``TABLE_U_MIN`` values come from direct quadrature.
    """

    _registry: dict = {}

    def __init__(self, model: LevyModel, part="full", r=None):
        self.model = model
        self.part = part
        self.r = r
        self.key = _profile_key(model, part, r)
        self.panels: dict = {}
        self._direct: dict = {}
        self._nodes = C.chebpts1(PANEL_NODES)
        self._load()

    @classmethod
    def get(cls, model: LevyModel, part="full", r=None) -> "RadialTable":
        key = _profile_key(model, part, r)
        tab = cls._registry.get(key)
        if tab is None:
            tab = cls(model, part, r)
            cls._registry[key] = tab
        return tab

    # persistence ------------------------------------------------------
    def _path(self):
        d = _cache_dir()
        return None if d is None else d / f"radial-{self.key}.npz"

    def _load(self):
        path = self._path()
        if path is None or not path.exists():
            return
        with np.load(path) as data:
            for j, cr, cg in zip(data["index"], data["re"], data["im"]):
                self.panels[int(j)] = (cr, cg)

    def _save(self):
        path = self._path()
        if path is None or not self.panels:
            return
        idx = sorted(self.panels)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, index=np.array(idx),
                 re=np.array([self.panels[j][0] for j in idx]),
                 im=np.array([self.panels[j][1] for j in idx]))
        os.replace(tmp, path)

    # construction -----------------------------------------------------
    def _build(self, j):
        a, b = j / PANELS_PER_DECADE, (j + 1) / PANELS_PER_DECADE
        w = 0.5 * (a + b) + 0.5 * (b - a) * self._nodes
        vals = np.array([radial_function(self.model, 10.0 ** wk, self.part, self.r)
                         for wk in w])
        deg = PANEL_NODES - 1
        self.panels[j] = (C.chebfit(self._nodes, vals.real, deg),
                          C.chebfit(self._nodes, vals.imag, deg))

    def ensure(self, umax, umin=TABLE_U_MIN):
        lo = math.floor(math.log10(max(umin, TABLE_U_MIN)) * PANELS_PER_DECADE)
        hi = math.floor(math.log10(max(umax, TABLE_U_MIN)) * PANELS_PER_DECADE)
        missing = [j for j in range(lo, hi + 1) if j not in self.panels]
        for j in missing:
            self._build(j)
        if missing:
            self._save()

    # evaluation -------------------------------------------------------
    def __call__(self, u):
        """F(u) for an array of real u (any sign)."""
        u = np.asarray(u, dtype=float)
        au = np.abs(u).ravel()
        out = np.zeros(au.shape, dtype=complex)
        big = au >= TABLE_U_MIN
        if np.any(big):
            lw = np.log10(au[big]) * PANELS_PER_DECADE
            j = np.floor(lw).astype(int)
            self.ensure(float(au[big].max()), float(au[big].min()))
            x = 2.0 * (lw - j) - 1.0
            jj = np.unique(j)
            cr = np.empty((jj.size, PANEL_NODES))
            ci = np.empty((jj.size, PANEL_NODES))
            for k, jv in enumerate(jj):
                cr[k], ci[k] = self.panels[int(jv)]
            pos = np.searchsorted(jj, j)
            out[big] = _clenshaw(cr[pos], x) + 1j * _clenshaw(ci[pos], x)
        small = (au > 0) & ~big
        for i in np.flatnonzero(small):
            key = float(au[i])
            if key not in self._direct:
                self._direct[key] = radial_function(self.model, key, self.part, self.r)
            out[i] = self._direct[key]
        out = out.reshape(u.shape)
        return np.where(u < 0, np.conj(out), out)


def _clenshaw(coef, x):
    """Row-wise Chebyshev series: coef (m, n), x (m,)."""
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    x2 = 2.0 * x
    for k in range(coef.shape[1] - 1, 0, -1):
        b1, b2 = coef[:, k] + x2 * b1 - b2, b1
    return coef[:, 0] + x * b1 - b2


# --------------------------------------------------------------------------
# vectorized exponent on arrays of frequencies
# --------------------------------------------------------------------------

def _is_relativistic(model: LevyModel) -> bool:
    phi = model.profile.phi
    return (model.profile.q.is_one and phi.family == "relativistic"
            and phi.params.get("d") == model.d and phi.params.get("alpha") == model.alpha)


class IsotropicTable:
    """Φ(|ξ|) for a rotation-invariant μ, by quadrature over the angle."""

    def __init__(self, model: LevyModel, part="full", r=None):
        self.model = model
        self.radial = RadialTable.get(model, part, r)
        d = model.d
        self.scale = model.mu.total_mass / sphere_area(d)
        self.panels: dict = {}
        self._nodes = C.chebpts1(PANEL_NODES)
        # ∫_S f(θ_1) dσ = |S^{d-2}| ∫_0^π f(cos a) sin^{d-2} a da
        self.ring = 2.0 if d == 2 else sphere_area(d - 1)

    def _value(self, rho):
        d = self.model.d
        if d == 1:
            return 2.0 * self.scale * self.radial(np.array([rho]))[0].real
        f = lambda a: float(self.radial(np.array([rho * math.sin(a)]))[0].real) * math.cos(a) ** (d - 2)
        val, _ = _radial._quad(f, 0.0, 0.5 * math.pi, 1e-13, epsabs=0.0)
        return 2.0 * self.ring * self.scale * val

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        flat = rho.ravel()
        out = np.zeros(flat.shape)
        pos = flat >= TABLE_U_MIN
        if np.any(pos):
            lw = np.log10(flat[pos]) * PANELS_PER_DECADE
            j = np.floor(lw).astype(int)
            self.radial.ensure(float(flat[pos].max()), TABLE_U_MIN)
            jj = np.unique(j)
            for jv in jj:
                if int(jv) not in self.panels:
                    a, b = jv / PANELS_PER_DECADE, (jv + 1) / PANELS_PER_DECADE
                    w = 0.5 * (a + b) + 0.5 * (b - a) * self._nodes
                    vals = [self._value(10.0 ** wk) for wk in w]
                    self.panels[int(jv)] = C.chebfit(self._nodes, vals, PANEL_NODES - 1)
            coef = np.array([self.panels[int(jv)] for jv in jj])
            out[pos] = _clenshaw(coef[np.searchsorted(jj, j)], 2.0 * (lw - j) - 1.0)
        tiny = (flat > 0) & ~pos
        for i in np.flatnonzero(tiny):
            out[i] = self._value(float(flat[i]))
        return out.reshape(rho.shape)


def exponent_values(model: LevyModel, xi, part="full", r=None, method="auto"):
    """Φ on an array of frequencies of shape (..., d).

    ``method`` is "auto" (closed form where one exists, table otherwise),
    "table" or "quad" (direct quadrature per point; slow).
    """
    pts = _as_points(xi, model.d)
    shape = pts.shape[:-1]
    if part == "truncated" and r is not None and math.isinf(r):
        vals = exponent_values(model, pts, "full", None, method)
        return vals + 1j * (pts @ model.drift)
    if part != "full":
        _limits(part, r)
    if method == "quad":
        flat = pts.reshape(-1, model.d)
        out = np.array([evaluate_exponent(model, p, part, r) for p in flat])
        return out.reshape(shape)

    mu = model.mu
    drift_term = -1j * (pts @ model.drift) if part == "full" else 0.0
    if method == "auto" and part == "full":
        if model.is_stable and (model.alpha != 1.0 or not np.any(mu.first_moment)):
            if mu.isotropic:
                const = mu.total_mass / sphere_area(model.d) * isotropic_stable_constant(model.d, model.alpha)
                jump = const * np.linalg.norm(pts, axis=-1) ** model.alpha + 0j
            else:
                jump = stable_exponent_closed_form(mu, model.alpha, pts)
                if model.alpha != 1.0:
                    jump = jump + 1j * (pts @ mu.first_moment) / (1.0 - model.alpha)
            return jump + drift_term
        if mu.isotropic and _is_relativistic(model):
            const = mu.total_mass / sphere_area(model.d) * isotropic_stable_constant(model.d, model.alpha)
            rho2 = np.sum(pts * pts, axis=-1)
            jump = const * np.expm1(0.5 * model.alpha * np.log1p(rho2)) + 0j
            return jump + drift_term
    if mu.isotropic and model.d > 1:
        jump = IsotropicTable(model, part, r)(np.linalg.norm(pts, axis=-1)) + 0j
        return jump + drift_term
    table = RadialTable.get(model, part, r)
    proj = pts @ mu.directions.T
    # evaluate the table once per distinct |u| column block
    vals = table(proj)
    jump = vals @ mu.weights
    return jump + drift_term


@dataclass
class CharExponentGrid:
    """Φ sampled on a centered frequency lattice (N points per axis, spacing dxi)."""

    values: np.ndarray
    dxi: float
    n: int
    model_hash: str
    tolerance: float
    part: str = "full"

    @property
    def extent(self) -> float:
        return 0.5 * self.n * self.dxi

    def axis(self):
        return (np.arange(self.n) - self.n // 2) * self.dxi


def lattice_axis(n: int, dxi: float):
    return (np.arange(n) - n // 2) * dxi


def lattice_points(d: int, n: int, dxi: float):
    ax = lattice_axis(n, dxi)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack(grids, axis=-1)


def exponent_grid(model: LevyModel, n: int, dxi: float, part="full", r=None) -> CharExponentGrid:
    pts = lattice_points(model.d, n, dxi)
    vals = exponent_values(model, pts, part, r)
    center = (n // 2,) * model.d
    vals[center] = 0.0
    return CharExponentGrid(vals, dxi, n, model.model_hash, 1e-13, part)


# --------------------------------------------------------------------------
# lower bound and truncation modulus
# --------------------------------------------------------------------------

@dataclass
class LowerBoundResult:
    c_lower: float
    argmin: np.ndarray
    passed: bool
    threshold: float


def default_xi_grid(d: int, n_radii=41, n_dirs=None):
    """Log-spaced radii in [1e-3, 1e3] times a set of directions on the sphere."""
    radii = np.logspace(-3, 3, n_radii)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif d == 2:
        m = n_dirs or 72
        a = 2 * np.pi * np.arange(m) / m
        dirs = np.column_stack([np.cos(a), np.sin(a)])
    else:
        from .levy_model import sphere_nodes

        dirs = sphere_nodes(d, n_dirs or 128)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)


def verify_lower_bound(model: LevyModel, xi_grid=None, threshold=1e-8) -> LowerBoundResult:
    """inf over the grid of Re Φ(ξ) / (|ξ|^α ∧ |ξ|^β) and where it is attained."""
    pts = default_xi_grid(model.d) if xi_grid is None else _as_points(xi_grid, model.d).reshape(-1, model.d)
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0):
        raise PreconditionError("xi_grid must exclude 0")
    re = exponent_values(model, pts).real
    ref = np.minimum(norms ** model.alpha, norms ** model.beta)
    ratio = re / ref
    k = int(np.argmin(ratio))
    c = float(ratio[k])
    return LowerBoundResult(c_lower=c, argmin=pts[k], passed=bool(c > threshold), threshold=threshold)


def require_lower_bound(model: LevyModel) -> float:
    """c_lower for the model, raising DegenerateModelError if it vanishes."""
    if model.c_lower is not None and model.c_lower > 0:
        return float(model.c_lower)
    if not model.mu.nondegenerate:
        raise DegenerateModelError(
            "the real part of the exponent is not bounded below by a positive multiple "
            "of |xi|^alpha ∧ |xi|^beta: the spectral measure does not span R^d, "
            "so the transition density may not exist")
    res = verify_lower_bound(model)
    if not res.passed:
        raise DegenerateModelError(
            "the real part of the exponent is not bounded below by a positive multiple "
            f"of |xi|^alpha ∧ |xi|^beta (infimum {res.c_lower:.3g} at xi = "
            f"{np.round(res.argmin, 6).tolist()}); the transition density may not exist")
    return res.c_lower


class ModulusCheck(float):
    """|F(P̃ᵣ_t)(ξ)| as a float, with the comparison bound attached."""

    def __new__(cls, value, bound):
        obj = super().__new__(cls, value)
        obj.bound = bound
        obj.margin = bound - value
        return obj


def truncated_exponent_modulus(model: LevyModel, r, t, xi, method="quad") -> ModulusCheck:
    """|exp(-t Φ̃_r(ξ))| for the measure restricted to |y| < r.

    Checked against exp(-t Re Φ(ξ)) exp(2t|ν̄_r|); a violation raises
    NumericalError since it can only come from a quadrature failure.
    """
    if not (r > 0 and t > 0):
        raise PreconditionError("r and t must be positive")
    pts = _as_points(xi, model.d).reshape(model.d)
    if not np.any(pts):
        return ModulusCheck(1.0, 1.0)
    ev = evaluate_exponent if method == "quad" else (
        lambda m, x, part="full", r=None: complex(exponent_values(m, x, part, r)))
    full = ev(model, pts)
    if math.isinf(r):
        val = math.exp(-t * full.real)
        return ModulusCheck(val, val)
    trunc = ev(model, pts, "truncated", r)
    val = math.exp(-t * trunc.real)
    bound = math.exp(-t * full.real + 2.0 * t * large_jump_mass(model, r))
    if val > bound * (1 + 1e-9):
        raise NumericalError(
            f"truncated modulus {val:.6g} exceeds exp(-t Re Phi + 2t|nu_r|) = {bound:.6g}")
    return ModulusCheck(val, bound)
