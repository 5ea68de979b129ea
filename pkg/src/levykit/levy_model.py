"""Lévy measures in polar product form and their structural hypotheses.

A model describes

    ν(A) = ∫_S ∫_0^∞ 1_A(sθ) s^{-1-α} q(s) φ(s) ds μ(dθ)

with a finite spectral measure μ on the unit sphere S, plus a drift b, the
second index β ∈ [α, 2] and the cap exponent γ ∈ [1, d].  The checks here
are grid certificates: they are exact statements about the sampled grid,
not symbolic proofs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import _radial
from .errors import (
    DivergentIntegralError,
    InvalidProfileError,
    PreconditionError,
    UnknownFamilyError,
    ValidationError,
)

MODEL_SCHEMA = "levykit.model/1"

#: 512 log-spaced points in [1e-6, 1e3]
DEFAULT_S_GRID = np.logspace(-6, 3, 512)


# --------------------------------------------------------------------------
# radial profiles
# --------------------------------------------------------------------------

def _relativistic_log(s, d, alpha):
    nu = 0.5 * (d + alpha)
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 1e-12
    sp = s[pos]
    # log( s^ν K_ν(s) / (2^{ν-1} Γ(ν)) ), K_ν = kve · e^{-s}
    out[pos] = (nu * np.log(sp) + np.log(special.kve(nu, sp)) - sp
                - (nu - 1.0) * math.log(2.0) - special.gammaln(nu))
    return out


_FAMILIES = {
    "one": ((), lambda s, p: np.zeros_like(s)),
    "powerlaw": (("a",), lambda s, p: -p["a"] * np.log1p(s)),
    "logpower": (("a", "m"),
                 lambda s, p: p["a"] * np.log(np.log(math.e + s)) - p["m"] * p["a"] * np.log1p(s)),
    "exp": (("rate",), lambda s, p: -p["rate"] * s),
    "stretched_exp": (("rate", "a"), lambda s, p: -p["rate"] * s ** p["a"]),
    "invlog": (("m",), lambda s, p: -p["m"] * np.log(np.log(s + math.e))),
    "relativistic": (("d", "alpha"), lambda s, p: _relativistic_log(s, p["d"], p["alpha"])),
}


class ProfileFunction:
    """A bounded nonincreasing radial factor with a family tag.

    ``ProfileFunction("powerlaw", a=2.5)`` is s ↦ (1+s)^{-2.5}.  Arbitrary
    callables are accepted with ``ProfileFunction.custom(f)``; those cannot
    be written to a model file.
    """

    def __init__(self, family: str = "one", **params):
        if family not in _FAMILIES and family != "custom":
            raise UnknownFamilyError(f"unknown profile family {family!r}")
        self.family = family
        self.params = {k: float(v) for k, v in params.items()}
        self._func: Optional[Callable] = None
        if family != "custom":
            names, _ = _FAMILIES[family]
            missing = set(names) - set(self.params)
            extra = set(self.params) - set(names)
            if missing or extra:
                raise InvalidProfileError(
                    f"family {family!r} takes parameters {names}, got {sorted(self.params)}")
            self._check_params()

    @classmethod
    def custom(cls, func: Callable, name: str = "custom"):
        self = cls.__new__(cls)
        self.family = "custom"
        self.params = {"name": name}
        self._func = func
        return self

    def _check_params(self):
        p = self.params
        bad = None
        if self.family == "powerlaw" and p["a"] < 0:
            bad = "a >= 0"
        elif self.family == "logpower" and (p["a"] < 0 or p["m"] <= 1):
            bad = "a >= 0 and m > 1"
        elif self.family == "exp" and p["rate"] < 0:
            bad = "rate >= 0"
        elif self.family == "stretched_exp" and not (p["rate"] >= 0 and 0 < p["a"] <= 1):
            bad = "rate >= 0 and 0 < a <= 1"
        elif self.family == "invlog" and p["m"] <= 0:
            bad = "m > 0"
        elif self.family == "relativistic" and not (p["d"] >= 1 and 0 < p["alpha"] < 2):
            bad = "d >= 1 and 0 < alpha < 2"
        if bad:
            raise InvalidProfileError(f"{self.family} profile requires {bad}, got {p}")

    @property
    def is_one(self) -> bool:
        return self.family == "one"

    def log(self, s):
        s = np.asarray(s, dtype=float)
        if self._func is not None:
            with np.errstate(divide="ignore"):
                return np.log(np.asarray(self._func(s), dtype=float))
        return _FAMILIES[self.family][1](s, self.params)

    def __call__(self, s):
        out = np.exp(self.log(s))
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        if self.family == "custom":
            raise InvalidProfileError("custom profiles cannot be serialized")
        return {"family": self.family, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data):
        try:
            family = data["family"]
        except (KeyError, TypeError):
            raise InvalidProfileError(f"profile entry needs a 'family': {data!r}") from None
        return cls(family, **data.get("params", {}))

    def __repr__(self):
        args = ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.params.items())
        return f"ProfileFunction({self.family!r}{', ' if args else ''}{args})"


@dataclass(frozen=True)
class RadialProfile:
    q: ProfileFunction = field(default_factory=ProfileFunction)
    phi: ProfileFunction = field(default_factory=ProfileFunction)

    def g(self, s):
        """q(s) φ(s)."""
        out = np.exp(self.q.log(s) + self.phi.log(s))
        return float(out) if out.ndim == 0 else out

    def phi_ratio(self, s):
        """φ(s)/φ(s/2), computed in log space."""
        s = np.asarray(s, dtype=float)
        out = np.exp(self.phi.log(s) - self.phi.log(0.5 * s))
        return float(out) if out.ndim == 0 else out

    @property
    def is_stable(self) -> bool:
        return self.q.is_one and self.phi.is_one

    def to_dict(self):
        return {"q": self.q.to_dict(), "phi": self.phi.to_dict()}

    @classmethod
    def from_dict(cls, data):
        return cls(q=ProfileFunction.from_dict(data.get("q", {"family": "one"})),
                   phi=ProfileFunction.from_dict(data.get("phi", {"family": "one"})))


# --------------------------------------------------------------------------
# spectral measure
# --------------------------------------------------------------------------

def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def sphere_nodes(d: int, resolution: int):
    """Equal-weight, antipodally symmetric nodes on S^{d-1}."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        m = 2 * max(2, (resolution + 1) // 2)
        ang = 2 * np.pi * (np.arange(m) + 0.5) / m
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if d == 3:
        half = max(4, resolution // 2)
        i = np.arange(half) + 0.5
        z = i / half
        phi = np.pi * (3.0 - math.sqrt(5.0)) * i
        rho = np.sqrt(1 - z * z)
        pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
        return np.vstack([pts, -pts])
    raise PreconditionError("uniform sphere quadrature is implemented for d <= 3")


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Finite measure on the unit sphere, stored as weighted directions.

    ``form`` is "atomic" for a finite sum of point masses, or "density" when
    the directions/weights are an angular quadrature rule for a density g(θ)
    (``resolution`` records the rule size).  ``isotropic`` marks an exactly
    rotation-invariant measure, for which closed forms may be used.
    """

    directions: np.ndarray
    weights: np.ndarray
    form: str = "atomic"
    resolution: Optional[int] = None
    isotropic: bool = False

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if dirs.shape[0] != w.shape[0]:
            raise ValidationError("one weight per direction is required")
        if w.size == 0:
            raise ValidationError("spectral measure has empty support")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValidationError("spectral directions must be unit vectors (|θ| within 1e-12 of 1)")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValidationError("spectral weights must be finite and strictly positive")
        if self.form not in ("atomic", "density"):
            raise ValidationError(f"unknown spectral form {self.form!r}")
        dirs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "weights", w)

    # constructors -----------------------------------------------------
    @classmethod
    def atomic(cls, directions, weights):
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        return cls(dirs, weights, form="atomic")

    @classmethod
    def symmetric(cls, d: int, mass: float = 1.0):
        """Atoms at ±e_i with equal weights summing to ``mass``."""
        eye = np.eye(d)
        dirs = np.vstack([eye, -eye])
        return cls.atomic(dirs, np.full(2 * d, mass / (2 * d)))

    @classmethod
    def uniform(cls, d: int, resolution: int = 64, scale: float = 1.0):
        """``scale`` times the surface measure of S^{d-1}."""
        nodes = sphere_nodes(d, resolution)
        w = np.full(len(nodes), scale * sphere_area(d) / len(nodes))
        return cls(nodes, w, form="density", resolution=len(nodes), isotropic=True)

    @classmethod
    def from_density(cls, d: int, density: Callable, resolution: int = 256):
        """Quadrature of a nonnegative angular density w.r.t. surface measure."""
        nodes = sphere_nodes(d, resolution)
        g = np.array([float(density(th)) for th in nodes])
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValidationError("angular density must be finite and nonnegative")
        keep = g > 0
        w = g[keep] * sphere_area(d) / len(nodes)
        return cls(nodes[keep], w, form="density", resolution=len(nodes))

    # properties -------------------------------------------------------
    @property
    def dimension(self) -> int:
        return self.directions.shape[1]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def first_moment(self) -> np.ndarray:
        """∫ θ μ(dθ)."""
        return self.weights @ self.directions

    @property
    def nondegenerate(self) -> bool:
        return np.linalg.matrix_rank(self.directions, tol=1e-10) == self.dimension

    @property
    def is_symmetric(self) -> bool:
        if self.isotropic:
            return True
        dirs, w = self.directions, self.weights
        for th, wt in zip(dirs, w):
            match = np.all(np.abs(dirs + th) < 1e-12, axis=1)
            if not np.any(match) or abs(w[match].sum() - wt) > 1e-12 * max(1.0, wt):
                return False
        return True

    def cap_mass(self, theta, rho):
        """μ(S ∩ B(θ, ρ)) for a unit vector θ (open ball, chordal radius)."""
        dist = np.linalg.norm(self.directions - np.asarray(theta, dtype=float), axis=1)
        return float(self.weights[dist < rho].sum())

    def to_dict(self):
        out = {"type": self.form,
               "directions": self.directions.tolist(),
               "weights": self.weights.tolist()}
        if self.form == "density":
            out["resolution"] = self.resolution
            if self.isotropic:
                scale = self.total_mass / sphere_area(self.dimension)
                out = {"type": "density", "density": "uniform",
                       "resolution": self.resolution, "scale": scale}
        return out

    @classmethod
    def from_dict(cls, data, dimension: int):
        kind = data.get("type")
        if kind == "atomic":
            return cls.atomic(data["directions"], data["weights"])
        if kind == "density":
            if data.get("density") == "uniform":
                return cls.uniform(dimension, int(data.get("resolution", 64)),
                                   float(data.get("scale", 1.0)))
            if "directions" in data:
                return cls(np.asarray(data["directions"], dtype=float), data["weights"],
                           form="density", resolution=data.get("resolution"))
            raise ValidationError("density spectral entry needs 'density': 'uniform' or nodes")
        raise ValidationError(f"spectral type must be 'atomic' or 'density', got {kind!r}")


# --------------------------------------------------------------------------
# the model
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevyModel:
    alpha: float
    mu: SpectralMeasure
    profile: RadialProfile = field(default_factory=RadialProfile)
    beta: Optional[float] = None
    drift: Optional[np.ndarray] = None
    gamma: float = 1.0
    c_beta: Optional[float] = None
    c_lower: Optional[float] = None
    name: Optional[str] = None

    def __post_init__(self):
        d = self.mu.dimension
        alpha = float(self.alpha)
        beta = alpha if self.beta is None else float(self.beta)
        if not 0.0 < alpha < 2.0:
            raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")
        if not alpha <= beta <= 2.0:
            raise ValidationError(f"beta must lie in [alpha, 2], got {beta}")
        if not 1.0 <= self.gamma <= d:
            raise ValidationError(f"gamma must lie in [1, d] = [1, {d}], got {self.gamma}")
        b = np.zeros(d) if self.drift is None else np.asarray(self.drift, dtype=float).reshape(-1)
        if b.shape != (d,):
            raise ValidationError(f"drift must have {d} components")
        b.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "drift", b)

    @property
    def d(self) -> int:
        return self.mu.dimension

    def g(self, s):
        return self.profile.g(s)

    def kernel(self, s):
        """Radial Lévy density s^{-1-α} q(s) φ(s) per unit spectral mass."""
        s = np.asarray(s, dtype=float)
        return s ** (-1.0 - self.alpha) * self.profile.g(s)

    @property
    def is_stable(self) -> bool:
        return self.profile.is_stable

    @property
    def is_symmetric(self) -> bool:
        return self.mu.is_symmetric

    def replace(self, **changes) -> "LevyModel":
        return replace(self, **changes)

    def to_dict(self):
        out = {
            "schema": MODEL_SCHEMA,
            "dimension": self.d,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "drift": self.drift.tolist(),
            "spectral": self.mu.to_dict(),
            "profile": self.profile.to_dict(),
        }
        for key in ("c_beta", "c_lower", "name"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @classmethod
    def from_dict(cls, data) -> "LevyModel":
        try:
            d = int(data["dimension"])
            mu = SpectralMeasure.from_dict(data["spectral"], d)
            if mu.dimension != d:
                raise ValidationError("spectral directions do not match 'dimension'")
            return cls(alpha=float(data["alpha"]), beta=data.get("beta"),
                       gamma=float(data.get("gamma", 1.0)), drift=data.get("drift"),
                       mu=mu, profile=RadialProfile.from_dict(data.get("profile", {})),
                       c_beta=data.get("c_beta"), c_lower=data.get("c_lower"),
                       name=data.get("name"))
        except KeyError as exc:
            raise ValidationError(f"model file is missing field {exc}") from None

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "LevyModel":
        return cls.from_dict(json.loads(text))

    @property
    def model_hash(self) -> str:
        data = self.to_dict()
        data.pop("name", None)
        data.pop("c_lower", None)
        data.pop("c_beta", None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_model(path) -> LevyModel:
    with open(path) as fh:
        return LevyModel.from_dict(json.load(fh))


def save_model(model: LevyModel, path):
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# hypothesis checks
# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    constant: float = float("nan")
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list
    grid: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed, "grid": self.grid,
                "checks": [c.__dict__ for c in self.checks]}


def _check_values(name, values):
    if not np.all(np.isfinite(values)):
        raise InvalidProfileError(f"{name} is not finite on the grid")


def validate_profiles(profile: RadialProfile, s_grid=None) -> ValidationReport:
    """Grid certificate for positivity, monotonicity, doubling of q and
    submultiplicativity of φ.

    The doubling constant κ₁ is the largest observed q(s)/q(2s); κ₂ the
    largest φ(a)φ(b)/φ(a+b) over grid pairs (0 included); η = log₂ κ₁ and
    the polynomial-ratio form q(r)/q(R) ≤ κ₁ (r/R)^{-η} is checked on all
    pairs r ≤ R.
    """
    s = DEFAULT_S_GRID if s_grid is None else np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise PreconditionError("s_grid must be nonempty, positive and strictly increasing")
    checks = []
    s0 = np.concatenate([[0.0], s])
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        lq = np.atleast_1d(profile.q.log(s))
        lq2 = np.atleast_1d(profile.q.log(2 * s))
        lp = np.atleast_1d(profile.phi.log(s0))
    # log values: -inf is a zero, anything else non-finite is invalid
    for name, vals in (("q", lq), ("q(2s)", lq2), ("phi", lp)):
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise InvalidProfileError(f"{name} is not finite on the grid")

    checks.append(Check("q_positive_bounded", bool(np.all(lq > -np.inf)), float(np.exp(lq.max()))))
    checks.append(Check("q_nonincreasing", bool(np.all(np.diff(lq) <= 1e-13)),
                        detail="log q nondecreasing steps above 1e-13 count as failures"))
    checks.append(Check("phi_positive_bounded", bool(np.all(lp > -np.inf)), float(np.exp(lp.max()))))
    checks.append(Check("phi_nonincreasing", bool(np.all(np.diff(lp) <= 1e-13))))

    with np.errstate(invalid="ignore", over="ignore"):
        kappa1 = float(np.exp(np.max(lq - lq2)))
    checks.append(Check("q_doubling", bool(np.isfinite(kappa1)), kappa1,
                        "max q(s)/q(2s) over the grid"))

    a, b = np.meshgrid(s0, s0, indexing="ij")
    mask = a <= b
    lsum = profile.phi.log((a + b)[mask])
    log_ratio = (lp[:, None] + lp[None, :])[mask] - lsum
    kappa2 = float(np.exp(np.max(log_ratio)))
    checks.append(Check("phi_submultiplicative", bool(np.isfinite(kappa2)), kappa2,
                        "max phi(a)phi(b)/phi(a+b) over grid pairs"))

    eta = max(0.0, math.log2(kappa1)) if np.isfinite(kappa1) and kappa1 > 0 else float("inf")
    r_i, R_i = np.triu_indices(s.size)
    lhs = lq[r_i] - lq[R_i]
    rhs = math.log(kappa1) + eta * (np.log(s[R_i]) - np.log(s[r_i]))
    checks.append(Check("q_polynomial_ratio", bool(np.all(lhs <= rhs + 1e-12)), eta,
                        "eta = log2(kappa1); q(r)/q(R) <= kappa1 (R/r)^eta"))
    grid = {"s_min": float(s[0]), "s_max": float(s[-1]), "points": int(s.size)}
    return ValidationReport(checks, grid)


def profile_constants(profile: RadialProfile, s_grid=None):
    """(κ₁, κ₂, η) measured on the grid."""
    rep = validate_profiles(profile, s_grid)
    return rep["q_doubling"].constant, rep["phi_submultiplicative"].constant, rep["q_polynomial_ratio"].constant


@dataclass
class GammaFit:
    gamma: float
    constant: float
    residual: float
    slope: float


def _node_spacing(mu: SpectralMeasure) -> float:
    n = mu.resolution or len(mu.weights)
    return (sphere_area(mu.dimension) / n) ** (1.0 / max(mu.dimension - 1, 1))


def _uniform_cap_fraction(d, rho):
    """Surface fraction of S^{d-1} within chord distance rho of a point."""
    rho = np.minimum(np.asarray(rho, dtype=float), 2.0)
    if d == 2:
        return 4.0 * np.arcsin(0.5 * rho) / (2.0 * math.pi)
    if d == 3:
        return rho ** 2 / 4.0
    raise PreconditionError("exact caps are implemented for d = 2, 3")


def default_rho_grid(mu: SpectralMeasure):
    lo = 1e-3
    if mu.form == "density" and not (mu.isotropic and mu.dimension in (2, 3)):
        lo = max(lo, 3.0 * _node_spacing(mu))
    return np.logspace(math.log10(lo), math.log10(2.0), 48)


def gamma_exponent(mu: SpectralMeasure, rho_grid=None, fit_max=1.0) -> GammaFit:
    """Cap exponent γ with μ(S ∩ B(θ,ρ)) ≤ c ρ^{γ-1}.

    For each ρ the upper envelope over θ (support samples) is taken; the
    log-log slope of the envelope over ρ ≤ ``fit_max`` gives γ - 1, clipped
    to [1, d].  The constant is the sup of cap/ρ^{γ-1} over every sample.
    Density-form measures count each quadrature node fractionally across
    one node spacing, so cap masses vary continuously with ρ.
    """
    if mu.weights.size == 0:
        raise ValidationError("spectral measure has empty support")
    rho = default_rho_grid(mu) if rho_grid is None else np.asarray(rho_grid, dtype=float)
    if rho.size == 0 or np.any(rho <= 0):
        raise PreconditionError("rho_grid must be nonempty and positive")
    d = mu.dimension
    dirs = mu.directions
    if len(dirs) > 256:
        idx = np.linspace(0, len(dirs) - 1, 256).astype(int)
        dirs = dirs[idx]
    dist = np.linalg.norm(dirs[:, None, :] - mu.directions[None, :, :], axis=2)
    if mu.isotropic and d in (2, 3):
        # rotation invariant: every cap of chord radius ρ has the same mass
        caps = np.tile(mu.total_mass * _uniform_cap_fraction(d, rho), (len(dirs), 1))
    elif mu.form == "density":
        h = _node_spacing(mu)
        inside = np.clip((rho[None, :, None] - dist[:, None, :]) / h + 0.5, 0.0, 1.0)
        caps = inside @ mu.weights
    else:
        caps = np.array([[mu.weights[row < r].sum() for r in rho] for row in dist])
    env = caps.max(axis=0)
    sel = rho <= fit_max
    if sel.sum() < 2:
        sel = np.ones_like(rho, dtype=bool)
    x, y = np.log(rho[sel]), np.log(env[sel])
    slope, icept = np.polyfit(x, y, 1)
    gamma = float(np.clip(1.0 + slope, 1.0, d))
    residual = float(np.max(np.abs(y - (icept + slope * x))))
    const = float(np.max(caps / rho[None, :] ** (gamma - 1.0)))
    return GammaFit(gamma=gamma, constant=const, residual=residual, slope=float(slope))


class PsiValue(float):
    """ψ(r) as a float, carrying |ν̄_r| (``tail_mass``) for the cross-check."""

    def __new__(cls, psi, tail_mass):
        obj = super().__new__(cls, psi)
        obj.tail_mass = tail_mass
        return obj

    @property
    def psi(self) -> float:
        return float(self)


def large_jump_mass(model: LevyModel, r: float) -> float:
    """|ν̄_r| = ν(B(0,r)^c)."""
    if not r > 0:
        raise PreconditionError("r must be positive")
    return model.mu.total_mass * _radial.power_integral(model.g, model.alpha, 0.0, r, math.inf)


def tail_mass_psi(model: LevyModel, r: float) -> PsiValue:
    """ψ(r) = |μ| φ(0) ∫_r^∞ s^{-1-α} q(s) φ(s)/φ(s/2) ds."""
    if not r > 0:
        raise PreconditionError("r must be positive")
    prof = model.profile
    integrand = lambda s: float(np.exp(prof.q.log(s) + prof.phi.log(s) - prof.phi.log(0.5 * s)))
    try:
        val = _radial.power_integral(integrand, model.alpha, 0.0, r, math.inf)
    except DivergentIntegralError as exc:
        raise DivergentIntegralError(f"psi({r}) diverges: {exc}") from None
    psi = model.mu.total_mass * prof.phi(0.0) * val
    return PsiValue(psi, large_jump_mass(model, r))


def radial_first_moment(model: LevyModel, lo: float, hi: float) -> float:
    """∫_lo^hi s · s^{-1-α} q φ ds, oriented (negative if hi < lo)."""
    if hi < lo:
        return -radial_first_moment(model, hi, lo)
    return _radial.power_integral(model.g, model.alpha, 1.0, lo, hi)


def centering_shift(model: LevyModel, r: float) -> np.ndarray:
    """b_r: b - ∫_{r<|y|<1} y ν(dy) for r ≤ 1, b + ∫_{1<|y|<r} y ν(dy) for r > 1.

    Both branches equal b + m₁ ∫_1^r s k(s) ds with m₁ = ∫ θ μ(dθ) and the
    radial integral oriented.
    """
    if not r > 0:
        raise PreconditionError("r must be positive")
    m1 = model.mu.first_moment
    if r == 1.0 or not np.any(m1):
        return model.drift.copy()
    return model.drift + m1 * radial_first_moment(model, 1.0, r)


@dataclass
class BetaCheck:
    c_beta: float
    passed: bool
    slope: float
    r_grid: np.ndarray


def beta_integral(model: LevyModel, r: float) -> float:
    """I(r) = ∫_0^r s^{1-α} q(s) φ(s)/φ(s/2) ds."""
    prof = model.profile
    integrand = lambda s: float(np.exp(prof.q.log(s) + prof.phi.log(s) - prof.phi.log(0.5 * s)))
    return _radial.power_integral(integrand, model.alpha, 2.0, 0.0, r)


def beta_condition_check(model: LevyModel, r_grid=None, beta=None) -> BetaCheck:
    """c_beta = max I(r)/r^{2-β} over the grid.

    Passes when the ratio is finite and has stopped growing: its log-log
    slope over the last decade of the grid is below 0.05.
    """
    beta = model.beta if beta is None else beta
    r = np.logspace(0, 4, 41) if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any(r < 1):
        raise PreconditionError("r_grid must lie in [1, inf)")
    vals = np.empty_like(r)
    acc, prev = 0.0, 0.0
    prof = model.profile
    integrand = lambda s: float(np.exp(prof.q.log(s) + prof.phi.log(s) - prof.phi.log(0.5 * s)))
    for i, ri in enumerate(r):
        acc += _radial.power_integral(integrand, model.alpha, 2.0, prev, ri)
        prev = ri
        vals[i] = acc
    ratio = vals / r ** (2.0 - beta)
    c_beta = float(ratio.max())
    last = r >= r[-1] / 10.0
    if last.sum() >= 2 and r[-1] > r[0]:
        slope = float(np.polyfit(np.log(r[last]), np.log(ratio[last]), 1)[0])
    else:
        slope = 0.0
    return BetaCheck(c_beta=c_beta, passed=bool(np.isfinite(c_beta) and slope < 0.05),
                     slope=slope, r_grid=r)


@dataclass
class TruncationMoments:
    rho: float
    r: float
    mass: float
    second_moment: float
    first_moment_vector: np.ndarray
    covariance: np.ndarray = None


def truncation_moments(model: LevyModel, rho: float, r: float) -> TruncationMoments:
    """Mass, ∫|y|², ∫_{B(0,1)} y and ∫ y yᵀ of ν restricted to rho ≤ |y| < r."""
    if not 0 <= rho <= r:
        raise PreconditionError("need 0 <= rho <= r")
    d = model.d
    if rho == r:
        return TruncationMoments(rho, r, 0.0, 0.0, np.zeros(d), np.zeros((d, d)))
    mu = model.mu
    g, a = model.g, model.alpha
    mass = mu.total_mass * _radial.power_integral(g, a, 0.0, rho, r) if rho > 0 else math.inf
    m2 = _radial.power_integral(g, a, 2.0, rho, r)
    hi1 = min(r, 1.0)
    try:
        m1 = _radial.power_integral(g, a, 1.0, rho, hi1) if hi1 > rho else 0.0
    except DivergentIntegralError:
        m1 = math.nan
    first = mu.first_moment * m1
    cov = (mu.directions.T * mu.weights) @ mu.directions * m2
    return TruncationMoments(rho, r, mass, mu.total_mass * m2, first, cov)


def validate_model(model: LevyModel, s_grid=None, lower_bound=True) -> ValidationReport:
    """All structural hypotheses in one report."""
    rep = validate_profiles(model.profile, s_grid)
    checks = list(rep.checks)
    checks.append(Check("mu_nondegenerate", model.mu.nondegenerate))
    bc = beta_condition_check(model)
    checks.append(Check("beta_condition", bc.passed, bc.c_beta, f"last-decade slope {bc.slope:.3g}"))
    gf = gamma_exponent(model.mu)
    checks.append(Check("gamma_measure", gf.gamma <= model.gamma + 0.05, gf.constant,
                        f"fitted gamma {gf.gamma:.3f}, declared {model.gamma:g}"))
    if lower_bound:
        from .exponent import verify_lower_bound

        lb = verify_lower_bound(model)
        checks.append(Check("lower_bound", lb.passed, lb.c_lower,
                            f"argmin {np.round(lb.argmin, 6).tolist()}"))
    return ValidationReport(checks, rep.grid)
