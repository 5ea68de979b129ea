"""Monte Carlo increments built from the large/small jump split.

An increment over time t is the sum of three independent pieces:

* large jumps: compound Poisson with Lévy measure ν restricted to |y| ≥ r,
  no compensation;
* small jumps (|y| < r, fully compensated), replaced by a surrogate:
  ``gaussian`` uses a centered normal with matching covariance,
  ``discard`` keeps the compensated jumps in ρ ≤ |y| < r and drops the rest;
* the drift t·b_r.

Randomness is split in chunks of ``CHUNK`` samples; chunk i draws from
``SeedSequence(seed, spawn_key=(i,))`` so the output does not depend on
how chunks are scheduled over threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _config
from .bounds import h_scale
from .errors import AcceptanceRateError, PreconditionError, ValidationError
from .levy_model import (LevyModel, centering_shift, large_jump_mass, radial_first_moment,
                         truncation_moments)

CHUNK = 65536
MIN_ACCEPTANCE = 1e-3
SCHEMES = ("gaussian", "discard")
_SCHEME_ALIASES = {"moment-matched-normal": "gaussian", "normal": "gaussian"}


@dataclass(frozen=True)
class SimConfig:
    n: int
    seed: int
    scheme: str = "gaussian"
    r: Optional[float] = None
    rho: Optional[float] = None

    def __post_init__(self):
        scheme = _SCHEME_ALIASES.get(self.scheme, self.scheme)
        object.__setattr__(self, "scheme", scheme)
        if scheme not in SCHEMES:
            raise ValidationError(f"unknown small-jump scheme {self.scheme!r}; use one of {SCHEMES}")
        if int(self.n) < 1:
            raise ValidationError("n must be at least 1")
        if self.r is not None and not self.r > 0:
            raise ValidationError("threshold r must be positive")
        if scheme == "discard":
            if self.rho is None:
                raise ValidationError("discard scheme needs an inner cutoff rho")
            if not self.rho > 0:
                raise ValidationError("rho must be positive")
            if self.r is not None and not self.rho < self.r:
                raise ValidationError("need rho < r")

    def resolved_r(self, model: LevyModel, t: float) -> float:
        return float(self.r) if self.r is not None else float(h_scale(t, model.alpha, model.beta))


@dataclass
class SampleBatch:
    t: float
    samples: np.ndarray            # (n, d)
    counts: np.ndarray             # large jumps per sample
    config: dict
    r: float
    large_rate: float              # t |ν̄_r|
    drift: np.ndarray              # t b_r
    small_variance: Optional[np.ndarray] = None    # gaussian scheme covariance
    discarded_second_moment: Optional[float] = None  # t ∫_{|y|<ρ} |y|² ν
    acceptance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def chebyshev_bound(self, delta):
        """P(|dropped part| ≥ δ) ≤ t ∫_{|y|<ρ}|y|² ν(dy) / δ² (discard scheme only)."""
        if self.discarded_second_moment is None:
            raise PreconditionError("no discarded part in this batch")
        return min(1.0, self.discarded_second_moment / float(delta) ** 2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index"] + [f"x{i + 1}" for i in range(self.d)] + ["jumps"])
            for i, (x, k) in enumerate(zip(self.samples, self.counts)):
                w.writerow([i] + [repr(float(v)) for v in x] + [int(k)])

    def summary(self) -> dict:
        out = {"t": self.t, "n": self.n, "d": self.d, "r": self.r, "config": self.config,
               "large_rate": self.large_rate, "mean_jumps": float(self.counts.mean()),
               "drift": self.drift.tolist(), "acceptance": self.acceptance}
        if self.discarded_second_moment is not None:
            out["discarded_second_moment"] = self.discarded_second_moment
        return out


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------

class _RadialSampler:
    """Radii from s^{-1-α} g(s) on [lo, hi) by rejection from the pure power law."""

    def __init__(self, model: LevyModel, lo: float, hi: float, mass: float):
        self.alpha = model.alpha
        self.lo, self.hi = lo, hi
        self.logg = lambda s: model.profile.q.log(s) + model.profile.phi.log(s)
        self.logg_lo = float(self.logg(np.array([lo]))[0])
        self.a_lo = lo ** -self.alpha
        self.a_hi = 0.0 if math.isinf(hi) else hi ** -self.alpha
        envelope = model.mu.total_mass * math.exp(self.logg_lo) * (self.a_lo - self.a_hi) / self.alpha
        self.rate = mass / envelope if envelope > 0 else 0.0
        if self.rate < MIN_ACCEPTANCE:
            raise AcceptanceRateError(
                f"envelope acceptance {self.rate:.3g} is below {MIN_ACCEPTANCE:g} on [{lo:g}, {hi:g}); "
                "choose a larger threshold")

    def draw(self, rng, m):
        out = np.empty(m)
        filled = 0
        while filled < m:
            want = int((m - filled) / self.rate * 1.1) + 16
            u = rng.random(want)
            s = (self.a_lo - u * (self.a_lo - self.a_hi)) ** (-1.0 / self.alpha)
            keep = s[np.log(rng.random(want)) <= self.logg(s) - self.logg_lo]
            take = min(len(keep), m - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out


def _directions(model: LevyModel, rng, m):
    mu = model.mu
    d = model.d
    if mu.isotropic and d > 1:
        v = rng.standard_normal((m, d))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    p = mu.weights / mu.total_mass
    idx = rng.choice(len(p), size=m, p=p)
    return mu.directions[idx]


def _compound(model, sampler, rate, rng, m):
    """m compound-Poisson sums with the given rate; returns (sums, counts)."""
    d = model.d
    counts = rng.poisson(rate, size=m)
    total = int(counts.sum())
    sums = np.zeros((m, d))
    if total:
        radii = sampler.draw(rng, total)
        jumps = _directions(model, rng, total) * radii[:, None]
        owner = np.repeat(np.arange(m), counts)
        for k in range(d):
            sums[:, k] = np.bincount(owner, weights=jumps[:, k], minlength=m)
    return sums, counts


def _chunks(n):
    return [(i, min(CHUNK, n - i * CHUNK)) for i in range(math.ceil(n / CHUNK))]


def _rng(seed, i):
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(i,)))


def _run_chunks(n, seed, work):
    chunks = _chunks(n)
    workers = min(_config.threads(), len(chunks))
    if workers <= 1:
        parts = [work(_rng(seed, i), m) for i, m in chunks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: work(_rng(seed, c[0]), c[1]), chunks))
    return parts


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def sample_large_jumps(model: LevyModel, r: float, t: float, n: int, seed: int) -> SampleBatch:
    """Compound Poisson with jump law ν̄_r / |ν̄_r| and rate t |ν̄_r|."""
    if not (r > 0 and t > 0):
        raise PreconditionError("r and t must be positive")
    mass = large_jump_mass(model, r)
    if not (math.isfinite(mass) and mass > 0):
        raise PreconditionError(f"large-jump mass {mass} must be finite and positive")
    sampler = _RadialSampler(model, r, math.inf, mass)
    rate = t * mass
    parts = _run_chunks(int(n), seed, lambda rng, m: _compound(model, sampler, rate, rng, m))
    samples = np.concatenate([p[0] for p in parts])
    counts = np.concatenate([p[1] for p in parts])
    return SampleBatch(t=t, samples=samples, counts=counts,
                       config={"n": int(n), "seed": int(seed), "r": r, "scheme": "large-only"},
                       r=r, large_rate=rate, drift=np.zeros(model.d),
                       acceptance={"large": sampler.rate})


def sample_increment(model: LevyModel, t: float, config: SimConfig) -> SampleBatch:
    """Increments over time t: large jumps + small-jump surrogate + t b_r."""
    if not t > 0:
        raise PreconditionError("t must be positive")
    d = model.d
    r = config.resolved_r(model, t)
    if config.scheme == "discard" and not config.rho < r:
        raise ValidationError(f"need rho < r (rho={config.rho:g}, r={r:g})")
    mass = large_jump_mass(model, r)
    large = _RadialSampler(model, r, math.inf, mass) if mass > 0 else None
    rate = t * mass
    drift = t * centering_shift(model, r)

    small_cov = None
    discarded = None
    acceptance = {"large": large.rate if large else None}
    if config.scheme == "gaussian":
        small_cov = t * truncation_moments(model, 0.0, r).covariance
        chol = _factor(small_cov)
    else:
        rho = float(config.rho)
        mid = truncation_moments(model, rho, r)
        small = _RadialSampler(model, rho, r, mid.mass)
        acceptance["small"] = small.rate
        small_rate = t * mid.mass
        compensator = t * model.mu.first_moment * radial_first_moment(model, rho, r)
        discarded = t * truncation_moments(model, 0.0, rho).second_moment

    def work(rng, m):
        if large is not None:
            x, k = _compound(model, large, rate, rng, m)
        else:
            x, k = np.zeros((m, d)), np.zeros(m, dtype=np.int64)
        if config.scheme == "gaussian":
            x += rng.standard_normal((m, d)) @ chol.T
        else:
            y, _ = _compound(model, small, small_rate, rng, m)
            x += y - compensator
        return x + drift, k

    parts = _run_chunks(config.n, config.seed, work)
    cfg = asdict(config)
    cfg["r"] = r
    return SampleBatch(t=t, samples=np.concatenate([p[0] for p in parts]),
                       counts=np.concatenate([p[1] for p in parts]), config=cfg, r=r,
                       large_rate=rate, drift=drift, small_variance=small_cov,
                       discarded_second_moment=discarded, acceptance=acceptance)


def _factor(cov):
    # eigen-factorization tolerates the rank-deficient covariances of atomic μ
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass
class Histogram:
    density: np.ndarray
    edges: list

    @property
    def widths(self):
        return [np.diff(e) for e in self.edges]

    @property
    def cell_volumes(self):
        vol = self.widths[0]
        for w in self.widths[1:]:
            vol = np.multiply.outer(vol, w)
        return vol

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * self.cell_volumes))


def empirical_density(batch, bins=100, range=None) -> Histogram:
    """Normalized histogram of the batch (or of an (n, d) array).

    Without ``range`` the bins cover all samples, so the mass is exactly 1.
    With a range, samples outside it are dropped before normalizing.
    """
    x = batch.samples if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if np.ndim(bins) == 0 and int(bins) < 10:
        raise ValidationError("need at least 10 bins")
    if range is not None and x.shape[1] == 1 and np.ndim(range) == 1:
        range = [range]
    if np.ndim(bins) == 1 and x.shape[1] == 1:
        if len(bins) < 11:
            raise ValidationError("need at least 10 bins")
        bins = [np.asarray(bins, dtype=float)]
    elif np.ndim(bins) == 0:
        bins = int(bins)
    dens, edges = np.histogramdd(x, bins=bins, range=range, density=True)
    return Histogram(dens, list(edges))
