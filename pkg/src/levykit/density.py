"""Transition densities by lattice Fourier inversion.

On a centered lattice with N points per axis, spacing dx in space and
dxi = 2π/(N dx) in frequency, the discrete transform of exp(-tΦ) returns
the N dx-periodization of the density, up to the frequency truncation
error ∫_{outside} |exp(-tΦ)|.  Mass is therefore exactly 1 on the
lattice; accuracy is governed by the two lattice parameters only.

Far-field values come from a ladder of coarser lattices (``LatticeLadder``):
level k has spacing 2^k dx and the same N, and is smoothed with a narrow
Gaussian so the coarse frequency cutoff costs nothing; a Richardson step
removes the leading smoothing bias.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy import integrate, optimize

from . import _config
from .errors import GridResolutionError, PreconditionError
from .exponent import exponent_values, lattice_points, require_lower_bound
from .levy_model import LevyModel, large_jump_mass

MAX_N = {1: 2 ** 24, 2: 2 ** 12, 3: 2 ** 8}
BINARY_MAGIC = b"LVKG"
BINARY_VERSION = 1


@dataclass(frozen=True)
class GridParams:
    xi_max: float
    n: int
    dx: float

    @property
    def dxi(self) -> float:
        return 2.0 * math.pi / (self.n * self.dx)

    @property
    def half_width(self) -> float:
        return 0.5 * self.n * self.dx


def _cutoff(t, c, alpha, beta, tol):
    """Smallest Ξ with exp(-t c (Ξ^α ∧ Ξ^β)) ≤ tol."""
    level = math.log(1.0 / tol) / (t * c)
    xi = level ** (1.0 / alpha)
    if xi < 1.0:
        xi = level ** (1.0 / beta)
    return xi


def _cover_radius(model, t, tol):
    from .bounds import theorem1_shape

    lo, hi = 1e-12, 1.0
    while theorem1_shape(model, t, hi) >= tol and hi < 1e30:
        hi *= 2.0
    if hi >= 1e30:
        return hi
    for _ in range(100):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        if theorem1_shape(model, t, mid) >= tol:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-6:
            break
    return hi


def design_grid(model: LevyModel, t: float, tol: float = 1e-10, c_lower=None,
                max_n=None, min_n=64, cover=None) -> GridParams:
    """Lattice parameters for time t and truncation budget tol.

    Ξ solves exp(-t c_lower (Ξ^α ∧ Ξ^β)) = tol; dx = π/Ξ; N is the smallest
    power of two whose half-width N dx/2 reaches the radius where the
    unit-constant upper-bound shape falls below tol (``cover`` overrides that
    radius), capped by ``max_n``.
    """
    if not t > 0:
        raise PreconditionError("t must be positive")
    if not 0.0 < tol < 1.0:
        raise PreconditionError("tol must lie in (0, 1)")
    c = require_lower_bound(model) if c_lower is None else float(c_lower)
    if not c > 0:
        from .errors import DegenerateModelError

        raise DegenerateModelError("c_lower must be positive for the density to exist")
    xi = _cutoff(t, c, model.alpha, model.beta, tol)
    dx = math.pi / xi
    radius = _cover_radius(model, t, tol) if cover is None else float(cover)
    cap = MAX_N.get(model.d, 2 ** 8) if max_n is None else int(max_n)
    n = max(min_n, 1 << max(0, math.ceil(math.log2(max(2.0 * radius / dx, 1.0)))))
    n = min(n, cap)
    return GridParams(xi_max=xi, n=int(n), dx=dx)


def _centered_fft(cf, d):
    axes = tuple(range(d))
    shifted = sfft.ifftshift(cf, axes=axes)
    out = sfft.fftn(shifted, axes=axes, workers=_config.threads(), overwrite_x=True)
    return sfft.fftshift(out, axes=axes)


@dataclass
class DensityGrid:
    """p_t on a centered lattice; ``offset`` is the spatial point at index N/2.

    Values are kept as computed (no clamping of small negative values).
    """

    values: np.ndarray
    dx: float
    n: int
    t: float
    d: int
    xi_max: float
    offset: np.ndarray = field(default_factory=lambda: np.zeros(1))
    model_hash: str = ""
    imag_residual: float = 0.0
    edge_modulus: float = 0.0
    cf: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.dx ** self.d)

    @property
    def min_ratio(self) -> float:
        return float(self.values.min() / self.values.max())

    def axis(self, k: int = 0):
        return (np.arange(self.n) - self.n // 2) * self.dx + self.offset[k]

    def points(self):
        ax = [self.axis(k) for k in range(self.d)]
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)

    @property
    def noise_floor(self) -> float:
        """Absolute level below which lattice values carry no information."""
        v = self.values
        return float(max(4.0 * self.imag_residual, 2.0 * max(0.0, -v.min()), 1e-14 * v.max()))

    def index_of(self, x):
        """Nearest lattice index of a point (tuple), or None outside the lattice."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.rint((x - self.offset) / self.dx).astype(int) + self.n // 2
        if np.any(k < 0) or np.any(k >= self.n):
            return None
        return tuple(k)

    def at(self, x) -> float:
        """Density at an arbitrary point by the trigonometric sum of the lattice.

        Needs the stored characteristic function (``keep_cf=True`` in invert).
        """
        if self.cf is None:
            raise PreconditionError("grid was computed without keep_cf=True")
        x = np.atleast_1d(np.asarray(x, dtype=float)) - self.offset
        dxi = 2.0 * math.pi / (self.n * self.dx)
        ax = (np.arange(self.n) - self.n // 2) * dxi
        if self.d == 1:
            phase = np.exp(-1j * ax * x[0])
            return float((self.cf @ phase).real * dxi / (2.0 * math.pi))
        ph = [np.exp(-1j * ax * x[k]) for k in range(self.d)]
        val = self.cf
        for k in reversed(range(self.d)):
            val = val @ ph[k]
        return float(val.real * (dxi / (2.0 * math.pi)) ** self.d)

    def sup(self):
        """(sup p, argmax) with the lattice maximum refined off-lattice."""
        k = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        x0 = np.array([self.axis(j)[k[j]] for j in range(self.d)])
        best = float(self.values[k])
        if self.cf is None:
            return best, x0
        f = lambda y: -self.at(y)
        if self.d == 1:
            res = optimize.minimize_scalar(lambda y: f([y]), bounds=(x0[0] - self.dx, x0[0] + self.dx),
                                           method="bounded", options={"xatol": 1e-10 * self.dx})
            xm, val = np.array([res.x]), -res.fun
        else:
            res = optimize.minimize(f, x0, method="Nelder-Mead",
                                    options={"xatol": 1e-9 * self.dx, "fatol": 1e-15 * best,
                                             "initial_simplex": x0 + np.vstack([np.zeros(self.d), np.eye(self.d) * 0.5 * self.dx])})
            xm, val = res.x, -res.fun
        return (val, xm) if val > best else (best, x0)

    # export -----------------------------------------------------------
    def support_window(self, level=1e-10) -> float:
        """Half-width of the smallest centered box holding every value ≥ level·max."""
        big = np.argwhere(self.values >= level * self.values.max())
        c = self.n // 2
        return float(np.max(np.abs(big - c)) * self.dx) if len(big) else 0.0

    def to_csv(self, path=None, clamp=True, stride=1, window=None):
        """Columns x1..xd, p, optionally restricted to |x - offset|_∞ ≤ window.
        Small negative values are clamped to 0 in the export only."""
        buf = io.StringIO() if path is None else open(path, "w", newline="")
        with buf if path is not None else _nullctx(buf):
            w = csv.writer(buf, lineterminator="\n")
            w.writerow([f"x{k + 1}" for k in range(self.d)] + ["p"])
            c = self.n // 2
            m = c if window is None else min(c, int(math.floor(window / self.dx + 1e-9)))
            lo, hi = c - m, min(self.n, c + m + 1)
            sl = tuple(slice(lo, hi, stride) for _ in range(self.d))
            vals = self.values[sl]
            ax = [self.axis(k)[lo:hi:stride] for k in range(self.d)]
            pts = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1).reshape(-1, self.d)
            flat = vals.reshape(-1)
            if clamp:
                flat = np.maximum(flat, 0.0)
            for p, v in zip(pts, flat):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v))])
            if path is None:
                return buf.getvalue()

    def to_binary(self, path):
        """Little-endian: b'LVKG', u32 version, u32 d, u32 N, f64 dx, f64 t,
        then N^d f64 values in row-major order (last axis fastest)."""
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<IIIdd", BINARY_VERSION, self.d, self.n, self.dx, self.t))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "DensityGrid":
        with open(path, "rb") as fh:
            if fh.read(4) != BINARY_MAGIC:
                raise PreconditionError("not a levykit grid file")
            version, d, n, dx, t = struct.unpack("<IIIdd", fh.read(28))
            if version != BINARY_VERSION:
                raise PreconditionError(f"unsupported grid file version {version}")
            vals = np.frombuffer(fh.read(), dtype="<f8").reshape((n,) * d).copy()
        return cls(values=vals, dx=dx, n=n, t=t, d=d, xi_max=math.pi / dx, offset=np.zeros(d))


class _nullctx:
    def __init__(self, obj):
        self.obj = obj

    def __enter__(self):
        return self.obj

    def __exit__(self, *exc):
        return False


def characteristic_function(model, t, pts, part="full", r=None, shift=None):
    phi = exponent_values(model, pts, part, r)
    logcf = -t * phi
    if shift is not None and np.any(shift):
        logcf = logcf - 1j * (pts @ np.asarray(shift, dtype=float))
    return np.exp(logcf)


def invert(model: LevyModel, t: float, params: Optional[GridParams] = None, tol=1e-10,
           shift=None, part="full", r=None, keep_cf=False, check=True) -> DensityGrid:
    """p_t(x + shift) on the lattice x, by discrete Fourier inversion.

    ``part``/``r`` select the truncated law ("truncated": jumps below r,
    fully compensated, no drift) instead of the full one.  Raises
    GridResolutionError if the characteristic function is not small at the
    frequency edge or the lattice mass is off by more than 1e-3.
    """
    if model.d > 3:
        raise PreconditionError("lattice inversion supports d <= 3")
    if not t > 0:
        raise PreconditionError("t must be positive")
    if params is None:
        c = require_lower_bound(model)
        budget = tol
        if part == "truncated" and r is not None and math.isfinite(r):
            budget = tol * math.exp(-2.0 * t * large_jump_mass(model, r))
        params = design_grid(model, t, max(budget, 1e-300), c_lower=c)
    d, n = model.d, params.n
    pts = lattice_points(d, n, params.dxi)
    cf = characteristic_function(model, t, pts, part, r, shift)
    cf[(n // 2,) * d] = 1.0
    edge = _edge_modulus(cf, d)
    raw = _centered_fft(cf if keep_cf else cf.copy(), d) * (params.dxi / (2.0 * math.pi)) ** d
    vals = raw.real.copy()
    grid = DensityGrid(values=vals, dx=params.dx, n=n, t=t, d=d, xi_max=params.xi_max,
                       offset=np.zeros(d) if shift is None else np.asarray(shift, float).reshape(d),
                       model_hash=model.model_hash, imag_residual=float(np.abs(raw.imag).max()),
                       edge_modulus=edge, cf=cf if keep_cf else None)
    if check:
        if edge > 1e-3:
            raise GridResolutionError(
                f"characteristic function is {edge:.3g} at the frequency edge; increase xi_max")
        if abs(grid.mass - 1.0) > 1e-3:
            raise GridResolutionError(f"lattice mass {grid.mass:.6g} differs from 1 by more than 1e-3")
    return grid


def _edge_modulus(cf, d):
    edge = 0.0
    for ax in range(d):
        sl = [slice(None)] * d
        sl[ax] = 0
        edge = max(edge, float(np.abs(cf[tuple(sl)]).max()))
    return edge


def direct_density(model: LevyModel, t: float, x, shift=None, part="full", r=None) -> float:
    """Slow 1D cross-check: p_t(x) = (1/π) ∫_0^∞ Re(e^{-i(x+s)ξ} e^{-tΦ(ξ)}) dξ."""
    if model.d != 1:
        raise PreconditionError("direct inversion is implemented for d = 1")
    xv = float(np.atleast_1d(x)[0]) + (0.0 if shift is None else float(np.atleast_1d(shift)[0]))

    def f(xi):
        if xi == 0.0:
            return 1.0
        ph = complex(exponent_values(model, np.array([[xi]]), part, r)[0])
        return (np.exp(-t * ph - 1j * xv * xi)).real

    c = require_lower_bound(model)
    top = _cutoff(t, c, model.alpha, model.beta, 1e-16)
    val, _ = integrate.quad(f, 0.0, top, limit=2000, epsabs=1e-14, epsrel=1e-12)
    return val / math.pi


# --------------------------------------------------------------------------
# far field: coarse, smoothed lattices
# --------------------------------------------------------------------------

LADDER_N = {1: 2 ** 16, 2: 2 ** 11, 3: 2 ** 7}
SAFE_FRACTION = {1: 1.0 / 64, 2: 1.0 / 16, 3: 1.0 / 4}
SMOOTHING = 2.5


@dataclass
class LevelValues:
    values: np.ndarray
    floor: float
    dx: float
    level: int


def _node_extent(d, n, dx):
    """max-norm of every node of a centered lattice, shaped (n,)*d."""
    ax = np.abs((np.arange(n) - n // 2) * dx)
    ext = ax
    for _ in range(d - 1):
        ext = np.maximum.outer(ext, ax)
    return ext


class LatticeLadder:
    """p_t(x + shift) at arbitrary distances via levels of growing spacing.

    Level 0 is the plain lattice; level k ≥ 1 uses spacing 2^k dx0 and the
    Richardson combination 2 p_σ - p_{σ√2} of Gaussian-smoothed densities,
    σ = 2.5 dx_k.  A point belongs to the finest level whose safe radius
    N dx_k · f_safe covers it (max-norm).  Lattice nodes are the evaluation
    points; ``snap`` maps requested points onto them.
    """

    def __init__(self, model: LevyModel, t: float, shift=None, part="full", r=None, tol=1e-14,
                 n=None, safe_fraction=None):
        self.model, self.t, self.part, self.r = model, t, part, r
        d = model.d
        self.d = d
        self.shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=float).reshape(d)
        self.n = n or LADDER_N[d]
        self.f_safe = safe_fraction or SAFE_FRACTION[d]
        c = require_lower_bound(model)
        budget = tol
        if part == "truncated" and r is not None and math.isfinite(r):
            budget = tol * math.exp(-2.0 * t * large_jump_mass(model, r))
        xi = _cutoff(t, c, model.alpha, model.beta, max(budget, 1e-300))
        self.dx0 = math.pi / xi
        self._levels: dict = {}

    def safe_radius(self, k):
        return self.n * self.dx0 * 2 ** k * self.f_safe

    def level_for(self, x):
        ext = float(np.max(np.abs(x)))
        k = 0
        while self.safe_radius(k) < ext:
            k += 1
        return k

    def _compute(self, k) -> LevelValues:
        d, n = self.d, self.n
        dx = self.dx0 * 2 ** k
        dxi = 2.0 * math.pi / (n * dx)
        pts = lattice_points(d, n, dxi)
        cf = characteristic_function(self.model, self.t, pts, self.part, self.r, self.shift)
        cf[(n // 2,) * d] = 1.0
        scale = (dxi / (2.0 * math.pi)) ** d
        if k == 0:
            raw = _centered_fft(cf, d) * scale
            vals = raw.real
            imag = float(np.abs(raw.imag).max())
        else:
            sig = SMOOTHING * dx
            r2 = np.sum(pts * pts, axis=-1)
            a = _centered_fft(cf * np.exp(-0.5 * sig * sig * r2), d) * scale
            b = _centered_fft(cf * np.exp(-sig * sig * r2), d) * scale
            vals = 2.0 * a.real - b.real
            imag = float(max(np.abs(a.imag).max(), np.abs(b.imag).max()))
        # coarse levels only serve |x| beyond the previous safe radius; their
        # Richardson bias near the mode must not raise the floor out there
        served = vals
        if k > 0:
            ext = _node_extent(d, n, dx)
            served = vals[ext >= self.safe_radius(k - 1)]
        floor = max(4.0 * imag, 2.0 * max(0.0, -float(served.min())), 1e-14 * float(vals.max()))
        return LevelValues(vals, floor, dx, k)

    def level(self, k) -> LevelValues:
        if k not in self._levels:
            self._levels[k] = self._compute(k)
        return self._levels[k]

    def snap(self, x):
        """Nearest node of the level that owns x; returns (node, level)."""
        x = np.asarray(x, dtype=float).reshape(self.d)
        k = self.level_for(x)
        dx = self.dx0 * 2 ** k
        node = np.rint(x / dx) * dx
        if self.level_for(node) > k:
            node = np.trunc(x / dx) * dx
        return node, k

    def evaluate(self, points):
        """Values and noise floors at points (each snapped first).

        Returns (nodes, values, floors, levels).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.d == 1 and pts.shape[-1] != 1:
            pts = pts.reshape(-1, 1)
        snapped = [self.snap(p) for p in pts]
        nodes = np.array([s[0] for s in snapped])
        levels = np.array([s[1] for s in snapped])
        vals = np.empty(len(pts))
        floors = np.empty(len(pts))
        for k in np.unique(levels):
            lv = self.level(int(k))
            sel = np.flatnonzero(levels == k)
            idx = np.rint(nodes[sel] / lv.dx).astype(int) + self.n // 2
            vals[sel] = lv.values[tuple(idx.T)]
            floors[sel] = lv.floor
        return nodes, vals, floors, levels

    def release(self, keep=()):
        for k in list(self._levels):
            if k not in keep:
                del self._levels[k]


# --------------------------------------------------------------------------
# on-diagonal check
# --------------------------------------------------------------------------

@dataclass
class OnDiagonalReport:
    t: np.ndarray
    sup: np.ndarray
    scaled: np.ndarray
    ratio: float
    passed: bool

    def to_dict(self):
        return {"t": self.t.tolist(), "sup": self.sup.tolist(), "scaled": self.scaled.tolist(),
                "max_over_min": self.ratio, "pass": self.passed}


def on_diagonal_check(model: LevyModel, t_grid, tol=1e-12, limit=10.0) -> OnDiagonalReport:
    """sup_x p_t(x) · h(t)^d for each t; passes when max/min < ``limit``."""
    from .bounds import h_scale

    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts <= 0):
        raise PreconditionError("t_grid must be positive")
    sups = []
    for t in ts:
        # the sup is local, a modest lattice around the mode is enough
        c = require_lower_bound(model)
        xi = _cutoff(t, c, model.alpha, model.beta, tol)
        dx = math.pi / xi
        n = min(MAX_N.get(model.d, 256), LADDER_N[model.d] * (4 if model.d == 1 else 1))
        params = GridParams(xi_max=xi, n=n, dx=dx)
        grid = invert(model, t, params, keep_cf=True, check=False)
        val, _ = grid.sup()
        sups.append(val)
    sups = np.array(sups)
    h = np.array([h_scale(t, model.alpha, model.beta) for t in ts])
    scaled = sups * h ** model.d
    ratio = float(scaled.max() / scaled.min())
    return OnDiagonalReport(ts, sups, scaled, ratio, bool(np.isfinite(ratio) and ratio < limit))
