"""One-dimensional radial integrals against s^{-1-α} g(s) ds.

Everything the package integrates along a ray reduces to one of two shapes:

* power integrals  ∫_lo^hi s^{p-1-α} g(s) ds  (masses, moments, ψ, b_r);
* oscillatory integrals of the compensated exponential kernel
  ∫_lo^hi (e^{ius} - 1 - ius c(s)) s^{-1-α} g(s) ds.

Near s = 0 both are integrated in the variable w = log s on a finite
window, with the remaining sliver [0, s0] added from the leading-order
expansion g(s) ≈ g(0).
"""

import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DivergentIntegralError, PreconditionError, QuadratureError

# w-window length: the discarded sliver is O(exp(-WINDOW)) relative
WINDOW = 40.0
QUAD_LIMIT = 400
# below this frequency the log-scale integration range leaves double range
U_MIN = 1e-150


def _quad(f, a, b, rel, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(f, a, b, epsabs=kw.pop("epsabs", 0.0), epsrel=rel,
                        limit=kw.pop("limit", QUAD_LIMIT), **kw)
    return val, err


def sin_minus_x(x):
    """sin(x) - x without cancellation for small |x|."""
    if abs(x) < 0.1:
        x2 = x * x
        return x * x2 * (-1 / 6 + x2 * (1 / 120 + x2 * (-1 / 5040 + x2 / 362880)))
    return math.sin(x) - x


def _tail_exponent(g, alpha, p):
    """Log-slope of s^{p-α} g(s) far out; < 0 is needed for ∫^∞ to converge."""
    s1, s2 = 1e10, 1e14
    g1, g2 = float(g(s1)), float(g(s2))
    if g2 <= 0.0:
        return -np.inf
    if g1 <= 0.0:
        return np.inf
    return (p - alpha) + math.log(g2 / g1) / math.log(s2 / s1)


def power_integral(g, alpha, p, lo, hi, rel=1e-12):
    """∫_lo^hi s^{p-1-α} g(s) ds for a bounded nonincreasing g ≥ 0.

    Raises DivergentIntegralError if the integral diverges at 0 or ∞.
    """
    if not hi > lo:
        return 0.0
    e = p - alpha
    total = 0.0
    pts = [lo]
    if lo < 1.0 < hi:
        pts.append(1.0)
    pts.append(hi)
    for a, b in zip(pts[:-1], pts[1:]):
        if a == 0.0:
            if e <= 0.0:
                raise DivergentIntegralError(
                    f"∫ s^{p - 1 - alpha:.3g} g(s) ds diverges at s = 0")
            wb = math.log(b)
            wa = wb - WINDOW / e
            val, err = _quad(lambda w: math.exp(e * w) * g(math.exp(w)), wa, wb, rel)
            s0 = math.exp(wa)
            val += g(0.0) * s0 ** e / e
        elif math.isinf(b):
            if _tail_exponent(g, alpha, p) >= -1e-3:
                raise DivergentIntegralError(
                    f"∫^∞ s^{p - 1 - alpha:.3g} g(s) ds diverges")
            val, err = _quad(lambda s: s ** (e - 1.0) * g(s), a, b, rel)
        elif b > 4.0 * a:
            val, err = _quad(lambda w: math.exp(e * w) * g(math.exp(w)), math.log(a), math.log(b), rel)
        else:
            val, err = _quad(lambda s: s ** (e - 1.0) * g(s), a, b, rel)
        if not math.isfinite(val):
            raise DivergentIntegralError("radial integral is not finite")
        if err > 1e-6 * max(abs(val), 1e-300) and err > 1e-14:
            raise QuadratureError("radial power integral did not converge", err)
        total += val
    return total


def _compensated(mode, a, b):
    if mode == "unit":
        return 1.0 if b <= 1.0 else 0.0
    if mode == "full":
        return 1.0
    if mode == "none":
        return 0.0
    raise ValueError(f"unknown compensation {mode!r}")


def _fourier_chunks(k, g, alpha, u, a, b, kk, rel):
    """Cos/sin-weighted ∫_a^b k on doubling chunks, stopping once the
    remaining mass of k is negligible.  Fallback for QAWF breakdowns on
    rapidly decaying kernels."""
    cc = ss = ec = es = 0.0
    lo = a
    while lo < b:
        hi = min(2.0 * lo, b)
        c1, e1 = _quad(k, lo, hi, rel, weight="cos", wvar=u, limit=4000)
        s1, e2 = _quad(k, lo, hi, rel, weight="sin", wvar=u, limit=4000)
        cc, ss, ec, es = cc + c1, ss + s1, ec + e1, es + e2
        lo = hi
        rest = power_integral(g, alpha, 0.0, lo, b, rel=1e-6) if lo < b else 0.0
        if rest <= 1e-16 * kk or rest < 1e-300:
            break
    return cc, ec, ss, es


def oscillatory_parts(u, g, alpha, lo=0.0, hi=math.inf, compensation="unit", rel=1e-13):
    """Real and imaginary radial parts (R, G) for frequency u > 0.

    R = ∫ (1 - cos us) k(s) ds,  G = ∫ (sin us - us c(s)) k(s) ds with
    k(s) = s^{-1-α} g(s) over [lo, hi), c the compensation indicator
    ("unit": s < 1, "full": always, "none": never).  The per-direction
    exponent contribution is R - iG.

    Pieces with us ≤ 1 are integrated directly; pieces beyond s = 1/u use
    the QUADPACK Fourier weights with the non-oscillatory part split off.
    """
    if u <= 0.0:
        raise ValueError("u must be positive")
    if u < U_MIN:
        raise PreconditionError(f"frequency {u:.3g} is below the supported floor {U_MIN:g}")
    if not hi > lo:
        return 0.0, 0.0
    pts = {lo, hi}
    if lo < 1.0 < hi:
        pts.add(1.0)
    s_osc = 1.0 / u
    if lo < s_osc < hi:
        pts.add(s_osc)
    pts = sorted(pts)
    k = lambda s: s ** (-1.0 - alpha) * g(s)
    R = G = 0.0
    worst = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        c = _compensated(compensation, a, b)
        if b <= s_osc * (1 + 1e-14):
            if a == 0.0:
                e_r = 2.0 - alpha
                e_g = 3.0 - alpha if c else 1.0 - alpha
                if e_g <= 0.0:
                    raise DivergentIntegralError(
                        "uncompensated small jumps require alpha < 1")
                wb = math.log(b)
                f_r = lambda w: 2.0 * math.sin(0.5 * u * math.exp(w)) ** 2 * k(math.exp(w)) * math.exp(w)
                if c:
                    f_g = lambda w: sin_minus_x(u * math.exp(w)) * k(math.exp(w)) * math.exp(w)
                else:
                    f_g = lambda w: math.sin(u * math.exp(w)) * k(math.exp(w)) * math.exp(w)
                wa_r = wb - WINDOW / e_r
                wa_g = wb - WINDOW / e_g
                r, er = _quad(f_r, wa_r, wb, rel)
                gg, eg = _quad(f_g, wa_g, wb, rel)
                g0 = g(0.0)
                s0 = math.exp(wa_r)
                r += 0.5 * u * u * g0 * s0 ** e_r / e_r
                s0 = math.exp(wa_g)
                if c:
                    gg -= u ** 3 / 6.0 * g0 * s0 ** e_g / e_g
                else:
                    gg += u * g0 * s0 ** e_g / e_g
            else:
                # long pieces are integrated in w = log s
                fr = lambda s: 2.0 * math.sin(0.5 * u * s) ** 2 * k(s)
                if c:
                    fg = lambda s: sin_minus_x(u * s) * k(s)
                else:
                    fg = lambda s: math.sin(u * s) * k(s)
                if b > 4.0 * a:
                    r, er = _quad(lambda w: fr(math.exp(w)) * math.exp(w), math.log(a), math.log(b), rel)
                    gg, eg = _quad(lambda w: fg(math.exp(w)) * math.exp(w), math.log(a), math.log(b), rel)
                else:
                    r, er = _quad(fr, a, b, rel)
                    gg, eg = _quad(fg, a, b, rel)
        else:
            kk = power_integral(g, alpha, 0.0, a, b, rel=rel)
            if not c and kk <= 1e-17 * max(abs(R), abs(G)):
                # |contribution| <= 2 kk: below rounding of what is already summed
                continue
            if math.isinf(b):
                tol = max(rel * kk, 1e-300)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", IntegrationWarning)
                    cc, ec = quad(k, a, b, weight="cos", wvar=u, epsabs=tol, limlst=400)
                    ss, es = quad(k, a, b, weight="sin", wvar=u, epsabs=tol, limlst=400)
            else:
                cc, ec = _quad(k, a, b, rel, weight="cos", wvar=u, limit=4000)
                ss, es = _quad(k, a, b, rel, weight="sin", wvar=u, limit=4000)
            if abs(cc) > kk * (1 + 1e-8) or abs(ss) > kk * (1 + 1e-8):
                cc, ec, ss, es = _fourier_chunks(k, g, alpha, u, a, b, kk, rel)
            r, er = kk - cc, ec
            gg, eg = ss, es
            if c:
                m1 = power_integral(g, alpha, 1.0, a, b, rel=rel)
                gg -= u * m1
        R += r
        G += gg
        worst = max(worst, er, eg)
    scale = max(abs(R), abs(G), 1e-300)
    if not (math.isfinite(R) and math.isfinite(G)):
        raise QuadratureError("exponent quadrature produced a non-finite value")
    if worst > 1e-7 * scale and worst > 1e-12:
        raise QuadratureError(f"exponent quadrature did not converge at u={u:.6g}", worst)
    return R, G
