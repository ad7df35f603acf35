"""Special functions and the universal structure near the fronts.

On the cone the correlator decays as t^(-1/3) with a universal
amplitude; inside the cone (the Airy region) it oscillates following
the uniform Bessel/Airy asymptotics.  Bessel values come from
trapezoidal quadrature of the defining integral

    J_n(nu) = (e^{i n pi/2} / 2 pi) int_0^{2 pi} e^{i n tau - i nu cos tau} d tau,

which is spectrally accurate for periodic integrands; the Airy function
from its Maclaurin series pair, escalating the working precision when
the alternating sum loses too many digits in double precision.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError

_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))  # Ai(0)
_AIP0 = 1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))  # -Ai'(0)

ONCONE_AMPLITUDE = 1.0 / (2.0 * 3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))

_SCOPE_MAX = 2000


@dataclass(frozen=True)
class DecayFit:
    window: tuple
    exponent: float
    amplitude: float
    r_squared: float


@dataclass(frozen=True)
class AiryRegionPoint:
    """A point inside the cone with its scaled offset z = (2t - x)/x^(1/3)."""

    x: float
    t: float
    z: float


def _quad_nodes(n: int, nu: float) -> int:
    """Node count: 4096 except when the integrand bandwidth ~ n + nu
    approaches it, where the count doubles until aliasing is negligible."""
    m = 4096
    need = 2 * (n + nu) + 64
    while m < need:
        m *= 2
    return m


def bessel_j(n: int, nu: float) -> float:
    """J_n(nu) by periodic-trapezoid quadrature of the defining integral."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"order must be a nonnegative integer, got {n!r}")
    if not 0 <= nu <= _SCOPE_MAX or n > _SCOPE_MAX:
        raise ValueError(
            f"arguments out of scope (0 <= n, nu <= {_SCOPE_MAX}): n={n}, nu={nu}"
        )
    m = _quad_nodes(n, nu)
    tau = 2 * np.pi * np.arange(m) / m
    integrand = np.exp(1j * (n * tau - nu * np.cos(tau)))
    return float((1j**(n % 4) / m * integrand.sum()).real)


def bessel_j_row(orders, nu: float) -> np.ndarray:
    """J_n(nu) for a whole array of integer orders at once (shared nodes)."""
    orders = np.asarray(orders)
    if orders.size == 0:
        return np.zeros(0)
    if orders.min() < 0 or orders.max() > _SCOPE_MAX or not 0 <= nu <= _SCOPE_MAX:
        raise ValueError("arguments out of scope")
    m = _quad_nodes(int(orders.max()), nu)
    tau = 2 * np.pi * np.arange(m) / m
    w = np.exp(-1j * nu * np.cos(tau))
    e = np.exp(1j * np.outer(orders, tau))
    phases = 1j ** (orders % 4)
    return (phases / m * (e @ w)).real


def dimer_bessel_correlator(x: int, t: float) -> float:
    """|C(x, t)| for the dimer in the large-N limit: (1/4)|J_{x-1} + J_{x+1}|(2t)."""
    if not isinstance(x, (int, np.integer)) or x <= 1:
        raise ValueError(f"separation must be an integer > 1, got {x!r}")
    pair = bessel_j_row(np.array([x - 1, x + 1]), 2.0 * t)
    return float(abs(pair[0] + pair[1]) / 4.0)


# ---------------------------------------------------------------------------
# Airy


def airy_ai(z: float) -> float:
    """Airy Ai from the two-series Maclaurin representation.

    The partial terms grow like e^{(2/3)|z|^{3/2}} before the sum
    collapses, so the float64 pass tracks the largest term and reruns in
    elevated precision (mpmath) whenever the implied cancellation could
    spoil the 1e-9 absolute target.
    """
    if abs(z) > 50:
        raise ValueError(f"|z| <= 50 supported, got {z}")
    val, max_term, terms = _airy_series_float(z)
    # float64 loses ~ max_term * eps to cancellation
    if max_term * 2.3e-16 * math.sqrt(terms) > 1e-10:
        return _airy_series_mp(z, max_term)
    return val


def _airy_series_float(z: float):
    z3 = z**3
    tf, tg = 1.0, z
    f_acc, g_acc = tf, tg
    max_term = max(abs(tf), abs(tg))
    k = 0
    while k < 600:
        k += 1
        tf *= z3 / ((3 * k) * (3 * k - 1))
        tg *= z3 / ((3 * k + 1) * (3 * k))
        f_acc += tf
        g_acc += tg
        max_term = max(max_term, abs(tf), abs(tg))
        if abs(tf) + abs(tg) < 1e-30 * (1.0 + abs(f_acc) + abs(g_acc)):
            break
    return _AI0 * f_acc - _AIP0 * g_acc, max_term, k


def _airy_series_mp(z: float, max_term: float) -> float:
    import mpmath as mp

    extra = int(math.log10(max(max_term, 1.0))) + 15
    with mp.workdps(15 + extra):
        zm = mp.mpf(z)
        z3 = zm**3
        tf, tg = mp.mpf(1), zm
        f_acc, g_acc = tf, tg
        k = 0
        while k < 2000:
            k += 1
            tf *= z3 / ((3 * k) * (3 * k - 1))
            tg *= z3 / ((3 * k + 1) * (3 * k))
            f_acc += tf
            g_acc += tg
            if abs(tf) + abs(tg) < mp.mpf(10) ** (-mp.mp.dps - 5) * (
                1 + abs(f_acc) + abs(g_acc)
            ):
                break
        c1 = mp.mpf(3) ** mp.mpf("-2/3") / mp.gamma(mp.mpf(2) / 3)
        c2 = mp.mpf(3) ** mp.mpf("-1/3") / mp.gamma(mp.mpf(1) / 3)
        return float(c1 * f_acc - c2 * g_acc)


# ---------------------------------------------------------------------------
# Front asymptotics


def oncone_amplitude() -> float:
    """Universal on-cone prefactor 1/(2 * 3^(2/3) * Gamma(2/3))."""
    return ONCONE_AMPLITUDE


def oncone_decay_fit(trace, v_eff: float, window=None) -> DecayFit:
    """Power-law fit of |C_{1, 1 + round(v t)}(t)| on the cone.

    Least squares on log|C| vs log t over the window (default
    [8, N/(2 v_eff) - 5], late enough for asymptotics and clear of the
    wrap-around).  Returns exponent, amplitude and R^2.
    """
    if v_eff <= 0:
        raise ValueError(f"velocity must be positive, got {v_eff}")
    n = trace.n_sites
    if window is None:
        window = (8.0, n / (2.0 * v_eff) - 5.0)
    lo, hi = window
    if hi > n / (2.0 * v_eff):
        raise ValueError(f"window end {hi} is past the wrap time {n / (2 * v_eff):.1f}")
    mask = (trace.times >= lo) & (trace.times <= hi)
    if np.count_nonzero(mask) < 15:
        raise ValueError("need at least 15 samples inside the fit window")
    ts = trace.times[mask]
    xs = np.rint(v_eff * ts).astype(int)
    vals = np.abs(trace.rows[mask, np.minimum(xs, n - 1)])
    keep = vals > 1e-12
    if np.count_nonzero(keep) < 15:
        raise AnalysisError("on-cone magnitudes degenerate (all below 1e-12)")
    logt = np.log(ts[keep])
    logc = np.log(vals[keep])
    slope, intercept = np.polyfit(logt, logc, 1)
    resid = logc - (slope * logt + intercept)
    ss_tot = np.sum((logc - logc.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(
        window=(float(lo), float(hi)),
        exponent=float(slope),
        amplitude=float(np.exp(intercept)),
        r_squared=float(r2),
    )


def offcone_prediction(x: int, t: float) -> float:
    """|C(x, t)| inside the cone from the stationary-phase cosine form.

    Valid for 0 < x < 2t; the x >> 1 asymptotic regime is flagged with a
    warning below x = 10.
    """
    if x <= 0 or x >= 2 * t:
        raise ValueError(f"need 0 < x < 2t, got x={x}, t={t}")
    if x < 10:
        warnings.warn(f"x={x} is below the x >> 1 asymptotic regime", stacklevel=2)
    arg = (4 * t - 2 * x) ** 1.5 / (3 * math.sqrt(x)) - math.pi / 4
    envelope = 2 ** 0.75 * math.sqrt(math.pi) * x**0.25 * (2 * t - x) ** 0.25
    return abs(math.cos(arg)) / envelope


def extremal_lines(n: int, x_range, half_integer: bool = False) -> list:
    """Loci where the off-cone cosine argument is n pi ((n + 1/2) pi).

    Closed-form inversion: 4t = 2x + (3 sqrt(x) (target + pi/4))^(2/3)
    with target = n pi, or (n + 1/2) pi for the half-integer (zero) set.
    Returns AiryRegionPoints (x, t, z).
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"line index must be an integer >= 1, got {n!r}")
    target = (n + 0.5) * math.pi if half_integer else n * math.pi
    points = []
    for x in x_range:
        if x <= 0:
            raise ValueError(f"distances must be positive, got {x}")
        t = x / 2.0 + (3.0 * math.sqrt(x) * (target + math.pi / 4)) ** (2.0 / 3.0) / 4.0
        z = (2 * t - x) / x ** (1.0 / 3.0)
        points.append(AiryRegionPoint(x=float(x), t=float(t), z=float(z)))
    return points
