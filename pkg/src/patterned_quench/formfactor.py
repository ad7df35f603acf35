"""Momentum-space form factors, their closed forms, and light-cone lines.

The form factor ``F_{k,k'} = (1/N) sum_{l,l'} e^{i(l k - l' k')} C_{l,l'}``
concentrates on straight lines ``k' = s k + alpha`` for every patterned
state in scope; the shift alpha of each line fixes an effective cone
velocity ``v_eff = 2 sin(alpha/2)``.  This module computes F by DFT,
evaluates the per-family closed forms (used as oracles against the DFT),
detects the line structure by exact grid-offset binning, and measures
front velocities from real-space traces.

Site phases use the 1-based labels l = 1..N; the closed-form line
modulations depend on this convention.
"""

from dataclasses import dataclass

import numpy as np

from .config import NumericsConfig, DEFAULT_NUMERICS
from .errors import AnalysisError, NumericalInvariantError
from .lattice import ChainSpec, valid_momenta
from .states import CorrelationMatrix, make_state, parse_family


@dataclass(frozen=True)
class FormFactor:
    """Momentum-space correlation matrix on the k-grid (k row, k' column)."""

    matrix: np.ndarray
    momenta: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DivergentLine:
    """Marker for a grid point where a closed-form ratio is 0/0.

    ``value`` carries the exact finite-N entry obtained from the
    pre-simplification bond sums (for the rainbow this is 0 off the
    diagonal and 1/2 at the two diagonal crossings).
    """

    k: float
    kp: float
    value: complex


@dataclass(frozen=True)
class LightConeSpecies:
    """One detected form-factor line k' = sign*k + alpha (merged with its
    2 pi - alpha mirror), with the |F| mass it carries."""

    sign: int
    alpha: float
    weight: float
    v_eff: float


def _phase_matrix(spec: ChainSpec) -> np.ndarray:
    k = valid_momenta(spec)
    return np.exp(1j * np.outer(k, spec.sites))


def form_factor(
    state: CorrelationMatrix, config: NumericsConfig = DEFAULT_NUMERICS
) -> FormFactor:
    """Two-sided DFT of the correlation matrix; validates the sum rule."""
    spec = ChainSpec(state.n_sites)
    a = _phase_matrix(spec)
    f = a @ state.matrix @ a.conj().T / spec.n_sites
    herm = np.max(np.abs(f - f.conj().T))
    if herm > config.hermiticity_tol:
        raise NumericalInvariantError(f"form factor not Hermitian: {herm:.3e}")
    trace_dev = abs(np.trace(f) - np.trace(state.matrix))
    if trace_dev > 1e-9:
        raise NumericalInvariantError(f"form-factor trace sum rule violated: {trace_dev:.3e}")
    return FormFactor(matrix=f, momenta=valid_momenta(spec))


def inverse_form_factor(f: FormFactor) -> np.ndarray:
    """Back-transform to the site basis (round-trip partner of form_factor)."""
    spec = ChainSpec(f.n_sites)
    a = _phase_matrix(spec)
    return a.conj().T @ f.matrix @ a / spec.n_sites


# ---------------------------------------------------------------------------
# Closed forms


def _grid_index(k: float, n: int, config: NumericsConfig) -> int:
    m = k * n / (2 * np.pi)
    mr = int(np.rint(m))
    if abs(m - mr) > config.delta_tol * n:
        raise ValueError(f"momentum {k} is not on the N={n} grid")
    return mr % n


def closed_form_grid(
    family: str,
    spec: ChainSpec,
    P: int | None = None,
    q: int | None = None,
):
    """Closed-form F over the whole momentum grid.

    Returns (matrix, pole_mask).  Pole entries (rainbow only) hold the
    exact pre-simplification value, and are flagged in the mask so
    callers can skip them when comparing against the ratio expression.
    """
    family, P, q = parse_family(family, P, q)
    n = spec.n_sites
    k = valid_momenta(spec)
    km, kpm = np.meshgrid(k, k, indexing="ij")
    m = np.arange(n)
    mm, mpm = np.meshgrid(m, m, indexing="ij")
    d = (mm - mpm) % n  # (k - k') in grid units
    s = (mm + mpm) % n  # (k + k') in grid units
    f = np.zeros((n, n), dtype=complex)
    poles = np.zeros((n, n), dtype=bool)

    if family == "dimer":
        if n % 2:
            raise ValueError("dimer closed form needs even N")
        lines = (d == 0) | (d == n // 2)
        f[lines] = (np.exp(1j * kpm[lines]) + np.exp(-1j * km[lines])) / 4
        f[d == 0] += 0.5
    elif family == "dimer-q":
        if q is None or q < 1:
            raise ValueError("dimer-q closed form requires q >= 1")
        if n % (4 * q):
            raise ValueError(f"dimer-{q} closed form needs N divisible by {4 * q}")
        step = n // (4 * q)
        for j in range(1, 4 * q, 2):
            on = d == j * step
            delta = np.pi * j / (2 * q)
            coeff = 1.0 / (2 * q * (1 - np.exp(2j * delta)))
            f[on] = (np.exp(-1j * km[on]) + np.exp(1j * kpm[on])) * coeff
        f[d == 0] = 0.5
    elif family == "wigner":
        if P is None or P < 2:
            raise ValueError("wigner closed form requires P >= 2")
        if n % P:
            raise ValueError(f"wigner closed form needs N divisible by {P}")
        f[d % (n // P) == 0] = 1.0 / P
    elif family == "rainbow":
        if n % 2:
            raise ValueError("rainbow closed form needs even N")
        sgn = (-1.0) ** (n // 2 + 1)
        num = (np.exp(1j * km * n / 2) + sgn * np.exp(-1j * kpm * n / 2)) ** 2
        cos_half = np.cos((km + kpm) / 2)
        poles = s == n // 2
        with np.errstate(divide="ignore", invalid="ignore"):
            f = sgn / (4 * n) * np.exp(1j * (km - kpm) / 2) * num / cos_half
        # pre-simplification value on the divergent lines: the two signed
        # geometric sums cancel exactly off the diagonal
        f[poles] = 0.0
        f[np.eye(n, dtype=bool)] += 0.5
    elif family == "frozen-rainbow":
        if n % 2:
            raise ValueError("rainbow closed form needs even N")
        online = s == 0
        y = np.exp(1j * (km + kpm))
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = (y ** (n // 2 + 1) - y) / (y - 1)
            g2 = (y.conj() ** (n // 2 + 1) - y.conj()) / (y.conj() - 1)
            f = (np.exp(-1j * kpm * (n + 1)) * g1 + np.exp(1j * km * (n + 1)) * g2) / (2 * n)
        f[online] = np.exp(-1j * kpm[online] * (n + 1)) / 2
        f[np.eye(n, dtype=bool)] += 0.5
    else:
        raise ValueError(f"no closed form for family {family!r}")
    return f, poles


def closed_form_ff(
    family: str,
    spec: ChainSpec,
    k: float,
    kp: float,
    P: int | None = None,
    q: int | None = None,
    config: NumericsConfig = DEFAULT_NUMERICS,
):
    """Closed-form F_{k,k'} at a single grid point.

    Returns a complex value, or a DivergentLine marker where the
    published rainbow ratio is singular (its exact finite-N value rides
    along in the marker).
    """
    n = spec.n_sites
    mi = _grid_index(k, n, config)
    mpi = _grid_index(kp, n, config)
    f, poles = closed_form_grid(family, spec, P=P, q=q)
    if poles[mi, mpi]:
        return DivergentLine(k=k, kp=kp, value=complex(f[mi, mpi]))
    return complex(f[mi, mpi])


def verify_closed_forms(
    family: str,
    spec: ChainSpec,
    P: int | None = None,
    q: int | None = None,
    gamma: float | None = None,
) -> float:
    """Max |closed form - DFT of the built state| over the grid, poles skipped."""
    state = make_state(family, spec, P=P, q=q, gamma=gamma)
    f_num = form_factor(state).matrix
    f_closed, poles = closed_form_grid(family, spec, P=P, q=q)
    diff = np.abs(f_closed - f_num)
    diff[poles] = 0.0
    return float(diff.max())


# ---------------------------------------------------------------------------
# Line detection and velocities


def detect_lines(f: FormFactor, threshold_fraction: float = 0.1) -> list:
    """Detect straight-line support of |F| by exact grid-offset binning.

    Off-diagonal |F| mass is accumulated into bins over (sign s, shift
    alpha = 2 pi a / N) for the two line families k' = k + alpha and
    k' = -k + alpha; mirror shifts alpha and 2 pi - alpha describe the
    same |v_eff| and are merged.  Bins above threshold_fraction of the
    largest merged mass become LightConeSpecies, sorted by weight.
    """
    n = f.n_sites
    mag = np.abs(f.matrix).copy()
    np.fill_diagonal(mag, 0.0)
    if mag.max() < 1e-9:
        return []
    m = np.arange(n)
    mm, mpm = np.meshgrid(m, m, indexing="ij")
    plus = np.bincount(((mpm - mm) % n).ravel(), weights=mag.ravel(), minlength=n)
    minus = np.bincount(((mm + mpm) % n).ravel(), weights=mag.ravel(), minlength=n)

    def merged(bins):
        # fold a -> N - a; indices 0 and N/2 are their own mirrors
        out = {}
        for a in range(0, n // 2 + 1):
            w = bins[a] + (bins[n - a] if 0 < a < n / 2 else 0.0)
            out[a] = w
        return out

    families = {1: merged(plus), -1: merged(minus)}
    top = max(max(fam.values()) for fam in families.values())
    species = []
    for sign, fam in families.items():
        for a, w in fam.items():
            if sign == 1 and a == 0:
                continue  # the diagonal itself, never a cone
            if w > threshold_fraction * top:
                alpha = 2 * np.pi * a / n
                species.append(
                    LightConeSpecies(
                        sign=sign,
                        alpha=alpha,
                        weight=float(w),
                        v_eff=float(2 * np.sin(alpha / 2)),
                    )
                )
    species.sort(key=lambda sp: sp.weight, reverse=True)
    return species


def predicted_velocities(
    family: str, P: int | None = None, q: int | None = None
) -> list:
    """Closed-form effective velocities per family, ascending."""
    family, P, q = parse_family(family, P, q)
    if family == "wigner":
        if P is None or P < 2:
            raise ValueError("wigner prediction requires P >= 2")
        vals = {round(2 * np.sin(m * np.pi / P), 12) for m in range(1, P)}
        return sorted(float(v) for v in vals)
    if family == "dimer-q":
        if q is None or q < 1:
            raise ValueError("dimer-q prediction requires q >= 1")
        return sorted(float(2 * np.sin((2 * p - 1) * np.pi / (4 * q))) for p in range(1, q + 1))
    if family in ("dimer", "rainbow"):
        return [2.0]
    if family == "frozen-rainbow":
        return [0.0]
    if family == "island":
        period = 3 if P is None else P
        return [float(2 * np.sin(np.pi / period))]
    raise ValueError(f"unknown family {family!r}")


def species_traces(
    state: CorrelationMatrix,
    times,
    threshold_fraction: float = 0.1,
    config: NumericsConfig = DEFAULT_NUMERICS,
) -> list:
    """Row-1 traces of each species' own correlation component.

    The detected lines partition the off-diagonal support of F exactly
    (every state in scope puts its lines on grid offsets), so restricting
    F to one line and transforming back isolates that species' cone with
    no interference from faster species.  Returns (species, trace) pairs
    in detect_lines order.
    """
    from .evolution import EvolvedTrace

    f = form_factor(state, config)
    species = detect_lines(f, threshold_fraction)
    n = state.n_sites
    k = f.momenta
    eps = -np.cos(k)
    times = np.asarray(times, dtype=float)
    m = np.arange(n)
    mm, mpm = np.meshgrid(m, m, indexing="ij")
    plus_off = (mpm - mm) % n
    minus_off = (mm + mpm) % n
    w_left = np.exp(-1j * k)
    cols = (np.arange(n) + 1) % n
    out = []
    for sp in species:
        a = int(round(sp.alpha * n / (2 * np.pi)))
        offs = plus_off if sp.sign == 1 else minus_off
        on = (offs == a) | (offs == (n - a) % n)
        fp = np.where(on, f.matrix, 0.0)
        rows = np.empty((len(times), n), dtype=complex)
        for i, t in enumerate(times):
            u = np.exp(1j * t * eps)
            mvec = ((w_left * u) @ fp) * u.conj()
            rows[i] = np.fft.ifft(mvec)[cols]
        label = f"{state.label}:line(s={sp.sign:+d}, a={a})"
        out.append((sp, EvolvedTrace(times=times, rows=rows, n_sites=n, label=label)))
    return out


def _trimmed_arrival_fit(xs, ts, max_iter: int = 4):
    """Straight-line fit of arrival time vs distance with outlier trimming.

    Iteratively refits after dropping samples more than 3 robust sigma
    (MAD-based, floored at one time unit) from the current line; early
    transients and sporadic mis-detections are one-to-few sample events
    against dozens of clean arrivals, so the trim converges in a pass or
    two.  Returns (velocity, r_squared, n_kept).
    """
    keep = np.ones(xs.size, dtype=bool)
    for _ in range(max_iter):
        if keep.sum() < 10:
            break
        slope, icpt = np.polyfit(xs[keep], ts[keep], 1)
        resid = ts - (slope * xs + icpt)
        mad = np.median(np.abs(resid[keep] - np.median(resid[keep])))
        cut = max(3.0 * 1.4826 * mad, 1.0)
        new = np.abs(resid) <= cut
        if (new == keep).all():
            break
        keep = new
    if keep.sum() < 5:
        raise AnalysisError("too few clean arrival samples for a front fit")
    slope, icpt = np.polyfit(xs[keep], ts[keep], 1)
    if slope <= 0:
        raise AnalysisError("arrival times do not increase with distance")
    fit = slope * xs[keep] + icpt
    denom = float(np.sum((ts[keep] - ts[keep].mean()) ** 2))
    r2 = 1.0 - float(np.sum((ts[keep] - fit) ** 2)) / max(denom, 1e-30)
    return 1.0 / slope, r2, int(keep.sum())


def _arrival_velocity(
    rows,
    times,
    onset_fraction: float = 0.4,
    x_min: int = 5,
    floor_fraction: float = 0.25,
) -> float:
    """Front velocity from per-site arrival times of |C_{1,1+x}(t)|.

    Site x's arrival is the first time its signal exceeds
    ``base + onset_fraction * (max - base)`` where base is the site's own
    maximum over the causally quiet window t <= 0.45 x / 2 (no signal can
    outrun pair speed 2 on this lattice, so that window sees only static
    background such as delocalized-orbital tails).  Sites whose excess
    over baseline is below floor_fraction of the largest excess are never
    reached by the front and are skipped.  Self-normalising per site makes
    the estimate immune to the amplitude decay along the cone edge.
    """
    times = np.asarray(times, dtype=float)
    n2 = rows.shape[1] // 2
    mag = np.abs(rows[:, : n2 + 1])
    entries = []
    for x in range(x_min, n2 + 1):
        col = mag[:, x]
        quiet = times <= 0.45 * x / 2.0
        base = float(col[quiet].max()) if quiet.any() else 0.0
        entries.append((x, base, float(col.max()) - base, col))
    gexc = max(e[2] for e in entries)
    if gexc <= 0:
        raise AnalysisError("trace shows no propagating signal")
    xs, ts = [], []
    for x, base, exc, col in entries:
        if exc < floor_fraction * gexc:
            continue
        hit = np.nonzero(col >= base + onset_fraction * exc)[0]
        if hit.size == 0:
            continue
        xs.append(float(x))
        ts.append(times[hit[0]])
    if len(xs) < 10:
        raise AnalysisError("too few sites reached for a front fit")
    v, _r2, _kept = _trimmed_arrival_fit(np.asarray(xs), np.asarray(ts))
    return v


def _caustic_visibility(f: FormFactor, sp: LightConeSpecies, halfwidth: int = 3) -> float:
    """Line weight near the extremal-velocity momenta over the line maximum.

    A species' front is carried by the line entries around the spatial
    modes alpha/2 and alpha/2 + pi where |d omega/d k| peaks.  When those
    entries are much weaker than the rest of the line, the front has
    vanishing amplitude relative to the cone interior and no threshold
    detector can track it.
    """
    n = f.n_sites
    a = int(round(sp.alpha * n / (2 * np.pi)))
    j = np.arange(n)
    vis = 0.0
    line_max = 0.0
    for off in {a, (n - a) % n}:
        src = (j - off) % n if sp.sign == 1 else (off - j) % n
        vals = np.abs(f.matrix[src, j])
        line_max = max(line_max, float(vals.max()))
        for center in (off / 2.0, off / 2.0 + n / 2.0):
            c = int(round(center)) % n
            idx = (c + np.arange(-halfwidth, halfwidth + 1)) % n
            vis = max(vis, float(vals[idx].max()))
    if line_max <= 0:
        return 0.0
    return vis / line_max


def _dispersive_velocity(
    f: FormFactor,
    sp: LightConeSpecies,
    times,
) -> float:
    """Front velocity as the steepest mode-to-mode frequency slope.

    The species component restricted to a single grid offset evolves each
    spatial Fourier mode as one complex tone; fitting the unwrapped phase
    of every sufficiently strong mode gives the pair frequency omega(k)
    directly from the evolved data, and the front moves at the largest
    |d omega/d k| between adjacent modes.  This reads the group velocity
    from phases, so a front whose amplitude is suppressed at the caustic
    is measured as reliably as a strong one.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 8:
        raise AnalysisError("dispersive velocity needs at least 8 time samples")
    n = f.n_sites
    a = int(round(sp.alpha * n / (2 * np.pi)))
    k = f.momenta
    eps = -np.cos(k)
    j = np.arange(n)
    src = (j - a) % n if sp.sign == 1 else (a - j) % n
    fp = np.zeros_like(f.matrix)
    fp[src, j] = f.matrix[src, j]
    w_left = np.exp(-1j * k)
    mvec = np.empty((times.size, n), dtype=complex)
    for i, t in enumerate(times):
        u = np.exp(1j * t * eps)
        mvec[i] = ((w_left * u) @ fp) * u.conj()
    amps = np.abs(f.matrix[src, j])
    valid = amps >= 1e-6 * amps.max()
    omega = np.full(n, np.nan)
    for m in np.nonzero(valid)[0]:
        phase = np.unwrap(np.angle(mvec[:, m]))
        omega[m] = np.polyfit(times, phase, 1)[0]
    dk = 2 * np.pi / n
    v_max = 0.0
    for m in range(n):
        m2 = (m + 1) % n
        if valid[m] and valid[m2]:
            v_max = max(v_max, abs(omega[m2] - omega[m]) / dk)
    if v_max <= 0:
        raise AnalysisError("no adjacent mode pair strong enough for a slope")
    return v_max


def measure_species_velocities(
    state: CorrelationMatrix,
    times,
    onset_fraction: float = 0.4,
    threshold_fraction: float = 0.1,
    config: NumericsConfig = DEFAULT_NUMERICS,
) -> list:
    """Front velocities measured per detected species, fastest first.

    Nested cones cannot be separated by spatial masking alone (the
    interior fringes of a faster cone sit above any fixed quantile of a
    slower cone's peak), so multi-species states are measured on their
    per-line components where each front is the only feature.  States
    whose detected lines carry essentially all off-diagonal form-factor
    mass are treated as exact-line states; otherwise the line is smeared
    and only the dominant species is resolvable, measured on the raw
    trace.  A species whose line weight collapses at the extremal
    momenta (caustic visibility below 0.1) is measured dispersively via
    mode frequencies instead of amplitude thresholds.  Species with
    v_eff ~ 0 are stationary and skipped.
    """
    from .evolution import correlation_trace

    times = np.asarray(times, dtype=float)
    f = form_factor(state, config)
    species = detect_lines(f, threshold_fraction)
    moving = [sp for sp in species if sp.v_eff >= 0.05]
    if not moving:
        raise AnalysisError(f"no moving species detected for {state.label!r}")
    mag = np.abs(f.matrix).copy()
    np.fill_diagonal(mag, 0.0)
    total = float(mag.sum())
    captured = float(sum(sp.weight for sp in species))
    exact_lines = total > 0 and captured / total >= 0.98
    if not exact_lines:
        trace = correlation_trace(state, times, config=config)
        return [_arrival_velocity(trace.rows, times, onset_fraction)]
    line_traces = None
    measured = []
    for sp in moving:
        if _caustic_visibility(f, sp) < 0.1:
            measured.append(_dispersive_velocity(f, sp, times))
            continue
        if len(moving) == 1:
            rows = correlation_trace(state, times, config=config).rows
        else:
            if line_traces is None:
                line_traces = species_traces(state, times, threshold_fraction, config)
            rows = next(tr.rows for s, tr in line_traces if s == sp)
        measured.append(_arrival_velocity(rows, times, onset_fraction))
    return sorted(measured, reverse=True)


def measure_front_velocity(trace, quantile: float = 0.9) -> list:
    """Measured cone slopes from a first-row trace, fastest first.

    At each time the front position is the largest distance x (with
    x >= 5) where |C_{1,1+x}(t)| exceeds quantile times the row maximum;
    a least-squares line through (t, x_front) gives the velocity.  After
    each fit the interior of that cone (x > 0.95 v t) is masked and the
    procedure repeats, so nested slower cones are picked up one by one.

    Raises AnalysisError when the first front's fit has R^2 < 0.9.
    """
    n = trace.n_sites
    half = n // 2
    mag = np.abs(trace.rows[:, : half + 1])
    times = trace.times
    x_min = 5
    if half <= x_min:
        raise ValueError("chain too short for front detection")
    cap = np.full(len(times), float(half))
    fronts = []
    for _ in range(6):
        xs, ts = [], []
        for i, t in enumerate(times):
            hi = int(cap[i])
            if hi <= x_min:
                continue
            window = mag[i, x_min : hi + 1]
            peak = window.max()
            if peak < 1e-12:
                continue
            idx = np.nonzero(window >= quantile * peak)[0]
            xs.append(x_min + idx[-1])
            ts.append(t)
        if len(ts) < 15:
            break
        xs = np.asarray(xs, dtype=float)
        ts = np.asarray(ts, dtype=float)
        slope, intercept = np.polyfit(ts, xs, 1)
        resid = xs - (slope * ts + intercept)
        ss_tot = np.sum((xs - xs.mean()) ** 2)
        r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
        if r2 < 0.9 or slope <= 0:
            if not fronts:
                raise AnalysisError(
                    f"front fit rejected (R^2 = {r2:.3f}, slope = {slope:.3f})"
                )
            break
        if fronts and slope > 0.9 * fronts[-1]:
            break  # shadow of the previous mask, not a new front
        fronts.append(float(slope))
        cap = np.minimum(cap, 0.95 * slope * times)
        if np.all(cap <= x_min + 2):
            break
    if not fronts:
        raise AnalysisError("no front detected in trace")
    return fronts
