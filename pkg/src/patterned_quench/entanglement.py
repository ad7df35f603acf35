"""Block entanglement entropy: growth stages, saturation, data collapse.

For a Gaussian state the entropy of a site block is a function of the
eigenvalues of the block-restricted correlation matrix,

    S = -sum_i [lam_i ln lam_i + (1 - lam_i) ln(1 - lam_i)],

in nats.  After a quench S(t) grows linearly, with one slope per
quasiparticle species (S = sigma v t until each species saturates at
sigma l), so a piecewise-linear segmentation of the trace reads off the
species structure, and traces of single-cone states collapse onto one
curve in the rescaled variables (t/t_sat, S/S_sat).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.special import xlogy

from .config import NumericsConfig, DEFAULT_NUMERICS
from .errors import AnalysisError, NumericalInvariantError
from .lattice import ChainSpec, propagator
from .states import CorrelationMatrix


@dataclass(frozen=True)
class Stage:
    """One linear-growth segment of an entropy trace."""

    t_start: float
    t_end: float
    slope: float
    intercept: float = 0.0


@dataclass(frozen=True)
class QuasiparticleAnsatz:
    """Single-species entropy ansatz: S = sigma_rate * v * t, capped at
    sigma_rate * block_length once the species has saturated."""

    sigma_rate: float
    v: float
    block_length: int

    @property
    def t_sat(self) -> float:
        return self.block_length / self.v

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        return self.sigma_rate * np.minimum(self.v * t, float(self.block_length))


@dataclass(frozen=True)
class EntropyTrace:
    block_length: int
    times: np.ndarray
    entropies: np.ndarray
    stages: list
    t_sat: float | None
    S_sat: float | None
    label: str = ""


def _block_range(block, n: int):
    """Accept an int l (leftmost block 1..l) or a 1-based (start, stop) pair."""
    if isinstance(block, (int, np.integer)):
        start, stop = 1, int(block)
    else:
        start, stop = block
    if not (1 <= start <= stop <= n):
        raise ValueError(f"block ({start},{stop}) not a nonempty range within 1..{n}")
    return start, stop


def block_entropy(
    state: CorrelationMatrix, block, config: NumericsConfig = DEFAULT_NUMERICS
) -> float:
    """Entanglement entropy (nats) of a contiguous site block."""
    start, stop = _block_range(block, state.n_sites)
    sub = state.matrix[start - 1 : stop, start - 1 : stop]
    lam = np.linalg.eigvalsh(sub)
    return _entropy_from_occupations(lam, config, context=state.label)


def _entropy_from_occupations(lam, config, context=""):
    clamp = config.occupation_clamp
    if lam.min() < -clamp or lam.max() > 1 + clamp:
        raise NumericalInvariantError(
            f"block eigenvalue outside [0,1] window for {context!r}: "
            f"range [{lam.min():.3e}, {lam.max():.3e}]"
        )
    lam = np.clip(lam, 0.0, 1.0)
    return float(-np.sum(xlogy(lam, lam) + xlogy(1 - lam, 1 - lam)))


def entropy_trace(
    state: CorrelationMatrix,
    block_length: int,
    times,
    config: NumericsConfig = DEFAULT_NUMERICS,
) -> EntropyTrace:
    """S(t) for the leftmost block {1..l} over an ascending time grid.

    Only the l x N slice of the propagator is applied to C, so the sweep
    costs O(l N^2) per sample.  Stage detection runs when there are
    enough samples; saturation data is left as None when the trace has
    not reached a plateau (e.g. slow species still growing at t_max).
    """
    times = np.asarray(times, dtype=float)
    n = state.n_sites
    if not 0 < block_length < n:
        raise ValueError(f"block length must lie in 1..{n - 1}, got {block_length}")
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a nonempty ascending sequence")
    entropies = np.empty(len(times))
    for i, t in enumerate(times):
        u_blk = propagator(ChainSpec(n), t, config).matrix[:block_length]
        sub = u_blk @ state.matrix @ u_blk.conj().T
        lam = np.linalg.eigvalsh(sub)
        entropies[i] = _entropy_from_occupations(lam, config, context=state.label)
    try:
        t_sat, s_sat = saturation(times, entropies, config)
    except AnalysisError:
        t_sat, s_sat = None, None
    stages = detect_stages(times, entropies, config) if len(times) >= 20 else []
    return EntropyTrace(
        block_length=int(block_length),
        times=times,
        entropies=entropies,
        stages=stages,
        t_sat=t_sat,
        S_sat=s_sat,
        label=state.label,
    )


# ---------------------------------------------------------------------------
# Trace analysis


def _line_fit(t, s):
    slope, intercept = np.polyfit(t, s, 1)
    resid = s - (slope * t + intercept)
    return slope, intercept, float(np.sum(resid**2))


def _knot_fit(times, entropies, knots):
    """Non-negative least squares for S0 + sum_i sigma_i min(t, tau_i)."""
    cols = [np.ones_like(times)] + [np.minimum(times, tau) for tau in knots]
    design = np.column_stack(cols)
    coef, _ = nnls(design, entropies)
    resid = entropies - design @ coef
    return coef, float(resid @ resid)


def detect_stages(times, entropies, config: NumericsConfig = DEFAULT_NUMERICS) -> list:
    """Piecewise-linear growth stages of an entropy trace.

    Fits the saturating-component model S0 + sum_i sigma_i min(t, tau_i)
    (each component grows at rate sigma_i until its own saturation time
    tau_i; non-negative rates make the total slope non-increasing, which
    is what entropy growth from independently saturating species looks
    like).  Knots are chosen greedily from the sample grid while adding
    one improves the squared residual by more than the configured
    fraction; components contributing less than the stage weight
    threshold of the total growth (sub-leading slow modes that round off
    a knee but never dominate) are absorbed rather than counted.  The
    returned stages span consecutive knots, carry the model slope and
    intercept, and exclude everything after the last significant knot
    (the approach to the plateau).  Near-flat trailing stages are
    dropped as saturation.
    """
    times = np.asarray(times, dtype=float)
    entropies = np.asarray(entropies, dtype=float)
    if len(times) < 20:
        raise ValueError(f"need at least 20 samples, got {len(times)}")
    min_n = config.segment_min_samples
    improvement = config.segment_min_improvement

    n = len(times)
    t_end = float(times[-1])
    cand_idx = range(min_n, n - min_n)

    def fit_for(idxs):
        # a knot at the last sample is the never-saturating (pure line) part
        knots = sorted(float(times[i]) for i in idxs) + [t_end]
        coef, sse = _knot_fit(times, entropies, knots)
        return coef, sse, knots

    chosen_idx: list[int] = []
    coef, sse, chosen = fit_for(chosen_idx)
    while len(chosen_idx) < 4 and sse > 1e-20:
        best = None
        for i in cand_idx:
            if any(abs(i - j) < min_n for j in chosen_idx):
                continue
            _, s_try, _ = fit_for(chosen_idx + [i])
            if best is None or s_try < best[1]:
                best = (i, s_try)
        if best is None or best[1] >= (1.0 - improvement) * sse:
            break
        chosen_idx.append(best[0])
        for _ in range(2):  # let each knot slide to its best grid position
            moved = False
            for pos in range(len(chosen_idx)):
                others = chosen_idx[:pos] + chosen_idx[pos + 1 :]
                cur_i, cur_sse = chosen_idx[pos], None
                for i in cand_idx:
                    if any(abs(i - j) < min_n for j in others):
                        continue
                    _, s_try, _ = fit_for(others + [i])
                    if cur_sse is None or s_try < cur_sse:
                        cur_i, cur_sse = i, s_try
                if cur_i != chosen_idx[pos]:
                    chosen_idx[pos] = cur_i
                    moved = True
            if not moved:
                break
        coef, sse, chosen = fit_for(chosen_idx)
    # raw intervals between consecutive knots; components j.. still grow
    s0, sigma = float(coef[0]), coef[1:]
    raw = []
    prev = float(times[0])
    level = s0 + float(sigma.sum()) * prev  # model value at the first sample
    for j, tau in enumerate(chosen):
        slope = float(sigma[j:].sum())
        stop = float(min(tau, t_end))
        if stop > prev and slope > 0:
            raw.append((prev, stop, slope * (stop - prev), level))
        level += slope * (stop - prev)
        prev = stop
    total_growth = sum(r[2] for r in raw)
    if total_growth <= 1e-10 * max(1.0, float(np.max(np.abs(entropies)))):
        return []
    # significance: each reported stage must carry a real share of the
    # growth.  Weak interior pieces (the rounded corner of a knee) fold
    # into the following stage; weak trailing pieces (the levelling-off
    # into the plateau) are dropped rather than reported as growth.
    theta = config.stage_weight_threshold * total_growth
    merged = []
    k = 0
    while k < len(raw):
        lo_t, hi_t, ds, lvl = raw[k]
        while ds < theta and k + 1 < len(raw):
            k += 1
            hi_t = raw[k][1]
            ds += raw[k][2]
        merged.append((lo_t, hi_t, ds, lvl))
        k += 1
    while merged and merged[-1][2] < theta:
        merged.pop()
    if not merged:
        return []
    stages = [
        Stage(
            t_start=lo_t,
            t_end=hi_t,
            slope=ds / (hi_t - lo_t),
            intercept=lvl - (ds / (hi_t - lo_t)) * lo_t,
        )
        for lo_t, hi_t, ds, lvl in merged
    ]
    max_slope = max(abs(st.slope) for st in stages)
    while stages and abs(stages[-1].slope) < config.flat_slope_fraction * max_slope:
        stages.pop()
    return stages


def ramp_departure_time(
    times,
    entropies,
    stages,
    t_lo: float = 1.0,
    window_fraction: float = 0.7,
    noise_mult: float = 4.0,
    persistence: int = 2,
):
    """Time at which S(t) first leaves its opening linear ramp.

    A line is refit to the early part of the first stage (between t_lo
    and window_fraction of the stage end, clear of both the initial
    transient and the rounded knee); the departure is the interpolated
    time where the data first stays below that line by more than
    noise_mult times the fit residual, for `persistence` consecutive
    samples.  This marks where the fastest entropy carriers stop
    contributing, less biased than the fitted knot, which the rounded
    corner pulls late.  Returns None when the trace never departs.
    """
    if not stages:
        return None
    times = np.asarray(times, dtype=float)
    entropies = np.asarray(entropies, dtype=float)
    hi = window_fraction * stages[0].t_end
    window = (times >= t_lo) & (times <= hi)
    if window.sum() < 6:
        return None
    slope, icpt = np.polyfit(times[window], entropies[window], 1)
    line = slope * times + icpt
    rms = float(np.sqrt(np.mean((entropies[window] - line[window]) ** 2)))
    delta = max(noise_mult * rms, 1e-3 * float(entropies.max() - entropies.min()))
    deficit = line - entropies
    run = 0
    for i in range(int(np.searchsorted(times, hi)), len(times)):
        if deficit[i] > delta:
            run += 1
            if run >= persistence:
                j = i - persistence + 1
                d0, d1 = deficit[j - 1], deficit[j]
                frac = (delta - d0) / (d1 - d0) if d1 > d0 else 1.0
                return float(times[j - 1] + frac * (times[j] - times[j - 1]))
        else:
            run = 0
    return None


def saturation(times, entropies, config: NumericsConfig = DEFAULT_NUMERICS):
    """(t_sat, S_sat) from the trailing plateau of a trace.

    S_sat is the plateau mean; t_sat the first time S exceeds 95% of it.
    Raises AnalysisError when the trailing window is still drifting —
    extend t_max, but keep it below (N - l)/v_fastest, where the
    quickest fronts have wrapped around and entanglement turns down
    again.
    """
    times = np.asarray(times, dtype=float)
    entropies = np.asarray(entropies, dtype=float)
    n_tail = max(2, int(np.ceil(config.plateau_window_fraction * len(times))))
    tail = entropies[-n_tail:]
    mean = float(tail.mean())
    if mean <= 0 or (tail.max() - tail.min()) > config.plateau_flatness * mean:
        raise AnalysisError(
            "no saturation plateau in the trailing window; extend t_max "
            "(stay below the wrap-around time (N - l)/v_fastest)"
        )
    above = np.nonzero(entropies > 0.95 * mean)[0]
    return float(times[above[0]]), mean


def rescale_traces(traces):
    """Interpolate (t/t_sat, S/S_sat) onto a shared grid over [0, 1.5].

    Returns (grid, curves); every trace must carry saturation data.
    """
    for tr in traces:
        if tr.t_sat is None or tr.S_sat is None:
            raise AnalysisError(
                f"trace {tr.label!r} lacks saturation data; cannot rescale"
            )
    grid = np.linspace(0.0, 1.5, 301)
    curves = [
        np.interp(grid, tr.times / tr.t_sat, tr.entropies / tr.S_sat) for tr in traces
    ]
    return grid, curves


def rescaled_collapse(traces) -> float:
    """Max pairwise deviation of rescaled traces (t/t_sat, S/S_sat).

    The deviation is taken over the growth window t/t_sat in [0.05, 0.95].
    """
    grid, curves = rescale_traces(traces)
    window = (grid >= 0.05) & (grid <= 0.95)
    dev = 0.0
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            dev = max(dev, float(np.max(np.abs(curves[i][window] - curves[j][window]))))
    return dev
