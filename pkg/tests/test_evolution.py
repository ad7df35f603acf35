import numpy as np
import pytest

from patterned_quench.evolution import (
    correlation_trace,
    dimer_exact,
    dimer_exact_matrix,
    evolve,
    time_average,
    wrap_time,
)
from patterned_quench.lattice import ChainSpec, dispersion, valid_momenta
from patterned_quench.states import make_state


def quadruple_sum_evolution(c0: np.ndarray, t: float) -> np.ndarray:
    """Independent oracle: evolve via the explicit double momentum sum.

    C_{j,j'}(t) = (1/N^2) sum_{k,k'} e^{-i(jk - j'k')} e^{it(eps_k - eps_k')}
                  sum_{l,l'} e^{i(lk - l'k')} C_{l,l'}(0)
    evaluated with plain Python loops over the momentum grid.
    """
    n = c0.shape[0]
    k = valid_momenta(ChainSpec(n))
    eps = dispersion(k)
    sites = np.arange(n)
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            inner = np.outer(np.exp(1j * sites * k[a]), np.exp(-1j * sites * k[b]))
            f_ab = np.sum(inner * c0)
            phase = np.exp(1j * t * (eps[a] - eps[b]))
            out += (
                np.outer(np.exp(-1j * sites * k[a]), np.exp(1j * sites * k[b]))
                * phase
                * f_ab
            )
    return out / n**2


def test_evolve_identity_at_t0(states240):
    state = states240["dimer"]
    assert np.max(np.abs(evolve(state, 0.0).matrix - state.matrix)) < 1e-12


def test_frozen_rainbow_is_stationary(states240):
    state = states240["frozen-rainbow"]
    for t in (1.0, 7.3, 40.0):
        assert np.max(np.abs(evolve(state, t).matrix - state.matrix)) < 1e-9


def test_evolve_matches_quadruple_sum_small_n():
    for family, n in (("dimer", 8), ("dimer-1", 8), ("island-3", 12)):
        state = make_state(family, ChainSpec(n))
        got = evolve(state, 0.7).matrix
        want = quadruple_sum_evolution(state.matrix, 0.7)
        assert np.max(np.abs(got - want)) < 1e-10


def test_dimer_exact_initial_condition():
    spec = ChainSpec(12)
    c0 = make_state("dimer", spec).matrix
    got = np.array(
        [[dimer_exact(j, jp, 0.0, spec) for jp in range(1, 13)] for j in range(1, 13)]
    )
    assert np.max(np.abs(got - c0)) < 1e-12


def test_dimer_exact_matches_evolve_large_n(states240, spec240):
    state = states240["dimer"]
    for t in (0.7, 17.3):
        got = dimer_exact_matrix(spec240, t)
        want = evolve(state, t).matrix
        assert np.max(np.abs(got - want)) < 1e-9


def test_time_average_remembers_bonds(states240):
    # the bond entries never relax to the thermal value: their long-time
    # average stays at 1/4, while off-bond entries average to zero
    state = states240["dimer"]
    nn = time_average(state, 1, 2, T=2000.0, samples=4001)
    nnn = time_average(state, 1, 3, T=2000.0, samples=4001)
    assert abs(nn - 0.25) < 0.01
    assert abs(nnn) < 0.01


def test_time_average_frozen_bond(states240):
    state = states240["frozen-rainbow"]
    # site 1 is bonded to site N with sign +1; the state is stationary
    avg = time_average(state, 1, 240, T=50.0, samples=501)
    assert abs(avg - 0.5) < 1e-10


def test_time_average_input_validation(states240):
    with pytest.raises(ValueError):
        time_average(states240["dimer"], 1, 2, T=0.0, samples=10)
    with pytest.raises(ValueError):
        time_average(states240["dimer"], 1, 2, T=10.0, samples=1)


def test_correlation_trace_row0(states240):
    state = states240["dimer"]
    trace = correlation_trace(state, [0.0])
    assert np.max(np.abs(trace.rows[0] - state.matrix[0])) < 1e-12


def test_correlation_trace_density_constant(states240):
    for family in ("dimer", "island-3"):
        trace = correlation_trace(states240[family], [1.0, 5.0, 20.0])
        assert np.max(np.abs(np.abs(trace.rows[:, 0]) - 0.5)) < 1e-10


def test_correlation_trace_validates_times(states240):
    with pytest.raises(ValueError):
        correlation_trace(states240["dimer"], [])
    with pytest.raises(ValueError):
        correlation_trace(states240["dimer"], [1.0, 1.0, 2.0])


def test_evolution_preserves_purity_and_spectrum(states240):
    state = states240["dimer-2"]
    c_t = evolve(state, 20.0).matrix
    assert np.max(np.abs(c_t @ c_t - c_t)) < 1e-8
    lam0 = np.sort(np.linalg.eigvalsh(state.matrix))
    lam_t = np.sort(np.linalg.eigvalsh(c_t))
    assert np.max(np.abs(lam0 - lam_t)) < 1e-8


def test_wrap_time():
    assert wrap_time(240, 2.0) == pytest.approx(60.0)
    with pytest.raises(ValueError):
        wrap_time(240, 0.0)
