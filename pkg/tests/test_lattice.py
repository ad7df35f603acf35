import numpy as np
import pytest

from patterned_quench.lattice import (
    ChainSpec,
    dispersion,
    group_velocity,
    propagator,
    valid_momenta,
)


def test_valid_momenta_small_grids():
    assert np.allclose(valid_momenta(ChainSpec(4)), [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert np.allclose(valid_momenta(ChainSpec(2)), [0, np.pi])


def test_valid_momenta_large_grid():
    k = valid_momenta(ChainSpec(240))
    assert len(k) == 240
    assert k[0] == 0.0
    assert np.all(k < 2 * np.pi)
    assert np.allclose(np.diff(k), 2 * np.pi / 240)


def test_chain_spec_rejects_tiny_rings():
    with pytest.raises(ValueError):
        ChainSpec(1)


def test_dispersion_values():
    assert dispersion(0.0) == -1.0
    assert dispersion(np.pi) == pytest.approx(1.0)
    assert dispersion(np.pi / 2) == pytest.approx(0.0, abs=1e-15)


def test_particle_hole_relation_on_even_grid():
    # eps(k + pi) = -eps(k) for every grid momentum when N is even
    for n in (2, 8, 240):
        eps = dispersion(valid_momenta(ChainSpec(n)))
        assert np.allclose(np.roll(eps, -n // 2), -eps, atol=1e-12)


def test_group_velocity_values():
    assert group_velocity(2) == pytest.approx(1.0)
    assert group_velocity(3) == pytest.approx(np.sin(np.pi / 3))
    assert group_velocity(4) == pytest.approx(np.sin(np.pi / 4))


def test_group_velocity_rejects_small_period():
    with pytest.raises(ValueError):
        group_velocity(1)


def test_propagator_identity_at_t0():
    u = propagator(ChainSpec(12), 0.0).matrix
    assert np.max(np.abs(u - np.eye(12))) < 1e-12


def test_propagator_two_site_hand_values():
    # two momenta 0 and pi with energies -1 and +1:
    # P = [[cos t, -i sin t], [-i sin t, cos t]]
    t = 0.83
    u = propagator(ChainSpec(2), t).matrix
    expect = np.array(
        [[np.cos(t), -1j * np.sin(t)], [-1j * np.sin(t), np.cos(t)]]
    )
    assert np.max(np.abs(u - expect)) < 1e-12


def test_propagator_unitary_at_random_times(rng):
    spec = ChainSpec(60)
    for t in rng.uniform(0.0, 100.0, size=5):
        u = propagator(spec, float(t)).matrix
        assert np.max(np.abs(u @ u.conj().T - np.eye(60))) < 1e-10


def test_propagator_is_circulant():
    u = propagator(ChainSpec(17), 2.3).matrix
    rolled = np.roll(np.roll(u, 1, axis=0), 1, axis=1)
    # circulant fill reuses the same kernel row, so the match is exact
    assert np.array_equal(u, rolled)


def test_propagator_inverse_is_time_reversal():
    spec = ChainSpec(30)
    u = propagator(spec, 7.7).matrix
    v = propagator(spec, -7.7).matrix
    assert np.max(np.abs(u @ v - np.eye(30))) < 1e-10
