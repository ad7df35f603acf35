import numpy as np
import pytest

from patterned_quench.errors import DegenerateFermiLevelError
from patterned_quench.lattice import ChainSpec, dispersion, valid_momenta
from patterned_quench.states import (
    BondPattern,
    IslandSpec,
    dimer_pattern,
    dimer_q_pattern,
    frozen_rainbow_pattern,
    invariant_report,
    island_state,
    make_state,
    parse_family,
    rainbow_pattern,
    symmetric_eigendecomposition,
    validate_state,
    vbs_state,
    wigner_state,
)


# ---------------------------------------------------------------------------
# Wigner crystals


def test_wigner_small_diagonals():
    assert np.allclose(wigner_state(ChainSpec(4), 2).matrix, np.diag([0, 1, 0, 1]))
    assert np.allclose(wigner_state(ChainSpec(6), 3).matrix, np.diag([0, 0, 1, 0, 0, 1]))


def test_wigner_filling():
    c = wigner_state(ChainSpec(240), 5).matrix
    assert np.trace(c).real == pytest.approx(48.0)


def test_wigner_rejects_nondivisible():
    with pytest.raises(ValueError):
        wigner_state(ChainSpec(7), 3)


# ---------------------------------------------------------------------------
# Bond patterns and VBS correlation matrices


def test_single_bond_matrix():
    pattern = BondPattern(n_sites=2, bonds=((1, 2, -1),))
    c = vbs_state(pattern).matrix
    assert np.allclose(c, [[0.5, -0.5], [-0.5, 0.5]])


def test_dimer_matrix_n4():
    c = vbs_state(dimer_pattern(ChainSpec(4))).matrix
    expect = 0.5 * np.eye(4)
    for a, b in ((0, 1), (2, 3)):
        expect[a, b] = expect[b, a] = 0.5
    assert np.allclose(c, expect)


def test_dimer_q1_signs():
    # q = 1 alternates the bond sign with every bond: p = 1..4 -> -,+,-,+
    pattern = dimer_q_pattern(ChainSpec(8), 1)
    signs = [s for (_, _, s) in pattern.bonds]
    assert signs == [-1, 1, -1, 1]


def test_dimer_q_translation_period():
    # the sign pattern repeats after 4q sites (2q bonds)
    q = 2
    pattern = dimer_q_pattern(ChainSpec(32), q)
    signs = [s for (_, _, s) in pattern.bonds]
    for p in range(len(signs) - 2 * q):
        assert signs[p] == signs[p + 2 * q]


def test_rainbow_bonds_and_signs():
    pattern = rainbow_pattern(ChainSpec(6))
    assert sorted(pattern.bonds) == [(1, 6, 1), (2, 5, -1), (3, 4, 1)]
    pattern4 = rainbow_pattern(ChainSpec(4))
    assert sorted(pattern4.bonds) == [(1, 4, -1), (2, 3, 1)]


def test_frozen_rainbow_all_plus():
    pattern = frozen_rainbow_pattern(ChainSpec(6))
    assert sorted(pattern.bonds) == [(1, 6, 1), (2, 5, 1), (3, 4, 1)]


def test_partner_map_is_fixed_point_free_involution():
    for pattern in (
        dimer_pattern(ChainSpec(12)),
        dimer_q_pattern(ChainSpec(24), 3),
        rainbow_pattern(ChainSpec(10)),
    ):
        for site in range(1, pattern.n_sites + 1):
            other = pattern.partner(site)
            assert other != site
            assert pattern.partner(other) == site


def test_pattern_rejects_reused_site():
    with pytest.raises(ValueError):
        BondPattern(n_sites=4, bonds=((1, 2, 1), (2, 3, 1)))


def test_pattern_rejects_uncovered_site():
    with pytest.raises(ValueError):
        BondPattern(n_sites=4, bonds=((1, 2, 1),))


def test_vbs_invariants():
    for pattern in (dimer_pattern(ChainSpec(16)), rainbow_pattern(ChainSpec(16))):
        c = vbs_state(pattern).matrix
        assert np.max(np.abs(c - c.conj().T)) < 1e-12
        assert np.max(np.abs(c @ c - c)) < 1e-12
        assert np.allclose(np.diag(c), 0.5)
        # exactly two entries of magnitude 1/2 per row
        assert np.allclose(np.sum(np.abs(c), axis=1), 1.0)


# ---------------------------------------------------------------------------
# Eigensolver


def test_eigendecomposition_two_site():
    a = np.array([[0.0, -0.5], [-0.5, 0.0]])
    dec = symmetric_eigendecomposition(a)
    assert np.allclose(dec.eigenvalues, [-0.5, 0.5])


def test_eigendecomposition_identity():
    dec = symmetric_eigendecomposition(np.eye(5))
    assert np.allclose(dec.eigenvalues, 1.0)


def test_eigendecomposition_matches_ring_dispersion():
    # the pure-ring hopping matrix has eigenvalues -cos k over the grid
    n = 8
    a = np.zeros((n, n))
    for j in range(n):
        a[j, (j + 1) % n] = a[(j + 1) % n, j] = -0.5
    dec = symmetric_eigendecomposition(a)
    expect = np.sort(dispersion(valid_momenta(ChainSpec(n))))
    assert np.allclose(np.sort(dec.eigenvalues), expect, atol=1e-9)


def test_eigendecomposition_residuals(rng):
    a = rng.normal(size=(10, 10))
    a = (a + a.T) / 2
    dec = symmetric_eigendecomposition(a)
    v = dec.eigenvectors
    assert np.max(np.abs(v.T @ v - np.eye(10))) < 1e-10
    resid = a @ v - v * dec.eigenvalues
    assert np.max(np.abs(resid)) < 1e-9 * np.linalg.norm(a)


def test_eigendecomposition_rejects_asymmetric():
    with pytest.raises(ValueError):
        symmetric_eigendecomposition(np.array([[0.0, 1.0], [0.5, 0.0]]))


# ---------------------------------------------------------------------------
# Island states


def test_island_half_filling_diagonal(states240):
    c = states240["island-3"].matrix
    assert np.max(np.abs(np.diag(c) - 0.5)) < 1e-9


def test_island_even_period_decouples():
    # with the weak bonds nearly cut, even P leaves one filled orbital
    # per island and the correlation matrix splits into 2x2 blocks
    c = island_state(ChainSpec(8), IslandSpec(P=2, gamma=1 - 1e-6)).matrix
    block = np.full((2, 2), 0.5)
    for i in range(4):
        assert np.max(np.abs(c[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] - block)) < 1e-6
    off = c.copy()
    for i in range(4):
        off[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = 0.0
    assert np.max(np.abs(off)) < 1e-5


def test_island_odd_period_shares_a_zero_mode():
    # an odd-P island hosts a zero-energy orbital; at half filling one
    # electron fills the symmetric combination across neighbouring
    # islands, so nearly-cut bonds still leave O(1) inter-island
    # coherence (1/4 here) and the matrix is NOT block diagonal
    c = island_state(ChainSpec(6), IslandSpec(P=3, gamma=1 - 1e-6)).matrix
    assert np.max(np.abs(np.diag(c) - 0.5)) < 1e-9
    rolled = np.roll(np.roll(c, 3, axis=0), 3, axis=1)
    assert np.max(np.abs(c - rolled)) < 1e-8
    assert np.max(np.abs(c[:3, 3:])) == pytest.approx(0.25, abs=1e-6)


def test_island_degenerate_fermi_level_raises():
    # gamma ~ 0 leaves the ring essentially uniform; at N = 8 the Fermi
    # level then falls on a degenerate momentum pair
    with pytest.raises(DegenerateFermiLevelError):
        island_state(ChainSpec(8), IslandSpec(P=2, gamma=1e-12))


def test_island_spec_validation():
    with pytest.raises(ValueError):
        IslandSpec(P=1)
    with pytest.raises(ValueError):
        IslandSpec(P=3, gamma=1.0)
    with pytest.raises(ValueError):
        IslandSpec(P=3, gamma=0.0)


# ---------------------------------------------------------------------------
# Family parsing and validation


def test_parse_family_aliases():
    assert parse_family("dimer-2", None, None) == ("dimer-q", None, 2)
    assert parse_family("island-3", None, None)[0] == "island"
    assert parse_family("wigner-4", None, None)[:2] == ("wigner", 4)


def test_make_state_labels(states240):
    for label, state in states240.items():
        assert state.label == label


def test_make_state_matches_explicit_params(spec240):
    a = make_state("dimer-2", spec240).matrix
    b = make_state("dimer-q", spec240, q=2).matrix
    assert np.array_equal(a, b)


def test_make_state_unknown_family(spec240):
    with pytest.raises(ValueError):
        make_state("spiral", spec240)


def test_validate_state_accepts_all(states240):
    for state in states240.values():
        validate_state(state)


def test_invariant_report_flags_partial_filling():
    report = invariant_report(make_state("wigner-3", ChainSpec(9)))
    assert report["hermitian_pass"]
    assert report["spectrum_pass"]
    assert report["purity_pass"]
    assert not report["half_filling"]


def test_half_filling_property(states240):
    for label, state in states240.items():
        expect = not label.startswith("wigner")
        assert state.half_filling == expect
