"""Initial-state constructors: patterned correlation matrices.

All states are Slater determinants characterized by their two-point
correlation matrix ``C_{j,j'} = <c_j^dagger c_j'>``:

* Wigner crystals of period P: occupied sites at multiples of P.
* Valence-bond states (VBS): every site paired into a bond with sign
  eta, giving ``C = (1/2)(delta_{j,j'} + eta_{p(j)} delta_{j,sigma(j')})``.
  Instances: dimer, sign-alternating dimer-q, rainbow, frozen rainbow.
* Island-P: half-filled ground state of the ring with every P-th
  hopping amplitude weakened by a factor (1 - gamma).

Site labels are 1-based in the public API (bond tables, block ranges);
matrices are stored with the usual 0-based numpy indexing.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import NumericsConfig, DEFAULT_NUMERICS
from .errors import DegenerateFermiLevelError, NumericalInvariantError
from .lattice import ChainSpec


# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class BondPattern:
    """A perfect matching of the N sites into signed bonds.

    ``bonds`` is a list of (left, right, sign) triples with 1-based site
    labels and sign +-1.  The partner map sigma sends each site to the
    other end of its bond; it must be a fixed-point-free involution
    covering every site exactly once.
    """

    n_sites: int
    bonds: tuple

    def __post_init__(self):
        seen = {}
        for (a, b, s) in self.bonds:
            if s not in (-1, 1):
                raise ValueError(f"bond sign must be +-1, got {s}")
            for site in (a, b):
                if not 1 <= site <= self.n_sites:
                    raise ValueError(f"site {site} outside 1..{self.n_sites}")
                if site in seen:
                    raise ValueError(f"site {site} appears in more than one bond")
                seen[site] = True
            if a == b:
                raise ValueError(f"bond ({a},{b}) pairs a site with itself")
        if len(seen) != self.n_sites:
            missing = [j for j in range(1, self.n_sites + 1) if j not in seen]
            raise ValueError(f"sites not covered by any bond: {missing}")

    def partner(self, site: int) -> int:
        """sigma(site): the other end of the bond containing ``site``."""
        for (a, b, _) in self.bonds:
            if a == site:
                return b
            if b == site:
                return a
        raise ValueError(f"site {site} not in pattern")

    def sign_of(self, site: int) -> int:
        """eta of the bond containing ``site``."""
        for (a, b, s) in self.bonds:
            if site in (a, b):
                return s
        raise ValueError(f"site {site} not in pattern")


@dataclass(frozen=True)
class CorrelationMatrix:
    """Two-point correlation matrix of a Gaussian state, plus a label."""

    matrix: np.ndarray
    label: str = ""

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]

    @property
    def half_filling(self) -> bool:
        """True when every diagonal entry is 1/2 (site-uniform density)."""
        return bool(np.allclose(np.diag(self.matrix).real, 0.5, atol=1e-9)
                    and np.max(np.abs(np.diag(self.matrix).imag)) < 1e-9)


@dataclass(frozen=True)
class IslandSpec:
    """Parameters of the island-P construction.

    gamma in (0, 1) weakens every P-th hopping amplitude to -(1-gamma)/2;
    the paper-style default gamma = 1 - 1e-3 keeps the weak bonds barely
    alive, which avoids a degenerate Fermi level.
    """

    P: int
    gamma: float = 1.0 - 1e-3

    def __post_init__(self):
        if not isinstance(self.P, (int, np.integer)) or self.P < 2:
            raise ValueError(f"island period must be an integer >= 2, got {self.P!r}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie strictly in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class SymmetricEigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


# ---------------------------------------------------------------------------
# Bond patterns


def dimer_pattern(spec: ChainSpec) -> BondPattern:
    """Nearest-neighbour bonds (2p-1, 2p), all signs +1."""
    n = spec.n_sites
    if n % 2:
        raise ValueError(f"dimer pattern needs an even chain, got N={n}")
    bonds = tuple((2 * p - 1, 2 * p, 1) for p in range(1, n // 2 + 1))
    return BondPattern(n, bonds)


def dimer_q_pattern(spec: ChainSpec, q: int) -> BondPattern:
    """Dimer bonds with signs alternating in groups of q.

    Bond p carries sign ``(-1)^(floor(p/q) mod 2)``, so for q=1 the signs
    read (-,+,-,+,...) and for q=2 they read (+,-,-,+,+,-,-,...): a
    single leading + bond, then alternating blocks of two.  The pattern
    repeats every 4q sites, which is why N must be a multiple of 4q.
    """
    n = spec.n_sites
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise ValueError(f"q must be an integer >= 1, got {q!r}")
    if n % (4 * q):
        raise ValueError(f"dimer-{q} pattern needs N divisible by {4 * q}, got N={n}")
    bonds = tuple(
        (2 * p - 1, 2 * p, (-1) ** ((p // q) % 2)) for p in range(1, n // 2 + 1)
    )
    return BondPattern(n, bonds)


def rainbow_pattern(spec: ChainSpec) -> BondPattern:
    """Concentric bonds (i, N+1-i) with alternating signs (-1)^(N/2+i)."""
    n = spec.n_sites
    if n % 2:
        raise ValueError(f"rainbow pattern needs an even chain, got N={n}")
    bonds = tuple(
        (i, n + 1 - i, (-1) ** (n // 2 + i)) for i in range(1, n // 2 + 1)
    )
    return BondPattern(n, bonds)


def frozen_rainbow_pattern(spec: ChainSpec) -> BondPattern:
    """Concentric bonds (i, N+1-i), all signs +1 (exact eigenstate)."""
    n = spec.n_sites
    if n % 2:
        raise ValueError(f"rainbow pattern needs an even chain, got N={n}")
    bonds = tuple((i, n + 1 - i, 1) for i in range(1, n // 2 + 1))
    return BondPattern(n, bonds)


# ---------------------------------------------------------------------------
# State constructors


def vbs_state(pattern: BondPattern) -> CorrelationMatrix:
    """Correlation matrix of a valence-bond state.

    C = (1/2) I plus eta/2 at the two (j, sigma(j)) positions of every
    bond; each row has exactly two nonzero entries.
    """
    n = pattern.n_sites
    c = np.eye(n, dtype=complex) / 2
    for (a, b, s) in pattern.bonds:
        c[a - 1, b - 1] = s / 2
        c[b - 1, a - 1] = s / 2
    return CorrelationMatrix(c, label=f"vbs-{n}")


def wigner_state(spec: ChainSpec, P: int) -> CorrelationMatrix:
    """Wigner crystal of period P: sites P, 2P, ..., N occupied."""
    n = spec.n_sites
    if not isinstance(P, (int, np.integer)) or P < 2:
        raise ValueError(f"Wigner period must be an integer >= 2, got {P!r}")
    if n % P:
        raise ValueError(f"Wigner-{P} state needs N divisible by {P}, got N={n}")
    occ = np.zeros(n)
    occ[P - 1 :: P] = 1.0
    return CorrelationMatrix(np.diag(occ).astype(complex), label=f"wigner-{P}")


def symmetric_eigendecomposition(
    a: np.ndarray, config: NumericsConfig = DEFAULT_NUMERICS
) -> SymmetricEigenDecomposition:
    """Eigendecomposition of a real symmetric matrix, ascending order.

    Validates the symmetry of the input and the residual/orthonormality
    of the output against the shared tolerances.
    """
    a = np.asarray(a, dtype=float)
    scale = max(np.max(np.abs(a)), 1.0)
    if np.max(np.abs(a - a.T)) > config.eigensolver_tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails
        raise NumericalInvariantError(f"eigendecomposition did not converge: {exc}")
    resid = np.max(np.abs(a @ vecs - vecs * vals))
    if resid > 1e-9 * scale:
        raise NumericalInvariantError(f"eigenvector residual {resid:.3e} too large")
    ortho = np.max(np.abs(vecs.T @ vecs - np.eye(a.shape[0])))
    if ortho > 1e-10:
        raise NumericalInvariantError(f"eigenvectors not orthonormal: {ortho:.3e}")
    return SymmetricEigenDecomposition(vals, vecs)


def island_hopping_matrix(spec: ChainSpec, island: IslandSpec) -> np.ndarray:
    """Single-particle hopping matrix with every P-th bond weakened.

    Uniform amplitude -1/2 on nearest-neighbour bonds, except
    -(1-gamma)/2 on the bonds (P, P+1), (2P, 2P+1), ..., wrapping
    periodically, so the ring splits into islands of P sites as
    gamma -> 1.
    """
    n, p = spec.n_sites, island.P
    if n % p:
        raise ValueError(f"island-{p} state needs N divisible by {p}, got N={n}")
    h = np.zeros((n, n))
    for j in range(1, n + 1):  # bond between sites j and j+1 (mod N)
        amp = -0.5 if j % p else -(1.0 - island.gamma) / 2
        a, b = j - 1, j % n
        h[a, b] = amp
        h[b, a] = amp
    return h


def island_state(spec: ChainSpec, island: IslandSpec) -> CorrelationMatrix:
    """Half-filled ground state of the weakened-bond chain.

    Fills the N/2 lowest single-particle modes; C = V_occ V_occ^T.

    For odd P with N/P divisible by 4 the two grid momenta k = +pi/2 and
    k = -pi/2 cannot scatter into each other through period-P momentum
    transfers, so a pair of exact zero modes crosses the Fermi level for
    every gamma; weakening the bonds does not lift it.  Exactly one
    orbital of the pair must be filled.  The particle-hole map
    A: v -> D conj(v) (D alternating +-1 on the sublattices) sends the
    zero space to itself antiunitarily with A^2 = +1, so the space has
    an orthonormal basis of A-fixed vectors u_1, u_2; filling the
    chiral combination (u_1 + i u_2)/sqrt(2) makes the occupied orbital
    the exact particle-hole partner of the empty one.  That keeps the
    whole state particle-hole symmetric, hence diagonal exactly 1/2 at
    every site AND at every later time (an arbitrary filling of the
    pair has uniform density only at t = 0 and radiates a density wave
    afterwards).  Any other closing of the Fermi gap (below 1e-10)
    raises DegenerateFermiLevelError, e.g. the gamma -> 0 uniform limit
    for even P or the near-decoupled gamma -> 1 limit.
    """
    n = spec.n_sites
    if n % 2:
        raise ValueError(f"half filling needs an even chain, got N={n}")
    h = island_hopping_matrix(spec, island)
    dec = symmetric_eigendecomposition(h)
    w = dec.eigenvalues
    nf = n // 2
    gap = w[nf] - w[nf - 1]
    if gap >= 1e-10:
        v_occ = dec.eigenvectors[:, :nf]
        c = (v_occ @ v_occ.T).astype(complex)
        return CorrelationMatrix(c, label=f"island-{island.P}")
    # machine-scale zeros only: a small avoided crossing (e.g. even P
    # with gamma -> 0) is a genuine ambiguity, not a protected pair
    zero = np.abs(w) < 1e-13
    protected_pair = (
        zero[nf - 1]
        and zero[nf]
        and int(np.count_nonzero(zero)) == 2
        and w[nf + 1] - w[nf] >= 1e-10
        and w[nf - 1] - w[nf - 2] >= 1e-10
    )
    if not protected_pair:
        raise DegenerateFermiLevelError(
            f"gap at the Fermi level is {gap:.3e}; ground state ambiguous "
            f"(island P={island.P}, gamma={island.gamma})"
        )
    v_below = dec.eigenvectors[:, : nf - 1]
    phi = (dec.eigenvectors[:, nf - 1] + 1j * dec.eigenvectors[:, nf]) / np.sqrt(2.0)
    c = (v_below @ v_below.T).astype(complex) + np.outer(phi, phi.conj())
    return CorrelationMatrix(c, label=f"island-{island.P}")


_VBS_FAMILIES = ("dimer", "dimer-q", "rainbow", "frozen-rainbow")
STATE_FAMILIES = _VBS_FAMILIES + ("wigner", "island")


def parse_family(
    name: str, P: int | None = None, q: int | None = None
) -> tuple:
    """Canonicalize a family name, accepting concrete labels.

    "dimer-2" -> ("dimer-q", P, 2); "wigner-3" -> ("wigner", 3, q);
    "island-3" -> ("island", 3, q); canonical names pass through with
    the supplied parameters.
    """
    if name in STATE_FAMILIES:
        return name, P, q
    head, _, tail = name.rpartition("-")
    if head in ("dimer", "wigner", "island") and tail.isdigit():
        value = int(tail)
        if head == "dimer":
            return "dimer-q", P, value
        return head, value, q
    raise ValueError(
        f"unknown state family {name!r}; choose from {STATE_FAMILIES} "
        "or a concrete label like dimer-2 / wigner-3 / island-3"
    )


def make_state(
    family: str,
    spec: ChainSpec,
    P: int | None = None,
    q: int | None = None,
    gamma: float | None = None,
) -> CorrelationMatrix:
    """Build any state family by name; the single entry point used by the CLI.

    family: one of dimer, dimer-q (needs q), wigner (needs P),
    island (needs P, optional gamma), rainbow, frozen-rainbow, or a
    concrete label such as dimer-2 / wigner-3 / island-3.
    """
    family, P, q = parse_family(family, P, q)
    if family == "dimer":
        return CorrelationMatrix(vbs_state(dimer_pattern(spec)).matrix, label="dimer")
    if family == "dimer-q":
        if q is None:
            raise ValueError("family dimer-q requires q")
        return CorrelationMatrix(
            vbs_state(dimer_q_pattern(spec, q)).matrix, label=f"dimer-{q}"
        )
    if family == "rainbow":
        return CorrelationMatrix(vbs_state(rainbow_pattern(spec)).matrix, label="rainbow")
    if family == "frozen-rainbow":
        return CorrelationMatrix(
            vbs_state(frozen_rainbow_pattern(spec)).matrix, label="frozen-rainbow"
        )
    if family == "wigner":
        if P is None:
            raise ValueError("family wigner requires P")
        return wigner_state(spec, P)
    if family == "island":
        if P is None:
            raise ValueError("family island requires P")
        if gamma is None:
            return island_state(spec, IslandSpec(P))
        return island_state(spec, IslandSpec(P, gamma))
    raise ValueError(f"unknown state family {family!r}; choose from {STATE_FAMILIES}")


# ---------------------------------------------------------------------------
# Validation


def hermitian_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a complex Hermitian matrix."""
    return np.linalg.eigvalsh(a)


def invariant_report(
    state: CorrelationMatrix, config: NumericsConfig = DEFAULT_NUMERICS
) -> dict:
    """Check the Gaussian-state invariants; returns deviations and verdicts.

    Used by the CLI state dump and by the conservation tests: hermiticity,
    spectrum inside [0, 1], purity C^2 = C, and the half-filling diagonal.
    """
    c = state.matrix
    herm = float(np.max(np.abs(c - c.conj().T)))
    spectrum = hermitian_eigenvalues((c + c.conj().T) / 2)
    spec_excess = float(max(-spectrum.min(), spectrum.max() - 1.0, 0.0))
    purity = float(np.max(np.abs(c @ c - c)))
    diag_dev = float(np.max(np.abs(np.diag(c) - 0.5)))
    return {
        "n_sites": state.n_sites,
        "label": state.label,
        "hermiticity_deviation": herm,
        "hermitian_pass": herm < config.hermiticity_tol,
        "spectrum_excess": spec_excess,
        "spectrum_pass": spec_excess < 1e-9,
        "purity_deviation": purity,
        "purity_pass": purity < config.purity_tol,
        "diagonal_deviation_from_half": diag_dev,
        "half_filling": bool(diag_dev < 1e-9),
        "trace": float(np.trace(c).real),
    }


def validate_state(
    state: CorrelationMatrix, config: NumericsConfig = DEFAULT_NUMERICS
) -> None:
    """Raise NumericalInvariantError when a Gaussian-state invariant fails."""
    report = invariant_report(state, config)
    for key in ("hermitian_pass", "spectrum_pass", "purity_pass"):
        if not report[key]:
            raise NumericalInvariantError(
                f"state {state.label!r} fails {key.removesuffix('_pass')}: {report}"
            )
