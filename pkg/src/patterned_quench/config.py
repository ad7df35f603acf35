"""Shared numerical tolerances and analysis constants.

All modules read their tolerances from a single frozen record so that a
run can be tightened or relaxed in one place (e.g. through the CLI
``--config`` file).
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances and fixed analysis constants.

    Attributes
    ----------
    hermiticity_tol : float
        Max absolute deviation allowed in ``C - C^dagger``.
    unitarity_tol : float
        Max absolute deviation of a propagator from unitarity.
    delta_tol : float
        Tolerance used when matching momenta to discrete lines
        (Kronecker-delta conditions on the momentum grid).
    eigensolver_tol : float
        Symmetry / residual tolerance for eigendecompositions.
    purity_tol : float
        Max absolute deviation of ``C^2 - C`` for pure Gaussian states.
    occupation_clamp : float
        Half-width of the window around [0, 1] inside which block
        eigenvalues are clamped before the entropy formula; values
        further outside raise an error.
    segment_min_improvement : float
        Fractional reduction of the squared residual an extra saturating
        component must achieve to be accepted during stage detection.
        The default demands a halving: real ramps cut the residual by an
        order of magnitude, while knots that merely trace the rounded
        corner of a knee gain far less.
    segment_min_samples : int
        Minimum number of samples per fitted segment.
    flat_slope_fraction : float
        Segments with |slope| below this fraction of the steepest
        segment count as saturation plateau, not growth.
    stage_weight_threshold : float
        Minimum fraction of the total entropy growth a fitted component
        must contribute to count as a distinct stage; weaker components
        (sub-leading slow modes smearing a knee) are absorbed.
    plateau_window_fraction : float
        Fraction of trailing samples used to test for a plateau.
    plateau_flatness : float
        Max allowed (max-min)/mean variation inside the plateau window.
    """

    hermiticity_tol: float = 1e-10
    unitarity_tol: float = 1e-10
    delta_tol: float = 1e-9
    eigensolver_tol: float = 1e-12
    purity_tol: float = 1e-8
    occupation_clamp: float = 1e-8
    segment_min_improvement: float = 0.5
    segment_min_samples: int = 8
    flat_slope_fraction: float = 0.02
    stage_weight_threshold: float = 0.2
    plateau_window_fraction: float = 0.10
    plateau_flatness: float = 0.02

    def with_overrides(self, **kwargs) -> "NumericsConfig":
        return replace(self, **kwargs)


DEFAULT_NUMERICS = NumericsConfig()
