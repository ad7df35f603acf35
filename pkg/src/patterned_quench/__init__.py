"""Quench dynamics of patterned free-fermion states on a periodic chain.

The package builds correlation matrices for bond-patterned and
density-patterned initial states, evolves them under nearest-neighbour
hopping, and analyses the resulting light cones: momentum-space form
factors, effective front velocities, entanglement growth, and the
Bessel/Airy asymptotics of the correlations near the fronts.
"""

from .config import NumericsConfig, DEFAULT_NUMERICS
from .errors import AnalysisError, NumericalInvariantError, DegenerateFermiLevelError
from .lattice import ChainSpec, Propagator, valid_momenta, dispersion, group_velocity, propagator
from .states import (
    BondPattern,
    CorrelationMatrix,
    IslandSpec,
    SymmetricEigenDecomposition,
    dimer_pattern,
    dimer_q_pattern,
    rainbow_pattern,
    frozen_rainbow_pattern,
    vbs_state,
    wigner_state,
    island_state,
    make_state,
    parse_family,
    symmetric_eigendecomposition,
    invariant_report,
    validate_state,
)
from .evolution import (
    EvolvedTrace,
    evolve,
    dimer_exact,
    dimer_exact_matrix,
    time_average,
    correlation_trace,
    wrap_time,
)
from .formfactor import (
    FormFactor,
    DivergentLine,
    LightConeSpecies,
    form_factor,
    inverse_form_factor,
    closed_form_ff,
    closed_form_grid,
    verify_closed_forms,
    detect_lines,
    predicted_velocities,
    measure_front_velocity,
    measure_species_velocities,
    species_traces,
)
from .entanglement import (
    EntropyTrace,
    QuasiparticleAnsatz,
    Stage,
    block_entropy,
    entropy_trace,
    detect_stages,
    ramp_departure_time,
    saturation,
    rescale_traces,
    rescaled_collapse,
)
from .asymptotics import (
    AiryRegionPoint,
    DecayFit,
    ONCONE_AMPLITUDE,
    bessel_j,
    bessel_j_row,
    airy_ai,
    dimer_bessel_correlator,
    oncone_decay_fit,
    oncone_amplitude,
    offcone_prediction,
    extremal_lines,
)
from .experiments import (
    EXPERIMENT_NAMES,
    ExperimentConfig,
    run_experiment,
    state_dump,
)

__version__ = "0.1.0"
