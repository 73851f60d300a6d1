"""Numerical laboratory for two-path optical fields.

Models pure and partially coherent two-path beams, computes the
complementarity observables (fringe visibility V, path distinguishability D,
path-spin concurrence C, degree of polarization P), prepares beams for
arbitrary targets on the sphere V^2 + D^2 + C^2 = 1, and simulates 36-basis
joint spatial-polarization tomography with a calibrated noise model.
"""

from .field import (
    ExtremeClass,
    ExtremeKind,
    SpinState,
    TwoPathBeam,
    classify_extreme,
    fringe_scan,
    intensity_at_phase,
    mutual_coherence,
    to_coherence_matrix,
    visibility_from_scan,
)
from .observables import (
    ObservableTriple,
    concurrence_pure,
    degree_of_polarization,
    distinguishability,
    duality_defect,
    identity_sum,
    triple_from_beam,
    visibility,
)
from .prepare import (
    GridState,
    PreparationParams,
    grid_states,
    project_to_sphere,
    realize,
    sample_octant,
    solve_target,
)
from .tomography import (
    CoherenceMatrix,
    NoiseModel,
    ProjectionBasis,
    TomographyRecord,
    TomographyRun,
    correct_systematic,
    measure,
    observables_from_matrix,
    polarization_from_matrix,
    projection_set,
    reconstruct,
    run_tomography,
    uhlmann_fidelity,
    wootters_concurrence,
)
from .ensemble import (
    EnsembleEstimate,
    StochasticField,
    convergence_study,
    empirical_observables,
    generate_pair,
)

__version__ = "0.1.0"
