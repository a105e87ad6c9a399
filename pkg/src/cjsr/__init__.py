"""Certified stability analysis for automaton-constrained switching systems.

The package bounds the worst-case growth rate of matrix products along
the admissible paths of a labeled graph. Lower bounds come from cycles,
upper bounds from verified contraction certificates (one quadratic form
per node, per lifted node, or per bounded-memory path). See the README
for the command-line interface.
"""

from .automaton import (
    DEFAULT_PATH_CAP,
    Automaton,
    Path,
    arbitrary_switching,
    count_paths,
    enumerate_cycles,
    enumerate_paths,
)
from .certify import (
    BisectionResult,
    CjsrEstimate,
    Verdict,
    cjsr_bounds,
    gamma_star,
    gamma_star_pathdep,
    pathdep_from_lift,
    stability_verdict,
)
from .errors import (
    AutomatonError,
    CjsrError,
    ConnectivityWarning,
    DanglingNode,
    DimensionMismatch,
    DuplicateEdge,
    ExplosionGuard,
    InitFailure,
    LabelOutOfRange,
    MissingPathKey,
    NodeOutOfRange,
    NotPositiveDefinite,
    SystemFileError,
    UnusedLabel,
    VerificationFailure,
)
from .growth import (
    GrowthBounds,
    cycle_lower_bound,
    extremal_norm_eval,
    growth_bounds,
    rho_t,
    rho_t_witness,
)
from .lmi import (
    FeasibilityOutcome,
    FeasibilityStatus,
    MultinormCertificate,
    PathDepCertificate,
    SolverOptions,
    check_multinorm,
    check_pathdep,
    solve_multinorm,
    solve_pathdep,
)
from .numerics import (
    inverse_pd,
    is_pd,
    spectral_norm,
    spectral_radius,
    spectral_radius_batch,
    sym_eig_min,
)
from .sysfile import load_system, save_system, system_from_dict, system_to_dict
from .system import (
    LiftedEdge,
    LiftedSystem,
    SwitchedSystem,
    as_switched_system,
    lift,
    product_along_word,
    scale,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PATH_CAP",
    "Automaton",
    "Path",
    "arbitrary_switching",
    "count_paths",
    "enumerate_cycles",
    "enumerate_paths",
    "BisectionResult",
    "CjsrEstimate",
    "Verdict",
    "cjsr_bounds",
    "gamma_star",
    "gamma_star_pathdep",
    "pathdep_from_lift",
    "stability_verdict",
    "AutomatonError",
    "CjsrError",
    "ConnectivityWarning",
    "DanglingNode",
    "DimensionMismatch",
    "DuplicateEdge",
    "ExplosionGuard",
    "InitFailure",
    "LabelOutOfRange",
    "MissingPathKey",
    "NodeOutOfRange",
    "NotPositiveDefinite",
    "SystemFileError",
    "UnusedLabel",
    "VerificationFailure",
    "GrowthBounds",
    "cycle_lower_bound",
    "extremal_norm_eval",
    "growth_bounds",
    "rho_t",
    "rho_t_witness",
    "FeasibilityOutcome",
    "FeasibilityStatus",
    "MultinormCertificate",
    "PathDepCertificate",
    "SolverOptions",
    "check_multinorm",
    "check_pathdep",
    "solve_multinorm",
    "solve_pathdep",
    "inverse_pd",
    "is_pd",
    "spectral_norm",
    "spectral_radius",
    "spectral_radius_batch",
    "sym_eig_min",
    "load_system",
    "save_system",
    "system_from_dict",
    "system_to_dict",
    "LiftedEdge",
    "LiftedSystem",
    "SwitchedSystem",
    "as_switched_system",
    "lift",
    "product_along_word",
    "scale",
    "__version__",
]
