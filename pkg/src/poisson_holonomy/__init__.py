"""Linear Poisson holonomy, modular vector fields and integrals along cotangent paths."""

from .conventions import COAD_SIGN, SIGMA
from .errors import (
    BlowUpError,
    CotangentConditionError,
    DimensionError,
    DriftError,
    EndpointMismatch,
    JacobiError,
    LeafPreservationError,
    LogDomainError,
    ManifestError,
    NotLeafTangent,
    PoissonError,
    RankError,
    ReparameterizationError,
)
from .fields import BivectorField, CovectorField, VectorField, VolumeDensity
from .geometry import (
    LeafSplitting,
    divergence,
    eval_bivector,
    hamiltonian_field,
    jacobi_defect,
    leaf_splitting,
    sharp,
    sharp_field,
)
from .holonomy import (
    ExtensionFamily,
    HolonomyResult,
    TimeDependentField,
    composition_check,
    extension_independence_check,
    holonomy,
    linearized_flow,
    liouville_check,
    normal_determinant,
    parameterization_check,
)
from .integrals import (
    hamiltonian_endpoint_residual,
    line_integral,
    path_integral,
    pullback_identity_residual,
)
from .kernels import BACKEND
from .lie import (
    InnSpan,
    LieAlgebraPresentation,
    ad_matrix,
    coad_matrix,
    constant_loop_oracle,
    inn_coset_equal,
    inn_span,
    lie_poisson_bivector,
    modular_character,
    time_ordered_oracle,
)
from .modular import (
    ModularField,
    defining_property_residual,
    gauge_shift_check,
    modular_field,
    poisson_field_residual,
)
from .paths import (
    CotangentPath,
    CotangentSegment,
    TangentPath,
    concatenate,
    constant_loop,
    cotangent_residual,
    lift_min_norm,
    reparameterize,
    reverse,
    stationary_loop,
)
from .polynomial import PolyScalarField
from .presets import get_preset

__version__ = "0.1.0"
