"""Linear forms of independent telegraph processes.

The package derives the constant-coefficient PDE governing the density of
``L(t) = sum_k a_k X_k(t)``, computes its singular atoms and characteristic
function, inverts the continuous part by FFT, samples the process, and
cross-checks these objects against each other.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BandwidthError,
    Component,
    ConsistencyError,
    DimensionError,
    DomainError,
    ModelSpec,
    NumericalError,
    PrecisionError,
    SchemaError,
    SizeLimitError,
    StructureError,
    TelegraphError,
    TelegraphParams,
    enumerate_sign_sequences,
    hamming_distance,
    lambda_total,
    load_spec,
    max_sigma_speed,
    sigma_speed,
    sign_index,
    spec_from_dict,
)
from .telegraph import char_fn, density_ac, singular_weight  # noqa: E402
from .linear_form import (  # noqa: E402
    AccuracyWarning,
    DistributionGrid,
    SingularAtom,
    ac_cdf,
    ac_density,
    cdf,
    char_fn_L,
    exp_sum_representation,
    singular_atoms,
    singular_char_fn,
    support,
)
from .operator_algebra import (  # noqa: E402
    ONE,
    T,
    X,
    OperatorMatrix,
    OperatorPoly,
    build_lambda_matrix,
    build_system_matrix,
    det_cofactor,
    det_schur,
    governing_operator,
    poly_divides,
)
from .montecarlo import (  # noqa: E402
    SampleSet,
    empirical_atom_masses,
    empirical_char_fn,
    kac_convergence,
    ks_statistic,
    sample_linear_form,
)
from .verifier import (  # noqa: E402
    VerificationReport,
    fd_residual,
    initial_condition_check,
    symbol_root_check,
    system_cf_check,
)

__all__ = [
    "AccuracyWarning",
    "BandwidthError",
    "Component",
    "ConsistencyError",
    "DimensionError",
    "DistributionGrid",
    "DomainError",
    "ModelSpec",
    "NumericalError",
    "ONE",
    "OperatorMatrix",
    "OperatorPoly",
    "PrecisionError",
    "SampleSet",
    "SchemaError",
    "SingularAtom",
    "SizeLimitError",
    "StructureError",
    "T",
    "TelegraphError",
    "TelegraphParams",
    "VerificationReport",
    "X",
    "__version__",
    "ac_cdf",
    "ac_density",
    "build_lambda_matrix",
    "build_system_matrix",
    "cdf",
    "char_fn",
    "char_fn_L",
    "density_ac",
    "det_cofactor",
    "det_schur",
    "empirical_atom_masses",
    "empirical_char_fn",
    "enumerate_sign_sequences",
    "exp_sum_representation",
    "fd_residual",
    "governing_operator",
    "hamming_distance",
    "initial_condition_check",
    "kac_convergence",
    "ks_statistic",
    "lambda_total",
    "load_spec",
    "max_sigma_speed",
    "poly_divides",
    "sample_linear_form",
    "sigma_speed",
    "sign_index",
    "singular_atoms",
    "singular_char_fn",
    "singular_weight",
    "spec_from_dict",
    "support",
    "symbol_root_check",
    "system_cf_check",
]
