"""Recovery of low-dimensional models by generalized projected gradient descent.

The package splits the problem the way the underlying theory does:

* :mod:`gpgd.models` - model sets (sparse, subspaces, unions, low rank,
  Haar-sparse) and their orthogonal projections;
* :mod:`gpgd.operators` - measurement operators and restricted isometry
  constants (exact at small scale, Monte Carlo elsewhere) with optimal
  step-size scaling;
* :mod:`gpgd.certify` - restricted Lipschitz constants of projections:
  witnessed lower bounds, bisection upper bounds, exact sparse search and
  the closed-form hard-thresholding constants;
* :mod:`gpgd.solvers` - the projected gradient, plug-and-play, regularized
  gradient and plain gradient iterations, plus the exhaustive sparse oracle;
* :mod:`gpgd.diagnostics` - per-iteration quotients, linear-rate envelope
  fitting and report serialization;
* :mod:`gpgd.bridge` - denoisers as projections, including external ones
  spoken to over a binary subprocess protocol.
"""

from .rng import RngStream, sample_gaussian
from .linalg import haar_forward, haar_inverse, svd_small
from .models import (
    HaarSparseK,
    LowRank,
    ModelSet,
    ProjectionResult,
    SparseK,
    Subspace,
    UnionOfSubspaces,
    hard_threshold,
    membership,
    project_orth,
    sample_model,
    secant_sample,
    two_lines,
)
from .certify import (
    LipschitzCertificate,
    beta_lower_sampled,
    beta_upper_bisect,
    f_k,
    ht_beta_constant,
    ht_delta_threshold,
    optimal_beta_bisect,
    optimal_projection_search,
    orthogonality_check,
    q_value,
    r_value,
)
from .operators import (
    CircularBlurOp,
    DenseOp,
    MaskOp,
    MeasurementOp,
    RicReport,
    adjoint_test,
    gaussian_dense,
    gaussian_kernel,
    optimal_scale,
    random_mask,
    restricted_spectrum_scale,
    ric_exact_sparse,
    ric_monte_carlo,
    rip_check,
)
from .solvers import (
    DivergenceError,
    SolveConfig,
    SolveTrace,
    default_x0,
    gm_red,
    gpgd,
    landweber,
    oracle_sparse,
    pnp_pgm,
)
from .diagnostics import (
    DiagnosticsReport,
    emit_report,
    envelope_bounds_errors,
    fit_linear_rate,
    full_report,
    iterate_metrics,
    sublinear_fits,
)
from .bridge import (
    BridgeError,
    BridgeNonFinite,
    BridgeProtocolError,
    BridgeTerminated,
    BridgeTimeout,
    CallableProjection,
    ExternalDenoiser,
    FixedPointProbe,
    GeneralizedProjection,
    HaarThresholdDenoiser,
    IdentityProjection,
    ModelProjection,
    builtin_haar_ht,
    external,
    probe_fixed_point,
    request_frame,
)

__version__ = "0.1.0"
