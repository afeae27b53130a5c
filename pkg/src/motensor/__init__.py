"""Structured symmetric tensors of the MO family.

Builds the Moler matrix and the M, N, MO(alpha) and essential MO tensors as
rank-one sums, computes the Sup-MO value alpha*(m) and estimates smallest
H-eigenvalues.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DimensionError,
    IterationLimitError,
    MotensorError,
    OuterBudgetError,
    SizeBudgetError,
)
from .family import (
    CpCertificate,
    cp_certificate,
    definition_dense,
    entry,
    essential_mo,
    m_tensor,
    mo_tensor,
    moler_factor,
    moler_matrix,
    n_tensor,
    structured,
    sub_mo_witness_value,
)
from .heigen import (
    HEigenPair,
    kkt_residual,
    lambda_min_curve,
    lambda_min_estimate,
    moler_lambda_min,
    witness_upper_bound,
)
from .oracle import ScanReport, dense_eval, h_eigen_scan_2d, psd_scan
from .supmo import (
    BetaSolveTrace,
    InnerSolveResult,
    alpha_star,
    f_monotonicity_probe,
    fixed_point_beta,
    g_grad_hess,
    g_value,
    inner_minimize,
)
from .tensor import (
    DenseSymmetricTensor,
    FamilyKind,
    FamilySpec,
    RankOneSum,
    eval_grad,
    eval_poly,
    m_norm,
    materialize,
)
