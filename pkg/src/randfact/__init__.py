"""Randomized algorithms for low-rank approximation and full matrix factorizations."""
import os as _os

# BLAS thread pools are sized when numpy loads; RANDFACT_THREADS caps them
_threads = _os.environ.get("RANDFACT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .core import (PivotedQr, SvdFactors, cholesky, cpqr, householder_qr, least_squares, orth, pinv,
                   svd_dense)
from .diagnostics import BoundSpec, error_bound, estimate_spectral_norm, test_matrix
from .errors import (MatrixParseError, NotPositiveDefiniteError, NumericalError, ParameterError,
                     RandfactError, SinglePassViolation)
from .fullfact import UtvFactors, hqrrp, randutv
from .lowrank import (CurFactors, IdFactors, LowRankEvd, MatrixStream, fast_randomized_id, id_deterministic,
                      nystrom_evd, randomized_cur, randomized_id, rsvd, single_pass_evd, single_pass_svd)
from .rangefinder import (RangeBasis, RangeConfig, basic_range, blocked_adaptive, certified_range,
                          extended_range, frob_residual, greedy_lowrank, power_range)
from .sketch import SketchOperator, gaussian, srft_sample

__version__ = "0.1.0"
