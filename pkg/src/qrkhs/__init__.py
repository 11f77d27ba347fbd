"""Quaternionic reproducing kernels, coherent states and POV measures."""

import os

# cap BLAS threads before numpy loads
_threads = os.environ.get("QRKHS_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .errors import QRKHSError  # noqa: E402
from .families import BasisFamily, hermite_family, hermite2_family, laguerre_family, monomial  # noqa: E402
from .kernels import Kernel, cs_vector, gram_matrix, kernel_closed, kernel_series  # noqa: E402
from .quadrature import MeasureRule, build_rule, integrate, orthogonality_matrix, refine  # noqa: E402
from .quaternion import Quaternion  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "BasisFamily",
    "Kernel",
    "MeasureRule",
    "QRKHSError",
    "Quaternion",
    "build_rule",
    "cs_vector",
    "gram_matrix",
    "hermite2_family",
    "hermite_family",
    "integrate",
    "kernel_closed",
    "kernel_series",
    "laguerre_family",
    "monomial",
    "orthogonality_matrix",
    "refine",
]
