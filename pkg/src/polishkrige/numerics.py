"""Shared dense linear-algebra plumbing with condition diagnostics."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor

from .errors import SingularSystemError

# reciprocal condition numbers below this are treated as singular; the
# well-posed systems in this package sit many orders of magnitude above it
RCOND_FLOOR = 1e-14


def factor_checked(a, what):
    """LU-factor a square matrix, raising SingularSystemError when it is
    numerically unusable.

    Returns (lu_piv, rcond) where lu_piv feeds scipy.linalg.lu_solve and
    rcond is LAPACK's 1-norm reciprocal condition estimate.
    """
    with warnings.catch_warnings():
        # an exactly singular factor is diagnosed below through rcond
        warnings.simplefilter("ignore", LinAlgWarning)
        lu_piv = lu_factor(a, check_finite=False)
    gecon = get_lapack_funcs(("gecon",), (a,))[0]
    rcond, info = gecon(lu_piv[0], np.linalg.norm(a, 1))
    if info != 0 or not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularSystemError(
            f"{what} is numerically singular (rcond {rcond:.3e})",
            condition=float(rcond),
        )
    return lu_piv, float(rcond)
