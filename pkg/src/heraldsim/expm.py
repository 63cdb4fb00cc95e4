"""Matrix exponential by scaling and squaring of a truncated Taylor series.

Used as the brute-force reference for every closed-form matrix element in
:mod:`heraldsim.fock_core`. Truncated bosonic generators are not normal, so
no eigendecomposition is attempted.
"""

import numpy as np

_EPS = np.finfo(float).eps


def expm(a, theta=0.5, max_terms=60):
    """Return ``exp(a)`` for a square array ``a``.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most ``theta``,
    the Taylor series is summed until the next term is below machine
    precision relative to the partial sum, and the result is squared ``s``
    times.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dtype = np.result_type(a.dtype, np.float64)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=dtype)

    norm = np.abs(a).sum(axis=0).max()
    s = 0
    if norm > theta:
        s = int(np.ceil(np.log2(norm / theta)))
    scaled = a.astype(dtype) / (2.0**s)

    result = np.eye(n, dtype=dtype)
    term = np.eye(n, dtype=dtype)
    for j in range(1, max_terms + 1):
        term = term @ scaled / j
        result = result + term
        if np.abs(term).max() <= _EPS * np.abs(result).max():
            break
    else:
        raise RuntimeError("Taylor series did not converge; increase max_terms")

    for _ in range(s):
        result = result @ result
    return result
