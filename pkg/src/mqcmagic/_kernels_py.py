"""NumPy reference kernels (fallback when the compiled extension is absent).

Both implementations expose the same three functions; `_backend` picks one at
import time. All reductions are fixed-order so results do not depend on
threading.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def wht_inplace(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform of a length-2**n vector, in place."""
    d = a.shape[0]
    h = 1
    while h < d:
        a2 = a.reshape(-1, 2 * h)
        lo = a2[:, :h].copy()
        hi = a2[:, h:].copy()
        a2[:, :h] = lo + hi
        a2[:, h:] = lo - hi
        h *= 2
    return a


def moments_from_counts(t: np.ndarray, w3: np.ndarray, n_shots: int) -> tuple[float, float]:
    """Weighted 4th/2nd U-statistic numerators from WHT'd outcome counts.

    ``t`` is the Walsh-Hadamard transform of the per-outcome count vector
    (int64), ``w3[A] = 3**popcount(A)``. Returns
    ``(sum_A w3[A]*e4(t[A]), sum_A w3[A]*e2(t[A]))`` with
    ``e2 = C(t over +/-1 pairs)`` and ``e4`` the elementary symmetric sums

        e2 = (t**2 - N) / 2
        e4 = (t**4 - 6*N*t**2 + 8*t**2 + 3*N**2 - 6*N) / 24

    which are exact integers; the weighted sums are accumulated in float64.
    """
    N = int(n_shots)
    t2 = t.astype(np.int64) ** 2
    e2 = (t2 - N) // 2
    num4 = t2 * (t2 - 6 * N + 8) + 3 * N * N - 6 * N
    e4 = num4 // 24
    return float(np.dot(w3, e4.astype(np.float64))), float(np.dot(w3, e2.astype(np.float64)))


def moments_from_probs(w: np.ndarray, w3: np.ndarray) -> tuple[float, float]:
    """Weighted 4th/2nd moments of WHT'd Born probabilities (analytic mode).

    Returns ``(sum_A w3[A]*w[A]**4, sum_A w3[A]*w[A]**2)``.
    """
    w2 = w * w
    return float(np.dot(w3, w2 * w2)), float(np.dot(w3, w2))
