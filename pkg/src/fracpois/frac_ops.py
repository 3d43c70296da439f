"""Fractional difference operator (1-B)**alpha on probability-mass vectors.

B is the backward shift p_k -> p_{k-1}; the fractional power expands into
a generalized-binomial series with coefficients c_r(alpha) = (-1)**r *
C(alpha, r).  Mass vectors are dense from index 0, with p_j = 0 for j < 0.
"""

from __future__ import annotations

import math

import numpy as np


def frac_binom_coeff(alpha: float, r: int) -> float:
    """Coefficient c_r(alpha) = (-1)**r * alpha*(alpha-1)*...*(alpha-r+1)/r!.

    c_0 = 1, c_1 = -alpha; every c_r with r >= 1 is negative for
    alpha in (0, 1), and c_r = 0 for r >= 2 when alpha = 1.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    return frac_binom_coeffs(alpha, r)[r]


def frac_binom_coeffs(alpha: float, rmax: int) -> np.ndarray:
    """Array [c_0, ..., c_rmax] via the stable recurrence.

    c_{r+1} = c_r * (r - alpha) / (r + 1); avoids gamma poles and
    overflow entirely.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    c = np.empty(rmax + 1)
    c[0] = 1.0
    for r in range(rmax):
        c[r + 1] = c[r] * (r - alpha) / (r + 1)
    return c


def apply_frac_difference(p, alpha: float) -> np.ndarray:
    """(1-B)**alpha applied to a mass vector, truncated at its length.

    output[k] = sum_{r=0}^{k} c_r(alpha) * p[k-r].  For alpha = 1 this is
    the first difference p[k] - p[k-1].
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("expected a 1-d mass vector")
    n = p.size
    c = frac_binom_coeffs(alpha, n - 1)
    return np.convolve(c, p)[:n]


def beta_form_coeff(alpha: float, r: int) -> float:
    """sin(pi*alpha)/pi * B(alpha+1, r-alpha), the beta-identity form.

    By the reflection formula this equals -c_r(alpha) for every r >= 2.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if r < 2:
        raise ValueError("r must be >= 2")
    logb = (math.lgamma(alpha + 1) + math.lgamma(r - alpha)
            - math.lgamma(r + 1))
    return math.sin(math.pi * alpha) / math.pi * math.exp(logb)
