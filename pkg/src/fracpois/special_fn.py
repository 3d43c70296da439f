"""Scalar special functions underlying the fractional Poisson laws.

Everything in this module is built on one family of series,

    S_k = sum_{r>=0}  w**r / Gamma(nu*r + 1) * ffact(alpha*r, k),   w <= 0,

where ``ffact(z, k) = z*(z-1)*...*(z-k+1)`` is the falling factorial.
With k = 0 and alpha arbitrary this is the one-parameter Mittag-Leffler
series; with general k it is the inner kernel of the fractional Poisson
probability mass functions.

The series alternate and the intermediate terms can be many orders of
magnitude larger than the sum, so the evaluator sizes its working
precision from a cheap floating-point scan of the term magnitudes and
runs the summation in extended precision (mpmath) whenever plain doubles
cannot absorb the cancellation.  Every result carries an explicit
absolute error certificate (truncation tail + rounding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.special import gammaln

_LN10 = math.log(10.0)

# log10 headroom usable by a double accumulator (2**52 ~ 15.65 digits)
_DOUBLE_HEADROOM_DIGITS = 52 * math.log10(2.0)


class NonConvergence(ArithmeticError):
    """Raised when a series fails to meet its tolerance within max_terms."""


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation and precision policy for the series evaluators."""

    rel_tol: float = 1e-12
    max_terms: int = 10_000
    working_precision: str = "double_double"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.working_precision not in ("double", "double_double"):
            raise ValueError("working_precision must be 'double' or 'double_double'")


@dataclass(frozen=True)
class EvalResult:
    """A series value together with its error certificate."""

    value: float
    abs_error_bound: float
    terms_used: int


DEFAULT_CONFIG = SeriesConfig()


def gamma_ratio_ff(z: float, k: int) -> float:
    """Falling factorial z*(z-1)*...*(z-k+1), i.e. Gamma(z+1)/Gamma(z+1-k).

    Computed as a plain product so the gamma poles/zeros cancel
    algebraically; total for every real z and k >= 0.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    p = 1.0
    for j in range(k):
        p *= z - j
    return p


def _log10_max_term(alpha: float, kmax: int, w: float, nu: float,
                    max_terms: int) -> tuple[float, int]:
    """Peak log10 term magnitude (at k = kmax) and its index r.

    Cheap double-precision scan used only to size the working precision
    and locate the hump of the series; not part of any certificate.
    """
    rmax = min(max_terms, 50_000)
    r = np.arange(rmax + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = r * math.log(abs(w)) - gammaln(nu * r + 1.0)
        if kmax > 0:
            # sum_j log|alpha*r - j| accumulated in chunks to bound memory
            j = np.arange(kmax, dtype=float)
            step = max(1, 2_000_000 // (kmax + 1))
            for lo in range(0, rmax + 1, step):
                hi = min(lo + step, rmax + 1)
                lt[lo:hi] += np.log(
                    np.abs(alpha * r[lo:hi, None] - j[None, :])
                ).sum(axis=1)
    lt[~np.isfinite(lt)] = -np.inf
    i = int(np.argmax(lt))
    return float(lt[i]) / _LN10, i


def _rows_float(alpha: float, kmax: int, w: float, nu: float,
                cfg: SeriesConfig, rpeak: int):
    """Double-precision summation path (certified easy cases only)."""
    sums = [0.0] * (kmax + 1)
    abssums = [0.0] * (kmax + 1)
    lastabs = [0.0] * (kmax + 1)
    prevabs = [math.inf] * (kmax + 1)
    streak = 0
    r = 0
    while True:
        if r > cfg.max_terms:
            raise NonConvergence(
                f"series did not converge within {cfg.max_terms} terms")
        base = math.exp(r * math.log(abs(w)) - gammaln(nu * r + 1)) if r else 1.0
        if w < 0 and r % 2:
            base = -base
        ff = 1.0
        z = alpha * r
        ok = r > rpeak
        for k in range(kmax + 1):
            t = base * ff
            sums[k] += t
            at = abs(t)
            abssums[k] += at
            prevabs[k], lastabs[k] = lastabs[k], at
            ff *= z - k
            if ok:
                thr = cfg.rel_tol * (abs(sums[k]) + 1e-14 * abssums[k])
                if at > thr or at > 0.9 * prevabs[k]:
                    ok = False
        streak = streak + 1 if ok else 0
        if streak >= 3:
            break
        r += 1
    out = []
    for k in range(kmax + 1):
        q = 0.9 if prevabs[k] == 0 else min(0.9, lastabs[k] / prevabs[k])
        tail = lastabs[k] * q / (1.0 - q)
        bound = tail + 4e-16 * abssums[k]
        out.append((sums[k], bound))
    return out, r + 1


def _rows_mp_at(alpha: float, kmax: int, w: float, nu: float,
                cfg: SeriesConfig, dps: int, rpeak: int):
    with mp.workdps(dps):
        zero = mp.mpf(0)
        sums = [zero] * (kmax + 1)
        abssums = [zero] * (kmax + 1)
        lastabs = [zero] * (kmax + 1)
        prevabs = [mp.inf] * (kmax + 1)
        wmp = mp.mpf(w)
        wpow = mp.mpf(1)
        numr = mp.mpf(nu)
        floor = mp.mpf(10) ** (2 - dps)
        streak = 0
        r = 0
        while True:
            if r > cfg.max_terms:
                raise NonConvergence(
                    f"series did not converge within {cfg.max_terms} terms "
                    f"(|w|={abs(w):.3g}, nu={nu}, k<={kmax})")
            base = wpow * mp.rgamma(numr * r + 1)
            ff = mp.mpf(1)
            z = mp.mpf(alpha) * r
            ok = r > rpeak
            for k in range(kmax + 1):
                t = base * ff
                sums[k] += t
                at = abs(t)
                abssums[k] += at
                prevabs[k], lastabs[k] = lastabs[k], at
                ff *= z - k
                if ok:
                    thr = cfg.rel_tol * (abs(sums[k]) + floor * abssums[k])
                    if at > thr or at > mp.mpf("0.9") * prevabs[k]:
                        ok = False
            streak = streak + 1 if ok else 0
            if streak >= 3:
                break
            wpow *= wmp
            r += 1
        tails = []
        for k in range(kmax + 1):
            if prevabs[k] == 0:
                tails.append(zero)
            else:
                q = min(mp.mpf("0.9"), lastabs[k] / prevabs[k])
                tails.append(lastabs[k] * q / (1 - q))
        rounding = [a * floor for a in abssums]
        return sums, tails, rounding, abssums, r + 1


def _series_rows(alpha: float, kmax: int, w: float, nu: float,
                 cfg: SeriesConfig):
    """Evaluate S_k for k = 0..kmax as (mpf value, mpf bound) pairs.

    Returns (values, bounds, terms_used).  Values are mpf so that callers
    may rescale (e.g. divide by k!) before converting to double.
    """
    if w > 0:
        raise ValueError("w must be <= 0")
    if w == 0.0:
        one = mp.mpf(1)
        vals = [one] + [mp.mpf(0)] * kmax
        return vals, [mp.mpf(0)] * (kmax + 1), 1

    log10max, rpeak = _log10_max_term(alpha, kmax, w, nu, cfg.max_terms)

    if cfg.working_precision == "double":
        # crude cancellation-headroom certificate for a double accumulator
        if log10max - math.log10(cfg.rel_tol) <= _DOUBLE_HEADROOM_DIGITS:
            pairs, terms = _rows_float(alpha, kmax, w, nu, cfg, rpeak)
            vals = [mp.mpf(v) for v, _ in pairs]
            bounds = [mp.mpf(b) for _, b in pairs]
            return vals, bounds, terms
        # headroom not certified: escalate to the extended-precision path

    dps = max(32, int(log10max) + 40)
    for _ in range(3):
        sums, tails, rounding, abssums, terms = _rows_mp_at(
            alpha, kmax, w, nu, cfg, dps, rpeak)
        worst = 0
        for k in range(kmax + 1):
            if abssums[k] == 0:
                continue
            s = abs(sums[k])
            cancel = mp.log10(abssums[k] / s) if s > 0 else mp.mpf(dps)
            worst = max(worst, int(cancel) + 32 - dps)
        if worst <= 0:
            break
        dps += worst + 8
    bounds = [tails[k] + rounding[k] for k in range(kmax + 1)]
    return sums, bounds, terms


def mittag_leffler(nu: float, x: float, cfg: SeriesConfig | None = None) -> EvalResult:
    """One-parameter Mittag-Leffler function E_nu(x) on the negative axis.

    E_nu(x) = sum_r x**r / Gamma(nu*r + 1), for 0 < nu <= 1 and x <= 0.
    Raises NonConvergence when |x| is beyond series reach within
    cfg.max_terms (no asymptotic fallback).
    """
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    if x > 0:
        raise ValueError("x must be <= 0")
    cfg = cfg or DEFAULT_CONFIG
    vals, bounds, terms = _series_rows(1.0, 0, x, nu, cfg)
    return EvalResult(float(vals[0]), float(bounds[0]), terms)


def wright_psi11_kernel(alpha: float, k: int, w: float, time_nu: float = 1.0,
                        cfg: SeriesConfig | None = None) -> EvalResult:
    """Inner kernel sum_r w**r / Gamma(nu*r+1) * ffact(alpha*r, k).

    The shared series of the space-fractional (nu=1) and space-time
    fractional probability mass functions.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0 < time_nu <= 1:
        raise ValueError("time_nu must lie in (0, 1]")
    if k < 0:
        raise ValueError("k must be >= 0")
    cfg = cfg or DEFAULT_CONFIG
    vals, bounds, terms = _series_rows(alpha, k, w, time_nu, cfg)
    return EvalResult(float(vals[k]), float(bounds[k]), terms)


def wright_psi11_weighted_rows(alpha: float, kmax: int, w: float,
                               time_nu: float = 1.0,
                               cfg: SeriesConfig | None = None) -> list[EvalResult]:
    """Rows ((-1)**k / k!) * S_k for k = 0..kmax (the PMF weighting).

    The division by k! happens in extended precision so rows remain
    finite doubles even where k! alone would overflow.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0 < time_nu <= 1:
        raise ValueError("time_nu must lie in (0, 1]")
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    cfg = cfg or DEFAULT_CONFIG
    vals, bounds, terms = _series_rows(alpha, kmax, w, time_nu, cfg)
    out = []
    sign = 1
    fact = mp.mpf(1)
    for k in range(kmax + 1):
        if k:
            fact *= k
            sign = -sign
        out.append(EvalResult(float(sign * vals[k] / fact),
                              float(bounds[k] / fact), terms))
    return out
