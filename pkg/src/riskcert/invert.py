"""Evaluation and inversion of the monotone tail functions behind every bound.

All inverses are computed by bisection on a monotone predicate and return the
largest float that still satisfies the defining inequality, so a returned
bound is never smaller than the exact supremum by more than one float step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError

MAX_ITER = 200
# 0.0 means "bisect until the bracket is two adjacent floats"
XTOL = 0.0

_ONE_MINUS = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class EmpiricalCount:
    """``k`` successes out of ``m`` Bernoulli trials."""

    k: int
    m: int

    def __post_init__(self) -> None:
        if int(self.k) != self.k or int(self.m) != self.m:
            raise DomainError(f"counts must be integers, got k={self.k!r}, m={self.m!r}")
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")
        if not 0 <= self.k <= self.m:
            raise DomainError(f"need 0 <= k <= m, got k={self.k}, m={self.m}")

    @property
    def rate(self) -> float:
        return self.k / self.m


@dataclass(frozen=True)
class InversionResult:
    value: float
    iterations: int
    residual: float


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")
    return delta


def _check_unit(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def _check_count(k: int, m: int) -> tuple[int, int]:
    c = EmpiricalCount(k, m)
    return int(c.k), int(c.m)


def bisect_sup(
    pred: Callable[[float], bool],
    lo: float,
    hi: float,
    *,
    xtol: float = XTOL,
    max_iter: int = MAX_ITER,
) -> InversionResult:
    """Largest ``x`` in ``[lo, hi]`` with ``pred(x)``.

    ``pred`` must be true at ``lo`` and switch from true to false at most once.
    The returned residual is the final bracket width.
    """
    if pred(hi):
        return InversionResult(hi, 0, 0.0)
    it = 0
    while it < max_iter and hi - lo > xtol:
        mid = lo + (hi - lo) / 2.0
        if mid <= lo or mid >= hi:
            break
        it += 1
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return InversionResult(lo, it, hi - lo)


def log_binom_coef(n: int, k: int) -> float:
    """Natural log of ``C(n, k)``."""
    if int(n) != n or int(k) != k:
        raise DomainError("log_binom_coef needs integer arguments")
    n, k = int(n), int(k)
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k <= 30:
        # exact integer, correctly rounded log
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _log_coef_prefix(k: int, m: int) -> np.ndarray:
    """``ln C(m, i)`` for ``i = 0..k`` by running sums of log ratios."""
    i = np.arange(1, k + 1, dtype=float)
    out = np.zeros(k + 1)
    np.cumsum(np.log(m - i + 1.0) - np.log(i), out=out[1:])
    return out


def _log_cdf_with(coefs: np.ndarray, k: int, m: int, p: float) -> float:
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 0.0 if k >= m else -math.inf
    if k >= m:
        return 0.0
    i = np.arange(k + 1, dtype=float)
    terms = coefs + i * math.log(p) + (m - i) * math.log1p(-p)
    return min(float(logsumexp(terms)), 0.0)


def log_binom_cdf(k: int, m: int, p: float) -> float:
    """``ln P[Binom(m, p) <= k]`` accumulated in log space."""
    k, m = _check_count(k, m)
    p = _check_unit(p, "p")
    return _log_cdf_with(_log_coef_prefix(k, m), k, m, p)


def binom_cdf(k: int, m: int, p: float) -> float:
    """``sum_{i<=k} C(m,i) p^i (1-p)^(m-i)``."""
    return math.exp(log_binom_cdf(k, m, p))


def binom_tail_inverse(
    k: int, m: int, delta: float | None = None, *, log_delta: float | None = None
) -> float:
    """Largest ``p`` with ``binom_cdf(k, m, p) >= delta``.

    Pass ``log_delta`` instead of ``delta`` when the confidence level is too
    small to represent (e.g. after dividing by a large combinatorial prior).
    """
    k, m = _check_count(k, m)
    if log_delta is None:
        if delta is None:
            raise DomainError("either delta or log_delta is required")
        log_delta = math.log(check_delta(delta))
    elif not log_delta <= 0.0:
        raise DomainError(f"log_delta must be <= 0, got {log_delta!r}")
    if k == m:
        return 1.0
    coefs = _log_coef_prefix(k, m)
    return bisect_sup(lambda p: _log_cdf_with(coefs, k, m, p) >= log_delta, 0.0, 1.0).value


def _kl(q: float, p: float) -> float:
    if q == p:
        return 0.0
    if p <= 0.0 or p >= 1.0:
        return math.inf
    val = 0.0
    if q > 0.0:
        val += q * math.log(q / p)
    if q < 1.0:
        val += (1.0 - q) * math.log1p((p - q) / (1.0 - p))
    return max(val, 0.0)


def kl_div(q: float, p: float) -> float:
    """Binary relative entropy ``kl(q || p)``; ``inf`` when ``p`` is 0 or 1 and ``q != p``."""
    return _kl(_check_unit(q, "q"), _check_unit(p, "p"))


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps >= 0.0:
        raise DomainError(f"eps must be >= 0, got {eps!r}")
    return eps


def kl_inverse(q: float, eps: float) -> float:
    """Largest ``p >= q`` with ``kl(q, p) <= eps``."""
    q = _check_unit(q, "q")
    eps = _check_eps(eps)
    if eps == 0.0 or q == 1.0:
        return q
    if _kl(q, _ONE_MINUS) <= eps:
        return 1.0
    return bisect_sup(lambda p: _kl(q, p) <= eps, q, _ONE_MINUS).value


def pinsker_inverse(q: float, eps: float) -> float:
    """Inverse of the quadratic comparator ``2 (q - p)^2``."""
    q = _check_unit(q, "q")
    eps = _check_eps(eps)
    return min(1.0, q + math.sqrt(eps / 2.0))


def catoni_inverse(q: float, eps: float, c: float = 1.0) -> float:
    """Inverse of Catoni's comparator ``-ln(1 - p (1 - e^-c)) - c q`` in ``p``."""
    q = _check_unit(q, "q")
    eps = _check_eps(eps)
    c = float(c)
    if not c > 0.0:
        raise DomainError(f"Catoni parameter c must be > 0, got {c!r}")
    if math.isinf(eps):
        return 1.0
    return min(1.0, math.expm1(-(eps + c * q)) / math.expm1(-c))


def upper_inverse(q: float, eps: float, comparator: str = "kl", c: float = 1.0) -> float:
    """Dispatch to the inverse of the named comparator (``kl``, ``pinsker``, ``catoni``)."""
    if comparator == "kl":
        return kl_inverse(q, eps)
    if comparator == "pinsker":
        return pinsker_inverse(q, eps)
    if comparator == "catoni":
        return catoni_inverse(q, eps, c)
    raise DomainError(f"unknown comparator {comparator!r}")


def _p2l_log_ratios(k: int, n: int) -> np.ndarray:
    """``ln C(m,k) - ln C(n,k)`` for ``m = k..n-1``, accumulated in ascending ``m``."""
    mm = np.arange(k + 1, n + 1, dtype=float)
    # ln C(m,k) = ln C(m-1,k) + ln m - ln(m-k)
    steps = np.log(mm) - np.log(mm - k)
    log_c = np.concatenate(([0.0], np.cumsum(steps)))
    return log_c[:-1] - log_c[-1]


class _Psi:
    """``ln Psi_{k,delta}`` as a function of ``u = -ln(1 - eps)``."""

    def __init__(self, k: int, n: int, delta: float) -> None:
        self.ratios = _p2l_log_ratios(k, n)
        self.powers = n - np.arange(k, n, dtype=float)
        self.offset = math.log(delta) - math.log(n)

    def at_u(self, u: float) -> float:
        return self.offset + float(logsumexp(self.ratios + self.powers * u))

    def at_eps(self, eps: float) -> float:
        if eps >= 1.0:
            return math.inf
        return self.at_u(-math.log1p(-eps))


def p2l_log_psi(eps: float, k: int, n: int, delta: float) -> float:
    """``ln Psi_{k,delta}(eps)`` for the Pick-To-Learn bound."""
    if not 0 <= k < n:
        raise DomainError(f"need 0 <= k < n, got k={k}, n={n}")
    return _Psi(int(k), int(n), check_delta(delta)).at_eps(_check_unit(eps, "eps"))


def p2l_psi(eps: float, k: int, n: int, delta: float) -> float:
    return math.exp(p2l_log_psi(eps, k, n, delta))


def p2l_epsilon(k: int, n: int, delta: float) -> float:
    """Root of ``Psi_{k,delta}(eps) = 1`` on ``[k/n, 1]``; exactly 1 when ``k = n``.

    The returned value is the smallest float at which ``Psi >= 1``.
    """
    if int(k) != k or int(n) != n:
        raise DomainError("p2l_epsilon needs integer k and n")
    k, n = int(k), int(n)
    if n < 1 or k < 0:
        raise DomainError(f"need n >= 1 and k >= 0, got k={k}, n={n}")
    if k > n:
        raise DomainError(f"k={k} exceeds n={n}")
    delta = check_delta(delta)
    if k == n:
        return 1.0
    psi = _Psi(k, n, delta)
    u_lo = -math.log1p(-k / n)
    if psi.at_u(u_lo) >= 0.0:
        return k / n
    step = 1.0
    u_hi = u_lo + step
    while psi.at_u(u_hi) < 0.0:
        u_lo = u_hi
        step *= 2.0
        u_hi += step
    # bisect in u so the root stays resolvable when eps is within 1e-12 of 1
    res = bisect_sup(lambda u: psi.at_u(u) < 0.0, u_lo, u_hi)
    eps = min(1.0, -math.expm1(-(res.value + res.residual)))
    while eps < 1.0 and psi.at_eps(eps) < 0.0:
        eps = math.nextafter(eps, 2.0)
    while eps > k / n:
        below = math.nextafter(eps, -1.0)
        if psi.at_eps(below) < 0.0:
            break
        eps = below
    return eps
