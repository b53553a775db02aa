"""True-risk upper bounds for certifiable surrogate models.

Every function returns a :class:`BoundResult` carrying the bound, the failure
probability it consumes and a named breakdown of its terms. Priors and
penalties (``C(n, m~)``, ``2^-l``, ``(m~+1)^-2``) are combined in log space so
large ``n`` or code lengths never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError
from .invert import (
    EmpiricalCount,
    binom_tail_inverse,
    check_delta,
    log_binom_coef,
    p2l_epsilon,
    upper_inverse,
)
from .losses import LossSpec

LOG_SIX_OVER_PI2 = math.log(6.0 / math.pi**2)


@dataclass
class BoundResult:
    risk_bound: float
    delta_spent: float
    terms: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return bool(self.terms.get("vacuous", False))

    def to_dict(self) -> dict:
        return {"risk_bound": self.risk_bound, "delta_spent": self.delta_spent, "terms": dict(self.terms)}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundResult":
        try:
            return cls(float(d["risk_bound"]), float(d["delta_spent"]), dict(d.get("terms", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"not a bound result: {exc}") from None


@dataclass(frozen=True)
class CompressionMeta:
    """Sample-compression summary: ``m_tilde`` kept points out of ``n``."""

    n: int
    m_tilde: int
    complement_risk: float

    def __post_init__(self) -> None:
        if not 0 <= self.m_tilde < self.n:
            raise DomainError(f"need 0 <= m_tilde < n, got m_tilde={self.m_tilde}, n={self.n}")

    @property
    def complement_size(self) -> int:
        return self.n - self.m_tilde


@dataclass(frozen=True)
class CodeLengthMeta:
    code_bits: int
    n: int
    train_risk: float

    def __post_init__(self) -> None:
        if self.code_bits < 1:
            raise DomainError(f"code length must be >= 1 bit, got {self.code_bits}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class PACBayesMeta:
    kl_qp: float
    n: int
    sampled_risks: tuple = ()

    def __post_init__(self) -> None:
        if not self.kl_qp >= 0.0:
            raise DomainError(f"KL(Q||P) must be >= 0, got {self.kl_qp!r}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        object.__setattr__(self, "sampled_risks", tuple(float(r) for r in self.sampled_risks))

    @property
    def v_samples(self) -> int:
        return len(self.sampled_risks)


@dataclass(frozen=True)
class PartitionParams:
    counts: tuple
    alpha_p: float
    gamma_p: float
    t_upper: float
    train_risk: float

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts or any(c < 0 for c in counts) or sum(counts) == 0:
            raise DomainError("partition counts must be nonnegative with a positive total")
        if not self.gamma_p >= 1.0:
            raise DomainError(f"gamma must be >= 1, got {self.gamma_p!r}")
        if not 0.0 <= self.alpha_p <= self.alpha_max:
            raise DomainError(f"alpha={self.alpha_p!r} outside [0, {self.alpha_max!r}]")

    @property
    def K(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def t_occupied(self) -> int:
        return sum(1 for c in self.counts if c > 0)

    @property
    def alpha_max(self) -> float:
        n, K, g = self.n, self.K, self.gamma_p
        return g * n * (K + g * n) / (K * (4 * n - 3))


@dataclass(frozen=True)
class NormBoundInputs:
    """Architecture summary for the norm-based baseline.

    ``pred_counts`` holds ``max_j |pred(l, j)|`` for the hidden layers
    ``l = 1..depth-1``.
    """

    rho: float
    margin_risk: float
    gamma_margin: float
    depth: int
    pred_counts: tuple
    num_classes: int
    sq_pixel_norm_sum: float
    n: int

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise DomainError("depth must be >= 1")
        if len(self.pred_counts) != self.depth - 1:
            raise DomainError(f"expected {self.depth - 1} predecessor counts, got {len(self.pred_counts)}")
        if self.rho < 0 or self.gamma_margin <= 0 or self.sq_pixel_norm_sum < 0 or self.n < 1:
            raise DomainError("norm-bound inputs must be nonnegative with gamma > 0 and n >= 1")
        if any(c < 1 for c in self.pred_counts):
            raise DomainError("predecessor counts must be >= 1")


def _check_mean(value: float, spec: LossSpec, what: str) -> float:
    value = float(value)
    if not spec.b_lower - 1e-12 <= value <= spec.t_upper + 1e-12:
        raise DataError(f"{what}={value!r} outside loss range [{spec.b_lower}, {spec.t_upper}]")
    return min(max(value, spec.b_lower), spec.t_upper)


def _normalized(value: float, spec: LossSpec) -> float:
    if spec.lam == 0.0:
        return 0.0
    return min(1.0, max(0.0, (value - spec.b_lower) / spec.lam))


def _scaled_kl_bound(
    normalized: float, eps: float, spec: LossSpec, comparator: str = "kl", c: float = 1.0, floor: float | None = None
) -> tuple[float, bool]:
    if spec.lam == 0.0:
        return spec.b_lower, False
    p = upper_inverse(normalized, eps, comparator, c)
    if p >= 1.0:
        return spec.t_upper, True
    b = spec.b_lower + spec.lam * p
    # B + lam * ((x - B) / lam) can round a few ulps below x
    if floor is not None:
        b = max(b, floor)
    return min(b, spec.t_upper), False


# --- test-set bounds ---------------------------------------------------------


def test_set_binomial(k: int, m: int, delta: float) -> BoundResult:
    """Exact binomial tail bound on held-out errors."""
    count = EmpiricalCount(k, m)
    delta = check_delta(delta)
    b = binom_tail_inverse(count.k, count.m, delta)
    return BoundResult(b, delta, {"empirical": count.rate, "vacuous": b >= 1.0})


def test_set_chernoff(
    mean_loss: float, spec: LossSpec, m: int, delta: float, *, comparator: str = "kl", c: float = 1.0
) -> BoundResult:
    """Chernoff test-set bound for a bounded loss."""
    if m < 1:
        raise DomainError("m must be >= 1")
    delta = check_delta(delta)
    mean_loss = _check_mean(mean_loss, spec, "mean_loss")
    eps = math.log(1.0 / delta) / m
    b, vac = _scaled_kl_bound(_normalized(mean_loss, spec), eps, spec, comparator, c, floor=mean_loss)
    return BoundResult(b, delta, {"empirical": mean_loss, "eps": eps, "vacuous": vac})


# --- sample compression ------------------------------------------------------


def _log_sc_prior(n: int, m_tilde: int) -> float:
    # ln[(6/pi^2) (m~+1)^-2 C(n, m~)^-1]
    return LOG_SIX_OVER_PI2 - 2.0 * math.log(m_tilde + 1) - log_binom_coef(n, m_tilde)


def sc_binomial(
    n: int, m_tilde: int, complement_errors: int, delta: float, *, use_prior: bool = True
) -> BoundResult:
    """Binomial sample-compression bound, uniform over compression sets.

    ``use_prior=False`` drops the compression-set prior; only meaningful for a
    compression set fixed before seeing the data.
    """
    delta = check_delta(delta)
    if not 0 <= m_tilde < n:
        raise DomainError(f"need 0 <= m_tilde < n, got m_tilde={m_tilde}, n={n}")
    size = n - m_tilde
    count = EmpiricalCount(complement_errors, size)
    log_dp = math.log(delta) + (_log_sc_prior(n, m_tilde) if use_prior else 0.0)
    b = binom_tail_inverse(count.k, size, log_delta=log_dp)
    return BoundResult(
        b, delta, {"empirical": count.rate, "log_delta_prime": log_dp, "vacuous": b >= 1.0}
    )


def _sc_eps(meta: CompressionMeta, delta: float) -> float:
    size = meta.complement_size
    log_penalty = math.log(2.0 * math.sqrt(size)) - math.log(delta) - _log_sc_prior(meta.n, meta.m_tilde)
    return log_penalty / size


def sc_kl(
    meta: CompressionMeta, spec: LossSpec, delta: float, *, comparator: str = "kl", c: float = 1.0
) -> BoundResult:
    """kl-form sample-compression bound for bounded losses."""
    delta = check_delta(delta)
    risk = _check_mean(meta.complement_risk, spec, "complement_risk")
    eps = _sc_eps(meta, delta)
    b, vac = _scaled_kl_bound(_normalized(risk, spec), eps, spec, comparator, c, floor=risk)
    return BoundResult(b, delta, {"empirical": risk, "eps": eps, "vacuous": vac})


def sc_sqrt(meta: CompressionMeta, spec: LossSpec, delta: float) -> BoundResult:
    """Square-root sample-compression bound."""
    delta = check_delta(delta)
    risk = _check_mean(meta.complement_risk, spec, "complement_risk")
    size = meta.complement_size
    log_arg = math.log(2.0 * math.sqrt(size)) - _log_sc_prior(meta.n, meta.m_tilde) - math.log(delta)
    gap = math.sqrt(spec.lam**2 / (2.0 * size) * log_arg)
    b = risk + gap
    return BoundResult(b, delta, {"empirical": risk, "complexity": gap, "vacuous": b >= spec.t_upper})


def p2l_bound(M: int, complement_errors: int, n: int, delta: float) -> BoundResult:
    """Pick-To-Learn bound for a compression set of size ``M``."""
    delta = check_delta(delta)
    if M < 0 or complement_errors < 0:
        raise DomainError("M and complement_errors must be nonnegative")
    k = M + complement_errors
    if k > n:
        raise DomainError(f"M + complement_errors = {k} exceeds n = {n}")
    b = p2l_epsilon(k, n, delta)
    size = n - M
    emp = complement_errors / size if size > 0 else 0.0
    return BoundResult(b, delta, {"empirical": emp, "k": k, "vacuous": b >= 1.0})


# --- model compression -------------------------------------------------------


def _log_code_prior(bits: int) -> float:
    # ln(2^-l * l^-2); the normalizer Z <= 1 is dropped, which only loosens the bound
    return -bits * math.log(2.0) - 2.0 * math.log(bits)


def mc_binomial(code_bits: int, n: int, errors: int, delta: float) -> BoundResult:
    """Binomial model-compression bound under the prefix-code prior."""
    delta = check_delta(delta)
    meta = CodeLengthMeta(code_bits, n, errors / max(n, 1))
    count = EmpiricalCount(errors, meta.n)
    log_dp = math.log(delta) + _log_code_prior(meta.code_bits)
    b = binom_tail_inverse(count.k, count.m, log_delta=log_dp)
    return BoundResult(b, delta, {"empirical": count.rate, "log_delta_prime": log_dp, "vacuous": b >= 1.0})


def mc_kl(
    meta: CodeLengthMeta, spec: LossSpec, delta: float, *, comparator: str = "kl", c: float = 1.0
) -> BoundResult:
    """kl-form model-compression bound."""
    delta = check_delta(delta)
    risk = _check_mean(meta.train_risk, spec, "train_risk")
    n, bits = meta.n, meta.code_bits
    eps = (bits * math.log(2.0) + 2.0 * math.log(bits) + math.log(2.0 * math.sqrt(n) / delta)) / n
    b, vac = _scaled_kl_bound(_normalized(risk, spec), eps, spec, comparator, c, floor=risk)
    return BoundResult(b, delta, {"empirical": risk, "eps": eps, "vacuous": vac})


# --- PAC-Bayes ---------------------------------------------------------------


def pacbayes_mcallester(expected_loss: float, kl_qp: float, n: int, spec: LossSpec, delta: float) -> BoundResult:
    """McAllester bound with an exactly known expected empirical loss."""
    delta = check_delta(delta)
    meta = PACBayesMeta(kl_qp, n)
    loss = _check_mean(expected_loss, spec, "expected_loss")
    gap = spec.lam * math.sqrt((meta.kl_qp + math.log(2.0 * math.sqrt(n) / delta)) / (2.0 * n))
    b = loss + gap
    return BoundResult(b, delta, {"empirical": loss, "complexity": gap, "vacuous": b >= spec.t_upper})


def pacbayes_double_kl(
    meta: PACBayesMeta, spec: LossSpec, delta: float, delta_prime: float, *, comparator: str = "kl"
) -> BoundResult:
    """PAC-Bayes bound with a Monte Carlo estimate of the posterior's empirical loss.

    The inner inverse bounds the posterior mean from ``V`` sampled predictors
    (failure ``delta_prime``); the outer one is the PAC-Bayes-kl step.
    """
    delta = check_delta(delta)
    delta_prime = check_delta(delta_prime)
    if meta.v_samples < 1:
        raise DataError("pacbayes_double_kl needs at least one sampled risk")
    risks = [_check_mean(r, spec, "sampled risk") for r in meta.sampled_risks]
    v = meta.v_samples
    mean_norm = _normalized(math.fsum(risks) / v, spec)
    inner = upper_inverse(mean_norm, math.log(2.0 / delta_prime) / v, comparator)
    eps = (meta.kl_qp + math.log(2.0 * math.sqrt(meta.n) / delta)) / meta.n
    b, vac = _scaled_kl_bound(inner, eps, spec, comparator, floor=math.fsum(risks) / v)
    return BoundResult(
        b,
        delta + delta_prime,
        {"empirical": math.fsum(risks) / v, "inner": inner, "eps": eps, "vacuous": vac},
    )


# --- partition-based baseline -----------------------------------------------


def partition_gamma(alpha_p: float, delta: float) -> float:
    """``gamma = (delta/2)^(-1/alpha)`` so that ``gamma^-alpha = delta/2``."""
    delta = check_delta(delta)
    if not alpha_p > 0.0:
        raise DomainError(f"alpha must be > 0 to choose gamma, got {alpha_p!r}")
    return (delta / 2.0) ** (-1.0 / alpha_p)


def partition_bound(params: PartitionParams, delta: float) -> BoundResult:
    """Partition-based bound evaluated term by term; fails with prob. ``gamma^-alpha + delta``."""
    delta = check_delta(delta)
    n, K, T = params.n, params.K, params.t_occupied
    t_l, g, a = params.t_upper, params.gamma_p, params.alpha_p
    sq = math.fsum((c / n) ** 2 for c in params.counts)
    radicand = g / (2 * n) + g**2 / 2 * sq + g**2 * math.sqrt(2.0 / n * math.log(2 * K / delta))
    first = t_l * math.sqrt(a * math.log(g)) * math.sqrt(radicand)
    log4k = math.log(4 * K / delta)
    second = t_l * (math.sqrt(2.0) + 1.0) * math.sqrt(T * log4k / n)
    third = 2.0 * t_l * T * log4k / n
    b = params.train_risk + first + second + third
    spent = g ** (-a) + delta
    return BoundResult(
        b,
        spent,
        {
            "empirical": params.train_risk,
            "concentration": first,
            "occupancy": second,
            "occupancy_linear": third,
            "vacuous": b >= t_l,
        },
    )


def partition_grid_search(
    candidates: Sequence[tuple],
    delta: float,
    *,
    train_risk: float,
    t_upper: float,
) -> BoundResult:
    """Minimum partition bound over ``(K, counts, alpha)`` candidates under a union bound.

    Each candidate gets ``delta/len(candidates)``; within it, half goes to the
    ``gamma^-alpha`` event and half to the bound's own ``delta``.
    """
    delta = check_delta(delta)
    if not candidates:
        raise DomainError("partition grid search needs at least one candidate")
    share = delta / len(candidates)
    best = None
    for idx, (K, counts, alpha_p) in enumerate(candidates):
        if len(counts) != K:
            raise DomainError(f"candidate {idx}: K={K} but {len(counts)} counts")
        gamma = partition_gamma(alpha_p, share)
        res = partition_bound(PartitionParams(tuple(counts), alpha_p, gamma, t_upper, train_risk), share / 2.0)
        key = (res.risk_bound, idx)
        if best is None or key < best[0]:
            best = (key, res, gamma, alpha_p, K)
    (_, idx), res, gamma, alpha_p, K = best
    terms = dict(res.terms, candidate=idx, K=K, alpha=alpha_p, gamma=gamma)
    return BoundResult(res.risk_bound, delta, terms)


def random_partition_assign(features, K: int, seed: int) -> tuple[list[int], int]:
    """Assign points to the nearest of ``K`` uniformly drawn centroids.

    Centroids are uniform over the per-dimension bounding box of ``features``.
    Returns the occupancy counts and the number of occupied cells.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise DataError("no features to partition")
    if K < 1:
        raise DomainError("K must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = x.min(axis=0), x.max(axis=0)
    centroids = rng.uniform(lo, hi, size=(K, x.shape[1]))
    return assign_to_centroids(x, centroids)


def assign_to_centroids(features, centroids) -> tuple[list[int], int]:
    x = np.asarray(features, dtype=float)
    c = np.asarray(centroids, dtype=float)
    counts = np.zeros(c.shape[0], dtype=int)
    for start in range(0, x.shape[0], 4096):
        chunk = x[start : start + 4096]
        d2 = ((chunk[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1)
        counts += np.bincount(np.argmin(d2, axis=1), minlength=c.shape[0])
    counts = counts.tolist()
    return counts, sum(1 for v in counts if v > 0)


# --- norm-based baseline -----------------------------------------------------


def norm_capacity_log(inputs: NormBoundInputs) -> float:
    """``ln Lambda(h)``."""
    log_preds = math.fsum(math.log(c) for c in inputs.pred_counts)
    inner = 2.0 * (inputs.depth * math.log(2.0) + log_preds + math.log(inputs.num_classes))
    log_sqrt_part = 0.5 * (log_preds + math.log(inputs.sq_pixel_norm_sum)) if inputs.sq_pixel_norm_sum > 0 else -math.inf
    return math.log1p(math.sqrt(inner)) + log_sqrt_part


def norm_bound(inputs: NormBoundInputs, delta: float) -> BoundResult:
    """Norm-based baseline; typically astronomically vacuous for deep networks."""
    delta = check_delta(delta)
    rho, n = inputs.rho, inputs.n
    log_cap = norm_capacity_log(inputs)
    log_first = math.log(2.0 * math.sqrt(2.0) * (rho + 1.0)) - math.log(inputs.gamma_margin * n) + log_cap
    first = math.exp(log_first) if log_first < 709.0 else math.inf
    second = 3.0 * math.sqrt(math.log(2.0 * (rho + 2.0) ** 2 / delta) / (2.0 * n))
    b = inputs.margin_risk + first + second
    return BoundResult(
        b,
        delta,
        {
            "empirical": inputs.margin_risk,
            "capacity": first,
            "log10_capacity": log_first / math.log(10.0),
            "confidence": second,
            "vacuous": b >= 1.0,
        },
    )
