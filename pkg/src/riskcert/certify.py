"""Disagreement bounds and their composition with surrogate certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import DataError, DomainError, UsageError
from .invert import EmpiricalCount, binom_tail_inverse, check_delta, kl_inverse
from .losses import LossSpec
from .surrogate_bounds import BoundResult

USE_CASES = ("certify_target", "certify_uniform", "risk_gap")

SURROGATE = "surrogate"
DISAGREEMENT = "disagreement"


def _exact_sum(values) -> Fraction:
    return sum((Fraction(v) for v in values), Fraction(0))


@dataclass(frozen=True)
class DeltaBudget:
    """Failure probability split across the terms of a composed certificate.

    Keys starting with ``"surrogate"`` belong to the surrogate certificate and
    the others to the disagreement term. The allocation must sum to ``total``
    exactly in rational arithmetic.
    """

    total: float
    allocation: Mapping[str, float]

    def __post_init__(self) -> None:
        check_delta(self.total)
        alloc = {str(k): float(v) for k, v in self.allocation.items()}
        if not alloc:
            raise UsageError("empty delta allocation")
        for name, d in alloc.items():
            if not d > 0.0:
                raise UsageError(f"delta share {name!r} must be > 0, got {d!r}")
        if _exact_sum(alloc.values()) != Fraction(self.total):
            raise UsageError(
                f"delta shares sum to {float(_exact_sum(alloc.values()))!r}, not the total {self.total!r}"
            )
        object.__setattr__(self, "allocation", alloc)

    @classmethod
    def halves(cls, total: float) -> "DeltaBudget":
        """Equal split between surrogate and disagreement terms."""
        half = float(total) / 2.0
        return cls(float(total), {SURROGATE: half, DISAGREEMENT: half})

    @classmethod
    def same_delta(cls, delta: float) -> "DeltaBudget":
        """Each term at ``delta``, for an overall ``2 delta``."""
        delta = check_delta(delta)
        return cls(2.0 * delta, {SURROGATE: delta, DISAGREEMENT: delta})

    @classmethod
    def quarters(cls, total: float) -> "DeltaBudget":
        """Four equal shares for the Monte Carlo PAC-Bayes composition."""
        q = float(total) / 4.0
        return cls(
            float(total),
            {"surrogate_pacbayes": q, "surrogate_mc": q, "disagreement_mc": q, DISAGREEMENT: q},
        )

    @classmethod
    def single(cls, delta: float) -> "DeltaBudget":
        return cls(float(delta), {DISAGREEMENT: float(delta)})

    def _group(self, surrogate: bool) -> list[float]:
        return [v for k, v in self.allocation.items() if k.startswith(SURROGATE) == surrogate]

    @property
    def surrogate_delta(self) -> float:
        return float(_exact_sum(self._group(True)))

    @property
    def disagreement_delta(self) -> float:
        return float(_exact_sum(self._group(False)))

    @property
    def has_surrogate(self) -> bool:
        return bool(self._group(True))

    @property
    def has_disagreement(self) -> bool:
        return bool(self._group(False))

    def is_conserved(self) -> bool:
        return _exact_sum(self.allocation.values()) == Fraction(self.total)


@dataclass(frozen=True)
class SurrogatePrior:
    """Prior masses over a countable surrogate family."""

    masses: Mapping[str, float]

    def __post_init__(self) -> None:
        masses = {str(k): float(v) for k, v in self.masses.items()}
        for name, q in masses.items():
            if not 0.0 < q <= 1.0:
                raise UsageError(f"prior mass of {name!r} must lie in (0, 1], got {q!r}")
        if _exact_sum(masses.values()) > 1:
            raise UsageError("prior masses sum to more than 1")
        object.__setattr__(self, "masses", masses)

    @classmethod
    def uniform(cls, ids: Sequence[str]) -> "SurrogatePrior":
        if not ids:
            raise UsageError("uniform prior over an empty family")
        return cls({i: 1.0 / len(ids) for i in ids})

    def mass(self, surrogate_id: str) -> float:
        if surrogate_id not in self.masses:
            raise UsageError(f"surrogate {surrogate_id!r} has no prior mass")
        return self.masses[surrogate_id]


@dataclass
class CertificateReport:
    target_bound: float
    surrogate_bound: BoundResult | None
    disagreement_term: float
    budget: DeltaBudget
    use_case: str
    inputs_digest: str = ""
    vacuous: bool = False
    details: dict = field(default_factory=dict)

    @property
    def confidence(self) -> float:
        return 1.0 - self.budget.total

    def to_dict(self) -> dict:
        return {
            "use_case": self.use_case,
            "target_bound": self.target_bound,
            "surrogate_bound": None if self.surrogate_bound is None else self.surrogate_bound.to_dict(),
            "disagreement_term": self.disagreement_term,
            "budget": {"total": self.budget.total, "allocation": dict(self.budget.allocation)},
            "inputs_digest": self.inputs_digest,
            "vacuous": self.vacuous,
            "details": dict(self.details),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CertificateReport":
        try:
            sb = d["surrogate_bound"]
            return cls(
                target_bound=float(d["target_bound"]),
                surrogate_bound=None if sb is None else BoundResult.from_dict(sb),
                disagreement_term=float(d["disagreement_term"]),
                budget=DeltaBudget(float(d["budget"]["total"]), d["budget"]["allocation"]),
                use_case=str(d["use_case"]),
                inputs_digest=str(d.get("inputs_digest", "")),
                vacuous=bool(d.get("vacuous", False)),
                details=dict(d.get("details", {})),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"not a certificate report: {exc}") from None


# --- disagreement terms ------------------------------------------------------


def _check_m(m: int) -> int:
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    return int(m)


def disagree_01(count: EmpiricalCount, delta: float) -> float:
    """Upper bound on the true zero-one disagreement rate."""
    return binom_tail_inverse(count.k, count.m, check_delta(delta))


def disagree_lipschitz(dk_mean: float, K_ell: float | None, m: int, delta: float) -> float:
    """Disagreement term for a ``K_ell``-Lipschitz loss from mean L1 softmax distance."""
    if K_ell is None:
        raise UsageError("the loss has no Lipschitz constant")
    if not K_ell > 0.0:
        raise DomainError(f"Lipschitz constant must be > 0, got {K_ell!r}")
    dk_mean = float(dk_mean)
    if not 0.0 <= dk_mean <= 2.0:
        raise DataError(f"mean L1 softmax distance must lie in [0, 2], got {dk_mean!r}")
    m = _check_m(m)
    eps = math.log(1.0 / check_delta(delta)) / m
    return 2.0 * K_ell * kl_inverse(dk_mean / 2.0, eps)


def _normalized_dl(dl_mean: float, spec: LossSpec) -> float:
    dl_mean = float(dl_mean)
    if not dl_mean >= 0.0:
        raise DataError(f"loss disagreement must be >= 0, got {dl_mean!r}")
    if dl_mean > spec.lam:
        raise DataError(f"loss disagreement {dl_mean!r} exceeds the loss range {spec.lam!r}")
    return dl_mean / spec.lam if spec.lam > 0 else 0.0


def disagree_loss(dl_mean: float, spec: LossSpec, m: int, delta: float) -> float:
    """Disagreement term for any bounded loss, from labelled loss differences."""
    q = _normalized_dl(dl_mean, spec)
    m = _check_m(m)
    eps = math.log(1.0 / check_delta(delta)) / m
    return spec.lam * kl_inverse(q, eps)


def mc_sample_halves(v: int) -> tuple[range, range]:
    """Index ranges of the surrogate half and the disagreement half of ``2v`` posterior samples."""
    if v < 1:
        raise UsageError("need at least one posterior sample per half")
    return range(0, v), range(v, 2 * v)


def disagree_pacbayes_mc(
    per_sample_dl: Sequence[float],
    spec: LossSpec,
    m: int,
    delta_inner: float,
    delta_outer: float,
    *,
    sample_indices: Sequence[int] | None = None,
    surrogate_indices: Sequence[int] | None = None,
) -> float:
    """Disagreement term averaged over ``V`` posterior samples.

    When index sets are given, the samples used here must not overlap those
    used for the surrogate's own Monte Carlo estimate.
    """
    v = len(per_sample_dl)
    if v < 1:
        raise DataError("need at least one posterior sample")
    if sample_indices is not None:
        if len(sample_indices) != v:
            raise UsageError("sample_indices must match per_sample_dl in length")
        if surrogate_indices is not None and set(sample_indices) & set(surrogate_indices):
            raise UsageError("posterior samples are reused between surrogate and disagreement estimates")
    qs = [_normalized_dl(x, spec) for x in per_sample_dl]
    m = _check_m(m)
    inner = kl_inverse(min(1.0, math.fsum(qs) / v), math.log(1.0 / check_delta(delta_inner)) / v)
    outer = kl_inverse(inner, math.log(1.0 / check_delta(delta_outer)) / m)
    return spec.lam * outer


@dataclass(frozen=True)
class DisagreementInputs:
    """Precomputed disagreement statistic plus the recipe to turn it into a bound.

    ``kind`` is one of ``"01"`` (``stat`` is an :class:`EmpiricalCount`),
    ``"lipschitz"`` (mean L1 distance), ``"loss"`` (mean loss difference) or
    ``"pacbayes_mc"`` (per-sample loss differences; the budget is halved
    between inner and outer inversions).
    """

    kind: str
    stat: object
    m: int
    spec: LossSpec | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("01", "lipschitz", "loss", "pacbayes_mc"):
            raise UsageError(f"unknown disagreement kind {self.kind!r}")
        if self.kind != "01" and self.spec is None:
            raise UsageError(f"disagreement kind {self.kind!r} needs a loss spec")

    def bound(self, delta: float) -> float:
        if self.kind == "01":
            stat = self.stat
            if not isinstance(stat, EmpiricalCount):
                stat = EmpiricalCount(*stat)
            return disagree_01(stat, delta)
        if self.kind == "lipschitz":
            return disagree_lipschitz(float(self.stat), self.spec.lipschitz, self.m, delta)
        if self.kind == "loss":
            return disagree_loss(float(self.stat), self.spec, self.m, delta)
        half = delta / 2.0
        return disagree_pacbayes_mc(list(self.stat), self.spec, self.m, half, half)


# --- composition -------------------------------------------------------------


def _check_surrogate_share(surrogate: BoundResult, budget: DeltaBudget) -> None:
    if not budget.has_surrogate or not budget.has_disagreement:
        raise UsageError("budget must allocate both a surrogate and a disagreement share")
    if Fraction(surrogate.delta_spent) != _exact_sum(budget._group(True)):
        raise UsageError(
            f"surrogate certificate spends {surrogate.delta_spent!r} but the budget allots "
            f"{budget.surrogate_delta!r}"
        )


def _vacuous(surrogate: BoundResult | None, target: float, t_upper: float | None) -> bool:
    if surrogate is not None and surrogate.vacuous:
        return True
    return t_upper is not None and target >= t_upper


def certify_target(
    surrogate: BoundResult,
    disagreement: float,
    budget: DeltaBudget,
    *,
    inputs_digest: str = "",
    t_upper: float | None = None,
) -> CertificateReport:
    """Bound on the target's true loss: surrogate certificate plus disagreement term."""
    _check_surrogate_share(surrogate, budget)
    target = surrogate.risk_bound + float(disagreement)
    return CertificateReport(
        target,
        surrogate,
        float(disagreement),
        budget,
        "certify_target",
        inputs_digest,
        _vacuous(surrogate, target, t_upper),
    )


def certify_uniform(
    surrogate_id: str,
    prior: SurrogatePrior,
    surrogate: BoundResult,
    disagreement_inputs: DisagreementInputs,
    budget: DeltaBudget,
    *,
    inputs_digest: str = "",
    t_upper: float | None = None,
) -> CertificateReport:
    """Like :func:`certify_target` but valid simultaneously over a surrogate family."""
    q = prior.mass(surrogate_id)
    _check_surrogate_share(surrogate, budget)
    d = disagreement_inputs.bound(budget.disagreement_delta * q)
    report = certify_target(surrogate, d, budget, inputs_digest=inputs_digest, t_upper=t_upper)
    report.use_case = "certify_uniform"
    report.details = {"surrogate_id": surrogate_id, "prior_mass": q}
    return report


def risk_gap(
    disagreement: float, budget: DeltaBudget, *, inputs_digest: str = ""
) -> CertificateReport:
    """Certificate on ``L_D(f) - L_D(h)`` alone."""
    if budget.has_surrogate:
        raise UsageError("a risk-gap certificate has no surrogate share")
    d = float(disagreement)
    return CertificateReport(d, None, d, budget, "risk_gap", inputs_digest, False)
