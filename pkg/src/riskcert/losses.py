"""Bounded losses, softmax variants and disagreement statistics over prediction records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np

from .errors import DataError, DomainError, UsageError
from .invert import EmpiricalCount

ALL = "all"
SampleIndex = Union[int, Literal["all"]]

LOSS_KINDS = ("zero_one", "xent_clamped", "xent_smoothed", "huber")
DEFAULT_ALPHA = 1e-3
DEFAULT_DELTA_H = 0.2


@dataclass(frozen=True)
class LossSpec:
    """Identity and range of a bounded loss.

    Use the constructors (:meth:`zero_one`, :meth:`xent_clamped`,
    :meth:`xent_smoothed`, :meth:`huber`) rather than filling the range by hand.
    """

    kind: str
    num_classes: int
    b_lower: float
    t_upper: float
    alpha: float | None = None
    delta_h: float | None = None
    lipschitz: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise DomainError(f"unknown loss kind {self.kind!r}")
        if self.num_classes < 2:
            raise DomainError(f"need at least 2 classes, got {self.num_classes}")
        if not self.b_lower <= self.t_upper:
            raise DomainError("loss range must satisfy b_lower <= t_upper")

    @property
    def lam(self) -> float:
        """Range ``T - B``."""
        return self.t_upper - self.b_lower

    @classmethod
    def zero_one(cls, num_classes: int) -> "LossSpec":
        return cls("zero_one", num_classes, 0.0, 1.0)

    @classmethod
    def xent_clamped(cls, num_classes: int, alpha: float = DEFAULT_ALPHA) -> "LossSpec":
        _check_alpha(alpha)
        beta = num_classes / alpha
        return cls("xent_clamped", num_classes, 0.0, math.log(beta), alpha=alpha, lipschitz=beta)

    @classmethod
    def xent_smoothed(cls, num_classes: int, alpha: float = DEFAULT_ALPHA) -> "LossSpec":
        _check_alpha(alpha)
        beta = num_classes / alpha
        # the largest smoothed probability is 1 - alpha + alpha/C, so the
        # smallest loss is -ln of it; T - B is then ln(1 + (1-alpha) C/alpha)
        b = -math.log1p(-alpha + alpha / num_classes)
        return cls("xent_smoothed", num_classes, b, math.log(beta), alpha=alpha, lipschitz=beta)

    @classmethod
    def huber(cls, num_classes: int, delta_h: float = DEFAULT_DELTA_H) -> "LossSpec":
        if not 0.0 < delta_h <= 1.0:
            raise DomainError(f"Huber threshold must lie in (0, 1], got {delta_h!r}")
        return cls(
            "huber", num_classes, 0.0, delta_h - delta_h**2 / 2, delta_h=delta_h, lipschitz=delta_h
        )


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


@dataclass
class PredictionRecord:
    """Outputs of the target ``f`` and of ``V`` surrogate samples on one example."""

    id: str
    split: str
    f_logits: np.ndarray
    h_logits: np.ndarray  # shape (V, C)
    label: int | None = None

    def __post_init__(self) -> None:
        self.f_logits = np.asarray(self.f_logits, dtype=float)
        h = np.asarray(self.h_logits, dtype=float)
        if h.ndim == 1:
            h = h[None, :]
        self.h_logits = h
        if self.split not in ("S", "U", "L"):
            raise DataError(f"record {self.id}: unknown split {self.split!r}")
        if self.f_logits.ndim != 1 or h.ndim != 2 or h.shape[0] < 1:
            raise DataError(f"record {self.id}: bad logit shapes")
        if h.shape[1] != self.f_logits.shape[0]:
            raise DataError(f"record {self.id}: f and h logits have different lengths")
        if self.split == "L" and self.label is None:
            raise DataError(f"record {self.id}: split L requires a label")
        if self.label is not None and not 0 <= self.label < self.num_classes:
            raise DataError(f"record {self.id}: label {self.label} outside [0, {self.num_classes})")

    @property
    def num_classes(self) -> int:
        return self.f_logits.shape[0]

    @property
    def v_samples(self) -> int:
        return self.h_logits.shape[0]


@dataclass(frozen=True)
class DisagreementStats:
    d01: EmpiricalCount
    dk_mean: float
    dl_mean: float | None = None
    dhat_mean: float | None = None
    m: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", self.d01.m)


# --- softmax variants ------------------------------------------------------


def _finite(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DataError("logits must be finite")
    return z


def softmax(logits) -> np.ndarray:
    """Softmax over the last axis, with max subtraction."""
    z = _finite(logits)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _label_softmax(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    p = softmax(logits)
    return np.take_along_axis(p, labels[..., None], axis=-1)[..., 0]


def clamped_softmax(logits, y: int, alpha: float) -> float:
    """``max(alpha/C, softmax(logits)[y])``."""
    _check_alpha(alpha)
    p = softmax(logits)
    return float(max(alpha / p.shape[-1], p[y]))


def smoothed_softmax(logits, y: int, alpha: float) -> float:
    """``(1 - alpha) softmax(logits)[y] + alpha/C``."""
    _check_alpha(alpha)
    p = softmax(logits)
    return float((1.0 - alpha) * p[y] + alpha / p.shape[-1])


def label_probabilities(spec: LossSpec, logits, labels) -> np.ndarray:
    """Clamped or smoothed probability assigned to the label, batched over rows."""
    z = _finite(logits)
    y = np.asarray(labels, dtype=int)
    p = _label_softmax(z, y)
    floor = spec.alpha / spec.num_classes if spec.alpha is not None else None
    if spec.kind == "xent_clamped":
        return np.maximum(floor, p)
    if spec.kind == "xent_smoothed":
        return (1.0 - spec.alpha) * p + floor
    raise UsageError(f"label probabilities are defined for cross-entropy losses, not {spec.kind}")


def argmax_labels(logits) -> np.ndarray:
    # np.argmax returns the first maximal index: ties go to the lowest class
    return np.argmax(np.asarray(logits), axis=-1)


def loss_values(spec: LossSpec, logits, labels) -> np.ndarray:
    """Per-row loss of ``logits`` (shape ``(N, C)``) against integer ``labels``."""
    z = _finite(logits)
    y = np.asarray(labels, dtype=int)
    if z.shape[-1] != spec.num_classes:
        raise DataError(f"expected {spec.num_classes} logits, got {z.shape[-1]}")
    if spec.kind == "zero_one":
        return (argmax_labels(z) != y).astype(float)
    if spec.kind in ("xent_clamped", "xent_smoothed"):
        out = -np.log(label_probabilities(spec, z, y))
    else:
        p = softmax(z)
        onehot = np.zeros_like(p)
        np.put_along_axis(onehot, y[..., None], 1.0, axis=-1)
        d = np.abs(p - onehot)
        dh = spec.delta_h
        per = np.where(d <= dh, 0.5 * d**2, dh * d - 0.5 * dh**2)
        out = per.mean(axis=-1)
    # rounding can leave values a few ulps outside the analytic range
    return np.clip(out, spec.b_lower, spec.t_upper)


def loss_gaps(spec: LossSpec, logits_a, logits_b, labels) -> np.ndarray:
    """Per-row ``|loss(a) - loss(b)|``.

    For cross-entropy the gap is ``log1p(|p_a - p_b| / min(p_a, p_b))``, which
    avoids cancelling two nearly equal logarithms.
    """
    if spec.kind not in ("xent_clamped", "xent_smoothed"):
        return np.abs(loss_values(spec, logits_a, labels) - loss_values(spec, logits_b, labels))
    pa = label_probabilities(spec, logits_a, labels)
    pb = label_probabilities(spec, logits_b, labels)
    gap = np.log1p(np.abs(pa - pb) / np.minimum(pa, pb))
    return np.minimum(gap, spec.lam)


def eval_loss(spec: LossSpec, logits, label: int | None) -> float:
    if label is None:
        raise DataError("loss evaluation needs a label")
    return float(loss_values(spec, np.asarray(logits, dtype=float)[None, :], [label])[0])


# --- statistics over records -------------------------------------------------


def _stack(records: Sequence[PredictionRecord], need_labels: bool = False):
    if len(records) == 0:
        raise DataError("no records")
    f = np.stack([r.f_logits for r in records])
    h = np.stack([r.h_logits for r in records])
    if need_labels:
        if any(r.label is None for r in records):
            raise DataError("every record needs a label for this statistic")
        y = np.array([r.label for r in records], dtype=int)
    else:
        y = None
    return f, h, y


def _sample_views(h: np.ndarray, sample_index: SampleIndex) -> list[np.ndarray]:
    v = h.shape[1]
    if sample_index == ALL:
        return [h[:, j, :] for j in range(v)]
    if not isinstance(sample_index, (int, np.integer)) or not 0 <= sample_index < v:
        raise UsageError(f"sample_index {sample_index!r} outside [0, {v})")
    return [h[:, int(sample_index), :]]


def disagreement_01(records: Sequence[PredictionRecord], sample_index: int = 0) -> EmpiricalCount:
    """Count of records whose predicted classes differ between ``f`` and one ``h`` sample."""
    if sample_index == ALL:
        raise UsageError("zero-one counts are per sample; pass an integer sample_index")
    f, h, _ = _stack(records)
    (hv,) = _sample_views(h, sample_index)
    k = int(np.count_nonzero(argmax_labels(f) != argmax_labels(hv)))
    return EmpiricalCount(k, len(records))


def disagreement_l1(records: Sequence[PredictionRecord], sample_index: SampleIndex = 0) -> float:
    """Mean L1 distance between the softmax vectors of ``f`` and ``h``."""
    f, h, _ = _stack(records)
    pf = softmax(f)
    vals = [np.abs(pf - softmax(hv)).sum(axis=-1).mean() for hv in _sample_views(h, sample_index)]
    return float(np.mean(vals))


def disagreement_loss(
    records: Sequence[PredictionRecord], spec: LossSpec, sample_index: SampleIndex = 0
) -> float:
    """Mean absolute loss difference ``d_L`` on labelled records."""
    f, h, y = _stack(records, need_labels=True)
    vals = [loss_gaps(spec, f, hv, y).mean() for hv in _sample_views(h, sample_index)]
    return float(np.mean(vals))


def disagreement_label_prob(
    records: Sequence[PredictionRecord], spec: LossSpec, sample_index: SampleIndex = 0
) -> float:
    """Mean absolute difference of the clamped/smoothed label probabilities."""
    if spec.kind not in ("xent_clamped", "xent_smoothed"):
        raise UsageError(f"label-probability disagreement needs a cross-entropy spec, not {spec.kind}")
    f, h, y = _stack(records, need_labels=True)
    pf = label_probabilities(spec, f, y)
    vals = [np.abs(pf - label_probabilities(spec, hv, y)).mean() for hv in _sample_views(h, sample_index)]
    return float(np.mean(vals))


def empirical_risk(
    records: Sequence[PredictionRecord], spec: LossSpec, which: Union[str, int] = "f"
) -> float:
    """Mean loss of ``f`` (``which="f"``) or of surrogate sample ``which``."""
    f, h, y = _stack(records, need_labels=True)
    if which == "f":
        z = f
    else:
        (z,) = _sample_views(h, which)
    return float(loss_values(spec, z, y).mean())


def disagreement_stats(
    records: Sequence[PredictionRecord], spec: LossSpec | None = None, sample_index: int = 0
) -> DisagreementStats:
    """All disagreement statistics of one surrogate sample; loss-based ones need labels."""
    d01 = disagreement_01(records, sample_index)
    dk = disagreement_l1(records, sample_index)
    dl = dhat = None
    if spec is not None and all(r.label is not None for r in records):
        dl = disagreement_loss(records, spec, sample_index)
        if spec.kind in ("xent_clamped", "xent_smoothed"):
            dhat = disagreement_label_prob(records, spec, sample_index)
    return DisagreementStats(d01, dk, dl, dhat)


CLI_LOSS_NAMES = {
    "01": "zero_one",
    "xent-clamped": "xent_clamped",
    "xent-smoothed": "xent_smoothed",
    "huber": "huber",
}


def make_spec(
    loss: str, num_classes: int, alpha: float = DEFAULT_ALPHA, delta_h: float = DEFAULT_DELTA_H
) -> LossSpec:
    """Build a spec from a short loss name (``01``, ``xent-clamped``, ``xent-smoothed``, ``huber``)."""
    kind = CLI_LOSS_NAMES.get(loss, loss)
    if kind == "zero_one":
        return LossSpec.zero_one(num_classes)
    if kind == "xent_clamped":
        return LossSpec.xent_clamped(num_classes, alpha)
    if kind == "xent_smoothed":
        return LossSpec.xent_smoothed(num_classes, alpha)
    if kind == "huber":
        return LossSpec.huber(num_classes, delta_h)
    raise UsageError(f"unknown loss {loss!r}")
