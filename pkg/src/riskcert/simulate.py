"""Synthetic worlds with known true risks, coverage experiments and brute-force oracles."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp, rel_entr

from . import certify as cf
from . import surrogate_bounds as sb
from .errors import DataError, DomainError, UsageError
from .invert import EmpiricalCount, check_delta
from .losses import LossSpec, loss_values, make_spec, softmax

WORLD_KINDS = ("bernoulli_pair", "bounded_loss_pair", "softmax_atoms")


@dataclass(frozen=True)
class SyntheticWorld:
    """Data law for a pair (f, h) whose true risks are known in closed form.

    * ``bernoulli_pair``: zero-one errors of f and h with a given disagreement rate.
    * ``bounded_loss_pair``: per-example losses ``l_h = B + lam * X / 2`` with
      ``X ~ Beta(h_beta)`` and ``l_f = l_h + lam * D / 2`` with ``D ~ Beta(d_beta)``.
    * ``softmax_atoms``: finitely many (f logits, h logits, label) atoms with
      known weights, for losses defined on softmax outputs.
    """

    kind: str
    p_f: float
    p_h: float
    p_disagree: float
    spec: LossSpec | None = None
    h_beta: tuple = (2.0, 5.0)
    d_beta: tuple = (1.0, 4.0)
    atoms: dict | None = field(default=None, compare=False)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in WORLD_KINDS:
            raise DomainError(f"unknown world kind {self.kind!r}")
        # the truth-table inequality every world must satisfy
        if abs(self.p_f - self.p_h) > self.p_disagree + 1e-15:
            raise DomainError(
                f"|p_f - p_h| = {abs(self.p_f - self.p_h)!r} exceeds p_disagree = {self.p_disagree!r}"
            )

    @classmethod
    def bernoulli_pair(cls, p_f: float, p_h: float, p_disagree: float, seed: int = 0) -> "SyntheticWorld":
        w = cls("bernoulli_pair", p_f, p_h, p_disagree, seed=seed)
        w.cells()
        return w

    @classmethod
    def bounded_loss_pair(
        cls, spec: LossSpec, h_beta=(2.0, 5.0), d_beta=(1.0, 4.0), seed: int = 0
    ) -> "SyntheticWorld":
        mean_x = h_beta[0] / (h_beta[0] + h_beta[1])
        mean_d = d_beta[0] / (d_beta[0] + d_beta[1])
        l_h = spec.b_lower + spec.lam * mean_x / 2.0
        gap = spec.lam * mean_d / 2.0
        return cls("bounded_loss_pair", l_h + gap, l_h, gap, spec, tuple(h_beta), tuple(d_beta), seed=seed)

    @classmethod
    def softmax_atoms(
        cls, spec: LossSpec, n_atoms: int = 64, noise: float = 1.0, seed: int = 0
    ) -> "SyntheticWorld":
        rng = _rng(seed, 2**31)
        C = spec.num_classes
        f = rng.normal(0.0, 2.0, size=(n_atoms, C))
        h = f + rng.normal(0.0, noise, size=(n_atoms, C))
        y = rng.integers(0, C, size=n_atoms)
        w = rng.dirichlet(np.ones(n_atoms))
        lf, lh = loss_values(spec, f, y), loss_values(spec, h, y)
        l1 = np.abs(softmax(f) - softmax(h)).sum(axis=-1)
        atoms = {"weights": w, "loss_f": lf, "loss_h": lh, "l1": l1}
        p_f, p_h = float(w @ lf), float(w @ lh)
        # |l_f - l_h| <= K |p_f - p_h|_1 pointwise, so this bounds the gap
        dis = float(w @ np.abs(lf - lh))
        return cls("softmax_atoms", p_f, p_h, dis, spec, atoms=atoms, seed=seed)

    def cells(self) -> np.ndarray:
        """Probabilities of (f wrong h right, f right h wrong, both wrong, both right)."""
        if self.kind != "bernoulli_pair":
            raise UsageError("cells are defined for bernoulli_pair worlds")
        diff = self.p_f - self.p_h
        a = (self.p_disagree + diff) / 2.0
        b = (self.p_disagree - diff) / 2.0
        both = self.p_f - a
        rest = 1.0 - a - b - both
        cells = np.array([a, b, both, rest])
        if np.any(cells < -1e-15):
            raise DomainError("rates do not define a valid joint law (disagreement too large)")
        return np.clip(cells, 0.0, None)

    @property
    def mean_x(self) -> float:
        return self.h_beta[0] / (self.h_beta[0] + self.h_beta[1])


@dataclass(frozen=True)
class CoverageResult:
    bound_id: str
    m: int
    delta: float
    trials: int
    violations: int
    seed: int

    def __post_init__(self) -> None:
        if not 0 <= self.violations <= self.trials:
            raise DomainError("violations must lie in [0, trials]")

    @property
    def empirical_coverage(self) -> float:
        return 1.0 - self.violations / self.trials

    @property
    def target(self) -> float:
        return 1.0 - self.delta

    @property
    def threshold(self) -> float:
        return self.target - 3.0 * math.sqrt(self.delta * (1.0 - self.delta) / self.trials)

    @property
    def passed(self) -> bool:
        return self.empirical_coverage >= self.threshold

    def row(self) -> dict:
        return {
            "bound": self.bound_id,
            "m": self.m,
            "delta": repr(self.delta),
            "trials": self.trials,
            "seed": self.seed,
            "violations": self.violations,
            "coverage": repr(self.empirical_coverage),
            "target": repr(self.target),
            "threshold": repr(self.threshold),
            "pass": str(self.passed).lower(),
        }


def _rng(seed: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


# --- coverage handlers -------------------------------------------------------
#
# A handler draws the statistic of one trial with ``sample(rng)`` and maps it to
# a bound with ``bound(stat)``. A trial violates when ``bound(stat) < truth``.


class _Handler:
    cacheable = False

    def __init__(self, world: SyntheticWorld, m: int, delta: float, options: dict) -> None:
        self.world, self.m, self.delta, self.opt = world, m, delta, options
        self._cache: dict = {}

    def evaluate(self, stat) -> float:
        if not self.cacheable:
            return self.bound(stat)
        if stat not in self._cache:
            # benign race under threads: both writers store the same value
            self._cache[stat] = self.bound(stat)
        return self._cache[stat]

    def violated(self, rng) -> bool:
        return self.evaluate(self.sample(rng)) < self.truth


def _need(world: SyntheticWorld, *kinds: str) -> None:
    if world.kind not in kinds:
        raise UsageError(f"bound needs a {' or '.join(kinds)} world, got {world.kind}")


class _Disagree01(_Handler):
    cacheable = True

    def __init__(self, *a) -> None:
        super().__init__(*a)
        _need(self.world, "bernoulli_pair")
        self.cells = self.world.cells()
        self.truth = self.world.p_f - self.world.p_h

    def sample(self, rng):
        c = rng.multinomial(self.m, self.cells)
        return int(c[0] + c[1])

    def bound(self, k):
        return cf.disagree_01(EmpiricalCount(k, self.m), self.delta)


class _ErrorCount(_Handler):
    cacheable = True

    def __init__(self, *a) -> None:
        super().__init__(*a)
        _need(self.world, "bernoulli_pair")
        self.truth = self.world.p_f
        self.size = self.m

    def sample(self, rng):
        return int(rng.binomial(self.size, self.world.p_f))


class _TestSetBinomial(_ErrorCount):
    def bound(self, k):
        return sb.test_set_binomial(k, self.m, self.delta).risk_bound


class _SCBinomial(_ErrorCount):
    def __init__(self, *a) -> None:
        super().__init__(*a)
        self.m_tilde = int(self.opt.get("m_tilde", min(5, self.m - 1)))
        self.size = self.m - self.m_tilde

    def bound(self, k):
        return sb.sc_binomial(self.m, self.m_tilde, k, self.delta).risk_bound


class _MCBinomial(_ErrorCount):
    def bound(self, k):
        return sb.mc_binomial(int(self.opt.get("code_bits", 16)), self.m, k, self.delta).risk_bound


class _P2L(_ErrorCount):
    def __init__(self, *a) -> None:
        super().__init__(*a)
        self.M = int(self.opt.get("M", min(2, self.m - 1)))
        self.size = self.m - self.M

    def bound(self, k):
        return sb.p2l_bound(self.M, k, self.m, self.delta).risk_bound


class _LossMean(_Handler):
    """Surrogate bounds on the mean of ``l_h``."""

    def __init__(self, *a) -> None:
        super().__init__(*a)
        _need(self.world, "bounded_loss_pair")
        self.spec = self.world.spec
        self.truth = self.world.p_h

    def draw_mean(self, rng, size: int) -> float:
        x = rng.beta(*self.world.h_beta, size=size)
        return self.spec.b_lower + self.spec.lam * float(np.mean(x)) / 2.0

    def sample(self, rng):
        return self.draw_mean(rng, self.m)


class _Chernoff(_LossMean):
    def bound(self, mean):
        return sb.test_set_chernoff(mean, self.spec, self.m, self.delta).risk_bound


class _SCKL(_LossMean):
    def __init__(self, *a) -> None:
        super().__init__(*a)
        self.m_tilde = int(self.opt.get("m_tilde", min(5, self.m - 1)))

    def sample(self, rng):
        return self.draw_mean(rng, self.m - self.m_tilde)

    def bound(self, mean):
        return sb.sc_kl(sb.CompressionMeta(self.m, self.m_tilde, mean), self.spec, self.delta).risk_bound


class _SCSqrt(_SCKL):
    def bound(self, mean):
        return sb.sc_sqrt(sb.CompressionMeta(self.m, self.m_tilde, mean), self.spec, self.delta).risk_bound


class _MCKL(_LossMean):
    def bound(self, mean):
        meta = sb.CodeLengthMeta(int(self.opt.get("code_bits", 16)), self.m, mean)
        return sb.mc_kl(meta, self.spec, self.delta).risk_bound


class _McAllester(_LossMean):
    def bound(self, mean):
        return sb.pacbayes_mcallester(mean, 0.0, self.m, self.spec, self.delta).risk_bound


class _DoubleKL(_LossMean):
    """Posterior equal to the prior (KL = 0); ``V`` sampled surrogates, each scored on ``m`` points."""

    def sample(self, rng):
        v = int(self.opt.get("v", 10))
        return tuple(self.draw_mean(rng, self.m) for _ in range(v))

    def bound(self, risks):
        half = self.delta / 2.0
        return sb.pacbayes_double_kl(sb.PACBayesMeta(0.0, self.m, risks), self.spec, half, half).risk_bound


class _DisagreeLoss(_Handler):
    def __init__(self, *a) -> None:
        super().__init__(*a)
        _need(self.world, "bounded_loss_pair")
        self.spec = self.world.spec
        self.truth = self.world.p_f - self.world.p_h

    def sample(self, rng):
        d = rng.beta(*self.world.d_beta, size=self.m)
        return self.spec.lam * float(np.mean(d)) / 2.0

    def bound(self, dl):
        return cf.disagree_loss(dl, self.spec, self.m, self.delta)


class _DisagreeLipschitz(_Handler):
    def __init__(self, *a) -> None:
        super().__init__(*a)
        _need(self.world, "softmax_atoms")
        self.spec = self.world.spec
        self.atoms = self.world.atoms
        self.truth = self.world.p_f - self.world.p_h

    def sample(self, rng):
        counts = rng.multinomial(self.m, self.atoms["weights"])
        return float(counts @ self.atoms["l1"]) / self.m

    def bound(self, dk):
        return cf.disagree_lipschitz(min(dk, 2.0), self.spec.lipschitz, self.m, self.delta)


class _MCTarget(_Handler):
    """Full Monte Carlo composition: PAC-Bayes surrogate plus disagreement, four equal shares."""

    def __init__(self, *a) -> None:
        super().__init__(*a)
        _need(self.world, "bounded_loss_pair")
        self.spec = self.world.spec
        self.truth = self.world.p_f
        self.v = int(self.opt.get("v", 10))

    def sample(self, rng):
        w, spec = self.world, self.spec
        risks = tuple(
            spec.b_lower + spec.lam * float(np.mean(rng.beta(*w.h_beta, size=self.m))) / 2.0
            for _ in range(self.v)
        )
        dls = tuple(spec.lam * float(np.mean(rng.beta(*w.d_beta, size=self.m))) / 2.0 for _ in range(self.v))
        return risks, dls

    def bound(self, stat):
        risks, dls = stat
        q = self.delta / 4.0
        surrogate = sb.pacbayes_double_kl(sb.PACBayesMeta(0.0, self.m, risks), self.spec, q, q)
        surr_idx, dis_idx = cf.mc_sample_halves(self.v)
        d = cf.disagree_pacbayes_mc(
            dls, self.spec, self.m, q, q, sample_indices=list(dis_idx), surrogate_indices=list(surr_idx)
        )
        return surrogate.risk_bound + d


HANDLERS: dict[str, type] = {
    "disagree_01": _Disagree01,
    "disagree_lipschitz": _DisagreeLipschitz,
    "disagree_loss": _DisagreeLoss,
    "pacbayes_mc_target": _MCTarget,
    "test_set_binomial": _TestSetBinomial,
    "test_set_chernoff": _Chernoff,
    "sc_binomial": _SCBinomial,
    "sc_kl": _SCKL,
    "sc_sqrt": _SCSqrt,
    "p2l": _P2L,
    "mc_binomial": _MCBinomial,
    "mc_kl": _MCKL,
    "pacbayes_mcallester": _McAllester,
    "pacbayes_double_kl": _DoubleKL,
}


def default_world(bound_id: str, seed: int = 0) -> SyntheticWorld:
    """The reference world each bound is exercised on."""
    if bound_id not in HANDLERS:
        raise UsageError(f"unknown bound id {bound_id!r}")
    if bound_id in ("disagree_01", "test_set_binomial", "sc_binomial", "mc_binomial", "p2l"):
        return SyntheticWorld.bernoulli_pair(0.15, 0.10, 0.08, seed=seed)
    if bound_id == "disagree_lipschitz":
        return SyntheticWorld.softmax_atoms(LossSpec.huber(10), seed=seed)
    return SyntheticWorld.bounded_loss_pair(LossSpec.xent_smoothed(10), seed=seed)


def run_coverage(
    world: SyntheticWorld,
    bound_id: str,
    m: int,
    delta: float,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    **options,
) -> CoverageResult:
    """Fraction of fresh synthetic datasets on which the bound holds.

    Trial ``t`` draws from its own generator keyed by ``(seed, t)``, so the
    result does not depend on ``workers``.
    """
    if bound_id not in HANDLERS:
        raise UsageError(f"unknown bound id {bound_id!r}")
    delta = check_delta(delta)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if m < 2:
        raise DomainError("m must be >= 2")
    handler = HANDLERS[bound_id](world, int(m), delta, options)

    def chunk(bounds: tuple[int, int]) -> int:
        lo, hi = bounds
        return sum(1 for t in range(lo, hi) if handler.violated(_rng(seed, t)))

    workers = max(1, int(workers))
    size = max(1, -(-trials // (4 * workers)))
    chunks = [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]
    if workers == 1:
        violations = sum(map(chunk, chunks))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            violations = sum(pool.map(chunk, chunks))
    return CoverageResult(bound_id, int(m), delta, int(trials), int(violations), int(seed))


def coverage_csv(results: Sequence[CoverageResult]) -> str:
    buf = io.StringIO()
    fields = list(CoverageResult("x", 1, 0.5, 1, 0, 0).row())
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def exact_coverage_binomial(p: float, m: int, delta: float, bound: Callable[[int], float] | None = None) -> float:
    """``P[bound(k) >= p]`` for ``k ~ Binom(m, p)``, by enumerating ``k``."""
    if bound is None:
        bound = lambda k: sb.test_set_binomial(k, m, delta).risk_bound  # noqa: E731
    ks = np.arange(m + 1)
    ok = np.array([bound(int(k)) >= p for k in ks])
    return float(stats.binom.pmf(ks[ok], m, p).sum())


# --- brute-force oracles -----------------------------------------------------


def _grid_sup(pred_vec: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, step: float) -> float:
    """Largest point of the grid ``lo + i*step`` in ``[lo, hi]`` satisfying a monotone predicate."""
    coarse_step = max(step, (hi - lo) / 1000.0)
    if coarse_step > step:
        xs = np.append(np.arange(lo, hi, coarse_step), hi)
        ok = pred_vec(xs)
        last = int(np.flatnonzero(ok)[-1]) if ok.any() else 0
        if last == len(xs) - 1:
            return float(hi)
        lo, hi = float(xs[last]), float(xs[last + 1])
    n = int(math.floor((hi - lo) / step)) + 1
    xs = lo + step * np.arange(n)
    ok = pred_vec(xs)
    return float(xs[np.flatnonzero(ok)[-1]]) if ok.any() else float(lo)


def _binary_kl(q: float, p: np.ndarray) -> np.ndarray:
    return rel_entr(q, p) + rel_entr(1.0 - q, 1.0 - p)


def _oracle_log_psi(eps: np.ndarray, k: int, n: int, delta: float) -> np.ndarray:
    mm = np.arange(k, n)
    log_ratio = gammaln(mm + 1) - gammaln(mm - k + 1) - gammaln(n + 1) + gammaln(n - k + 1)
    e = np.atleast_1d(eps)[:, None]
    with np.errstate(divide="ignore"):
        terms = log_ratio[None, :] - (n - mm)[None, :] * np.log1p(-e)
    return math.log(delta / n) + logsumexp(terms, axis=1)


def oracle_invert(kind: str, step: float | None = None, **params) -> float:
    """Dense-grid reference for the inverses: ``bin`` (k, m, delta), ``kl`` (q, eps), ``p2l`` (k, n, delta).

    ``bin`` and ``kl`` return the largest grid point satisfying the defining
    inequality; ``p2l`` returns the smallest grid point with ``Psi >= 1``.
    """
    if kind == "bin":
        k, m, delta = int(params["k"]), int(params["m"]), float(params["delta"])
        if k >= m:
            return 1.0
        return _grid_sup(lambda p: stats.binom.cdf(k, m, p) >= delta, 0.0, 1.0, step or 1e-6)
    if kind == "kl":
        q, eps = float(params["q"]), float(params["eps"])
        return _grid_sup(lambda p: _binary_kl(q, p) <= eps, q, 1.0, step or 1e-6)
    if kind == "p2l":
        k, n, delta = int(params["k"]), int(params["n"]), float(params["delta"])
        if k >= n:
            return 1.0
        st = step or 1e-7
        # the last grid point still below 1 plus one step is the first at or above 1
        below = _grid_sup(lambda e: _oracle_log_psi(e, k, n, delta) < 0.0, k / n, 1.0 - st, st)
        return min(1.0, below + st)
    raise UsageError(f"unknown oracle kind {kind!r}")


# --- bound comparison --------------------------------------------------------


def _spec_from(inputs: dict) -> LossSpec:
    return make_spec(
        str(inputs.get("loss", "01")),
        int(inputs.get("num_classes", 2)),
        float(inputs.get("alpha", 1e-3)),
        float(inputs.get("delta_h", 0.2)),
    )


def _req(inputs: dict, key: str):
    if key not in inputs:
        raise DataError(f"missing input {key!r}")
    return inputs[key]


def evaluate_bound(bound_id: str, inputs: dict, delta: float) -> sb.BoundResult:
    """Evaluate a named surrogate bound from a flat input mapping."""
    g = lambda k: _req(inputs, k)  # noqa: E731
    comp = str(inputs.get("comparator", "kl"))
    if bound_id == "test_set_binomial":
        return sb.test_set_binomial(int(g("k")), int(g("m")), delta)
    if bound_id == "test_set_chernoff":
        return sb.test_set_chernoff(float(g("mean_loss")), _spec_from(inputs), int(g("m")), delta, comparator=comp)
    if bound_id == "sc_binomial":
        return sb.sc_binomial(int(g("n")), int(g("m_tilde")), int(g("k")), delta)
    if bound_id in ("sc_kl", "sc_sqrt"):
        meta = sb.CompressionMeta(int(g("n")), int(g("m_tilde")), float(g("complement_risk")))
        if bound_id == "sc_sqrt":
            return sb.sc_sqrt(meta, _spec_from(inputs), delta)
        return sb.sc_kl(meta, _spec_from(inputs), delta, comparator=comp)
    if bound_id == "p2l":
        return sb.p2l_bound(int(g("M")), int(g("k")), int(g("n")), delta)
    if bound_id == "mc_binomial":
        return sb.mc_binomial(int(g("code_bits")), int(g("n")), int(g("k")), delta)
    if bound_id == "mc_kl":
        meta = sb.CodeLengthMeta(int(g("code_bits")), int(g("n")), float(g("train_risk")))
        return sb.mc_kl(meta, _spec_from(inputs), delta, comparator=comp)
    if bound_id == "pacbayes_mcallester":
        return sb.pacbayes_mcallester(
            float(g("expected_loss")), float(inputs.get("kl", 0.0)), int(g("n")), _spec_from(inputs), delta
        )
    if bound_id == "pacbayes_double_kl":
        meta = sb.PACBayesMeta(float(inputs.get("kl", 0.0)), int(g("n")), tuple(g("sampled_risks")))
        dp = float(inputs.get("delta_prime", delta))
        return sb.pacbayes_double_kl(meta, _spec_from(inputs), delta, dp, comparator=comp)
    if bound_id == "partition":
        t_upper = _spec_from(inputs).t_upper
        counts = tuple(g("counts"))
        if "gamma" in inputs:
            params = sb.PartitionParams(counts, float(g("alpha")), float(inputs["gamma"]), t_upper, float(g("train_risk")))
            return sb.partition_bound(params, delta)
        cands = [(len(counts), counts, float(g("alpha")))]
        return sb.partition_grid_search(cands, delta, train_risk=float(g("train_risk")), t_upper=t_upper)
    if bound_id == "partition_grid":
        cands = [(len(c["counts"]), tuple(c["counts"]), float(c["alpha"])) for c in g("candidates")]
        return sb.partition_grid_search(
            cands, delta, train_risk=float(g("train_risk")), t_upper=_spec_from(inputs).t_upper
        )
    if bound_id == "norm":
        ni = sb.NormBoundInputs(
            float(g("rho")),
            float(g("margin_risk")),
            float(g("gamma_margin")),
            int(g("depth")),
            tuple(int(c) for c in g("pred_counts")),
            int(inputs.get("num_classes", 10)),
            float(g("sq_pixel_norm_sum")),
            int(g("n")),
        )
        return sb.norm_bound(ni, delta)
    raise UsageError(f"unknown bound id {bound_id!r}")


BOUND_IDS = (
    "test_set_binomial",
    "test_set_chernoff",
    "sc_binomial",
    "sc_kl",
    "sc_sqrt",
    "p2l",
    "mc_binomial",
    "mc_kl",
    "pacbayes_mcallester",
    "pacbayes_double_kl",
    "partition",
    "partition_grid",
    "norm",
)


def compare_bounds(scenario: Sequence[tuple], delta: float) -> list[dict]:
    """One row per ``(bound_id, inputs)`` pair, sorted by bound value (ties keep input order)."""
    if not scenario:
        raise DataError("empty scenario")
    kinds = {_spec_from(inp).kind for _, inp in scenario if "loss" in inp}
    if len(kinds) > 1:
        raise DataError(f"scenario mixes loss specs: {sorted(kinds)}")
    rows = []
    for idx, (bound_id, inputs) in enumerate(scenario):
        res = evaluate_bound(bound_id, inputs, delta)
        label = inputs.get("label", bound_id)
        rows.append((res.risk_bound, idx, {
            "label": label,
            "bound": bound_id,
            "risk_bound": res.risk_bound,
            "delta_spent": res.delta_spent,
            "vacuous": res.vacuous,
        }))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [r[2] for r in rows]


def comparison_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "bound", "risk_bound", "delta_spent", "vacuous"])
    for r in rows:
        w.writerow([r["label"], r["bound"], repr(r["risk_bound"]), repr(r["delta_spent"]), str(r["vacuous"]).lower()])
    return buf.getvalue()
