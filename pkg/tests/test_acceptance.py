"""Acceptance suite: one PASS/FAIL line per criterion, printed to the terminal."""

import json
import math
import time

import mpmath as mp
import numpy as np
import pytest

from riskcert.certify import (
    DeltaBudget,
    DisagreementInputs,
    SurrogatePrior,
    certify_target,
    certify_uniform,
    risk_gap,
)
from riskcert.cli import main
from riskcert.ingest_report import parse_report
from riskcert.invert import (
    EmpiricalCount,
    binom_tail_inverse,
    catoni_inverse,
    kl_div,
    kl_inverse,
    p2l_epsilon,
    pinsker_inverse,
)
from riskcert.losses import LossSpec, argmax_labels, label_probabilities, loss_gaps, loss_values
from riskcert.simulate import HANDLERS, default_world, oracle_invert, run_coverage
from riskcert.surrogate_bounds import BoundResult, NormBoundInputs, norm_bound, sc_binomial

SEED = 20261015


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def test_c01_inversion_matches_grid_oracles(report):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst_bin = worst_kl = worst_res = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 10_001))
        k = int(rng.integers(0, m + 1))
        delta = float(10 ** rng.uniform(-6, 0))
        gap = abs(binom_tail_inverse(k, m, delta) - oracle_invert("bin", k=k, m=m, delta=delta))
        worst_bin = max(worst_bin, gap)
    for _ in range(1000):
        q = float(rng.uniform())
        eps = float(10 ** rng.uniform(-6, 1))
        p = kl_inverse(q, eps)
        worst_kl = max(worst_kl, abs(p - oracle_invert("kl", q=q, eps=eps)))
        if 1e-6 < p < 1 - 1e-6:
            worst_res = max(worst_res, abs(kl_div(q, p) - eps))
    elapsed = time.perf_counter() - t0
    ok = worst_bin <= 2e-6 and worst_kl <= 2e-6 and worst_res <= 1e-9 and elapsed < 30
    report(
        1,
        ok,
        f"max |bin - oracle| = {worst_bin:.2e}, max |kl^-1 - oracle| = {worst_kl:.2e}, "
        f"max kl residual = {worst_res:.2e}, {elapsed:.1f} s",
    )


def test_c02_closed_forms(report):
    worst = 0.0
    for m in (1, 10, 1_000, 1_000_000):
        for delta in (0.5, 0.05, 0.01):
            worst = max(worst, abs(binom_tail_inverse(0, m, delta) - (1 - delta ** (1 / m))))
            eps = math.log(1 / delta) / m
            worst = max(worst, abs(kl_inverse(0.0, eps) - (1 - math.exp(-eps))))
    report(2, worst <= 1e-10, f"max deviation from closed forms = {worst:.2e}")


def test_c03_comparator_ordering(report):
    rng = np.random.default_rng(SEED + 3)
    violations = 0
    for _ in range(10_000):
        q = float(rng.uniform())
        eps = float(10 ** rng.uniform(-6, 1))
        c = float(10 ** rng.uniform(-2, 1))
        kl = kl_inverse(q, eps)
        violations += kl > pinsker_inverse(q, eps)
        violations += kl > catoni_inverse(q, eps, c)
    report(3, violations == 0, f"{violations} ordering violations in 10^4 triples")


def _psi_mp(eps, k, n, delta):
    # direct sum with the ratio C(m,k)/C(n,k) built downward from m = n
    eps = mp.mpf(eps)
    total, ratio = mp.mpf(0), mp.mpf(1)
    for m in range(n - 1, k - 1, -1):
        ratio = ratio * (m + 1 - k) / (m + 1)
        total += ratio * (1 - eps) ** (-(n - m))
    return delta / mp.mpf(n) * total


def test_c04_p2l_solver(report):
    mp.mp.dps = 40
    rng = np.random.default_rng(SEED + 4)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 10_001))
        k = int(rng.integers(0, n))
        delta = float(10 ** rng.uniform(-6, 0))
        eps = p2l_epsilon(k, n, delta)
        worst = max(worst, float(abs(_psi_mp(eps, k, n, delta) - 1)))
    full = all(p2l_epsilon(n, n, d) == 1.0 for n in (1, 7, 10_000) for d in (0.5, 0.01))
    two = p2l_epsilon(0, 2, 0.1)
    ok = worst <= 1e-8 and full and abs(two - 0.75) <= 1e-9
    report(4, ok, f"max |Psi - 1| = {worst:.2e}, eps(n, n) == 1: {full}, eps(0, 2, 0.1) = {two!r}")


COVERAGE_BOUNDS = (
    "disagree_01",
    "disagree_lipschitz",
    "disagree_loss",
    "test_set_binomial",
    "sc_binomial",
    "mc_binomial",
    "pacbayes_double_kl",
    "pacbayes_mc_target",
)


def test_c05_coverage(report):
    t0 = time.perf_counter()
    results = [
        run_coverage(default_world(b, seed=7), b, 200, 0.05, 10_000, seed=7) for b in COVERAGE_BOUNDS
    ]
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"{r.bound_id}={r.empirical_coverage:.4f}" for r in results)
    thr = results[0].threshold
    ok = all(r.passed for r in results) and elapsed < 300
    report(5, ok, f"coverage (threshold {thr:.4f}): {detail}; {elapsed:.0f} s")


def test_c06_constants(report):
    t = LossSpec.xent_clamped(10, 1e-3).t_upper
    h = LossSpec.huber(10, 0.2).t_upper
    ok = abs(t - 9.2103) <= 5e-4 and h == 0.18
    report(6, ok, f"T = ln(C/alpha) = {t:.6f}, Huber ceiling = {h!r}")


def test_c07_truth_table(report):
    rng = np.random.default_rng(SEED + 7)
    n = 100_000
    viol_01 = viol_chain = 0
    for C in (2, 10):
        f = rng.normal(scale=3, size=(n // 2, C))
        # half independent pairs, half near-copies as after distillation
        near = rng.random((n // 2, 1)) < 0.5
        h = np.where(near, f + rng.normal(scale=1e-3, size=f.shape), rng.normal(scale=3, size=f.shape))
        y = rng.integers(0, C, n // 2)
        z1 = LossSpec.zero_one(C)
        dl = np.abs(loss_values(z1, f, y) - loss_values(z1, h, y))
        d01 = (argmax_labels(f) != argmax_labels(h)).astype(float)
        viol_01 += int(np.count_nonzero(dl > d01)) + int(dl.mean() > d01.mean())
        for spec in (
            LossSpec.xent_clamped(C, 1e-3),
            LossSpec.xent_smoothed(C, 1e-3),
            LossSpec.xent_smoothed(C, 0.5),
        ):
            gaps = loss_gaps(spec, f, h, y)
            dhat = np.abs(label_probabilities(spec, f, y) - label_probabilities(spec, h, y))
            viol_chain += int(np.count_nonzero(gaps > spec.lipschitz * dhat))
            viol_chain += int(gaps.mean() > spec.lipschitz * dhat.mean())
    report(7, viol_01 == 0 and viol_chain == 0, f"{viol_01} zero-one violations, {viol_chain} chain violations")


def test_c08_budget_conservation(report, tmp_path, log_path, capsys):
    rng = np.random.default_rng(SEED + 8)
    reports = []
    bit_exact = True
    for _ in range(500):
        total = float(10 ** rng.uniform(-8, 0))
        for budget in (DeltaBudget.halves(total), DeltaBudget.quarters(total)):
            sur = BoundResult(float(rng.uniform()), budget.surrogate_delta, {"empirical": 0.0})
            dis = DisagreementInputs("01", EmpiricalCount(int(rng.integers(0, 50)), 200), 200)
            a = certify_target(sur, dis.bound(budget.disagreement_delta), budget)
            b = certify_uniform("h", SurrogatePrior({"h": 1.0}), sur, dis, budget)
            bit_exact &= a.target_bound == b.target_bound and a.disagreement_term == b.disagreement_term
            reports += [a, b]
        delta = float(rng.uniform(1e-6, 0.5))
        reports.append(certify_target(sc_binomial(500, 3, 5, delta), 0.01, DeltaBudget.same_delta(delta)))
        reports.append(risk_gap(0.1, DeltaBudget.single(delta)))
    cert = json.dumps({"bound": "sc_binomial", "inputs": {"n": 1000, "m_tilde": 3, "k": 10}})
    for delta in ("0.01", "0.05", "0.3"):
        main(["certify", "--log", str(log_path), "--loss", "01", "--delta", delta, "--surrogate-cert", cert])
        reports.append(parse_report(capsys.readouterr().out.encode()).certificate)
    conserved = all(r.budget.is_conserved() for r in reports)
    report(8, conserved and bit_exact, f"{len(reports)} reports conserved: {conserved}; singleton prior bit-exact: {bit_exact}")


def test_c09_norm_bound_vacuity(report):
    n = 50_000
    inputs = NormBoundInputs(
        rho=100.0,
        margin_risk=0.0,
        gamma_margin=1.0,
        depth=18,
        pred_counts=(10_000,) * 17,
        num_classes=10,
        sq_pixel_norm_sum=n * 3e3,
        n=n,
    )
    r = norm_bound(inputs, 0.01)
    orders = math.log10(r.risk_bound)
    report(9, orders >= 10, f"norm bound = {r.risk_bound:.3e} ({orders:.1f} orders of magnitude above 1)")


def test_c10_simulate_determinism(report, tmp_path, capsys):
    same = True
    for b in sorted(HANDLERS):
        outs = []
        for workers in ("1", "4", "1"):
            path = tmp_path / f"{b}-{workers}.csv"
            main(["simulate", "--bound", b, "--m", "60", "--trials", "300", "--seed", "3",
                  "--workers", workers, "--out", str(path)])
            outs.append(path.read_bytes())
        capsys.readouterr()
        same &= outs[0] == outs[1] == outs[2]
    report(10, same, f"byte-identical CSV across reruns and 1/4 workers for {len(HANDLERS)} bound ids: {same}")
