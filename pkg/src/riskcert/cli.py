"""Command-line entry point: ``riskcert {certify,bound,disagree,invert,simulate,compare}``.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import certify as cf
from . import ingest_report as io_
from . import invert as inv
from . import losses as ls
from . import simulate as sim
from .errors import DataError, DomainError, RiskCertError, UsageError
from .surrogate_bounds import BoundResult

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _delta(text: str) -> float:
    try:
        d = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < d <= 1.0:
        raise argparse.ArgumentTypeError(f"delta must lie in (0, 1], got {text}")
    return d


def _load_json(text_or_path: str):
    p = Path(text_or_path)
    try:
        raw = p.read_text(encoding="utf-8") if p.exists() else text_or_path
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse JSON from {text_or_path!r}: {exc.msg}") from None
    except OSError as exc:
        raise DataError(f"cannot read {text_or_path}: {exc.strerror}") from None


def _write(out: str | None, data: bytes) -> None:
    if out is None or out == "-":
        sys.stdout.write(data.decode("utf-8"))
        return
    Path(out).write_bytes(data)
    print(out)


def _add_loss_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=sorted(ls.CLI_LOSS_NAMES), default="xent-smoothed")
    p.add_argument("--alpha", type=float, default=ls.DEFAULT_ALPHA)
    p.add_argument("--delta-h", type=float, default=ls.DEFAULT_DELTA_H)


def _default_kind(loss: str) -> str:
    return {"01": "01", "huber": "lipschitz"}.get(loss, "loss")


def _disagreement_inputs(args, records, spec: ls.LossSpec) -> cf.DisagreementInputs:
    kind = args.kind or _default_kind(args.loss)
    split = args.split or ("L" if kind == "loss" else "U")
    recs = io_.select_split(records, split)
    if kind == "01":
        return cf.DisagreementInputs("01", ls.disagreement_01(recs, args.sample_index), len(recs))
    if kind == "lipschitz":
        return cf.DisagreementInputs("lipschitz", ls.disagreement_l1(recs, ls.ALL), len(recs), spec)
    if kind == "loss":
        return cf.DisagreementInputs("loss", ls.disagreement_loss(recs, spec, ls.ALL), len(recs), spec)
    raise UsageError(f"unknown disagreement kind {kind!r}")


def _read_log(path: str):
    header, records = io_.parse_log(path)
    return header, records, io_.file_digest(path)


# --- subcommands -------------------------------------------------------------


def cmd_certify(args) -> int:
    header, records, digest = _read_log(args.log)
    spec = ls.make_spec(args.loss, header.num_classes, args.alpha, args.delta_h)
    dis = _disagreement_inputs(args, records, spec)
    if args.use_case == "gap":
        budget = cf.DeltaBudget.single(args.delta)
        cert = cf.risk_gap(dis.bound(budget.disagreement_delta), budget, inputs_digest=digest)
    else:
        if args.surrogate_cert is None:
            raise UsageError("--surrogate-cert is required for the target and uniform use cases")
        budget = cf.DeltaBudget.same_delta(args.delta) if args.same_delta else cf.DeltaBudget.halves(args.delta)
        surrogate = _surrogate_from(_load_json(args.surrogate_cert), budget.surrogate_delta)
        if args.use_case == "target":
            cert = cf.certify_target(
                surrogate, dis.bound(budget.disagreement_delta), budget, inputs_digest=digest, t_upper=spec.t_upper
            )
        else:
            if args.prior is None or args.surrogate_id is None:
                raise UsageError("--prior and --surrogate-id are required for the uniform use case")
            raw = _load_json(args.prior)
            prior = cf.SurrogatePrior(raw.get("masses", raw) if isinstance(raw, dict) else {})
            cert = cf.certify_uniform(
                args.surrogate_id, prior, surrogate, dis, budget, inputs_digest=digest, t_upper=spec.t_upper
            )
    doc = io_.build_report(cert, extra={"loss": spec.kind, "disagreement_kind": dis.kind, "m": dis.m})
    fmt = args.format or ("csv" if args.out and args.out.endswith(".csv") else "json")
    _write(args.out, io_.emit_report(doc, fmt))
    return EXIT_OK


def _surrogate_from(obj, delta: float) -> BoundResult:
    """A surrogate certificate is either a finished bound result or a bound recipe evaluated at ``delta``."""
    if not isinstance(obj, dict):
        raise DataError("surrogate certificate must be a JSON object")
    if "bound" in obj:
        return sim.evaluate_bound(str(obj["bound"]), dict(obj.get("inputs", {})), delta)
    return BoundResult.from_dict(obj)


_BOUND_FLAGS = {
    "k": int,
    "m": int,
    "n": int,
    "m_tilde": int,
    "M": int,
    "code_bits": int,
    "num_classes": int,
    "mean_loss": float,
    "complement_risk": float,
    "train_risk": float,
    "expected_loss": float,
    "kl": float,
    "delta_prime": float,
    "alpha_p": float,
    "gamma": float,
}


def cmd_bound(args) -> int:
    inputs = dict(_load_json(args.json)) if args.json else {}
    for key in _BOUND_FLAGS:
        v = getattr(args, key)
        if v is not None:
            inputs["alpha" if key == "alpha_p" else key] = v
    for key in ("loss", "comparator"):
        if getattr(args, key) is not None:
            inputs[key] = getattr(args, key)
    if args.loss is not None:
        inputs.setdefault("alpha", args.alpha)
        inputs.setdefault("delta_h", args.delta_h)
    res = sim.evaluate_bound(args.bound, inputs, args.delta)
    _write(args.out, (json.dumps(res.to_dict(), indent=2) + "\n").encode("utf-8"))
    return EXIT_OK


def cmd_disagree(args) -> int:
    header, records, digest = _read_log(args.log)
    spec = ls.make_spec(args.loss, header.num_classes, args.alpha, args.delta_h)
    dis = _disagreement_inputs(args, records, spec)
    stat = dis.stat
    out = {
        "kind": dis.kind,
        "m": dis.m,
        "statistic": {"k": stat.k, "m": stat.m} if isinstance(stat, inv.EmpiricalCount) else stat,
        "delta": args.delta,
        "bound": dis.bound(args.delta),
        "inputs_digest": digest,
    }
    _write(args.out, (json.dumps(out, indent=2) + "\n").encode("utf-8"))
    return EXIT_OK


def _need_args(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--kind {args.kind} needs " + ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_invert(args) -> int:
    kind = args.kind
    if kind == "bin":
        _need_args(args, "k", "m")
        value = inv.binom_tail_inverse(args.k, args.m, args.delta)
    elif kind in ("kl", "pinsker", "catoni"):
        _need_args(args, "q", "eps")
        value = inv.upper_inverse(args.q, args.eps, kind, args.c)
    else:
        _need_args(args, "k", "n")
        value = inv.p2l_epsilon(args.k, args.n, args.delta)
    print(repr(value))
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = io_.default_seed() if args.seed is None else args.seed
    world = sim.default_world(args.bound, seed=seed)
    res = sim.run_coverage(world, args.bound, args.m, args.delta, args.trials, seed=seed, workers=args.workers)
    _write(args.out, sim.coverage_csv([res]).encode("utf-8"))
    return EXIT_OK


def cmd_compare(args) -> int:
    raw = _load_json(args.scenario)
    rows = raw.get("rows") if isinstance(raw, dict) else raw
    if not isinstance(rows, list):
        raise DataError("scenario must be a list of {bound, inputs} objects")
    try:
        scenario = [(str(r["bound"]), dict(r.get("inputs", {}))) for r in rows]
    except (KeyError, TypeError, AttributeError):
        raise DataError("every scenario row needs a 'bound' field") from None
    delta = args.delta if args.delta is not None else float(raw.get("delta", 0.01)) if isinstance(raw, dict) else 0.01
    _write(args.out, sim.comparison_csv(sim.compare_bounds(scenario, delta)).encode("utf-8"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riskcert", description="Risk certificates from surrogate bounds and disagreement.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("certify", help="certify a target model from a prediction log")
    c.add_argument("--log", required=True)
    _add_loss_flags(c)
    c.add_argument("--delta", type=_delta, default=0.01)
    c.add_argument("--use-case", choices=("target", "uniform", "gap"), default="target")
    c.add_argument("--surrogate-cert", help="bound result JSON, or {bound, inputs} recipe (inline or path)")
    c.add_argument("--prior", help="prior masses JSON (inline or path)")
    c.add_argument("--surrogate-id")
    c.add_argument("--same-delta", action="store_true", help="spend delta on each term (total 2 delta)")
    c.add_argument("--kind", choices=("01", "lipschitz", "loss"))
    c.add_argument("--split", choices=io_.SPLITS)
    c.add_argument("--sample-index", type=int, default=0)
    c.add_argument("--format", choices=("json", "csv"))
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    b = sub.add_parser("bound", help="evaluate one surrogate bound")
    b.add_argument("--bound", required=True, choices=sim.BOUND_IDS)
    b.add_argument("--delta", type=_delta, default=0.01)
    b.add_argument("--json", help="inputs as JSON (inline or path); flags override")
    for key, typ in _BOUND_FLAGS.items():
        b.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
    b.add_argument("--loss", choices=sorted(ls.CLI_LOSS_NAMES))
    b.add_argument("--alpha", type=float, default=ls.DEFAULT_ALPHA)
    b.add_argument("--delta-h", type=float, default=ls.DEFAULT_DELTA_H)
    b.add_argument("--comparator", choices=("kl", "pinsker", "catoni"))
    b.add_argument("--out")
    b.set_defaults(func=cmd_bound)

    d = sub.add_parser("disagree", help="disagreement statistic and bound from a log")
    d.add_argument("--log", required=True)
    _add_loss_flags(d)
    d.add_argument("--delta", type=_delta, default=0.01)
    d.add_argument("--kind", choices=("01", "lipschitz", "loss"))
    d.add_argument("--split", choices=io_.SPLITS)
    d.add_argument("--sample-index", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_disagree)

    i = sub.add_parser("invert", help="evaluate an inverse tail function")
    i.add_argument("--kind", required=True, choices=("bin", "kl", "pinsker", "catoni", "p2l"))
    i.add_argument("--k", type=int)
    i.add_argument("--m", type=int)
    i.add_argument("--n", type=int)
    i.add_argument("--q", type=float)
    i.add_argument("--eps", type=float)
    i.add_argument("--c", type=float, default=1.0)
    i.add_argument("--delta", type=_delta, default=0.01)
    i.set_defaults(func=cmd_invert)

    s = sub.add_parser("simulate", help="Monte Carlo coverage of a bound on its reference world")
    s.add_argument("--bound", required=True, choices=sorted(sim.HANDLERS))
    s.add_argument("--m", type=int, default=200)
    s.add_argument("--delta", type=_delta, default=0.05)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, help="defaults to $RISKCERT_SEED or 0")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("compare", help="tabulate several bounds on shared inputs")
    k.add_argument("--scenario", required=True, help="JSON list of {bound, inputs} (inline or path)")
    k.add_argument("--delta", type=_delta)
    k.add_argument("--out")
    k.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError, RiskCertError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
