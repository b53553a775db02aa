import json
import math

import pytest

from riskcert.cli import main
from riskcert.ingest_report import file_digest, parse_report, parse_term_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_invert_closed_form(capsys):
    code, out, _ = run(capsys, "invert", "--kind", "bin", "--k", "0", "--m", "100", "--delta", "0.05")
    assert code == 0
    assert float(out) == pytest.approx(1 - 0.05**0.01, abs=1e-12)
    code, out, _ = run(capsys, "invert", "--kind", "kl", "--q", "0", "--eps", "0.2")
    assert float(out) == pytest.approx(-math.expm1(-0.2), abs=1e-15)
    code, out, _ = run(capsys, "invert", "--kind", "p2l", "--k", "0", "--n", "2", "--delta", "0.1")
    assert float(out) == pytest.approx(0.75, abs=1e-12)


def test_certify_gap(capsys, log_path):
    code, out, _ = run(capsys, "certify", "--log", str(log_path), "--loss", "01", "--delta", "0.01", "--use-case", "gap")
    assert code == 0
    doc = parse_report(out.encode())
    assert doc.certificate.use_case == "risk_gap"
    assert doc.certificate.inputs_digest == file_digest(log_path)
    assert doc.certificate.budget.total == 0.01


def test_certify_target_outputs(capsys, log_path, tmp_path):
    recipe = json.dumps({"bound": "mc_kl", "inputs": {"code_bits": 5000, "n": 50000, "train_risk": 0.3,
                                                       "loss": "xent-smoothed", "num_classes": 10}})
    out_path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "certify", "--log", str(log_path), "--surrogate-cert", recipe, "--out", str(out_path))
    assert code == 0 and out.strip() == str(out_path)
    rows, total = parse_term_csv(out_path.read_bytes())
    assert sum(r.value for r in rows) == pytest.approx(total, rel=1e-14)
    code, _, _ = run(capsys, "certify", "--log", str(log_path), "--surrogate-cert", recipe, "--out", str(out_path))
    first = out_path.read_bytes()
    run(capsys, "certify", "--log", str(log_path), "--surrogate-cert", recipe, "--out", str(out_path))
    assert out_path.read_bytes() == first


def test_certify_uniform(capsys, log_path):
    recipe = json.dumps({"bound": "sc_binomial", "inputs": {"n": 1000, "m_tilde": 10, "k": 20}})
    prior = json.dumps({"masses": {"a": 0.5, "b": 0.5}})
    code, out, _ = run(capsys, "certify", "--log", str(log_path), "--loss", "01", "--use-case", "uniform",
                       "--surrogate-cert", recipe, "--prior", prior, "--surrogate-id", "a")
    assert code == 0
    assert parse_report(out.encode()).certificate.details["prior_mass"] == 0.5
    code, _, err = run(capsys, "certify", "--log", str(log_path), "--loss", "01", "--use-case", "uniform",
                       "--surrogate-cert", recipe)
    assert code == 2


def test_certify_budget_mismatch(capsys, log_path):
    cert = json.dumps({"risk_bound": 0.1, "delta_spent": 0.01, "terms": {}})
    code, _, err = run(capsys, "certify", "--log", str(log_path), "--loss", "01", "--surrogate-cert", cert)
    assert code == 2 and "budget" in err


def test_disagree_kinds(capsys, log_path):
    for loss, kind in (("01", "01"), ("huber", "lipschitz"), ("xent-clamped", "loss")):
        code, out, _ = run(capsys, "disagree", "--log", str(log_path), "--loss", loss)
        assert code == 0 and json.loads(out)["kind"] == kind


def test_bound_flags_and_json(capsys):
    code, out, _ = run(capsys, "bound", "--bound", "sc_sqrt", "--n", "100", "--m-tilde", "0",
                       "--complement-risk", "0", "--loss", "01")
    assert code == 0 and json.loads(out)["risk_bound"] == pytest.approx(0.2012, abs=5e-5)
    code, out, _ = run(capsys, "bound", "--bound", "test_set_binomial", "--json", '{"k": 0, "m": 10}', "--delta", "0.5")
    assert json.loads(out)["risk_bound"] == pytest.approx(1 - 0.5**0.1, abs=1e-12)


def test_simulate_and_compare(capsys, tmp_path, monkeypatch):
    code, out, _ = run(capsys, "simulate", "--bound", "disagree_01", "--trials", "200", "--seed", "7")
    assert code == 0 and out.splitlines()[1].startswith("disagree_01,200,0.05,200,7,")
    monkeypatch.setenv("RISKCERT_SEED", "7")
    code, out2, _ = run(capsys, "simulate", "--bound", "disagree_01", "--trials", "200")
    assert out2 == out
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps({"delta": 0.05, "rows": [{"bound": "test_set_binomial", "inputs": {"k": 1, "m": 50}}]}))
    code, out, _ = run(capsys, "compare", "--scenario", str(scen))
    assert code == 0 and len(out.splitlines()) == 2


@pytest.mark.parametrize(
    "argv,code",
    [
        (["invert", "--kind", "bin", "--k", "0", "--m", "10", "--delta", "1.5"], 2),
        (["invert", "--kind", "bin", "--k", "0"], 2),
        (["frobnicate"], 2),
        (["invert", "--kind", "bin", "--k", "0", "--m", "10", "--bogus"], 2),
        (["invert", "--kind", "bin", "--k", "20", "--m", "10"], 1),
        (["certify", "--log", "/nonexistent.jsonl", "--loss", "01", "--use-case", "gap"], 1),
    ],
)
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_missing_split_is_data_error(capsys, tmp_path):
    p = tmp_path / "u.jsonl"
    p.write_text(
        json.dumps({"schema_version": 1, "num_classes": 2, "v_samples": 1, "splits": {"U": 1}}) + "\n"
        + json.dumps({"id": "a", "split": "U", "y": None, "f": [0, 1], "h": [[1, 0]]}) + "\n"
    )
    code, _, err = run(capsys, "disagree", "--log", str(p), "--loss", "xent-smoothed")
    assert code == 1 and "split missing" in err
