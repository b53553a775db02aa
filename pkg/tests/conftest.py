import numpy as np
import pytest

from riskcert.ingest_report import LogHeader, write_log
from riskcert.losses import PredictionRecord


def make_records(seed=0, n_u=200, n_l=100, C=10, V=2, noise=0.3):
    rng = np.random.default_rng(seed)
    recs = []
    for i in range(n_u + n_l):
        split = "U" if i < n_u else "L"
        f = rng.normal(size=C)
        h = f + rng.normal(scale=noise, size=(V, C))
        y = int(rng.integers(C)) if split == "L" else None
        recs.append(PredictionRecord(f"r{i}", split, f, h, y))
    return recs


@pytest.fixture
def log_path(tmp_path):
    recs = make_records()
    path = tmp_path / "log.jsonl"
    write_log(path, LogHeader(10, 2, {"U": 200, "L": 100}), recs)
    return path
