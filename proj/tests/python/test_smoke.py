import math
import os
from pathlib import Path

import pytest

import fcbandit

DATA = Path(os.environ.get("FCB_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="module")
def synthetic():
    return fcbandit.generate_synthetic({"K": 6, "m": 8, "seed": 3})


def test_generate_and_round_trip(synthetic, tmp_path):
    assert synthetic.arm_count == 6
    path = tmp_path / "inst.json"
    synthetic.save(str(path))
    back = fcbandit.Instance.load(str(path))
    assert back.digest == synthetic.digest
    assert fcbandit.Instance.from_dict(synthetic.to_dict()).digest == synthetic.digest


def test_oracle_and_divergences(synthetic):
    rep = fcbandit.oracle(synthetic)
    assert rep["best_fair_arm"] is not None
    div = fcbandit.divergences(synthetic)
    for k in range(6):
        assert div["m"][k][k] == 1.0
        assert min(div["d_ssp"][k]) >= math.log(2) - 1e-12


def test_allocation_is_a_distribution(synthetic):
    a = fcbandit.allocate(synthetic, budget=1.0, T=10000)
    total = sum(a["nu_y"]) + sum(a["nu_s"]) + sum(a["nu_sp"])
    assert total == pytest.approx(1.0, abs=1e-9)
    assert a["v_star"] > 0


def test_run_is_seeded(synthetic):
    a = fcbandit.run(synthetic, "csr-v2", T=3000, seed=5)
    b = fcbandit.run(synthetic, "csr-v2", T=3000, seed=5)
    assert a == b
    assert a["samples_spent"] <= 3000


def test_sweep_rows(synthetic):
    curve = fcbandit.sweep(synthetic, [1000, 2000], ["csr-v2", "ts-v2"], runs=2, seed=1)
    assert len(curve["rows"]) == 4
    for row in curve["rows"]:
        assert 0.0 <= row["error_rate"] <= 1.0


def test_bif_and_network_experiment():
    summary = fcbandit.bif_summary(str(DATA / "hepar2.bif"))
    assert summary["node_count"] == 70
    assert summary["edge_count"] == 123
    inst = fcbandit.network_experiment(str(DATA / "hepar2.bif"), "fibrosis", "sex", "carcinoma")
    assert inst.arm_count == 10
    assert inst.fairness_E == 0.2


def test_errors_raise_fcb_error():
    with pytest.raises(fcbandit.FcbError):
        fcbandit.generate_synthetic({"K": 1})
    with pytest.raises(fcbandit.FcbError):
        fcbandit.network_experiment(str(DATA / "hepar2.bif"), "fibrosis", "sex", "nothing")
