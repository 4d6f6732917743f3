import hashlib
import json
import os

import pytest

import blockhouse
from blockhouse import analysis, por, sim

SCENARIOS = os.environ.get(
    "BLOCKHOUSE_SCENARIOS",
    os.path.join(os.path.dirname(__file__), "..", "..", "tests", "scenarios"),
)


def test_anchors():
    assert analysis.min_auditors(4 / 5) == 41
    assert analysis.min_auditors(5 / 7) == 101
    assert analysis.min_auditors(2 / 3) == 181
    assert analysis.dishonest_majority_exact(3, 2 / 3) == pytest.approx(7 / 27, abs=1e-12)


def test_curve_rows():
    rows = analysis.curve(0.8, 30, 40, 2)
    assert [r[0] for r in rows] == [30, 32, 34, 36, 38, 40]
    assert all(a[1] > b[1] for a, b in zip(rows, rows[1:]))


def test_bad_probability_raises():
    with pytest.raises(ValueError):
        analysis.min_auditors(0.4)
    with pytest.raises(ValueError):
        analysis.dishonest_majority_normal(10, 1.5)


def test_por_roundtrip():
    data = bytes((i * 7) & 0xFF for i in range(20000))
    meta = por.gen_metadata(data, 1024)
    assert meta.chunk_count == 20
    assert meta.file_id == hashlib.sha256(data).hexdigest()
    store = por.ChunkStore(data, 1024)
    idx = por.derive_challenge(b"\x01" * 32, meta.chunk_count, 5)
    assert idx == sorted(set(idx)) and len(idx) == 5
    assert por.verify_proof(meta, idx, por.gen_proof(store, idx))
    store.drop(idx[0])
    assert not por.verify_proof(meta, idx, por.gen_proof(store, idx))
    assert por.detection_pass_probability(100, 10, 5) == pytest.approx(0.5838, abs=1e-4)


def test_sim_scenario_and_replay():
    t = sim.run_file(os.path.join(SCENARIOS, "normal_end.json"))
    assert t["ok"]
    assert t["outcomes"] == ["NormalEnd"]
    assert t["final_balances"]["alice"] - t["initial_balances"]["alice"] == -10003
    assert sim.replay(t["lines"])
    assert json.loads(t["lines"][0])["type"] == "scenario"


def test_generated_scenarios_replay():
    for seed in range(3):
        text = sim.generate_scenario(seed)
        t = sim.run(text)
        assert t["all_settled"] and t["conservation_violations"] == 0
        assert sim.replay(t["lines"])


def test_malformed_scenario():
    with pytest.raises(blockhouse.ProtocolError):
        sim.run('{"bogus": 1}')
