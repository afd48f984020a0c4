import json

import numpy as np
import pytest

from _oracles import pk_brute_force
from catseg.data import Document
from catseg.errors import MetricError
from catseg.metrics import boundary_rate, dataset_k, evaluate, pk_metric, random_baseline
from catseg.synth import synth_corpus


def test_pk_examples():
    assert pk_metric([1, 0, 1, 0], [1, 0, 1, 0], 1) == 0.0
    assert pk_metric([1, 0, 1, 0], [1, 0, 0, 0], 1) == pytest.approx(1 / 3)
    assert pk_metric([1, 1, 1, 1], [1, 0, 0, 0], 1) == 1.0


@pytest.mark.parametrize("ref, hyp, k", [([1, 0], [1], 1), ([1], [1], 1), ([1, 0, 0], [1, 0, 0], 3), ([1, 0], [1, 0], 0)])
def test_pk_errors(ref, hyp, k):
    with pytest.raises(MetricError):
        pk_metric(ref, hyp, k)


def test_pk_equals_brute_force_on_random_triples():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        ref = (rng.random(n) < rng.random()).astype(int).tolist()
        hyp = (rng.random(n) < rng.random()).astype(int).tolist()
        ref[0] = hyp[0] = 1
        k = int(rng.integers(1, n))
        assert pk_metric(ref, hyp, k) == pk_brute_force(ref, hyp, k)


def _flags(*segment_lengths):
    out = []
    for length in segment_lengths:
        out += [1] + [0] * (length - 1)
    return out


def test_dataset_k_examples():
    assert dataset_k([_flags(5, 5)]) == 3
    assert dataset_k([[1, 1, 1, 1]]) == 1
    assert dataset_k([_flags(4)]) == 2
    with pytest.raises(MetricError):
        dataset_k([])


def test_random_baseline_rate_and_determinism():
    # 20 segments over 100 sentences
    docs = [Document(f"d{i}", [["x"]] * 10, _flags(5, 5)) for i in range(10)]
    assert boundary_rate(docs) == pytest.approx(0.2)
    a = random_baseline(docs, seed=3)
    assert a == random_baseline(docs, seed=3)
    assert all(flags[0] == 1 for flags in a.values())
    rest = [f for flags in a.values() for f in flags[1:]]
    assert 0.05 < np.mean(rest) < 0.4


def test_random_baseline_pk_band_over_seeds():
    docs, _ = synth_corpus(50, seed=5)
    k = dataset_k(docs)
    scores = [evaluate(docs, random_baseline(docs, seed=s), k).pk for s in range(100)]
    assert 0.4 <= float(np.mean(scores)) <= 0.6


def test_evaluate_macro_skip_and_missing():
    ref = Document("a", [["x"]] * 4, [1, 0, 1, 0])
    other = Document("b", [["x"]] * 4, [1, 0, 0, 0])
    short = Document("c", [["x"]], [1])
    report = evaluate([ref, other, short], {"a": [1, 0, 1, 0], "b": [1, 0, 0, 0], "c": [1]}, k=1)
    assert report.pk == 0.0 and report.skipped == 1 and report.documents == 3
    report = evaluate([ref, other], {"a": [1, 0, 0, 0], "b": [1, 1, 1, 1]}, k=1)
    # 1/3 and 3/3
    assert report.pk == pytest.approx((1 / 3 + 1.0) / 2)
    with pytest.raises(MetricError, match="'b'"):
        evaluate([ref, other], {"a": [1, 0, 1, 0]}, k=1)


def test_evaluate_macro_mean_of_two():
    # hand-built pair with per-document Pk 0.2 and 0.4
    a = Document("a", [["x"]] * 6, [1, 0, 0, 1, 0, 0])
    b = Document("b", [["x"]] * 6, [1, 0, 0, 1, 0, 0])
    ha = [1, 0, 0, 0, 0, 0]  # disagrees only on window (2, 3)
    hb = [1, 0, 1, 0, 0, 0]
    pa, pb = pk_metric(a.boundaries, ha, 1), pk_metric(b.boundaries, hb, 1)
    assert (pa, pb) == (pytest.approx(0.2), pytest.approx(0.4))
    assert evaluate([a, b], {"a": ha, "b": hb}, k=1).pk == pytest.approx(0.3)


def test_report_json_round_trip():
    report = evaluate([Document("a", [["x"]] * 4, [1, 0, 1, 0])], {"a": [1, 0, 1, 0]}, dataset_id="toy", seed=7)
    data = json.loads(report.to_json())
    assert data["dataset"] == "toy" and data["seed"] == 7 and data["k"] == 1
