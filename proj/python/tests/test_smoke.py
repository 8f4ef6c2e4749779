import math

import pytest

import ncrl_lab as nl


def test_unit_values():
    value, grad = nl.loss("ncrl_plain", [1, 0], [0.0, 0.0, 0.0])
    assert value == pytest.approx(2 * math.log(2), abs=1e-12)
    assert sum(grad) == pytest.approx(0.0, abs=1e-12)
    value, _ = nl.loss("atl", [0, 0], [0.0, 0.0, 0.0])
    assert value == pytest.approx(math.log(3), abs=1e-12)
    assert nl.ncre([1], [0.0, 0.0]) == 0.5


def test_bad_loss_name():
    with pytest.raises(ValueError):
        nl.loss("nope", [1], [0.0, 0.0])


def test_grad_check_and_consistency():
    assert nl.grad_check("ncrl_final", gamma=0.05, k=5, trials=20) < 1e-4
    report = nl.consistency(trials=50)
    assert report["sign_agreement_rate"] == 1.0
    assert nl.optimal_margins([0.5])[0] == pytest.approx(0.0, abs=1e-12)


def test_train_predict_roundtrip(tmp_path):
    x, y = nl.generate(k=4, dim=6, n=400, seed=3)
    assert len(x) == 400 and len(x[0]) == 6
    path = tmp_path / "d.jsonl"
    nl.save_dataset(str(path), x, y, 4)
    lx, ly, k = nl.load_dataset(str(path))
    assert (lx, ly, k) == (x, y, 4)

    model = nl.train(x, y, x[:100], y[:100], 4, loss="ncrl_final", epochs=5)
    scores = model.scores(x[:100])
    assert len(scores[0]) == 5
    pred = model.predict(x[:100])
    assert pred[0] == nl.predict_adaptive(scores[0])
    metrics = nl.evaluate(scores, pred, y[:100], 4)
    assert 0.0 <= metrics["micro_f1"] <= 1.0
    model.save(str(tmp_path / "m.json"))
    assert (tmp_path / "m.json").exists()


def test_featurizer():
    rows = nl.hashing_featurizer(["a b c", ""], 16)
    assert sum(v * v for v in rows[0]) == pytest.approx(1.0)
    assert all(v == 0.0 for v in rows[1])
