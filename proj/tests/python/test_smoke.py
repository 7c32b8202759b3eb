import json
import math

import numpy as np
import pytest

import ebmkit


@pytest.fixture(scope="module")
def oracle():
    cohort, true_logits = ebmkit.generate("oracle", 6000, seed=3)
    model = ebmkit.train_ebm(cohort, "outcome", {"outer_bags": 3, "inner_bags": 1, "interactions": 2})
    return cohort, true_logits, model


def test_presets_roundtrip():
    assert "oracle" in ebmkit.preset_names()
    spec = ebmkit.preset("smm")
    assert spec["outcome"] == "smm"
    a, _ = ebmkit.generate(spec, 500, seed=1)
    b, _ = ebmkit.generate("smm", 500, seed=1)
    assert a.to_csv() == b.to_csv()


def test_cohort_accessors(oracle):
    cohort, true_logits, _ = oracle
    assert cohort.rows == 6000
    assert len(true_logits) == cohort.rows
    y = cohort.labels("outcome")
    assert set(np.unique(y)) <= {0.0, 1.0}
    assert "maternal_bmi" in cohort.columns
    assert len(cohort.tokens("race")) == cohort.rows
    sub = cohort.subset([0, 5, 7])
    assert sub.row_ids == [0, 5, 7]


def test_predictions_and_explanations(oracle):
    cohort, true_logits, model = oracle
    p = model.predict_proba(cohort)
    z = model.predict_logit(cohort)
    assert np.allclose(p, 1.0 / (1.0 + np.exp(-z)))
    assert ebmkit.auroc(p, cohort.labels("outcome")) > 0.65
    e = model.explain(cohort, 10)
    total = e["intercept"] + sum(c for _, c in e["terms"])
    assert total == pytest.approx(e["logit"], abs=1e-12)
    assert e["logit"] == pytest.approx(z[10], abs=1e-12)
    with pytest.raises(IndexError):
        model.explain(cohort, cohort.rows)


def test_importance_and_shape(oracle):
    cohort, _, model = oracle
    imp = model.importance(cohort)
    values = [v for _, v in imp]
    assert values == sorted(values, reverse=True)
    assert all(v >= 0 for v in values)
    s = ebmkit.shape(model, "maternal_bmi")
    assert s["feature"] == "maternal_bmi"


def test_serialization(oracle):
    cohort, _, model = oracle
    text = model.serialize()
    back = ebmkit.EbmModel.deserialize(text)
    assert back.serialize() == text
    assert np.array_equal(back.predict_logit(cohort), model.predict_logit(cohort))
    with pytest.raises(ebmkit.ModelFormatError):
        ebmkit.EbmModel.deserialize(text[: len(text) // 2])


def test_lr_baseline(oracle):
    cohort, _, _ = oracle
    lr = ebmkit.train_lr(cohort, "outcome")
    p = lr.predict_proba(cohort)
    assert np.all((p > 0) & (p < 1))
    assert json.loads(lr.serialize())


def test_metrics():
    assert ebmkit.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
    assert ebmkit.log_loss([0.5, 0.5], [0, 1]) == pytest.approx(math.log(2))
    with pytest.raises(ebmkit.MetricError):
        ebmkit.auroc([0.1, 0.2], [1, 1])
    pts = ebmkit.calibration_curve(np.linspace(0.01, 0.99, 100), [i % 2 for i in range(100)], bins=5)
    assert len(pts) == 5
    assert sum(c for _, _, c in pts) == 100


def test_errors_are_typed():
    with pytest.raises(ebmkit.ConfigError):
        ebmkit.generate("no_such_preset", 10)
    cohort, _ = ebmkit.generate("oracle", 300, seed=1)
    with pytest.raises(ebmkit.EbmkitError):
        ebmkit.train_ebm(cohort, "not_a_column")


def test_cli_in_process(tmp_path):
    code, _, err = ebmkit.run_cli(["synth", "--preset", "oracle", "--n", "200", "--out", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "cohort.csv").exists()
    code, _, _ = ebmkit.run_cli(["synth", "--bogus"])
    assert code == 2
