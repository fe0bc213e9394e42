"""Smoke tests for the prmcal python module (built by CMake, staged on
PYTHONPATH by ctest)."""

import math

import pytest

import prmcal


def make_record(z, success, n_mc, step=0, total=1, qid="q"):
    rec = prmcal.CalibrationRecord()
    rec.question_id = qid
    rec.trajectory_index = 1
    rec.step_index = step
    rec.total_steps = total
    rec.raw_logit = z
    rec.raw_score = 1 / (1 + math.exp(-z))
    rec.success_count = success
    rec.mc_samples = n_mc
    return rec


def test_version():
    assert prmcal.__version__


def test_metrics_fixtures():
    assert prmcal.brier([1, 1], [1, 0]) == pytest.approx(0.5)
    assert prmcal.pos_brier([0.9], [0.5]) == pytest.approx(0.16)
    assert prmcal.ece([0.8, 0.8, 0.2, 0.2], [1, 1, 0, 0], 2) == pytest.approx(0.2)
    report = prmcal.compute_metrics([0.5, 0.7], [0.5, 0.7], 10)
    assert report.brier == 0.0
    assert report.n_samples == 2


def test_budget_rules():
    plan = prmcal.n_ias(0.5)
    assert plan.value == 7
    assert plan.raw_real == pytest.approx(6.6439, abs=1e-3)
    assert prmcal.m_ias(0.3, 8).value == 2
    assert prmcal.k_ias([0.9, 0.5, 0.2], 8).value == 1
    with pytest.raises(ValueError):
        prmcal.n_ias(1.5)


def test_records_roundtrip(tmp_path):
    records = [make_record(0.3, 4, 8, qid=f"q{i}") for i in range(10)]
    path = tmp_path / "records.jsonl"
    prmcal.save_records(records, str(path))
    loaded = prmcal.load_records(str(path))
    assert len(loaded) == 10
    assert loaded[0] == records[0]
    split = prmcal.split_dataset(loaded, 0.5, 0.25, 0.25, seed=3)
    assert len(split.fit_set) + len(split.conformal_set) + len(split.test_set) == 10


def test_calibration_pipeline():
    # Uniformly overconfident synthetic scores.
    records = []
    for i in range(400):
        z = -3 + 6 * i / 399 + 1.5
        p_true = 1 / (1 + math.exp(-(z - 1.5)))
        records.append(make_record(z, round(p_true * 16), 16, qid=f"q{i % 40}"))

    temp = prmcal.fit_temperature(records)
    assert temp.scaler.temperature > 0

    iso = prmcal.fit_isotonic(records)
    assert iso.apply_score(0.2) <= iso.apply_score(0.9) + 1e-12

    model = prmcal.fit_quantile_model(records, [0.1, 0.5, 0.9])
    preds = model.predict(records[0])
    assert preds[0] <= preds[1] <= preds[2]

    raw = [r.raw_score for r in records]
    rates = [r.success_rate() for r in records]
    cal = [model.predict_at(r, 0.5) for r in records]
    assert prmcal.brier(cal, rates) < prmcal.brier(raw, rates)

    text = prmcal.calibrator_to_json(model)
    restored = prmcal.calibrator_from_json(text)
    assert prmcal.apply_calibrator(restored, records[0], 0.5) == pytest.approx(
        model.predict_at(records[0], 0.5)
    )

    adj = prmcal.conformal_calibrate(model, 0.1, records[:100], alpha=0.1)
    bound = prmcal.conformal_lower_bound(adj, model, records[0])
    assert 0.0 <= bound <= 1.0


def test_world_and_strategies():
    config = prmcal.WorldConfig()
    config.n_questions = 50
    config.steps = 8
    config.seed = 11
    world = prmcal.World(config)
    assert world.n_questions == 50
    assert world.question(0).p0 == pytest.approx(0.9)

    data = prmcal.generate_calibration_data(world, n_val=2, n_mc=4)
    assert len(data) == 50 * 2 * 9

    oracle = prmcal.PrmOracle.raw_from_world(world)
    strat = prmcal.StrategyConfig()
    strat.trials = 10
    strat.seed = 13
    pass1 = prmcal.run_bon_fixed(world, oracle, 1, strat)
    assert 0.0 <= pass1.accuracy <= 1.0
    assert pass1.mean_budget == pytest.approx(1.0)

    params = prmcal.BudgetParams()
    ias = prmcal.run_bon_ias(world, oracle, oracle, params, strat)
    assert ias.budget_ratio < 1.0
    assert ias.to_json() == prmcal.run_bon_ias(world, oracle, oracle, params, strat).to_json()

    beam = prmcal.BeamConfig()
    beam.beam_width = 4
    beam.expansions = 4
    beam.stride = 4
    bs = prmcal.run_beam_fixed(world, oracle, beam, strat)
    assert bs.mean_budget > 0


def test_calibrated_oracle_routing():
    config = prmcal.WorldConfig()
    config.n_questions = 30
    config.steps = 6
    config.prm_bias = 2.0
    config.seed = 17
    world = prmcal.World(config)
    data = prmcal.generate_calibration_data(world, n_val=2, n_mc=8)
    train = prmcal.QuantileTrainConfig()
    train.max_iters = 600
    model = prmcal.fit_quantile_model(data, [0.1, 0.5], train)

    raw = prmcal.PrmOracle.raw_from_world(world)
    calibrated = raw.with_calibrator(model, level=0.1)
    strat = prmcal.StrategyConfig()
    strat.trials = 10
    strat.seed = 19
    params = prmcal.BudgetParams()
    uncal = prmcal.run_bon_ias(world, raw, raw, params, strat)
    cal = prmcal.run_bon_ias(world, calibrated, raw, params, strat)
    # The biased oracle underspends; the calibrated one allocates more.
    assert cal.mean_budget > uncal.mean_budget
