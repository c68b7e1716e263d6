import numpy as np
import pytest

from strbf.config import ConfigError, build_config, load_config_file
from strbf.harness import (
    AggregationError,
    CenterRule,
    ExperimentConfig,
    ModelKind,
    TrialResult,
    aggregate,
    curve_db,
    emit_comparison,
    emit_csv,
    mse_db,
    read_csv_curves,
    run_monte_carlo,
    run_trial,
    summary_path,
    trial_seed,
)
from strbf.learning import FrbfConfig
from strbf.model import forward_rbf, init_state, tapped_windows
from strbf.plant import NoiseSpec, SignalSpec, gen_square, run_plant

SMALL = dict(train_signal=SignalSpec(120, 30), test_signal=SignalSpec(40, 10), trials=4)


@pytest.mark.parametrize("m, db", [(1.0, 0.0), (0.1, -10.0), (0.01, -20.0)])
def test_mse_db(m, db):
    assert mse_db(m) == pytest.approx(db, abs=1e-12)


@pytest.mark.parametrize("m", [0.0, -1.0, float("nan")])
def test_mse_db_rejects(m):
    with pytest.raises(ValueError):
        mse_db(m)


def test_published_defaults():
    rbf = ExperimentConfig.published("rbf")
    assert (rbf.eta, rbf.lags, rbf.n_neurons, rbf.inputs) == (2e-5, 1, 6, 3)
    assert rbf.kernel.sigma == 1.0 and rbf.noise.variance == 0.1 and rbf.trials == 1000
    assert rbf.train_signal == SignalSpec(1000, 250, 1.0)
    assert rbf.test_signal == SignalSpec(200, 100, 1.0)
    assert rbf.test_target.value == "clean" and rbf.frbf is None
    frbf = ExperimentConfig.published("frbf")
    assert frbf.frbf == FrbfConfig(eta=2e-5, eta_v=2e-5, alpha=0.5, nu=0.9)
    st = ExperimentConfig.published("strbf")
    assert (st.eta, st.lags, st.epochs) == (1e-2, 5, 1)


def test_config_invariants():
    assert ExperimentConfig.published("rbf", lags=7).lags == 1
    with pytest.raises(ValueError):
        ExperimentConfig(model_kind="rbf", frbf=FrbfConfig())
    with pytest.raises(ValueError):
        ExperimentConfig(model_kind="frbf", eta=1e-3, frbf=FrbfConfig(eta=2e-5))
    with pytest.raises(ValueError):
        ExperimentConfig.published("strbf", trials=0)


def test_center_rule_parse():
    assert CenterRule.parse("range:-5:5:2") == CenterRule()
    assert CenterRule.parse(str(CenterRule(values=(0.5, 1.5)))) == CenterRule(values=(0.5, 1.5))
    with pytest.raises(ValueError):
        CenterRule.parse("grid:1")


def test_run_trial_bookkeeping():
    res = run_trial(ExperimentConfig.published("rbf", trials=1), 0)
    assert res.train_sq_err.shape == (1000,) and res.test_sq_err.shape == (200,)
    assert not res.diverged and np.all(res.train_sq_err >= 0)
    res = run_trial(ExperimentConfig.published("strbf", epochs=3, **SMALL), 0)
    assert res.train_sq_err.shape == (360,) and res.test_sq_err.shape == (40,)


@pytest.mark.parametrize("kind", ["rbf", "frbf", "strbf"])
def test_run_trial_deterministic(kind):
    cfg = ExperimentConfig.published(kind, epochs=2, **SMALL)
    a, b = run_trial(cfg, 3), run_trial(cfg, 3)
    assert a.train_sq_err.tobytes() == b.train_sq_err.tobytes()
    assert a.test_sq_err.tobytes() == b.test_sq_err.tobytes()
    c = run_trial(cfg, 4)
    assert a.train_sq_err.tobytes() != c.train_sq_err.tobytes()


def test_zero_step_freezes_parameters():
    cfg = ExperimentConfig.published("rbf", eta=0.0, base_seed=7, **SMALL)
    res = run_trial(cfg, 2)
    init_ss, train_ss, _ = trial_seed(7, 2).spawn(3)
    init = init_state(cfg.architecture(), np.random.default_rng(init_ss), cfg.init_scale)
    assert np.array_equal(res.state.weights, init.weights) and res.state.bias == init.bias
    r = gen_square(cfg.train_signal)
    d = run_plant(cfg.plant, r, cfg.noise, np.random.default_rng(train_ss))
    y = np.array([forward_rbf(init, x) for x in tapped_windows(r, 3)])
    assert np.array_equal(res.train_sq_err, (d - y) ** 2)


def test_noisy_and_clean_test_targets_differ():
    clean = run_trial(ExperimentConfig.published("rbf", **SMALL), 0)
    noisy = run_trial(ExperimentConfig.published("rbf", test_target="noisy", **SMALL), 0)
    assert np.array_equal(clean.train_sq_err, noisy.train_sq_err)
    assert not np.array_equal(clean.test_sq_err, noisy.test_sq_err)


def test_divergence_is_flagged_and_counted():
    cfg = ExperimentConfig.published("rbf", eta=1e3, **SMALL)
    res = run_trial(cfg, 0)
    assert res.diverged and res.train_sq_err.shape == (120,)
    with pytest.raises(AggregationError):
        run_monte_carlo(cfg)
    ok = run_trial(ExperimentConfig.published("rbf", **SMALL), 0)
    agg = aggregate([ok, res, ok])
    assert agg.trials_used == 2 and agg.diverged_count == 1


def test_single_trial_aggregate():
    cfg = ExperimentConfig.published("strbf", **{**SMALL, "trials": 1})
    agg = run_monte_carlo(cfg)
    t = run_trial(cfg, 0)
    assert np.array_equal(agg.mean_train_curve_db, curve_db(t.train_sq_err))
    assert np.array_equal(agg.mean_test_curve_db, curve_db(t.test_sq_err))
    assert agg.trials_used == 1


def test_aggregate_order_invariant_and_identity():
    cfg = ExperimentConfig.published("strbf", **{**SMALL, "trials": 9})
    trials = [run_trial(cfg, i) for i in range(9)]
    a = aggregate(trials)
    b = aggregate(trials[::-1])
    c = aggregate([trials[i] for i in np.random.default_rng(0).permutation(9)])
    for other in (b, c):
        np.testing.assert_allclose(other.mean_train_curve, a.mean_train_curve, rtol=1e-12, atol=0)
        np.testing.assert_allclose(other.mean_test_curve, a.mean_test_curve, rtol=1e-12, atol=0)
    copies = aggregate([trials[0]] * 7)
    np.testing.assert_allclose(copies.mean_train_curve, trials[0].train_sq_err, rtol=1e-15, atol=0)


def test_db_applied_after_averaging():
    cfg = ExperimentConfig.published("rbf", **SMALL)
    trials = [run_trial(cfg, i) for i in range(4)]
    agg = aggregate(trials)
    assert agg.audit == ("mean_linear", "to_db")
    lin = np.mean([t.test_sq_err for t in trials], axis=0)
    np.testing.assert_allclose(agg.mean_test_curve_db, 10 * np.log10(lin), rtol=1e-12)
    # averaging dB values instead would give a different (smaller) number
    avg_db = np.mean([10 * np.log10(t.test_sq_err.mean()) for t in trials])
    assert agg.mean_test_mse_db == pytest.approx(10 * np.log10(lin.mean()), rel=1e-12)
    assert agg.mean_test_mse_db > avg_db


def test_parallel_matches_serial():
    cfg = ExperimentConfig.published("strbf", **SMALL)
    a, b = run_monte_carlo(cfg, workers=1), run_monte_carlo(cfg, workers=2)
    assert a.mean_train_curve.tobytes() == b.mean_train_curve.tobytes()
    assert a.mean_test_mse_db == b.mean_test_mse_db


def test_summary_statistics():
    cfg = ExperimentConfig.published("strbf", **SMALL)
    agg = run_monte_carlo(cfg)
    assert agg.final_train_mse_db == pytest.approx(mse_db(agg.mean_train_curve[-12:].mean()), rel=1e-12)
    assert agg.mean_test_mse_db == pytest.approx(mse_db(agg.mean_test_curve.mean()), rel=1e-12)


def test_emit_csv_round_trip_and_determinism(tmp_path):
    agg = run_monte_carlo(ExperimentConfig.published("frbf", **SMALL))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(agg, p1)
    emit_csv(agg, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert summary_path(p1).read_bytes() == summary_path(p2).read_bytes()
    train, test = read_csv_curves(p1)
    assert np.array_equal(train, agg.mean_train_curve) and np.array_equal(test, agg.mean_test_curve)
    lines = p1.read_text().splitlines()
    assert lines[0] == "phase,iteration,mean_sq_err,mean_db"
    assert len(lines) == 1 + 120 + 40
    assert b"\r" not in p1.read_bytes()
    summary = summary_path(p1).read_text().splitlines()
    assert summary[0] == "key,value" and summary[1].startswith("final_train_mse_db,")


def test_emit_csv_moving_average_column(tmp_path):
    agg = run_monte_carlo(ExperimentConfig.published("rbf", **SMALL))
    p = tmp_path / "ma.csv"
    emit_csv(agg, p, smooth_window=5)
    lines = p.read_text().splitlines()
    assert lines[0].endswith(",mean_db_ma5")
    row = lines[10].split(",")
    expected = 10 * np.log10(agg.mean_train_curve[5:10].mean())
    assert float(row[4]) == pytest.approx(expected, rel=1e-12)


def test_emit_csv_empty_curve(tmp_path):
    agg = run_monte_carlo(ExperimentConfig.published("rbf", **SMALL))
    agg.mean_train_curve = agg.mean_test_curve = np.array([])
    agg.mean_train_curve_db = agg.mean_test_curve_db = np.array([])
    p = tmp_path / "empty.csv"
    emit_csv(agg, p)
    assert p.read_text() == "phase,iteration,mean_sq_err,mean_db\n"


def test_emit_csv_error_names_path(tmp_path):
    agg = run_monte_carlo(ExperimentConfig.published("rbf", **SMALL))
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv(agg, bad)


def test_emit_comparison(tmp_path):
    results = {k: run_monte_carlo(ExperimentConfig.published(k, **SMALL)) for k in ModelKind}
    p = tmp_path / "summary.csv"
    emit_comparison(results, p)
    lines = p.read_text().splitlines()
    assert lines[0].split(",")[:5] == [
        "model", "final_train_mse_db", "mean_test_mse_db", "published_train_db", "published_test_db",
    ]
    assert [ln.split(",")[0] for ln in lines[1:]] == ["rbf", "frbf", "strbf"]
    assert [float(v) for v in lines[3].split(",")[3:5]] == [-15.1286, -19.67]


def test_ordering_property_desk_scale():
    res = {k: run_monte_carlo(ExperimentConfig.published(k, trials=10)) for k in ModelKind}
    st = res[ModelKind.STRBF].mean_test_mse_db
    assert st < res[ModelKind.FRBF].mean_test_mse_db
    assert st < res[ModelKind.RBF].mean_test_mse_db


# -- config files ----------------------------------------------------------


def test_config_file_round_trip(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("# comment\nmodel = frbf\neta = 1e-3\nnu = 0.8\ntrials=5\ncenters = list:-1,1\n")
    cfg = build_config(load_config_file(p))
    assert cfg.model_kind is ModelKind.FRBF and cfg.eta == 1e-3 and cfg.frbf.nu == 0.8
    assert cfg.trials == 5 and cfg.n_neurons == 2


def test_config_file_rejects_unknown_key(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("trials = 5\nlearning_rate = 0.1\n")
    with pytest.raises(ConfigError, match="learning_rate"):
        load_config_file(p)


def test_config_errors_name_key(tmp_path):
    with pytest.raises(ConfigError, match="trials"):
        build_config({"trials": 0})
    with pytest.raises(ConfigError, match="noise_var"):
        build_config({"noise_var": -1.0})
    p = tmp_path / "v.cfg"
    p.write_text("epochs = many\n")
    with pytest.raises(ConfigError, match="epochs"):
        load_config_file(p)
    with pytest.raises(ConfigError, match="nowhere.cfg"):
        load_config_file(tmp_path / "nowhere.cfg")


def test_build_config_model_specific_defaults():
    s = {"lags": 3}
    assert build_config(s, "strbf").lags == 3
    assert build_config(s, "rbf").lags == 1
    assert build_config({}, "frbf").eta == 2e-5
    assert build_config({"eta": 0.5}, "strbf").eta == 0.5
    assert build_config({"test_target": "noisy"}).test_target.value == "noisy"
    assert build_config({"noise_var": 0.0}).noise == NoiseSpec(0.0)


def test_trial_result_fields():
    r = TrialResult(np.zeros(3), np.zeros(2))
    assert not r.diverged
