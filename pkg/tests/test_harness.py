"""Baselines, experiment drivers, result tables, and the CLI."""

import csv
import json
import os

import numpy as np
import pytest

from fdsec.errors import ConfigError, DegenerateChannelError, InfeasibleError
from fdsec.harness import ExperimentConfig, ResultTable, baseline_fd_zf, \
    baseline_hd, cli_main, db_to_linear, default_moment_model, \
    experiment_from_config, experiment_to_config, run_experiment
from fdsec import harness
from fdsec._num import qform
from fdsec.model import ChannelSet, SystemParams, channels_to_config, \
    params_to_config, sample_channels
from fdsec.robust import moment_model_from_config

from support import crandn


def _params(n, power_db=5.0, zeta=0.01):
    p_lin = db_to_linear(power_db)
    return SystemParams(n_tx=n, zeta_a=zeta, zeta_b=zeta,
                        p_a=p_lin, p_b=p_lin)


def test_db_to_linear_values():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(10.0) == pytest.approx(10.0, rel=1e-15)
    assert db_to_linear(20.0) == pytest.approx(100.0, rel=1e-15)
    assert db_to_linear(5.0) == pytest.approx(10.0 ** 0.5, rel=1e-15)
    assert db_to_linear(-10.0) == pytest.approx(0.1, rel=1e-15)


# -- zero-forcing baseline ----------------------------------------------------


def test_fd_zf_independent_of_si_residual():
    ch = sample_channels(3, _params(4))
    _, r_small = baseline_fd_zf(ch, _params(4, zeta=0.001))
    _, r_large = baseline_fd_zf(ch, _params(4, zeta=0.5))
    assert r_small == r_large


def test_fd_zf_rank_one_nulling_and_power():
    p = _params(4)
    for seed in range(5):
        ch = sample_channels(seed, p)
        pair, rate = baseline_fd_zf(ch, p)
        assert rate >= 0.0
        for q, h_loop, budget in ((pair.q_a, ch.h_aa, p.p_a),
                                  (pair.q_b, ch.h_bb, p.p_b)):
            evals = np.linalg.eigvalsh(q)
            if evals[-1] > 0:
                assert evals[-2] <= 1e-8 * evals[-1]
            assert abs(qform(h_loop, q)) < 1e-12
            assert np.trace(q).real <= budget + 1e-9


def test_fd_zf_degenerate_channels():
    p1 = SystemParams(n_tx=1)
    with pytest.raises(DegenerateChannelError):
        baseline_fd_zf(sample_channels(0, p1), p1)
    p3 = _params(3)
    ch = sample_channels(1, p3)
    import dataclasses
    dead = dataclasses.replace(ch, h_aa=np.zeros(3, dtype=complex))
    with pytest.raises(DegenerateChannelError):
        baseline_fd_zf(dead, p3)


def test_fd_zf_no_leakage_matches_projected_mrt():
    # Eve channels inside span(h_ii) vanish after the null-space
    # projection, so each side reduces to MRT on the projected link
    rng = np.random.default_rng(77)
    n = 3
    ch = ChannelSet(h_ab=crandn(rng, n), h_ba=crandn(rng, n),
                    h_aa=crandn(rng, n), h_bb=crandn(rng, n),
                    h_ae=np.zeros(n), h_be=np.zeros(n))
    import dataclasses
    ch = dataclasses.replace(ch, h_ae=0.7 * ch.h_aa,
                             h_be=(0.2 - 1.1j) * ch.h_bb)
    p = _params(n)
    _, rate = baseline_fd_zf(ch, p)

    def proj_norm2(h, loop):
        g = h - loop * (np.vdot(loop, h) / np.vdot(loop, loop))
        return float(np.real(np.vdot(g, g)))

    expected = (np.log2(1.0 + p.p_a * proj_norm2(ch.h_ab, ch.h_aa)
                        / p.sigma_b2)
                + np.log2(1.0 + p.p_b * proj_norm2(ch.h_ba, ch.h_bb)
                          / p.sigma_a2))
    assert rate == pytest.approx(expected, rel=1e-9)


# -- half-duplex baseline -----------------------------------------------------


def test_hd_zero_eve_closed_form():
    rng = np.random.default_rng(5)
    n = 4
    ch = ChannelSet(h_ab=crandn(rng, n), h_ba=crandn(rng, n),
                    h_aa=crandn(rng, n), h_bb=crandn(rng, n),
                    h_ae=np.zeros(n), h_be=np.zeros(n))
    p = _params(n)
    expected = 0.5 * (
        np.log2(1.0 + p.p_a * np.linalg.norm(ch.h_ab) ** 2 / p.sigma_b2)
        + np.log2(1.0 + p.p_b * np.linalg.norm(ch.h_ba) ** 2 / p.sigma_a2))
    assert baseline_hd(ch, p) == pytest.approx(expected, rel=1e-9)


def test_hd_slot_symmetry_under_role_swap():
    p = _params(3)
    ch = sample_channels(12, p)
    swapped = ChannelSet(h_ab=ch.h_ba, h_ba=ch.h_ab, h_ae=ch.h_be,
                         h_be=ch.h_ae, h_aa=ch.h_bb, h_bb=ch.h_aa)
    assert baseline_hd(ch, p) == pytest.approx(baseline_hd(swapped, p),
                                               abs=1e-12)


# -- experiment config --------------------------------------------------------


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="sweep_power", power_db=())
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="sweep_antennas", antennas=())
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="convergence", zetas=())
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="convergence", trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="convergence", draws=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="convergence", rng_seed=-1)
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="convergence", zetas=(-0.1,))
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="sweep_antennas", antennas=(0, 2))
    with pytest.raises(ConfigError):
        ExperimentConfig(kind="convergence", n_tx=0)


def test_experiment_config_round_trip():
    cfg = ExperimentConfig(kind="robust_exact_moment", n_tx=3,
                           power_db=(0.0, 5.0), trials=7, rng_seed=9,
                           draws=500,
                           moment=default_moment_model(3, tau=0.02))
    back = experiment_from_config(experiment_to_config(cfg))
    assert back.kind == cfg.kind
    assert back.power_db == cfg.power_db
    assert back.trials == 7 and back.rng_seed == 9 and back.draws == 500
    assert back.moment.epsilon == cfg.moment.epsilon
    assert np.allclose(back.moment.xi_a, cfg.moment.xi_a)
    assert np.allclose(back.moment.omega_b, cfg.moment.omega_b)
    assert back.moment.tau_1a == 0.02


def test_experiment_config_parsing_errors():
    with pytest.raises(ConfigError):
        experiment_from_config(["not", "a", "dict"])
    with pytest.raises(ConfigError):
        experiment_from_config({"n_tx": 4})
    with pytest.raises(ConfigError):
        experiment_from_config({"kind": "convergence", "power_db": 5.0})
    # unknown keys are dropped, None values fall back to defaults
    cfg = experiment_from_config({"kind": "convergence", "bogus": 1,
                                  "trials": None})
    assert cfg.trials == 200 and cfg.n_tx == 4


def test_default_moment_model_contents():
    mm = default_moment_model(3, tau=0.1, epsilon=0.2, rho=0.01)
    assert np.allclose(mm.xi_a, 0.01 * (1 + 1j) * np.ones(3))
    assert np.allclose(mm.omega_a,
                       np.outer(mm.xi_a, mm.xi_a.conj()) + 0.01 * np.eye(3))
    assert mm.epsilon == 0.2
    assert mm.tau_1a == mm.tau_2b == 0.1
    assert default_moment_model(2).epsilon == 0.05


# -- result tables ------------------------------------------------------------


def test_result_table_csv_and_json():
    table = ResultTable()
    table.append("exp", "m", 5.0, 0, "ssr", 1.0 / 3.0)
    table.append("exp", "m", 3, 1, "ssr", 2.0)
    csv_path = "/tmp/fdsec_table_test.csv"
    table.to_csv(csv_path)
    with open(csv_path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "experiment,method,sweep,trial,metric,value"
    assert lines[1].split(",") == ["exp", "m", repr(5.0), "0", "ssr",
                                   repr(1.0 / 3.0)]
    # integer sweep values stay integers in the text form
    assert lines[2].split(",")[2] == "3"
    assert float(lines[1].split(",")[5]) == 1.0 / 3.0

    json_path = "/tmp/fdsec_table_test.json"
    table.write(json_path, fmt="json")
    with open(json_path) as fh:
        rows = json.load(fh)
    assert rows[0] == {"experiment": "exp", "method": "m", "sweep": 5.0,
                       "trial": 0, "metric": "ssr", "value": 1.0 / 3.0}
    assert len(rows) == 2


def test_result_table_filtering():
    table = ResultTable()
    table.append("e", "a", 1.0, 0, "ssr", 1.0)
    table.append("e", "a", 2.0, 0, "ssr", 2.0)
    table.append("e", "b", 1.0, 0, "ssr", 3.0)
    table.append("e", "a", 1.0, 0, "other", 4.0)
    assert np.allclose(sorted(table.values(method="a", metric="ssr")),
                       [1.0, 2.0])
    assert table.values(method="a", metric="ssr", sweep=2.0) == [2.0]
    assert table.values(method="b")[0] == 3.0


# -- experiment drivers -------------------------------------------------------


def test_convergence_rows_schema():
    cfg = ExperimentConfig(kind="convergence", n_tx=2, trials=3,
                           rng_seed=4)
    table = run_experiment(cfg)
    methods = {rec[1] for rec in table.records}
    metrics = {rec[4] for rec in table.records}
    assert methods == {"fd-dc"}
    assert metrics == {"ssr", "R_a", "R_b", "R_e"}
    for t in range(3):
        iters = sorted({rec[2] for rec in table.records if rec[3] == t})
        # accepted iterates are numbered consecutively from 1
        assert iters == list(range(1, len(iters) + 1))
        ssr = table.values(metric="ssr")
    assert np.all(np.isfinite(ssr))
    # each iterate contributes one row per metric
    assert len(table.records) % 4 == 0


def test_convergence_suppresses_eve_rate():
    cfg = ExperimentConfig(kind="convergence", n_tx=4, trials=1,
                           rng_seed=1)
    table = run_experiment(cfg)
    r_e = table.values(method="fd-dc", metric="R_e")
    assert r_e[-1] < r_e[0]
    assert r_e[-1] < 0.2


def test_sweep_power_zeta_suffix_and_baseline_rows():
    cfg = ExperimentConfig(kind="sweep_power", n_tx=2,
                           power_db=(0.0, 5.0), zetas=(0.01, 0.1),
                           trials=2, rng_seed=2)
    table = run_experiment(cfg)
    methods = {rec[1] for rec in table.records}
    assert methods == {"fd-dc/z0.01", "fd-dc/z0.1", "fd-zf", "hd-dc"}
    # baselines are zeta independent and therefore emitted once per
    # sweep point, not once per zeta
    assert len(table.values(method="fd-zf", metric="ssr")) == 4
    assert len(table.values(method="hd-dc", metric="ssr")) == 4
    for m in ("fd-dc/z0.01", "fd-dc/z0.1"):
        assert len(table.values(method=m, metric="ssr")) == 4
    assert {rec[2] for rec in table.records} == {0.0, 5.0}


def test_sweep_single_zeta_has_no_suffix():
    cfg = ExperimentConfig(kind="sweep_power", n_tx=2, power_db=(5.0,),
                           zetas=(0.05,), trials=1)
    table = run_experiment(cfg)
    assert {rec[1] for rec in table.records} == {"fd-dc", "fd-zf",
                                                 "hd-dc"}


def test_sweep_reuses_channels_across_grid():
    # same (seed, N, trial) key everywhere, so the zeta-independent
    # baselines must agree between different power configs at sweep 5
    cfg_a = ExperimentConfig(kind="sweep_power", n_tx=2,
                             power_db=(5.0,), trials=2, rng_seed=6)
    cfg_b = ExperimentConfig(kind="sweep_power", n_tx=2,
                             power_db=(0.0, 5.0), trials=2, rng_seed=6)
    t_a = run_experiment(cfg_a)
    t_b = run_experiment(cfg_b)
    assert np.allclose(t_a.values(method="fd-zf", metric="ssr"),
                       t_b.values(method="fd-zf", metric="ssr",
                                  sweep=5.0))


def test_sweep_antennas_records_failures_and_continues(capsys):
    cfg = ExperimentConfig(kind="sweep_antennas", n_tx=2,
                           antennas=(1, 2), trials=2, rng_seed=3)
    table = run_experiment(cfg)
    # no null space at N=1: the ZF baseline fails per trial, everything
    # else still runs
    failed = [rec for rec in table.records if rec[4] == "failed"]
    assert len(failed) == 2
    assert all(rec[1] == "fd-zf" and rec[2] == 1 and rec[5] == 1.0
               for rec in failed)
    assert len(table.values(method="fd-zf", metric="ssr", sweep=2)) == 2
    assert len(table.values(method="fd-dc", metric="ssr")) == 4
    assert len(table.values(method="hd-dc", metric="ssr")) == 4
    assert "fd-zf" in capsys.readouterr().err


def test_run_experiment_deterministic():
    cfg = ExperimentConfig(kind="sweep_power", n_tx=2, power_db=(5.0,),
                           trials=2, rng_seed=11)
    assert run_experiment(cfg).records == run_experiment(cfg).records


# -- robust kinds -------------------------------------------------------------


def test_robust_kind_requires_matching_moment():
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(kind="robust_exact_moment",
                                        n_tx=2, trials=1))
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(kind="robust_exact_moment",
                                        n_tx=2, trials=1,
                                        moment=default_moment_model(3)))


def test_robust_exact_moment_rows_and_hist(tmp_path):
    cfg = ExperimentConfig(kind="robust_exact_moment", n_tx=2, trials=2,
                           draws=200, rng_seed=8,
                           moment=default_moment_model(2),
                           out_dir=str(tmp_path))
    table = run_experiment(cfg)
    methods = {rec[1] for rec in table.records}
    assert methods == {"fd-dc", "robust-dc"}
    fams = ("binary", "gaussian", "laplace", "uniform")
    for method in methods:
        for t in range(2):
            rows = {rec[4]: rec[5] for rec in table.records
                    if rec[1] == method and rec[3] == t}
            assert set(rows) == {f"outage_{f}" for f in fams} | {
                "worst_outage", "r_s"}
            per_fam = [rows[f"outage_{f}"] for f in fams]
            assert rows["worst_outage"] == max(per_fam)
            assert all(0.0 <= v <= 1.0 for v in per_fam)
            assert np.isfinite(rows["r_s"])
    # histogram side outputs for trial 0 only
    for method in ("fd-dc", "robust-dc"):
        path = tmp_path / f"hist_{method}.csv"
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["family", "bin_left", "bin_right", "count"]
        counts = {}
        for fam, _, _, cnt in rows[1:]:
            counts[fam] = counts.get(fam, 0) + int(cnt)
        assert counts == {f: 200 for f in fams}


def test_robust_uncertain_moment_method_names():
    cfg = ExperimentConfig(kind="robust_uncertain_moment", n_tx=2,
                           trials=1, draws=100, rng_seed=8,
                           moment=default_moment_model(2, tau=0.05))
    table = run_experiment(cfg)
    methods = {rec[1] for rec in table.records}
    assert methods == {"robust-dc/t0", "robust-dc/taware"}
    assert any(rec[4] == "outage_gaussian" for rec in table.records)


def test_outage_per_channel_skips_family_rows():
    cfg = ExperimentConfig(kind="outage_per_channel", n_tx=2, trials=1,
                           draws=100, rng_seed=8,
                           moment=default_moment_model(2))
    table = run_experiment(cfg)
    metrics = {rec[4] for rec in table.records}
    assert metrics == {"worst_outage", "r_s"}
    assert {rec[1] for rec in table.records} == {"fd-dc", "robust-dc"}


def test_robust_failures_recorded_and_run_continues(monkeypatch, capsys):
    def boom(*a, **k):
        raise InfeasibleError("forced failure")

    monkeypatch.setattr(harness, "robust_dc_solve", boom)
    cfg = ExperimentConfig(kind="robust_exact_moment", n_tx=2, trials=2,
                           draws=50, rng_seed=8,
                           moment=default_moment_model(2))
    table = run_experiment(cfg)
    failed = [rec for rec in table.records if rec[1] == "robust-dc"]
    assert len(failed) == 2
    assert all(rec[4] == "failed" and rec[5] == 1.0 for rec in failed)
    # the nominal design is untouched and still fully evaluated
    assert len(table.values(method="fd-dc", metric="r_s")) == 2
    assert "forced failure" in capsys.readouterr().err


# -- CLI ----------------------------------------------------------------------


def test_cli_gen_config(tmp_path, capsys):
    assert cli_main(["gen-config", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "config.json") as fh:
        cfg = json.load(fh)
    assert cfg["kind"] == "sweep_power"
    assert cfg["n_tx"] == 4
    assert cfg["power_db"] == [5.0]
    assert cfg["zetas"] == [0.01]
    assert cfg["trials"] == 200
    assert cfg["rng_seed"] == 1
    assert cfg["draws"] == 100000
    mm = moment_model_from_config(cfg["moment"])
    assert mm.epsilon == 0.05 and mm.n_tx == 4
    assert "wrote" in capsys.readouterr().out
    assert cli_main(["gen-config", "--seed", "9",
                     "--out", str(tmp_path)]) == 0
    with open(tmp_path / "config.json") as fh:
        assert json.load(fh)["rng_seed"] == 9


def test_cli_config_errors(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert cli_main(["solve", "--config", missing,
                     "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli_main(["solve", "--config", str(bad),
                     "--out", str(tmp_path)]) == 2
    neg = tmp_path / "neg.json"
    neg.write_text(json.dumps({"rng_seed": -3, "n_tx": 2}))
    assert cli_main(["solve", "--config", str(neg),
                     "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_unknown_flag_exits_2():
    assert cli_main(["solve", "--bogus"]) == 2
    assert cli_main(["no-such-command"]) == 2


def test_cli_robust_eval_rejects_other_kinds(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"kind": "convergence", "n_tx": 2}))
    assert cli_main(["robust-eval", "--config", str(cfgp),
                     "--out", str(tmp_path)]) == 2


def test_cli_solve_writes_tables(tmp_path, capsys):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"n_tx": 2, "power_db": 5.0,
                                "zetas": 0.02, "rng_seed": 3}))
    assert cli_main(["solve", "--config", str(cfgp),
                     "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "wrote" in out and "bit/s/Hz" in out
    with open(tmp_path / "solve.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(harness.CSV_HEADER)
    metrics = {r[4]: float(r[5]) for r in rows[1:]}
    assert set(metrics) == {"ssr", "R_a", "R_b", "R_e", "iterations",
                            "stationarity"}
    assert metrics["ssr"] >= 0.0
    with open(tmp_path / "solve_trace.csv") as fh:
        header = fh.readline().strip()
    assert header == "iter,objective,R_a,R_b,R_e"


def test_cli_solve_json_format(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"n_tx": 2}))
    assert cli_main(["solve", "--config", str(cfgp), "--format", "json",
                     "--out", str(tmp_path)]) == 0
    with open(tmp_path / "solve.json") as fh:
        rows = json.load(fh)
    assert isinstance(rows, list)
    assert set(rows[0]) == {"experiment", "method", "sweep", "trial",
                            "metric", "value"}


def test_cli_explicit_channel_config(tmp_path):
    p = _params(2)
    ch = sample_channels(21, p)
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"params": params_to_config(p),
                                "channels": channels_to_config(ch)}))
    assert cli_main(["solve", "--config", str(cfgp),
                     "--out", str(tmp_path)]) == 0
    # channel block length disagreeing with params is a config error
    p3 = _params(3)
    mism = tmp_path / "m.json"
    mism.write_text(json.dumps({
        "params": params_to_config(p),
        "channels": channels_to_config(sample_channels(21, p3))}))
    assert cli_main(["solve", "--config", str(mism),
                     "--out", str(tmp_path)]) == 2


def test_cli_convergence_byte_identical_rerun(tmp_path, capsys):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"n_tx": 2}))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    out_a.mkdir()
    out_b.mkdir()
    for out in (out_a, out_b):
        assert cli_main(["convergence", "--config", str(cfgp),
                         "--seed", "42", "--trials", "2",
                         "--out", str(out)]) == 0
    blob_a = (out_a / "convergence.csv").read_bytes()
    assert blob_a == (out_b / "convergence.csv").read_bytes()
    n_rows = len(blob_a.splitlines()) - 1
    assert f"({n_rows} rows)" in capsys.readouterr().out


def test_cli_robust_solve_and_eval(tmp_path, capsys):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"n_tx": 2, "rng_seed": 5}))
    assert cli_main(["robust-solve", "--config", str(cfgp),
                     "--out", str(tmp_path)]) == 0
    with open(tmp_path / "robust_solution.csv") as fh:
        rows = {r[4]: float(r[5]) for r in list(csv.reader(fh))[1:]}
    assert set(rows) == {"r_s", "iterations", "mu", "nu_e"}
    assert rows["mu"] > 0.0
    with open(tmp_path / "robust_trace.csv") as fh:
        assert fh.readline().strip() == "iter,objective"

    evalp = tmp_path / "e.json"
    evalp.write_text(json.dumps({"kind": "robust_exact_moment",
                                 "n_tx": 2, "trials": 1, "draws": 100,
                                 "rng_seed": 5}))
    assert cli_main(["robust-eval", "--config", str(evalp),
                     "--out", str(tmp_path)]) == 0
    assert (tmp_path / "robust_exact_moment.csv").exists()
    assert "wrote" in capsys.readouterr().out


def test_cli_infeasible_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise InfeasibleError("no feasible point")

    monkeypatch.setattr(harness, "robust_dc_solve", boom)
    assert cli_main(["robust-solve", "--out", str(tmp_path)]) == 3
    assert "infeasible" in capsys.readouterr().err
