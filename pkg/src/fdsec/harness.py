"""Experiment driver and command line front end.

Everything here is plumbing around the solvers: reference baselines,
batched Monte Carlo runs over seeded channel draws, and a small CLI
that writes long-format result tables. Output is deterministic for a
fixed config and seed: floats are serialized with repr() and rows are
emitted in a fixed order, so reruns are byte-identical.
"""

import argparse
import csv
import dataclasses
from dataclasses import dataclass, field
import json
import os
import sys

import numpy as np
import scipy.linalg as sla

from . import reduction
from ._num import LN2, herm, qform
from .adc import SubproblemData, adc_solve, default_init, solve_dc_subproblem
from .errors import ConfigError, DegenerateChannelError, FdsecError, \
    InfeasibleError
from .model import ChannelSet, CovariancePair, SystemParams, \
    channels_from_config, params_from_config, sample_channels, \
    sum_secrecy_rate
from .robust import MomentModel, moment_model_from_config, \
    moment_model_to_config, robust_dc_solve, verify_outage

EXPERIMENT_KINDS = ("convergence", "sweep_power", "sweep_antennas",
                    "robust_exact_moment", "robust_uncertain_moment",
                    "outage_per_channel")

CSV_HEADER = ("experiment", "method", "sweep", "trial", "metric", "value")


def db_to_linear(power_db: float) -> float:
    return float(10.0 ** (power_db / 10.0))


# -- zero-forcing baseline ---------------------------------------------------


def _ratio_direction(g_sig, g_eve, noise_sig, eve_floor, budget):
    # max over ||v||^2 <= budget of (1 + v^H A v) / (1 + v^H B v) with
    # rank-one A, B. The ratio is monotone in the power along any fixed
    # direction, so the optimum is full power along the top generalized
    # eigenvector of (I + P A, I + P B), or zero if no direction beats 1.
    r = g_sig.size
    a_mat = np.eye(r) + budget * np.outer(g_sig, g_sig.conj()) / noise_sig
    b_mat = np.eye(r) + budget * np.outer(g_eve, g_eve.conj()) / eve_floor
    evals, evecs = sla.eigh(herm(a_mat), herm(b_mat))
    if evals[-1] <= 1.0 + 1e-12:
        return np.zeros(r, dtype=complex)
    u = evecs[:, -1]
    u = u / np.linalg.norm(u)
    return np.sqrt(budget) * u


def baseline_fd_zf(ch: ChannelSet, p: SystemParams):
    """Full-duplex baseline that forces both covariances into the self-
    interference null space and beamforms there.

    Within the (N-1)-dimensional null space of its own loop channel each
    node alternates exact rank-one updates of the secrecy objective;
    every block step is a closed-form generalized eigenvector, so the
    iteration is monotone from the all-zero start and the reported rate
    is nonnegative. Independent of the residual factors zeta by
    construction.
    """
    n = ch.n_tx
    if n < 2:
        raise DegenerateChannelError(
            "null-space baseline needs at least 2 antennas")
    if np.linalg.norm(ch.h_aa) == 0 or np.linalg.norm(ch.h_bb) == 0:
        raise DegenerateChannelError(
            "zero loop channel leaves the null space undefined")
    t_a = sla.null_space(ch.h_aa.conj()[None, :])
    t_b = sla.null_space(ch.h_bb.conj()[None, :])
    g_ab = t_a.conj().T @ ch.h_ab
    g_ae = t_a.conj().T @ ch.h_ae
    g_ba = t_b.conj().T @ ch.h_ba
    g_be = t_b.conj().T @ ch.h_be

    v_a = np.zeros(n - 1, dtype=complex)
    v_b = np.zeros(n - 1, dtype=complex)

    def obj_nat(va, vb):
        e_a = abs(np.vdot(g_ae, va)) ** 2
        e_b = abs(np.vdot(g_be, vb)) ** 2
        return (np.log1p(abs(np.vdot(g_ab, va)) ** 2 / p.sigma_b2)
                + np.log1p(abs(np.vdot(g_ba, vb)) ** 2 / p.sigma_a2)
                - np.log1p((e_a + e_b) / p.sigma_e2))

    prev = 0.0
    for _ in range(200):
        e_b = abs(np.vdot(g_be, v_b)) ** 2
        v_a = _ratio_direction(g_ab, g_ae, p.sigma_b2,
                               p.sigma_e2 + e_b, p.p_a)
        e_a = abs(np.vdot(g_ae, v_a)) ** 2
        v_b = _ratio_direction(g_ba, g_be, p.sigma_a2,
                               p.sigma_e2 + e_a, p.p_b)
        val = obj_nat(v_a, v_b)
        if val - prev < 1e-10:
            prev = val
            break
        prev = val

    x_a = t_a @ v_a
    x_b = t_b @ v_b
    pair = CovariancePair(q_a=herm(np.outer(x_a, x_a.conj())),
                          q_b=herm(np.outer(x_b, x_b.conj())))
    return pair, max(0.0, float(prev / LN2))


# -- half-duplex baseline ----------------------------------------------------


def _hd_slot(h_link, h_eve, sigma_link2, sigma_e2, budget):
    # one-directional secrecy design in the full space; DC loop with the
    # closed-form rank-one subproblem, eavesdropper term relinearized
    # each pass
    n = h_link.size
    q = (budget / n) * np.eye(n, dtype=complex)

    def value(qm):
        return (np.log1p(qform(h_link, qm) / sigma_link2)
                - np.log1p(qform(h_eve, qm) / sigma_e2))

    prev = value(q)
    for _ in range(100):
        denom = sigma_e2 + qform(h_eve, q)
        m = np.outer(h_eve, h_eve.conj()) / denom
        sp = SubproblemData(hhat_ab=h_link / np.sqrt(sigma_link2),
                            m_mat=herm(m), p_budget=budget)
        q = solve_dc_subproblem(sp).w_star
        val = value(q)
        if val - prev < 1e-9:
            prev = val
            break
        prev = val
    r_link = float(np.log1p(qform(h_link, q) / sigma_link2) / LN2)
    r_eve = float(np.log1p(qform(h_eve, q) / sigma_e2) / LN2)
    return r_link, r_eve


def baseline_hd(ch: ChannelSet, p: SystemParams) -> float:
    """Half-duplex reference rate: two slots, no self-interference, the
    eavesdropper decoding each slot separately. Each slot gets the full
    per-node power budget and half the time."""
    r_ab, re_a = _hd_slot(ch.h_ab, ch.h_ae, p.sigma_b2, p.sigma_e2, p.p_a)
    r_ba, re_b = _hd_slot(ch.h_ba, ch.h_be, p.sigma_a2, p.sigma_e2, p.p_b)
    return 0.5 * max(0.0, r_ab - re_a) + 0.5 * max(0.0, r_ba - re_b)


# -- experiment configuration ------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One batched run: what to sweep, how many trials, which seed.

    power_db entries are transmit budgets in dB over unit noise;
    antennas is the N grid for the antenna sweep (other kinds use
    n_tx). moment is required by the robust kinds. out_dir, when set,
    receives side outputs such as histogram CSVs.
    """

    kind: str
    n_tx: int = 4
    power_db: tuple = (5.0,)
    antennas: tuple = (4,)
    zetas: tuple = (0.01,)
    trials: int = 200
    rng_seed: int = 1
    draws: int = 100000
    moment: MomentModel = None
    out_dir: str = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        object.__setattr__(self, "power_db",
                           tuple(float(x) for x in self.power_db))
        object.__setattr__(self, "antennas",
                           tuple(int(x) for x in self.antennas))
        object.__setattr__(self, "zetas",
                           tuple(float(z) for z in self.zetas))
        if not self.power_db or not self.antennas or not self.zetas:
            raise ConfigError("empty sweep grid")
        if self.n_tx < 1 or any(n < 1 for n in self.antennas):
            raise ConfigError("antenna counts must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.draws < 1:
            raise ConfigError("draws must be at least 1")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be nonnegative")
        if any(z < 0 for z in self.zetas):
            raise ConfigError("zeta must be nonnegative")


def experiment_to_config(cfg: ExperimentConfig) -> dict:
    out = {
        "kind": cfg.kind,
        "n_tx": cfg.n_tx,
        "power_db": list(cfg.power_db),
        "antennas": list(cfg.antennas),
        "zetas": list(cfg.zetas),
        "trials": cfg.trials,
        "rng_seed": cfg.rng_seed,
        "draws": cfg.draws,
    }
    if cfg.moment is not None:
        out["moment"] = moment_model_to_config(cfg.moment)
    return out


def experiment_from_config(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("experiment config must be a mapping")
    if "kind" not in d:
        raise ConfigError("experiment config needs a 'kind' entry")
    known = {"kind", "n_tx", "power_db", "antennas", "zetas", "trials",
             "rng_seed", "draws", "moment", "out_dir"}
    kw = {}
    for key in known:
        if key in d and d[key] is not None:
            kw[key] = d[key]
    if "moment" in kw:
        kw["moment"] = moment_model_from_config(kw["moment"])
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad experiment config: {exc}") from None


def default_moment_model(n: int, tau: float = 0.0, epsilon: float = 0.05,
                         rho: float = 0.002) -> MomentModel:
    """Moment estimates for a weak, loosely localized eavesdropper:
    identical small means on both links and a scaled-identity
    second-moment spread."""
    xi = 0.01 * (1.0 + 1.0j) * np.ones(n, dtype=complex)
    om = np.outer(xi, xi.conj()) + rho * np.eye(n)
    return MomentModel(xi_a=xi, xi_b=xi.copy(), omega_a=om,
                       omega_b=om.copy(), tau_1a=tau, tau_1b=tau,
                       tau_2a=tau, tau_2b=tau, epsilon=epsilon)


# -- result tables -----------------------------------------------------------


def _fmt_sweep(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass
class ResultTable:
    """Long-format results: one (experiment, method, sweep, trial,
    metric, value) row per measurement."""

    records: list = field(default_factory=list)

    def append(self, experiment, method, sweep, trial, metric, value):
        self.records.append((str(experiment), str(method), sweep,
                             int(trial), str(metric), float(value)))

    def extend(self, other: "ResultTable"):
        self.records.extend(other.records)

    def values(self, method=None, metric=None, sweep=None):
        out = []
        for rec in self.records:
            if method is not None and rec[1] != method:
                continue
            if metric is not None and rec[4] != metric:
                continue
            if sweep is not None and float(rec[2]) != float(sweep):
                continue
            out.append(rec[5])
        return np.array(out)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(CSV_HEADER)
            for exp, method, sweep, trial, metric, value in self.records:
                wr.writerow([exp, method, _fmt_sweep(sweep), trial,
                             metric, repr(value)])

    def to_json(self, path):
        rows = [{"experiment": exp, "method": method,
                 "sweep": float(sweep), "trial": trial,
                 "metric": metric, "value": value}
                for exp, method, sweep, trial, metric, value
                in self.records]
        with open(path, "w", newline="") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write(self, path, fmt="csv"):
        if fmt == "json":
            self.to_json(path)
        else:
            self.to_csv(path)


# -- per-kind drivers --------------------------------------------------------


def _make_params(cfg: ExperimentConfig, n: int, p_lin: float,
                 zeta: float) -> SystemParams:
    return SystemParams(n_tx=n, zeta_a=zeta, zeta_b=zeta,
                        p_a=p_lin, p_b=p_lin)


def _trial_channels(cfg: ExperimentConfig, n: int, trial: int,
                    p: SystemParams) -> ChannelSet:
    # channel draws keyed by (seed, N, trial) only, so the same fading
    # realization is reused across every power and zeta grid point
    return sample_channels([cfg.rng_seed, n, trial], p)


def _solve_fd_dc(ch: ChannelSet, p: SystemParams):
    rp = reduction.reduce(ch, p)
    w_pair, trace = adc_solve(rp, default_init(rp))
    pair = reduction.lift(w_pair, rp)
    return pair, sum_secrecy_rate(pair, ch, p), trace


def _run_convergence(cfg: ExperimentConfig) -> ResultTable:
    table = ResultTable()
    p = _make_params(cfg, cfg.n_tx, db_to_linear(cfg.power_db[0]),
                     cfg.zetas[0])
    for t in range(cfg.trials):
        ch = _trial_channels(cfg, cfg.n_tx, t, p)
        _, _, trace = _solve_fd_dc(ch, p)
        for k in range(len(trace.iters)):
            it = trace.iters[k]
            table.append(cfg.kind, "fd-dc", it, t, "ssr",
                         trace.objective[k])
            table.append(cfg.kind, "fd-dc", it, t, "R_a", trace.r_a[k])
            table.append(cfg.kind, "fd-dc", it, t, "R_b", trace.r_b[k])
            table.append(cfg.kind, "fd-dc", it, t, "R_e", trace.r_e[k])
    return table


def _run_sweep(cfg: ExperimentConfig) -> ResultTable:
    table = ResultTable()
    if cfg.kind == "sweep_power":
        grid = [(pdb, cfg.n_tx) for pdb in cfg.power_db]
    else:
        grid = [(cfg.power_db[0], n) for n in cfg.antennas]
    for pdb, n in grid:
        sweep = pdb if cfg.kind == "sweep_power" else n
        p_lin = db_to_linear(pdb)
        for zi, zeta in enumerate(cfg.zetas):
            suffix = "" if len(cfg.zetas) == 1 else f"/z{zeta:g}"
            p = _make_params(cfg, n, p_lin, zeta)
            for t in range(cfg.trials):
                ch = _trial_channels(cfg, n, t, p)
                jobs = [("fd-dc" + suffix,
                         lambda: _solve_fd_dc(ch, p)[1])]
                if zi == 0:
                    # the baselines do not depend on zeta; emit once
                    jobs.append(("fd-zf",
                                 lambda: baseline_fd_zf(ch, p)[1]))
                    jobs.append(("hd-dc", lambda: baseline_hd(ch, p)))
                for method, solve in jobs:
                    try:
                        ssr = solve()
                    except FdsecError as exc:
                        sys.stderr.write(
                            f"{cfg.kind} {sweep} trial {t} {method}: "
                            f"{exc}\n")
                        table.append(cfg.kind, method, sweep, t,
                                     "failed", 1.0)
                        continue
                    table.append(cfg.kind, method, sweep, t, "ssr", ssr)
    return table


def _zeroed_taus(mm: MomentModel) -> MomentModel:
    return dataclasses.replace(mm, tau_1a=0.0, tau_1b=0.0,
                               tau_2a=0.0, tau_2b=0.0)


def _nominal_design(ch: ChannelSet, p: SystemParams, mm: MomentModel):
    # plug the mean estimate in as if it were the true Eve channel and
    # run the perfect-CSI solver; r_s is the rate the design believes in
    ch_xi = dataclasses.replace(ch, h_ae=mm.xi_a.copy(),
                                h_be=mm.xi_b.copy())
    pair, ssr, _ = _solve_fd_dc(ch_xi, p)
    return pair, ssr


def _robust_designs(cfg: ExperimentConfig, ch: ChannelSet,
                    p: SystemParams):
    """Which designs to stress, and under which sampler, per kind."""
    mm = cfg.moment
    aware = any(t > 0 for t in (mm.tau_1a, mm.tau_1b, mm.tau_2a,
                                mm.tau_2b))
    if cfg.kind == "robust_uncertain_moment" or (
            cfg.kind == "outage_per_channel" and aware):
        jobs = [("robust-dc/t0",
                 lambda: robust_dc_solve(ch, p, _zeroed_taus(mm))),
                ("robust-dc/taware",
                 lambda: robust_dc_solve(ch, p, mm))]
        perturbed = True
    else:
        jobs = [("fd-dc", lambda: _nominal_design(ch, p, mm)),
                ("robust-dc", lambda: robust_dc_solve(ch, p, mm))]
        perturbed = False
    return jobs, perturbed


def _run_robust_kind(cfg: ExperimentConfig) -> ResultTable:
    if cfg.moment is None:
        raise ConfigError(f"{cfg.kind} needs a 'moment' section")
    if cfg.moment.n_tx != cfg.n_tx:
        raise ConfigError("moment model size does not match n_tx")
    table = ResultTable()
    p = _make_params(cfg, cfg.n_tx, db_to_linear(cfg.power_db[0]),
                     cfg.zetas[0])
    for t in range(cfg.trials):
        ch = _trial_channels(cfg, cfg.n_tx, t, p)
        eval_seed = cfg.rng_seed * 1000003 + t
        jobs, perturbed = _robust_designs(cfg, ch, p)
        for method, solve in jobs:
            try:
                result = solve()
            except (InfeasibleError, FdsecError) as exc:
                sys.stderr.write(
                    f"{cfg.kind} trial {t} {method}: {exc}\n")
                table.append(cfg.kind, method, 0.0, t, "failed", 1.0)
                continue
            report = verify_outage(result, ch, p, cfg.draws, cfg.moment,
                                   rng_seed=eval_seed,
                                   perturbed=perturbed)
            if cfg.kind != "outage_per_channel":
                for fam in sorted(report.rates):
                    table.append(cfg.kind, method, 0.0, t,
                                 f"outage_{fam}", report.rates[fam])
            table.append(cfg.kind, method, 0.0, t, "worst_outage",
                         max(report.rates.values()))
            table.append(cfg.kind, method, 0.0, t, "r_s", report.r_s)
            if t == 0 and cfg.out_dir:
                slug = method.replace("/", "-")
                report.hist_to_csv(os.path.join(
                    cfg.out_dir, f"hist_{slug}.csv"))
    return table


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    if cfg.kind == "convergence":
        return _run_convergence(cfg)
    if cfg.kind in ("sweep_power", "sweep_antennas"):
        return _run_sweep(cfg)
    return _run_robust_kind(cfg)


# -- CLI ---------------------------------------------------------------------


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") \
            from None


def _build_experiment(args, kind) -> ExperimentConfig:
    raw = _load_json(args.config) if args.config else {}
    raw = dict(raw)
    raw["kind"] = kind
    if getattr(args, "seed", None) is not None:
        raw["rng_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        raw["trials"] = args.trials
    raw["out_dir"] = args.out
    if kind in ("robust_exact_moment", "robust_uncertain_moment",
                "outage_per_channel") and "moment" not in raw:
        tau = 0.05 if kind == "robust_uncertain_moment" else 0.0
        n = int(raw.get("n_tx", 4))
        raw["moment"] = moment_model_to_config(
            default_moment_model(n, tau=tau))
    return experiment_from_config(raw)


def _instance_from_config(args):
    """(params, channels, moment-or-None) for the one-shot commands."""
    raw = _load_json(args.config) if args.config else {}
    if "params" in raw:
        p = params_from_config(raw["params"])
    else:
        p_lin = db_to_linear(float(raw.get("power_db", [5.0])[0])
                             if isinstance(raw.get("power_db"), list)
                             else float(raw.get("power_db", 5.0)))
        zeta = float(raw.get("zetas", [0.01])[0]) \
            if isinstance(raw.get("zetas"), list) \
            else float(raw.get("zetas", 0.01))
        p = SystemParams(n_tx=int(raw.get("n_tx", 4)), zeta_a=zeta,
                         zeta_b=zeta, p_a=p_lin, p_b=p_lin)
    seed = args.seed if args.seed is not None \
        else int(raw.get("rng_seed", 1))
    if seed < 0:
        raise ConfigError("rng_seed must be nonnegative")
    if "channels" in raw:
        ch = channels_from_config(raw["channels"])
        if ch.n_tx != p.n_tx:
            raise ConfigError("channel entries do not match n_tx")
    else:
        ch = sample_channels([seed, p.n_tx, 0], p)
    mm = None
    if "moment" in raw:
        mm = moment_model_from_config(raw["moment"])
    return p, ch, mm


def _out_path(args, stem):
    ext = "json" if args.format == "json" else "csv"
    return os.path.join(args.out, f"{stem}.{ext}")


def _cmd_solve(args) -> int:
    p, ch, _ = _instance_from_config(args)
    pair, ssr, trace = _solve_fd_dc(ch, p)
    table = ResultTable()
    table.append("solve", "fd-dc", 0.0, 0, "ssr", ssr)
    table.append("solve", "fd-dc", 0.0, 0, "R_a", trace.r_a[-1])
    table.append("solve", "fd-dc", 0.0, 0, "R_b", trace.r_b[-1])
    table.append("solve", "fd-dc", 0.0, 0, "R_e", trace.r_e[-1])
    table.append("solve", "fd-dc", 0.0, 0, "iterations",
                 float(len(trace.iters)))
    table.append("solve", "fd-dc", 0.0, 0, "stationarity",
                 trace.stationarity)
    path = _out_path(args, "solve")
    table.write(path, args.format)
    trace_path = os.path.join(args.out, "solve_trace.csv")
    trace.to_csv(trace_path)
    print(f"ssr {ssr:.6f} bit/s/Hz in {len(trace.iters)} iterations")
    print(f"wrote {path}")
    print(f"wrote {trace_path}")
    return 0


def _cmd_robust_solve(args) -> int:
    p, ch, mm = _instance_from_config(args)
    if mm is None:
        mm = default_moment_model(p.n_tx)
    result = robust_dc_solve(ch, p, mm)
    table = ResultTable()
    table.append("robust_solve", "robust-dc", 0.0, 0, "r_s", result.r_s)
    table.append("robust_solve", "robust-dc", 0.0, 0, "iterations",
                 float(len(result.dc_trace)))
    table.append("robust_solve", "robust-dc", 0.0, 0, "mu",
                 result.variables.mu)
    table.append("robust_solve", "robust-dc", 0.0, 0, "nu_e",
                 result.variables.nu_e)
    path = _out_path(args, "robust_solution")
    table.write(path, args.format)
    trace_path = os.path.join(args.out, "robust_trace.csv")
    with open(trace_path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["iter", "objective"])
        for k, val in enumerate(result.dc_trace):
            wr.writerow([k, repr(float(val))])
    print(f"guaranteed rate {result.r_s:.6f} bit/s/Hz "
          f"({len(result.dc_trace)} accepted iterates)")
    print(f"wrote {path}")
    print(f"wrote {trace_path}")
    return 0


def _cmd_experiment(args, kind) -> int:
    cfg = _build_experiment(args, kind)
    table = run_experiment(cfg)
    path = _out_path(args, cfg.kind)
    table.write(path, args.format)
    print(f"wrote {path} ({len(table.records)} rows)")
    return 0


def _cmd_gen_config(args) -> int:
    n = 4
    cfg = {
        "kind": "sweep_power",
        "n_tx": n,
        "power_db": [5.0],
        "antennas": [n],
        "zetas": [0.01],
        "trials": 200,
        "rng_seed": args.seed if args.seed is not None else 1,
        "draws": 100000,
        "moment": moment_model_to_config(default_moment_model(n)),
    }
    path = os.path.join(args.out, "config.json")
    with open(path, "w", newline="") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


def _add_common(sub):
    sub.add_argument("--config", default=None,
                     help="JSON config file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the RNG seed")
    sub.add_argument("--out", default=".",
                     help="output directory")
    sub.add_argument("--trials", type=int, default=None,
                     help="override the trial count")
    sub.add_argument("--format", choices=("csv", "json"),
                     default="csv", help="table format")


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdsec",
        description="secrecy-rate designs for bidirectional full-duplex "
                    "links")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "convergence", "sweep-power", "sweep-antennas",
                 "robust-solve", "robust-eval", "gen-config"):
        _add_common(subs.add_parser(name))
    return parser


def cli_main(argv=None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "robust-solve":
            return _cmd_robust_solve(args)
        if args.command == "gen-config":
            return _cmd_gen_config(args)
        if args.command == "convergence":
            return _cmd_experiment(args, "convergence")
        if args.command == "sweep-power":
            return _cmd_experiment(args, "sweep_power")
        if args.command == "sweep-antennas":
            return _cmd_experiment(args, "sweep_antennas")
        if args.command == "robust-eval":
            raw = _load_json(args.config) if args.config else {}
            kind = raw.get("kind", "robust_exact_moment")
            if kind not in ("robust_exact_moment",
                            "robust_uncertain_moment",
                            "outage_per_channel"):
                raise ConfigError(
                    f"robust-eval cannot run kind {kind!r}")
            return _cmd_experiment(args, kind)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except InfeasibleError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return 3


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
