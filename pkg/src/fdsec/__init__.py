"""Transmit covariance design for bidirectional full-duplex links with
an eavesdropper: alternating rank-one secrecy solvers, a moment-based
distributionally robust variant, and a Monte Carlo harness."""

from .errors import BisectionError, ConfigError, DegenerateChannelError, \
    FdsecError, GuardError, InfeasibleError, ShapeError
from .model import ChannelSet, CovariancePair, SystemParams, rate_a, \
    rate_b, rate_eve, sample_channels, sum_secrecy_rate
from .reduction import ReducedCovariancePair, ReducedProblem, lift, \
    orthonormal_basis, reduce, reduced_objective, reduced_rates
from .adc import AdcTrace, RankOneSolution, SubproblemData, adc_solve, \
    bisect_lambda, default_init, kkt_residuals, solve_dc_subproblem
from .multieve import EvePopulation, MultiEveReduced, SimplexWeights, \
    multieve_adc_solve, multieve_objective, reduce_multieve, \
    solve_multieve_subproblem
from .conic import ConicProblem, ConicSession, ConicSolution, \
    ProblemBuilder, audit
from .robust import MomentModel, OutageReport, RobustResult, \
    robust_dc_solve, sample_ambiguous_eve, verify_outage
from .harness import ExperimentConfig, ResultTable, baseline_fd_zf, \
    baseline_hd, cli_main, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AdcTrace", "BisectionError", "ChannelSet", "ConfigError",
    "ConicProblem", "ConicSession", "ConicSolution", "CovariancePair",
    "DegenerateChannelError", "EvePopulation", "ExperimentConfig",
    "FdsecError", "GuardError", "InfeasibleError", "MomentModel",
    "MultiEveReduced", "OutageReport", "ProblemBuilder",
    "RankOneSolution", "ReducedCovariancePair", "ReducedProblem",
    "ResultTable", "RobustResult", "ShapeError", "SimplexWeights",
    "SubproblemData", "SystemParams", "adc_solve", "audit",
    "baseline_fd_zf", "baseline_hd", "bisect_lambda", "cli_main",
    "default_init", "kkt_residuals", "lift", "multieve_adc_solve",
    "multieve_objective", "orthonormal_basis", "rate_a", "rate_b",
    "rate_eve", "reduce", "reduce_multieve", "reduced_objective",
    "reduced_rates", "robust_dc_solve", "run_experiment",
    "sample_ambiguous_eve", "sample_channels", "solve_dc_subproblem",
    "solve_multieve_subproblem", "sum_secrecy_rate", "verify_outage",
]
