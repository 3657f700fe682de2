"""Worst-case secrecy design under moment-ambiguous eavesdropper statistics.

The eavesdropper channel is known only through estimated first and
second moments with given uncertainty radii. The design problem caps
the probability (over any distribution matching those moments up to the
radii) that the Eve SNR exceeds a slack variable nu_e, and maximizes
R_a + R_b - log2(1 + nu_e). A sufficient (conservative) reformulation
turns the chance constraint into two block LMIs coupled through dual
blocks Gamma_i, Phi_i, scalars alpha_i, and a scale mu.

The remaining nonconvexity is a difference of concave logs:
phi1 - phi2 with both parts concave. phi2's linearization at an anchor
over-estimates it, so maximizing phi1 - linearized-phi2 under the LMI
set is a conservative inner step; iterating the linearization yields a
monotone objective trace. All rate-like quantities are base 2 at this
interface.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from ._num import LN2, herm, psd_clip, qform, rng_from
from .conic import ConicSession, ProblemBuilder
from .errors import ConfigError, GuardError, InfeasibleError, ShapeError
from .model import (ChannelSet, CovariancePair, SystemParams, _mat_from_cfg,
                    _mat_to_cfg, _vec_from_cfg, _vec_to_cfg, cvec)
from .reduction import lift, reduce
from . import adc

FAMILIES = ("gaussian", "binary", "uniform", "laplace")
_FAMILY_SEED = {"gaussian": 11, "binary": 13, "uniform": 17, "laplace": 19}


@dataclass(frozen=True)
class MomentModel:
    """Mean/second-moment estimates of both Eve channels with radii.

    tau_*1 bounds the mean error in Euclidean norm, tau_*2 the
    second-moment error in spectral norm; epsilon is the tolerated
    outage probability.
    """

    xi_a: np.ndarray
    xi_b: np.ndarray
    omega_a: np.ndarray
    omega_b: np.ndarray
    tau_1a: float = 0.0
    tau_1b: float = 0.0
    tau_2a: float = 0.0
    tau_2b: float = 0.0
    epsilon: float = 0.05

    def __post_init__(self):
        xi_a = np.asarray(self.xi_a, dtype=complex).ravel()
        xi_b = np.asarray(self.xi_b, dtype=complex).ravel()
        n = xi_a.size
        object.__setattr__(self, "xi_a", xi_a)
        object.__setattr__(self, "xi_b", cvec(xi_b, n, "xi_b"))
        for name in ("omega_a", "omega_b"):
            om = np.asarray(getattr(self, name), dtype=complex)
            if om.shape != (n, n):
                raise ShapeError(name, (n, n), om.shape)
            object.__setattr__(self, name, herm(om))
        for name, xi, om in (("a", self.xi_a, self.omega_a),
                             ("b", self.xi_b, self.omega_b)):
            gap = np.linalg.eigvalsh(om - np.outer(xi, xi.conj()))[0]
            if gap < -1e-9:
                raise ValueError(
                    f"omega_{name} does not dominate its mean outer product "
                    f"(min eigenvalue {gap:.3e})")
        for t in (self.tau_1a, self.tau_1b, self.tau_2a, self.tau_2b):
            if t < 0:
                raise ValueError("uncertainty radii must be nonnegative")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def n_tx(self):
        return self.xi_a.size


@dataclass(frozen=True)
class AmbiguityConstants:
    """Constant blocks pairing with the dual variables in the budget."""

    psi_a: np.ndarray
    psi_b: np.ndarray
    xi_mat_a: np.ndarray
    xi_mat_b: np.ndarray


def build_ambiguity(mm: MomentModel) -> AmbiguityConstants:
    n = mm.n_tx

    def psi(tau1, xi):
        m = np.zeros((n + 1, n + 1), dtype=complex)
        m[:n, :n] = tau1 * np.eye(n)
        m[:n, n] = -xi
        m[n, :n] = -xi.conj()
        m[n, n] = tau1
        return m

    def ximat(tau2, om):
        m = np.zeros((2 * n, 2 * n), dtype=complex)
        m[:n, :n] = tau2 * np.eye(n)
        m[:n, n:] = -om
        m[n:, :n] = -om
        m[n:, n:] = tau2 * np.eye(n)
        return m

    return AmbiguityConstants(
        psi_a=psi(mm.tau_1a, mm.xi_a),
        psi_b=psi(mm.tau_1b, mm.xi_b),
        xi_mat_a=ximat(mm.tau_2a, mm.omega_a),
        xi_mat_b=ximat(mm.tau_2b, mm.omega_b),
    )


@dataclass(frozen=True)
class RobustVariables:
    """One feasible point of the conservative reformulation."""

    q_a: np.ndarray
    q_b: np.ndarray
    nu_e: float
    mu: float
    alpha_a: float
    alpha_b: float
    gamma_blk_a: np.ndarray
    gamma_blk_b: np.ndarray
    phi_blk_a: np.ndarray
    phi_blk_b: np.ndarray

    @property
    def n_tx(self):
        return self.q_a.shape[0]

    def _gamma_parts(self, blk):
        n = self.n_tx
        return blk[:n, :n], blk[:n, n], float(np.real(blk[n, n]))

    def _phi_parts(self, blk):
        n = self.n_tx
        return blk[:n, :n], blk[:n, n:], blk[n:, n:]

    @property
    def lam_a(self):
        return self._gamma_parts(self.gamma_blk_a)[1]

    @property
    def lam_b(self):
        return self._gamma_parts(self.gamma_blk_b)[1]

    @property
    def b_mat_a(self):
        return self._phi_parts(self.phi_blk_a)[1]

    @property
    def b_mat_b(self):
        return self._phi_parts(self.phi_blk_b)[1]


@dataclass
class RobustResult:
    variables: RobustVariables
    r_s: float
    dc_trace: list


# -- DC objective pieces ----------------------------------------------


def _sa(q_a, ch: ChannelSet, p: SystemParams) -> float:
    return p.sigma_a2 + p.zeta_a * qform(ch.h_aa, q_a)


def _sb(q_b, ch: ChannelSet, p: SystemParams) -> float:
    return p.sigma_b2 + p.zeta_b * qform(ch.h_bb, q_b)


def phi1(q_a, q_b, ch: ChannelSet, p: SystemParams) -> float:
    """Concave part: both receive-side log terms, base 2."""
    e1 = _sa(q_a, ch, p) + qform(ch.h_ba, q_b)
    e2 = _sb(q_b, ch, p) + qform(ch.h_ab, q_a)
    return (np.log(e1) + np.log(e2)) / LN2


def phi2(q_a, q_b, nu_e, ch: ChannelSet, p: SystemParams) -> float:
    """Subtracted concave part: slack log plus both SI-floor logs, base 2."""
    if nu_e < 0:
        raise ValueError("nu_e must be nonnegative")
    return (np.log1p(nu_e) + np.log(_sa(q_a, ch, p))
            + np.log(_sb(q_b, ch, p))) / LN2


@dataclass(frozen=True)
class Phi2Linearization:
    """First-order expansion of phi2 at an anchor, base 2.

    value() is exact at the anchor and >= phi2 everywhere (phi2 is
    concave), which makes phi1 - value() a global lower bound on
    phi1 - phi2.
    """

    const: float
    g_qa: np.ndarray
    g_qb: np.ndarray
    g_nu: float

    def value(self, q_a, q_b, nu_e) -> float:
        return (self.const
                + float(np.real(np.sum(np.conj(self.g_qa) * q_a)))
                + float(np.real(np.sum(np.conj(self.g_qb) * q_b)))
                + self.g_nu * float(nu_e))


def linearize_phi2(anchor, ch: ChannelSet, p: SystemParams) -> Phi2Linearization:
    q_a_k, q_b_k, nu_k = anchor
    sa = _sa(q_a_k, ch, p)
    sb = _sb(q_b_k, ch, p)
    g_qa = herm(p.zeta_a * np.outer(ch.h_aa, ch.h_aa.conj()) / (sa * LN2))
    g_qb = herm(p.zeta_b * np.outer(ch.h_bb, ch.h_bb.conj()) / (sb * LN2))
    g_nu = 1.0 / ((1.0 + nu_k) * LN2)
    at_anchor = phi2(q_a_k, q_b_k, nu_k, ch, p)
    const = (at_anchor
             - float(np.real(np.sum(np.conj(g_qa) * q_a_k)))
             - float(np.real(np.sum(np.conj(g_qb) * q_b_k)))
             - g_nu * float(nu_k))
    return Phi2Linearization(const, g_qa, g_qb, g_nu)


# -- conservative program assembly ------------------------------------


def _build_theorem_problem(ch: ChannelSet, p: SystemParams, mm: MomentModel):
    """Conic encoding of the conservative design with a placeholder linear term."""
    n = ch.n_tx
    b = ProblemBuilder()
    b.hermitian("q_a", n)
    b.hermitian("q_b", n)
    b.scalar("nu_e", nonneg=True)
    b.scalar("mu", nonneg=True)
    b.scalar("alpha_a")
    b.scalar("alpha_b")
    # A zero radius makes the matching covering block free of charge, so
    # any lambda (resp. bmat) is admissible without it; declaring the
    # block anyway would leave a zero-cost recession ray that trips
    # interior-point certificates. Declare each block only when its
    # radius actually prices it.
    for side, tau1, tau2 in (("a", mm.tau_1a, mm.tau_2a),
                             ("b", mm.tau_1b, mm.tau_2b)):
        b.cvector(f"lam_{side}", n)
        b.hermitian(f"bmat_{side}", n)
        if tau1 > 0:
            b.hermitian(f"s_{side}", n)
            b.scalar(f"theta_{side}")
        if tau2 > 0:
            b.hermitian(f"amat_{side}", n)
            b.hermitian(f"cmat_{side}", n)

    eye = np.eye(n)
    # receive-side log terms of phi1 (weights give base 2)
    b.add_log(b.affine(p.sigma_a2, [
        ("q_a", p.zeta_a * np.outer(ch.h_aa, ch.h_aa.conj())),
        ("q_b", np.outer(ch.h_ba, ch.h_ba.conj())),
    ]), weight=1.0 / LN2)
    b.add_log(b.affine(p.sigma_b2, [
        ("q_b", p.zeta_b * np.outer(ch.h_bb, ch.h_bb.conj())),
        ("q_a", np.outer(ch.h_ab, ch.h_ab.conj())),
    ]), weight=1.0 / LN2)

    # moment budget: sum of dual pairings + alphas <= eps * mu
    terms = [("mu", -mm.epsilon), ("alpha_a", 1.0), ("alpha_b", 1.0)]
    for side, tau1, tau2, xi, om in (
            ("a", mm.tau_1a, mm.tau_2a, mm.xi_a, mm.omega_a),
            ("b", mm.tau_1b, mm.tau_2b, mm.xi_b, mm.omega_b)):
        terms += [
            (f"lam_{side}", -2.0 * xi),
            (f"bmat_{side}", -2.0 * om),
        ]
        if tau1 > 0:
            terms += [(f"s_{side}", tau1 * eye), (f"theta_{side}", tau1)]
        if tau2 > 0:
            terms += [(f"amat_{side}", tau2 * eye),
                      (f"cmat_{side}", tau2 * eye)]
    b.add_ineq(b.affine(0.0, terms))

    # only the sum of the alphas enters any constraint; pin the
    # difference so the solvers do not see a free direction
    b.add_ineq(b.affine(0.0, [("alpha_a", 1.0), ("alpha_b", -1.0)]))
    b.add_ineq(b.affine(0.0, [("alpha_a", -1.0), ("alpha_b", 1.0)]))

    b.add_ineq(b.affine(-p.p_a, [("q_a", eye)]))
    b.add_ineq(b.affine(-p.p_b, [("q_b", eye)]))

    size = 2 * n + 1
    l1 = b.lmi("coupling_hom", size, "nsd")
    l1.place("bmat_a", 0, 0, coeff=2.0)
    l1.place("bmat_b", n, n, coeff=2.0)
    l1.place("lam_a", 0, 2 * n)
    l1.place("lam_a", 2 * n, 0, adjoint=True)
    l1.place("lam_b", n, 2 * n)
    l1.place("lam_b", 2 * n, n, adjoint=True)
    l1.place_scalar("alpha_a", 2 * n, 2 * n, coeff=-1.0)
    l1.place_scalar("alpha_b", 2 * n, 2 * n, coeff=-1.0)

    l2 = b.lmi("coupling_srm", size, "nsd")
    l2.place("bmat_a", 0, 0, coeff=2.0)
    l2.place("q_a", 0, 0)
    l2.place("bmat_b", n, n, coeff=2.0)
    l2.place("q_b", n, n)
    l2.place("lam_a", 0, 2 * n)
    l2.place("lam_a", 2 * n, 0, adjoint=True)
    l2.place("lam_b", n, 2 * n)
    l2.place("lam_b", 2 * n, n, adjoint=True)
    l2.place_scalar("mu", 2 * n, 2 * n)
    l2.place_scalar("alpha_a", 2 * n, 2 * n, coeff=-1.0)
    l2.place_scalar("alpha_b", 2 * n, 2 * n, coeff=-1.0)
    l2.place_scalar("nu_e", 2 * n, 2 * n, coeff=-p.sigma_e2)

    for side, tau1, tau2 in (("a", mm.tau_1a, mm.tau_2a),
                             ("b", mm.tau_1b, mm.tau_2b)):
        if tau1 > 0:
            g = b.lmi(f"gamma_{side}", n + 1, "psd")
            g.place(f"s_{side}", 0, 0)
            g.place(f"lam_{side}", 0, n)
            g.place(f"lam_{side}", n, 0, adjoint=True)
            g.place_scalar(f"theta_{side}", n, n)
        if tau2 > 0:
            f = b.lmi(f"phi_{side}", 2 * n, "psd")
            f.place(f"amat_{side}", 0, 0)
            f.place(f"bmat_{side}", 0, n)
            f.place(f"bmat_{side}", n, 0)
            f.place(f"cmat_{side}", n, n)
        b.lmi(f"q_{side}_psd", n, "psd").place(f"q_{side}", 0, 0)

    return b


def _linear_from_phi2(builder: ProblemBuilder, lin: Phi2Linearization):
    """Conic linear objective -linearized_phi2 (the log terms carry phi1)."""
    return builder.affine(-lin.const, [
        ("q_a", -lin.g_qa),
        ("q_b", -lin.g_qb),
        ("nu_e", -lin.g_nu),
    ])


def _vars_from_assignment(asg: dict, n: int) -> RobustVariables:
    # at zero radius the covering blocks are not solved for; fill in the
    # cheapest certificate (it costs nothing in the budget there)
    def gamma_blk(side):
        lam = np.asarray(asg[f"lam_{side}"]).ravel()
        if f"s_{side}" in asg:
            s_part = asg[f"s_{side}"]
            theta = asg[f"theta_{side}"]
        else:
            s_part = np.linalg.norm(lam) * np.eye(n)
            theta = np.linalg.norm(lam)
        blk = np.zeros((n + 1, n + 1), dtype=complex)
        blk[:n, :n] = s_part
        blk[:n, n] = lam
        blk[n, :n] = lam.conj()
        blk[n, n] = theta
        return blk

    def phi_blk(side):
        b_part = asg[f"bmat_{side}"]
        if f"amat_{side}" in asg:
            a_part = asg[f"amat_{side}"]
            c_part = asg[f"cmat_{side}"]
        else:
            spec = np.linalg.norm(b_part, 2)
            a_part = spec * np.eye(n)
            c_part = a_part
        blk = np.zeros((2 * n, 2 * n), dtype=complex)
        blk[:n, :n] = a_part
        blk[:n, n:] = b_part
        blk[n:, :n] = b_part
        blk[n:, n:] = c_part
        return blk

    return RobustVariables(
        q_a=psd_clip(asg["q_a"]),
        q_b=psd_clip(asg["q_b"]),
        nu_e=max(0.0, float(asg["nu_e"])),
        mu=float(asg["mu"]),
        alpha_a=float(asg["alpha_a"]),
        alpha_b=float(asg["alpha_b"]),
        gamma_blk_a=gamma_blk("a"),
        gamma_blk_b=gamma_blk("b"),
        phi_blk_a=phi_blk("a"),
        phi_blk_b=phi_blk("b"),
    )


def _certificate_budget(vars: RobustVariables, mm: MomentModel) -> float:
    """Ambiguity budget residual: pairing terms plus alphas minus eps * mu."""
    amb = build_ambiguity(mm)
    total = 0.0
    for gamma, phi, psi, xim, alpha in (
            (vars.gamma_blk_a, vars.phi_blk_a, amb.psi_a, amb.xi_mat_a, vars.alpha_a),
            (vars.gamma_blk_b, vars.phi_blk_b, amb.psi_b, amb.xi_mat_b, vars.alpha_b)):
        total += float(np.real(np.trace(gamma @ psi)))
        total += float(np.real(np.trace(phi @ xim)))
        total += alpha
    return total - mm.epsilon * vars.mu


def audit_theorem1(vars: RobustVariables, p: SystemParams, mm: MomentModel) -> dict:
    """Residuals of every constraint of the conservative program.

    Assembled directly from the variable blocks, bypassing the conic
    encoding, so it doubles as an independent check of that encoding.
    """
    n = vars.n_tx
    budget = _certificate_budget(vars, mm)

    def coupling(include_qnu):
        m = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        m[:n, :n] = 2.0 * vars.b_mat_a
        m[n:2 * n, n:2 * n] = 2.0 * vars.b_mat_b
        m[:n, 2 * n] = vars.lam_a
        m[2 * n, :n] = vars.lam_a.conj()
        m[n:2 * n, 2 * n] = vars.lam_b
        m[2 * n, n:2 * n] = vars.lam_b.conj()
        m[2 * n, 2 * n] = -vars.alpha_a - vars.alpha_b
        if include_qnu:
            m[:n, :n] += vars.q_a
            m[n:2 * n, n:2 * n] += vars.q_b
            m[2 * n, 2 * n] += vars.mu - p.sigma_e2 * vars.nu_e
        return herm(m)

    eigmax = lambda m: float(np.linalg.eigvalsh(m)[-1])
    eigmin = lambda m: float(np.linalg.eigvalsh(m)[0])
    return {
        "budget": budget,
        "lmi_hom_max_eig": eigmax(coupling(False)),
        "lmi_srm_max_eig": eigmax(coupling(True)),
        "gamma_a_min_eig": eigmin(herm(vars.gamma_blk_a)),
        "gamma_b_min_eig": eigmin(herm(vars.gamma_blk_b)),
        "phi_a_min_eig": eigmin(herm(vars.phi_blk_a)),
        "phi_b_min_eig": eigmin(herm(vars.phi_blk_b)),
        "q_a_min_eig": eigmin(herm(vars.q_a)),
        "q_b_min_eig": eigmin(herm(vars.q_b)),
        "power_a": float(np.real(np.trace(vars.q_a))) - p.p_a,
        "power_b": float(np.real(np.trace(vars.q_b))) - p.p_b,
        "nu_e": vars.nu_e,
        "mu": vars.mu,
    }


def mu_positivity_guard(vars: RobustVariables, mm: MomentModel) -> RobustVariables:
    """Consistency check on accepted solver output; failures signal a bug.

    The certificate scale is tied to mu, so the alpha sum is only
    meaningful against eps * mu together with the pairing terms; the
    budget is re-derived from the stored blocks rather than trusting the
    conic solve that produced them.
    """
    if vars.mu < 1e-10:
        raise GuardError(f"mu = {vars.mu!r} is not strictly positive")
    resid = _certificate_budget(vars, mm)
    if resid > 1e-8:
        raise GuardError(
            f"certificate budget residual {resid!r} at epsilon = "
            f"{mm.epsilon!r}")
    return vars


def solve_robust_subproblem(anchor, ch: ChannelSet, p: SystemParams,
                            mm: MomentModel,
                            session: ConicSession | None = None) -> RobustVariables:
    """One inner maximization of phi1 - linearized-phi2 over the LMI set.

    A prebuilt session (from robust_dc_solve) is reused when given;
    otherwise the program is compiled for this call.
    """
    builder = _build_theorem_problem(ch, p, mm)
    lin = linearize_phi2(anchor, ch, p)
    if session is None:
        problem = builder.build()
        session = ConicSession(problem, parametric_linear=True)
    sol = session.solve(linear=_linear_from_phi2(builder, lin))
    if sol.status == "infeasible":
        taus = (mm.tau_1a, mm.tau_2a, mm.tau_1b, mm.tau_2b)
        raise InfeasibleError(
            f"robust design infeasible at epsilon={mm.epsilon!r}, tau={taus!r}")
    return _vars_from_assignment(sol.assignment, ch.n_tx)


def _cold_start(ch: ChannelSet, p: SystemParams, mm: MomentModel):
    """Anchor from the moment-substituted nonrobust solve."""
    ch_xi = replace(ch, h_ae=mm.xi_a, h_be=mm.xi_b)
    rp = reduce(ch_xi, p)
    w_pair, _ = adc.adc_solve(rp, adc.default_init(rp))
    pair = lift(w_pair, rp)
    nu0 = (qform(mm.xi_a, pair.q_a) + qform(mm.xi_b, pair.q_b)) / p.sigma_e2
    return pair.q_a, pair.q_b, float(nu0)


def robust_dc_solve(ch: ChannelSet, p: SystemParams, mm: MomentModel,
                    tol: float = 1e-5, max_iter: int = 50) -> RobustResult:
    """Iterate the phi2 linearization to a stationary conservative design.

    dc_trace records the true objective phi1 - phi2 at each accepted
    iterate; it is monotone nondecreasing up to the inner solver's bound
    gap. The anchor itself (cold start) is not part of the trace since
    it carries no feasibility certificate.
    """
    if mm.n_tx != ch.n_tx:
        raise ShapeError("moment model", f"{ch.n_tx} entries", mm.n_tx)
    builder = _build_theorem_problem(ch, p, mm)
    session = ConicSession(builder.build(), parametric_linear=True)
    anchor = _cold_start(ch, p, mm)
    trace = []
    vars_out = None
    prev = None
    for _ in range(max_iter):
        lin = linearize_phi2(anchor, ch, p)
        sol = session.solve(linear=_linear_from_phi2(builder, lin))
        if sol.status == "infeasible":
            taus = (mm.tau_1a, mm.tau_2a, mm.tau_1b, mm.tau_2b)
            raise InfeasibleError(
                f"robust design infeasible at epsilon={mm.epsilon!r}, tau={taus!r}")
        vars_out = _vars_from_assignment(sol.assignment, ch.n_tx)
        obj = (phi1(vars_out.q_a, vars_out.q_b, ch, p)
               - phi2(vars_out.q_a, vars_out.q_b, vars_out.nu_e, ch, p))
        trace.append(float(obj))
        if prev is not None and obj - prev < tol:
            break
        prev = obj
        anchor = (vars_out.q_a, vars_out.q_b, vars_out.nu_e)
    mu_positivity_guard(vars_out, mm)
    return RobustResult(variables=vars_out, r_s=trace[-1], dc_trace=trace)


# -- ambiguous-channel sampling and outage verification ---------------


def _moment_factor(xi, om):
    c = herm(om - np.outer(xi, xi.conj()))
    evals, evecs = np.linalg.eigh(c)
    if float(evals[0]) < -1e-9:
        raise ValueError(f"second moment deficit: min eigenvalue {evals[0]:.3e}")
    return evecs @ np.diag(np.sqrt(np.maximum(evals, 0.0))) @ evecs.conj().T


def _unit_variance_draws(family: str, rng, count: int, n: int):
    if family == "gaussian":
        return (rng.standard_normal((count, n))
                + 1j * rng.standard_normal((count, n))) / np.sqrt(2.0)
    if family == "binary":
        return rng.choice(np.array([1.0, -1.0, 1j, -1j]), size=(count, n))
    if family == "uniform":
        half = np.sqrt(1.5)
        return (rng.uniform(-half, half, (count, n))
                + 1j * rng.uniform(-half, half, (count, n)))
    if family == "laplace":
        return (rng.laplace(0.0, 0.5, (count, n))
                + 1j * rng.laplace(0.0, 0.5, (count, n)))
    raise ValueError(f"unknown family {family!r}")


def _perturb(xi, om, tau1, tau2):
    if tau1 > 0:
        nrm = float(np.linalg.norm(xi))
        direction = xi / nrm if nrm > 0 else np.eye(xi.size, dtype=complex)[:, 0]
        xi = xi + tau1 * direction
    if tau2 > 0:
        om = om + tau2 * np.eye(xi.size)
    return xi, om


def sample_ambiguous_eve(mm: MomentModel, family: str, rng_seed: int,
                         count: int, perturbed: bool = False):
    """Draw (h_ae, h_be) rows with mean xi and second moment omega.

    With perturbed=True the generating moments are pushed to the edge of
    the uncertainty ball: the mean radially by tau_1, the second moment
    by tau_2 along the identity. The construction keeps the moments
    exact for every family, since each base draw has i.i.d. zero-mean
    unit-variance proper entries.
    """
    if family not in _FAMILY_SEED:
        raise ValueError(f"unknown family {family!r}")
    rng = rng_from(rng_seed, _FAMILY_SEED[family], count)
    out = []
    for xi, om, tau1, tau2 in ((mm.xi_a, mm.omega_a, mm.tau_1a, mm.tau_2a),
                               (mm.xi_b, mm.omega_b, mm.tau_1b, mm.tau_2b)):
        if perturbed:
            xi, om = _perturb(xi, om, tau1, tau2)
        factor = _moment_factor(xi, om)
        z = _unit_variance_draws(family, rng, count, mm.n_tx)
        out.append(xi[None, :] + z @ factor.T)
    return out[0], out[1]


@dataclass
class OutageReport:
    rates: dict
    draw_count: int
    r_s: float
    ssr_samples: dict

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["family", "draw_count", "outage_rate", "r_s"])
            for fam in sorted(self.rates):
                wr.writerow([fam, self.draw_count, repr(self.rates[fam]),
                             repr(self.r_s)])

    def hist_to_csv(self, path, bins: int = 60):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["family", "bin_left", "bin_right", "count"])
            for fam in sorted(self.ssr_samples):
                vals = self.ssr_samples[fam]
                counts, edges = np.histogram(vals, bins=bins)
                for k in range(bins):
                    wr.writerow([fam, repr(float(edges[k])),
                                 repr(float(edges[k + 1])), int(counts[k])])


def verify_outage(result, ch: ChannelSet, p: SystemParams, draws: int,
                  mm: MomentModel, rng_seed: int = 0,
                  families=FAMILIES, perturbed: bool = False) -> OutageReport:
    """Empirical outage of a design against sampled Eve channels.

    `result` is either a RobustResult or a (CovariancePair, r_s) pair,
    so nonrobust designs can be stressed under the same draws. The
    outage event is a draw whose achieved secrecy rate falls strictly
    below r_s; the achieved rate is floored at zero, which changes
    nothing for any positive r_s but keeps r_s = 0 outage-free.
    """
    if isinstance(result, RobustResult):
        q_a, q_b = result.variables.q_a, result.variables.q_b
        r_s = result.r_s
    else:
        pair, r_s = result
        q_a, q_b = pair.q_a, pair.q_b
    r_ab = (np.log1p(qform(ch.h_ba, q_b) / _sa(q_a, ch, p))
            + np.log1p(qform(ch.h_ab, q_a) / _sb(q_b, ch, p))) / LN2
    rates = {}
    samples = {}
    for fam in families:
        ha, hb = sample_ambiguous_eve(mm, fam, rng_seed, draws,
                                      perturbed=perturbed)
        snr = (np.einsum("ij,jk,ik->i", ha.conj(), q_a, ha).real
               + np.einsum("ij,jk,ik->i", hb.conj(), q_b, hb).real) / p.sigma_e2
        ssr = r_ab - np.log1p(snr) / LN2
        rates[fam] = float(np.mean(np.maximum(ssr, 0.0) < r_s))
        samples[fam] = ssr
    return OutageReport(rates=rates, draw_count=int(draws), r_s=float(r_s),
                        ssr_samples=samples)


# -- config plumbing --------------------------------------------------


def moment_model_to_config(mm: MomentModel) -> dict:
    return {
        "xi_a": _vec_to_cfg(mm.xi_a),
        "xi_b": _vec_to_cfg(mm.xi_b),
        "omega_a": _mat_to_cfg(mm.omega_a),
        "omega_b": _mat_to_cfg(mm.omega_b),
        "tau_1a": mm.tau_1a,
        "tau_1b": mm.tau_1b,
        "tau_2a": mm.tau_2a,
        "tau_2b": mm.tau_2b,
        "epsilon": mm.epsilon,
    }


def moment_model_from_config(cfg: dict) -> MomentModel:
    needed = ("xi_a", "xi_b", "omega_a", "omega_b", "epsilon")
    for key in needed:
        if key not in cfg:
            raise ConfigError(f"moment model config missing {key!r}")
    return MomentModel(
        xi_a=_vec_from_cfg(cfg["xi_a"], "xi_a"),
        xi_b=_vec_from_cfg(cfg["xi_b"], "xi_b"),
        omega_a=_mat_from_cfg(cfg["omega_a"], "omega_a"),
        omega_b=_mat_from_cfg(cfg["omega_b"], "omega_b"),
        tau_1a=float(cfg.get("tau_1a", 0.0)),
        tau_1b=float(cfg.get("tau_1b", 0.0)),
        tau_2a=float(cfg.get("tau_2a", 0.0)),
        tau_2b=float(cfg.get("tau_2b", 0.0)),
        epsilon=float(cfg["epsilon"]),
    )
