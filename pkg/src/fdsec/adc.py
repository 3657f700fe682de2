"""Alternating convex-surrogate solver for the reduced two-way secrecy design.

Each outer cycle updates one node's covariance with the other frozen.
The update keeps the partner-rate term exact (a single log of a
quadratic form) and linearizes the remaining difference of logs at the
current iterate, producing the subproblem

    maximize  ln(1 + hhat^H W hhat) - tr(M W)
    s.t.      tr(W) <= P,  W >= 0

with M Hermitian PSD. Its maximizer is rank one in semi-closed form:
W = kappa * v v^H with v = (M + lambda I)^{-1} hhat, where lambda is
pinned by a scalar bisection on transmit power. Two cases split on
whether hhat lies in range(M): outside, full power is optimal and
lambda in (0, ||hhat||^2) solves tr(W) = P; inside, the solve restricts
to the range basis and lambda >= 0 enforces complementarity.

Subproblem algebra is in natural log throughout; rates convert to base 2
only at the reporting boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._num import LN2, herm, project_psd_trace_ball, qform
from .errors import BisectionError
from .reduction import (ReducedCovariancePair, ReducedProblem, reduced_objective,
                        reduced_rates, reduced_rates_nat)

RANGE_TOL = 1e-9      # hhat counts as inside range(M) below this residual, relative
RANK_TOL = 1e-12      # relative eigenvalue cutoff for the numerical rank of M
_SMALL_CROSS = 1e-12  # below this the partner carries no power toward the node


@dataclass
class SubproblemData:
    """One node's update subproblem.

    Fields are written for node a's update; the b-side builder fills the
    same container with the roles swapped. hhat_aa / hhat_ae / sigma_hat2
    are the normalized intermediates used to assemble m_mat and are kept
    for audits; fallback marks that the partner's current covariance put
    (numerically) no power on the cross link, in which case the
    normalized scalings are singular and m_mat was assembled from the
    raw-gradient form instead (hhat_aa is zero, sigma_hat2 is NaN).
    """

    hhat_ab: np.ndarray
    m_mat: np.ndarray
    p_budget: float
    hhat_aa: np.ndarray | None = None
    hhat_ae: np.ndarray | None = None
    sigma_hat2: float = float("nan")
    fallback: bool = False

    def __post_init__(self):
        self.hhat_ab = np.asarray(self.hhat_ab, dtype=complex).ravel()
        if float(np.linalg.norm(self.hhat_ab)) <= 0.0:
            raise ValueError("effective target channel is zero")
        m = np.asarray(self.m_mat, dtype=complex)
        dev = float(np.max(np.abs(m - m.conj().T), initial=0.0))
        if dev > 1e-10 * max(1.0, float(np.max(np.abs(m), initial=0.0))):
            raise ValueError(f"m_mat not Hermitian (deviation {dev:.3e})")
        self.m_mat = herm(m)
        if not self.p_budget > 0:
            raise ValueError("p_budget must be positive")


@dataclass
class RankOneSolution:
    """Solution of one subproblem.

    case_tag is "out_of_range" (hhat outside range(M), full power forced)
    or "in_range" (solve in the range basis; f_mat / sigma_mat / x_star
    hold the economy factors and the solution in that basis).
    """

    w_star: np.ndarray
    lambda_star: float
    kappa: float
    case_tag: str
    f_mat: np.ndarray | None = None
    sigma_mat: np.ndarray | None = None
    x_star: np.ndarray | None = None


@dataclass
class AdcTrace:
    """Per-cycle history of the alternating solve."""

    iters: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    f_a: list = field(default_factory=list)
    f_b: list = field(default_factory=list)
    r_a: list = field(default_factory=list)
    r_b: list = field(default_factory=list)
    r_e: list = field(default_factory=list)
    case_a: list = field(default_factory=list)
    case_b: list = field(default_factory=list)
    fallback_a: list = field(default_factory=list)
    fallback_b: list = field(default_factory=list)
    converged: bool = False
    stationarity: float = float("nan")

    def append(self, it, obj, fa, fb, ra, rb, re, ca, cb, fba, fbb):
        self.iters.append(it)
        self.objective.append(obj)
        self.f_a.append(fa)
        self.f_b.append(fb)
        self.r_a.append(ra)
        self.r_b.append(rb)
        self.r_e.append(re)
        self.case_a.append(ca)
        self.case_b.append(cb)
        self.fallback_a.append(fba)
        self.fallback_b.append(fbb)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["iter", "objective", "R_a", "R_b", "R_e"])
            for k in range(len(self.iters)):
                wr.writerow([self.iters[k], repr(self.objective[k]),
                             repr(self.r_a[k]), repr(self.r_b[k]), repr(self.r_e[k])])


def _si_gradient_term(ht_own_si, zeta, sigma2, x_si, cross):
    """-d/dW of the own-rate term, assembled without the normalized scalings.

    Equals the normalized form whenever cross > 0 and stays finite (zero)
    as cross -> 0.
    """
    lo = sigma2 + zeta * x_si
    coeff = zeta * (1.0 / lo - 1.0 / (lo + cross))
    return coeff * np.outer(ht_own_si, ht_own_si.conj())


def build_subproblem_a(w_a_k, w_b_k, rp: ReducedProblem) -> SubproblemData:
    """Subproblem data for node a's update at the anchor (w_a_k, w_b_k)."""
    p = rp.params
    w_a_k = np.asarray(w_a_k, dtype=complex)
    w_b_k = np.asarray(w_b_k, dtype=complex)
    cross = qform(rp.ht_ba, w_b_k)
    den_b = p.sigma_b2 + p.zeta_b * qform(rp.ht_bb, w_b_k)
    hhat_ab = rp.ht_ab / np.sqrt(den_b)
    x_si = qform(rp.ht_aa, w_a_k)
    m_si = _si_gradient_term(rp.ht_aa, p.zeta_a, p.sigma_a2, x_si, cross)
    eve_den = p.sigma_e2 + qform(rp.ht_ae, w_a_k) + qform(rp.ht_be, w_b_k)
    m_eve = np.outer(rp.ht_ae, rp.ht_ae.conj()) / eve_den
    fallback = cross < _SMALL_CROSS
    if fallback:
        hhat_aa = np.zeros_like(rp.ht_aa)
        sigma_hat2 = float("nan")
    else:
        hhat_aa = np.sqrt(p.zeta_a / cross) * rp.ht_aa
        sigma_hat2 = p.sigma_a2 / cross
    hhat_ae = rp.ht_ae / np.sqrt(p.sigma_e2 + qform(rp.ht_be, w_b_k))
    return SubproblemData(
        hhat_ab=hhat_ab,
        m_mat=herm(m_si + m_eve),
        p_budget=p.p_a,
        hhat_aa=hhat_aa,
        hhat_ae=hhat_ae,
        sigma_hat2=sigma_hat2,
        fallback=fallback,
    )


def build_subproblem_b(w_a_next, w_b_k, rp: ReducedProblem) -> SubproblemData:
    """Node b's update at (w_a_next, w_b_k); mirror of build_subproblem_a."""
    p = rp.params
    w_a_next = np.asarray(w_a_next, dtype=complex)
    w_b_k = np.asarray(w_b_k, dtype=complex)
    cross = qform(rp.ht_ab, w_a_next)
    den_a = p.sigma_a2 + p.zeta_a * qform(rp.ht_aa, w_a_next)
    hhat_ba = rp.ht_ba / np.sqrt(den_a)
    x_si = qform(rp.ht_bb, w_b_k)
    m_si = _si_gradient_term(rp.ht_bb, p.zeta_b, p.sigma_b2, x_si, cross)
    eve_den = p.sigma_e2 + qform(rp.ht_ae, w_a_next) + qform(rp.ht_be, w_b_k)
    m_eve = np.outer(rp.ht_be, rp.ht_be.conj()) / eve_den
    fallback = cross < _SMALL_CROSS
    if fallback:
        hhat_bb = np.zeros_like(rp.ht_bb)
        sigma_hat2 = float("nan")
    else:
        hhat_bb = np.sqrt(p.zeta_b / cross) * rp.ht_bb
        sigma_hat2 = p.sigma_b2 / cross
    hhat_be = rp.ht_be / np.sqrt(p.sigma_e2 + qform(rp.ht_ae, w_a_next))
    return SubproblemData(
        hhat_ab=hhat_ba,
        m_mat=herm(m_si + m_eve),
        p_budget=p.p_b,
        hhat_aa=hhat_bb,
        hhat_ae=hhat_be,
        sigma_hat2=sigma_hat2,
        fallback=fallback,
    )


def _eig_split(m):
    evals, evecs = np.linalg.eigh(m)
    evals = np.maximum(evals, 0.0)  # m is PSD; clip eigh round-off
    emax = float(evals[-1]) if evals.size else 0.0
    keep = evals > emax * RANK_TOL if emax > 0 else np.zeros(evals.size, dtype=bool)
    return evals, evecs, keep


def _classify(sp: SubproblemData):
    evals, evecs, keep = _eig_split(sp.m_mat)
    h = sp.hhat_ab
    if keep.any():
        basis = evecs[:, keep]
        resid = h - basis @ (basis.conj().T @ h)
    else:
        resid = h
    out_of_range = float(np.linalg.norm(resid)) > RANGE_TOL * float(np.linalg.norm(h))
    return ("out_of_range" if out_of_range else "in_range"), (evals, evecs, keep)


def _trace_curve(c2, evals, lam):
    """(trace, kappa, t) of the candidate solution at multiplier lam."""
    d = evals + lam
    t = float(np.sum(c2 / d))
    if t <= 1.0:
        return 0.0, 0.0, t
    kappa = (1.0 - 1.0 / t) / t
    return kappa * float(np.sum(c2 / d**2)), kappa, t


def bisect_lambda(sp: SubproblemData, case: str):
    """Pin the power multiplier for the given case; returns (lambda, w).

    Case "out_of_range": tr(W(lambda)) is nonincreasing, diverges as
    lambda -> 0+ and vanishes at ||hhat||^2, so tr = P brackets inside
    (0, ||hhat||^2). Case "in_range": work in the range basis; lambda = 0
    if the unconstrained trace fits the budget, else bisect the same
    curve. Ties resolve toward smaller lambda (more power): the first
    multiplier meeting tolerance is accepted.
    """
    evals, evecs, keep = _eig_split(sp.m_mat)
    h = sp.hhat_ab
    p_budget = sp.p_budget

    if case == "out_of_range":
        c = evecs.conj().T @ h
        c2 = np.abs(c) ** 2
        lift = lambda lam, kappa: kappa * np.outer(evecs @ (c / (evals + lam)),
                                                   (evecs @ (c / (evals + lam))).conj())
        hi = float(np.sum(c2))
        lo = 0.0  # exclusive: trace -> +inf there
        floor_ok = None
    else:
        basis = evecs[:, keep]
        sig = evals[keep]
        c = basis.conj().T @ h
        c2 = np.abs(c) ** 2
        if not keep.any():
            raise BisectionError("in_range case with zero-rank M", {"norm_h": np.linalg.norm(h)})
        lift = None  # assembled by the caller from (f_mat, x_star)
        tr0, kappa0, _ = _trace_curve(c2, sig, 0.0)
        if tr0 <= p_budget * (1.0 + 1e-12):
            w_range = _assemble_in_range(basis, sig, c, 0.0, kappa0)
            return 0.0, w_range
        evals = sig
        hi = float(np.sum(c2))
        lo = 0.0

    tr_hi, _, _ = _trace_curve(c2, evals, hi)
    if tr_hi > p_budget:
        raise BisectionError("upper bracket endpoint still above budget",
                             {"hi": hi, "trace_hi": tr_hi, "budget": p_budget})

    lam = hi
    for step in range(200):
        mid = 0.5 * (lo + hi)
        tr, kappa, _ = _trace_curve(c2, evals, mid)
        if case == "out_of_range":
            # the complementarity residual bounds the objective gap of
            # the accepted step, so solve well past the trace tolerance
            # to keep the outer objective monotone at 1e-9
            if abs(tr - p_budget) <= 1e-12 * p_budget:
                lam = mid
                break
        else:
            if abs(mid * (tr - p_budget)) <= 1e-12 and tr <= p_budget * (1.0 + 1e-8):
                lam = mid
                break
        if tr > p_budget:
            lo = mid
        else:
            hi = mid
    else:
        raise BisectionError("bisection did not meet tolerance in 200 steps",
                             {"lo": lo, "hi": hi, "budget": p_budget, "case": case})

    tr, kappa, _ = _trace_curve(c2, evals, lam)
    if case == "out_of_range":
        w = lift(lam, kappa)
        return lam, herm(w)
    w = _assemble_in_range(basis, evals, c, lam, kappa)
    return lam, w


def _assemble_in_range(basis, sig, c, lam, kappa):
    vf = c / (sig + lam)
    x = kappa * np.outer(vf, vf.conj())
    return herm(basis @ x @ basis.conj().T)


def solve_dc_subproblem(sp: SubproblemData) -> RankOneSolution:
    """Globally maximize ln(1 + hhat^H W hhat) - tr(M W) on the power ball."""
    case, (evals, evecs, keep) = _classify(sp)
    lam, w = bisect_lambda(sp, case)
    if case == "out_of_range":
        c2 = np.abs(evecs.conj().T @ sp.hhat_ab) ** 2
        _, kappa, _ = _trace_curve(c2, evals, lam)
        return RankOneSolution(w_star=w, lambda_star=lam, kappa=kappa, case_tag=case)
    basis = evecs[:, keep]
    sig = evals[keep]
    c = basis.conj().T @ sp.hhat_ab
    _, kappa, _ = _trace_curve(np.abs(c) ** 2, sig, lam)
    vf = c / (sig + lam)
    x_star = kappa * np.outer(vf, vf.conj())
    return RankOneSolution(w_star=w, lambda_star=lam, kappa=kappa, case_tag=case,
                           f_mat=basis, sigma_mat=np.diag(sig), x_star=x_star)


def subproblem_objective(sp: SubproblemData, w) -> float:
    """Natural-log subproblem objective at w."""
    return float(np.log1p(qform(sp.hhat_ab, w)) - np.real(np.trace(sp.m_mat @ w)))


def kkt_residuals(sp: SubproblemData, sol: RankOneSolution) -> dict:
    """First-order optimality residuals of a subproblem solution.

    grad = hhat hhat^H / (1 + hhat^H W hhat) - M is the (natural log)
    objective gradient; at an optimum grad - lambda I is negative
    semidefinite and annihilates W.
    """
    w = sol.w_star
    h = sp.hhat_ab
    grad = np.outer(h, h.conj()) / (1.0 + qform(h, w)) - sp.m_mat
    z = grad - sol.lambda_star * np.eye(w.shape[0])
    ew = np.linalg.eigvalsh(w)
    tr = float(np.real(np.trace(w)))
    return {
        "stationarity": float(np.linalg.norm(z @ w)),
        "dual_feasibility": max(0.0, float(np.linalg.eigvalsh(z)[-1]), -sol.lambda_star),
        "primal_feasibility": max(0.0, tr - sp.p_budget, -float(ew[0])),
        "complementarity": abs(sol.lambda_star * (tr - sp.p_budget)),
    }


def default_init(rp: ReducedProblem) -> ReducedCovariancePair:
    """Isotropic full-power starting point, deterministic."""
    p = rp.params
    return ReducedCovariancePair(
        w_a=(p.p_a / rp.r_a) * np.eye(rp.r_a),
        w_b=(p.p_b / rp.r_b) * np.eye(rp.r_b),
    )


def _objective_gradients_nat(w_a, w_b, rp: ReducedProblem):
    """Gradients of the natural-log design objective w.r.t. both blocks."""
    p = rp.params
    x_a = qform(rp.ht_aa, w_a)
    x_b = qform(rp.ht_bb, w_b)
    cross_ba = qform(rp.ht_ba, w_b)
    cross_ab = qform(rp.ht_ab, w_a)
    sa = p.sigma_a2 + p.zeta_a * x_a
    sb = p.sigma_b2 + p.zeta_b * x_b
    eden = p.sigma_e2 + qform(rp.ht_ae, w_a) + qform(rp.ht_be, w_b)
    out = lambda v: np.outer(v, v.conj())
    g_a = (p.zeta_a * (1.0 / (sa + cross_ba) - 1.0 / sa) * out(rp.ht_aa)
           + out(rp.ht_ab) / (sb + cross_ab)
           - out(rp.ht_ae) / eden)
    g_b = (p.zeta_b * (1.0 / (sb + cross_ab) - 1.0 / sb) * out(rp.ht_bb)
           + out(rp.ht_ba) / (sa + cross_ba)
           - out(rp.ht_be) / eden)
    return herm(g_a), herm(g_b)


def stationarity_residual(w_a, w_b, rp: ReducedProblem) -> float:
    """Projected-gradient fixed-point residual of the base-2 objective."""
    p = rp.params
    g_a, g_b = _objective_gradients_nat(w_a, w_b, rp)
    res_a = np.linalg.norm(project_psd_trace_ball(w_a + g_a / LN2, p.p_a) - w_a)
    res_b = np.linalg.norm(project_psd_trace_ball(w_b + g_b / LN2, p.p_b) - w_b)
    return float(np.hypot(res_a, res_b))


def adc_solve(rp: ReducedProblem, init: ReducedCovariancePair,
              tol: float = 1e-6, max_iter: int = 100):
    """Alternate the two block updates until the objective stalls.

    Stops when a full cycle improves the (base-2) objective by less than
    tol and the projected-gradient residual is below 1e-4, or at
    max_iter. The recorded trace is monotone nondecreasing by
    construction of the surrogates.
    """
    w_a = np.asarray(init.w_a, dtype=complex)
    w_b = np.asarray(init.w_b, dtype=complex)
    trace = AdcTrace()
    prev = reduced_objective(ReducedCovariancePair(w_a, w_b), rp)
    for it in range(1, max_iter + 1):
        anchor_obj = prev
        sp_a = build_subproblem_a(w_a, w_b, rp)
        sol_a = solve_dc_subproblem(sp_a)
        f_a = anchor_obj + (subproblem_objective(sp_a, sol_a.w_star)
                            - subproblem_objective(sp_a, w_a)) / LN2
        w_a = sol_a.w_star
        mid_obj = reduced_objective(ReducedCovariancePair(w_a, w_b), rp)
        sp_b = build_subproblem_b(w_a, w_b, rp)
        sol_b = solve_dc_subproblem(sp_b)
        f_b = mid_obj + (subproblem_objective(sp_b, sol_b.w_star)
                         - subproblem_objective(sp_b, w_b)) / LN2
        w_b = sol_b.w_star
        pair = ReducedCovariancePair(w_a, w_b)
        obj = reduced_objective(pair, rp)
        ra, rb, re = reduced_rates(pair, rp)
        trace.append(it, obj, f_a, f_b, ra, rb, re,
                     sol_a.case_tag, sol_b.case_tag, sp_a.fallback, sp_b.fallback)
        if obj - prev < tol:
            trace.stationarity = stationarity_residual(w_a, w_b, rp)
            if trace.stationarity < 1e-4:
                trace.converged = True
                break
        prev = obj
    if not trace.converged and np.isnan(trace.stationarity):
        trace.stationarity = stationarity_residual(w_a, w_b, rp)
    return ReducedCovariancePair(w_a, w_b), trace
