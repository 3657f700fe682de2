"""Block updates against several multiantenna eavesdroppers.

The secrecy objective becomes min over Eves of (R_a + R_b - R_{e_i}).
Each block update turns into a max-min problem whose inner maximization
is again the rank-one subproblem of `adc`, now with M = sum_i gamma_i
M_i for simplex weights gamma. The minimax exchanges (the inner problem
is concave, the weight set compact convex), so the update reduces to
minimizing the convex value function g(gamma) over the unit simplex by
projected gradient descent; Danskin gives the gradient from the inner
maximizer for free.

Weighted subproblems here carry per-Eve constant offsets so that
g(gamma) reports the value of the weighted surrogate objective, not
just its W-dependent part. The offsets do not change the inner argmax,
but they do steer the outer minimization toward the Eve that is
actually binding at the anchor, which is what makes the outer
alternation monotone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import adc
from ._num import LN2, herm, project_psd_trace_ball, project_trace_simplex, qform
from .errors import ShapeError
from .model import (ChannelSet, CovariancePair, SystemParams, _mat_from_cfg,
                    _mat_to_cfg)
from .reduction import ReducedCovariancePair, orthonormal_basis


@dataclass(frozen=True)
class EvePopulation:
    """Channels and noise powers of I eavesdroppers, Eve i with L_i antennas."""

    h_ae: tuple
    h_be: tuple
    sigma_e2: tuple

    def __post_init__(self):
        h_ae = tuple(np.asarray(m, dtype=complex) for m in self.h_ae)
        h_be = tuple(np.asarray(m, dtype=complex) for m in self.h_be)
        sig = tuple(float(s) for s in self.sigma_e2)
        if not (len(h_ae) == len(h_be) == len(sig)) or not h_ae:
            raise ShapeError("eve population", "equal nonzero counts",
                             (len(h_ae), len(h_be), len(sig)))
        n = None
        for ma, mb in zip(h_ae, h_be):
            if ma.ndim != 2 or mb.ndim != 2 or ma.shape != mb.shape or ma.shape[1] < 1:
                raise ShapeError("eve channel block", "matching N x L_i pair",
                                 (ma.shape, mb.shape))
            if n is None:
                n = ma.shape[0]
            elif ma.shape[0] != n:
                raise ShapeError("eve channel block", f"{n} rows", ma.shape)
        if any(s <= 0 for s in sig):
            raise ValueError("eve noise powers must be positive")
        object.__setattr__(self, "h_ae", h_ae)
        object.__setattr__(self, "h_be", h_be)
        object.__setattr__(self, "sigma_e2", sig)

    @property
    def count(self):
        return len(self.h_ae)

    @property
    def n_tx(self):
        return self.h_ae[0].shape[0]


def rate_eve_i(pair: CovariancePair, pop: EvePopulation, i: int) -> float:
    """Base-2 rate of Eve i observing both transmissions jointly."""
    ha = pop.h_ae[i]
    hb = pop.h_be[i]
    ell = ha.shape[1]
    gram = (ha.conj().T @ pair.q_a @ ha + hb.conj().T @ pair.q_b @ hb) / pop.sigma_e2[i]
    sign, logdet = np.linalg.slogdet(np.eye(ell) + gram)
    if sign <= 0:
        raise ValueError("eve Gram matrix lost positive definiteness")
    return float(logdet) / LN2


@dataclass(frozen=True)
class MultiEveReduced:
    """Reduced-basis geometry for the multi-Eve design.

    u_a spans [h_ab, h_aa, columns of every H_ae_i]; u_b mirrors with
    the b-side vectors. Rank is at most min(N, 2 + sum L_i).
    """

    u_a: np.ndarray
    u_b: np.ndarray
    ht_ab: np.ndarray
    ht_aa: np.ndarray
    ht_ba: np.ndarray
    ht_bb: np.ndarray
    ht_ae: tuple
    ht_be: tuple
    sigma_e2: tuple
    params: SystemParams

    @property
    def r_a(self):
        return self.u_a.shape[1]

    @property
    def r_b(self):
        return self.u_b.shape[1]

    @property
    def count(self):
        return len(self.ht_ae)


def reduce_multieve(ch: ChannelSet, pop: EvePopulation,
                    p: SystemParams) -> MultiEveReduced:
    """Project onto per-node bases spanning the link, SI, and Eve columns.

    Only the node-to-node and self-interference vectors of `ch` are
    used; the eavesdropper side comes entirely from `pop`.
    """
    if pop.n_tx != ch.n_tx:
        raise ShapeError("eve population", f"{ch.n_tx} rows", pop.n_tx)
    cols_a = [ch.h_ab, ch.h_aa] + [pop.h_ae[i][:, k]
                                   for i in range(pop.count)
                                   for k in range(pop.h_ae[i].shape[1])]
    cols_b = [ch.h_ba, ch.h_bb] + [pop.h_be[i][:, k]
                                   for i in range(pop.count)
                                   for k in range(pop.h_be[i].shape[1])]
    u_a = orthonormal_basis(cols_a)
    u_b = orthonormal_basis(cols_b)
    return MultiEveReduced(
        u_a=u_a,
        u_b=u_b,
        ht_ab=u_a.conj().T @ ch.h_ab,
        ht_aa=u_a.conj().T @ ch.h_aa,
        ht_ba=u_b.conj().T @ ch.h_ba,
        ht_bb=u_b.conj().T @ ch.h_bb,
        ht_ae=tuple(u_a.conj().T @ pop.h_ae[i] for i in range(pop.count)),
        ht_be=tuple(u_b.conj().T @ pop.h_be[i] for i in range(pop.count)),
        sigma_e2=pop.sigma_e2,
        params=p,
    )


def _eve_rates_nat(w_a, w_b, rmp: MultiEveReduced):
    out = []
    for i in range(rmp.count):
        ha = rmp.ht_ae[i]
        hb = rmp.ht_be[i]
        ell = ha.shape[1]
        gram = (ha.conj().T @ w_a @ ha + hb.conj().T @ w_b @ hb) / rmp.sigma_e2[i]
        sign, logdet = np.linalg.slogdet(np.eye(ell) + gram)
        if sign <= 0:
            raise ValueError("eve Gram matrix lost positive definiteness")
        out.append(float(logdet))
    return out


def _link_rates_nat(w_a, w_b, rmp: MultiEveReduced):
    p = rmp.params
    sa = p.sigma_a2 + p.zeta_a * qform(rmp.ht_aa, w_a)
    sb = p.sigma_b2 + p.zeta_b * qform(rmp.ht_bb, w_b)
    ra = float(np.log1p(qform(rmp.ht_ba, w_b) / sa))
    rb = float(np.log1p(qform(rmp.ht_ab, w_a) / sb))
    return ra, rb


def multieve_objective(pair: ReducedCovariancePair, rmp: MultiEveReduced) -> float:
    """Base-2 worst-Eve design objective, unclamped."""
    ra, rb = _link_rates_nat(pair.w_a, pair.w_b, rmp)
    res = _eve_rates_nat(pair.w_a, pair.w_b, rmp)
    return (ra + rb - max(res)) / LN2


def build_m_i(w_a_k, w_b_k, rmp: MultiEveReduced, i: int, side: str = "a"):
    """Linearization matrix of Eve i for one node's update at the anchor."""
    p = rmp.params
    if side == "a":
        x_si = qform(rmp.ht_aa, w_a_k)
        cross = qform(rmp.ht_ba, w_b_k)
        m_si = adc._si_gradient_term(rmp.ht_aa, p.zeta_a, p.sigma_a2, x_si, cross)
        ha, hb = rmp.ht_ae[i], rmp.ht_be[i]
        inner = (rmp.sigma_e2[i] * np.eye(ha.shape[1])
                 + ha.conj().T @ w_a_k @ ha + hb.conj().T @ w_b_k @ hb)
        m_eve = ha @ np.linalg.solve(inner, ha.conj().T)
    elif side == "b":
        x_si = qform(rmp.ht_bb, w_b_k)
        cross = qform(rmp.ht_ab, w_a_k)
        m_si = adc._si_gradient_term(rmp.ht_bb, p.zeta_b, p.sigma_b2, x_si, cross)
        ha, hb = rmp.ht_ae[i], rmp.ht_be[i]
        inner = (rmp.sigma_e2[i] * np.eye(hb.shape[1])
                 + ha.conj().T @ w_a_k @ ha + hb.conj().T @ w_b_k @ hb)
        m_eve = hb @ np.linalg.solve(inner, hb.conj().T)
    else:
        raise ValueError(f"side must be 'a' or 'b', got {side!r}")
    return herm(m_si + m_eve)


@dataclass(frozen=True)
class SimplexWeights:
    """Convex-combination weights over the eavesdroppers."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float).ravel()
        if g.size == 0:
            raise ShapeError("simplex weights", "nonempty vector", 0)
        if float(g.min(initial=0.0)) < -1e-12:
            raise ValueError("negative simplex weight")
        if abs(float(g.sum()) - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {g.sum()!r}, expected 1")
        object.__setattr__(self, "gamma", np.maximum(g, 0.0))

    @property
    def count(self):
        return self.gamma.size


def project_simplex(v) -> SimplexWeights:
    """Euclidean projection onto the unit simplex."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ShapeError("simplex projection input", "nonempty vector", 0)
    return SimplexWeights(project_trace_simplex(v, 1.0))


@dataclass
class MinMaxContext:
    """Frozen data of one block's max-min update.

    m_list holds the per-Eve linearization matrices, hhat the effective
    target channel, offsets the per-Eve surrogate constants (natural
    log); offsets=None means all zero, which leaves the maximizing W
    unchanged but reports only the W-dependent part of the value.
    """

    m_list: tuple
    hhat: np.ndarray
    p_budget: float
    offsets: np.ndarray | None = None

    def __post_init__(self):
        self.m_list = tuple(herm(np.asarray(m, dtype=complex)) for m in self.m_list)
        self.hhat = np.asarray(self.hhat, dtype=complex).ravel()
        if self.offsets is not None:
            self.offsets = np.asarray(self.offsets, dtype=float).ravel()
            if self.offsets.size != len(self.m_list):
                raise ShapeError("offsets", len(self.m_list), self.offsets.size)

    @property
    def count(self):
        return len(self.m_list)


def g_and_grad(gamma: SimplexWeights, ctx: MinMaxContext):
    """Value, gradient, and inner maximizer of g at the given weights."""
    if gamma.count != ctx.count:
        raise ShapeError("gamma", ctx.count, gamma.count)
    g = gamma.gamma
    m_mix = herm(sum(gi * mi for gi, mi in zip(g, ctx.m_list)))
    sp = adc.SubproblemData(hhat_ab=ctx.hhat, m_mat=m_mix, p_budget=ctx.p_budget)
    sol = adc.solve_dc_subproblem(sp)
    w = sol.w_star
    traces = np.array([float(np.real(np.trace(mi @ w))) for mi in ctx.m_list])
    log_term = float(np.log1p(qform(ctx.hhat, w)))
    grad = -traces
    value = log_term - float(g @ traces)
    if ctx.offsets is not None:
        grad = grad + ctx.offsets
        value += float(g @ ctx.offsets)
    return value, grad, sol


def solve_multieve_subproblem(ctx: MinMaxContext, tol: float = 1e-8,
                              max_iter: int = 500, gamma0=None):
    """Minimize g over the simplex; returns weights, inner maximizer, value.

    Projected gradient descent with Armijo backtracking (factor 0.5,
    parameter 1e-4, unit initial step), started from gamma0 or else the
    uniform point. The gradient-mapping displacement at unit step is
    the stopping measure; a value stall at the numerical floor also
    stops, since at a kink the displacement need not shrink further.
    Non-convergence returns the best iterate seen, with a warning.
    """
    n = ctx.count
    if gamma0 is None:
        gamma = np.full(n, 1.0 / n)
    else:
        gamma = SimplexWeights(gamma0).gamma
        if gamma.size != n:
            raise ShapeError("gamma0", n, gamma.size)
    val, grad, sol = g_and_grad(SimplexWeights(gamma), ctx)
    best = (val, gamma.copy(), sol)
    converged = False
    stalled = 0
    for _ in range(max_iter):
        target = project_simplex(gamma - grad).gamma
        if float(np.linalg.norm(target - gamma)) <= tol:
            converged = True
            break
        if float(grad @ (target - gamma)) >= -1e-14:
            # no feasible first-order descent left
            converged = True
            break
        step = 1.0
        accepted = False
        while step >= 1e-10:
            cand = project_simplex(gamma - step * grad).gamma
            d = cand - gamma
            cand_val, cand_grad, cand_sol = g_and_grad(SimplexWeights(cand), ctx)
            if cand_val <= val + 1e-4 * float(grad @ d):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # flat to numerical precision along every feasible direction
            converged = True
            break
        gamma, val, grad, sol = cand, cand_val, cand_grad, cand_sol
        if val < best[0] - 1e-12:
            best = (val, gamma.copy(), sol)
            stalled = 0
        else:
            stalled += 1
            if stalled >= 4:
                converged = True
                break
    if val < best[0]:
        best = (val, gamma.copy(), sol)
    if not converged:
        warnings.warn("simplex descent stopped at max_iter without meeting "
                      "tolerance; returning best iterate", RuntimeWarning)
    return SimplexWeights(best[1]), best[2], best[0]


def _side_context(w_a, w_b, rmp: MultiEveReduced, side: str):
    """MinMaxContext for one block update, offsets pinned at the anchor."""
    p = rmp.params
    ra, rb = _link_rates_nat(w_a, w_b, rmp)
    res = _eve_rates_nat(w_a, w_b, rmp)
    if side == "a":
        den = p.sigma_b2 + p.zeta_b * qform(rmp.ht_bb, w_b)
        hhat = rmp.ht_ab / np.sqrt(den)
        own, anchor_w, budget = ra, w_a, p.p_a
    else:
        den = p.sigma_a2 + p.zeta_a * qform(rmp.ht_aa, w_a)
        hhat = rmp.ht_ba / np.sqrt(den)
        own, anchor_w, budget = rb, w_b, p.p_b
    m_list = [build_m_i(w_a, w_b, rmp, i, side) for i in range(rmp.count)]
    offsets = np.array([own - res[i]
                        + float(np.real(np.trace(m_list[i] @ anchor_w)))
                        for i in range(rmp.count)])
    fallback = (qform(rmp.ht_ba, w_b) if side == "a"
                else qform(rmp.ht_ab, w_a)) < 1e-12
    return MinMaxContext(tuple(m_list), hhat, budget, offsets), fallback


def _simplex_lattice(count: int, divisions: int = 10):
    """All weight vectors with entries k/divisions summing to one."""
    if count == 1:
        return [np.array([1.0])]
    pts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            pts.append(np.array(prefix + [remaining]) / divisions)
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], divisions, count)
    return pts


def _me_stationarity(w_a, w_b, rmp: MultiEveReduced,
                     gamma_hints=()) -> float:
    """Projected-gradient residual of the worst-Eve objective.

    Where several Eves tie, the objective is nonsmooth and no single
    Eve's gradient need vanish; stationarity holds when SOME convex
    mixture of the per-Eve gradients has zero projected displacement.
    The mixture is seeded from a lattice plus any supplied hints and
    then refined by a shrinking pattern search on the simplex, one
    mixture per block, so the value reported is a tight upper bound on
    the true residual. Reduces to the plain smooth test when count is 1.

    Diagnostic only: at tied optima the inner descent resolves the
    weights no finer than the value floor of g allows, so a residual of
    roughly sqrt(eps) is the best the alternation can certify.
    """
    p = rmp.params
    x_a = qform(rmp.ht_aa, w_a)
    x_b = qform(rmp.ht_bb, w_b)
    cross_ba = qform(rmp.ht_ba, w_b)
    cross_ab = qform(rmp.ht_ab, w_a)
    sa = p.sigma_a2 + p.zeta_a * x_a
    sb = p.sigma_b2 + p.zeta_b * x_b
    out = lambda v: np.outer(v, v.conj())
    base_a = (p.zeta_a * (1.0 / (sa + cross_ba) - 1.0 / sa) * out(rmp.ht_aa)
              + out(rmp.ht_ab) / (sb + cross_ab))
    base_b = (p.zeta_b * (1.0 / (sb + cross_ab) - 1.0 / sb) * out(rmp.ht_bb)
              + out(rmp.ht_ba) / (sa + cross_ba))
    eve_a, eve_b = [], []
    for i in range(rmp.count):
        ha, hb = rmp.ht_ae[i], rmp.ht_be[i]
        inner = (rmp.sigma_e2[i] * np.eye(ha.shape[1])
                 + ha.conj().T @ w_a @ ha + hb.conj().T @ w_b @ hb)
        eve_a.append(ha @ np.linalg.solve(inner, ha.conj().T))
        eve_b.append(hb @ np.linalg.solve(inner, hb.conj().T))

    cands = _simplex_lattice(rmp.count)
    res = _eve_rates_nat(w_a, w_b, rmp)
    hot = np.zeros(rmp.count)
    hot[int(np.argmax(res))] = 1.0
    cands.append(hot)
    for g in gamma_hints:
        g = np.asarray(g, dtype=float).ravel()
        if g.size == rmp.count and abs(g.sum() - 1.0) < 1e-6:
            cands.append(g)

    def disp(base, eves, w, budget):
        def d_of(g):
            grad = base - sum(gi * ev for gi, ev in zip(g, eves))
            return float(np.linalg.norm(
                project_psd_trace_ball(w + herm(grad) / LN2, budget) - w))

        best_g = min(cands, key=d_of)
        best_v = d_of(best_g)
        if rmp.count == 1:
            return best_v
        # shift mass pairwise between coordinates, halving the shift once
        # no direction improves; eval cap bounds the descent at one scale
        scale = 0.05
        evals = 0
        while scale > 1e-7 and evals < 400:
            moved = False
            for i in range(rmp.count):
                for j in range(rmp.count):
                    if i == j or best_g[j] <= 0.0:
                        continue
                    g = best_g.copy()
                    m = min(scale, g[j])
                    g[i] += m
                    g[j] -= m
                    v = d_of(g)
                    evals += 1
                    if v < best_v:
                        best_g, best_v = g, v
                        moved = True
            if not moved:
                scale *= 0.5
        return best_v

    res_a = disp(base_a, eve_a, w_a, p.p_a)
    res_b = disp(base_b, eve_b, w_b, p.p_b)
    return float(np.hypot(res_a, res_b))


def multieve_adc_solve(rmp: MultiEveReduced, init: ReducedCovariancePair,
                       tol: float = 1e-6, max_iter: int = 100):
    """Alternate max-min block updates on the worst-Eve objective.

    Same outer loop shape as adc.adc_solve; each block update solves the
    simplex min-max instead of a single subproblem. A block candidate
    that fails to strictly improve the true worst-Eve objective
    (possible only at the numerical floor of the inner descent) is
    rejected, keeping the recorded trace monotone. Stops once a full
    cycle improves by less than tol; the recorded stationarity is the
    mixed-subgradient residual of the nonsmooth objective, reported for
    diagnosis rather than gating.
    """
    w_a = np.asarray(init.w_a, dtype=complex)
    w_b = np.asarray(init.w_b, dtype=complex)
    trace = adc.AdcTrace()
    prev = multieve_objective(ReducedCovariancePair(w_a, w_b), rmp)
    hints = ()
    for it in range(1, max_iter + 1):
        anchor_obj = prev
        ctx_a, fb_a = _side_context(w_a, w_b, rmp, "a")
        gam_a, sol_a, val_a = solve_multieve_subproblem(ctx_a)
        cand = sol_a.w_star
        cand_obj = multieve_objective(ReducedCovariancePair(cand, w_b), rmp)
        acc_a = cand_obj > anchor_obj
        if acc_a:
            w_a = cand
            f_a = anchor_obj + (val_a - anchor_obj * LN2) / LN2
            mid_obj = cand_obj
        else:
            f_a = anchor_obj
            mid_obj = anchor_obj
        ctx_b, fb_b = _side_context(w_a, w_b, rmp, "b")
        gam_b, sol_b, val_b = solve_multieve_subproblem(ctx_b)
        cand = sol_b.w_star
        cand_obj = multieve_objective(ReducedCovariancePair(w_a, cand), rmp)
        acc_b = cand_obj > mid_obj
        if acc_b:
            w_b = cand
            f_b = mid_obj + (val_b - mid_obj * LN2) / LN2
            obj = cand_obj
        else:
            f_b = mid_obj
            obj = mid_obj
        ra, rb = _link_rates_nat(w_a, w_b, rmp)
        re = max(_eve_rates_nat(w_a, w_b, rmp))
        trace.append(it, obj, f_a, f_b, ra / LN2, rb / LN2, re / LN2,
                     sol_a.case_tag, sol_b.case_tag, fb_a, fb_b)
        hints = (gam_a.gamma, gam_b.gamma)
        if obj - prev < tol:
            trace.converged = True
            break
        prev = obj
    trace.stationarity = _me_stationarity(w_a, w_b, rmp, hints)
    return ReducedCovariancePair(w_a, w_b), trace


def eve_population_to_config(pop: EvePopulation) -> dict:
    return {
        "h_ae": [_mat_to_cfg(m) for m in pop.h_ae],
        "h_be": [_mat_to_cfg(m) for m in pop.h_be],
        "sigma_e2": list(pop.sigma_e2),
    }


def eve_population_from_config(cfg: dict) -> EvePopulation:
    from .errors import ConfigError
    for key in ("h_ae", "h_be", "sigma_e2"):
        if key not in cfg:
            raise ConfigError(f"eve population config missing {key!r}")
    return EvePopulation(
        h_ae=tuple(_mat_from_cfg(m, "h_ae") for m in cfg["h_ae"]),
        h_be=tuple(_mat_from_cfg(m, "h_be") for m in cfg["h_be"]),
        sigma_e2=tuple(float(s) for s in cfg["sigma_e2"]),
    )
