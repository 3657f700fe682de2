"""Structured solver layer for log-plus-linear SDPs.

Problems here maximize sum_j w_j ln(e_j) + l over Hermitian matrix,
complex vector, and real scalar variables, where every e_j and l is a
real affine functional, subject to affine scalar inequalities and
linear matrix inequalities assembled from block placements.

The log terms are not handed to an exponential-cone solver. Each ln is
replaced by its upper envelope of tangent lines, collected lazily: the
master problem is a pure LMI program (solved through cvxpy), and after
each master solve a new tangent is added at the current value of each
log argument until the envelope gap falls below tolerance. Tangents of
a concave ln lie above it, so the master is always a relaxation; the
value reported back is the true objective at the last master point,
which is a certified lower bound on the optimum. That one-sided
guarantee is what the worst-case designs built on top of this layer
need to stay conservative.

Cut slots are preallocated as solver parameters, so a session can
re-solve with a changed linear objective (the usual inner-loop pattern)
without recompiling, and the cut pool carries over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._num import herm
from .errors import GuardError, ShapeError

LOG_GAP_TOL = 1e-7
_INACTIVE_CUT_BOUND = 64.0
_PROBE_SEED = 20240817


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str          # "herm" | "cvec" | "scalar"
    n: int = 1
    nonneg: bool = False


@dataclass(frozen=True)
class AffineScalar:
    """Real affine functional: const + sum of per-variable pairings.

    Pairing by kind: Re tr(C^H X) for Hermitian blocks, Re(c^H x) for
    complex vectors, a*x for scalars.
    """

    const: float
    terms: tuple  # ((name, coeff), ...)


@dataclass
class Placement:
    var: str | None    # None marks nothing; scalars and blocks share this record
    r0: int
    c0: int
    coeff: complex
    adjoint: bool


@dataclass
class LmiBlock:
    name: str
    size: int
    sense: str         # "nsd" (<= 0) or "psd" (>= 0)
    k_const: np.ndarray
    placements: list = field(default_factory=list)


class LmiBuilder:
    """Accumulates one LMI block; obtained from ProblemBuilder.lmi."""

    def __init__(self, owner, blk: LmiBlock):
        self._owner = owner
        self._blk = blk

    def set_const(self, k):
        k = np.asarray(k, dtype=complex)
        if k.shape != (self._blk.size, self._blk.size):
            raise ShapeError(f"lmi {self._blk.name} constant",
                             (self._blk.size, self._blk.size), k.shape)
        self._blk.k_const = k
        return self

    def place(self, var: str, r0: int, c0: int, coeff=1.0, adjoint=False):
        decl = self._owner._decl(var)
        if decl.kind == "scalar":
            raise ValueError("use place_scalar for scalar variables")
        rows, cols = _block_shape(decl, adjoint)
        if r0 < 0 or c0 < 0 or r0 + rows > self._blk.size or c0 + cols > self._blk.size:
            raise ShapeError(f"lmi {self._blk.name} placement of {var}",
                             f"within {self._blk.size}x{self._blk.size}",
                             (r0, c0, rows, cols))
        self._blk.placements.append(Placement(var, r0, c0, complex(coeff), adjoint))
        return self

    def place_scalar(self, var: str, r: int, c: int, coeff=1.0):
        decl = self._owner._decl(var)
        if decl.kind != "scalar":
            raise ValueError(f"{var} is not scalar")
        if not (0 <= r < self._blk.size and 0 <= c < self._blk.size):
            raise ShapeError(f"lmi {self._blk.name} scalar placement",
                             f"within {self._blk.size}", (r, c))
        self._blk.placements.append(Placement(var, r, c, complex(coeff), False))
        return self


def _block_shape(decl: VarDecl, adjoint: bool):
    if decl.kind == "herm":
        return decl.n, decl.n
    if decl.kind == "cvec":
        return (1, decl.n) if adjoint else (decl.n, 1)
    return 1, 1


@dataclass
class ConicProblem:
    vars: dict
    logs: list      # [(weight, AffineScalar)]
    linear: AffineScalar
    ineqs: list     # AffineScalar, each required <= 0
    lmis: list      # LmiBlock


class ProblemBuilder:
    def __init__(self):
        self._vars: dict[str, VarDecl] = {}
        self._logs = []
        self._linear = AffineScalar(0.0, ())
        self._ineqs = []
        self._lmis = []

    def _decl(self, name) -> VarDecl:
        if name not in self._vars:
            raise KeyError(f"undeclared variable {name!r}")
        return self._vars[name]

    def _declare(self, decl: VarDecl):
        if decl.name in self._vars:
            raise ValueError(f"duplicate variable {decl.name!r}")
        self._vars[decl.name] = decl
        return decl.name

    def hermitian(self, name: str, n: int):
        return self._declare(VarDecl(name, "herm", int(n)))

    def cvector(self, name: str, n: int):
        return self._declare(VarDecl(name, "cvec", int(n)))

    def scalar(self, name: str, nonneg: bool = False):
        return self._declare(VarDecl(name, "scalar", 1, nonneg))

    def affine(self, const=0.0, terms=()) -> AffineScalar:
        """Normalize and validate one affine functional."""
        norm = []
        for name, coeff in terms:
            decl = self._decl(name)
            if decl.kind == "herm":
                c = np.asarray(coeff, dtype=complex)
                if c.shape != (decl.n, decl.n):
                    raise ShapeError(f"coefficient of {name}", (decl.n, decl.n), c.shape)
            elif decl.kind == "cvec":
                c = np.asarray(coeff, dtype=complex).ravel()
                if c.size != decl.n:
                    raise ShapeError(f"coefficient of {name}", decl.n, c.size)
            else:
                c = float(coeff)
            norm.append((name, c))
        return AffineScalar(float(const), tuple(norm))

    def add_log(self, expr: AffineScalar, weight: float = 1.0):
        if not weight > 0:
            raise ValueError("log weight must be positive")
        self._logs.append((float(weight), expr))

    def set_linear(self, expr: AffineScalar):
        self._linear = expr

    def add_ineq(self, expr: AffineScalar):
        """Constrain expr <= 0."""
        self._ineqs.append(expr)

    def lmi(self, name: str, size: int, sense: str) -> LmiBuilder:
        if sense not in ("nsd", "psd"):
            raise ValueError("sense must be 'nsd' or 'psd'")
        blk = LmiBlock(name, int(size), sense, np.zeros((size, size), dtype=complex))
        self._lmis.append(blk)
        return LmiBuilder(self, blk)

    def build(self) -> ConicProblem:
        p = ConicProblem(dict(self._vars), list(self._logs), self._linear,
                         list(self._ineqs), list(self._lmis))
        _probe_hermiticity(p)
        return p


def _random_assignment(p: ConicProblem, rng) -> dict:
    asg = {}
    for d in p.vars.values():
        if d.kind == "herm":
            z = rng.standard_normal((d.n, d.n)) + 1j * rng.standard_normal((d.n, d.n))
            asg[d.name] = herm(z)
        elif d.kind == "cvec":
            asg[d.name] = rng.standard_normal(d.n) + 1j * rng.standard_normal(d.n)
        else:
            asg[d.name] = float(rng.standard_normal())
    return asg


def _probe_hermiticity(p: ConicProblem):
    # placements are literal, so Hermitian structure is the caller's job;
    # catch mistakes on random assignments before any solve
    rng = np.random.default_rng(_PROBE_SEED)
    for _ in range(3):
        asg = _random_assignment(p, rng)
        for blk in p.lmis:
            m = lmi_value(blk, p, asg)
            dev = float(np.max(np.abs(m - m.conj().T), initial=0.0))
            scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
            if dev > 1e-9 * scale:
                raise ValueError(
                    f"lmi {blk.name!r} is not Hermitian under probe "
                    f"(deviation {dev:.3e}); check block placements")


def affine_value(expr: AffineScalar, p: ConicProblem, asg: dict) -> float:
    val = expr.const
    for name, coeff in expr.terms:
        kind = p.vars[name].kind
        x = asg[name]
        if kind == "herm":
            val += float(np.real(np.sum(np.conj(coeff) * x)))
        elif kind == "cvec":
            val += float(np.real(np.vdot(coeff, x)))
        else:
            val += coeff * float(x)
    return float(val)


def lmi_value(blk: LmiBlock, p: ConicProblem, asg: dict) -> np.ndarray:
    m = np.array(blk.k_const, dtype=complex, copy=True)
    for pl in blk.placements:
        decl = p.vars[pl.var]
        x = asg[pl.var]
        if decl.kind == "herm":
            b = pl.coeff * np.asarray(x)
            m[pl.r0:pl.r0 + decl.n, pl.c0:pl.c0 + decl.n] += b
        elif decl.kind == "cvec":
            v = np.asarray(x).ravel()
            if pl.adjoint:
                m[pl.r0, pl.c0:pl.c0 + decl.n] += pl.coeff * v.conj()
            else:
                m[pl.r0:pl.r0 + decl.n, pl.c0] += pl.coeff * v
        else:
            m[pl.r0, pl.c0] += pl.coeff * float(x)
    return m


@dataclass
class ConicSolution:
    assignment: dict | None
    objective: float
    status: str            # "optimal" | "infeasible" | "max_iter"
    kkt: dict


@dataclass
class AuditReport:
    lmi_residuals: dict
    ineq_residuals: list
    hermiticity: dict
    log_args: list
    objective: float | None
    max_violation: float
    feasible: bool


def audit(p: ConicProblem, s: ConicSolution) -> AuditReport:
    """Recompute every residual and the objective with plain numpy.

    Independent of the solve path: assembles each LMI from its
    placements, takes eigenvalues, and evaluates the affine functionals
    directly on the returned assignment.
    """
    if s.assignment is None:
        return AuditReport({}, [], {}, [], None, float("inf"), False)
    asg = s.assignment
    lmi_res = {}
    hermit = {}
    for blk in p.lmis:
        m = lmi_value(blk, p, asg)
        hermit[blk.name] = float(np.max(np.abs(m - m.conj().T), initial=0.0))
        ev = np.linalg.eigvalsh(herm(m))
        lmi_res[blk.name] = max(0.0, float(ev[-1])) if blk.sense == "nsd" \
            else max(0.0, -float(ev[0]))
    ineq_res = [max(0.0, affine_value(e, p, asg)) for e in p.ineqs]
    sign_res = 0.0
    for d in p.vars.values():
        if d.kind == "scalar" and d.nonneg:
            sign_res = max(sign_res, -float(asg[d.name]))
    log_args = [affine_value(e, p, asg) for _, e in p.logs]
    ok_domain = all(a > 0 for a in log_args)
    obj = None
    if ok_domain:
        obj = affine_value(p.linear, p, asg)
        obj += sum(w * np.log(a) for (w, _), a in zip(p.logs, log_args))
    viol = max([sign_res] + list(lmi_res.values()) + ineq_res, default=0.0)
    return AuditReport(lmi_res, ineq_res, hermit, log_args, obj, float(viol),
                       bool(ok_domain and viol < 1e-7))


def dump(p: ConicProblem) -> str:
    """Plain-text rendering for offline cross-checking."""
    fmt = lambda a: np.array2string(np.asarray(a), precision=10, separator=", ",
                                    suppress_small=False, max_line_width=200)
    out = ["variables:"]
    for d in p.vars.values():
        extra = " nonneg" if d.nonneg else ""
        out.append(f"  {d.name} {d.kind} {d.n}{extra}")
    out.append("objective:")
    for w, e in p.logs:
        out.append(f"  log weight={w!r} const={e.const!r}")
        for name, c in e.terms:
            out.append(f"    term {name}: {fmt(c)}")
    out.append(f"  linear const={p.linear.const!r}")
    for name, c in p.linear.terms:
        out.append(f"    term {name}: {fmt(c)}")
    out.append("constraints:")
    for k, e in enumerate(p.ineqs):
        out.append(f"  ineq[{k}] <= 0: const={e.const!r}")
        for name, c in e.terms:
            out.append(f"    term {name}: {fmt(c)}")
    for blk in p.lmis:
        out.append(f"  lmi {blk.name} size={blk.size} sense={blk.sense}")
        out.append(f"    K = {fmt(blk.k_const)}")
        for pl in blk.placements:
            tag = " adjoint" if pl.adjoint else ""
            out.append(f"    place {pl.var} at ({pl.r0},{pl.c0}) "
                       f"coeff={pl.coeff!r}{tag}")
    return "\n".join(out) + "\n"


class ConicSession:
    """Compiled master problem with a persistent tangent-cut pool.

    With parametric_linear=True the linear objective coefficients are
    solver parameters, so repeated solves with different linear terms
    (same structure otherwise) skip recompilation; the accumulated cuts
    stay valid because they only relate each epigraph scalar to its log
    argument.
    """

    def __init__(self, p: ConicProblem, parametric_linear: bool = False,
                 cut_slots: int = 60):
        import cvxpy as cp
        self._cp = cp
        self.problem = p
        self.cut_slots = int(cut_slots)
        self.parametric = bool(parametric_linear)
        self._compile()

    # -- compilation ---------------------------------------------------

    def _compile(self):
        cp = self._cp
        p = self.problem
        self._v = {}
        for d in p.vars.values():
            if d.kind == "herm":
                self._v[d.name] = cp.Variable((d.n, d.n), hermitian=True,
                                              name=d.name)
            elif d.kind == "cvec":
                self._v[d.name] = cp.Variable(d.n, complex=True, name=d.name)
            else:
                self._v[d.name] = cp.Variable(nonneg=d.nonneg, name=d.name)
        cons = []
        self._lmi_cons = {}
        for blk in p.lmis:
            expr = self._lmi_expr(blk)
            con = (expr << 0) if blk.sense == "nsd" else (expr >> 0)
            cons.append(con)
            self._lmi_cons[blk.name] = con
        self._ineq_cons = []
        for e in p.ineqs:
            con = self._aff_expr(e) <= 0
            cons.append(con)
            self._ineq_cons.append(con)
        nlog = len(p.logs)
        self._t = cp.Variable(nlog, name="log_epigraph") if nlog else None
        self._cut_a = []
        self._cut_b = []
        self._cut_fill = [0] * nlog
        for j in range(nlog):
            # unused ring slots cap t at a level no desk-scale argument
            # reaches; kept small so the data stays well conditioned
            a = cp.Parameter(self.cut_slots, name=f"cut_a_{j}",
                             value=np.full(self.cut_slots,
                                           _INACTIVE_CUT_BOUND))
            b = cp.Parameter(self.cut_slots, name=f"cut_b_{j}",
                             value=np.zeros(self.cut_slots))
            self._cut_a.append(a)
            self._cut_b.append(b)
            e_expr = self._aff_expr(p.logs[j][1])
            cons.append(self._t[j] <= a + b * e_expr)
        if self.parametric:
            self._lin_const = cp.Parameter(name="lin_const", value=0.0)
            self._lin_par = {}
            lin = self._lin_const
            for d in p.vars.values():
                if d.kind == "herm":
                    par = cp.Parameter((d.n, d.n), complex=True, name=f"lin_{d.name}",
                                       value=np.zeros((d.n, d.n), dtype=complex))
                    lin = lin + cp.real(cp.sum(cp.multiply(par, self._v[d.name])))
                elif d.kind == "cvec":
                    par = cp.Parameter(d.n, complex=True, name=f"lin_{d.name}",
                                       value=np.zeros(d.n, dtype=complex))
                    lin = lin + cp.real(cp.sum(cp.multiply(par, self._v[d.name])))
                else:
                    par = cp.Parameter(name=f"lin_{d.name}", value=0.0)
                    lin = lin + par * self._v[d.name]
                self._lin_par[d.name] = par
            self._set_linear_params(p.linear)
        else:
            lin = self._aff_expr(p.linear)
        obj = lin
        if nlog:
            w = np.array([wj for wj, _ in p.logs])
            obj = obj + w @ self._t
        self._prob = cp.Problem(cp.Maximize(obj), cons)

    def _aff_expr(self, e: AffineScalar):
        cp = self._cp
        out = e.const
        for name, coeff in e.terms:
            kind = self.problem.vars[name].kind
            v = self._v[name]
            if kind == "scalar":
                out = out + coeff * v
            else:
                # Re tr(C^H X) and Re(c^H x) are both Re sum(conj(C) .* X)
                out = out + cp.real(cp.sum(cp.multiply(np.conj(coeff), v)))
        return out

    def _lmi_expr(self, blk: LmiBlock):
        cp = self._cp
        S = blk.size
        expr = cp.Constant(blk.k_const)
        for pl in blk.placements:
            decl = self.problem.vars[pl.var]
            v = self._v[pl.var]
            if decl.kind == "herm":
                body = pl.coeff * v
                rows, cols = decl.n, decl.n
            elif decl.kind == "cvec":
                col = cp.reshape(v, (decl.n, 1), order="C")
                body = pl.coeff * (cp.conj(col).T if pl.adjoint else col)
                rows, cols = _block_shape(decl, pl.adjoint)
            else:
                body = cp.reshape(pl.coeff * v, (1, 1), order="C")
                rows, cols = 1, 1
            left = np.zeros((S, rows))
            left[np.arange(pl.r0, pl.r0 + rows), np.arange(rows)] = 1.0
            right = np.zeros((cols, S))
            right[np.arange(cols), np.arange(pl.c0, pl.c0 + cols)] = 1.0
            expr = expr + left @ body @ right
        return (expr + cp.conj(expr).T) / 2

    def _set_linear_params(self, e: AffineScalar):
        self._lin_const.value = e.const
        seen = set()
        for name, coeff in e.terms:
            kind = self.problem.vars[name].kind
            if kind == "scalar":
                self._lin_par[name].value = float(coeff)
            else:
                self._lin_par[name].value = np.conj(np.asarray(coeff))
            seen.add(name)
        for name, par in self._lin_par.items():
            if name not in seen:
                if self.problem.vars[name].kind == "scalar":
                    par.value = 0.0
                else:
                    par.value = np.zeros(par.shape, dtype=complex)
        self._active_linear = e

    # -- solving -------------------------------------------------------

    def _point_violation(self) -> float:
        try:
            asg = self._extract()
        except (TypeError, ValueError):
            return float("inf")
        report = audit(self.problem,
                       ConicSolution(asg, 0.0, "candidate", {}))
        return report.max_violation

    def _solve_master(self):
        cp = self._cp
        last_exc = None
        inaccurate = None
        for solver, kw in (("CLARABEL", {}),
                           ("SCS", {"eps": 1e-8, "max_iters": 100000}),
                           ("CVXOPT", {})):
            try:
                self._prob.solve(solver=solver, **kw)
            except (cp.error.SolverError, ValueError,
                    ArithmeticError) as exc:
                last_exc = exc
                continue
            if self._prob.status in ("optimal", "infeasible", "unbounded"):
                return self._prob.status
            if self._prob.status and "inaccurate" in self._prob.status:
                # a reduced-accuracy stall is fine when the point itself
                # is clean well inside the audit tolerance
                if ("optimal" in self._prob.status
                        and self._point_violation() < 5e-8):
                    return "optimal"
                inaccurate = self._prob.status
            last_exc = RuntimeError(f"{solver}: {self._prob.status}")
        if inaccurate is not None:
            return inaccurate.replace("_inaccurate", "")
        raise GuardError(f"all conic backends failed: {last_exc}")

    def _extract(self):
        asg = {}
        for d in self.problem.vars.values():
            val = self._v[d.name].value
            if d.kind == "herm":
                asg[d.name] = herm(np.asarray(val, dtype=complex))
            elif d.kind == "cvec":
                asg[d.name] = np.asarray(val, dtype=complex).ravel()
            else:
                asg[d.name] = float(val)
        return asg

    def _add_cut(self, j: int, e_hat: float):
        slot = self._cut_fill[j] % self.cut_slots
        self._cut_fill[j] += 1
        a = self._cut_a[j].value.copy()
        b = self._cut_b[j].value.copy()
        a[slot] = np.log(e_hat) - 1.0
        b[slot] = 1.0 / e_hat
        self._cut_a[j].value = a
        self._cut_b[j].value = b

    def solve(self, linear: AffineScalar | None = None,
              log_gap_tol: float = LOG_GAP_TOL,
              max_rounds: int = 60) -> ConicSolution:
        p = self.problem
        if linear is not None:
            if not self.parametric:
                raise ValueError("session compiled without parametric linear term")
            self._set_linear_params(linear)
        lin_active = linear if linear is not None else getattr(
            self, "_active_linear", p.linear)
        nlog = len(p.logs)
        for j in range(nlog):
            if self._cut_fill[j] == 0:
                seed = p.logs[j][1].const
                self._add_cut(j, seed if seed > 0 else 1.0)
        gap = 0.0
        for _ in range(max_rounds):
            status = self._solve_master()
            if status == "infeasible":
                return ConicSolution(None, float("-inf"), "infeasible",
                                     {"primal_feasibility": float("inf"),
                                      "dual_feasibility": float("nan"),
                                      "complementarity": float("nan"),
                                      "log_gap": float("nan")})
            if status == "unbounded":
                raise GuardError("master problem unbounded; the issued "
                                 "problem classes are power-bounded, so the "
                                 "encoding is wrong")
            asg = self._extract()
            if nlog == 0:
                return self._finish(asg, lin_active, 0.0, "optimal")
            gap = 0.0
            e_hats = []
            for j, (w, e) in enumerate(p.logs):
                if float(self._t.value[j]) > _INACTIVE_CUT_BOUND - 1.0:
                    raise GuardError(
                        "log argument beyond the supported range; the "
                        "issued problem classes keep arguments far below "
                        f"exp({_INACTIVE_CUT_BOUND})")
                e_hat = max(affine_value(e, p, asg), 1e-8)
                e_hats.append(e_hat)
                gap += w * max(0.0, float(self._t.value[j]) - np.log(e_hat))
            if gap < log_gap_tol:
                return self._finish(asg, lin_active, gap, "optimal")
            for j, e_hat in enumerate(e_hats):
                self._add_cut(j, e_hat)
        return self._finish(asg, lin_active, gap, "max_iter")

    def _finish(self, asg, lin_active, gap, status) -> ConicSolution:
        p = self.problem
        obj = affine_value(lin_active, p, asg)
        for w, e in p.logs:
            obj += w * np.log(max(affine_value(e, p, asg), 1e-300))
        dual_res = 0.0
        compl = 0.0
        for blk in p.lmis:
            con = self._lmi_cons[blk.name]
            d = con.dual_value
            if d is None:
                continue
            d = herm(np.asarray(d, dtype=complex))
            ev = np.linalg.eigvalsh(d)
            dual_res = max(dual_res, max(0.0, -float(ev[0])))
            mval = lmi_value(blk, p, asg)
            compl = max(compl, abs(float(np.real(np.sum(np.conj(d) * mval)))))
        for e, con in zip(p.ineqs, self._ineq_cons):
            d = con.dual_value
            if d is None:
                continue
            d = float(d)
            dual_res = max(dual_res, max(0.0, -d))
            compl = max(compl, abs(d * affine_value(e, p, asg)))
        sol = ConicSolution(asg, float(obj), status, {
            "primal_feasibility": 0.0,
            "dual_feasibility": dual_res,
            "complementarity": compl,
            "log_gap": float(gap),
        })
        rep = audit(p, sol)
        sol.kkt["primal_feasibility"] = rep.max_violation
        if status == "optimal" and rep.max_violation >= 1e-7:
            sol.status = "max_iter"
        return sol


def solve(p: ConicProblem, opts: dict | None = None) -> ConicSolution:
    """One-shot solve; compiles a throwaway session."""
    opts = dict(opts or {})
    session = ConicSession(p, parametric_linear=False,
                           cut_slots=opts.pop("cut_slots", 60))
    return session.solve(log_gap_tol=opts.pop("log_gap_tol", LOG_GAP_TOL),
                         max_rounds=opts.pop("max_rounds", 60))
