"""Dimension reduction of the covariance design to the channel subspaces.

Each node's covariance only matters through the three channel vectors it
excites (partner, self-interference loop, eavesdropper), so the N-dim
design reduces without loss to an r x r design, r <= 3, on an
orthonormal basis of that span. Solutions lift back as Q = U W U^H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._num import LN2, cvec, herm, qform
from .errors import DegenerateChannelError, ShapeError
from .model import ChannelSet, CovariancePair, SystemParams


def orthonormal_basis(columns) -> np.ndarray:
    """Orthonormal basis of span{columns} by modified Gram-Schmidt.

    A column whose residual after projection has norm below 1e-9 times
    the largest input column norm is treated as linearly dependent and
    dropped, so the returned N x r matrix has full column rank.
    """
    cols = [np.asarray(c, dtype=complex).ravel() for c in columns]
    if not cols:
        raise ShapeError("orthonormal_basis", "at least one column", "0 columns")
    n = cols[0].size
    for c in cols:
        if c.size != n:
            raise ShapeError("orthonormal_basis", f"length-{n} columns", c.size)
    scale = max(float(np.linalg.norm(c)) for c in cols)
    if scale == 0.0:
        raise DegenerateChannelError("degenerate channel set: all spanning vectors are zero")
    basis = []
    for c in cols:
        r = c.copy()
        for u in basis:
            r -= (u.conj() @ r) * u
        for u in basis:  # second pass tightens orthogonality
            r -= (u.conj() @ r) * u
        nr = float(np.linalg.norm(r))
        if nr >= 1e-9 * scale:
            basis.append(r / nr)
    return np.stack(basis, axis=1)


@dataclass(frozen=True)
class ReducedProblem:
    """Reduced channels for both nodes plus the bases that produced them.

    ht_ab, ht_aa, ht_ae live in node a's basis u_a (spanning h_ab, h_aa,
    h_ae); ht_ba, ht_bb, ht_be in u_b.
    """

    u_a: np.ndarray
    u_b: np.ndarray
    ht_ab: np.ndarray
    ht_aa: np.ndarray
    ht_ae: np.ndarray
    ht_ba: np.ndarray
    ht_bb: np.ndarray
    ht_be: np.ndarray
    params: SystemParams

    def __post_init__(self):
        for name in ("u_a", "u_b"):
            u = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, u)
            gram = u.conj().T @ u
            if float(np.max(np.abs(gram - np.eye(u.shape[1])))) > 1e-10:
                raise ValueError(f"{name} is not semi-unitary")
        for name in ("ht_ab", "ht_aa", "ht_ae"):
            object.__setattr__(self, name, cvec(getattr(self, name), self.r_a, name))
        for name in ("ht_ba", "ht_bb", "ht_be"):
            object.__setattr__(self, name, cvec(getattr(self, name), self.r_b, name))

    @property
    def r_a(self):
        return np.asarray(self.u_a).shape[1]

    @property
    def r_b(self):
        return np.asarray(self.u_b).shape[1]


@dataclass(frozen=True)
class ReducedCovariancePair:
    """Covariances in the reduced coordinates (r_a x r_a and r_b x r_b)."""

    w_a: np.ndarray
    w_b: np.ndarray

    def __post_init__(self):
        for name in ("w_a", "w_b"):
            w = np.asarray(getattr(self, name), dtype=complex)
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise ShapeError(name, "square matrix", w.shape)
            dev = float(np.max(np.abs(w - w.conj().T), initial=0.0))
            if dev > 1e-10 * max(1.0, float(np.max(np.abs(w), initial=0.0))):
                raise ValueError(f"{name} is not Hermitian (deviation {dev:.3e})")
            object.__setattr__(self, name, herm(w))


def reduce(ch: ChannelSet, p: SystemParams) -> ReducedProblem:
    """Project both nodes' channels onto their spanning subspaces."""
    if ch.n_tx != p.n_tx:
        raise ShapeError("channels", f"length {p.n_tx}", ch.n_tx)
    u_a = orthonormal_basis([ch.h_ab, ch.h_aa, ch.h_ae])
    u_b = orthonormal_basis([ch.h_ba, ch.h_bb, ch.h_be])
    return ReducedProblem(
        u_a=u_a,
        u_b=u_b,
        ht_ab=u_a.conj().T @ ch.h_ab,
        ht_aa=u_a.conj().T @ ch.h_aa,
        ht_ae=u_a.conj().T @ ch.h_ae,
        ht_ba=u_b.conj().T @ ch.h_ba,
        ht_bb=u_b.conj().T @ ch.h_bb,
        ht_be=u_b.conj().T @ ch.h_be,
        params=p,
    )


def lift(w: ReducedCovariancePair, rp: ReducedProblem) -> CovariancePair:
    """Map reduced covariances back to full antenna space, Q = U W U^H."""
    if w.w_a.shape[0] != rp.r_a or w.w_b.shape[0] != rp.r_b:
        raise ShapeError("reduced pair", f"({rp.r_a}, {rp.r_b})",
                         (w.w_a.shape[0], w.w_b.shape[0]))
    return CovariancePair(
        q_a=herm(rp.u_a @ w.w_a @ rp.u_a.conj().T),
        q_b=herm(rp.u_b @ w.w_b @ rp.u_b.conj().T),
    )


def reduced_rates_nat(w: ReducedCovariancePair, rp: ReducedProblem):
    """Per-node and eavesdropper rates in natural-log units."""
    p = rp.params
    den_a = p.sigma_a2 + p.zeta_a * qform(rp.ht_aa, w.w_a)
    den_b = p.sigma_b2 + p.zeta_b * qform(rp.ht_bb, w.w_b)
    ra = np.log1p(qform(rp.ht_ba, w.w_b) / den_a)
    rb = np.log1p(qform(rp.ht_ab, w.w_a) / den_b)
    re = np.log1p((qform(rp.ht_ae, w.w_a) + qform(rp.ht_be, w.w_b)) / p.sigma_e2)
    return float(ra), float(rb), float(re)


def reduced_rates(w, rp):
    """Base-2 rates (R_a, R_b, R_e) on the reduced problem."""
    ra, rb, re = reduced_rates_nat(w, rp)
    return ra / LN2, rb / LN2, re / LN2


def reduced_objective(w, rp) -> float:
    """Unclamped design objective R_a + R_b - R_e in bits (base 2)."""
    ra, rb, re = reduced_rates_nat(w, rp)
    return (ra + rb - re) / LN2
