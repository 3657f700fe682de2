"""Small numeric helpers used across modules."""

import numpy as np

from .errors import ShapeError

LN2 = float(np.log(2.0))


def herm(x):
    """Hermitian part (x + x^H)/2."""
    x = np.asarray(x, dtype=complex)
    return 0.5 * (x + x.conj().T)


def is_hermitian(x, tol=1e-10):
    x = np.asarray(x)
    return float(np.max(np.abs(x - x.conj().T), initial=0.0)) <= tol


def qform(v, q):
    """Real value of v^H Q v for Hermitian Q.

    The imaginary residue must be round-off only (< 1e-10 absolute,
    scaled by the magnitude of the form).
    """
    v = np.asarray(v, dtype=complex).ravel()
    q = np.asarray(q, dtype=complex)
    if q.shape != (v.size, v.size):
        raise ShapeError("quadratic form", f"({v.size}, {v.size})", q.shape)
    val = complex(v.conj() @ q @ v)
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-10 * scale:
        raise ValueError(f"quadratic form has imaginary residue {val.imag:.3e}")
    return val.real


def cvec(v, n=None, what="vector"):
    """Validate and convert a complex vector."""
    v = np.asarray(v, dtype=complex).ravel()
    if n is not None and v.size != n:
        raise ShapeError(what, f"({n},)", v.shape)
    return v


def psd_clip(q, floor=0.0):
    """Project a Hermitian matrix onto the PSD cone by eigenvalue clipping."""
    q = herm(q)
    w, v = np.linalg.eigh(q)
    if w[0] >= floor:
        return q
    w = np.maximum(w, floor)
    return herm((v * w) @ v.conj().T)


def project_trace_simplex(v, total):
    """Euclidean projection of a real vector onto {x >= 0, sum(x) = total}.

    Water-level bisection: find theta with sum(max(v - theta, 0)) = total,
    then shave the last round-off onto the support so the sum is exact.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ShapeError("simplex projection", "nonempty vector", "()")
    if total <= 0:
        return np.zeros_like(v)
    lo = float(np.min(v)) - total / v.size - 1.0
    hi = float(np.max(v))
    gap = 1e-14 * max(1.0, abs(lo), abs(hi))
    for _ in range(200):
        if hi - lo <= gap:
            break
        mid = 0.5 * (lo + hi)
        if float(np.maximum(v - mid, 0.0).sum()) > total:
            lo = mid
        else:
            hi = mid
    x = np.maximum(v - 0.5 * (lo + hi), 0.0)
    support = x > 0
    if not np.any(support):
        # degenerate plateau: spread the mass uniformly
        return np.full_like(v, total / v.size)
    x[support] += (total - x.sum()) / support.sum()
    return np.maximum(x, 0.0)


def project_psd_trace_ball(q, cap):
    """Project a Hermitian matrix onto {X >= 0, tr(X) <= cap}.

    The constraint set is unitarily invariant, so the projection acts on
    eigenvalues: clip at zero, and if the trace still exceeds the cap,
    project the eigenvalue vector onto the trace simplex.
    """
    q = herm(q)
    w, v = np.linalg.eigh(q)
    w = np.maximum(w, 0.0)
    if w.sum() > cap:
        w = project_trace_simplex(w, cap)
    return herm((v * w) @ v.conj().T)


def rng_from(*keys):
    """Deterministic generator keyed by a tuple of integers."""
    return np.random.default_rng([int(k) & 0xFFFFFFFF for k in keys])
