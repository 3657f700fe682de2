"""Small shared helpers; every expected value lives in the test files."""

import numpy as np


def crandn(rng, *shape):
    """Circularly-symmetric complex normal, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_psd(rng, n, trace=None):
    a = crandn(rng, n, n)
    q = a @ a.conj().T
    q = 0.5 * (q + q.conj().T)
    if trace is not None:
        q = q * (trace / float(np.real(np.trace(q))))
    return q


def random_feasible(rng, n, budget):
    """Random PSD matrix with trace uniformly inside the budget."""
    return random_psd(rng, n, trace=budget * rng.uniform(0.2, 1.0))


def fd_hermitian_gradient(f, w0, step=1e-5):
    """Central differences of a real function of a Hermitian matrix.

    Reconstructs the Hermitian G with df = Re tr(G D) from directional
    derivatives along e_i e_i^H, e_i e_j^H + e_j e_i^H, and the
    imaginary pairing.
    """
    n = w0.shape[0]
    g = np.zeros((n, n), dtype=complex)
    for i in range(n):
        d = np.zeros((n, n), dtype=complex)
        d[i, i] = 1.0
        g[i, i] = (f(w0 + step * d) - f(w0 - step * d)) / (2 * step)
        for j in range(i + 1, n):
            d1 = np.zeros((n, n), dtype=complex)
            d1[i, j] = d1[j, i] = 1.0
            re = (f(w0 + step * d1) - f(w0 - step * d1)) / (2 * step)
            d2 = np.zeros((n, n), dtype=complex)
            d2[i, j] = 1.0j
            d2[j, i] = -1.0j
            im = (f(w0 + step * d2) - f(w0 - step * d2)) / (2 * step)
            g[i, j] = 0.5 * (re + 1.0j * im)
            g[j, i] = np.conj(g[i, j])
    return g
