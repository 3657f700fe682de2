"""Two-way full-duplex link with a passive eavesdropper.

Nodes a and b exchange data simultaneously in the same band. Each node
transmits from n_tx antennas under a covariance matrix and receives on a
single antenna through a residual self-interference loop (fraction zeta
of own transmit power survives cancellation) plus thermal noise. A
single-antenna eavesdropper hears both transmissions as a two-user
multiple access channel.

Naming: h_xy is the channel from node x's transmit array to node y's
receive antenna, so h_aa and h_bb are the self-interference loops. All
rates are base-2 (bit/s/Hz).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ._num import cvec, herm, qform
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class SystemParams:
    """Static link parameters; powers are linear scale."""

    n_tx: int
    sigma_a2: float = 1.0
    sigma_b2: float = 1.0
    sigma_e2: float = 1.0
    zeta_a: float = 0.01
    zeta_b: float = 0.01
    p_a: float = 1.0
    p_b: float = 1.0

    def __post_init__(self):
        if int(self.n_tx) < 1:
            raise ValueError(f"n_tx must be >= 1, got {self.n_tx}")
        object.__setattr__(self, "n_tx", int(self.n_tx))
        for name in ("sigma_a2", "sigma_b2", "sigma_e2", "p_a", "p_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("zeta_a", "zeta_b"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


_CHANNEL_FIELDS = ("h_ab", "h_ae", "h_aa", "h_ba", "h_be", "h_bb")


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all six channel vectors, common length N."""

    h_ab: np.ndarray
    h_ae: np.ndarray
    h_aa: np.ndarray
    h_ba: np.ndarray
    h_be: np.ndarray
    h_bb: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.h_ab).size
        for name in _CHANNEL_FIELDS:
            object.__setattr__(self, name, cvec(getattr(self, name), n, name))

    @property
    def n_tx(self):
        return self.h_ab.size


@dataclass(frozen=True)
class CovariancePair:
    """Transmit covariances of both nodes.

    Inputs must be Hermitian to 1e-10; they are symmetrized on entry to
    absorb round-off. PSD and trace-budget checks need SystemParams and
    live in validate_pair.
    """

    q_a: np.ndarray
    q_b: np.ndarray

    def __post_init__(self):
        for name in ("q_a", "q_b"):
            q = np.asarray(getattr(self, name), dtype=complex)
            if q.ndim != 2 or q.shape[0] != q.shape[1]:
                raise ShapeError(name, "square matrix", q.shape)
            dev = float(np.max(np.abs(q - q.conj().T), initial=0.0))
            if dev > 1e-10 * max(1.0, float(np.max(np.abs(q), initial=0.0))):
                raise ValueError(f"{name} is not Hermitian (deviation {dev:.3e})")
            object.__setattr__(self, name, herm(q))


def validate_pair(pair: CovariancePair, p: SystemParams):
    """Check PSD and power-budget invariants of a finished design."""
    for q, budget, name in ((pair.q_a, p.p_a, "q_a"), (pair.q_b, p.p_b, "q_b")):
        if q.shape[0] != p.n_tx:
            raise ShapeError(name, f"({p.n_tx}, {p.n_tx})", q.shape)
        w = np.linalg.eigvalsh(q)
        if w[0] < -1e-9 * max(w[-1], 0.0) - 1e-15:
            raise ValueError(f"{name} not PSD: min eigenvalue {w[0]:.3e}")
        tr = float(np.real(np.trace(q)))
        if tr > budget * (1.0 + 1e-8):
            raise ValueError(f"trace({name}) = {tr:.6g} exceeds budget {budget:.6g}")


def _check_dims(pair: CovariancePair, ch: ChannelSet):
    if pair.q_a.shape[0] != ch.n_tx:
        raise ShapeError("covariance/channel", f"({ch.n_tx}, {ch.n_tx})", pair.q_a.shape)


def sinr_a(pair: CovariancePair, ch: ChannelSet, p: SystemParams) -> float:
    """Ratio seen at node a while it transmits: partner signal over residual
    self-interference plus noise."""
    _check_dims(pair, ch)
    sig = qform(ch.h_ba, pair.q_b)
    den = p.sigma_a2 + p.zeta_a * qform(ch.h_aa, pair.q_a)
    return sig / den


def sinr_b(pair: CovariancePair, ch: ChannelSet, p: SystemParams) -> float:
    _check_dims(pair, ch)
    sig = qform(ch.h_ab, pair.q_a)
    den = p.sigma_b2 + p.zeta_b * qform(ch.h_bb, pair.q_b)
    return sig / den


def rate_a(pair, ch, p) -> float:
    return float(np.log2(1.0 + sinr_a(pair, ch, p)))


def rate_b(pair, ch, p) -> float:
    return float(np.log2(1.0 + sinr_b(pair, ch, p)))


def rate_eve(pair: CovariancePair, ch: ChannelSet, p: SystemParams) -> float:
    """Eavesdropper sum rate, decoding both streams jointly."""
    _check_dims(pair, ch)
    rx = qform(ch.h_ae, pair.q_a) + qform(ch.h_be, pair.q_b)
    return float(np.log2(1.0 + rx / p.sigma_e2))


def sum_secrecy_rate(pair, ch, p) -> float:
    return max(0.0, rate_a(pair, ch, p) + rate_b(pair, ch, p) - rate_eve(pair, ch, p))


def sample_channels(rng_seed, p: SystemParams) -> ChannelSet:
    """Circularly-symmetric complex Gaussian channels, unit variance per
    entry, deterministic for a given seed."""
    rng = np.random.default_rng(rng_seed)
    draws = {}
    for name in _CHANNEL_FIELDS:
        re = rng.standard_normal(p.n_tx)
        im = rng.standard_normal(p.n_tx)
        draws[name] = (re + 1j * im) / np.sqrt(2.0)
    return ChannelSet(**draws)


# -- config serialization ---------------------------------------------------
#
# Structured dicts with the field names above as keys; complex entries are
# [re, im] pairs so the files stay plain JSON.


def _vec_to_cfg(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).ravel()]


def _vec_from_cfg(rows, what):
    try:
        return np.array([complex(r, i) for r, i in rows])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad complex vector for {what}: {exc}") from None


def _mat_to_cfg(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _mat_from_cfg(rows, what):
    try:
        return np.array([[complex(r, i) for r, i in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad complex matrix for {what}: {exc}") from None


def params_to_config(p: SystemParams) -> dict:
    return {f.name: getattr(p, f.name) for f in fields(SystemParams)}


def params_from_config(d: dict) -> SystemParams:
    try:
        return SystemParams(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad system block: {exc}") from None


def channels_to_config(ch: ChannelSet) -> dict:
    return {name: _vec_to_cfg(getattr(ch, name)) for name in _CHANNEL_FIELDS}


def channels_from_config(d: dict) -> ChannelSet:
    missing = [k for k in _CHANNEL_FIELDS if k not in d]
    if missing:
        raise ConfigError(f"channels block missing keys: {missing}")
    return ChannelSet(**{k: _vec_from_cfg(d[k], k) for k in _CHANNEL_FIELDS})
