"""Sparsifying front end: top-K hard thresholding, support/projection
operators, front-end application, and the high-SNR support-preservation
certificate.

All operations are pure given an immutable :class:`FrontEndConfig`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import Basis

__all__ = [
    "FrontEndConfig",
    "SupportSet",
    "SnrReport",
    "sparse_k",
    "support",
    "proj",
    "apply_front_end",
    "check_high_snr",
]


@dataclass(frozen=True)
class FrontEndConfig:
    """Basis plus retained-coefficient count K (sparsity rho = K/N)."""

    basis: Basis
    K: int

    def __post_init__(self):
        if not 1 <= self.K <= self.basis.N:
            raise ValueError(f"K={self.K} outside 1..{self.basis.N}")

    @classmethod
    def from_rho(cls, basis: Basis, rho: float) -> "FrontEndConfig":
        """K = round(rho * N), rounding half away from zero, clamped to
        [1, N]."""
        if not 0 < rho <= 1:
            raise ValueError(f"rho={rho} outside (0, 1]")
        k = int(math.floor(rho * basis.N + 0.5))
        return cls(basis, min(max(k, 1), basis.N))

    @property
    def rho(self) -> float:
        return self.K / self.basis.N


@dataclass(frozen=True)
class SupportSet:
    """Ascending indices of the retained (nonzero) coefficients."""

    indices: tuple[int, ...]

    def __len__(self):
        return len(self.indices)

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.indices)] = True
        return m


@dataclass(frozen=True)
class SnrReport:
    """High-SNR certificate evaluation.

    ``lam`` is the magnitude of the smallest retained coefficient and
    ``M`` the certificate constant (max basis-function l1 norm; for
    biorthogonal bases the larger of the synthesis-column and
    analysis-row maxima, which is conservative).  ``certified`` holds
    iff snr = lam/epsilon exceeds 2M.
    """

    lam: float
    epsilon: float
    M: float
    snr: float
    certified: bool


def _topk_order(c: np.ndarray, k: int) -> np.ndarray:
    # Stable sort on descending magnitude: equal magnitudes keep their
    # original order, so ties resolve to the lower index.
    return np.argsort(-np.abs(c), axis=-1, kind="stable")[..., :k]


def sparse_k(c: np.ndarray, k: int) -> np.ndarray:
    """Keep the K largest-magnitude entries of ``c`` (last axis), zero the
    rest.  Ties break toward the lower index."""
    c = np.asarray(c, dtype=float)
    n = c.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"K={k} outside 1..{n}")
    keep = np.zeros(c.shape, dtype=bool)
    np.put_along_axis(keep, _topk_order(c, k), True, axis=-1)
    return np.where(keep, c, 0.0)


def support(cfg: FrontEndConfig, x: np.ndarray) -> SupportSet:
    """Indices of the nonzero entries of sparse_k(analyze(x), K).

    Fewer than K indices are returned only when the coefficient vector
    has fewer than K nonzeros.
    """
    c = cfg.basis.analyze(np.asarray(x, dtype=float))
    if c.ndim != 1:
        raise ValueError("support expects a single sample")
    kept = sparse_k(c, cfg.K)
    return SupportSet(tuple(int(i) for i in np.flatnonzero(kept)))


def proj(cfg: FrontEndConfig, v: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Component of ``v`` in the span of the basis functions retained for
    ``x``: sum over k in supp(x) of psi_k <psi~_k, v>."""
    s = support(cfg, x)
    cv = cfg.basis.analyze(np.asarray(v, dtype=float))
    masked = np.where(s.mask(cfg.basis.N), cv, 0.0)
    return cfg.basis.synthesize(masked)


def apply_front_end(cfg: FrontEndConfig, xbar: np.ndarray) -> np.ndarray:
    """Analyze, keep the top-K coefficients, synthesize.  Accepts a single
    sample or a batch (..., N)."""
    c = cfg.basis.analyze(np.asarray(xbar, dtype=float))
    return cfg.basis.synthesize(sparse_k(c, cfg.K))


def check_high_snr(cfg: FrontEndConfig, x: np.ndarray, epsilon: float) -> SnrReport:
    """Evaluate the support-preservation certificate snr = lam/eps > 2M.

    For an input whose coefficient vector is exactly K-sparse, a
    certified report guarantees supp(x + e) = supp(x) for every
    perturbation with max-norm at most epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = cfg.basis.analyze(np.asarray(x, dtype=float))
    kept = sparse_k(c, cfg.K)
    nonzero = np.abs(kept[kept != 0.0])
    m = cfg.basis.info.m_certificate
    if nonzero.size == 0:
        return SnrReport(lam=0.0, epsilon=epsilon, M=m, snr=0.0, certified=False)
    lam = float(nonzero.min())
    snr = lam / epsilon
    return SnrReport(lam=lam, epsilon=epsilon, M=m, snr=snr, certified=snr > 2 * m)
