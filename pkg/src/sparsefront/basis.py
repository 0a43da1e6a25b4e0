"""Analysis/synthesis transform pairs over R^N.

Provides the bases used by the sparsifying front end and the ensemble
simulations: identity, seeded random orthonormal, orthonormal DCT-II, and
the biorthogonal CDF 9/7 wavelet for images.

The CDF 9/7 transform is implemented with the standard four-step lifting
factorization (Daubechies & Sweldens 1998) of the Antonini et al. (1992)
9/7 filter pair, with whole-sample symmetric boundary extension.  Subbands
are scaled so the transform matches direct convolution with the sqrt(2)-
normalized analysis filters; with that normalization the transform is
close to (but not exactly) orthonormal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "Basis",
    "BasisInfo",
    "IdentityBasis",
    "RandomOrthonormalBasis",
    "DctBasis",
    "Cdf97Basis",
    "make_basis",
    "haar_columns",
]

# CDF 9/7 lifting coefficients (Daubechies & Sweldens 1998, Table 5).
LIFT_ALPHA = -1.586134342059924
LIFT_BETA = -0.052980118572961
LIFT_GAMMA = 0.882911075530934
LIFT_DELTA = 0.443506852043971
# Subband scaling: sqrt(2) / 1.230174104914001.  Approximation samples are
# multiplied by this, detail samples divided, which reproduces the
# sqrt(2)-normalized Antonini analysis filters exactly.
LIFT_ZETA = 1.1496043988602418


@dataclass(frozen=True)
class BasisInfo:
    """Column/row l1 norms of a basis, as used by the support-preservation
    certificate.

    M is the maximum l1 norm over synthesis columns.  For biorthogonal
    bases the analysis rows differ from the synthesis columns, so their
    maximum l1 norm is carried separately; ``m_certificate`` is the larger
    of the two and is the conservative constant the certificate uses.
    """

    per_column_l1: np.ndarray
    analysis_row_l1: np.ndarray
    M: float
    M_analysis: float

    @property
    def m_certificate(self) -> float:
        return max(self.M, self.M_analysis)


class Basis:
    """Invertible linear transform pair: ``analyze`` maps a signal to its
    coefficient vector, ``synthesize`` maps coefficients back.

    Both accept arrays of shape (..., N) and operate on the last axis.
    Instances are immutable after construction and safe to share across
    threads.
    """

    kind: str = "abstract"
    is_orthonormal: bool = False

    def __init__(self, n: int, shape: tuple[int, int] | None = None):
        self.N = int(n)
        self.shape = shape

    def analyze(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def synthesize(self, c: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def column(self, k: int) -> np.ndarray:
        """Synthesis column psi_k, materialized as synthesize(e_k)."""
        if not 0 <= k < self.N:
            raise IndexError(f"basis column {k} out of range for N={self.N}")
        e = np.zeros(self.N)
        e[k] = 1.0
        return self.synthesize(e)

    def _check_dim(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.N:
            raise ValueError(f"expected last axis {self.N}, got {v.shape[-1]}")
        return v

    def synthesis_matrix(self) -> np.ndarray:
        """Full synthesis operator; column k is psi_k."""
        return self.synthesize(np.eye(self.N)).T

    def analysis_matrix(self) -> np.ndarray:
        """Full analysis operator; row k is the analysis vector for
        coefficient k (equals psi_k^T for orthonormal bases)."""
        return self.analyze(np.eye(self.N)).T

    @cached_property
    def info(self) -> BasisInfo:
        syn_l1 = np.abs(self.synthesis_matrix()).sum(axis=0)
        if self.is_orthonormal:
            ana_l1 = syn_l1
        else:
            ana_l1 = np.abs(self.analysis_matrix()).sum(axis=1)
        return BasisInfo(
            per_column_l1=syn_l1,
            analysis_row_l1=ana_l1,
            M=float(syn_l1.max()),
            M_analysis=float(ana_l1.max()),
        )


class IdentityBasis(Basis):
    kind = "identity"
    is_orthonormal = True

    def analyze(self, x):
        return self._check_dim(x).copy()

    def synthesize(self, c):
        return self._check_dim(c).copy()


class RandomOrthonormalBasis(Basis):
    """Haar-style random orthonormal basis from QR of a seeded Gaussian
    matrix, with the sign of each column fixed by the R diagonal so the
    result is deterministic."""

    kind = "random_orthonormal"
    is_orthonormal = True

    def __init__(self, n: int, seed: int = 0):
        super().__init__(n)
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        self._q = haar_columns(self.N, self.N, rng)

    def analyze(self, x):
        return self._check_dim(x) @ self._q

    def synthesize(self, c):
        return self._check_dim(c) @ self._q.T


class DctBasis(Basis):
    """Orthonormal DCT-II basis; separable 2-D when a shape is given."""

    kind = "dct"
    is_orthonormal = True

    def __init__(self, n: int, shape: tuple[int, int] | None = None):
        if shape is not None and shape[0] * shape[1] != n:
            raise ValueError(f"shape {shape} inconsistent with N={n}")
        super().__init__(n, shape)

    def analyze(self, x):
        x = self._check_dim(x)
        if self.shape is None:
            return scipy.fft.dct(x, type=2, norm="ortho", axis=-1)
        img = x.reshape(x.shape[:-1] + self.shape)
        out = scipy.fft.dctn(img, type=2, norm="ortho", axes=(-2, -1))
        return out.reshape(x.shape)

    def synthesize(self, c):
        c = self._check_dim(c)
        if self.shape is None:
            return scipy.fft.idct(c, type=2, norm="ortho", axis=-1)
        img = c.reshape(c.shape[:-1] + self.shape)
        out = scipy.fft.idctn(img, type=2, norm="ortho", axes=(-2, -1))
        return out.reshape(c.shape)


def _dwt1d(x: np.ndarray, axis: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """One CDF 9/7 lifting level along ``axis``.

    Returns (approx, detail) with ceil(n/2) and floor(n/2) samples.  The
    neighbor clamping at the ends implements whole-sample symmetric
    extension of the signal.
    """
    x = np.moveaxis(np.asarray(x, dtype=float), axis, -1)
    n = x.shape[-1]
    if n < 2:
        raise ValueError("cdf97 level needs at least 2 samples")
    e = x[..., 0::2].copy()
    d = x[..., 1::2].copy()
    ne, no = e.shape[-1], d.shape[-1]

    def e_right():
        if ne == no:
            return np.concatenate([e[..., 1:], e[..., -1:]], axis=-1)
        return e[..., 1:]

    def d_left():
        return np.concatenate([d[..., :1], d[..., : ne - 1]], axis=-1)

    def d_right():
        if ne == no:
            return d
        return np.concatenate([d, d[..., -1:]], axis=-1)

    d += LIFT_ALPHA * (e[..., :no] + e_right())
    e += LIFT_BETA * (d_left() + d_right())
    d += LIFT_GAMMA * (e[..., :no] + e_right())
    e += LIFT_DELTA * (d_left() + d_right())
    e *= LIFT_ZETA
    d /= LIFT_ZETA
    return np.moveaxis(e, -1, axis), np.moveaxis(d, -1, axis)


def _idwt1d(a: np.ndarray, d: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`_dwt1d`; lifting steps undone in reverse order."""
    e = np.moveaxis(np.asarray(a, dtype=float), axis, -1).copy()
    dd = np.moveaxis(np.asarray(d, dtype=float), axis, -1).copy()
    ne, no = e.shape[-1], dd.shape[-1]
    n = ne + no
    e /= LIFT_ZETA
    dd *= LIFT_ZETA

    def e_right():
        if ne == no:
            return np.concatenate([e[..., 1:], e[..., -1:]], axis=-1)
        return e[..., 1:]

    def d_left():
        return np.concatenate([dd[..., :1], dd[..., : ne - 1]], axis=-1)

    def d_right():
        if ne == no:
            return dd
        return np.concatenate([dd, dd[..., -1:]], axis=-1)

    e -= LIFT_DELTA * (d_left() + d_right())
    dd -= LIFT_GAMMA * (e[..., :no] + e_right())
    e -= LIFT_BETA * (d_left() + d_right())
    dd -= LIFT_ALPHA * (e[..., :no] + e_right())

    out = np.empty(e.shape[:-1] + (n,))
    out[..., 0::2] = e
    out[..., 1::2] = dd
    return np.moveaxis(out, -1, axis)


class Cdf97Basis(Basis):
    """Multilevel 2-D CDF 9/7 wavelet on row-major flattened images.

    Coefficient layout of the flat vector, fixed so support indices are
    stable:

      1. the coarsest approximation band, row-major;
      2. for each level from coarsest to finest, the three detail bands
         in the order ``lh`` (lowpass vertical / highpass horizontal),
         ``hl`` (highpass vertical / lowpass horizontal), ``hh``
         (highpass both), each row-major.

    Band sizes follow ceil/floor halving, so any rows x cols >= 2 works
    without padding and the transform is a bijection on R^N.
    """

    kind = "cdf97"
    is_orthonormal = False

    def __init__(self, shape: tuple[int, int], levels: int = 3):
        rows, cols = int(shape[0]), int(shape[1])
        super().__init__(rows * cols, (rows, cols))
        if not 1 <= levels <= 6:
            raise ValueError("levels must be in 1..6")
        self.levels = int(levels)
        # Per-level geometry, finest first: (rows_in, cols_in) at each level.
        sizes = [(rows, cols)]
        for _ in range(self.levels):
            r, c = sizes[-1]
            if r < 2 or c < 2:
                raise ValueError(
                    f"shape {shape} too small for {levels} decomposition levels"
                )
            sizes.append(((r + 1) // 2, (c + 1) // 2))
        self._sizes = sizes

    def _forward_bands(self, img: np.ndarray):
        """Decompose (..., r, c) into (coarse_ll, [per-level detail triples]),
        details ordered coarsest-to-finest."""
        ll = img
        details = []
        for _ in range(self.levels):
            a, d = _dwt1d(ll, axis=-1)
            aa, ad = _dwt1d(a, axis=-2)
            da, dd = _dwt1d(d, axis=-2)
            ll = aa
            details.append((da, ad, dd))  # (lh, hl, hh)
        details.reverse()
        return ll, details

    def analyze(self, x):
        x = self._check_dim(x)
        img = x.reshape(x.shape[:-1] + self.shape)
        ll, details = self._forward_bands(img)
        lead = x.shape[:-1]
        parts = [ll.reshape(lead + (-1,))]
        for lh, hl, hh in details:
            parts += [b.reshape(lead + (-1,)) for b in (lh, hl, hh)]
        return np.concatenate(parts, axis=-1)

    def synthesize(self, c):
        c = self._check_dim(c)
        lead = c.shape[:-1]
        pos = 0

        def take(r, cc):
            nonlocal pos
            block = c[..., pos : pos + r * cc].reshape(lead + (r, cc))
            pos += r * cc
            return block

        rc, cc = self._sizes[self.levels]
        ll = take(rc, cc)
        for lvl in range(self.levels, 0, -1):
            r_in, c_in = self._sizes[lvl - 1]
            r_lo, c_lo = self._sizes[lvl]
            lh = take(r_lo, c_in - c_lo)
            hl = take(r_in - r_lo, c_lo)
            hh = take(r_in - r_lo, c_in - c_lo)
            a = _idwt1d(ll, hl, axis=-2)
            d = _idwt1d(lh, hh, axis=-2)
            ll = _idwt1d(a, d, axis=-1)
        return ll.reshape(lead + (self.N,))

    def band_slices(self) -> dict[str, slice]:
        """Index ranges of each band in the flat coefficient vector."""
        out = {}
        rc, cc = self._sizes[self.levels]
        pos = rc * cc
        out[f"ll{self.levels}"] = slice(0, pos)
        for lvl in range(self.levels, 0, -1):
            r_in, c_in = self._sizes[lvl - 1]
            r_lo, c_lo = self._sizes[lvl]
            for name, count in (
                ("lh", r_lo * (c_in - c_lo)),
                ("hl", (r_in - r_lo) * c_lo),
                ("hh", (r_in - r_lo) * (c_in - c_lo)),
            ):
                out[f"{name}{lvl}"] = slice(pos, pos + count)
                pos += count
        return out


def haar_columns(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First k columns of a Haar-distributed random orthogonal matrix.

    QR of an n x k Gaussian matrix with column signs fixed so the R
    diagonal is positive, which makes the draw deterministic and
    Haar-correct.
    """
    g = rng.standard_normal((n, k))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def make_basis(
    kind: str,
    n: int | None = None,
    shape: tuple[int, int] | None = None,
    seed: int = 0,
    levels: int = 3,
) -> Basis:
    """Construct a basis by kind name (CLI/config entry point)."""
    if kind == "identity":
        return IdentityBasis(n)
    if kind == "random_orthonormal":
        return RandomOrthonormalBasis(n, seed=seed)
    if kind == "dct":
        return DctBasis(n if n is not None else shape[0] * shape[1], shape=shape)
    if kind == "cdf97":
        if shape is None:
            raise ValueError("cdf97 basis requires an image shape")
        return Cdf97Basis(shape, levels=levels)
    raise ValueError(f"unknown basis kind: {kind!r}")
