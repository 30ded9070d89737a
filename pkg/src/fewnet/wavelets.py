"""Maximal-overlap discrete wavelet transform (MODWT) and multi-resolution analysis.

The transform is the non-decimated, shift-equivariant variant computed by the
pyramid algorithm with circular boundary handling: every coefficient series
has the same length as the input. Filters are rescaled by 1/sqrt(2) relative
to their orthonormal DWT counterparts, which is what makes the transform a
tight frame (energy preserving) and the additive multi-resolution identity
exact. See Percival & Walden, "Wavelet Methods for Time Series Analysis",
chapter 5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_vector

# Scaling (low-pass) filter coefficients in Percival-Walden ordering.
# Values originate from the standard orthonormal filter tables (Daubechies
# extremal-phase, least-asymmetric, Coiflet, best-localized families) and were
# projected onto the exact orthonormality constraints so the filter identities
# below hold to machine precision rather than to table-printing precision.
_SCALING_COEFFS = {
    "haar": (
        0.7071067811865475,
        0.7071067811865475,
    ),
    "d8": (
        0.2303778133090186,
        0.7148465705528658,
        0.6308807679298692,
        -0.027983769417009398,
        -0.18703481171907807,
        0.03084138183571903,
        0.03288301166673785,
        -0.010597401785027855,
    ),
    "la8": (
        -0.07576571478900312,
        -0.029635527645942274,
        0.4976186676321048,
        0.8037387518055225,
        0.29785779560545106,
        -0.0992195435768692,
        -0.012603967262005184,
        0.032223100603836645,
    ),
    "c6": (
        -0.01565572813577509,
        -0.07273261951254328,
        0.38486484686432104,
        0.8525720202116341,
        0.3378976624580016,
        -0.07273261951254328,
    ),
    "bl14": (
        0.012015419282452793,
        0.01721337630047005,
        -0.06490800355149931,
        -0.06413128981631569,
        0.3602184608970229,
        0.7819215932907336,
        0.48361091569100895,
        -0.05680447687997785,
        -0.10101092086391569,
        0.04474234946905648,
        0.02046420757868782,
        -0.018126605131129278,
        -0.003283297847210016,
        0.002291833953710129,
    ),
}

_COEFF_TOL = 1e-12


@dataclass(frozen=True)
class WaveletFilter:
    """An orthonormal wavelet/scaling filter pair.

    Invariants (checked at construction): the wavelet filter h sums to zero,
    has unit energy, is orthogonal to its even shifts, and is the quadrature
    mirror of the scaling filter g, i.e. g_l = (-1)^(l+1) h_{L-1-l}.
    """

    name: str
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        g = np.array(self.g, dtype=float)
        h.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        self._validate()

    @property
    def length(self) -> int:
        return len(self.h)

    def _validate(self):
        h, g, L = self.h, self.g, self.length
        if len(g) != L:
            raise ValueError("wavelet and scaling filters must have equal length")
        if abs(h.sum()) > _COEFF_TOL:
            raise ValueError(f"{self.name}: wavelet filter must sum to zero, got {h.sum():.3e}")
        if abs((h**2).sum() - 1.0) > _COEFF_TOL:
            raise ValueError(f"{self.name}: wavelet filter must have unit energy")
        for n in range(1, L // 2):
            if abs(np.dot(h[: L - 2 * n], h[2 * n :])) > _COEFF_TOL:
                raise ValueError(f"{self.name}: wavelet filter not orthogonal to shift {2 * n}")
        mirror = np.array([(-1.0) ** (l + 1) * h[L - 1 - l] for l in range(L)])
        if np.abs(mirror - g).max() > _COEFF_TOL:
            raise ValueError(f"{self.name}: scaling filter violates the quadrature-mirror relation")


def filter_coefficients(name: str) -> WaveletFilter:
    """Return the named filter from the built-in bank (haar, d8, la8, c6, bl14)."""
    try:
        g = np.asarray(_SCALING_COEFFS[name], dtype=float)
    except KeyError:
        known = ", ".join(sorted(_SCALING_COEFFS))
        raise ValueError(f"unknown wavelet filter {name!r}; choose one of: {known}") from None
    L = len(g)
    h = np.array([(-1.0) ** l * g[L - 1 - l] for l in range(L)])
    return WaveletFilter(name=name, h=h, g=g)


def default_level(n: int) -> int:
    """Decomposition depth for a training series of length n: floor(ln n), at least 1.

    Keeps the cost of the shift-invariant transform bounded as the sample
    grows; e.g. n = 203 gives K = 5.
    """
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    return max(1, int(np.floor(np.log(n))))


@dataclass(frozen=True)
class ModwtDecomposition:
    """K same-length wavelet coefficient series plus the final-level scaling series."""

    wavelet_coeffs: np.ndarray  # shape (K, N)
    scaling_coeffs: np.ndarray  # shape (N,)
    filter: WaveletFilter

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.wavelet_coeffs, dtype=float))
        v = np.asarray(self.scaling_coeffs, dtype=float)
        if w.shape[1] != v.shape[0]:
            raise ValueError("coefficient series lengths disagree")
        object.__setattr__(self, "wavelet_coeffs", w)
        object.__setattr__(self, "scaling_coeffs", v)

    @property
    def levels(self) -> int:
        return self.wavelet_coeffs.shape[0]

    @property
    def n_obs(self) -> int:
        return self.scaling_coeffs.shape[0]


@dataclass(frozen=True)
class MraDecomposition:
    """Additive multi-resolution analysis: input = smooth + sum of details."""

    details: np.ndarray  # shape (K, N)
    smooth: np.ndarray  # shape (N,)

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.details, dtype=float))
        s = np.asarray(self.smooth, dtype=float)
        if d.shape[1] != s.shape[0]:
            raise ValueError("detail and smooth lengths disagree")
        object.__setattr__(self, "details", d)
        object.__setattr__(self, "smooth", s)

    @property
    def levels(self) -> int:
        return self.details.shape[0]


def _circular_filter(x: np.ndarray, taps: np.ndarray, stride: int, sign: int) -> np.ndarray:
    """Circular convolution with `taps` upsampled by `stride`.

    sign=-1 gives the analysis direction (index t - stride*l mod N),
    sign=+1 the synthesis direction (index t + stride*l mod N).
    """
    n = len(x)
    idx = (np.arange(n)[:, None] + sign * stride * np.arange(len(taps))[None, :]) % n
    return x[idx] @ taps


def max_level(n: int, filter_length: int) -> int:
    """Largest K with equivalent-filter width (2^K - 1)(L - 1) + 1 <= n."""
    k = 0
    while (2 ** (k + 1) - 1) * (filter_length - 1) + 1 <= n:
        k += 1
    return k


def modwt(series, filt: WaveletFilter, levels: int) -> ModwtDecomposition:
    """Decompose a series with the MODWT pyramid algorithm.

    Level j convolves the previous level's scaling coefficients with the
    rescaled base filters (h/sqrt(2), g/sqrt(2)) upsampled by 2^(j-1), all
    indices taken mod N. Fails if the level-K equivalent filter is wider
    than the series.
    """
    x = as_vector(series, "series")
    n = len(x)
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if n < filt.length:
        raise ValueError(f"series length {n} is shorter than the filter length {filt.length}")
    widest = (2**levels - 1) * (filt.length - 1) + 1
    if widest > n:
        raise ValueError(
            f"level {levels} needs an equivalent filter of width {widest} > series length {n}; "
            f"maximum level for this series is {max_level(n, filt.length)}"
        )
    ht = filt.h / np.sqrt(2.0)
    gt = filt.g / np.sqrt(2.0)
    coeffs = np.empty((levels, n))
    v = x
    for j in range(1, levels + 1):
        stride = 2 ** (j - 1)
        coeffs[j - 1] = _circular_filter(v, ht, stride, sign=-1)
        v = _circular_filter(v, gt, stride, sign=-1)
    return ModwtDecomposition(wavelet_coeffs=coeffs, scaling_coeffs=v, filter=filt)


def _inverse_step(w: np.ndarray, v: np.ndarray, filt: WaveletFilter, level: int) -> np.ndarray:
    ht = filt.h / np.sqrt(2.0)
    gt = filt.g / np.sqrt(2.0)
    stride = 2 ** (level - 1)
    return _circular_filter(w, ht, stride, sign=+1) + _circular_filter(v, gt, stride, sign=+1)


def mra(dec: ModwtDecomposition) -> MraDecomposition:
    """Multi-resolution analysis of a decomposition.

    Each detail series is the synthesis of a single level's wavelet
    coefficients (all other inputs zeroed); the smooth is the synthesis of
    the final scaling coefficients. By construction
    smooth + sum(details) reproduces the analysed series.
    """
    n = dec.n_obs
    zero = np.zeros(n)
    details = np.empty((dec.levels, n))
    for j in range(dec.levels, 0, -1):
        v = _inverse_step(dec.wavelet_coeffs[j - 1], zero, dec.filter, j)
        for lower in range(j - 1, 0, -1):
            v = _inverse_step(zero, v, dec.filter, lower)
        details[j - 1] = v
    s = dec.scaling_coeffs
    for lower in range(dec.levels, 0, -1):
        s = _inverse_step(zero, s, dec.filter, lower)
    return MraDecomposition(details=details, smooth=s)


def reconstruct(decomposition: MraDecomposition) -> np.ndarray:
    """Element-wise sum of the smooth and all detail series."""
    if decomposition.details.shape[1] != decomposition.smooth.shape[0]:
        raise ValueError("detail and smooth lengths disagree")
    return decomposition.smooth + decomposition.details.sum(axis=0)


def equivalent_filters(filt: WaveletFilter, levels: int):
    """Explicit level-j MODWT filters built by cascade convolution.

    Returns (wavelet_filters, scaling_filters), each a list of arrays of
    width (2^j - 1)(L - 1) + 1. Applying these directly to the input by
    circular convolution reproduces the pyramid algorithm's output; they
    exist mainly so the pyramid can be verified against a direct O(N*L_j)
    computation.
    """
    ht = filt.h / np.sqrt(2.0)
    gt = filt.g / np.sqrt(2.0)
    hs, gs = [ht], [gt]
    for j in range(2, levels + 1):
        stride = 2 ** (j - 1)
        h_up = np.zeros(stride * (len(ht) - 1) + 1)
        g_up = np.zeros(stride * (len(gt) - 1) + 1)
        h_up[::stride] = ht
        g_up[::stride] = gt
        hs.append(np.convolve(h_up, gs[-1]))
        gs.append(np.convolve(g_up, gs[-1]))
    return hs, gs
