"""Gegenbauer expansions of dot-product kernels on the sphere.

Dimension convention: inputs live on the unit sphere in ``D`` variables
(``S^{D-1}``), the Gegenbauer index is ``gamma = (D - 2) / 2`` and harmonic
multiplicities use ``F(D - 1, k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "GegenbauerSeries",
    "SpectralEstimate",
    "HarmonicMixture",
    "gamma_for_dim",
    "gegenbauer_eval",
    "gegenbauer_table",
    "fdk",
    "pochhammer",
    "linearization_coeffs",
    "kernel_profile_coeffs",
    "eigenvalues_from_coeffs",
    "decay_slope",
    "harmonic_target_eval",
    "residual_projections",
    "sample_sphere",
]


def gamma_for_dim(ambient_dim):
    if ambient_dim < 3:
        raise ValueError(f"ambient dimension must be >= 3 for gamma > 0, got {ambient_dim}")
    return (ambient_dim - 2) / 2


def gegenbauer_table(kmax, gamma, t, normalized=False):
    """Rows ``C_0(t) .. C_kmax(t)`` from the three-term recurrence."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    t = np.asarray(t, dtype=float)
    out = np.empty((kmax + 1,) + t.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 2 * gamma * t
    for k in range(2, kmax + 1):
        out[k] = (2 * (k + gamma - 1) * t * out[k - 1] - (k + 2 * gamma - 2) * out[k - 2]) / k
    if normalized:
        at_one = np.array([_c_at_one(k, gamma) for k in range(kmax + 1)])
        out /= at_one.reshape((-1,) + (1,) * t.ndim)
    return out


def _c_at_one(k, gamma):
    # C_k^(gamma)(1) = (2 gamma)_k / k!
    return math.exp(special.gammaln(k + 2 * gamma) - special.gammaln(2 * gamma) - special.gammaln(k + 1))


def gegenbauer_eval(k, gamma, t, normalization="standard"):
    """``C_k^(gamma)(t)``, or ``C_k(t) / C_k(1)`` when ``normalization="normalized"``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if normalization not in ("standard", "normalized"):
        raise ValueError(f"unknown normalization {normalization!r}")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-12):
        raise ValueError("t must lie in [-1, 1]")
    return gegenbauer_table(k, gamma, t, normalized=normalization == "normalized")[k]


def fdk(D, k):
    """``F(d, k) = (2k + d - 1) / k * binom(k + d - 2, d - 1)`` with d = D - 1; F(d, 0) = 1."""
    d = D - 1
    if d < 1:
        raise ValueError("need D >= 2")
    if k == 0:
        return 1.0
    return (2 * k + d - 1) / k * math.comb(k + d - 2, d - 1)


def pochhammer(v, k):
    return math.prod(v + i for i in range(k))


def linearization_coeffs(p, q, v):
    """Coefficients with ``C_p C_q = sum_s lam_s C_{p+q-2s}`` (standard normalization)."""
    if v <= 0:
        raise ValueError(f"v must be positive, got {v}")
    out = []
    for s in range(min(p, q) + 1):
        top = p + q - 2 * s
        lam = (
            (top + v) / (p + q + v - s)
            * pochhammer(v, s) * pochhammer(v, p - s) * pochhammer(v, q - s)
            / (math.factorial(s) * math.factorial(p - s) * math.factorial(q - s))
            * pochhammer(2 * v, p + q - s) / pochhammer(v, p + q - s)
            * math.factorial(top) / pochhammer(2 * v, top)
        )
        out.append(lam)
    return out


@dataclass(frozen=True)
class GegenbauerSeries:
    gamma: float
    coeffs: np.ndarray
    normalization: str = "normalized"

    def __call__(self, t):
        table = gegenbauer_table(len(self.coeffs) - 1, self.gamma, t, self.normalization == "normalized")
        return np.tensordot(self.coeffs, table, axes=1)


@dataclass(frozen=True)
class SpectralEstimate:
    mu: np.ndarray
    fitted_slope: float | None = None
    fit_range: tuple | None = None
    retained: np.ndarray | None = field(default=None, repr=False)


def _angular_rule(nodes, gamma):
    """Gauss-Legendre rule in the angle ``phi = arccos t`` with ``sin^(2 gamma)`` folded in.

    Arc-cosine kernels are smooth in ``phi`` even though they have square-root
    branch points in ``t`` at ``t = +-1``; integrating in angle keeps the rule
    spectrally accurate for them.
    """
    x, w = special.roots_legendre(nodes)
    phi = 0.5 * np.pi * (x + 1.0)
    return np.cos(phi), 0.5 * np.pi * w * np.sin(phi) ** (2 * gamma)


def kernel_profile_coeffs(profile, kmax, nodes=None):
    """Coefficients ``c_k`` with ``kappa(t) = sum_k c_k G_k(t)``, ``G_k(1) = 1``.

    ``c_k = int kappa G_k w / int G_k^2 w`` with ``w(t) = (1 - t^2)^(gamma - 1/2)``,
    both integrals from one fixed Gauss rule (default ``8 * kmax`` nodes).
    """
    gamma = gamma_for_dim(profile.ambient_dim)
    if nodes is None:
        nodes = max(8 * kmax, 16)
    if nodes < 4 * kmax:
        raise ValueError(f"{nodes} nodes cannot resolve degree {kmax}; need >= {4 * kmax}")
    t, w = _angular_rule(nodes, gamma)
    values = profile(t)
    basis = gegenbauer_table(kmax, gamma, t, normalized=True)
    coeffs = (basis * w) @ values / ((basis**2) @ w)
    return GegenbauerSeries(gamma, coeffs)


def eigenvalues_from_coeffs(series, D):
    mult = np.array([fdk(D, k) for k in range(len(series.coeffs))])
    return SpectralEstimate(series.coeffs / mult)


def decay_slope(estimate, k_lo, k_hi, parity_filter=True, floor=1e-14):
    """Least-squares slope of ``log mu_k`` against ``log k`` over ``k_lo <= k <= k_hi``.

    With ``parity_filter`` only even ``k`` are used; values ``<= floor`` are
    dropped.
    """
    mu = np.asarray(estimate.mu if isinstance(estimate, SpectralEstimate) else estimate, dtype=float)
    k = np.arange(mu.size)
    keep = (k >= max(k_lo, 1)) & (k <= k_hi) & (mu > floor)
    if parity_filter:
        keep &= k % 2 == 0
    if keep.sum() < 5:
        raise ValueError(f"only {int(keep.sum())} usable eigenvalues in [{k_lo}, {k_hi}]; need 5")
    slope, _ = np.polyfit(np.log(k[keep]), np.log(mu[keep]), 1)
    return float(slope)


def sample_sphere(rng, n, D):
    x = rng.standard_normal((n, D))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@dataclass(frozen=True)
class HarmonicMixture:
    """``(1 / normalizer) * sum_k A_k G_k(<x, zeta_k>)`` on the sphere in D variables."""

    degrees: tuple
    amplitudes: tuple
    anchors: np.ndarray
    normalizer: float = 1.0

    def __post_init__(self):
        anchors = np.asarray(self.anchors, dtype=float)
        anchors = anchors.reshape(len(self.degrees), anchors.shape[-1] if anchors.ndim else 0)
        if len(self.amplitudes) != len(self.degrees):
            raise ValueError("one amplitude per degree")
        if len(self.degrees) and not np.allclose(np.linalg.norm(anchors, axis=1), 1.0, atol=1e-12):
            raise ValueError("anchor directions must be unit vectors")
        object.__setattr__(self, "anchors", anchors)

    @property
    def ambient_dim(self):
        return self.anchors.shape[1]

    @classmethod
    def random(cls, degrees, D, rng, amplitudes=None):
        degrees = tuple(degrees)
        amps = tuple(1.0 for _ in degrees) if amplitudes is None else tuple(amplitudes)
        return cls(degrees, amps, sample_sphere(rng, len(degrees), D), float(sum(abs(a) for a in amps)) or 1.0)

    def components(self, X):
        """Unscaled component values ``G_k(<x, zeta_k>)``, shape ``(n, |K|)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.degrees:
            return np.zeros((X.shape[0], 0))
        gamma = gamma_for_dim(X.shape[1])
        dots = np.clip(X @ self.anchors.T, -1.0, 1.0)
        cols = [gegenbauer_eval(k, gamma, dots[:, j], "normalized") for j, k in enumerate(self.degrees)]
        return np.stack(cols, axis=1)


def harmonic_target_eval(mixture, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    comps = mixture.components(x)
    out = comps @ np.asarray(mixture.amplitudes, dtype=float) / mixture.normalizer if mixture.degrees else comps.sum(axis=1)
    return float(out[0]) if single else out


def residual_projections(residual, component_values):
    """Normalized projection length of the residual onto each component.

    ``|<r, c_j>| / (sqrt(n) * |c_j|_2)``, i.e. the empirical inner product
    ``(1/n) <r, c_j>`` divided by the empirical RMS norm of ``c_j``.
    """
    r = np.asarray(residual, dtype=float).ravel()
    C = np.asarray(component_values, dtype=float).reshape(r.size, -1)
    norms = np.linalg.norm(C, axis=0)
    norms = np.where(norms > 0, norms, 1.0)
    return np.abs(r @ C) / (math.sqrt(r.size) * norms)
