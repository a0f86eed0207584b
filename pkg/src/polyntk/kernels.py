"""Infinite-width neural tangent kernels for Hadamard-product networks.

All Gaussian expectations use ``w ~ N(0, I)`` with an explicit factor 2, so on
the unit sphere ``kappa1(x, x) = kappa2(x, x) = 1`` and the degree-N
polynomial-network kernel satisfies ``K(x, x) = 2N + 2``.

Every evaluator broadcasts over leading axes: ``x`` and ``xp`` are arrays of
shape ``(..., d)`` and the result has shape ``(...)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from polyntk.montecarlo import McEstimate, chunked_mean

__all__ = [
    "Family",
    "KernelModel",
    "KernelProfile",
    "kappa1",
    "kappa2",
    "kappa3",
    "kappa4",
    "pnn_ntk",
    "mlp_ntk",
    "mlp_ntk_compact",
    "mfn_ntk",
    "polynl_ntk_mc",
    "mc_kernel_oracle",
    "mc_kernel_oracle_batch",
    "theory_init_bound",
    "min_width",
]


class Family(str, enum.Enum):
    PNN = "pnn"
    MLP = "mlp"
    MFN = "mfn"
    POLYNL = "polynl"


def _pair(x, xp):
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape[-1] != xp.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {xp.shape[-1]}")
    return x, xp


def _angle_terms(x, xp):
    """Return (norm_x, norm_xp, inner, theta) with a domain check on zero norms."""
    x, xp = _pair(x, xp)
    nx = np.linalg.norm(x, axis=-1)
    nxp = np.linalg.norm(xp, axis=-1)
    if np.any(nx == 0.0) or np.any(nxp == 0.0):
        raise ValueError("arc-cosine kernels are undefined for zero-norm inputs")
    inner = np.sum(x * xp, axis=-1)
    # half-angle form stays accurate near theta = 0 and pi, unlike arccos
    u = x / nx[..., None]
    v = xp / nxp[..., None]
    theta = 2.0 * np.arctan2(np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1))
    return nx, nxp, inner, theta


def _arccos0(cos):
    return (np.pi - np.arccos(cos)) / np.pi


def _arccos1(cos):
    theta = np.arccos(cos)
    return (np.sin(theta) + (np.pi - theta) * cos) / np.pi


def kappa1(x, xp):
    """``2 E[relu'(w.x) relu'(w.xp)] = (pi - theta) / pi``."""
    _, _, _, theta = _angle_terms(x, xp)
    return (np.pi - theta) / np.pi


def kappa2(x, xp):
    """``2 E[relu(w.x) relu(w.xp)] = |x||xp| (sin theta + (pi - theta) cos theta) / pi``."""
    nx, nxp, _, theta = _angle_terms(x, xp)
    return nx * nxp * (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / np.pi


def _gauss_pair(x, xp):
    x, xp = _pair(x, xp)
    minus = np.exp(-0.5 * np.sum((x - xp) ** 2, axis=-1))
    plus = np.exp(-0.5 * np.sum((x + xp) ** 2, axis=-1))
    return minus, plus


def kappa3(x, xp):
    """``2 E[cos(w.x) cos(w.xp)]``."""
    minus, plus = _gauss_pair(x, xp)
    return minus + plus


def kappa4(x, xp):
    """``2 E[sin(w.x) sin(w.xp)]``."""
    minus, plus = _gauss_pair(x, xp)
    return minus - plus


def _check_degree(n):
    if int(n) != n or n < 2:
        raise ValueError(f"degree/depth must be an integer >= 2, got {n}")
    return int(n)


def pnn_ntk(degree, x, xp):
    """NTK of the degree-N polynomial network with ReLU factors.

    ``2N <x, xp> kappa1 kappa2^(N-1) + 2 kappa2^N``; N-homogeneous in each
    argument.
    """
    n = _check_degree(degree)
    nx, nxp, inner, theta = _angle_terms(x, xp)
    k1 = (np.pi - theta) / np.pi
    k2 = nx * nxp * (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / np.pi
    return 2 * n * inner * k1 * k2 ** (n - 1) + 2 * k2**n


def mfn_ntk(degree, x, xp):
    """NTK of the multiplicative filter network (sine factors)."""
    n = _check_degree(degree)
    x, xp = _pair(x, xp)
    inner = np.sum(x * xp, axis=-1)
    k3 = kappa3(x, xp)
    k4 = kappa4(x, xp)
    return 2 * n * inner * k3 * k4 ** (n - 1) + 2 * k4**n


def mlp_ntk(depth, x, xp):
    """ReLU fully-connected NTK by the layerwise covariance recursion.

    A depth-N network has N-1 hidden layers, so the recursion runs N-1 times
    starting from ``K_0 = Sigma_0 = <x, xp>``.
    """
    n = _check_degree(depth)
    nx, nxp, inner, theta = _angle_terms(x, xp)
    # ReLU with the factor 2 preserves the diagonal: Sigma_i(x, x) = |x|^2.
    scale = nx * nxp
    ntk = inner
    for _ in range(n - 1):
        sigma_dot = (np.pi - theta) / (2 * np.pi)
        corr = (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / np.pi
        ntk = scale * corr + 2 * ntk * sigma_dot
        theta = np.arccos(np.clip(corr, -1.0, 1.0))
    return ntk


def mlp_ntk_compact(depth, x, xp):
    """Same kernel as :func:`mlp_ntk`, evaluated from the unrolled sum-of-products form."""
    n = _check_degree(depth)
    nx, nxp, inner, theta = _angle_terms(x, xp)
    scale = nx * nxp
    g = [inner]
    g_dot = [None]
    for _ in range(1, n):
        g_dot.append(1.0 - theta / np.pi)
        corr = (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / np.pi
        g.append(scale * corr)
        theta = np.arccos(np.clip(corr, -1.0, 1.0))
    total = g[n - 1]
    for i in range(n - 1):
        term = g[i]
        for j in range(i + 1, n):
            term = term * g_dot[j]
        total = total + term
    return total


def theory_init_bound(degree, width, delta):
    """Width-dependent deviation bound for the empirical NTK at initialization.

    Returns ``(rho, bound)``; natural logarithms throughout.
    """
    n = _check_degree(degree)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    p = 2 * n - 1
    rho = (
        math.sqrt(2) ** p
        * math.sqrt(8)
        * math.e**3
        * (2 * math.pi) ** 0.25
        * math.exp(1 / 24)
        * (math.exp(2 / math.e) * p / 2) ** (p / 2)
    )
    bound = 4 * n * rho * math.e * math.sqrt(math.log(2 * n / delta) / width)
    return rho, bound


def min_width(degree, delta):
    """Smallest width for which the initialization bound applies."""
    n = _check_degree(degree)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.ceil(2 ** (4 * n - 2) * math.log(2 * n / delta) ** (2 * n - 1))


# --- Monte-Carlo evaluation ---------------------------------------------------

_ORACLE_INTEGRANDS = {
    "kappa1": lambda u, v: 2.0 * ((u > 0) & (v > 0)),
    "kappa2": lambda u, v: 2.0 * np.maximum(u, 0.0) * np.maximum(v, 0.0),
    "kappa3": lambda u, v: 2.0 * np.cos(u) * np.cos(v),
    "kappa4": lambda u, v: 2.0 * np.sin(u) * np.sin(v),
}


def mc_kernel_oracle(family, x, xp, samples, seed):
    """Brute-force estimate of one of the kappa expectations by sampling ``w``.

    ``family`` is one of ``"kappa1" .. "kappa4"``. Full ``d``-dimensional
    Gaussian vectors are drawn, so the estimate does not rely on any
    two-dimensional reduction.
    """
    try:
        integrand = _ORACLE_INTEGRANDS[family]
    except KeyError:
        raise ValueError(f"unknown oracle family {family!r}") from None
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise ValueError("dimension mismatch")
    d = x.size

    def draw(rng, count):
        w = rng.standard_normal((count, d))
        return integrand(w @ x, w @ xp)

    return chunked_mean(draw, samples, seed)


def mc_kernel_oracle_batch(family, X, XP, samples, seed):
    """:func:`mc_kernel_oracle` for many pairs at once.

    Row ``i`` of ``X`` is paired with row ``i`` of ``XP``. Every pair sees the
    same draws of ``w``, so each entry is a valid estimate on its own but the
    entries are correlated.
    """
    try:
        integrand = _ORACLE_INTEGRANDS[family]
    except KeyError:
        raise ValueError(f"unknown oracle family {family!r}") from None
    X = np.atleast_2d(np.asarray(X, dtype=float))
    XP = np.atleast_2d(np.asarray(XP, dtype=float))
    if X.shape != XP.shape:
        raise ValueError("X and XP must have the same shape")

    def draw(rng, count):
        w = rng.standard_normal((count, X.shape[1]))
        return integrand(w @ X.T, w @ XP.T)

    return chunked_mean(draw, samples, seed)


def polynl_gate_response(y2, gate):
    """``y2^T (Diag(tau) - tau tau^T)(y2 * y2)`` with ``tau = softmax(gate * y2^2)``.

    ``gate`` has shape ``(s,)``; returns shape ``(s,)``.
    """
    sq = y2 * y2
    z = gate[:, None] * sq[None, :]
    z -= z.max(axis=1, keepdims=True)
    tau = np.exp(z)
    tau /= tau.sum(axis=1, keepdims=True)
    return tau @ (y2 * sq) - (tau @ y2) * (tau @ sq)


def polynl_ntk_mc(block, x, xp, samples, seed):
    """Monte-Carlo NTK of a single softmax-gated non-local block.

    Only the query/key weights are trained; the first-layer features
    ``y2 = relu(W1 x)`` come from ``block`` (a :class:`~polyntk.nets.PolyNLSpec`)
    and the expectation runs over the scalar gate ``w3 * w4``.
    """
    from polyntk.nets import init_params

    params = init_params(block)
    w1 = params.layers[0]
    y2 = np.maximum(w1 @ np.asarray(x, dtype=float), 0.0)
    y2p = np.maximum(w1 @ np.asarray(xp, dtype=float), 0.0)

    def draw(rng, count):
        gate = rng.standard_normal(count) * rng.standard_normal(count)
        return 4.0 * polynl_gate_response(y2, gate) * polynl_gate_response(y2p, gate)

    return chunked_mean(draw, samples, seed)


# --- kernel objects ------------------------------------------------------------


@dataclass(frozen=True)
class KernelProfile:
    """Dot-product form ``kappa(t)`` of a kernel restricted to the unit sphere in D variables."""

    dot_to_value: Callable[[np.ndarray], np.ndarray]
    ambient_dim: int

    def __call__(self, t):
        return self.dot_to_value(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class KernelModel:
    """An analytic NTK family with fixed degree (or depth) and input dimension.

    For ``Family.POLYNL`` the kernel is a Monte-Carlo estimate; ``width`` and
    ``seed`` fix the first-layer features and ``mc_samples`` the sample budget.
    """

    family: Family
    degree: int
    input_dim: int
    mc_samples: int | None = None
    seed: int = 0
    width: int = 64

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        _check_degree(self.degree)
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")

    def __call__(self, x, xp):
        if self.family is Family.PNN:
            return pnn_ntk(self.degree, x, xp)
        if self.family is Family.MLP:
            return mlp_ntk(self.degree, x, xp)
        if self.family is Family.MFN:
            return mfn_ntk(self.degree, x, xp)
        from polyntk.nets import PolyNLSpec

        block = PolyNLSpec(width=self.width, input_dim=self.input_dim, seed=self.seed)
        x = np.asarray(x, dtype=float)
        xp = np.asarray(xp, dtype=float)
        samples = self.mc_samples or 4096
        if x.ndim == 1 and xp.ndim == 1:
            return polynl_ntk_mc(block, x, xp, samples, self.seed).value
        x, xp = np.broadcast_arrays(x, xp)
        out = np.empty(x.shape[:-1])
        for idx in np.ndindex(out.shape):
            out[idx] = polynl_ntk_mc(block, x[idx], xp[idx], samples, self.seed).value
        return out

    def profile(self, ambient_dim=None):
        """Unit-sphere profile ``t -> K(x, xp)`` with ``<x, xp> = t``."""
        if self.family is Family.POLYNL:
            raise ValueError("the non-local kernel is not a dot-product kernel")
        dim = self.input_dim if ambient_dim is None else ambient_dim
        if dim < 2:
            raise ValueError("a sphere profile needs ambient dimension >= 2")
        n = self.degree

        if self.family is Family.PNN:

            def value(t):
                t = np.clip(t, -1.0, 1.0)
                k2 = _arccos1(t)
                return 2 * n * t * _arccos0(t) * k2 ** (n - 1) + 2 * k2**n

        elif self.family is Family.MLP:

            def value(t):
                t = np.clip(t, -1.0, 1.0)
                sigma = t
                ntk = t
                for _ in range(n - 1):
                    c = np.clip(sigma, -1.0, 1.0)
                    ntk = _arccos1(c) + ntk * _arccos0(c)
                    sigma = _arccos1(c)
                return ntk

        else:

            def value(t):
                t = np.clip(t, -1.0, 1.0)
                minus = np.exp(-(1.0 - t))
                plus = np.exp(-(1.0 + t))
                k3 = minus + plus
                k4 = minus - plus
                return 2 * n * t * k3 * k4 ** (n - 1) + 2 * k4**n

        return KernelProfile(value, dim)
