"""Finite-width Hadamard-product networks with hand-derived Jacobians.

Forward pass of the degree-N polynomial network (``family="pnn"``)::

    y_1 = sqrt(2) relu(W_1 x)
    y_n = sqrt(2) relu(W_n x) * y_{n-1}        n = 2..N
    f   = sqrt(2/m) w_out . y_N

The multiplicative filter network (``"mfn"``) swaps ``relu`` for ``sin``. One
``sqrt(2/m)`` at the readout and ``sqrt(2)`` per factor is the scaling under
which ``<grad f(x), grad f(xp)>`` converges to :func:`polyntk.kernels.pnn_ntk`
as ``m -> inf``; putting ``sqrt(2/m)`` on every factor would send the tangent
kernel to zero for ``N >= 2``.

Parameters are flattened as ``W_1`` (row-major), ..., ``W_N``, then ``w_out``.
For the non-local block only ``w_q`` and ``w_k`` are trainable and the flat
vector is ``[w_q, w_k]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from polyntk.kernels import Family

__all__ = [
    "ArchSpec",
    "PolyNLSpec",
    "NetParams",
    "init_params",
    "flatten",
    "unflatten",
    "forward",
    "pnn_forward",
    "mfn_forward",
    "polynl_forward",
    "jacobian",
    "jacobian_matrix",
    "loss_gradient",
    "empirical_ntk",
    "finite_diff_check",
]


@dataclass(frozen=True)
class ArchSpec:
    family: Family
    degree: int
    width: int
    input_dim: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.MLP:
            raise ValueError("finite MLPs are not part of this package; use the analytic kernel")
        if self.family is Family.POLYNL:
            raise ValueError("use PolyNLSpec for the non-local block")
        if self.degree < 1 or self.width < 1 or self.input_dim < 1:
            raise ValueError("degree, width and input_dim must be positive")


@dataclass(frozen=True)
class PolyNLSpec:
    width: int
    input_dim: int
    seed: int = 0

    family = Family.POLYNL
    degree = 1

    def __post_init__(self):
        if self.width < 1 or self.input_dim < 1:
            raise ValueError("width and input_dim must be positive")


@dataclass(frozen=True)
class NetParams:
    """Weights of one network. ``layers`` has shape ``(N, m, d)``.

    For the non-local block ``layers`` holds the single matrix ``W_1`` and
    ``w_out`` plays the role of the readout ``w_2``.
    """

    family: Family
    layers: np.ndarray
    w_out: np.ndarray
    w_q: np.ndarray | None = None
    w_k: np.ndarray | None = None
    w_v: float | None = None

    @property
    def degree(self):
        return self.layers.shape[0]

    @property
    def width(self):
        return self.layers.shape[1]

    @property
    def input_dim(self):
        return self.layers.shape[2]


def init_params(spec):
    """Independent standard-normal weights, reproducible from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    m, d = spec.width, spec.input_dim
    if spec.family is Family.POLYNL:
        layers = rng.standard_normal((1, m, d))
        w_out = rng.standard_normal(m)
        w_q = rng.standard_normal(m)
        w_k = rng.standard_normal(m)
        w_v = float(rng.standard_normal())
        return NetParams(Family.POLYNL, layers, w_out, w_q, w_k, w_v)
    layers = rng.standard_normal((spec.degree, m, d))
    w_out = rng.standard_normal(m)
    return NetParams(spec.family, layers, w_out)


def flatten(params):
    if params.family is Family.POLYNL:
        return np.concatenate([params.w_q, params.w_k])
    return np.concatenate([params.layers.ravel(), params.w_out])


def unflatten(params, theta):
    """Inverse of :func:`flatten`, reusing the frozen parts of ``params``."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != flatten(params).size:
        raise ValueError(f"expected {flatten(params).size} parameters, got {theta.size}")
    if params.family is Family.POLYNL:
        m = params.width
        return replace(params, w_q=theta[:m].copy(), w_k=theta[m:].copy())
    split = params.layers.size
    layers = theta[:split].reshape(params.layers.shape).copy()
    return replace(params, layers=layers, w_out=theta[split:].copy())


def _as_batch(params, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != params.input_dim:
        raise ValueError(f"input has dimension {X.shape[1]}, network expects {params.input_dim}")
    return X, single


def _preacts(params, X):
    return np.matmul(X, params.layers.transpose(0, 2, 1))  # (N, n, m)


def _hadamard_product(params, X):
    pre = _preacts(params, X)
    act = np.maximum(pre, 0.0) if params.family is Family.PNN else np.sin(pre)
    return math.sqrt(2) ** act.shape[0] * np.prod(act, axis=0)


def _hadamard_terms(params, X):
    """Per-factor activations, their derivatives and leave-one-out products.

    All arrays have shape ``(N, n, m)`` except ``full`` which is ``(n, m)``.
    """
    pre = _preacts(params, X)
    if params.family is Family.PNN:
        act = math.sqrt(2) * np.maximum(pre, 0.0)
        dact = math.sqrt(2) * (pre > 0)
    else:
        act = math.sqrt(2) * np.sin(pre)
        dact = math.sqrt(2) * np.cos(pre)
    n_factors = act.shape[0]
    prefix = np.ones((n_factors + 1,) + act.shape[1:])
    suffix = np.ones((n_factors + 1,) + act.shape[1:])
    for k in range(n_factors):
        prefix[k + 1] = prefix[k] * act[k]
        suffix[n_factors - k - 1] = suffix[n_factors - k] * act[n_factors - k - 1]
    others = prefix[:-1] * suffix[1:]
    return act, dact, others, prefix[-1]


def _polynl_terms(params, X):
    y2 = np.maximum(X @ params.layers[0].T, 0.0)  # (n, m)
    sq = y2 * y2
    gate = params.w_q * params.w_k  # (m,)
    logits = gate[None, :, None] * sq[:, None, :]  # (n, m_rows, m_cols)
    logits -= logits.max(axis=2, keepdims=True)
    phi = np.exp(logits)
    phi /= phi.sum(axis=2, keepdims=True)
    y3 = params.w_v * np.einsum("nij,nj->ni", phi, y2)
    resp = np.einsum("nij,nj->ni", phi, y2 * sq) - np.einsum("nij,nj->ni", phi, y2) * np.einsum(
        "nij,nj->ni", phi, sq
    )
    return y3, resp


def forward(params, X):
    """Network output for one input ``(d,)`` or a batch ``(n, d)``."""
    X, single = _as_batch(params, X)
    m = params.width
    if params.family is Family.POLYNL:
        y3, _ = _polynl_terms(params, X)
        out = math.sqrt(2 / m) * y3 @ params.w_out
    else:
        out = math.sqrt(2 / m) * _hadamard_product(params, X) @ params.w_out
    return float(out[0]) if single else out


def _require(params, family):
    if params.family is not family:
        raise ValueError(f"expected {family.value} parameters, got {params.family.value}")


def pnn_forward(params, x):
    _require(params, Family.PNN)
    return forward(params, x)


def mfn_forward(params, x):
    _require(params, Family.MFN)
    return forward(params, x)


def polynl_forward(params, x):
    _require(params, Family.POLYNL)
    return forward(params, x)


def _factor_grads(params, X):
    """Per-sample gradient weights: ``(G, out)`` with G of shape (N, n, m).

    ``d f(x_i) / d W_k[j, :] = G[k, i, j] * x_i`` and
    ``d f(x_i) / d w_out[j] = out[i, j]``.
    """
    c = math.sqrt(2 / params.width)
    if params.family is Family.PNN:
        # A ReLU product has nonzero gradient only where every factor is
        # active; there the leave-one-out product is full / act_k.
        pre = _preacts(params, X)
        active = np.all(pre > 0, axis=0)
        full = math.sqrt(2) ** pre.shape[0] * np.prod(np.maximum(pre, 0.0), axis=0)
        G = (c * params.w_out * full) / np.where(active, pre, 1.0)
        return G, c * full
    _, dact, others, full = _hadamard_terms(params, X)
    G = c * params.w_out * others * dact
    return G, c * full


def _polynl_grads(params, X):
    c = math.sqrt(2 / params.width)
    _, resp = _polynl_terms(params, X)
    base = c * params.w_out * params.w_v * resp  # (n, m)
    return base * params.w_k, base * params.w_q


def jacobian_matrix(params, X):
    """Rows are the flattened gradients ``d f(x_i) / d theta``."""
    X, _ = _as_batch(params, X)
    if params.family is Family.POLYNL:
        gq, gk = _polynl_grads(params, X)
        return np.concatenate([gq, gk], axis=1)
    G, out = _factor_grads(params, X)
    n = X.shape[0]
    per_layer = G[:, :, :, None] * X[None, :, None, :]  # (N, n, m, d)
    per_layer = np.moveaxis(per_layer, 0, 1).reshape(n, -1)
    return np.concatenate([per_layer, out], axis=1)


def jacobian(params, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("jacobian takes a single input; use jacobian_matrix for batches")
    return jacobian_matrix(params, x)[0]


def loss_gradient(params, X, residual):
    """``J^T residual`` without materializing J; same flat layout as :func:`flatten`."""
    X, _ = _as_batch(params, X)
    r = np.asarray(residual, dtype=float)
    if params.family is Family.POLYNL:
        gq, gk = _polynl_grads(params, X)
        return np.concatenate([r @ gq, r @ gk])
    G, out = _factor_grads(params, X)
    grads = (X.T @ (G * r[:, None])).transpose(0, 2, 1)
    return np.concatenate([grads.ravel(), r @ out])


def empirical_ntk(params, X):
    """Gram matrix ``J J^T`` of the flattened Jacobian over the rows of ``X``."""
    X, _ = _as_batch(params, X)
    if params.family is Family.POLYNL:
        J = jacobian_matrix(params, X)
        K = J @ J.T
    else:
        G, out = _factor_grads(params, X)
        K = np.einsum("kim,kjm->ij", G, G) * (X @ X.T) + out @ out.T
    return 0.5 * (K + K.T)


def finite_diff_check(params, x, eps=1e-4, floor=1e-8):
    """Largest ``|analytic - central difference| / (|analytic| + floor)`` over all parameters."""
    theta = flatten(params)
    analytic = jacobian(params, x)
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] += eps
        up = forward(unflatten(params, bumped), x)
        bumped[i] -= 2 * eps
        down = forward(unflatten(params, bumped), x)
        numeric[i] = (up - down) / (2 * eps)
    return float(np.max(np.abs(analytic - numeric) / (np.abs(analytic) + floor)))
