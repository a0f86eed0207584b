"""Independent reference implementations used as test oracles.

None of these share code with the package: expectations are computed by
quadrature over the Gaussian measure, polynomials come from scipy, and
constants are evaluated with the decimal module.
"""

from __future__ import annotations

import math
from decimal import Decimal, getcontext

import numpy as np
from scipy import integrate, special


def _plane(x, xp):
    """Norms and angle of the pair; w.x and w.xp only see the 2-D span."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    nx, nxp = np.linalg.norm(x), np.linalg.norm(xp)
    u, v = x / nx, xp / nxp
    return nx, nxp, 2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v))


def relu_expectation(x, xp, order):
    """``2 E[s(w.x) s(w.xp)]`` with ``s`` the step (order 0) or ReLU (order 1).

    In polar coordinates the radial integral factors out:
    ``int_0^inf r^(2 order + 1) e^(-r^2/2) dr = 2^order * order!``.
    """
    nx, nxp, theta = _plane(x, xp)
    radial = 2.0**order * math.factorial(order)

    def angular(phi):
        a, b = math.cos(phi), math.cos(phi - theta)
        if a <= 0 or b <= 0:
            return 0.0
        return (a * b) ** order

    val, _ = integrate.quad(angular, -math.pi, math.pi, points=[theta - math.pi / 2, math.pi / 2], limit=200)
    scale = (nx * nxp) ** order
    return 2.0 * scale * radial * val / (2 * math.pi)


def trig_expectation(x, xp, fn, nodes=80):
    """``2 E[fn(w.x) fn(w.xp)]`` by a tensor Gauss-Hermite rule in the span of x, xp."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    basis, _ = np.linalg.qr(np.stack([x, xp], axis=1))
    a, b = basis.T @ x, basis.T @ xp
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    W = np.outer(w, w)
    u = a[0] * Z1 + a[1] * Z2
    v = b[0] * Z1 + b[1] * Z2
    return float(2.0 * np.sum(W * fn(u) * fn(v)))


def gaussian_relu_moments(s11, s12, s22):
    """``(E[relu(u) relu(v)], E[1{u>0} 1{v>0}])`` for a centered Gaussian pair, by quadrature."""
    # hand-rolled Cholesky so perfectly correlated pairs (x = +-xp) work
    l00 = math.sqrt(s11)
    L = np.array([[l00, 0.0], [s12 / l00, math.sqrt(max(s22 - (s12 / l00) ** 2, 0.0))]])

    # u = L00 cos(phi), v = R cos(phi - psi); both positive on one arc.
    psi = math.atan2(L[1, 1], L[1, 0])
    lo, hi = max(-math.pi / 2, psi - math.pi / 2), min(math.pi / 2, psi + math.pi / 2)

    def uv(phi):
        return L[0, 0] * math.cos(phi) * (L[1, 0] * math.cos(phi) + L[1, 1] * math.sin(phi))

    # radial factors: int r^3 e^(-r^2/2) = 2, int r e^(-r^2/2) = 1
    e_relu = 2.0 * integrate.quad(uv, lo, hi, epsabs=1e-15, epsrel=1e-13)[0] / (2 * math.pi)
    e_step = max(hi - lo, 0.0) / (2 * math.pi)
    return e_relu, e_step


def mlp_ntk_reference(depth, x, xp):
    """ReLU MLP NTK with every Gaussian expectation done by quadrature.

    Uses the He-scaled recursion: Sigma_i = 2 E[relu relu], Sigma_dot_i = E[1 1]
    (which is half of 2 E[1 1]), Theta_i = Sigma_i + 2 Theta_(i-1) Sigma_dot_i.
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    s11, s12, s22 = float(x @ x), float(x @ xp), float(xp @ xp)
    theta = s12
    for _ in range(depth - 1):
        e_relu, e_step = gaussian_relu_moments(s11, s12, s22)
        d11 = s11  # diagonal is preserved under the factor-2 scaling
        d22 = s22
        s12 = 2 * e_relu
        theta = s12 + 2 * theta * e_step
        s11, s22 = d11, d22
    return theta


def pnn_ntk_reference(degree, x, xp):
    k1 = relu_expectation(x, xp, 0)
    k2 = relu_expectation(x, xp, 1)
    inner = float(np.dot(x, xp))
    return 2 * degree * inner * k1 * k2 ** (degree - 1) + 2 * k2**degree


def gegenbauer_reference(k, gamma, t):
    return special.eval_gegenbauer(k, gamma, t)


def harmonic_count(D, k):
    """Dimension of degree-k spherical harmonics in D variables, from polynomial counts."""
    hom = lambda deg: math.comb(deg + D - 1, D - 1) if deg >= 0 else 0
    return hom(k) - hom(k - 2)


def gegenbauer_weight_integral(fn, gamma):
    val, _ = integrate.quad(lambda t: fn(t) * (1 - t * t) ** (gamma - 0.5), -1, 1, limit=400)
    return val


def mercer_coeff_reference(profile, k, gamma):
    """``c_k`` by adaptive quadrature in the angle (profile may have sqrt branch points)."""
    c1 = special.eval_gegenbauer(k, gamma, 1.0)
    g = lambda t: special.eval_gegenbauer(k, gamma, t) / c1

    def weighted(phi, f):
        t = math.cos(phi)
        return f(t) * math.sin(phi) ** (2 * gamma)

    num, _ = integrate.quad(weighted, 0, math.pi, args=(lambda t: profile(t) * g(t),), limit=400, epsabs=1e-14)
    den, _ = integrate.quad(weighted, 0, math.pi, args=(lambda t: g(t) ** 2,), limit=400, epsabs=1e-14)
    return num / den


def min_width_reference(degree, delta):
    getcontext().prec = 50
    ln = (Decimal(2 * degree) / Decimal(str(delta))).ln()
    value = Decimal(2) ** (4 * degree - 2) * ln ** (2 * degree - 1)
    return int(value.to_integral_value(rounding="ROUND_CEILING"))


def theory_bound_reference(degree, width, delta):
    getcontext().prec = 50
    D = Decimal
    e = D(1).exp()
    pi = D("3.14159265358979323846264338327950288419716939937510")
    p = 2 * degree - 1
    rho = (
        D(2).sqrt() ** p
        * D(8).sqrt()
        * e**3
        * (2 * pi) ** D("0.25")
        * (D(1) / 24).exp()
        * ((D(2) / e).exp() * D(p) / 2) ** (D(p) / 2)
    )
    bound = 4 * degree * rho * e * ((D(2 * degree) / D(str(delta))).ln() / D(width)).sqrt()
    return float(rho), float(bound)
