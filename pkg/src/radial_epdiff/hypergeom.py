"""Pochhammer symbols and Gauss hypergeometric 2F1 on [0, 1].

Only what the Green kernels need is provided: terminating polynomials
(a = -m), the general series for |z| < 1 with analytic continuation near
z = 1, the Gauss value at z = 1 and the Euler integral as an independent
check of the series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "HypergeomParams",
    "QuadratureError",
    "pochhammer",
    "is_nonpositive_integer",
    "signed_lgamma",
    "terminating_coefficients",
    "f21_terminating",
    "f21_terminating_derivative",
    "f21",
    "gauss_value_at_one",
    "f21_euler_integral",
    "contiguous_residual",
    "derivative_identity_residuals",
]

_INT_TOL = 1e-12


class QuadratureError(ArithmeticError):
    """Raised when the Euler-integral quadrature fails its convergence check."""


@dataclass(frozen=True)
class HypergeomParams:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if is_nonpositive_integer(self.c):
            raise ValueError(f"c={self.c} is a non-positive integer")


def is_nonpositive_integer(x: float) -> bool:
    return x <= _INT_TOL and abs(x - round(x)) <= _INT_TOL


def pochhammer(x: float, j: int) -> float:
    """Rising factorial ``x (x+1) ... (x+j-1)``; 1 for ``j == 0``."""
    if j < 0:
        raise ValueError("j must be non-negative")
    out = 1.0
    for i in range(j):
        out *= x + i
    return out


def signed_lgamma(x: float) -> tuple[float, int]:
    """Return ``(log|Gamma(x)|, sign Gamma(x))``.

    Valid for negative non-integer ``x`` as well; raises at the poles.
    """
    if is_nonpositive_integer(x):
        raise ValueError(f"Gamma has a pole at {x}")
    if x > 0:
        return math.lgamma(x), 1
    # Gamma alternates sign between consecutive negative integers.
    sign = -1 if math.floor(-x) % 2 == 0 else 1
    return math.lgamma(x), sign


def terminating_coefficients(m: int, b: float, c: float) -> np.ndarray:
    """Coefficients ``(-1)^j binom(m,j) (b)_j/(c)_j`` for ``j = 0..m``."""
    if m < 0 or int(m) != m:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    m = int(m)
    for j in range(m):
        if abs(c + j) < _INT_TOL:
            raise ValueError(f"(c)_j vanishes for c={c}, j={j + 1}")
    coeffs = np.empty(m + 1)
    coeffs[0] = 1.0
    for j in range(m):
        coeffs[j + 1] = coeffs[j] * (-(m - j) / (j + 1)) * (b + j) / (c + j)
    return coeffs


def _check_c(m: int, c: float) -> None:
    if is_nonpositive_integer(c) and -round(c) < m:
        raise ValueError(f"c={c} makes (c)_j vanish below the truncation order m={m}")


def _terminating_exact(m: int, b: float, c: float, z: float) -> float:
    # The alternating terms cancel heavily near z = 1 for large b, so scalar
    # calls are summed in exact rational arithmetic and rounded once.
    if m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    fb, fc, fz = Fraction(b), Fraction(c), Fraction(z)
    term = Fraction(1)
    total = Fraction(1)
    for j in range(m):
        term = term * (-(m - j)) * (fb + j) * fz / ((j + 1) * (fc + j))
        total += term
    return float(total)


def f21_terminating(m: int, b: float, c: float, z):
    """Evaluate the polynomial ``F(-m, b; c; z)``.

    Array ``z`` uses Horner's rule on the precomputed coefficients; scalar
    ``z`` is summed exactly in rational arithmetic and rounded once.
    """
    _check_c(m, c)
    if np.ndim(z) == 0:
        return _terminating_exact(int(m), b, c, float(z))
    coeffs = terminating_coefficients(m, b, c)
    z = np.asarray(z, dtype=float)
    acc = np.full_like(z, coeffs[-1])
    for coef in coeffs[-2::-1]:
        acc = acc * z + coef
    return float(acc) if acc.ndim == 0 else acc


def f21_terminating_derivative(m: int, b: float, c: float, z):
    """d/dz of ``F(-m, b; c; z)`` by term-wise differentiation."""
    _check_c(m, c)
    coeffs = terminating_coefficients(m, b, c)
    z = np.asarray(z, dtype=float)
    if m == 0:
        out = np.zeros_like(z)
    else:
        dcoeffs = coeffs[1:] * np.arange(1, m + 1)
        out = np.full_like(z, dcoeffs[-1])
        for coef in dcoeffs[-2::-1]:
            out = out * z + coef
    return float(out) if out.ndim == 0 else out


def _series(a: float, b: float, c: float, z: float, rtol: float, max_terms: int) -> float:
    term = 1.0
    total = 1.0
    for j in range(max_terms):
        term *= (a + j) * (b + j) / ((c + j) * (j + 1)) * z
        total += term
        if abs(term) <= rtol * abs(total) and j > 2:
            return total
    raise ArithmeticError(f"2F1 series did not converge in {max_terms} terms (z={z})")


_CONTINUE_FROM = 0.5


def _continued(a: float, b: float, c: float, z: float, rtol: float, max_terms: int) -> float:
    """Analytic continuation along ``[0.5, z]`` by re-expanding the hypergeometric ODE.

    ``z(1-z) F'' + (c - (a+b+1) z) F' - ab F = 0`` is expanded in Taylor
    series about successive centres; each step covers at most half the
    distance to the singular point 1, so every local series converges
    geometrically. The plain series near ``z = 1`` decays only algebraically.
    """
    z0 = _CONTINUE_FROM
    f = _series(a, b, c, z0, rtol, max_terms)
    df = a * b / c * _series(a + 1.0, b + 1.0, c + 1.0, z0, rtol, max_terms)
    q1 = -(a + b + 1.0)
    while z0 < z:
        x = min(z - z0, 0.5 * (1.0 - z0))
        p0 = z0 * (1.0 - z0)
        p1 = 1.0 - 2.0 * z0
        q0 = c + q1 * z0
        # scaled Taylor terms w_m = y_m x^m keep the recurrence away from under/overflow
        w_prev, w_cur = f, df * x
        val = w_prev + w_cur
        slope = w_cur  # sum of m w_m
        small = 0
        for m in range(max_terms):
            w_next = -((p1 * m * (m + 1) + q0 * (m + 1)) * x * w_cur
                       + (-m * (m - 1) + q1 * m - a * b) * x * x * w_prev) / (p0 * (m + 1) * (m + 2))
            val += w_next
            slope += (m + 2) * w_next
            w_prev, w_cur = w_cur, w_next
            small = small + 1 if abs(w_next) * (m + 2) <= rtol * (abs(val) + abs(slope)) else 0
            if small >= 3:
                break
        else:
            raise ArithmeticError(f"2F1 continuation did not converge at z={z0 + x}")
        der = slope / x
        f, df = val, der
        z0 = z if x == z - z0 else z0 + x
    return f


def f21(a: float, b: float, c: float, z: float, *, rtol: float = 1e-17, max_terms: int = 100_000) -> float:
    """General ``2F1(a, b; c; z)`` for real parameters.

    Terminating parameters (``a`` or ``b`` a non-positive integer) use the
    polynomial; otherwise the series is summed for ``|z| < 1``, continued
    analytically for ``0.9 < z < 1``, and the Gauss value is used at ``z = 1``.
    """
    if is_nonpositive_integer(a):
        return f21_terminating(-int(round(a)), b, c, z)
    if is_nonpositive_integer(b):
        return f21_terminating(-int(round(b)), a, c, z)
    if is_nonpositive_integer(c):
        raise ValueError(f"c={c} is a non-positive integer")
    if z == 1.0:
        return gauss_value_at_one(a, b, c)
    if abs(z) >= 1.0:
        raise ValueError("series evaluation needs |z| < 1 for non-terminating parameters")
    if z > 0.9:
        return _continued(a, b, c, z, rtol, max_terms)
    return _series(a, b, c, z, rtol, max_terms)


def gauss_value_at_one(a: float, b: float, c: float) -> float:
    """``F(a,b;c;1) = Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b))``."""
    if c - a - b <= 0:
        raise ValueError(f"need c-a-b > 0, got {c - a - b}")
    num1, s1 = signed_lgamma(c)
    num2, s2 = signed_lgamma(c - a - b)
    den1, s3 = signed_lgamma(c - a)
    den2, s4 = signed_lgamma(c - b)
    return s1 * s2 * s3 * s4 * math.exp(num1 + num2 - den1 - den2)


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(invalid="ignore", divide="ignore"):
        x, w = roots_jacobi(n, alpha, beta)
    return x, w


def _euler_quadrature(a: float, b: float, c: float, z: float, nodes: int) -> float:
    # t = sin^2(theta) maps the Beta weight to sin^(2b-1) cos^(2c-2b-1); the
    # remaining algebraic endpoint behaviour is absorbed into a Gauss-Jacobi
    # weight in x with theta = pi/4 (1 + x).
    alpha = 2.0 * (c - b) - 1.0
    beta = 2.0 * b - 1.0
    x, w = _jacobi_rule(nodes, alpha, beta)
    theta = 0.25 * math.pi * (1.0 + x)
    half = 0.25 * math.pi
    # sin(theta) / (theta) and cos(theta) / (pi/2 - theta) stay smooth and positive.
    sin_ratio = np.sin(theta) / (half * (1.0 + x))
    cos_ratio = np.cos(theta) / (half * (1.0 - x))
    smooth = sin_ratio**beta * cos_ratio**alpha * (1.0 - z * np.sin(theta) ** 2) ** (-a)
    # d(theta) = half dx, and theta^beta (pi/2-theta)^alpha = half^(alpha+beta) (1+x)^beta (1-x)^alpha
    integral = 2.0 * half ** (alpha + beta + 1.0) * float(np.dot(w, smooth))
    log_norm = math.lgamma(c) - math.lgamma(b) - math.lgamma(c - b)
    return math.exp(log_norm) * integral


def f21_euler_integral(params: HypergeomParams, z: float, *, nodes: int = 64, rtol: float = 1e-10) -> float:
    """Evaluate ``F(a,b;c;z)`` from Euler's integral representation.

    Requires ``c > b > 0`` and ``0 <= z < 1``. After the endpoint factors are
    absorbed into the Jacobi weight the integrand is smooth, so a modest rule
    is already exact to ~1e-13; larger scipy Jacobi rules lose accuracy in
    their own nodes and weights. The result at ``nodes`` points is compared
    with the half-resolution rule; disagreement beyond ``rtol``
    raises :class:`QuadratureError`.
    """
    a, b, c = params.a, params.b, params.c
    if not (c > b > 0):
        raise ValueError(f"Euler integral needs c > b > 0, got b={b}, c={c}")
    if not (0.0 <= z < 1.0):
        raise ValueError(f"z must lie in [0, 1), got {z}")
    fine = _euler_quadrature(a, b, c, z, nodes)
    coarse = _euler_quadrature(a, b, c, z, nodes // 2)
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-300):
        raise QuadratureError(
            f"Euler integral not converged: {coarse!r} ({nodes // 2} nodes) vs {fine!r} ({nodes} nodes)"
        )
    return fine


def contiguous_residual(a: float, b: float, c: float, z: float) -> float:
    """Residual of ``(a-1)F(a,b-1) - (b-1)F(a-1,b) - (a-b)F(a-1,b-1)`` at ``(c, z)``."""
    t1 = (a - 1.0) * f21(a, b - 1.0, c, z)
    t2 = (b - 1.0) * f21(a - 1.0, b, c, z)
    t3 = (a - b) * f21(a - 1.0, b - 1.0, c, z)
    return t1 - t2 - t3


def derivative_identity_residuals(a: float, b: float, c: float, z: float,
                                  h_rel: float = 1e-4) -> tuple[float, float, float]:
    """Relative errors of the three weighted derivative identities, by finite differences.

    1. ``d/dz [z^c F(a,b;c+1;z)] = c z^(c-1) F(a,b;c;z)``
    2. ``d/dz [z^(a-1) F(a-1,b;c;z)] = (a-1) z^(a-2) F(a,b;c;z)``
    3. ``d/dz [z^(b-1) F(a,b-1;c;z)] = (b-1) z^(b-2) F(a,b;c;z)``

    The derivative uses the fourth-order five-point stencil with step
    ``h_rel * z``; large powers of ``z`` make a fixed step too coarse near 0.
    Each error is scaled by ``max(|rhs|, |weighted F| / z)`` so vanishing
    prefactors do not blow it up.
    """
    h = h_rel * z
    if not (0 < h_rel < 0.5 and 0 < z and z + 2 * h < 1.0):
        raise ValueError("need 0 < z, 0 < h_rel < 1/2 and z (1 + 2 h_rel) < 1")
    base = f21(a, b, c, z)
    cases = (
        (lambda x: x**c * f21(a, b, c + 1.0, x), c * z ** (c - 1.0) * base),
        (lambda x: x ** (a - 1.0) * f21(a - 1.0, b, c, x), (a - 1.0) * z ** (a - 2.0) * base),
        (lambda x: x ** (b - 1.0) * f21(a, b - 1.0, c, x), (b - 1.0) * z ** (b - 2.0) * base),
    )
    out = []
    for g, rhs in cases:
        fd = (g(z - 2 * h) - 8.0 * g(z - h) + 8.0 * g(z + h) - g(z + 2 * h)) / (12.0 * h)
        scale = max(abs(rhs), abs(g(z)) / z)
        out.append(abs(fd - rhs) / scale if scale > 0 else abs(fd))
    return tuple(out)
