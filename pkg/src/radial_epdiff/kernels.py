"""Green kernels of (-Laplacian)^k acting on radial vector fields u(r) d_r.

For ``r <= s`` the kernel is ``delta_k(r, s) = r s phi_k(r, s)`` with

    phi_k(r, s) = C(k, n) s^(2k-2-n) F(1-k, n/2+1-k; n/2+1; r^2/s^2),

and since ``F`` is a polynomial of degree ``k-1`` in ``r^2/s^2`` the kernel is
a sum of ``k`` separable monomials. That expansion is what makes the
prefix-sum summation in :func:`greens_apply` (and in the solver) O(kN).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import hypergeom

__all__ = [
    "KernelSpec",
    "RadialGrid",
    "kernel_spec",
    "phi",
    "phi_hypergeometric",
    "delta",
    "d1_delta",
    "d2_delta",
    "kernel_matrix",
    "prefix_moment",
    "suffix_moment",
    "greens_apply",
    "greens_apply_naive",
    "iterated_kernel_residual",
]

DEFAULT_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    k: int
    n: int
    a: float
    b: float
    c: float
    norm: float
    coeffs: tuple[float, ...]

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def with_coeffs(self, coeffs) -> "KernelSpec":
        return KernelSpec(self.k, self.n, self.a, self.b, self.c, self.norm, tuple(float(c) for c in coeffs))


def _is_valid_pair(k: int, n: int) -> bool:
    return 1 <= k and 2 * k < n + 2


def kernel_spec(k: int, n: int) -> KernelSpec:
    """Build the kernel description for ``(-Laplacian)^k`` in dimension ``n``.

    Only integer ``k`` with ``1 <= k < n/2 + 1`` is accepted.
    """
    if isinstance(k, bool) or int(k) != k or int(n) != n:
        raise ValueError(f"k and n must be integers, got k={k!r}, n={n!r}")
    k, n = int(k), int(n)
    if n < 1:
        raise ValueError(f"dimension n must be positive, got {n}")
    if not _is_valid_pair(k, n):
        raise ValueError(f"k={k} outside the validity window 1 <= k < n/2 + 1 = {n / 2 + 1} (n={n})")
    a = 1.0 - k
    b = n / 2.0 + 1.0 - k
    c = n / 2.0 + 1.0
    log_norm = math.lgamma(b) - (2 * k - 1) * math.log(2.0) - math.lgamma(k) - math.lgamma(c)
    coeffs = hypergeom.terminating_coefficients(k - 1, b, c)
    return KernelSpec(k, n, a, b, c, math.exp(log_norm), tuple(float(x) for x in coeffs))


def _check_domain(r, s):
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("kernel needs s > 0")
    if np.any(r < 0) or np.any(r > s * (1 + 1e-15)):
        raise ValueError("kernel needs 0 <= r <= s")
    return r, s


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def phi(spec: KernelSpec, r, s):
    """``phi_k(r, s)`` for ``0 <= r <= s``, ``s > 0`` via the separable expansion."""
    r, s = _check_domain(r, s)
    k, n = spec.k, spec.n
    total = np.zeros(np.broadcast(r, s).shape)
    for j, d in enumerate(spec.coeffs):
        total = total + d * r ** (2 * j) * s ** (2 * k - 2 - n - 2 * j)
    return _out(spec.norm * total)


def phi_hypergeometric(spec: KernelSpec, r, s):
    """``phi_k`` evaluated directly from the terminating 2F1 (reference form)."""
    r, s = _check_domain(r, s)
    z = (r / s) ** 2
    f = hypergeom.f21_terminating(spec.k - 1, spec.b, spec.c, z)
    return _out(spec.norm * s ** (2 * spec.k - 2 - spec.n) * f)


def delta(spec: KernelSpec, r, s):
    r, s = _check_domain(r, s)
    k, n = spec.k, spec.n
    total = np.zeros(np.broadcast(r, s).shape)
    for j, d in enumerate(spec.coeffs):
        total = total + d * r ** (2 * j + 1) * s ** (2 * k - 1 - n - 2 * j)
    return _out(spec.norm * total)


def d1_delta(spec: KernelSpec, r, s):
    """Partial derivative of ``delta_k(r, s)`` in ``r``."""
    r, s = _check_domain(r, s)
    k, n = spec.k, spec.n
    total = np.zeros(np.broadcast(r, s).shape)
    for j, d in enumerate(spec.coeffs):
        rj = r ** (2 * j) if j else np.ones_like(r)
        total = total + d * (2 * j + 1) * rj * s ** (2 * k - 1 - n - 2 * j)
    return _out(spec.norm * total)


def d2_delta(spec: KernelSpec, r, s):
    """Partial derivative of ``delta_k(r, s)`` in ``s``."""
    r, s = _check_domain(r, s)
    k, n = spec.k, spec.n
    total = np.zeros(np.broadcast(r, s).shape)
    for j, d in enumerate(spec.coeffs):
        p = 2 * k - 1 - n - 2 * j
        total = total + d * p * r ** (2 * j + 1) * s ** (p - 1)
    return _out(spec.norm * total)


@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``0 = r_0 < ... < r_{N-1} = R_max`` with quadrature weights.

    ``weights`` are the composite trapezoid weights. Integrals against the
    Green kernel use :meth:`product_weights` instead: the smooth factor is
    interpolated linearly between nodes and the monomial ``s^e`` is integrated
    exactly, split into the half-cells left and right of each node.
    """

    nodes: np.ndarray
    weights: np.ndarray = field(init=False)
    _cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("first grid node must be exactly 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        h = np.diff(nodes)
        weights = np.concatenate(([0.0], 0.5 * h)) + np.concatenate((0.5 * h, [0.0]))
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_cache", {})

    @classmethod
    def uniform(cls, points: int, r_max: float) -> "RadialGrid":
        return cls(np.linspace(0.0, r_max, points))

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def product_weights(self, exponent: int) -> tuple[np.ndarray, np.ndarray]:
        """``(left, right)``: integrals of ``s^exponent`` times the hat function of each node.

        ``left[j]`` covers ``[r_{j-1}, r_j]`` and ``right[j]`` covers
        ``[r_j, r_{j+1}]``. For ``exponent == 0`` these are the trapezoid halves.
        """
        if exponent < 0 or int(exponent) != exponent:
            raise ValueError(f"exponent must be a non-negative integer, got {exponent}")
        exponent = int(exponent)
        cached = self._cache.get(exponent)
        if cached is not None:
            return cached
        lo = self.nodes[:-1, None]
        hi = self.nodes[1:, None]
        h = hi - lo
        x, w = np.polynomial.legendre.leggauss(exponent // 2 + 2)
        s = 0.5 * (lo + hi) + 0.5 * h * x[None, :]
        ws = 0.5 * h * w[None, :] * s**exponent
        from_lo = np.sum(ws * (hi - s) / h, axis=1)
        from_hi = np.sum(ws * (s - lo) / h, axis=1)
        left = np.concatenate(([0.0], from_hi))
        right = np.concatenate((from_lo, [0.0]))
        left.setflags(write=False)
        right.setflags(write=False)
        self._cache[exponent] = (left, right)
        return left, right


def prefix_moment(grid: RadialGrid, exponent: int, f: np.ndarray) -> np.ndarray:
    """``int_0^{r_i} s^exponent f(s) ds`` at every node (product trapezoid, O(N))."""
    left, right = grid.product_weights(exponent)
    full = (left + right) * f
    return np.concatenate(([0.0], np.cumsum(full)[:-1])) + left * f


def suffix_moment(grid: RadialGrid, exponent: int, f: np.ndarray) -> np.ndarray:
    """``int_{r_i}^{R_max} s^exponent f(s) ds`` at every node (product trapezoid, O(N))."""
    left, right = grid.product_weights(exponent)
    full = (left + right) * f
    tail = np.cumsum(full[::-1])[::-1]
    return np.concatenate((tail[1:], [0.0])) + right * f


def prefix_matrix(grid: RadialGrid, exponent: int) -> np.ndarray:
    """Dense ``A`` with ``A @ f == prefix_moment(grid, exponent, f)``."""
    left, right = grid.product_weights(exponent)
    size = grid.size
    A = np.tril(np.broadcast_to(left + right, (size, size)), k=-1).copy()
    A[np.diag_indices(size)] = left
    return A


def suffix_matrix(grid: RadialGrid, exponent: int) -> np.ndarray:
    """Dense ``B`` with ``B @ f == suffix_moment(grid, exponent, f)``."""
    left, right = grid.product_weights(exponent)
    size = grid.size
    B = np.triu(np.broadcast_to(left + right, (size, size)), k=1).copy()
    B[np.diag_indices(size)] = right
    return B


def kernel_matrix(spec: KernelSpec, targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Dense ``K_k(targets_i, sources_j) = delta_k(min, max)``; zero where either is 0."""
    x = np.asarray(targets, dtype=float)[:, None]
    y = np.asarray(sources, dtype=float)[None, :]
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    out = np.zeros(np.broadcast(x, y).shape)
    mask = hi > 0
    out[mask] = delta(spec, np.broadcast_to(lo, out.shape)[mask], np.broadcast_to(hi, out.shape)[mask])
    return out


def check_tail(z: np.ndarray, tail_tol: float = DEFAULT_TAIL_TOL) -> bool:
    """Warn (and return False) when ``|z(R_max)|`` is not negligible against ``max|z|``."""
    scale = np.max(np.abs(z))
    if scale > 0 and abs(z[-1]) > tail_tol * scale:
        warnings.warn(
            f"momentum tail |z(R_max)| = {abs(z[-1]):.3e} exceeds {tail_tol:g} * max|z|; "
            "truncation at R_max is not negligible",
            RuntimeWarning,
            stacklevel=3,
        )
        return False
    return True


def inner_exponent(spec: KernelSpec, p: int) -> int:
    """Power of ``s`` in ``delta(s, r) s^(n-1) omega(s)``, term ``p``, once ``omega`` is factored out."""
    return spec.n + 2 * p


def outer_exponent(spec: KernelSpec, p: int) -> int:
    """Power of ``s`` in ``delta(r, s) s^(n-1) omega(s)``, term ``p``, once ``omega`` is factored out."""
    return 2 * spec.k - 2 - 2 * p


def _check_samples(omega, grid: RadialGrid) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != grid.nodes.shape:
        raise ValueError(f"omega has shape {omega.shape}, grid has {grid.nodes.shape}")
    return omega


def greens_apply(spec: KernelSpec, omega, grid: RadialGrid, *, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Solve ``(-Laplacian)^k (u d_r) = omega d_r`` by quadrature against the Green kernel.

    ``u(r_i) = int_0^inf K_k(r_i, s) s^(n-1) omega(s) ds`` truncated at
    ``R_max``. Each separable term is a prefix or suffix moment, so the cost
    is O(kN).
    """
    omega = _check_samples(omega, grid)
    r = grid.nodes
    check_tail(r ** (spec.n - 1) * omega, tail_tol)
    k, n = spec.k, spec.n
    out = np.zeros(r.size)
    pos = r > 0
    rp = r[pos]
    for p, d in enumerate(spec.coeffs):
        inner = prefix_moment(grid, inner_exponent(spec, p), omega)
        outer = suffix_moment(grid, outer_exponent(spec, p), omega)
        out[pos] += d * (rp ** (2 * k - 1 - n - 2 * p) * inner[pos] + rp ** (2 * p + 1) * outer[pos])
    return spec.norm * out


def greens_apply_naive(spec: KernelSpec, omega, grid: RadialGrid) -> np.ndarray:
    """O(N^2) reference for :func:`greens_apply`: dense quadrature matrix times ``omega``."""
    omega = _check_samples(omega, grid)
    r = grid.nodes
    k, n = spec.k, spec.n
    K = np.zeros((r.size, r.size))
    pos = r > 0
    for p, d in enumerate(spec.coeffs):
        lower = prefix_matrix(grid, inner_exponent(spec, p))
        upper = suffix_matrix(grid, outer_exponent(spec, p))
        K[pos] += d * (
            (r[pos] ** (2 * k - 1 - n - 2 * p))[:, None] * lower[pos] + (r[pos] ** (2 * p + 1))[:, None] * upper[pos]
        )
    return spec.norm * (K @ omega)


def _phi_sym(spec: KernelSpec, x, y):
    return phi(spec, np.minimum(x, y), np.maximum(x, y))


def iterated_kernel_residual(spec_k: KernelSpec, r: float, s: float, grid: RadialGrid | None = None) -> float:
    """Residual of the kernel recursion ``phi_{k+1} = int sigma^(n+1) phi_k phi_1 dsigma``.

    The sigma-integral runs over ``[0, S]`` with ``S = 20 s`` by adaptive
    Gauss-Kronrod on the three smooth pieces; the tail beyond ``S`` is added in
    closed form. A ``grid`` may be supplied to use composite trapezoid on its
    nodes instead (the cut points ``r`` and ``s`` should then be grid nodes).
    """
    from scipy.integrate import quad

    k, n = spec_k.k, spec_k.n
    if not _is_valid_pair(k + 1, n):
        raise ValueError(f"k+1={k + 1} is outside the validity window for n={n}")
    if not (0 < r <= s):
        raise ValueError("need 0 < r <= s")
    spec_1 = kernel_spec(1, n)
    spec_next = kernel_spec(k + 1, n)

    def integrand(sig):
        return sig ** (n + 1) * _phi_sym(spec_k, r, sig) * _phi_sym(spec_1, sig, s)

    S = 20.0 * s
    if grid is None:
        pieces = [(0.0, r), (r, s), (s, S)]
        total = 0.0
        for lo, hi in pieces:
            if hi > lo:
                val, _ = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
                total += val
    else:
        sig = grid.nodes[grid.nodes > 0]
        sig = sig[sig <= S]
        vals = np.array([integrand(v) for v in sig])
        total = float(np.trapz(vals, sig))
        S = float(sig[-1])
    # beyond S >= s >= r: phi_k(r, sig) phi_1(s, sig) sig^(n+1) is a finite sum of powers of sig
    tail = 0.0
    for j, d in enumerate(spec_k.coeffs):
        power = n + 1 + 2 * k - 2 - n - 2 * j - n
        if power >= -1:
            raise ArithmeticError("kernel tail integral diverges")
        tail += spec_k.norm * d * r ** (2 * j) * (-(S ** (power + 1)) / (power + 1))
    tail *= spec_1.norm
    return total + tail - float(phi(spec_next, r, s))
