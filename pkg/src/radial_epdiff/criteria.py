"""Breakdown criteria for the homogeneous kernels and the Liouville comparison.

With the canonical weight ``Q(r) = r^(n+1-2k) / C(k, n)`` the comparison
quantity along a trajectory is ``q = Q(gamma) rho / Q(r)``. The criteria ask
for two sign/floor conditions on the kernel:

    Psi(s, r)       = (n+2-2k) phi(s, r) + r d_2 phi(s, r)   >= 0     (s < r)
    Psi~(r, s) s^2b = ((n+2-2k) phi(r, s) + r d_1 phi(r, s)) s^2b >= C_est   (r <= s)

with ``b = n/2 + 1 - k``. Under them ``q`` stays below the solution of the
Liouville-type equation integrated by :func:`comparison_trajectory`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hypergeom
from .kernels import KernelSpec, RadialGrid, suffix_moment
from .solver import MomentumData, Trajectory

__all__ = [
    "CriteriaReport",
    "ComparisonResult",
    "ComparisonCheck",
    "q_canonical",
    "q_along",
    "psi",
    "psi_tilde",
    "psi_tilde_closed",
    "psi_identity_residual",
    "comparison_constant",
    "verify_conditions",
    "comparison_trajectory",
    "comparison_check",
]

PSI_TOL = 1e-12
FLOOR_TOL = 1e-10


def _q_exponent(spec: KernelSpec) -> int:
    return spec.n + 1 - 2 * spec.k


def q_canonical(spec: KernelSpec, r):
    """``Q(r) = 1 / (r phi_k(0, r)) = r^(n+1-2k) / C(k, n)``, extended to ``r = 0`` by its limit."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("Q is defined for r >= 0")
    e = _q_exponent(spec)
    if e < 0:
        raise ValueError(f"Q(0) is infinite for n+1-2k = {e}")
    out = r**e / spec.norm
    return float(out) if out.ndim == 0 else out


def q_along(spec: KernelSpec, grid: RadialGrid, gamma, rho) -> np.ndarray:
    """``q = Q(gamma) rho / Q(r)`` at the nodes; at ``r = 0`` the limit ``rho^(n+2-2k)``."""
    gamma = np.asarray(gamma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    r = grid.nodes
    e = _q_exponent(spec)
    ratio = np.empty_like(rho, dtype=float)
    ratio[..., 1:] = gamma[..., 1:] / r[1:]
    ratio[..., 0] = rho[..., 0]
    return ratio**e * rho


def _check_pair(lo, hi, strict: bool):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    bad = (lo >= hi) if strict else (lo > hi)
    if np.any(lo < 0) or np.any(hi <= 0) or np.any(bad):
        raise ValueError("arguments outside the domain of the criterion")
    return lo, hi


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def psi(spec: KernelSpec, s, r):
    """``Psi_k(s, r)`` for ``0 <= s < r``; the derivative acts on the second slot of ``phi``."""
    s, r = _check_pair(s, r, strict=True)
    total = np.zeros(np.broadcast(s, r).shape)
    for p, d in enumerate(spec.coeffs):
        if p:
            total = total - 2 * p * d * s ** (2 * p) * r ** (-2 * spec.b - 2 * p)
    return _out(spec.norm * total)


def _psi_scale(spec: KernelSpec, s, r):
    total = np.zeros(np.broadcast(s, r).shape)
    for p, d in enumerate(spec.coeffs):
        total = total + abs(2 * p * d) * s ** (2 * p) * r ** (-2 * spec.b - 2 * p)
    return spec.norm * total


def psi_tilde(spec: KernelSpec, r, s):
    """``Psi~_k(r, s)`` for ``0 < r <= s``; the derivative acts on the first slot of ``phi``."""
    r, s = _check_pair(r, s, strict=False)
    if np.any(r <= 0):
        raise ValueError("psi_tilde needs r > 0")
    total = np.zeros(np.broadcast(r, s).shape)
    for p, d in enumerate(spec.coeffs):
        total = total + (2 * spec.b + 2 * p) * d * r ** (2 * p) * s ** (-2 * spec.b - 2 * p)
    return _out(spec.norm * total)


def psi_tilde_closed(spec: KernelSpec, r, s):
    """Closed form ``2b C s^(-2b) F(a, b+1; c; r^2/s^2)``."""
    r, s = _check_pair(r, s, strict=False)
    f = hypergeom.f21_terminating(spec.k - 1, spec.b + 1, spec.c, (r / s) ** 2)
    return _out(2 * spec.b * spec.norm * s ** (-2 * spec.b) * f)


def psi_identity_residual(spec: KernelSpec, s, r):
    """Relative gap between :func:`psi` and ``-2 C r^(-2b-2) s^2 F'(a, b; c; s^2/r^2)``."""
    direct = np.asarray(psi(spec, s, r))
    dF = hypergeom.f21_terminating_derivative(spec.k - 1, spec.b, spec.c, (np.asarray(s) / np.asarray(r)) ** 2)
    closed = -2 * spec.norm * np.asarray(r, dtype=float) ** (-2 * spec.b - 2) * np.asarray(s, dtype=float) ** 2 * dF
    scale = np.maximum(np.abs(closed), _psi_scale(spec, np.asarray(s, float), np.asarray(r, float)))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, np.abs(direct - closed) / scale, 0.0)
    return _out(rel)


def comparison_constant(spec: KernelSpec) -> float:
    """``C_est = 2b C(k, n) F(a, b+1; c; 1)``, the infimum of ``Psi~ s^2b``."""
    if spec.k == 1:
        gauss = 1.0
    else:
        gauss = hypergeom.gauss_value_at_one(spec.a, spec.b + 1, spec.c)
    return 2 * spec.b * spec.norm * gauss


@dataclass(frozen=True)
class CriteriaReport:
    min_psi: float
    min_scaled_psi_tilde: float
    C_est: float
    passed: bool
    samples: int


def verify_conditions(spec: KernelSpec, samples: int = 1000, seed: int = 0,
                      lo: float = 1e-3, hi: float = 1e3) -> CriteriaReport:
    """Sample both conditions log-uniformly over ``[lo, hi]``.

    Pairs are drawn independently and ordered; the diagonal ``r = s`` is
    included for the floor, where ``Psi~ s^2b`` attains ``C_est``.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    x = np.exp(rng.uniform(math.log(lo), math.log(hi), size=(2, samples)))
    small, large = np.min(x, axis=0), np.max(x, axis=0)
    large = np.where(small == large, large * (1 + 1e-9), large)
    ps = np.asarray(psi(spec, small, large))
    ps_scale = _psi_scale(spec, small, large)
    r_floor = np.concatenate((small, x[0]))
    s_floor = np.concatenate((large, x[0]))
    scaled = np.asarray(psi_tilde(spec, r_floor, s_floor)) * s_floor ** (2 * spec.b)
    c_est = comparison_constant(spec)
    psi_ok = bool(np.all(ps >= -PSI_TOL * ps_scale))
    floor_ok = bool(np.min(scaled) >= c_est - FLOOR_TOL)
    return CriteriaReport(
        min_psi=float(np.min(ps)),
        min_scaled_psi_tilde=float(np.min(scaled)),
        C_est=c_est,
        passed=psi_ok and floor_ok,
        samples=samples,
    )


@dataclass(frozen=True)
class ComparisonResult:
    """``q_comp`` at the requested times (shape ``(T, N)``) and its own zero time."""

    times: np.ndarray
    q: np.ndarray
    zero_time: float

    @property
    def q_min(self) -> np.ndarray:
        return np.min(self.q, axis=1)


def comparison_trajectory(data: MomentumData, spec: KernelSpec, times, *, max_drop: float = 0.2,
                          dt_min: float = 1e-12, zero_threshold: float = 1e-8) -> ComparisonResult:
    """Integrate ``d/dt ln q = -C_est int_r^inf (|z0|/Q) / q ds`` with ``q(0) = 1``.

    ``|z0| / Q = C r^(2k-2) |omega0|`` so the tail integral is a suffix
    moment. Each interval between consecutive ``times`` is covered by RK4
    substeps, halved whenever ``ln q`` would drop by more than ``max_drop``.
    Once ``min q`` falls below ``zero_threshold`` (or the substep underflows)
    the zero time is recorded and later frames are set to 0.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and increase strictly")
    grid = data.grid
    weight = np.abs(data.omega0)
    rate = comparison_constant(spec) * spec.norm
    exponent = 2 * spec.k - 2

    def f(L):
        return -rate * suffix_moment(grid, exponent, weight * np.exp(-L))

    L = np.zeros(grid.size)
    out = np.empty((times.size, grid.size))
    out[0] = 1.0
    zero_time = math.inf
    t = 0.0
    h = times[1] - times[0] if times.size > 1 else 0.0
    for j in range(1, times.size):
        if math.isfinite(zero_time):
            out[j] = 0.0
            continue
        target = times[j]
        h = min(max(h, target - t), target - t)
        while t < target:
            h = min(h, target - t)
            k1 = f(L)
            k2 = f(L + 0.5 * h * k1)
            k3 = f(L + 0.5 * h * k2)
            k4 = f(L + h * k3)
            step = h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if np.all(np.isfinite(step)) and np.min(step) >= -max_drop:
                L = L + step
                t = target if target - (t + h) <= 1e-14 * max(1.0, target) else t + h
                if math.exp(np.min(L)) < zero_threshold:
                    zero_time = t
                    break
                continue
            h *= 0.5
            if h < dt_min:
                zero_time = t
                break
        out[j] = 0.0 if math.isfinite(zero_time) else np.exp(L)
    return ComparisonResult(times, out, zero_time)


@dataclass(frozen=True)
class ComparisonCheck:
    passed: bool
    max_violation: float
    q: np.ndarray
    q_min_decreasing: bool

    @property
    def q_min(self) -> np.ndarray:
        return np.min(self.q, axis=1)


def comparison_check(traj: Trajectory, comp: ComparisonResult, spec: KernelSpec, tol: float = 1e-2) -> ComparisonCheck:
    """Check ``q(t, r_i) <= q_comp(t, r_i) (1 + tol)`` on every recorded frame.

    ``max_violation`` is ``max (q / q_comp - 1)``, so the check passes when it
    is at most ``tol``.
    """
    if traj.times.shape != comp.times.shape or not np.allclose(traj.times, comp.times, rtol=1e-14, atol=0):
        raise ValueError("trajectory and comparison use different time stamps")
    if comp.q.shape[1] != traj.grid.size:
        raise ValueError("trajectory and comparison use different grids")
    q = q_along(spec, traj.grid, traj.gamma, traj.rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.where(comp.q > 0, q / comp.q - 1.0, np.inf)
    worst = float(np.max(excess))
    q_min = np.min(q, axis=1)
    return ComparisonCheck(
        passed=worst <= tol,
        max_violation=worst,
        q=q,
        q_min_decreasing=bool(np.all(np.diff(q_min) < 0)),
    )
