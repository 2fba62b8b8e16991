"""Lagrangian integration of the radial EPDiff flow.

The unknowns are the flow map ``gamma(t, r)`` and ``rho = d gamma / dr``.
Momentum is transported, so the velocity at a particle is a kernel sum over
the initial momentum ``z0 = r^(n-1) omega0`` pushed forward by the flow:

    gamma_t(r) = int K(gamma(r), gamma(s)) z0(s) / rho(s) ds
    rho_t(r)   = rho(r) int d_1 K(gamma(r), gamma(s)) z0(s) / rho(s) ds

Both integrals split at ``s = r`` into a prefix and a suffix moment per
separable term of the kernel.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline

from .kernels import (
    DEFAULT_TAIL_TOL,
    KernelSpec,
    RadialGrid,
    inner_exponent,
    outer_exponent,
    prefix_matrix,
    prefix_moment,
    suffix_matrix,
    suffix_moment,
)
from .radialops import RadialField, RadialSeries, apply_inertia

__all__ = [
    "MomentumData",
    "LagrangianState",
    "Trajectory",
    "BlowupReport",
    "SolverConfig",
    "InvariantViolation",
    "gaussian_odd",
    "tabulated_momentum",
    "identity_state",
    "rhs",
    "integrate",
    "energy",
    "min_slope",
    "conservation_residual",
    "eulerian_fields",
    "eulerian_series",
    "initial_slope",
    "auto_time_step",
]

log = logging.getLogger(__name__)


class InvariantViolation(RuntimeError):
    """A structural invariant failed during integration (e.g. fast/naive mismatch)."""


@dataclass(frozen=True)
class MomentumData:
    """Initial momentum ``omega0 <= 0`` sampled on ``grid``; ``z0 = r^(n-1) omega0``."""

    grid: RadialGrid
    omega0: np.ndarray
    n: int
    tail_tol: float = DEFAULT_TAIL_TOL
    z0: np.ndarray = field(init=False)

    def __post_init__(self):
        omega0 = np.array(self.omega0, dtype=float)
        if omega0.shape != self.grid.nodes.shape:
            raise ValueError(f"omega0 has shape {omega0.shape}, grid has {self.grid.nodes.shape}")
        if not np.all(np.isfinite(omega0)):
            raise ValueError("omega0 contains non-finite values")
        if np.any(omega0 > 0):
            i = int(np.argmax(omega0))
            raise ValueError(f"omega0 must be <= 0; omega0({self.grid.nodes[i]:g}) = {omega0[i]:g}")
        if omega0[0] != 0.0:
            raise ValueError("omega0(0) must vanish for an odd radial field")
        z0 = self.grid.nodes ** (self.n - 1) * omega0
        z0[0] = 0.0
        scale = np.max(np.abs(z0))
        if scale > 0 and abs(z0[-1]) > self.tail_tol * scale:
            raise ValueError(
                f"|z0(R_max)| = {abs(z0[-1]):.3e} exceeds tail_tol * max|z0| = {self.tail_tol * scale:.3e}; "
                "increase R_max"
            )
        omega0.setflags(write=False)
        z0.setflags(write=False)
        object.__setattr__(self, "omega0", omega0)
        object.__setattr__(self, "z0", z0)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.omega0)


def gaussian_odd(grid: RadialGrid, n: int, amplitude: float = 1.0) -> MomentumData:
    """Default data ``omega0(r) = -amplitude r exp(-r^2)``."""
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative to keep omega0 <= 0")
    r = grid.nodes
    return MomentumData(grid, -amplitude * r * np.exp(-r * r), n)


def tabulated_momentum(grid: RadialGrid, n: int, r_table, omega_table) -> MomentumData:
    """Linear interpolation of a table ``(r, omega0)``; zero beyond the last entry."""
    r_table = np.asarray(r_table, dtype=float)
    omega_table = np.asarray(omega_table, dtype=float)
    if r_table.ndim != 1 or r_table.shape != omega_table.shape or r_table.size < 2:
        raise ValueError("momentum table needs two equal-length columns with at least 2 rows")
    if np.any(np.diff(r_table) <= 0):
        raise ValueError("momentum table radii must be strictly increasing")
    if np.any(omega_table > 0):
        raise ValueError("momentum table violates omega0 <= 0")
    omega = np.interp(grid.nodes, r_table, omega_table, left=0.0, right=0.0)
    omega[0] = 0.0
    return MomentumData(grid, omega, n)


@dataclass(frozen=True)
class LagrangianState:
    gamma: np.ndarray
    rho: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float)
        rho = np.array(self.rho, dtype=float)
        if gamma.shape != rho.shape or gamma.ndim != 1:
            raise ValueError("gamma and rho must be 1-d arrays of equal length")
        gamma.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "rho", rho)

    def validate(self) -> None:
        if not np.all(self.rho > 0):
            raise ValueError(f"rho must be positive, min rho = {np.min(self.rho):g}")
        if self.gamma[0] != 0.0:
            raise ValueError("gamma(0) must be 0")
        if np.any(np.diff(self.gamma) <= 0):
            raise ValueError("gamma must be strictly increasing")

    def drift(self, grid: RadialGrid) -> float:
        """``max |gamma - cumulative trapezoid of rho|`` (monitored consistency)."""
        h = np.diff(grid.nodes)
        integral = np.concatenate(([0.0], np.cumsum(0.5 * h * (self.rho[1:] + self.rho[:-1]))))
        return float(np.max(np.abs(self.gamma - integral)))


def identity_state(grid: RadialGrid) -> LagrangianState:
    return LagrangianState(grid.nodes.copy(), np.ones(grid.size), 0.0)


def _moment_integrands(state: LagrangianState, data: MomentumData, spec: KernelSpec):
    """Per separable term ``p``: ``(f_inner, f_outer)`` multiplying the product weights.

    ``gamma(s)^q s^(n-1) omega0 / rho`` is written as ``(gamma/s)^q s^e`` times
    ``omega0/rho`` so that the monomial ``s^e`` is integrated exactly. At
    ``s = 0`` the ratio ``gamma/s`` is ``rho(0)``.
    """
    r = data.grid.nodes
    ratio = np.empty_like(r)
    ratio[1:] = state.gamma[1:] / r[1:]
    ratio[0] = state.rho[0]
    base = data.omega0 / state.rho
    k, n = spec.k, spec.n
    out = []
    for p in range(spec.rank):
        out.append((ratio ** (2 * p + 1) * base, ratio ** (2 * k - 1 - n - 2 * p) * base))
    return out


def _assemble(state: LagrangianState, spec: KernelSpec, inner, outer):
    g = state.gamma
    k, n = spec.k, spec.n
    gdot = np.zeros(g.size)
    slope = np.zeros(g.size)
    gp = g[1:]
    for p, d in enumerate(spec.coeffs):
        alpha = 2 * k - 1 - n - 2 * p
        gdot[1:] += d * (gp**alpha * inner[p][1:] + gp ** (2 * p + 1) * outer[p][1:])
        slope[1:] += d * (alpha * gp ** (alpha - 1) * inner[p][1:] + (2 * p + 1) * gp ** (2 * p) * outer[p][1:])
    # at gamma = 0 only the p = 0 outer term survives in the slope
    slope[0] = spec.coeffs[0] * outer[0][0]
    gdot *= spec.norm
    slope *= spec.norm
    return gdot, state.rho * slope


def _rhs_fast(state, data, spec):
    grid = data.grid
    inner, outer = [], []
    for p, (f_in, f_out) in enumerate(_moment_integrands(state, data, spec)):
        inner.append(prefix_moment(grid, inner_exponent(spec, p), f_in))
        outer.append(suffix_moment(grid, outer_exponent(spec, p), f_out))
    return _assemble(state, spec, inner, outer)


def _rhs_naive(state, data, spec):
    """Dense O(N^2) summation: every target node sums over every source node."""
    grid = data.grid
    g = state.gamma
    k, n = spec.k, spec.n
    size = g.size
    K = np.zeros((size, size))
    dK = np.zeros((size, size))
    gp = g[1:, None]
    for p, (d, (f_in, f_out)) in enumerate(zip(spec.coeffs, _moment_integrands(state, data, spec))):
        alpha = 2 * k - 1 - n - 2 * p
        lower = prefix_matrix(grid, inner_exponent(spec, p)) * f_in[None, :]
        upper = suffix_matrix(grid, outer_exponent(spec, p)) * f_out[None, :]
        K[1:] += d * (gp**alpha * lower[1:] + gp ** (2 * p + 1) * upper[1:])
        dK[1:] += d * (alpha * gp ** (alpha - 1) * lower[1:] + (2 * p + 1) * gp ** (2 * p) * upper[1:])
        if p == 0:
            dK[0] += d * upper[0]
    gdot = spec.norm * K.sum(axis=1)
    slope = spec.norm * dK.sum(axis=1)
    return gdot, state.rho * slope


def rhs(state: LagrangianState, data: MomentumData, spec: KernelSpec, path: str = "fast"):
    """``(gamma_dot, rho_dot)`` at the nodes.

    ``path`` selects the O(kN) prefix/suffix summation (``"fast"``) or the
    dense O(N^2) reference (``"naive"``). The node ``s = r_i`` contributes its
    left half-cell to the inner integral and its right half-cell to the outer
    one, because the kernel derivatives jump across the diagonal.
    """
    if state.gamma.shape != data.grid.nodes.shape:
        raise ValueError("state and grid sizes differ")
    if spec.n != data.n:
        raise ValueError(f"kernel dimension {spec.n} differs from data dimension {data.n}")
    state.validate()
    if path == "fast":
        return _rhs_fast(state, data, spec)
    if path == "naive":
        return _rhs_naive(state, data, spec)
    raise ValueError(f"unknown summation path {path!r}")


def energy(state: LagrangianState, data: MomentumData, spec: KernelSpec, gamma_dot=None) -> float:
    """Kinetic energy ``int gamma_t z0 / rho dr`` (equal to ``int u omega r^(n-1) dr``)."""
    if data.is_zero:
        return 0.0
    if gamma_dot is None:
        gamma_dot, _ = rhs(state, data, spec)
    left, right = data.grid.product_weights(data.n - 1)
    return float(np.dot(left + right, gamma_dot * data.omega0 / state.rho))


def min_slope(state: LagrangianState, data: MomentumData, spec: KernelSpec, rho_dot=None) -> float:
    """Most negative ``rho_t / rho``, i.e. ``min u_r`` along particle paths."""
    if rho_dot is None:
        _, rho_dot = rhs(state, data, spec)
    return float(np.min(rho_dot / state.rho))


def initial_slope(data: MomentumData, spec: KernelSpec) -> float:
    """``min u_r`` at ``t = 0``; sets the natural time scale ``1/|u_r|``."""
    _, rho_dot = rhs(identity_state(data.grid), data, spec)
    return float(np.min(rho_dot))


def auto_time_step(data: MomentumData, spec: KernelSpec, cfl: float = 0.01) -> tuple[float, float]:
    """``(dt, t_max)`` scaled to the initial slope: ``dt = cfl/|u_r|``, ``t_max = 20/|u_r|``."""
    slope = abs(initial_slope(data, spec))
    if slope == 0.0 or not math.isfinite(slope):
        return 1.0, 10.0
    return cfl / slope, 20.0 / slope


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_max: float
    dt_min: float = 1e-10
    rho_threshold: float = 1e-2
    contraction: float = 0.2
    path: str = "fast"
    equivalence_tol: float = 1e-12

    def __post_init__(self):
        if not (self.dt > self.dt_min > 0):
            raise ValueError(f"need dt > dt_min > 0, got dt={self.dt}, dt_min={self.dt_min}")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not 0 < self.rho_threshold < 1:
            raise ValueError("rho_threshold must lie in (0, 1)")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")
        if self.path not in ("fast", "naive", "both"):
            raise ValueError(f"solver path must be naive, fast or both, got {self.path!r}")


@dataclass(frozen=True)
class Trajectory:
    """Accepted states; ``gamma`` and ``rho`` have shape ``(T, N)``."""

    grid: RadialGrid
    times: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def state(self, i: int) -> LagrangianState:
        return LagrangianState(self.gamma[i], self.rho[i], float(self.times[i]))

    def __iter__(self):
        return (self.state(i) for i in range(len(self)))


@dataclass(frozen=True)
class BlowupReport:
    blew_up: bool
    T_est: float
    r_star: float
    status: str
    times: np.ndarray
    min_rho_history: np.ndarray
    argmin_r_history: np.ndarray
    energy_history: np.ndarray
    min_slope_history: np.ndarray
    drift_history: np.ndarray
    steps: int
    halvings: int

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def _rel_diff(a, b) -> float:
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    return 0.0 if scale == 0 else float(np.max(np.abs(a - b)) / scale)


def _admissible(gamma, rho) -> bool:
    return bool(np.all(np.isfinite(rho)) and np.all(rho > 0) and np.all(np.diff(gamma) > 0))


def integrate(data: MomentumData, spec: KernelSpec, config: SolverConfig) -> tuple[Trajectory, BlowupReport]:
    """Classical RK4 until ``min rho < rho_threshold`` or ``t >= t_max``.

    A step is retried at half size when any stage leaves the positive cone or
    when it shrinks ``min rho`` by more than ``config.contraction``. If the
    step falls below ``dt_min`` the run stops with status ``"underflow"`` and
    the last accepted state.
    """
    grid = data.grid
    check_path = config.path == "both"
    path = "fast" if check_path else config.path

    def field(gamma, rho, t):
        st = LagrangianState(gamma, rho, t)
        out = rhs(st, data, spec, path)
        return out

    state = identity_state(grid)
    gamma, rho = state.gamma.copy(), state.rho.copy()
    t = 0.0
    dt = config.dt
    times, gammas, rhos = [t], [gamma.copy()], [rho.copy()]
    hist = {"min_rho": [], "argmin": [], "energy": [], "slope": [], "drift": []}

    def record(gamma, rho, t, deriv):
        st = LagrangianState(gamma, rho, t)
        if check_path:
            naive = rhs(st, data, spec, "naive")
            err = max(_rel_diff(deriv[0], naive[0]), _rel_diff(deriv[1], naive[1]))
            if err > config.equivalence_tol:
                raise InvariantViolation(f"fast and naive rhs differ by {err:.3e} at t={t:g}")
        i = int(np.argmin(rho))
        hist["min_rho"].append(float(rho[i]))
        hist["argmin"].append(float(grid.nodes[i]))
        hist["energy"].append(energy(st, data, spec, deriv[0]))
        hist["slope"].append(min_slope(st, data, spec, deriv[1]))
        hist["drift"].append(st.drift(grid))

    k1 = field(gamma, rho, t)
    record(gamma, rho, t, k1)
    status = "t_max"
    blew_up = False
    steps = halvings = 0
    while t < config.t_max * (1 - 1e-14):
        h = min(dt, config.t_max - t)
        new = None
        while True:
            if h < config.dt_min:
                break
            g2, r2 = gamma + 0.5 * h * k1[0], rho + 0.5 * h * k1[1]
            if _admissible(g2, r2):
                k2 = field(g2, r2, t + 0.5 * h)
                g3, r3 = gamma + 0.5 * h * k2[0], rho + 0.5 * h * k2[1]
                if _admissible(g3, r3):
                    k3 = field(g3, r3, t + 0.5 * h)
                    g4, r4 = gamma + h * k3[0], rho + h * k3[1]
                    if _admissible(g4, r4):
                        k4 = field(g4, r4, t + h)
                        gn = gamma + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
                        rn = rho + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
                        gn[0] = 0.0
                        if _admissible(gn, rn) and np.min(rn) >= (1 - config.contraction) * np.min(rho):
                            new = (gn, rn)
                            break
            h *= 0.5
            dt = h
            halvings += 1
        if new is None:
            status = "underflow"
            blew_up = True
            log.warning("step size fell below dt_min=%g at t=%g; blowup approached beyond resolution", config.dt_min, t)
            break
        gamma, rho = new
        t += h
        steps += 1
        k1 = field(gamma, rho, t)
        times.append(t)
        gammas.append(gamma.copy())
        rhos.append(rho.copy())
        record(gamma, rho, t, k1)
        if np.min(rho) < config.rho_threshold:
            status = "threshold"
            blew_up = True
            break

    times_arr = np.array(times)
    min_rho = np.array(hist["min_rho"])
    if status == "threshold":
        T_est = _threshold_time(times_arr[-2:], min_rho[-2:], config.rho_threshold)
    elif status == "underflow":
        T_est = float(times_arr[-1])
    else:
        T_est = math.inf
    traj = Trajectory(grid, times_arr, np.array(gammas), np.array(rhos))
    report = BlowupReport(
        blew_up=blew_up,
        T_est=T_est,
        r_star=float(hist["argmin"][-1]),
        status=status,
        times=times_arr,
        min_rho_history=min_rho,
        argmin_r_history=np.array(hist["argmin"]),
        energy_history=np.array(hist["energy"]),
        min_slope_history=np.array(hist["slope"]),
        drift_history=np.array(hist["drift"]),
        steps=steps,
        halvings=halvings,
    )
    return traj, report


def _threshold_time(t, m, threshold) -> float:
    """Crossing time of ``min rho`` through ``threshold``, interpolating ``log(min rho)`` linearly."""
    (t0, t1), (m0, m1) = t, m
    if m0 <= threshold or m0 == m1:
        return float(t1)
    lam = (math.log(m0) - math.log(threshold)) / (math.log(m0) - math.log(m1))
    return float(t0 + lam * (t1 - t0))


def eulerian_fields(state: LagrangianState, data: MomentumData, spec: KernelSpec, points: int | None = None,
                    gamma_dot=None):
    """Velocity and momentum on a uniform Eulerian grid covering ``[0, gamma(R_max)]``.

    ``u`` is reconstructed from the particle velocities by an odd-mirrored
    interpolating spline of degree ``2k + 1`` and ``omega = A u`` is taken by
    finite differences.
    """
    if gamma_dot is None:
        gamma_dot, _ = rhs(state, data, spec)
    g = state.gamma
    x = np.concatenate((-g[:0:-1], g))
    y = np.concatenate((-gamma_dot[:0:-1], gamma_dot))
    spline = make_interp_spline(x, y, k=2 * spec.k + 1)
    size = data.grid.size if points is None else points
    euler = RadialGrid.uniform(size, float(g[-1]))
    u = spline(euler.nodes)
    u[0] = 0.0
    omega = apply_inertia(RadialField(euler, u), spec.k, spec.n).values
    return euler, u, omega


def conservation_residual(state: LagrangianState, data: MomentumData, spec: KernelSpec, points: int | None = None,
                          margin: int | None = None) -> float:
    """``max |gamma^(n-1) rho^2 omega(t, gamma) - z0| / max|z0|`` over particles.

    Particles whose image lies within ``margin`` Eulerian cells of the outer
    edge (default ``2k + 2``) are skipped, since the finite-difference inertia
    operator is one-sided there.
    """
    scale = np.max(np.abs(data.z0))
    if scale == 0:
        return 0.0
    euler, _, omega = eulerian_fields(state, data, spec, points)
    margin = 2 * spec.k + 2 if margin is None else margin
    limit = euler.nodes[-1 - margin]
    g = state.gamma
    if np.any(g < 0) or g[-1] > euler.nodes[-1] * (1 + 1e-12):
        raise ValueError("particle positions fall outside the Eulerian grid")
    mask = g <= limit
    omega_at = CubicSpline(euler.nodes, omega)(g[mask])
    lhs = g[mask] ** (spec.n - 1) * state.rho[mask] ** 2 * omega_at
    return float(np.max(np.abs(lhs - data.z0[mask])) / scale)


def eulerian_series(traj: Trajectory, data: MomentumData, spec: KernelSpec, indices, r_max: float,
                    points: int) -> tuple[RadialSeries, RadialSeries]:
    """``(u, omega)`` series on a fixed Eulerian grid ``[0, r_max]`` at the chosen trajectory frames."""
    grid = RadialGrid.uniform(points, r_max)
    us, ws = [], []
    for i in indices:
        st = traj.state(i)
        euler, u, w = eulerian_fields(st, data, spec, points=max(points, data.grid.size))
        if euler.r_max < r_max:
            raise ValueError("Eulerian window exceeds the particle range")
        us.append(CubicSpline(euler.nodes, u)(grid.nodes))
        ws.append(CubicSpline(euler.nodes, w)(grid.nodes))
    t = traj.times[list(indices)]
    return RadialSeries(t, grid, np.array(us)), RadialSeries(t, grid, np.array(ws))
