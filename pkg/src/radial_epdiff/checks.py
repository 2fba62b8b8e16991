"""Identity and oracle suites behind ``verify``.

Each check returns a :class:`CheckResult`; a suite is a list of them. The
kernel suite takes the spec constructor as an argument so that a corrupted
kernel can be fed through it as a negative control.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hypergeom as hg
from .kernels import (
    RadialGrid,
    greens_apply,
    greens_apply_naive,
    iterated_kernel_residual,
    kernel_spec,
    phi,
    phi_hypergeometric,
)
from .radialops import (
    FieldSeries,
    GridField,
    RadialField,
    apply_inertia,
    burgers_residual,
    lift_series,
    radial_vector_laplacian,
)

__all__ = ["CheckResult", "SUITES", "run_suite", "explicit_phi", "burgers_characteristics", "format_table"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    tol: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.suite:<10} {self.name:<44} {self.value:.3e} (tol {self.tol:.1e})"


def _check(suite, name, value, tol) -> CheckResult:
    value = float(value)
    return CheckResult(suite, name, bool(np.isfinite(value) and value <= tol), value, tol)


def _rel(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = np.max(np.abs(y))
    return float(np.max(np.abs(x - y)) / scale) if scale > 0 else float(np.max(np.abs(x)))


# ---- hypergeometric -------------------------------------------------------

def _admissible_params(rng, count):
    """``(m, b, c)`` with ``c > b > 0``; ``a = -m``."""
    m = rng.integers(0, 11, size=count)
    b = rng.uniform(0.1, 8.0, size=count)
    c = b + rng.uniform(0.1, 8.0, size=count)
    return m, b, c


def hypergeom_checks(samples: int = 500, seed: int = 1) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    m, b, c = _admissible_params(rng, samples)
    gauss_err = 0.0
    euler_err = 0.0
    monotone = 0.0
    bounds = 0.0
    z_grid = np.linspace(0.0, 1.0, 41)
    for mi, bi, ci in zip(m, b, c):
        poly = hg.f21_terminating(int(mi), bi, ci, 1.0)
        gauss = hg.gauss_value_at_one(-float(mi), bi, ci)
        gauss_err = max(gauss_err, abs(gauss - poly) / max(abs(poly), 1e-300))
        vals = hg.f21_terminating(int(mi), bi, ci, z_grid)
        monotone = max(monotone, float(np.max(np.diff(vals))))
        bounds = max(bounds, float(np.max(gauss - vals)), float(np.max(vals - 1.0)))
    for mi, bi, ci in list(zip(m, b, c))[:40]:
        z = 0.7
        ref = hg.f21_terminating(int(mi), bi, ci, z)
        val = hg.f21_euler_integral(hg.HypergeomParams(-float(mi), bi, ci), z)
        euler_err = max(euler_err, abs(val - ref) / max(abs(ref), 1e-300))

    contig = 0.0
    for _ in range(samples):
        a = -float(rng.integers(0, 8))
        bb = rng.uniform(-3.0, 6.0)
        cc = rng.uniform(0.5, 9.0)
        z = rng.uniform(0.0, 1.0)
        terms = [abs(a - 1) * abs(hg.f21(a, bb - 1, cc, z)), abs(bb - 1) * abs(hg.f21(a - 1, bb, cc, z)),
                 abs(a - bb) * abs(hg.f21(a - 1, bb - 1, cc, z))]
        scale = max(max(terms), 1.0)
        contig = max(contig, abs(hg.contiguous_residual(a, bb, cc, z)) / scale)

    deriv = 0.0
    for _ in range(samples):
        a = -float(rng.integers(0, 8)) if rng.random() < 0.5 else rng.uniform(-5.0, 0.0)
        bb = rng.uniform(0.2, 6.0)
        cc = bb + rng.uniform(0.2, 6.0)
        z = rng.uniform(0.05, 0.9)
        deriv = max(deriv, *hg.derivative_identity_residuals(a, bb, cc, z))

    examples = max(
        abs(hg.f21_terminating(1, 2, 4, 1) - 0.5),
        abs(hg.f21_terminating(2, 1, 2, 1) - 1 / 3),
        abs(hg.gauss_value_at_one(-1, 2, 4) - 0.5),
        abs(hg.gauss_value_at_one(-2, 1, 2) - 1 / 3),
        abs(hg.pochhammer(2, 3) - 24),
        abs(hg.pochhammer(0.5, 2) - 0.75),
    )
    return [
        _check("hypergeom", "worked examples", examples, 1e-15),
        _check("hypergeom", "Gauss value vs polynomial at z=1 (rel)", gauss_err, 1e-10),
        _check("hypergeom", "Euler integral vs polynomial (rel)", euler_err, 1e-8),
        _check("hypergeom", "contiguous relation (scaled)", contig, 1e-12),
        _check("hypergeom", "weighted derivative identities (rel, FD)", deriv, 1e-6),
        _check("hypergeom", "monotone decrease on [0,1] (max rise)", max(monotone, 0.0), 1e-12),
        _check("hypergeom", "Gauss floor and unit ceiling (max excess)", max(bounds, 0.0), 1e-12),
    ]


# ---- kernels --------------------------------------------------------------

def explicit_phi(k: int, n: int, r, s):
    """Hand-expanded ``phi_1 .. phi_4`` as polynomials in ``r^2, s^2`` times ``s^-n``."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if k == 1:
        poly = np.ones_like(s) / n
    elif k == 2:
        poly = (s**2 / (n - 2) - r**2 / (n + 2)) / (2 * n)
    elif k == 3:
        poly = (
            s**4 / ((n - 4) * (n - 2)) - 2 * r**2 * s**2 / ((n - 2) * (n + 2)) + r**4 / ((n + 2) * (n + 4))
        ) / (8 * n)
    elif k == 4:
        poly = (
            s**6 / ((n - 6) * (n - 4) * (n - 2))
            - 3 * r**2 * s**4 / ((n - 4) * (n - 2) * (n + 2))
            + 3 * r**4 * s**2 / ((n - 2) * (n + 2) * (n + 4))
            - r**6 / ((n + 2) * (n + 4) * (n + 6))
        ) / (48 * n)
    else:
        raise ValueError("explicit forms exist for k <= 4 only")
    return s ** (-n) * poly


def kernel_checks(make_spec: Callable = kernel_spec, seed: int = 2) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    s = np.exp(rng.uniform(math.log(0.05), math.log(20.0), size=50))
    r = s * rng.uniform(0.0, 1.0, size=50)
    explicit = 0.0
    hyper = 0.0
    for n in (5, 7, 9, 10):
        for k in range(1, 5):
            if 2 * k >= n + 2:
                continue
            spec = make_spec(k, n)
            explicit = max(explicit, _rel(phi(spec, r, s), explicit_phi(k, n, r, s)))
            hyper = max(hyper, _rel(phi(spec, r, s), phi_hypergeometric(spec, r, s)))

    positivity = 0.0
    for n in range(1, 13):
        for k in range(1, 6):
            if 2 * k >= n + 2:
                continue
            spec = make_spec(k, n)
            ss = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size=200))
            rr = ss * rng.uniform(0.0, 1.0, size=200)
            vals = phi(spec, rr, ss)
            positivity = max(positivity, float(np.sum(vals <= 0)))

    iterated = 0.0
    for k, n in ((1, 5), (2, 7), (2, 9)):
        spec = make_spec(k, n)
        for _ in range(20):
            ss = float(np.exp(rng.uniform(math.log(0.2), math.log(3.0))))
            rr = ss * float(rng.uniform(0.05, 1.0))
            val = iterated_kernel_residual(spec, rr, ss)
            ref = abs(float(phi(make_spec(k + 1, n), rr, ss)))
            iterated = max(iterated, abs(val) / max(ref, 1e-300))

    grid = RadialGrid.uniform(400, 8.0)
    x = grid.nodes
    omega = -x * np.exp(-x * x) * (1 + 0.3 * np.sin(3 * x))
    fast_naive = 0.0
    for k, n in ((1, 3), (2, 5), (3, 7)):
        spec = make_spec(k, n)
        fast_naive = max(fast_naive, _rel(greens_apply(spec, omega, grid), greens_apply_naive(spec, omega, grid)))

    roundtrip = 0.0
    big = RadialGrid.uniform(2000, 8.0)
    y = big.nodes
    om = -y * np.exp(-y * y)
    for k, n in ((1, 3), (1, 5), (2, 5)):
        spec = make_spec(k, n)
        back = apply_inertia(RadialField(big, greens_apply(spec, om, big)), k, n).values
        cut = big.size - 2 * k - 1
        roundtrip = max(roundtrip, float(np.max(np.abs(back[:cut] - om[:cut])) / np.max(np.abs(om))))

    return [
        _check("kernels", "phi_1..phi_4 explicit forms (rel)", explicit, 1e-13),
        _check("kernels", "separable vs hypergeometric phi (rel)", hyper, 1e-13),
        _check("kernels", "kernel positivity (failures)", positivity, 0.0),
        _check("kernels", "iterated kernel recursion (rel)", iterated, 1e-6),
        _check("kernels", "fast vs naive Green sum (rel)", fast_naive, 1e-12),
        _check("kernels", "Green roundtrip through FD inertia", roundtrip, 1e-3),
    ]


# ---- radial operators -------------------------------------------------------

def burgers_characteristics(u0: Callable, x, t, iterations: int = 60):
    """Pre-shock solution of ``u_t + 3 u u_x = 0`` by solving ``x = xi + 3 t u0(xi)`` for the foot ``xi``."""
    x = np.asarray(x, dtype=float)
    xi = x.copy()
    h = 1e-7
    for _ in range(iterations):
        g = xi + 3 * t * u0(xi) - x
        dg = 1 + 3 * t * (u0(xi + h) - u0(xi - h)) / (2 * h)
        step = g / dg
        xi = xi - step
        if np.max(np.abs(step)) < 1e-15 * (1 + np.max(np.abs(x))):
            break
    return u0(xi)


def burgers_series(points: int, frames: int, t_end: float = 0.2, half_width: float = 3.0) -> FieldSeries:
    x = np.linspace(-half_width, half_width, points)
    t = np.linspace(0.0, t_end, frames)
    h = x[1] - x[0]
    data = [GridField(burgers_characteristics(lambda v: -np.tanh(v), x, ti)[None, :], (h,)) for ti in t]
    return FieldSeries(t, tuple(data))


def radialops_checks() -> list[CheckResult]:
    grid = RadialGrid.uniform(401, 2.0)
    r = grid.nodes
    h = r[1]
    interior = slice(1, -1)
    linear = max(
        float(np.max(np.abs(radial_vector_laplacian(RadialField(grid, r), n).values[interior]))) for n in (1, 2, 3, 5, 9)
    )
    cubic = float(np.max(np.abs(radial_vector_laplacian(RadialField(grid, r**3), 3).values[interior] - 10 * r[interior])))

    rng = np.random.default_rng(3)
    u = r * np.exp(-r * r)
    v = np.sin(r) * np.exp(-r)
    alpha, beta = rng.normal(size=2)
    lhs = apply_inertia(RadialField(grid, alpha * u + beta * v), 2, 5).values
    rhs = alpha * apply_inertia(RadialField(grid, u), 2, 5).values + beta * apply_inertia(RadialField(grid, v), 2, 5).values
    linearity = _rel(lhs, rhs)

    series = burgers_series(201, 21)
    one = burgers_residual(series, 1)
    two = burgers_residual(lift_series(series), 2)
    lift = abs(one - two)
    fine = burgers_residual(burgers_series(401, 41), 1)
    order = math.log2(one / fine) if fine > 0 else math.inf

    return [
        _check("radialops", "Laplacian annihilates u = r", linear, 1e3 * h * h),
        _check("radialops", "Laplacian of r^3 in n=3 equals 10 r", cubic, 10 * h * h),
        _check("radialops", "inertia operator linearity (rel, roundoff)", linearity, 1e-10),
        _check("radialops", "lifted Burgers residual equals 1-d residual", lift, 1e-12),
        _check("radialops", "Burgers residual second-order (1.5 - order)", 1.5 - order, 0.0),
    ]


SUITES = {
    "hypergeom": hypergeom_checks,
    "kernels": kernel_checks,
    "radialops": radialops_checks,
}


def run_suite(name: str, **kwargs) -> list[CheckResult]:
    if name == "all":
        out = []
        for key in SUITES:
            out.extend(SUITES[key]())
        return out
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(list(SUITES) + ['all'])}")
    return SUITES[name](**kwargs)


def format_table(results: list[CheckResult]) -> str:
    return "\n".join(r.line() for r in results)
