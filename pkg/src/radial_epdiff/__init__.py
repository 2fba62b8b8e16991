"""Blowup laboratory for the radial EPDiff equation with inertia operator (-Laplacian)^k."""
from .kernels import KernelSpec, RadialGrid, greens_apply, kernel_spec

__all__ = ["KernelSpec", "RadialGrid", "greens_apply", "kernel_spec"]
__version__ = "0.1.0"
