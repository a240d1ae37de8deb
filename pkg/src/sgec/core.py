"""Shared domain types: physical parameters, spatial grid, field states, and
controller/observer configuration.

The state convention is interior-only: the Dirichlet value at x = 0 is always
zero and the ghost value at x = 1 is recomputed from the boundary law on every
right-hand-side evaluation, so neither is stored.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysicalParams",
    "Grid",
    "FieldState",
    "ClosedLoopState",
    "ControllerConfig",
    "ObserverConfig",
    "build_grid",
    "sample_profile",
]

PSI_KINDS = ("linear", "tanh")

# Names usable inside expr: profiles.  Deliberately small; everything is
# vectorized over the node coordinates.
_EXPR_NAMES = {
    "x": None,  # filled per call
    "pi": math.pi,
    "e": math.e,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


@dataclass(frozen=True)
class PhysicalParams:
    """Coefficients of z_tt = k z_xx - beta sin(z); both must be positive."""

    k: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"k must be finite and > 0, got {self.k}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and > 0, got {self.beta}")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with n intervals and interior nodes i*h, i=1..n-1."""

    n: int
    h: float

    @property
    def n_interior(self):
        return self.n - 1

    def interior_nodes(self):
        return np.arange(1, self.n) * self.h


def build_grid(n):
    """Build the uniform grid with n >= 3 intervals (h = 1/n)."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValueError(f"interval count must be an integer, got {n!r}")
    if n < 3:
        raise ValueError(f"degenerate grid: need n >= 3 intervals, got {n}")
    return Grid(n=int(n), h=1.0 / int(n))


def _as_state_vector(vec, name):
    arr = np.asarray(vec, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class FieldState:
    """Displacement and velocity samples of one field at the interior nodes."""

    z: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        z = _as_state_vector(self.z, "z")
        v = _as_state_vector(self.v, "v")
        if z.shape != v.shape:
            raise ValueError(f"z and v lengths differ: {z.size} vs {v.size}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class ClosedLoopState:
    """Plant and observer fields on the same grid, plus the current time."""

    plant: FieldState
    observer: FieldState
    t: float = 0.0

    def __post_init__(self):
        if self.plant.z.size != self.observer.z.size:
            raise ValueError("plant and observer must live on the same grid")


@dataclass(frozen=True)
class ControllerConfig:
    """Speed-gradient controller: u = -gamma * psi(Hhat - h_star) * y.

    psi kinds: "linear" is psi(s) = k*s (slope equal to the wave coefficient,
    which reproduces the basic speed-gradient law); "tanh" is the bounded
    variant psi(s) = c*tanh(s/c) with c = psi_scale.
    """

    gamma: float
    h_star: float
    psi: str = "linear"
    psi_scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")
        if not (math.isfinite(self.h_star) and self.h_star >= 0):
            raise ValueError(f"h_star must be finite and >= 0, got {self.h_star}")
        if self.psi not in PSI_KINDS:
            raise ValueError(f"unknown psi kind {self.psi!r}; choose from {PSI_KINDS}")
        if not (math.isfinite(self.psi_scale) and self.psi_scale > 0):
            raise ValueError(f"psi_scale must be finite and > 0, got {self.psi_scale}")

    def psi_value(self, s, k):
        """Evaluate the gain function at s; k is the wave coefficient."""
        if self.psi == "linear":
            return k * s
        c = self.psi_scale
        return c * math.tanh(s / c)


@dataclass(frozen=True)
class ObserverConfig:
    """Observer gain and initial profiles (descriptors or sampled vectors)."""

    alpha: float
    zhat0: object = "zero"
    zhat1: object = "zero"

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha}")


def sample_profile(descriptor, grid):
    """Evaluate an initial-profile descriptor at the interior nodes.

    Accepted descriptors: "zero", "const:<c>", "paper" (the reference profile
    5*(1 - cos(2*pi*x))), "expr:<expression in x>", or an already-sampled
    vector of length n-1.
    """
    m = grid.n_interior
    if not isinstance(descriptor, str):
        arr = _as_state_vector(descriptor, "profile")
        if arr.size != m:
            raise ValueError(
                f"profile vector has length {arr.size}, grid needs {m}")
        return arr.copy()

    text = descriptor.strip()
    x = grid.interior_nodes()
    if text == "zero":
        return np.zeros(m)
    if text == "paper":
        return 5.0 * (1.0 - np.cos(2.0 * np.pi * x))
    if text.startswith("const:"):
        try:
            c = float(text[len("const:"):])
        except ValueError:
            raise ValueError(f"bad constant profile {descriptor!r}") from None
        if not math.isfinite(c):
            raise ValueError(f"constant profile must be finite, got {c}")
        return np.full(m, c)
    if text.startswith("expr:"):
        expr = text[len("expr:"):]
        names = dict(_EXPR_NAMES)
        names["x"] = x
        try:
            val = eval(expr, {"__builtins__": {}}, names)  # noqa: S307 - restricted namespace
        except Exception as exc:
            raise ValueError(f"profile expression {expr!r} failed: {exc}") from None
        arr = np.broadcast_to(np.asarray(val, dtype=float), (m,)).copy()
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"profile expression {expr!r} evaluated to non-finite values")
        return arr
    raise ValueError(f"unknown profile descriptor {descriptor!r}")
