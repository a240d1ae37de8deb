"""Discrete energy and error functionals.

The gradient energy uses staggered differences over all n intervals (the
ghost interval included) and the node terms use weight h at the interior
nodes only.  This pairing is the discrete functional whose gradient is the
second-difference stencil, so the unforced semi-discrete system conserves it
exactly; time-integration error is then the only drift source, which is what
the conservation checks rely on.
"""

import numpy as np

__all__ = [
    "hamiltonian",
    "weighted_error",
    "goal_q",
    "power_identity_residual",
]


def hamiltonian(state, params, grid, ghost_right):
    """Discrete energy of one field given its current right ghost value.

    H = (k/2) sum_i h ((z_{i+1}-z_i)/h)^2 + sum interior h (v^2/2 + beta(1-cos z)),
    with z_0 = 0 and z_n = ghost_right.
    """
    dz = np.diff(state.z, prepend=0.0, append=ghost_right)
    grad = 0.5 * params.k * np.dot(dz, dz) / grid.h
    node = grid.h * (0.5 * np.dot(state.v, state.v)
                     + params.beta * np.sum(1.0 - np.cos(state.z)))
    return grad + node


def weighted_error(plant, observer, params, grid, ghosts):
    """Weighted quadratic estimation error E = (1/2) int (e_t^2 + k e_x^2).

    ghosts is the pair (plant ghost, observer ghost); the difference fixes
    the error field's own right ghost value.  Same quadrature rules as
    hamiltonian.
    """
    ghost_p, ghost_o = ghosts
    dz = np.diff(plant.z - observer.z, prepend=0.0, append=ghost_p - ghost_o)
    dv = plant.v - observer.v
    return 0.5 * (params.k * np.dot(dz, dz) / grid.h
                  + grid.h * np.dot(dv, dv))


def goal_q(h_val, h_star):
    """Quadratic goal function (1/2)(H - H*)^2."""
    d = h_val - h_star
    return 0.5 * d * d


def power_identity_residual(record, params):
    """Worst normalized mismatch between dH/dt and k*u*y along a record.

    dH/dt is formed by central differences at the interior samples; the first
    and last samples are excluded.  The mismatch is normalized by
    max(1, max |k u y|) over the same interior samples.  Requires a uniformly
    sampled record with at least 3 samples.
    """
    t = np.asarray(record.t, dtype=float)
    if t.size < 3:
        raise ValueError(f"need at least 3 samples, got {t.size}")
    dt = np.diff(t)
    if dt.min() <= 0:
        raise ValueError("samples must be strictly increasing in time")
    if (dt.max() - dt.min()) > 1e-9 * max(1.0, abs(t[-1])):
        raise ValueError("record is not uniformly sampled")

    h_arr = np.asarray(record.H, dtype=float)
    u = np.asarray(record.u, dtype=float)
    y = np.asarray(record.y, dtype=float)
    dh = (h_arr[2:] - h_arr[:-2]) / (t[2:] - t[:-2])
    kuy = params.k * u[1:-1] * y[1:-1]
    scale = max(1.0, float(np.max(np.abs(kuy))))
    return float(np.max(np.abs(dh - kuy)) / scale)
