"""Right-hand sides of the semi-discrete plant, observer, and closed loop.

Boundary handling is by ghost values at x = 1: the plant ghost encodes the
Neumann control condition z_x(1) = u, the observer ghost adds the output
injection alpha*(y - zhat_t(1)).  The Dirichlet value at x = 0 is always 0.
"""

import math

import numpy as np

from .functionals import hamiltonian

__all__ = [
    "plant_ghost",
    "observer_ghost",
    "output_y",
    "control_u",
    "loop_signals",
    "rhs_field",
    "rhs_closed_loop",
]


def plant_ghost(z_last, u, h):
    """Ghost displacement at x_n for the controlled plant: z_{n-1} + h*u."""
    return z_last + h * u


def observer_ghost(zhat_last, u, alpha, y, vhat_last, h):
    """Observer ghost at x_n: zhat_{n-1} + h*(u + alpha*(y - vhat_{n-1}))."""
    return zhat_last + h * (u + alpha * (y - vhat_last))


def output_y(plant):
    """Measured output: plant velocity at the last interior node x_{n-1}."""
    return plant.v[-1]


def control_u(h_hat, y, ctrl, params):
    """Speed-gradient control u = -gamma * psi(Hhat - H*) * y."""
    return -ctrl.gamma * ctrl.psi_value(h_hat - ctrl.h_star, params.k) * y


def rhs_field(state, params, ghost_right, grid):
    """Acceleration a_i = k (z_{i+1} - 2 z_i + z_{i-1})/h^2 - beta sin z_i.

    Uses z_0 = 0 and z_n = ghost_right for the end stencils.
    """
    if not math.isfinite(ghost_right):
        raise ValueError(f"non-finite ghost value {ghost_right}")
    z = state.z
    left = np.concatenate((np.zeros(1), z[:-1]))
    right = np.concatenate((z[1:], np.asarray([ghost_right])))
    return (params.k * (right - 2.0 * z + left) / (grid.h * grid.h)
            - params.beta * np.sin(z))


def loop_signals(s, params, ctrl, obs, grid):
    """Boundary signals of the closed loop, in the fixed evaluation order.

    Returns (y, h_hat, u, plant ghost, observer ghost).  The order is:
    output y, then the observer energy Hhat, then the control u, then the
    ghosts.  u is not known yet when Hhat is computed, so the observer ghost
    used for Hhat carries only the injection part of its boundary law; the
    returned ghosts use the full law with the computed u.
    """
    plant, observer = s.plant, s.observer
    y = output_y(plant)
    innovation = obs.alpha * (y - observer.v[-1])
    h_hat = hamiltonian(observer, params, grid,
                        observer.z[-1] + grid.h * innovation)
    u = control_u(h_hat, y, ctrl, params)
    gp = plant_ghost(plant.z[-1], u, grid.h)
    go = observer_ghost(observer.z[-1], u, obs.alpha, y, observer.v[-1], grid.h)
    return (y, h_hat, u, gp, go)


def rhs_closed_loop(s, params, ctrl, obs, grid):
    """Coupled derivative (plant v, plant a, observer v, observer a)."""
    _y, _h_hat, _u, gp, go = loop_signals(s, params, ctrl, obs, grid)
    a_plant = rhs_field(s.plant, params, gp, grid)
    a_obs = rhs_field(s.observer, params, go, grid)
    return (s.plant.v, a_plant, s.observer.v, a_obs)
