"""Shared test utilities: scalar point-mass driver for the per-axis
controller and the overshoot measure used by the damping comparisons."""

import numpy as np

from teleopsim.fic import AxisErrorState, AxisFicState, fic_wrench


def simulate_point_mass(params, err0, dt=1e-4, t_end=4.0, mass=1.0,
                        external=None):
    """Explicit scalar simulation of m*x'' = F_fic (+ external), setpoint at
    0 and err = -x. Returns time, err, err-rate and force arrays."""
    n = int(round(t_end / dt))
    x = -err0
    v = 0.0
    s = AxisFicState()
    ts = np.empty(n)
    errs = np.empty(n)
    vels = np.empty(n)
    forces = np.empty(n)
    for i in range(n):
        err = -x
        res = fic_wrench(AxisErrorState(err, -v), s, params, body_vel=v)
        s = res.state
        f_ext = external(i * dt) if external is not None else 0.0
        v += (res.force + f_ext) / mass * dt
        x += v * dt
        ts[i] = i * dt
        errs[i] = err
        vels[i] = -v
        forces[i] = res.force
    return ts, errs, vels, forces
