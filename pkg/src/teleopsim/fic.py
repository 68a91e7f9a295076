"""Per-axis fractal impedance controller (FIC).

The FIC is a passive impedance law with a state dependent stiffness that is
asymmetric between motion away from the setpoint (divergence) and motion back
towards it (convergence). During divergence the stiffness grows exponentially
with the position error and saturates so that the exerted force never exceeds
a calibrated maximum. During convergence the energy absorbed on the way out is
redistributed as a linear spring centred on the midpoint of the return path,
which brings the axis back to zero error with zero residual speed and without
relying on viscous damping for stability.

All quantities are scalar and per axis: a Cartesian controller is an array of
independent instances of this law, one per task-space direction. Sign
convention: ``err = desired - actual`` and ``vel`` is the error rate; the
returned force acts on the controlled body along the axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.integrate import quad

# Dead band on the error rate used by the phase detector. Discrete-time sign
# detection would chatter around velocity zero crossings without it.
DEFAULT_VEL_EPSILON = 1e-4


class Phase(enum.Enum):
    DIVERGENCE = 0
    CONVERGENCE = 1


@dataclass(frozen=True)
class FicParams:
    """Calibrated per-axis gains.

    w_max   maximum exertable force (N) or torque (N m)
    x_b     error at which the force saturates (m or rad)
    k_0     constant stiffness floor (N/m or N m/rad)
    d       viscous damping (N s/m or N m s/rad)
    beta    shape factor of the exponential stiffness ramp (derived)
    k_max   variable stiffness reached at x_b (derived, = w_max / x_b)
    vel_epsilon  dead band of the phase detector (m/s or rad/s)
    """

    w_max: float
    x_b: float
    k_0: float
    d: float
    beta: float
    k_max: float
    vel_epsilon: float = DEFAULT_VEL_EPSILON


def calibrate(w_max: float, x_b: float, k_0: float = 0.0, d: float = 0.0,
              vel_epsilon: float = DEFAULT_VEL_EPSILON) -> FicParams:
    """Derive the full parameter set from the force cap and saturation error.

    k_max = w_max / x_b and beta = sqrt(ln(k_max)) / x_b, so that the
    exponential ramp exp((beta*x)^2) reaches exactly k_max at x = x_b.

    Raises ValueError for non-positive inputs and for w_max / x_b <= 1, where
    ln(k_max) <= 0 leaves no real beta (the profile would be degenerate).
    """
    if w_max <= 0.0:
        raise ValueError(f"w_max must be > 0, got {w_max}")
    if x_b <= 0.0:
        raise ValueError(f"x_b must be > 0, got {x_b}")
    if k_0 < 0.0:
        raise ValueError(f"k_0 must be >= 0, got {k_0}")
    if d < 0.0:
        raise ValueError(f"d must be >= 0, got {d}")
    if vel_epsilon <= 0.0:
        raise ValueError(f"vel_epsilon must be > 0, got {vel_epsilon}")
    k_max = w_max / x_b
    if k_max <= 1.0:
        raise ValueError(
            f"w_max/x_b = {k_max:g} <= 1: stiffness ramp has no real shape "
            "factor; increase w_max or decrease x_b")
    beta = math.sqrt(math.log(k_max)) / x_b
    return FicParams(w_max=w_max, x_b=x_b, k_0=k_0, d=d, beta=beta,
                     k_max=k_max, vel_epsilon=vel_epsilon)


@dataclass(frozen=True)
class AxisErrorState:
    """Instantaneous scalar error and error rate of one axis."""

    err: float
    vel: float


@dataclass(frozen=True)
class AxisFicState:
    """Memory of the hysteresis cycle for one axis.

    x_max_err is the largest |err| reached in the current divergence phase and
    stored_energy the energy absorbed while reaching it; both feed the
    convergence spring and are reset when a new divergence phase begins.
    """

    phase: Phase = Phase.DIVERGENCE
    x_max_err: float = 0.0
    stored_energy: float = 0.0
    last_err: float = 0.0
    last_vel: float = 0.0


def divergence_stiffness(err: float, p: FicParams) -> float:
    """Total stiffness K_0 + K_v during divergence.

    Inside the band |err| <= x_b the variable part is exp((beta*|err|)^2);
    beyond it the profile switches to w_max/|err| - k_0 so that the total
    stiffness times the error is exactly w_max. The branch switch drops the
    k_0 floor, i.e. the force steps down by k_0 * x_b at the boundary.
    """
    a = abs(err)
    if a <= p.x_b:
        return p.k_0 + math.exp((p.beta * a) ** 2)
    return p.w_max / a


def _stored_energy_closed_form(x_max_err: float, p: FicParams) -> float:
    """Exact integral of K_div(x)*x from 0 to x_max_err.

    Antiderivative of (k_0 + exp((beta x)^2)) x is
    k_0 x^2/2 + exp((beta x)^2) / (2 beta^2); in the saturated band the
    integrand is the constant w_max.
    """
    if x_max_err <= 0.0:
        return 0.0
    two_b2 = 2.0 * p.beta * p.beta
    x = min(x_max_err, p.x_b)
    e = 0.5 * p.k_0 * x * x + (math.exp((p.beta * x) ** 2) - 1.0) / two_b2
    if x_max_err > p.x_b:
        e += p.w_max * (x_max_err - p.x_b)
    return e


def stored_divergence_energy(x_max_err: float, p: FicParams) -> float:
    """Energy absorbed by the divergence spring out to x_max_err (J).

    Adaptive quadrature of K_div(x)*x with absolute tolerance 1e-9. The
    closed form above is used internally on the control path; this entry
    point keeps the integral definition explicit and is cross-checked against
    the closed form in the tests.
    """
    if x_max_err < 0.0:
        raise ValueError("x_max_err must be >= 0")
    if x_max_err == 0.0:
        return 0.0
    pieces = [(0.0, min(x_max_err, p.x_b))]
    if x_max_err > p.x_b:
        pieces.append((p.x_b, x_max_err))
    total = 0.0
    for lo, hi in pieces:
        val, _ = quad(lambda x: divergence_stiffness(x, p) * x, lo, hi,
                      epsabs=1e-9, epsrel=1e-12, limit=200)
        total += val
    return total


def convergence_force(err: float, x_max_err: float, stored_energy: float,
                      p: FicParams | None = None) -> float:
    """Force of the convergence spring, bounded everywhere.

    A linear profile with gradient 4E/x_max^2 that crosses zero at
    |err| = x_max/2: it pulls towards the setpoint over the outer half of the
    return path and pushes back over the inner half, so the net work over a
    full return from x_max to 0 is zero and the axis arrives at rest. When
    params are given the magnitude is additionally capped at w_max; the cap
    is symmetric about the midpoint and therefore keeps the net work at zero.
    """
    if x_max_err <= 0.0:
        return 0.0
    a = min(abs(err), x_max_err)
    k_c = 4.0 * stored_energy / (x_max_err * x_max_err)
    mag = k_c * (a - 0.5 * x_max_err)
    if p is not None:
        mag = max(-p.w_max, min(p.w_max, mag))
    if err == 0.0:
        return 0.0
    return mag if err > 0.0 else -mag


def convergence_stiffness(err: float, x_max_err: float,
                          stored_energy: float) -> float:
    """Convergence-phase stiffness K such that K*err is the return force.

    |K| equals (4 E / x_max^2) * (0.5 x_max - |err|) / |err|; the sign is
    chosen so that the resulting force restores towards the setpoint over the
    outer half of the return path (|err| > x_max/2) and brakes the arrival
    over the inner half. Near err = 0 the stiffness form diverges while the
    force stays bounded; callers inside the control loop use
    convergence_force directly.
    """
    if x_max_err <= 0.0:
        raise ValueError("x_max_err must be > 0 in convergence")
    a = abs(err)
    if a < 1e-9:
        raise ValueError(
            "stiffness form is singular near zero error; use convergence_force")
    return convergence_force(err, x_max_err, stored_energy) / err


def update_phase(state: AxisFicState, e: AxisErrorState,
                 vel_epsilon: float = DEFAULT_VEL_EPSILON,
                 p: FicParams | None = None) -> AxisFicState:
    """Advance the divergence/convergence state machine.

    Divergence holds while error and error rate share a sign or the rate sits
    inside the dead band; otherwise the axis is converging. Entering
    divergence from convergence restarts the cycle memory at the current
    error; while diverging, the peak error grows monotonically and the stored
    energy is recomputed for the new peak (which needs the stiffness params;
    without them the energy field is left for the caller to refresh).
    """
    if vel_epsilon <= 0.0:
        raise ValueError("vel_epsilon must be > 0")
    diverging = (e.err * e.vel >= 0.0) or (abs(e.vel) < vel_epsilon)
    a = abs(e.err)
    if diverging:
        if state.phase is Phase.CONVERGENCE:
            new_max = a
        else:
            new_max = max(state.x_max_err, a)
        energy = state.stored_energy
        if new_max != state.x_max_err or state.phase is Phase.CONVERGENCE:
            energy = (_stored_energy_closed_form(new_max, p)
                      if p is not None else 0.0)
        return AxisFicState(Phase.DIVERGENCE, new_max, energy, e.err, e.vel)
    # entering or continuing convergence: freeze the cycle memory, but never
    # let the frozen peak fall below the current error
    x_max = max(state.x_max_err, a)
    energy = state.stored_energy
    if x_max != state.x_max_err and p is not None:
        energy = _stored_energy_closed_form(x_max, p)
    return AxisFicState(Phase.CONVERGENCE, x_max, energy, e.err, e.vel)


@dataclass(frozen=True)
class FicWrench:
    """Wrench of one axis split into its components."""

    force: float
    stiffness_force: float
    damping_force: float
    state: AxisFicState


def fic_wrench(e: AxisErrorState, state: AxisFicState, p: FicParams,
               body_vel: float | None = None) -> FicWrench:
    """One controller evaluation: phase update plus force.

    body_vel is the absolute velocity of the controlled body, which the
    damping term opposes; it defaults to -e.vel, exact whenever the setpoint
    is stationary. The stiffness component never exceeds w_max + k_0 * x_b in
    magnitude and exceeds w_max only inside the unsaturated divergence band.
    """
    state = update_phase(state, e, p.vel_epsilon, p)
    if state.phase is Phase.DIVERGENCE:
        f_stiff = divergence_stiffness(e.err, p) * e.err
    else:
        f_stiff = convergence_force(e.err, state.x_max_err,
                                    state.stored_energy, p)
    if body_vel is None:
        body_vel = -e.vel
    f_damp = -p.d * body_vel
    return FicWrench(force=f_stiff + f_damp, stiffness_force=f_stiff,
                     damping_force=f_damp, state=state)
