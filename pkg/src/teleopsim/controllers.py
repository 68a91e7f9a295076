"""Master and replica control laws.

The master device runs as an admittance: its commanded wrench is the sum of
a fractal-impedance centring term (which doubles as a soft workspace
boundary, saturating at the master force cap) and the scaled force feedback
from the replica. The replica is torque controlled: the master displacement
enters as a proportional virtual force at the end-effector, a fractal
impedance regulates the end-effector around the commanded pose, velocity
coupling is cancelled by the task-space bias wrench, a null-space law keeps
redundant joints near a reference posture, and gravity is compensated.

A constant-stiffness impedance controller with the same structure serves as
the comparison baseline; it shares every term except the task-space
stiffness/damping law itself.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    DynamicsTerms,
    JointState,
    ManipulatorModel,
    dynamics_terms,
    end_effector_state,
    jacobian,
    operational_terms,
)
from .fic import AxisErrorState, AxisFicState, FicParams, fic_wrench


@dataclass(frozen=True)
class MasterParams:
    """Per-axis fractal impedance of the master plus the feedback gain."""

    fic: tuple[FicParams, ...]
    k_a: float = 1.0
    mass: float = 0.5  # simulated admittance mass per axis
    workspace_radius: float = 0.15

    def __post_init__(self):
        if self.k_a < 0.0:
            raise ValueError("k_a must be >= 0")
        if self.mass <= 0.0:
            raise ValueError("mass must be > 0")


@dataclass(frozen=True)
class ReplicaParams:
    """Per-axis fractal impedance of the replica plus coupling gains."""

    fic: tuple[FicParams, ...]
    k_c: float
    k_null: float = 0.0
    d_null: float = 0.0
    q_ref: tuple[float, ...] = ()

    def __post_init__(self):
        if min(self.k_c, self.k_null, self.d_null) < 0.0:
            raise ValueError("gains must be >= 0")


@dataclass(frozen=True)
class IcParams:
    """Constant-stiffness baseline; damping conventionally several times the
    fractal controller's to keep the baseline stable."""

    k: tuple[float, ...]
    d: tuple[float, ...]
    k_c: float = 0.0
    k_null: float = 0.0
    d_null: float = 0.0
    q_ref: tuple[float, ...] = ()

    def __post_init__(self):
        if any(v <= 0.0 for v in self.k) or any(v <= 0.0 for v in self.d):
            raise ValueError("k and d must be > 0")


@dataclass(frozen=True)
class TeleopCommand:
    """Operator-side command as seen by the replica controller."""

    master_err: np.ndarray  # master displacement from its home pose
    x_desired: np.ndarray  # replica reference pose
    gripper_held: bool = False


@dataclass
class MasterWrenchResult:
    wrench: np.ndarray
    fic_states: tuple[AxisFicState, ...]
    stiffness: np.ndarray
    damping: np.ndarray
    feedback: np.ndarray


@dataclass
class TorqueResult:
    tau: np.ndarray
    fic_states: tuple[AxisFicState, ...] | None
    task_stiffness: np.ndarray
    task_damping: np.ndarray
    f_v: np.ndarray
    bias: np.ndarray
    gravity: np.ndarray
    null_torque: np.ndarray


def master_wrench(p: MasterParams, axis_states, fic_states, f_fb,
                  master_vel=None) -> MasterWrenchResult:
    """Commanded wrench for the master admittance.

    axis_states holds one AxisErrorState per axis with err measured from the
    master home pose (home - position) so the centring force saturates at the
    master w_max, fencing the workspace. f_fb is the (possibly delayed)
    end-effector wrench from the replica, scaled by k_a.
    """
    n = len(p.fic)
    f_fb = np.asarray(f_fb, dtype=float)
    stiff = np.zeros(n)
    damp = np.zeros(n)
    new_states = []
    for i in range(n):
        body_vel = None if master_vel is None else float(master_vel[i])
        res = fic_wrench(axis_states[i], fic_states[i], p.fic[i],
                         body_vel=body_vel)
        stiff[i] = res.stiffness_force
        damp[i] = res.damping_force
        new_states.append(res.state)
    feedback = p.k_a * f_fb
    return MasterWrenchResult(wrench=stiff + damp + feedback,
                              fic_states=tuple(new_states),
                              stiffness=stiff, damping=damp,
                              feedback=feedback)


def virtual_force(k_c: float, master_err) -> np.ndarray:
    """Proportional virtual force pulling the replica along the operator's
    displacement of the master."""
    return k_c * np.asarray(master_err, dtype=float)


def velocity_mode_update(cmd: TeleopCommand, dt: float,
                         rate_gain: float = 1.0) -> TeleopCommand:
    """While the gripper is held, the commanded pose drifts along the master
    displacement; releasing it freezes the pose."""
    if not cmd.gripper_held:
        return cmd
    return replace(cmd, x_desired=cmd.x_desired
                   + rate_gain * dt * cmd.master_err)


def _shared_task_torque(model: ManipulatorModel, js: JointState,
                        task_force: np.ndarray, k_null: float, d_null: float,
                        q_ref, terms: DynamicsTerms, J: np.ndarray):
    """Common structure of both replica controllers: map the task force plus
    the bias wrench through J^T, add the projected null-space posture torque
    and gravity compensation."""
    lam, bias, _, MinvJT = operational_terms(model, js.q, js.qd, terms, J)
    tau = J.T @ (task_force + bias)
    if k_null > 0.0 or d_null > 0.0:
        q_ref = np.asarray(q_ref, dtype=float)
        tau_null = k_null * (q_ref - js.q) - d_null * js.qd
        # dynamically consistent projector I - J^T lam J M^-1
        null_contrib = tau_null - J.T @ (lam @ (MinvJT.T @ tau_null))
    else:
        null_contrib = np.zeros(model.dof)
    return tau + null_contrib + terms.g, bias, null_contrib


def replica_torque_fic(p: ReplicaParams, model: ManipulatorModel,
                       js: JointState, cmd: TeleopCommand,
                       fic_states, dt: float,
                       terms: DynamicsTerms | None = None,
                       J: np.ndarray | None = None) -> TorqueResult:
    """Joint torques for the fractal-impedance replica.

    The per-axis error rate is reconstructed from the previous error held in
    each axis state, which keeps commanded-pose jumps (channel staircase)
    visible to the phase detector, while damping acts on the measured
    end-effector velocity.
    """
    if terms is None:
        terms = dynamics_terms(model, js.q, js.qd)
    if J is None:
        J = jacobian(model, js.q)
    pose, vel = end_effector_state(model, js, J)
    m = model.task_dim
    err = np.asarray(cmd.x_desired, dtype=float) - pose
    f_v = virtual_force(p.k_c, cmd.master_err)
    stiff = np.zeros(m)
    damp = np.zeros(m)
    new_states = []
    for i in range(m):
        err_rate = (err[i] - fic_states[i].last_err) / dt
        res = fic_wrench(AxisErrorState(err[i], err_rate), fic_states[i],
                         p.fic[i], body_vel=float(vel[i]))
        stiff[i] = res.stiffness_force
        damp[i] = res.damping_force
        new_states.append(res.state)
    task_force = f_v + stiff + damp
    tau, bias, null_contrib = _shared_task_torque(
        model, js, task_force, p.k_null, p.d_null, p.q_ref, terms, J)
    return TorqueResult(tau=tau, fic_states=tuple(new_states),
                        task_stiffness=stiff, task_damping=damp, f_v=f_v,
                        bias=bias, gravity=terms.g, null_torque=null_contrib)


def replica_torque_ic(p: IcParams, model: ManipulatorModel, js: JointState,
                      cmd: TeleopCommand, dt: float = 0.0,
                      terms: DynamicsTerms | None = None,
                      J: np.ndarray | None = None) -> TorqueResult:
    """Joint torques for the constant-stiffness baseline: identical wiring,
    but the task-space law is a plain spring-damper with no phase machine
    and no force saturation."""
    if terms is None:
        terms = dynamics_terms(model, js.q, js.qd)
    if J is None:
        J = jacobian(model, js.q)
    pose, vel = end_effector_state(model, js, J)
    err = np.asarray(cmd.x_desired, dtype=float) - pose
    k = np.asarray(p.k, dtype=float)
    d = np.asarray(p.d, dtype=float)
    stiff = k * err
    damp = -d * vel
    f_v = virtual_force(p.k_c, cmd.master_err)
    tau, bias, null_contrib = _shared_task_torque(
        model, js, f_v + stiff + damp, p.k_null, p.d_null, p.q_ref, terms, J)
    return TorqueResult(tau=tau, fic_states=None, task_stiffness=stiff,
                        task_damping=damp, f_v=f_v, bias=bias,
                        gravity=terms.g, null_torque=null_contrib)
