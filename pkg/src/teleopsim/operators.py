"""Scripted operators driving the master device.

Three protocols: hammer impulses on the replica end-effector while nobody
holds the master, a touch-and-release pass over a contact object, and the
two-button press task. Scripts interact with the world exactly the way a
human at the console would: they push the master device around (modelled as
a stiff hand holding it), toggle the gripper to drag the commanded pose, and
read nothing but the force feedback that arrives through the communication
channel plus their own command state. Ground-truth replica state is never
visible to a script.

The OperatorOutput structure doubles as the wire schema for interactive
console commands.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class ScriptKind(enum.Enum):
    IDLE = "idle"
    IMPULSES = "impulses"
    OBJECT_TOUCH = "object_touch"
    BUTTON_PRESS = "button_press"


@dataclass(frozen=True)
class Waypoint:
    time: float
    target: tuple[float, float]
    gripper_held: bool = False


@dataclass(frozen=True)
class ImpulseEvent:
    time: float
    peak: tuple[float, float]  # peak wrench of the half-sine
    duration: float


@dataclass(frozen=True)
class OperatorProfile:
    """Hand/gain bundle; the conservative profile models an unpractised
    operator through slower moves and longer confirmation dwells."""

    name: str = "expert"
    move_speed: float = 0.25  # commanded-pose speed on GUI transits (m/s)
    grip_displacement: float = 0.05  # master push while using the gripper
    press_rate: float = 0.08  # descent rate of the hand target (m/s)
    press_force: float = 7.0  # feedback force considered a firm press (N)
    confirm_time: float = 0.25  # dwell with force confirmed before retract
    settle_time: float = 0.6
    hand_stiffness: float = 800.0
    hand_damping: float = 40.0


EXPERT = OperatorProfile()
NAIVE = OperatorProfile(name="naive", move_speed=0.11,
                        grip_displacement=0.03, press_rate=0.04,
                        press_force=6.5, confirm_time=0.6, settle_time=1.2,
                        hand_stiffness=500.0, hand_damping=35.0)

PROFILES = {"expert": EXPERT, "naive": NAIVE}

PRESS_TIMEOUT = 60.0  # per press, simulated seconds


@dataclass(frozen=True)
class OperatorScript:
    kind: ScriptKind
    waypoints: tuple[Waypoint, ...] = ()
    impulses: tuple[ImpulseEvent, ...] = ()
    profile: OperatorProfile = EXPERT
    hover_height: float = 0.03
    press_dir: tuple[float, float] = (0.0, -1.0)
    seed: int = 0


@dataclass(frozen=True)
class OperatorOutput:
    """Operator command for one tick; also the UI command payload.

    master_err is the hand target for the master device displacement (the
    device itself lags behind it through the hand coupling); the external
    impulse is a wrench applied directly at the replica end-effector
    (the hammer).
    """

    master_err: tuple[float, float] = (0.0, 0.0)
    gripper_held: bool = False
    hand_attached: bool = True
    external_impulse: tuple[float, float] = (0.0, 0.0)
    pose_nudge: tuple[float, float] = (0.0, 0.0)


IDLE_OUTPUT = OperatorOutput()


@dataclass(frozen=True)
class OperatorObservation:
    """Everything a script may legally see: the feedback wrench as it
    emerges from the channel, plus its own master-side command state."""

    f_fb: tuple[float, float]
    master_pos: tuple[float, float]
    x_desired: tuple[float, float]


@dataclass
class OperatorState:
    stage: int = 0
    stage_since: float = 0.0
    confirm_since: float | None = None
    quiet_since: float | None = None
    press_started: bool = False
    press_target: float = 0.0  # accumulated hand push during a press
    failed: bool = False
    done: bool = False
    presses_done: int = 0


def impulse_protocol(seed: int = 0, count: int = 14, peak: float = 20.0,
                     duration: float = 0.010, spacing: float = 2.2,
                     start: float = 1.0, direction=None) -> OperatorScript:
    """Hammer taps on the replica end-effector, master untouched.

    `count` half-sine impulses with the given peak force and width, spaced
    at least two seconds apart; directions are drawn from the seed unless a
    fixed direction vector is given.
    """
    rng = np.random.default_rng(seed)
    events = []
    t = start
    for _ in range(count):
        if direction is None:
            ang = rng.uniform(0.0, 2.0 * math.pi)
            vec = (math.cos(ang), math.sin(ang))
        else:
            n = math.hypot(direction[0], direction[1])
            vec = (direction[0] / n, direction[1] / n)
        events.append(ImpulseEvent(
            time=t, peak=(peak * vec[0], peak * vec[1]),
            duration=duration))
        t += spacing + rng.uniform(0.0, 0.3)
    return OperatorScript(kind=ScriptKind.IMPULSES, impulses=tuple(events),
                          seed=seed)


def button_press_protocol(button_positions, profile: str | OperatorProfile
                          = "expert", hover_height: float = 0.03,
                          start_pose=None) -> OperatorScript:
    """Press each button in turn: approach above it, press until the
    observed feedback force confirms activation, retract, translate to the
    next one. Presses react only to the delayed feedback."""
    if isinstance(profile, str):
        profile = PROFILES[profile]
    if len(button_positions) != 2:
        raise ValueError("exactly two button positions required")
    wps = []
    for bx, by in button_positions:
        wps.append(Waypoint(time=0.0, target=(bx, by + hover_height),
                            gripper_held=True))
    return OperatorScript(kind=ScriptKind.BUTTON_PRESS, waypoints=tuple(wps),
                          profile=profile, hover_height=hover_height)


def object_touch_protocol(surface_point, approach_dir=(1.0, 0.0),
                          profile: str | OperatorProfile = "expert",
                          standoff: float = 0.04) -> OperatorScript:
    """Drive to just off the object surface, press gently until contact is
    felt, then let go of the master entirely."""
    if isinstance(profile, str):
        profile = PROFILES[profile]
    ax, ay = approach_dir
    n = math.hypot(ax, ay)
    ax, ay = ax / n, ay / n
    hover = (surface_point[0] - standoff * ax, surface_point[1] - standoff * ay)
    wps = (Waypoint(time=0.0, target=hover, gripper_held=True),)
    return OperatorScript(kind=ScriptKind.OBJECT_TOUCH, waypoints=wps,
                          profile=profile, press_dir=(ax, ay))


def _move_command(current, target, speed):
    """Hand target that drags the commanded pose toward `target` via the
    gripper velocity mode (commanded pose drifts at rate_gain * master_err)."""
    dx = target[0] - current[0]
    dy = target[1] - current[1]
    dist = math.hypot(dx, dy)
    if dist < 1e-6:
        return (0.0, 0.0), True
    scale = min(speed, dist) / dist
    return (dx * scale, dy * scale), dist < 0.005


def _nudge_command(current, target, speed, dt):
    """Constant-speed step of the commanded pose toward `target` through
    the GUI pose-update path; large transits avoid the coupled virtual
    force entirely."""
    dx = target[0] - current[0]
    dy = target[1] - current[1]
    dist = math.hypot(dx, dy)
    if dist < 2e-3:
        return (0.0, 0.0), True
    step = min(speed * dt, dist)
    return (dx / dist * step, dy / dist * step), False


# button task stages, two blocks of five then done
_MOVE, _SETTLE, _PRESS, _HOLD, _RETRACT = range(5)
_STAGES_PER_BUTTON = 5


def _step_buttons(script: OperatorScript, state: OperatorState,
                  obs: OperatorObservation, t: float,
                  dt: float) -> OperatorOutput:
    prof = script.profile
    button = state.stage // _STAGES_PER_BUTTON
    if button >= len(script.waypoints):
        state.done = True
        return IDLE_OUTPUT
    local = state.stage % _STAGES_PER_BUTTON
    hover = script.waypoints[button].target

    def advance():
        state.stage += 1
        state.stage_since = t
        state.confirm_since = None
        state.quiet_since = None
        state.press_started = False
        state.press_target = 0.0

    if local == _MOVE:
        nudge, arrived = _nudge_command(obs.x_desired, hover,
                                        prof.move_speed, dt)
        if arrived:
            advance()
            return OperatorOutput(master_err=(0.0, 0.0))
        return OperatorOutput(master_err=(0.0, 0.0), pose_nudge=nudge)
    if local == _SETTLE:
        if t - state.stage_since >= prof.settle_time:
            advance()
        return OperatorOutput(master_err=(0.0, 0.0), gripper_held=False)
    if local == _PRESS:
        if t - state.stage_since > PRESS_TIMEOUT:
            state.failed = True
            state.done = True
            return IDLE_OUTPUT
        felt = abs(obs.f_fb[1])
        if not state.press_started:
            # stale feedback from the previous press may still be in flight;
            # wait for a quiet reading before trusting the force display
            if felt < 1.0:
                if state.quiet_since is None:
                    state.quiet_since = t
                if t - state.quiet_since >= 0.15:
                    state.press_started = True
            else:
                state.quiet_since = None
            return OperatorOutput(master_err=(0.0, 0.0))
        # proportional tracker on the observed (delayed, held) force; the
        # taper zone is narrow (last quarter before the target) so a tracked
        # approach is as quick as a blind one and never goes asymptotic
        frac = max(0.3, min(1.0, (1.05 * prof.press_force - felt)
                            / (0.3 * prof.press_force)))
        if felt < 0.95 * prof.press_force:
            state.press_target = min(
                state.press_target + prof.press_rate * frac * dt, 0.14)
        if felt >= 0.9 * prof.press_force:
            if state.confirm_since is None:
                state.confirm_since = t
            if t - state.confirm_since >= prof.confirm_time:
                advance()
        else:
            state.confirm_since = None
        return OperatorOutput(master_err=(0.0, -state.press_target),
                              gripper_held=False)
    if local == _HOLD:
        # keep the press briefly to make the activation unambiguous
        if t - state.stage_since >= 0.1:
            state.presses_done += 1
            advance()
        return OperatorOutput(master_err=(0.0, -state.press_target),
                              gripper_held=False)
    # _RETRACT: let go of the push and wait for the spring-back
    if t - state.stage_since >= prof.settle_time:
        advance()
        if state.stage // _STAGES_PER_BUTTON >= len(script.waypoints):
            state.done = True
    return OperatorOutput(master_err=(0.0, 0.0), gripper_held=False)


def _step_object_touch(script, state, obs, t, dt):
    prof = script.profile
    hover = script.waypoints[0].target
    direction = script.press_dir
    if state.stage == 0:
        cmd, arrived = _move_command(obs.x_desired, hover,
                                     prof.grip_displacement)
        if arrived:
            state.stage = 1
            state.stage_since = t
            return OperatorOutput(master_err=(0.0, 0.0))
        return OperatorOutput(master_err=cmd, gripper_held=True)
    if state.stage == 1:
        if t - state.stage_since > PRESS_TIMEOUT:
            state.failed = True
            state.done = True
            return IDLE_OUTPUT
        felt = math.hypot(*obs.f_fb)
        rate = prof.press_rate * max(0.0, min(1.0, (prof.press_force - felt)
                                              / prof.press_force))
        state.press_target = min(state.press_target + rate * dt, 0.14)
        if felt >= 0.6 * prof.press_force:
            if state.confirm_since is None:
                state.confirm_since = t
            if t - state.confirm_since >= prof.confirm_time:
                state.stage = 2
                state.presses_done += 1
        else:
            state.confirm_since = None
        return OperatorOutput(
            master_err=(direction[0] * state.press_target,
                        direction[1] * state.press_target))
    # released: hands off the master entirely
    state.done = True
    return OperatorOutput(master_err=(0.0, 0.0), hand_attached=False)


def step_operator(script: OperatorScript, state: OperatorState,
                  obs: OperatorObservation, t: float,
                  dt: float) -> tuple[OperatorOutput, OperatorState]:
    """Advance the script one tick.

    Deterministic given (script, state, observation history); the
    observation carries only channel outputs and the operator's own command
    state, never ground truth.
    """
    if script.kind is ScriptKind.IDLE:
        return IDLE_OUTPUT, state
    if script.kind is ScriptKind.IMPULSES:
        fx = fy = 0.0
        for ev in script.impulses:
            if ev.time <= t < ev.time + ev.duration:
                s = math.sin(math.pi * (t - ev.time) / ev.duration)
                fx += ev.peak[0] * s
                fy += ev.peak[1] * s
        if t > script.impulses[-1].time + script.impulses[-1].duration:
            state.done = True
        return OperatorOutput(master_err=(0.0, 0.0), hand_attached=False,
                              external_impulse=(fx, fy)), state
    if script.kind is ScriptKind.BUTTON_PRESS:
        return _step_buttons(script, state, obs, t, dt), state
    if script.kind is ScriptKind.OBJECT_TOUCH:
        return _step_object_touch(script, state, obs, t, dt), state
    raise ValueError(f"unhandled script kind {script.kind}")
