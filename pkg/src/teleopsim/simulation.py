"""Deterministic fixed-timestep teleoperation loop.

One `Simulation` owns every piece of mutable state: the operator script,
the master admittance device, the three signal channels, the replica arm,
the contact scene and the log buffer. `step()` advances a single tick and is
the only stepping code path; the batch runner, the grid runner and the live
WebSocket session all drive it, which is what makes recorded live sessions
replayable bit for bit in batch.

Per tick the flow follows the block diagram of the architecture: the
operator sees the channel-delayed feedback wrench and produces a command;
the master integrates under its centring impedance, the scaled feedback and
the operator's hand; the master displacement and the commanded pose travel
through their channels; the replica controller turns them into joint
torques; the arm integrates with contact forces; the measured interaction
wrench enters the feedback channel for the next tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .comms import ChannelConfig, channel_step, make_channel
from .controllers import (
    TeleopCommand,
    master_wrench,
    replica_torque_fic,
    replica_torque_ic,
    velocity_mode_update,
)
from .dynamics import (
    JointState,
    dynamics_terms,
    end_effector_state,
    forward_kinematics,
    integrate_step,
    jacobian,
)
from .environment import ButtonLatch, contact_wrench
from .fic import AxisErrorState, AxisFicState, Phase, fic_wrench
from .logio import ExperimentLog
from .operators import (
    OperatorObservation,
    OperatorOutput,
    OperatorState,
    ScriptKind,
    step_operator,
)
from .scenes import (
    build_model,
    build_scene,
    default_ic,
    default_master,
    default_replica_fic,
)


class ConfigError(ValueError):
    """Invalid run configuration."""


class SimulationAbort(RuntimeError):
    """Non-finite state encountered; carries the last few log rows."""

    def __init__(self, message: str, tail: list[str]):
        super().__init__(message + "\n" + "\n".join(tail))
        self.tail = tail


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    duration: float = 10.0
    seed: int = 0
    controller: str = "fic"
    model: object = "planar2"
    scenario: dict = field(default_factory=lambda: {"kind": "idle"})
    channels: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    rate_gain: float = 1.0
    stop_on_done: bool = True
    tail: float = 1.0

    @staticmethod
    def from_dict(d: dict) -> "SimConfig":
        try:
            cfg = SimConfig(
                dt=float(d.get("dt", 1e-4)),
                duration=float(d.get("duration", 10.0)),
                seed=int(d.get("seed", 0)),
                controller=str(d.get("controller", "fic")).lower(),
                model=d.get("model", "planar2"),
                scenario=dict(d.get("scenario", {"kind": "idle"})),
                channels=dict(d.get("channels", {})),
                gains=dict(d.get("gains", {})),
                rate_gain=float(d.get("rate_gain", 1.0)),
                stop_on_done=bool(d.get("stop_on_done", True)),
                tail=float(d.get("tail", 1.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config field: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self):
        if not 0.0 < self.dt <= 1e-2:
            raise ConfigError(f"dt must be in (0, 1e-2], got {self.dt}")
        if self.duration <= 0.0:
            raise ConfigError("duration must be > 0")
        if self.controller not in ("fic", "ic"):
            raise ConfigError(f"controller must be fic or ic, "
                              f"got {self.controller!r}")

    def to_dict(self) -> dict:
        return {
            "dt": self.dt, "duration": self.duration, "seed": self.seed,
            "controller": self.controller, "model": self.model,
            "scenario": dict(self.scenario), "channels": dict(self.channels),
            "gains": dict(self.gains), "rate_gain": self.rate_gain,
            "stop_on_done": self.stop_on_done, "tail": self.tail,
        }

    def channel_config(self, stream: str) -> ChannelConfig:
        """Per-stream channel settings; a flat {delay, rate} applies to all
        three streams, nested keys f_fb/f_v/x_d override per stream."""
        d = self.channels.get(stream, self.channels)
        try:
            return ChannelConfig(delay=float(d.get("delay", 0.0)),
                                 sample_rate=float(d.get("rate", 0.0)),
                                 base_tick=self.dt)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad channel config for {stream}: {exc}")


def _axis_names(m: int) -> list[str]:
    return ["x", "y", "th"][:m]


class Simulation:
    """Mutable run state plus the single-tick stepping function."""

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        self.dt = config.dt
        scenario = dict(config.scenario)
        scenario.setdefault("seed", config.seed)
        self.model, home = build_model(config.model)
        self.script, self.objects = build_scene(scenario, self.model, home)
        m = self.model.task_dim
        if m != 2:
            raise ConfigError("teleoperation scenes assume a 2-axis task "
                              "space; orientation-augmented models are for "
                              "dynamics-level use")
        gains = dict(config.gains)
        gains.setdefault("q_ref", list(home))
        self.replica_fic = default_replica_fic(m, gains)
        self.replica_ic = default_ic(m, gains)
        self.master_params = default_master(gains)
        self.use_fic = config.controller == "fic"

        self.js = JointState(np.array(home, dtype=float), np.zeros(self.model.dof))
        pose0 = forward_kinematics(self.model, self.js.q)
        self.x_des = pose0.copy()  # master-side commanded pose
        self.master_x = np.zeros(2)
        self.master_v = np.zeros(2)
        self.fic_states = tuple(AxisFicState() for _ in range(m))
        self.master_states = tuple(AxisFicState() for _ in range(2))
        self.op_state = OperatorState()
        self._last_override: OperatorOutput | None = None

        self.cfg_fb = config.channel_config("f_fb")
        self.cfg_fv = config.channel_config("f_v")
        self.cfg_xd = config.channel_config("x_d")
        self.ch_fb = make_channel(self.cfg_fb, (0.0, 0.0))
        self.ch_fv = make_channel(self.cfg_fv, (0.0, 0.0))
        self.ch_xd = make_channel(self.cfg_xd, tuple(pose0))
        self.f_fb_measured = (0.0, 0.0)

        self.latches = [ButtonLatch(o.activation_force)
                        for o in self.objects if o.is_button]
        self.buttons = [o for o in self.objects if o.is_button]

        self.n = 0
        self.done_since: float | None = None
        self.columns = self._column_names()
        # long live sessions grow the buffer by doubling instead of paying
        # the full allocation up front
        cap = min(int(round(config.duration / config.dt)) + 2, 131072)
        self.rows = np.empty((cap, len(self.columns)))
        self.events: list[tuple[float, str]] = []

    def _column_names(self) -> list[str]:
        n, m = self.model.dof, self.model.task_dim
        cols = ["t"]
        cols += [f"q{i}" for i in range(n)]
        cols += [f"qd{i}" for i in range(n)]
        ax = _axis_names(m)
        cols += [f"ee_{a}" for a in ax] + [f"ee_v{a}" for a in ax]
        cols += ["m_x", "m_y", "m_vx", "m_vy", "hand_x", "hand_y",
                 "gripper", "hand_on"]
        cols += [f"xd_pre_{a}" for a in ax] + [f"xd_post_{a}" for a in ax]
        cols += [f"fv_pre_{a}" for a in ax] + [f"fv_post_{a}" for a in ax]
        cols += [f"ffb_pre_{a}" for a in ax] + [f"ffb_post_{a}" for a in ax]
        cols += [f"ctrl_stiff_{a}" for a in ax]
        cols += [f"ctrl_damp_{a}" for a in ax]
        cols += [f"fic_phase_{a}" for a in ax]
        cols += [f"contact_f{a}" for a in ax] + [f"imp_f{a}" for a in ax]
        cols += [f"btn{i}" for i in range(len(self.latches))]
        cols += ["script_done"]
        return cols

    @property
    def t(self) -> float:
        return self.n * self.dt

    def set_channel_conditions(self, delay: float, rate: float):
        """Live degradation switch: rebuild the three channels with the new
        delay/rate, keeping the currently held values for continuity."""
        cfg = ChannelConfig(delay=delay, sample_rate=rate, base_tick=self.dt)
        self.cfg_fb = self.cfg_fv = self.cfg_xd = cfg
        self.ch_fb = make_channel(cfg, self.ch_fb.held_value)
        self.ch_fv = make_channel(cfg, self.ch_fv.held_value)
        self.ch_xd = make_channel(cfg, self.ch_xd.held_value)

    def step(self, op_override: OperatorOutput | None = None):
        """Advance one tick. op_override replaces the scripted operator and
        stays in force until swapped (live console input); its pose nudge is
        one-shot per command object, while scripted operators emit fresh
        per-tick nudges."""
        dt = self.dt
        t = self.n * self.dt
        model = self.model
        prof = self.script.profile

        # operator sees only the channel output of the measured feedback
        ffb_post, _ = channel_step(self.cfg_fb, self.ch_fb,
                                   self.f_fb_measured, t)
        apply_nudge = True
        if op_override is not None:
            op = op_override
            apply_nudge = op is not self._last_override
            self._last_override = op
        else:
            obs = OperatorObservation(
                f_fb=ffb_post,
                master_pos=(self.master_x[0], self.master_x[1]),
                x_desired=(self.x_des[0], self.x_des[1]))
            op, _ = step_operator(self.script, self.op_state, obs, t, dt)

        # master admittance: centring impedance + scaled feedback + hand
        m_states = []
        for i in range(2):
            res = fic_wrench(
                AxisErrorState(-self.master_x[i], -self.master_v[i]),
                self.master_states[i], self.master_params.fic[i],
                body_vel=self.master_v[i])
            w = res.force + self.master_params.k_a * ffb_post[i]
            if op.hand_attached:
                w += prof.hand_stiffness * (op.master_err[i]
                                            - self.master_x[i]) \
                    - prof.hand_damping * self.master_v[i]
            m_states.append(res.state)
            self.master_v[i] += w / self.master_params.mass * dt
            self.master_x[i] += self.master_v[i] * dt
        self.master_states = tuple(m_states)

        # master-side command: gripper drags the pose, nudges shift it
        cmd = TeleopCommand(master_err=self.master_x, x_desired=self.x_des,
                            gripper_held=op.gripper_held)
        cmd = velocity_mode_update(cmd, dt, self.config.rate_gain)
        self.x_des = cmd.x_desired
        if apply_nudge and (op.pose_nudge[0] or op.pose_nudge[1]):
            self.x_des = self.x_des + np.asarray(op.pose_nudge)

        # degradable command streams
        md_pre = (self.master_x[0], self.master_x[1])
        md_post, _ = channel_step(self.cfg_fv, self.ch_fv, md_pre, t)
        xd_pre = (self.x_des[0], self.x_des[1])
        xd_post, _ = channel_step(self.cfg_xd, self.ch_xd, xd_pre, t)

        # replica controller and plant
        terms = dynamics_terms(model, self.js.q, self.js.qd)
        J = jacobian(model, self.js.q)
        pose, vel = end_effector_state(model, self.js, J)
        rcmd = TeleopCommand(master_err=np.asarray(md_post),
                             x_desired=np.asarray(xd_post),
                             gripper_held=op.gripper_held)
        if self.use_fic:
            res = replica_torque_fic(self.replica_fic, model, self.js, rcmd,
                                     self.fic_states, dt, terms, J)
            self.fic_states = res.fic_states
            phases = [1.0 if s.phase is Phase.CONVERGENCE else 0.0
                      for s in self.fic_states]
        else:
            res = replica_torque_ic(self.replica_ic, model, self.js, rcmd,
                                    dt, terms, J)
            phases = [0.0] * model.task_dim

        contact = np.zeros(2)
        li = 0
        btn_states = []
        for obj in self.objects:
            r = contact_wrench(obj, pose, vel)
            contact += r.wrench
            if obj.is_button:
                was = self.latches[li].active
                now = self.latches[li].update(r.normal_force, t)
                if now != was:
                    self.events.append(
                        (t, f"{obj.name} {'activated' if now else 'released'}"))
                btn_states.append(1.0 if now else 0.0)
                li += 1
        impulse = np.asarray(op.external_impulse, dtype=float)
        ext = contact + impulse

        try:
            self.js = integrate_step(model, self.js, res.tau, ext, dt,
                                     terms, J)
        except ValueError as exc:
            raise SimulationAbort(f"non-finite dynamics at t={t:.4f}: {exc}",
                                  self._tail()) from exc
        if not (np.all(np.isfinite(self.js.q))
                and np.all(np.isfinite(self.js.qd))):
            raise SimulationAbort(
                f"non-finite state at t={t:.4f}", self._tail())
        self.f_fb_measured = (float(ext[0]), float(ext[1]))

        row = [t]
        row += list(self.js.q) + list(self.js.qd)
        row += list(pose) + list(vel)
        row += [self.master_x[0], self.master_x[1],
                self.master_v[0], self.master_v[1],
                op.master_err[0], op.master_err[1],
                1.0 if op.gripper_held else 0.0,
                1.0 if op.hand_attached else 0.0]
        row += list(xd_pre) + list(xd_post)
        kc = self.replica_fic.k_c if self.use_fic else self.replica_ic.k_c
        row += [kc * md_pre[0], kc * md_pre[1], kc * md_post[0],
                kc * md_post[1]]
        row += [self.f_fb_measured[0], self.f_fb_measured[1],
                ffb_post[0], ffb_post[1]]
        row += list(res.task_stiffness) + list(res.task_damping)
        row += phases
        row += list(contact) + list(impulse)
        row += btn_states
        row += [1.0 if (self.op_state.done or self.op_state.failed) else 0.0]
        if self.n >= len(self.rows):
            self.rows = np.vstack([self.rows, np.empty_like(self.rows)])
        self.rows[self.n] = row
        self.n += 1

    def _tail(self, k: int = 10) -> list[str]:
        lo = max(0, self.n - k)
        out = []
        for i in range(lo, self.n):
            vals = ", ".join(f"{c}={v:.6g}" for c, v in
                             zip(self.columns[:8], self.rows[i, :8]))
            out.append(f"row {i}: {vals}")
        return out

    def finished(self) -> bool:
        if self.t >= self.config.duration:
            return True
        if not self.config.stop_on_done:
            return False
        if self.op_state.done or self.op_state.failed:
            if self.done_since is None:
                self.done_since = self.t
            return self.t >= self.done_since + self.config.tail
        return False

    def make_log(self) -> ExperimentLog:
        rows = self.rows[: self.n].copy()
        log = ExperimentLog(columns=list(self.columns), rows=rows,
                            config=self.config.to_dict(),
                            summary=self._summary())
        return log

    def _summary(self) -> dict:
        s = {"ticks": self.n, "final_t": round(self.t, 9),
             "script_done": bool(self.op_state.done),
             "script_failed": bool(self.op_state.failed),
             "events": [[round(t, 6), name] for t, name in self.events]}
        if self.latches:
            activations = [e for e in self.events if "activated" in e[1]]
            releases = [e for e in self.events if "released" in e[1]]
            names = {e[1].split()[0] for e in activations}
            s["buttons_activated"] = len(names)
            s["success"] = (len(names) == len(self.latches)
                            and not self.op_state.failed)
            if releases and s["success"]:
                s["completion_time"] = round(releases[-1][0], 6)
        elif self.script.kind is not ScriptKind.IDLE:
            s["success"] = bool(self.op_state.done
                                and not self.op_state.failed)
        return s


def run(config: SimConfig, command_schedule=None,
        max_ticks: int | None = None) -> ExperimentLog:
    """Execute one configured run to completion.

    command_schedule, when given, is a list of (tick, kind, payload)
    records: kind "command" injects an OperatorOutput that stays in force
    until the next record, kind "channels" switches the degradation settings.
    This is exactly the shape a recorded live session produces; max_ticks
    stops a replay at the same tick the recording stopped.
    """
    sim = Simulation(config)
    schedule = {}
    if command_schedule:
        for tick, kind, payload in command_schedule:
            schedule.setdefault(int(tick), []).append((kind, payload))
    override: OperatorOutput | None = None
    while not sim.finished():
        if max_ticks is not None and sim.n >= max_ticks:
            break
        for kind, payload in schedule.get(sim.n, ()):
            if kind == "command":
                override = payload if isinstance(payload, OperatorOutput) \
                    else OperatorOutput(**payload)
            elif kind == "channels":
                sim.set_channel_conditions(payload["delay"], payload["rate"])
        sim.step(op_override=override)
    return sim.make_log()


def grid_conditions(delays=(0.0, 0.5, 1.0), rates=(1000.0, 100.0, 10.0)):
    """The nine delay/bandwidth combinations, best to worst."""
    return [(d, r) for d in delays for r in rates]


def run_grid(base: SimConfig, delays=(0.0, 0.5, 1.0),
             rates=(1000.0, 100.0, 10.0)) -> list[ExperimentLog]:
    """Run the scenario across the full degradation grid; failures of
    individual runs are isolated as logs with an `aborted` summary flag."""
    logs = []
    for delay, rate in grid_conditions(delays, rates):
        cfg = SimConfig.from_dict({**base.to_dict(),
                                   "channels": {"delay": delay,
                                                "rate": rate}})
        try:
            logs.append(run(cfg))
        except SimulationAbort as exc:
            sim_log = ExperimentLog(columns=[], rows=np.zeros((0, 0)),
                                    config=cfg.to_dict(),
                                    summary={"aborted": True,
                                             "reason": str(exc)})
            logs.append(sim_log)
    return logs
