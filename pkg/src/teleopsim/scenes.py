"""Default models, gain sets and scenario scenes.

Numbers here are desk-scale synthetic choices: link data loosely follows a
small lab arm, controller gains put the coupled master-replica chain in the
low-hertz band, and contact fixtures sit inside the comfortable part of the
workspace. Everything can be overridden from the run configuration.
"""

from __future__ import annotations

import math

import numpy as np

from .controllers import IcParams, MasterParams, ReplicaParams
from .dynamics import ManipulatorModel, PlanarLink, forward_kinematics
from .environment import ContactObject, estop_panel, object_catalog
from .fic import calibrate
from .operators import (
    OperatorScript,
    ScriptKind,
    button_press_protocol,
    impulse_protocol,
    object_touch_protocol,
)

# home with near-diagonal task-space inertia; end-effector at ~(0.51, -0.45)
PLANAR2_HOME = (-1.33, 1.30)
PLANAR3_HOME = (-1.45, 1.15, 0.75)

IC_DAMPING_FACTOR = 8.0


def planar_two_link() -> ManipulatorModel:
    return ManipulatorModel(
        links=(PlanarLink(0.45, 2.5, 0.225, 0.05),
               PlanarLink(0.40, 1.8, 0.20, 0.03)),
        joint_limits=((-3.0, 3.0), (-3.0, 3.0)),
        gravity=(0.0, -9.81))


def planar_three_link() -> ManipulatorModel:
    return ManipulatorModel(
        links=(PlanarLink(0.35, 2.0, 0.175, 0.03),
               PlanarLink(0.30, 1.5, 0.15, 0.02),
               PlanarLink(0.25, 1.0, 0.125, 0.01)),
        joint_limits=((-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0)),
        gravity=(0.0, -9.81))


MODELS = {"planar2": planar_two_link, "planar3": planar_three_link}
HOMES = {"planar2": PLANAR2_HOME, "planar3": PLANAR3_HOME}


def build_model(desc) -> tuple[ManipulatorModel, tuple[float, ...]]:
    """Model plus home posture from a registry name or an inline dict."""
    if isinstance(desc, str):
        if desc not in MODELS:
            raise ValueError(f"unknown model {desc!r}; have {sorted(MODELS)}")
        return MODELS[desc](), HOMES[desc]
    model = ManipulatorModel.from_dict(desc)
    home = tuple(desc.get("home", (0.0,) * model.dof))
    return model, home


def default_replica_fic(axes: int, gains: dict) -> ReplicaParams:
    w_max = gains.get("w_max", 20.0)
    x_b = gains.get("x_b", 0.1)
    k_0 = gains.get("k_0", 100.0)
    d = gains.get("d", 1.5)
    fic = tuple(calibrate(w_max, x_b, k_0=k_0, d=d) for _ in range(axes))
    return ReplicaParams(
        fic=fic, k_c=gains.get("k_c", 150.0),
        k_null=gains.get("k_null", 0.0), d_null=gains.get("d_null", 0.0),
        q_ref=tuple(gains.get("q_ref", ())))


def default_ic(axes: int, gains: dict) -> IcParams:
    k_0 = gains.get("k_0", 100.0)
    d = gains.get("d", 1.5) * gains.get("ic_damping_factor",
                                        IC_DAMPING_FACTOR)
    return IcParams(k=(k_0,) * axes, d=(d,) * axes,
                    k_c=gains.get("k_c", 150.0),
                    k_null=gains.get("k_null", 0.0),
                    d_null=gains.get("d_null", 0.0),
                    q_ref=tuple(gains.get("q_ref", ())))


def default_master(gains: dict) -> MasterParams:
    fic = tuple(calibrate(gains.get("m_w_max", 30.0),
                          gains.get("m_x_b", 0.12),
                          k_0=gains.get("m_k_0", 30.0),
                          d=gains.get("m_d", 4.0)) for _ in range(2))
    return MasterParams(fic=fic, k_a=gains.get("k_a", 1.0),
                        mass=gains.get("m_mass", 0.5),
                        workspace_radius=gains.get("m_radius", 0.15))


# button panel below and slightly left of the planar2 home pose
BUTTON_PANEL_FIRST = (0.36, -0.50)
BUTTON_SPACING = 0.10


def build_scene(scenario: dict, model: ManipulatorModel, home) \
        -> tuple[OperatorScript, list[ContactObject]]:
    """Operator script plus contact fixtures for one scenario."""
    kind = scenario.get("kind", "idle")
    profile = scenario.get("profile", "expert")
    seed = int(scenario.get("seed", 0))
    if kind == "idle":
        return OperatorScript(kind=ScriptKind.IDLE), []
    if kind == "impulses":
        return impulse_protocol(
            seed=seed, count=int(scenario.get("count", 14)),
            peak=float(scenario.get("peak", 20.0)),
            duration=float(scenario.get("duration", 0.010)),
            direction=scenario.get("direction")), []
    if kind == "button_press":
        first = tuple(scenario.get("first_button", BUTTON_PANEL_FIRST))
        spacing = float(scenario.get("spacing", BUTTON_SPACING))
        objects = estop_panel(first_button=first, spacing=spacing)
        if not scenario.get("scripted", True):
            # scene only: a live operator supplies the commands
            return OperatorScript(kind=ScriptKind.IDLE), objects
        tops = [objects[0].top_center(), objects[1].top_center()]
        script = button_press_protocol(tops, profile=profile)
        return script, objects
    if kind == "object_touch":
        idx = int(scenario.get("object", 0))
        catalog = object_catalog()
        if not 0 <= idx < len(catalog):
            raise ValueError(f"object index {idx} out of range")
        pose = forward_kinematics(model, np.asarray(home))
        surface = (pose[0] + 0.11, pose[1])
        obj = catalog[idx]
        placed = ContactObject(
            name=obj.name, kind="half_plane", stiffness=obj.stiffness,
            damping=obj.damping, point=surface, normal=(-1.0, 0.0))
        script = object_touch_protocol(surface, approach_dir=(1.0, 0.0),
                                       profile=profile)
        return script, [placed]
    raise ValueError(f"unknown scenario kind {kind!r}")
