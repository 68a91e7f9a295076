"""Contact objects and button fixtures for the planar workspace.

Contacts use a unilateral penalty model: a spring-damper force along the
surface normal that only ever pushes (no sticking, no friction). Buttons are
axis-aligned boxes that additionally latch an activation when the normal
force stays above a threshold for a sustain window, releasing only once the
force falls below half the threshold.

Object stiffness and damping values are synthetic stand-ins spanning the
compliant-to-stiff range of everyday objects; no measured values exist for
the physical originals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BUTTON_SUSTAIN_TIME = 0.05
FRAME_STIFFNESS = 2e4
BUTTON_RELEASE_FRACTION = 0.5


@dataclass(frozen=True)
class ContactObject:
    """Half-plane or axis-aligned box with penalty parameters.

    Half-plane: `normal` is the outward unit normal of the material surface
    through `point`; anything behind it penetrates. Box: `bounds` is
    (xmin, xmax, ymin, ymax) and contact acts along the face of least
    penetration. Activation fields are used by button fixtures only.
    """

    name: str
    kind: str  # "half_plane" | "box"
    stiffness: float
    damping: float = 0.0
    point: tuple[float, float] = (0.0, 0.0)
    normal: tuple[float, float] = (0.0, 1.0)
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    activation_force: float = 0.0
    activation_travel: float = 0.0

    def __post_init__(self):
        if self.kind not in ("half_plane", "box"):
            raise ValueError(f"unknown contact kind {self.kind!r}")
        if self.stiffness <= 0.0:
            raise ValueError("stiffness must be > 0")
        if self.damping < 0.0:
            raise ValueError("damping must be >= 0")
        if self.kind == "half_plane":
            n = math.hypot(*self.normal)
            if abs(n - 1.0) > 1e-9:
                raise ValueError("normal must be a unit vector")

    @property
    def is_button(self) -> bool:
        return self.activation_force > 0.0

    def top_center(self) -> tuple[float, float]:
        xmin, xmax, _, ymax = self.bounds
        return (0.5 * (xmin + xmax), ymax)


@dataclass(frozen=True)
class ContactResult:
    wrench: np.ndarray  # force on the end-effector, (2,)
    penetration: float
    normal_force: float
    activated: bool = False


_NO_CONTACT = ContactResult(wrench=np.zeros(2), penetration=0.0,
                            normal_force=0.0)


def _penalty_force(obj: ContactObject, depth: float, approach_speed: float):
    # damping pushes only while approaching, and the total never pulls
    f = obj.stiffness * depth + obj.damping * max(0.0, approach_speed)
    return max(0.0, f)


def contact_wrench(obj: ContactObject, ee_pose, ee_vel) -> ContactResult:
    """Penalty contact force of one object on the end-effector point."""
    x = float(ee_pose[0])
    y = float(ee_pose[1])
    vx = float(ee_vel[0])
    vy = float(ee_vel[1])
    if obj.kind == "half_plane":
        nx, ny = obj.normal
        depth = -((x - obj.point[0]) * nx + (y - obj.point[1]) * ny)
        if depth <= 0.0:
            return _NO_CONTACT
        approach = -(vx * nx + vy * ny)
        f = _penalty_force(obj, depth, approach)
        return ContactResult(wrench=np.array([f * nx, f * ny]),
                             penetration=depth, normal_force=f)
    xmin, xmax, ymin, ymax = obj.bounds
    if not (xmin <= x <= xmax and ymin <= y <= ymax):
        return _NO_CONTACT
    if obj.is_button:
        # piston: the cap compresses along +y over its travel, then the
        # much stiffer frame takes over, so a hard press cannot push the
        # normal sideways or through the fixture
        depth = ymax - y
        stop = 1.5 * obj.activation_travel
        f = obj.stiffness * min(depth, stop) \
            + FRAME_STIFFNESS * max(0.0, depth - stop) \
            + obj.damping * max(0.0, -vy)
        f = max(0.0, f)
        return ContactResult(wrench=np.array([0.0, f]), penetration=depth,
                             normal_force=f)
    # generic box: shallowest face wins
    depths = (x - xmin, xmax - x, y - ymin, ymax - y)
    normals = ((-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0))
    i = min(range(4), key=lambda k: depths[k])
    depth = depths[i]
    nx, ny = normals[i]
    approach = -(vx * nx + vy * ny)
    f = _penalty_force(obj, depth, approach)
    return ContactResult(wrench=np.array([f * nx, f * ny]),
                         penetration=depth, normal_force=f)


def object_catalog() -> list[ContactObject]:
    """Five touch objects spanning compliant to stiff.

    Stiffnesses are log-spaced over 1e2..1e5 N/m; damping is 5% of the
    critical value against a 1 kg reference mass.
    """
    names = ["sponge", "tissue_box", "plastic_box", "rock", "metal_box"]
    stiffnesses = np.logspace(2, 5, 5)
    objs = []
    for name, k in zip(names, stiffnesses):
        objs.append(ContactObject(
            name=name, kind="half_plane", stiffness=float(k),
            damping=0.05 * math.sqrt(float(k) * 1.0),
            point=(0.55, 0.0), normal=(-1.0, 0.0)))
    return objs


def estop_panel(first_button=(0.38, -0.42), spacing=0.10,
                activation_force=5.0, activation_travel=0.005,
                button_width=0.04, button_height=0.02):
    """Two emergency-stop buttons mounted on a backing panel, `spacing`
    metres apart along x. Buttons are soft springs sized so the activation
    force is reached at the activation travel; the panel behind them is much
    stiffer."""
    bx, by = first_button
    stiffness = activation_force / activation_travel
    buttons = []
    for i in range(2):
        x0 = bx + i * spacing - 0.5 * button_width
        buttons.append(ContactObject(
            name=f"estop_{i}", kind="box", stiffness=stiffness,
            damping=0.05 * math.sqrt(stiffness),
            bounds=(x0, x0 + button_width, by - button_height, by),
            activation_force=activation_force,
            activation_travel=activation_travel))
    panel = ContactObject(
        name="panel", kind="half_plane", stiffness=2e4,
        damping=0.05 * math.sqrt(2e4),
        point=(bx, by - button_height - 0.01), normal=(0.0, 1.0))
    return buttons + [panel]


@dataclass
class ButtonLatch:
    """Sustained-force activation with release hysteresis.

    Activates once the normal force has stayed at or above the activation
    force for the sustain window; deactivates only when the force drops below
    the release fraction of it, so the state cannot flicker at threshold.
    """

    activation_force: float
    sustain_time: float = BUTTON_SUSTAIN_TIME
    release_fraction: float = BUTTON_RELEASE_FRACTION
    active: bool = False
    pressed_since: float | None = None

    def update(self, normal_force: float, t: float) -> bool:
        if self.active:
            if normal_force < self.release_fraction * self.activation_force:
                self.active = False
                self.pressed_since = None
        else:
            if normal_force >= self.activation_force:
                if self.pressed_since is None:
                    self.pressed_since = t
                if t - self.pressed_since >= self.sustain_time:
                    self.active = True
            else:
                self.pressed_since = None
        return self.active
