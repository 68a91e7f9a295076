"""Planar serial-chain kinematics and dynamics.

Links rotate about parallel axes, so configuration is a vector of joint
angles and the task space is the end-effector position (x, y), optionally
extended with the end-effector orientation angle. Mass matrix, Coriolis
vector and gravity vector are assembled from per-link centre-of-mass
Jacobians; the Coriolis vector uses Christoffel symbols built from the
analytic derivatives of the mass matrix, which makes dM/dt - 2C exactly
skew-symmetric up to rounding.

The assembly runs inside the simulation tick, so the low-level helpers use
scalar suffix sums rather than numpy reductions; at two or three links that
is an order of magnitude faster than array-at-a-time code.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

log = logging.getLogger(__name__)

SINGULARITY_SV_THRESHOLD = 1e-4
SINGULARITY_DAMPING = 1e-6


@dataclass(frozen=True)
class PlanarLink:
    """One revolute link: geometry and inertial properties."""

    length: float
    mass: float
    com_offset: float  # distance of the centre of mass from the joint
    inertia: float = 0.0  # rotational inertia about the centre of mass

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError("link length must be > 0")
        if self.mass <= 0.0:
            raise ValueError("link mass must be > 0")
        if not 0.0 <= self.com_offset <= self.length:
            raise ValueError("com_offset must lie on the link")
        if self.inertia < 0.0:
            raise ValueError("inertia must be >= 0")


@dataclass(frozen=True, eq=False)
class ManipulatorModel:
    links: tuple[PlanarLink, ...]
    joint_limits: tuple[tuple[float, float], ...]
    gravity: tuple[float, float] = (0.0, -9.81)
    with_orientation: bool = False

    def __post_init__(self):
        if len(self.links) < 1:
            raise ValueError("at least one link required")
        if len(self.joint_limits) != len(self.links):
            raise ValueError("one joint limit pair per link required")
        for lo, hi in self.joint_limits:
            if lo >= hi:
                raise ValueError("joint limit lower bound must be below upper")

    @property
    def dof(self) -> int:
        return len(self.links)

    @property
    def task_dim(self) -> int:
        return 3 if self.with_orientation else 2

    @staticmethod
    def from_dict(d: dict) -> "ManipulatorModel":
        links = tuple(
            PlanarLink(length=l["length"], mass=l["mass"],
                       com_offset=l.get("com_offset", 0.5 * l["length"]),
                       inertia=l.get("inertia", 0.0))
            for l in d["links"])
        limits = tuple(tuple(pair) for pair in d.get(
            "joint_limits", [(-2.9, 2.9)] * len(links)))
        return ManipulatorModel(
            links=links, joint_limits=limits,
            gravity=tuple(d.get("gravity", (0.0, -9.81))),
            with_orientation=bool(d.get("with_orientation", False)))

    def to_dict(self) -> dict:
        return {
            "links": [{"length": l.length, "mass": l.mass,
                       "com_offset": l.com_offset, "inertia": l.inertia}
                      for l in self.links],
            "joint_limits": [list(pair) for pair in self.joint_limits],
            "gravity": list(self.gravity),
            "with_orientation": self.with_orientation,
        }


@dataclass
class JointState:
    q: np.ndarray
    qd: np.ndarray

    def copy(self) -> "JointState":
        return JointState(self.q.copy(), self.qd.copy())


@dataclass
class DynamicsTerms:
    """M, the Coriolis/centrifugal torque C(q, qd) qd, and the gravity
    compensation vector."""

    M: np.ndarray
    c: np.ndarray
    g: np.ndarray


@lru_cache(maxsize=64)
def _consts(model: ManipulatorModel):
    lengths = tuple(l.length for l in model.links)
    masses = tuple(l.mass for l in model.links)
    coms = tuple(l.com_offset for l in model.links)
    inertias = tuple(l.inertia for l in model.links)
    return lengths, masses, coms, inertias


def forward_kinematics(model: ManipulatorModel, q) -> np.ndarray:
    """End-effector pose: tip position of the last link, plus the absolute
    end-effector angle when the model carries an orientation axis."""
    n = model.dof
    if len(q) != n:
        raise ValueError(f"expected {n} joint angles")
    lengths = _consts(model)[0]
    x = y = th = 0.0
    for i in range(n):
        th += q[i]
        x += lengths[i] * math.cos(th)
        y += lengths[i] * math.sin(th)
    if model.with_orientation:
        return np.array([x, y, th])
    return np.array([x, y])


def jacobian(model: ManipulatorModel, q) -> np.ndarray:
    """Task Jacobian d(pose)/dq, shape (task_dim, dof)."""
    n = model.dof
    lengths = _consts(model)[0]
    th = 0.0
    sx = [0.0] * n
    sy = [0.0] * n
    for i in range(n):
        th += q[i]
        sx[i] = -lengths[i] * math.sin(th)
        sy[i] = lengths[i] * math.cos(th)
    J = np.empty((model.task_dim, n))
    # column k collects every segment from joint k outward (suffix sums)
    ax = ay = 0.0
    for k in range(n - 1, -1, -1):
        ax += sx[k]
        ay += sy[k]
        J[0, k] = ax
        J[1, k] = ay
    if model.with_orientation:
        J[2, :] = 1.0
    return J


def dynamics_terms(model: ManipulatorModel, q, qd) -> DynamicsTerms:
    """Assemble M(q), C(q, qd) qd and the gravity compensation vector."""
    n = model.dof
    lengths, masses, coms, inertias = _consts(model)
    gx, gy = model.gravity

    cos_t = [0.0] * n
    sin_t = [0.0] * n
    th = 0.0
    for i in range(n):
        th += q[i]
        cos_t[i] = math.cos(th)
        sin_t[i] = math.sin(th)

    # per-link com Jacobians jv[i] (2 x n) and derivatives djv[i][m] (2 x n),
    # all as nested lists of floats; suffix structure over the chain segments
    jv = []
    djv = []
    for i in range(n):
        seg_len = [lengths[j] for j in range(i)] + [coms[i]]
        dx = [-seg_len[j] * sin_t[j] for j in range(i + 1)]
        dy = [seg_len[j] * cos_t[j] for j in range(i + 1)]
        ddx = [-seg_len[j] * cos_t[j] for j in range(i + 1)]
        ddy = [-seg_len[j] * sin_t[j] for j in range(i + 1)]
        row_x = [0.0] * n
        row_y = [0.0] * n
        ax = ay = 0.0
        for k in range(i, -1, -1):
            ax += dx[k]
            ay += dy[k]
            row_x[k] = ax
            row_y[k] = ay
        jv.append((row_x, row_y))
        # suffix sums of the second derivatives; d jv[i][:,k] / d q_m is the
        # suffix starting at max(k, m)
        suf_x = [0.0] * (i + 2)
        suf_y = [0.0] * (i + 2)
        bx = by = 0.0
        for j in range(i, -1, -1):
            bx += ddx[j]
            by += ddy[j]
            suf_x[j] = bx
            suf_y[j] = by
        d_i = []
        for m in range(n):
            drow_x = [0.0] * n
            drow_y = [0.0] * n
            if m <= i:
                for k in range(i + 1):
                    lo = k if k > m else m
                    drow_x[k] = suf_x[lo]
                    drow_y[k] = suf_y[lo]
            d_i.append((drow_x, drow_y))
        djv.append(d_i)

    M = [[0.0] * n for _ in range(n)]
    dM = [[[0.0] * n for _ in range(n)] for _ in range(n)]  # dM[m][i][j]
    g = [0.0] * n
    for i in range(n):
        m_i = masses[i]
        ine = inertias[i]
        rx, ry = jv[i]
        lim = i + 1
        for a in range(lim):
            for b in range(lim):
                M[a][b] += m_i * (rx[a] * rx[b] + ry[a] * ry[b]) + ine
        for mm in range(lim):
            drx, dry = djv[i][mm]
            dmm = dM[mm]
            for a in range(lim):
                for b in range(lim):
                    dmm[a][b] += m_i * (drx[a] * rx[b] + rx[a] * drx[b]
                                        + dry[a] * ry[b] + ry[a] * dry[b])
        for a in range(lim):
            g[a] -= m_i * (rx[a] * gx + ry[a] * gy)

    # Christoffel symbols of the first kind
    c = [0.0] * n
    for i in range(n):
        acc = 0.0
        for j in range(n):
            qdj = qd[j]
            if qdj == 0.0:
                continue
            for k in range(n):
                qdk = qd[k]
                if qdk == 0.0:
                    continue
                cijk = 0.5 * (dM[k][i][j] + dM[j][i][k] - dM[i][j][k])
                acc += cijk * qdj * qdk
        c[i] = acc

    return DynamicsTerms(M=np.array(M), c=np.array(c), g=np.array(g))


def _solve_spd(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M x = b for the small symmetric positive definite M."""
    n = M.shape[0]
    if n == 1:
        return b / M[0, 0]
    if n == 2:
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if det == 0.0:
            raise ValueError("singular mass matrix; model is degenerate")
        return np.array([(M[1, 1] * b[0] - M[0, 1] * b[1]) / det,
                         (M[0, 0] * b[1] - M[1, 0] * b[0]) / det])
    try:
        return np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular mass matrix; model is degenerate") from exc


def _inv_2x2(A: np.ndarray) -> np.ndarray:
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / det


def _min_singular_value(J: np.ndarray) -> float:
    """Smallest singular value; closed form for the 2-row task Jacobian."""
    if J.shape[0] == 2:
        a = float(J[0] @ J[0])
        b = float(J[0] @ J[1])
        d = float(J[1] @ J[1])
        tr = a + d
        disc = math.sqrt(max(0.0, (a - d) * (a - d) + 4.0 * b * b))
        lam_min = 0.5 * (tr - disc)
        return math.sqrt(max(0.0, lam_min))
    return float(np.linalg.svd(J, compute_uv=False)[-1])


def task_space_inertia(model: ManipulatorModel, q,
                       terms: DynamicsTerms | None = None,
                       J: np.ndarray | None = None) -> np.ndarray:
    """Apparent end-effector inertia (J M^-1 J^T)^-1.

    Near kinematic singularities (smallest singular value of J below
    SINGULARITY_SV_THRESHOLD) the inversion is damped and a warning logged.
    """
    if terms is None:
        terms = dynamics_terms(model, q, np.zeros(model.dof))
    if J is None:
        J = jacobian(model, q)
    MinvJT = np.column_stack([_solve_spd(terms.M, J[r])
                              for r in range(J.shape[0])])
    A = J @ MinvJT
    if _min_singular_value(J) < SINGULARITY_SV_THRESHOLD:
        log.warning("near-singular configuration (sigma_min=%.2e), damping "
                    "task-space inertia inversion", _min_singular_value(J))
        A = A + SINGULARITY_DAMPING * np.eye(A.shape[0])
    lam = _inv_2x2(A) if A.shape[0] == 2 else np.linalg.inv(A)
    return 0.5 * (lam + lam.T)


def _inv_small(M: np.ndarray) -> np.ndarray:
    if M.shape[0] == 2:
        return _inv_2x2(M)
    return np.linalg.inv(M)


def operational_terms(model: ManipulatorModel, q, qd,
                      terms: DynamicsTerms, J: np.ndarray):
    """Task-space inertia, bias wrench and M^-1 J^T in one pass; shared by
    the torque laws so the inversions happen once per tick."""
    Minv = _inv_small(terms.M)
    MinvJT = Minv @ J.T
    A = J @ MinvJT
    if _min_singular_value(J) < SINGULARITY_SV_THRESHOLD:
        log.warning("near-singular configuration, damping task-space "
                    "inertia inversion")
        A = A + SINGULARITY_DAMPING * np.eye(A.shape[0])
    lam = _inv_small(A)
    lam = 0.5 * (lam + lam.T)
    jdot_qd = jacobian_rate(model, q, qd) @ qd
    bias = lam @ (J @ (Minv @ terms.c) - jdot_qd)
    return lam, bias, Minv, MinvJT


def jacobian_rate(model: ManipulatorModel, q, qd,
                  h: float = 1e-6) -> np.ndarray:
    """dJ/dt along qd by central differences of the Jacobian."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    return (jacobian(model, q + h * qd) - jacobian(model, q - h * qd)) / (2 * h)


def inverse_dynamics_compensation(model: ManipulatorModel, q, qd,
                                  terms: DynamicsTerms | None = None,
                                  J: np.ndarray | None = None) -> np.ndarray:
    """Task-space bias wrench Lambda (J M^-1 c - dJ/dt qd).

    Vanishes at rest; feeding it forward cancels the velocity-dependent
    coupling felt at the end-effector.
    """
    if terms is None:
        terms = dynamics_terms(model, q, qd)
    if J is None:
        J = jacobian(model, q)
    lam = task_space_inertia(model, q, terms, J)
    jdot_qd = jacobian_rate(model, q, qd) @ qd
    return lam @ (J @ _solve_spd(terms.M, terms.c) - jdot_qd)


def null_space_projector(model: ManipulatorModel, q,
                         terms: DynamicsTerms | None = None,
                         J: np.ndarray | None = None) -> np.ndarray:
    """Torque-space projector I - J^T Lambda J M^-1.

    Torques passed through it produce no end-effector acceleration:
    J M^-1 P tau = 0 for any tau (away from singularities).
    """
    if terms is None:
        terms = dynamics_terms(model, q, np.zeros(model.dof))
    if J is None:
        J = jacobian(model, q)
    lam = task_space_inertia(model, q, terms, J)
    n = model.dof
    Minv = np.linalg.inv(terms.M)
    return np.eye(n) - J.T @ lam @ J @ Minv


def integrate_step(model: ManipulatorModel, state: JointState,
                   tau, ext_wrench, dt: float,
                   terms: DynamicsTerms | None = None,
                   J: np.ndarray | None = None) -> JointState:
    """One semi-implicit Euler step of M qdd = tau + J^T f_ext - c - g.

    Velocity updates first and positions follow with the new velocity. Joint
    limits are enforced by clamping the position and zeroing the velocity of
    the offending joint.
    """
    if not 0.0 < dt <= 1e-2:
        raise ValueError(f"dt must be in (0, 1e-2], got {dt}")
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise ValueError("non-finite joint torque")
    ext_wrench = np.asarray(ext_wrench, dtype=float)
    if terms is None:
        terms = dynamics_terms(model, state.q, state.qd)
    if J is None:
        J = jacobian(model, state.q)
    rhs = tau + J.T @ ext_wrench - terms.c - terms.g
    qdd = _solve_spd(terms.M, rhs)
    qd = state.qd + qdd * dt
    q = state.q + qd * dt
    for i, (lo, hi) in enumerate(model.joint_limits):
        if q[i] < lo:
            q[i] = lo
            qd[i] = 0.0
        elif q[i] > hi:
            q[i] = hi
            qd[i] = 0.0
    return JointState(q=q, qd=qd)


def end_effector_state(model: ManipulatorModel, state: JointState,
                       J: np.ndarray | None = None):
    """Pose and velocity of the end-effector."""
    if J is None:
        J = jacobian(model, state.q)
    return forward_kinematics(model, state.q), J @ state.qd
