"""Quasi-static single-point pushing physics.

Support friction follows the ellipsoid limit-surface model: for a planar
wrench (fy, fz, m) about the centre of friction, the object twist is
proportional to the gradient of

    H(f) = (fy / f_max)^2 + (fz / f_max)^2 + (m / m_max)^2,

i.e. (vy, vz, omega) ~ (fy / f_max^2, fz / f_max^2, m / m_max^2). Writing
a = 1/f_max^2, b = 1/m_max^2, r = contact point - CoF and p = perp(r), the
velocity of the contact point under a contact force f is

    v_c = a f + b (p . f) p = M f,    M = a I + b p p^T  (SPD),

so the motion cone at the contact is the image of the Coulomb friction cone
under M. A pusher displacement inside the motion cone sticks (f = M^-1 d);
outside it the force pins to the nearer friction-cone edge and the contact
slides along that edge's velocity image. Contact is unilateral: the object
only moves while the pusher disc overlaps it, and overlap is resolved each
substep to within PENETRATION_TOL_MM by advancing the object along the
resolved twist. Motion is velocity-level and scale invariant; only twist
directions are physical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .pose_math import Transform
from .scene import (
    ObjectShape,
    PlanarPose,
    PusherTip,
    WorldState,
    boundary_probe,
    cross2,
    heading_dir,
    perp2,
)

__all__ = [
    "ContactMode",
    "ContactState",
    "PhysicsFault",
    "Twist2",
    "TapStep",
    "TapTrajectory",
    "MAX_RESOLVE_ITERS",
    "PENETRATION_TOL_MM",
    "SUBSTEP_CAP_MM",
    "limit_surface_twist",
    "motion_cone",
    "resolve_substep",
    "simulate_tap",
]

SUBSTEP_CAP_MM = 0.5
PENETRATION_TOL_MM = 0.01
# resolution drives overlap into (0, PENETRATION_TOL_MM]; keeping it strictly
# positive preserves a valid contact reading at the end of a pushing substep
_RESOLVE_RESIDUAL_MM = 0.5 * PENETRATION_TOL_MM
MAX_RESOLVE_ITERS = 50


class PhysicsFault(RuntimeError):
    """Penetration resolution failed to converge; aborts the running trial."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ContactMode(str, Enum):
    SEPARATED = "separated"
    STICKING = "sticking"
    SLIDING_LEFT = "sliding_left"
    SLIDING_RIGHT = "sliding_right"


@dataclass(frozen=True)
class Twist2:
    """Planar object twist direction: CoF velocity (mm) and spin (rad) per unit pseudo-time."""

    vy: float
    vz: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vy, self.vz, self.omega])


@dataclass
class ContactState:
    """Contact bookkeeping for one substep.

    `point` is the contact point in the work frame, `normal` the unit push
    direction into the object. "left" for sliding modes is the +90 degree
    (counter-clockwise) side of the push normal.
    """

    point: np.ndarray
    normal: np.ndarray
    mode: ContactMode
    penetration: float


def limit_surface_twist(wrench, shape: ObjectShape) -> Twist2:
    """Twist direction the ellipsoid limit surface assigns to a CoF wrench.

    The returned twist is the gradient of H at the wrench, normalized to a
    unit 3-vector; only its direction is meaningful.
    """
    fy, fz, m = (float(v) for v in wrench)
    if fy == 0.0 and fz == 0.0 and m == 0.0:
        raise ValueError("limit_surface_twist: zero wrench")
    g = np.array(
        [fy / shape.f_max**2, fz / shape.f_max**2, m / shape.m_max**2]
    )
    g /= np.linalg.norm(g)
    return Twist2(float(g[0]), float(g[1]), float(g[2]))


def _cof_world(shape: ObjectShape, pose: PlanarPose) -> np.ndarray:
    return pose.transform_point(shape.cof_offset)


def _rotated(v: np.ndarray, rad: float) -> np.ndarray:
    c, s = math.cos(rad), math.sin(rad)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def _contact_matrix_apply(f, a: float, b: float, p: np.ndarray) -> np.ndarray:
    """v_c = M f with M = a I + b p p^T."""
    return a * np.asarray(f, dtype=float) + b * float(p[0] * f[0] + p[1] * f[1]) * p


def _contact_matrix_solve(v, a: float, b: float, p: np.ndarray) -> np.ndarray:
    """f = M^-1 v via the rank-one (Sherman-Morrison) form of M."""
    pp = float(p[0] * p[0] + p[1] * p[1])
    pv = float(p[0] * v[0] + p[1] * v[1])
    return (np.asarray(v, dtype=float) - (b * pv / (a + b * pp)) * p) / a


def motion_cone(contact: ContactState, shape: ObjectShape, object_pose: PlanarPose):
    """Contact-point velocity directions bounding sticking behaviour.

    Returns (left_edge, right_edge) unit vectors: the velocities produced by
    forces on the left (+) and right (-) Coulomb cone edges mapped through
    the limit surface. With mu_contact = 0 the cone collapses and both edges
    equal the image of the pure normal force.
    """
    if contact.mode is ContactMode.SEPARATED:
        raise ValueError("motion_cone: contact is separated")
    a = 1.0 / shape.f_max**2
    b = 1.0 / shape.m_max**2
    r = contact.point - _cof_world(shape, object_pose)
    p = perp2(r)
    phi = math.atan(shape.mu_contact)
    n = contact.normal
    u_l = _contact_matrix_apply(_rotated(n, phi), a, b, p)
    u_r = _contact_matrix_apply(_rotated(n, -phi), a, b, p)
    return u_l / np.linalg.norm(u_l), u_r / np.linalg.norm(u_r)


def _resolve_force(v_p, n_in, mu: float, a: float, b: float, p: np.ndarray):
    """Contact force direction and mode for a pusher drive direction v_p.

    Sticking if v_p lies inside the motion cone (force = M^-1 v_p, interior
    to the friction cone); otherwise the force pins to the friction-cone edge
    on v_p's side and the contact slides.
    """
    phi = math.atan(mu)
    f_l = _rotated(n_in, phi)
    f_r = _rotated(n_in, -phi)
    u_l = _contact_matrix_apply(f_l, a, b, p)
    u_r = _contact_matrix_apply(f_r, a, b, p)
    beyond_l = cross2(u_l, v_p) > 0.0
    beyond_r = cross2(u_r, v_p) < 0.0
    if mu == 0.0:
        side = cross2(u_l, v_p)
        if abs(side) < 1e-12:
            return np.asarray(n_in, dtype=float), ContactMode.STICKING
        mode = ContactMode.SLIDING_LEFT if side > 0.0 else ContactMode.SLIDING_RIGHT
        return np.asarray(n_in, dtype=float), mode
    if beyond_l and beyond_r:
        # reflex corner: v_p opposes the cone; pick the side it is closer to
        mid = u_l + u_r
        if cross2(mid, v_p) > 0.0:
            return f_l, ContactMode.SLIDING_LEFT
        return f_r, ContactMode.SLIDING_RIGHT
    if beyond_l:
        return f_l, ContactMode.SLIDING_LEFT
    if beyond_r:
        return f_r, ContactMode.SLIDING_RIGHT
    return _contact_matrix_solve(v_p, a, b, p), ContactMode.STICKING


def _advance_pose(
    pose: PlanarPose, cof: np.ndarray, dpos: np.ndarray, dalpha_rad: float
) -> PlanarPose:
    """Rigidly displace the object: CoF translates by dpos, spin about the CoF."""
    c, s = math.cos(dalpha_rad), math.sin(dalpha_rad)
    rel = pose.position - cof
    new_origin = cof + dpos + np.array([c * rel[0] - s * rel[1], s * rel[0] + c * rel[1]])
    return PlanarPose(
        float(new_origin[0]),
        float(new_origin[1]),
        pose.alpha + math.degrees(dalpha_rad),
    )


def resolve_substep(
    world: WorldState,
    shape: ObjectShape,
    pusher_disp,
    tip: PusherTip = PusherTip(),
):
    """Advance one pusher substep and resolve any disc-object overlap.

    The pusher disc centre is displaced by `pusher_disp` (capped at
    SUBSTEP_CAP_MM). If the displaced disc overlaps the object, the object
    pose is advanced along the quasi-static twist until the residual overlap
    is at most PENETRATION_TOL_MM. Returns (new object pose, ContactState);
    the caller owns the pusher pose update.
    """
    disp = np.asarray(pusher_disp, dtype=float)
    disp_norm = float(np.hypot(disp[0], disp[1]))
    if disp_norm > SUBSTEP_CAP_MM + 1e-9:
        raise ValueError(
            f"resolve_substep: displacement {disp_norm:.3f} mm exceeds the "
            f"{SUBSTEP_CAP_MM} mm substep cap"
        )
    tip_new = np.array(
        [float(world.pusher_pose.translation[1]), float(world.pusher_pose.translation[2])]
    ) + disp
    pose = world.object_pose
    a = 1.0 / shape.f_max**2
    b = 1.0 / shape.m_max**2

    sd, point, n_out, _ = boundary_probe(shape, pose, tip_new)
    pen = tip.radius - sd
    if pen <= 0.0:
        return pose, ContactState(point, -n_out, ContactMode.SEPARATED, pen)

    mode = None
    for _ in range(MAX_RESOLVE_ITERS):
        n_in = -n_out
        if pen <= PENETRATION_TOL_MM:
            break
        r = point - _cof_world(shape, pose)
        p = perp2(r)
        if disp_norm > 1e-12 and float(disp @ n_in) > 1e-12:
            v_p = disp
        else:
            # stale overlap with no approaching drive: expel along the normal
            v_p = n_in
        f, step_mode = _resolve_force(v_p, n_in, shape.mu_contact, a, b, p)
        u = _contact_matrix_apply(f, a, b, p)
        rate = float(u @ n_in)
        if rate <= 1e-12:
            # edge twist cannot reduce overlap; fall back to a pure normal push
            f = n_in
            u = _contact_matrix_apply(f, a, b, p)
            rate = float(u @ n_in)
        if mode is None:
            mode = step_mode
        s = (pen - _RESOLVE_RESIDUAL_MM) / rate
        m = float(p @ f)
        pose = _advance_pose(pose, _cof_world(shape, pose), s * a * f, s * b * m)
        sd, point, n_out, _ = boundary_probe(shape, pose, tip_new)
        pen = tip.radius - sd
    else:
        raise PhysicsFault(
            "penetration resolution did not converge",
            {
                "tip": [float(tip_new[0]), float(tip_new[1])],
                "object_pose": (pose.y, pose.z, pose.alpha),
                "penetration": pen,
            },
        )

    if mode is None:
        # grazing contact (overlap within tolerance): classify without moving
        if disp_norm > 1e-12:
            _, mode = _resolve_force(
                disp, -n_out, shape.mu_contact, a, b,
                perp2(point - _cof_world(shape, pose)),
            )
        else:
            mode = ContactMode.STICKING
    return pose, ContactState(point, -n_out, mode, pen)


@dataclass
class TapStep:
    """One substep of a tap for trajectory logging."""

    phase: str
    pusher_y: float
    pusher_z: float
    pusher_alpha: float
    object_y: float
    object_z: float
    object_alpha: float
    mode: ContactMode
    penetration: float


@dataclass
class TapTrajectory:
    """Full substep log of one tap plus the deepest-advance snapshot.

    `advance_end_pusher_pose` / `advance_end_object_pose` capture the world
    at the end of the forward phase, which is where the tactile reading is
    taken: the retraction immediately reopens the contact gap, so the
    deepest point is the only configuration reliably in contact.
    """

    steps: list = field(default_factory=list)
    advance_end_pusher_pose: Transform | None = None
    advance_end_object_pose: PlanarPose | None = None
    advance_end_contact: ContactState | None = None
    final_contact: ContactState | None = None


def _wrap_deg(d: float) -> float:
    r = math.fmod(d + 180.0, 360.0)
    if r <= 0.0:
        r += 360.0
    return r - 180.0


def simulate_tap(
    world: WorldState,
    shape: ObjectShape,
    commanded_pose: Transform,
    tip: PusherTip = PusherTip(),
    tap_forward: float = 10.0,
    tap_back: float = 5.0,
    substep: float = SUBSTEP_CAP_MM,
):
    """Execute one tap: relocate to the commanded pose, advance, retract.

    The pusher moves to `commanded_pose` along a straight in-plane path with
    physics active (relocation can incidentally push the object), advances
    `tap_forward` mm along the commanded heading's forward axis and retracts
    `tap_back` mm. Every leg is substepped through resolve_substep. Returns
    the post-retraction WorldState and the TapTrajectory.
    """
    start = PlanarPose.from_transform(world.pusher_pose)
    cmd = PlanarPose.from_transform(commanded_pose)
    traj = TapTrajectory()
    obj = world.object_pose
    pos = start.position
    alpha = start.alpha

    def run_leg(phase: str, target_pos: np.ndarray, target_alpha: float):
        nonlocal obj, pos, alpha
        delta = target_pos - pos
        dist = float(np.hypot(delta[0], delta[1]))
        dalpha = _wrap_deg(target_alpha - alpha)
        if dist < 1e-12 and abs(dalpha) < 1e-12:
            return
        n = max(1, math.ceil(dist / substep))
        p_from = pos.copy()
        a_from = alpha
        for i in range(1, n + 1):
            frac = i / n
            p_next = p_from + delta * frac
            a_next = a_from + dalpha * frac
            w = WorldState(obj, PlanarPose(pos[0], pos[1], alpha).to_transform(), world.tap_index)
            obj, contact = resolve_substep(w, shape, p_next - pos, tip)
            pos = p_next
            alpha = a_next
            traj.steps.append(
                TapStep(
                    phase,
                    float(pos[0]),
                    float(pos[1]),
                    alpha,
                    obj.y,
                    obj.z,
                    obj.alpha,
                    contact.mode,
                    contact.penetration,
                )
            )
            traj.final_contact = contact

    run_leg("relocate", cmd.position, cmd.alpha)
    axis = heading_dir(cmd.alpha)
    run_leg("advance", cmd.position + tap_forward * axis, cmd.alpha)
    traj.advance_end_pusher_pose = PlanarPose(pos[0], pos[1], alpha).to_transform()
    traj.advance_end_object_pose = obj
    traj.advance_end_contact = traj.final_contact
    run_leg("retract", cmd.position + (tap_forward - tap_back) * axis, cmd.alpha)

    new_world = WorldState(
        obj,
        PlanarPose(pos[0], pos[1], alpha).to_transform(),
        world.tap_index + 1,
    )
    return new_world, traj
