import math

import numpy as np
import pytest

from tacpush.pose_math import EulerPose, euler_to_transform, normalize_angle_deg
from tacpush.push_dynamics import (
    ContactMode,
    ContactState,
    PENETRATION_TOL_MM,
    SUBSTEP_CAP_MM,
    limit_surface_twist,
    motion_cone,
    resolve_substep,
    simulate_tap,
)
from tacpush.scene import (
    ObjectShape,
    PlanarPose,
    PusherTip,
    WorldState,
    boundary_probe,
    builtin_shapes,
    heading_dir,
    perp2,
)

from physics_oracle import (
    brute_force_push,
    motion_cone_margin_deg,
    random_contact_configs,
    voting_theorem_vote,
)

TIP = PusherTip()


def make_world(tip_center, object_pose):
    return WorldState(
        object_pose,
        euler_to_transform(
            EulerPose(0.0, float(tip_center[0]), float(tip_center[1]), 0.0, 0.0, 0.0)
        ),
        0,
    )


def square(side=60.0, mu=0.5):
    h = side / 2
    return ObjectShape(
        "sq", polygon=[[-h, -h], [h, -h], [h, h], [-h, h]],
        f_max=1.0, m_max=14.0, mu_contact=mu,
    )


class TestLimitSurfaceTwist:
    def test_pure_force_gives_pure_translation(self):
        t = limit_surface_twist((1.0, 0.0, 0.0), square())
        assert t.omega == 0.0
        assert t.vz == 0.0
        assert t.vy > 0.0

    def test_pure_moment_gives_pure_rotation(self):
        t = limit_surface_twist((0.0, 0.0, 1.0), square())
        assert t.vy == 0.0 and t.vz == 0.0
        assert t.omega > 0.0

    def test_zero_wrench_rejected(self):
        with pytest.raises(ValueError):
            limit_surface_twist((0.0, 0.0, 0.0), square())

    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            w = rng.normal(size=3)
            t = limit_surface_twist(w, square())
            assert np.linalg.norm(t.as_array()) == pytest.approx(1.0)

    def test_matches_finite_difference_gradient(self):
        rng = np.random.default_rng(1)
        shape = square()

        def ellipsoid(w):
            return (
                (w[0] / shape.f_max) ** 2
                + (w[1] / shape.f_max) ** 2
                + (w[2] / shape.m_max) ** 2
            )

        step = 1e-6
        for _ in range(100):
            w = rng.uniform(-2, 2, size=3)
            if np.linalg.norm(w) < 0.1:
                continue
            grad = np.array(
                [
                    (ellipsoid(w + step * e) - ellipsoid(w - step * e)) / (2 * step)
                    for e in np.eye(3)
                ]
            )
            grad /= np.linalg.norm(grad)
            twist = limit_surface_twist(w, shape).as_array()
            assert np.linalg.norm(twist - grad) / np.linalg.norm(grad) < 1e-4


class TestMotionCone:
    def contact_at(self, shape, pose, point, n_in):
        return ContactState(np.asarray(point, float), np.asarray(n_in, float),
                            ContactMode.STICKING, 0.0)

    def test_frictionless_cone_collapses(self):
        shape = square(mu=0.0)
        contact = self.contact_at(shape, PlanarPose(), [0.0, -30.0], [0.0, 1.0])
        left, right = motion_cone(contact, shape, PlanarPose())
        assert left == pytest.approx(right)

    def test_centred_push_symmetric(self):
        shape = square(mu=0.4)
        contact = self.contact_at(shape, PlanarPose(), [0.0, -30.0], [0.0, 1.0])
        left, right = motion_cone(contact, shape, PlanarPose())
        # edges mirror across the normal for a push line through the CoF
        assert left[1] == pytest.approx(right[1])
        assert left[0] == pytest.approx(-right[0])

    def test_separated_rejected(self):
        shape = square()
        contact = ContactState(np.zeros(2), np.array([0.0, 1.0]),
                               ContactMode.SEPARATED, -1.0)
        with pytest.raises(ValueError):
            motion_cone(contact, shape, PlanarPose())

    def test_matches_direct_edge_construction(self):
        # map each friction-cone edge force through the limit surface and
        # evaluate the produced contact-point velocity
        shape = square(mu=0.3)
        pose = PlanarPose(5.0, -3.0, 20.0)
        point = pose.transform_point([12.0, -30.0])
        n_in = pose.transform_point([0.0, 1.0]) - pose.position
        contact = self.contact_at(shape, pose, point, n_in)
        left, right = motion_cone(contact, shape, pose)
        r = point - pose.transform_point(shape.cof_offset)
        phi = math.atan(shape.mu_contact)
        for edge, sign in ((left, 1.0), (right, -1.0)):
            c, s = math.cos(sign * phi), math.sin(sign * phi)
            f = np.array([c * n_in[0] - s * n_in[1], s * n_in[0] + c * n_in[1]])
            moment = float(r[0] * f[1] - r[1] * f[0])
            twist = limit_surface_twist((f[0], f[1], moment), shape)
            v_contact = twist.as_array()[:2] + twist.omega * perp2(r)
            v_contact /= np.linalg.norm(v_contact)
            assert edge == pytest.approx(v_contact, abs=1e-9)


class TestResolveSubstep:
    def test_no_overlap_no_motion(self):
        shape = square()
        world = make_world([0.0, -60.0], PlanarPose())
        pose, contact = resolve_substep(world, shape, [0.1, 0.1])
        assert pose == world.object_pose
        assert contact.mode is ContactMode.SEPARATED
        assert contact.penetration < 0

    def test_substep_cap_enforced(self):
        world = make_world([0.0, -60.0], PlanarPose())
        with pytest.raises(ValueError, match="cap"):
            resolve_substep(world, square(), [0.6, 0.0])

    def test_centred_push_pure_translation(self):
        shape = square()
        tip = np.array([0.0, -49.9])  # 0.1 mm overlap, dead centre on the edge
        pose = PlanarPose()
        for _ in range(40):
            pose, _ = resolve_substep(make_world(tip, pose), shape, [0.0, 0.4])
            tip = tip + [0.0, 0.4]
        assert abs(pose.alpha) < math.degrees(1e-9)
        assert pose.y == pytest.approx(0.0, abs=1e-9)
        assert pose.z > 0.0

    def test_penetration_resolved_within_tolerance(self):
        shape = square()
        rng = np.random.default_rng(3)
        for _ in range(50):
            off = float(rng.uniform(-25, 25))
            world = make_world([off, -49.8], PlanarPose())
            drive = np.array([float(rng.uniform(-0.2, 0.2)), 0.4])
            pose, contact = resolve_substep(world, shape, drive)
            assert 0.0 < contact.penetration <= PENETRATION_TOL_MM

    def test_unilateral_retreat_never_moves_object(self):
        shape = square()
        world = make_world([0.0, -50.005], PlanarPose())  # grazing overlap
        pose, contact = resolve_substep(world, shape, [0.0, -0.4])
        assert pose == world.object_pose

    def test_deterministic(self):
        shape = square()
        world = make_world([7.0, -49.85], PlanarPose(0.0, 0.0, 10.0))
        a = resolve_substep(world, shape, [0.1, 0.45])
        b = resolve_substep(world, shape, [0.1, 0.45])
        assert a[0] == b[0]
        assert np.array_equal(a[1].point, b[1].point)
        assert a[1].penetration == b[1].penetration

    def test_rotation_sign_matches_voting_theorem(self):
        mismatches = 0
        used = 0
        for cfg in random_contact_configs(150, seed=4):
            pose, contact = resolve_substep(cfg.world, cfg.shape, cfg.disp)
            if contact.mode is ContactMode.SEPARATED:
                continue
            dalpha = math.radians(normalize_angle_deg(pose.alpha - cfg.object_pose.alpha))
            if abs(dalpha) < 1e-10:
                continue
            r = cfg.contact_point - cfg.object_pose.transform_point(cfg.shape.cof_offset)
            vote = voting_theorem_vote(r, cfg.n_in, cfg.shape.mu_contact, cfg.v_p)
            if vote == 0:
                continue
            used += 1
            if vote != int(np.sign(dalpha)):
                mismatches += 1
        assert used > 80
        assert mismatches == 0

    def test_matches_brute_force_oracle(self):
        # trimmed version of the acceptance check
        checked = 0
        for cfg in random_contact_configs(120, seed=5):
            _, point, n_out, _ = boundary_probe(
                cfg.shape, cfg.object_pose,
                np.asarray(cfg.world.pusher_pose.translation[1:3]) + cfg.disp,
            )
            n_in = -n_out
            cof = cfg.object_pose.transform_point(cfg.shape.cof_offset)
            p = perp2(point - cof)
            a = 1.0 / cfg.shape.f_max**2
            b = 1.0 / cfg.shape.m_max**2
            if motion_cone_margin_deg(cfg.v_p, n_in, cfg.shape.mu_contact, a, b, p) < 0.5:
                continue
            oracle_twist, oracle_mode = brute_force_push(
                cfg.v_p, n_in, cfg.shape.mu_contact, a, b, p, n_candidates=2_000
            )
            if oracle_twist is None:
                continue
            pose, contact = resolve_substep(cfg.world, cfg.shape, cfg.disp)
            if contact.mode is ContactMode.SEPARATED:
                continue
            moved = np.array(
                [
                    *(pose.transform_point(cfg.shape.cof_offset) - cof),
                    math.radians(normalize_angle_deg(pose.alpha - cfg.object_pose.alpha)),
                ]
            )
            if np.linalg.norm(moved) < 1e-9:
                continue
            moved /= np.linalg.norm(moved)
            checked += 1
            assert float(moved @ oracle_twist) > 0.999
            assert contact.mode.value == oracle_mode
        assert checked > 60

    def test_scale_invariance(self):
        shape = square()
        world = make_world([8.0, -49.9], PlanarPose())
        cmd = euler_to_transform(EulerPose(0.0, 8.0, -49.9, 0.0, 0.0, 0.0))
        w1, _ = simulate_tap(world, shape, cmd, substep=0.5)
        w2, _ = simulate_tap(world, shape, cmd, substep=0.25)
        assert w1.object_pose.y == pytest.approx(w2.object_pose.y, abs=0.02)
        assert w1.object_pose.z == pytest.approx(w2.object_pose.z, abs=0.02)
        assert w1.object_pose.alpha == pytest.approx(w2.object_pose.alpha, abs=0.02)


class TestSimulateTap:
    def test_far_command_never_touches(self):
        shape = square()
        world = make_world([0.0, -200.0], PlanarPose())
        cmd = euler_to_transform(EulerPose(0.0, 0.0, -190.0, 0.0, 0.0, 0.0))
        new_world, traj = simulate_tap(world, shape, cmd)
        assert new_world.object_pose == world.object_pose
        assert all(s.mode is ContactMode.SEPARATED for s in traj.steps)

    def test_forward_tap_advance_matches_closed_form(self):
        # pure sticking translation: object advances by tap length minus the
        # initial gap to the disc, minus the residual overlap margin
        shape = square()
        gap = 2.0
        world = make_world([0.0, -52.0], PlanarPose())
        cmd = euler_to_transform(EulerPose(0.0, 0.0, -52.0, 0.0, 0.0, 0.0))
        new_world, traj = simulate_tap(world, shape, cmd, tap_forward=10.0, tap_back=5.0)
        advance = new_world.object_pose.z - world.object_pose.z
        assert advance == pytest.approx(10.0 - gap, abs=0.05)
        assert abs(new_world.object_pose.alpha) < 1e-9

    def test_retraction_leaves_object_frozen(self):
        shape = square()
        world = make_world([0.0, -50.5], PlanarPose())
        cmd = euler_to_transform(EulerPose(0.0, 0.0, -50.5, 0.0, 0.0, 0.0))
        new_world, traj = simulate_tap(world, shape, cmd)
        assert traj.advance_end_object_pose == new_world.object_pose
        retract_steps = [s for s in traj.steps if s.phase == "retract"]
        assert retract_steps
        assert all(
            (s.object_y, s.object_z, s.object_alpha)
            == (new_world.object_pose.y, new_world.object_pose.z, new_world.object_pose.alpha)
            for s in retract_steps
        )

    def test_pusher_lands_at_net_tap_offset(self):
        shape = square()
        world = make_world([0.0, -200.0], PlanarPose())
        cmd = euler_to_transform(EulerPose(0.0, 3.0, -195.0, 10.0, 0.0, 0.0))
        new_world, _ = simulate_tap(world, shape, cmd, tap_forward=10.0, tap_back=5.0)
        expected = np.array([3.0, -195.0]) + 5.0 * heading_dir(10.0)
        pusher = PlanarPose.from_transform(new_world.pusher_pose)
        assert pusher.position == pytest.approx(expected, abs=1e-9)
        assert pusher.alpha == pytest.approx(10.0)

    def test_relocation_can_push(self):
        shape = square()
        world = make_world([0.0, -52.0], PlanarPose())
        # command straight through the object: relocation itself must push it
        cmd = euler_to_transform(EulerPose(0.0, 0.0, -45.0, 0.0, 0.0, 0.0))
        new_world, traj = simulate_tap(world, shape, cmd)
        assert new_world.object_pose.z > world.object_pose.z
        assert any(
            s.phase == "relocate" and s.mode is not ContactMode.SEPARATED
            for s in traj.steps
        )

    def test_tap_counter_increments(self):
        shape = square()
        world = make_world([0.0, -200.0], PlanarPose())
        cmd = euler_to_transform(EulerPose(0.0, 0.0, -199.0, 0.0, 0.0, 0.0))
        new_world, _ = simulate_tap(world, shape, cmd)
        assert new_world.tap_index == world.tap_index + 1
