import math

import pytest

from swarmc2 import agents as ag
from swarmc2.messages import Job


def quad(pos=(0.0, 0.0, 10.0), **kw):
    return ag.SimAgent("q1", "UAV-quad", pos, **kw)


def move_job(goal, job_id="j1", primitive="move_to", **params):
    return Job(job_id, "t1", primitive, [goal], params)


class TestMotion:
    def test_idle_agent_stays_put_and_drains_idle_rate(self):
        a = ag.SimAgent("g1", "UGV", (0.0, 0.0, 0.0))
        a.step(1.0, now=0.0)
        assert a.position == (0.0, 0.0, 0.0)
        expected = 1.0 - ag.IDLE_DRAIN_FACTOR / ag.ENDURANCE_S["UGV"]
        assert a.battery == pytest.approx(expected)

    def test_quad_moves_cruise_speed_toward_setpoint(self):
        a = quad()
        a.assign(move_job((50.0, 0.0, 10.0)), now=0.0)
        a.step(1.0, now=0.0)
        assert a.position[0] == pytest.approx(5.0)
        assert a.position[1] == 0.0

    def test_arrival_within_time_bound(self):
        a = quad(pos=(0.0, 0.0, 10.0))
        a.assign(move_job((40.0, 0.0, 10.0)), now=0.0)
        ticks = 0
        dt = 0.1
        while a.primitive is not None and ticks < 1000:
            a.step(dt, now=ticks * dt)
            ticks += 1
        bound = 40.0 / ag.CRUISE_SPEED["UAV-quad"] / dt + 2
        assert ticks <= bound
        assert a.completed_jobs == [("j1", True)]
        assert a.status == "idle"

    def test_ugv_stays_on_ground(self):
        a = ag.SimAgent("g1", "UGV", (0.0, 0.0, 0.0))
        a.assign(move_job((10.0, 0.0, 5.0)), now=0.0)
        for i in range(200):
            a.step(0.1, now=i * 0.1)
        assert a.position[2] == 0.0

    def test_fidelity2_acceleration_limited(self):
        a = quad(fidelity_level=2)
        a.assign(move_job((100.0, 0.0, 10.0)), now=0.0)
        a.step(1.0, now=0.0)
        moved_first = a.position[0]
        assert moved_first <= ag.ACCEL_LIMIT + 1e-9  # can't jump to cruise speed

    def test_fidelity_switch_preserves_waypoints(self):
        a = quad()
        wps = [(10.0, 0.0, 10.0), (20.0, 0.0, 10.0), (30.0, 0.0, 10.0)]
        a.assign(Job("j1", "t1", "waypoints", wps, {}), now=0.0)
        for i in range(30):
            a.step(0.1, now=i * 0.1)
        remaining_before = len(a.primitive.waypoints) - a.primitive.index
        a.set_fidelity(2, config_hash=99)
        assert a.primitive is not None
        assert len(a.primitive.waypoints) - a.primitive.index == remaining_before
        assert a.heartbeat().fidelity_level == 2
        assert a.heartbeat().config_hash == 99

    def test_same_level_switch_noop(self):
        a = quad()
        a.set_fidelity(1, 0)
        assert a.fidelity_level == 1

    def test_bad_level_rejected(self):
        with pytest.raises(ValueError):
            quad().set_fidelity(3, 0)


class TestBattery:
    def test_battery_nonincreasing_never_negative(self):
        a = quad()
        a.battery = 0.001
        levels = []
        for i in range(100):
            a.step(1.0, now=float(i))
            levels.append(a.battery)
        assert all(b2 <= b1 for b1, b2 in zip(levels, levels[1:]))
        assert levels[-1] >= 0.0

    def test_auto_land_preempts_at_threshold(self):
        a = quad(pos=(0.0, 0.0, 20.0))
        a.assign(move_job((500.0, 0.0, 20.0)), now=0.0)
        a.battery = 0.201
        a.step(1.0, now=0.0)
        # crossing 0.20 while airborne preempts with a landing primitive
        for i in range(1, 400):
            a.step(1.0, now=float(i))
            if a.auto_landing:
                break
        assert a.auto_landing
        assert a.primitive is None or a.primitive.kind == "land"
        assert ("j1", False) in a.completed_jobs


class TestSensing:
    def art(self, pos=(15.0, 0.0, 0.0), **kw):
        defaults = dict(artifact_id=1, outer_id=101, inner_id=201, role="hostile",
                        position=pos, outer_class="person")
        defaults.update(kw)
        return ag.Artifact(**defaults)

    def test_outer_only_at_mid_range(self):
        a = quad(pos=(0.0, 0.0, 0.0))
        dets = a.sense([self.art()], [], now=1.0)
        assert len(dets) == 1
        assert dets[0].inner_id is None
        assert dets[0].role == "person"

    def test_outer_and_inner_close(self):
        a = quad(pos=(0.0, 0.0, 0.0))
        dets = a.sense([self.art(pos=(5.0, 0.0, 0.0))], [], now=1.0)
        assert [d.inner_id for d in dets] == [None, 201]
        assert dets[1].role == "hostile"

    def test_occlusion_blocks(self):
        wall = ag.build_occluders([[(7.0, -5.0), (8.0, -5.0), (8.0, 5.0), (7.0, 5.0)]])
        a = quad(pos=(0.0, 0.0, 0.0))
        assert a.sense([self.art()], wall, now=1.0) == []

    def test_detection_idempotent(self):
        a = quad(pos=(0.0, 0.0, 0.0))
        arts = [self.art(pos=(5.0, 0.0, 0.0))]
        first = a.sense(arts, [], now=1.0)
        second = a.sense(arts, [], now=2.0)
        assert len(first) == 2 and second == []

    def test_out_of_range_not_detected(self):
        a = quad(pos=(0.0, 0.0, 0.0))
        assert a.sense([self.art(pos=(25.0, 0.0, 0.0))], [], now=1.0) == []


class TestFieldNodes:
    def node(self, **kw):
        defaults = dict(node_id="ied1", position=(0.0, 0.0, 0.0), effect_radius=5.0)
        defaults.update(kw)
        return ag.FieldNode(**defaults)

    def test_plain_agent_killed_in_radius(self):
        a = ag.SimAgent("g1", "UGV", (3.0, 0.0, 0.0))
        killed = ag.field_node_effects([a], [self.node()], now=5.0)
        assert killed == ["g1"]
        assert a.status == "killed"

    def test_ew_payload_survives(self):
        a = ag.SimAgent("g1", "UGV", (3.0, 0.0, 0.0), payload="EW")
        assert ag.field_node_effects([a], [self.node()], now=5.0) == []
        assert a.status == "idle"

    def test_disarmed_node_no_effect(self):
        a = ag.SimAgent("g1", "UGV", (3.0, 0.0, 0.0))
        assert ag.field_node_effects([a], [self.node(armed=False)], now=5.0) == []

    def test_killed_is_absorbing_and_heartbeats_stop(self):
        a = ag.SimAgent("g1", "UGV", (0.0, 0.0, 0.0))
        a.kill(now=10.0)
        a.assign(move_job((5.0, 0.0, 0.0)), now=11.0)
        a.step(1.0, now=11.0)
        assert a.status == "killed"
        assert a.position == (0.0, 0.0, 0.0)
        assert a.heartbeating(11.0)       # within 2 s grace
        assert not a.heartbeating(12.5)   # grace expired

    def test_killed_mid_task_reports_failure(self):
        a = ag.SimAgent("g1", "UGV", (3.0, 0.0, 0.0))
        a.assign(move_job((50.0, 0.0, 0.0)), now=0.0)
        a.kill(now=1.0)
        assert a.completed_jobs == [("j1", False)]


class TestEmergencyStop:
    def test_airborne_agent_lands_and_disarms(self):
        a = quad(pos=(5.0, 5.0, 30.0))
        a.assign(move_job((50.0, 0.0, 30.0)), now=0.0)
        a.disarm_and_land(now=1.0)
        assert a.position[2] == 0.0
        assert a.status == "disabled"
        assert not a.airborne
        assert a.completed_jobs == [("j1", False)]

    def test_ground_agent_noop_position(self):
        a = ag.SimAgent("g1", "UGV", (1.0, 2.0, 0.0))
        a.disarm_and_land(now=1.0)
        assert a.position == (1.0, 2.0, 0.0)
