import json
import math

import pytest
from fastapi.testclient import TestClient

from swarmc2 import engine as eng
from swarmc2 import scenarios
from swarmc2.server import build_app, encode_client_msg


def empty_doc(**extra):
    return {"type": "FeatureCollection", "features": [], **extra}


class TestScenarioParsing:
    def test_empty_scenario_valid(self):
        sc = eng.parse_scenario(empty_doc())
        assert sc.agent_count == 0
        assert sc.buildings == [] and sc.artifacts == []
        engine = eng.Engine(sc)
        engine.run(5)  # empty world still ticks

    def test_counts_preserved(self):
        doc = scenarios.coverage_mission_doc(artifacts=100)
        sc = eng.parse_scenario(doc)
        assert len(sc.artifacts) == 100
        assert sc.agent_count == 20

    def test_malformed_polygon_names_feature(self):
        doc = empty_doc()
        doc["features"] = [{
            "type": "Feature",
            "properties": {"kind": "building", "height": 5},
            "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 1], [0, 0]]]},
        }]
        with pytest.raises(eng.ScenarioError, match="feature 0"):
            eng.parse_scenario(doc)

    def test_unknown_kind_rejected(self):
        doc = empty_doc()
        doc["features"] = [{
            "type": "Feature", "properties": {"kind": "volcano"},
            "geometry": {"type": "Point", "coordinates": [0, 0]},
        }]
        with pytest.raises(eng.ScenarioError, match="volcano"):
            eng.parse_scenario(doc)

    def test_non_featurecollection_rejected(self):
        with pytest.raises(eng.ScenarioError):
            eng.parse_scenario({"type": "Feature"})


class TestSpawn:
    def test_roster_spawns_agents(self):
        sc = eng.parse_scenario(empty_doc(
            roster=[{"platform": "UAV-quad", "count": 3},
                    {"platform": "UGV", "count": 2, "payload": "EW"}]))
        engine = eng.Engine(sc)
        assert len(engine.runtimes) == 5
        kinds = [rt.agent.platform for rt in engine.runtimes.values()]
        assert kinds.count("UAV-quad") == 3 and kinds.count("UGV") == 2
        assert engine.runtimes["a004"].agent.payload == "EW"

    def test_heartbeats_begin_and_table_fills(self):
        sc = eng.parse_scenario(empty_doc(
            roster=[{"platform": "UGV", "count": 4}]))
        engine = eng.Engine(sc)
        engine.run(25)  # > one heartbeat period plus flood latency
        assert len(engine.agent_table) == 4

    def test_spawn_op_mid_mission(self):
        engine = eng.Engine(eng.parse_scenario(empty_doc()))
        engine.submit({"type": "spawn",
                       "roster": [{"platform": "VTOL", "count": 2}]})
        engine.run(1)
        assert len(engine.runtimes) == 2


class TestReplayLog:
    def test_round_trip_preserves_hash(self, tmp_path):
        engine = scenarios.hazard_vignette_engine()
        engine.run(200)
        path = tmp_path / "run.log"
        engine.log.save(str(path))
        loaded = eng.ReplayLog.load(str(path))
        assert loaded.terminal_hash() == engine.terminal_hash()
        assert loaded.records == engine.log.records

    def test_zero_ticks_empty_log(self):
        engine = eng.Engine(eng.parse_scenario(empty_doc()))
        assert engine.log.records == []
        assert len(engine.terminal_hash()) == 64

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.log"
        path.write_bytes(b"nope")
        with pytest.raises(ValueError):
            eng.ReplayLog.load(str(path))


class TestEmergencyStop:
    def test_airborne_agents_land_and_disarm_within_tick(self):
        engine = scenarios.one_to_many_engine()
        engine.run(80)  # scans assigned, quads airborne
        airborne = [rt.agent for rt in engine.runtimes.values() if rt.agent.airborne]
        assert len(airborne) >= 50
        engine.submit({"type": "estop"})
        engine.run(1)
        for a in airborne:
            assert a.status == "disabled"
            assert not a.airborne and a.position[2] == 0.0

    def test_estop_during_total_partition_still_delivered(self):
        doc = empty_doc(roster=[{"platform": "UAV-quad", "count": 3}])
        doc["network"] = {"radio_range_m": 0.001}  # nobody can hear anybody
        engine = eng.Engine(eng.parse_scenario(doc))
        for rt in engine.runtimes.values():
            rt.agent.position = rt.agent.position[:2] + (10.0,)
            rt.agent.airborne = True
        engine.emergency_stop()
        assert all(rt.agent.status == "disabled" for rt in engine.runtimes.values())

    def test_ground_swarm_noop_positions(self):
        engine = eng.Engine(eng.parse_scenario(empty_doc(
            roster=[{"platform": "UGV", "count": 2}])))
        before = {a: rt.agent.position for a, rt in engine.runtimes.items()}
        engine.emergency_stop()
        assert {a: rt.agent.position for a, rt in engine.runtimes.items()} == before


class TestBuildingState:
    def make_engine(self):
        doc = empty_doc()
        doc["features"] = [{
            "type": "Feature",
            "properties": {"kind": "building", "id": "b1", "height": 9},
            "geometry": {"type": "Polygon",
                         "coordinates": [[[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]]},
        }]
        return eng.Engine(eng.parse_scenario(doc))

    def det(self, role, inner=True, pos=(5.0, 5.0, 0.0)):
        from swarmc2.messages import Detection

        return Detection("a001", 900, 901 if inner else None, role, pos, 1.0)

    def test_building_label_confirms(self):
        engine = self.make_engine()
        assert not engine.building_states["b1"].confirmed
        engine._update_building_state(self.det("building-label"))
        assert engine.building_states["b1"].confirmed

    def test_hostile_inside_sets_threat(self):
        engine = self.make_engine()
        engine._update_building_state(self.det("hostile"))
        assert engine.building_states["b1"].contains_threat

    def test_intel_inside_sets_intel(self):
        engine = self.make_engine()
        engine._update_building_state(self.det("intel"))
        assert engine.building_states["b1"].contains_intel

    def test_outside_detection_no_change(self):
        engine = self.make_engine()
        engine._update_building_state(self.det("hostile", pos=(50.0, 50.0, 0.0)))
        st = engine.building_states["b1"]
        assert not (st.confirmed or st.contains_threat or st.contains_intel)

    def test_outer_only_detection_not_trusted(self):
        engine = self.make_engine()
        engine._update_building_state(self.det("hostile", inner=False))
        assert not engine.building_states["b1"].contains_threat


class TestConsoleOps:
    def test_sketch_lasso_and_cancel(self):
        engine = eng.Engine(eng.parse_scenario(empty_doc(
            roster=[{"platform": "UGV", "count": 3, "origin": [5, 5]}])))
        engine.submit({"type": "sketch", "id": "z1", "shape": "polyline",
                       "sketch_type": "explore_area", "closed": True,
                       "vertices": [[0, 0], [40, 0], [40, 40], [0, 40]]})
        engine.submit({"type": "lasso",
                       "stroke": [[-1, -1], [30, -1], [30, 30], [-1, 30]]})
        engine.run(1)
        assert engine.sketches.get("z1") is not None
        assert engine.selection.members == {"a001", "a002", "a003"}
        engine.submit({"type": "invoke", "name": "Overhead Scan",
                       "position": [20, 20], "params": {"Cell Size": 20.0}})
        engine.run(1)
        inst_id = next(iter(engine.tactics.instances))
        assert engine.tactics.instances[inst_id].selection_group == ["a001", "a002", "a003"]
        engine.submit({"type": "cancel", "instance": inst_id})
        engine.run(1)
        assert engine.tactics.instances[inst_id].status == "failed"

    def test_bad_op_reports_error_not_crash(self):
        engine = eng.Engine(eng.parse_scenario(empty_doc()))
        engine.submit({"type": "invoke", "name": "No Such Tactic", "position": [0, 0]})
        engine.run(1)
        assert any(e["type"] == "error" for e in engine.outbox)

    def test_link_op_rejects_cycles_via_outbox(self):
        engine = scenarios.one_to_many_engine()
        engine.run(1)
        engine.submit({"type": "link", "parent": "T1", "child": "T2"})
        engine.submit({"type": "link", "parent": "T2", "child": "T1"})
        engine.run(1)
        assert "T1" in engine.tactics.chain.parents["T2"]
        assert any("cycle" in e.get("message", "") for e in engine.outbox)


class TestSnapshot:
    def test_snapshot_shape(self):
        engine = scenarios.one_to_many_engine()
        engine.run(30)
        snap = engine.snapshot(include_coverage=True)
        assert snap["type"] == "snapshot"
        assert len(snap["agents"]) == 174
        agent = snap["agents"][0]
        assert {"id", "platform", "position", "battery", "status", "color",
                "task", "payload", "selected"} <= set(agent)
        assert snap["tactics"] and snap["buildings"] and snap["sketches"]
        assert "coverage" in snap
        json.dumps(snap)  # JSON-serializable end to end

    def test_status_colors_in_snapshot(self):
        engine = scenarios.hazard_vignette_engine()
        engine.run(800)
        snap = engine.snapshot()
        by_id = {a["id"]: a for a in snap["agents"]}
        assert by_id["a001"]["status"] == "unknown"  # killed, heartbeats stopped
        assert by_id["a001"]["color"] == "orange"
        assert by_id["a002"]["color"] == "green"


class TestWebSocketApi:
    def make_client(self):
        engine = eng.Engine(eng.parse_scenario(empty_doc(
            roster=[{"platform": "UAV-quad", "count": 2}])))
        return engine, TestClient(build_app(engine))

    def test_defs_then_snapshot_then_invoke(self):
        engine, client = self.make_client()
        engine.submit({"type": "sketch", "id": "z", "shape": "polyline",
                       "sketch_type": "explore_area", "closed": True,
                       "vertices": [[0, 0], [30, 0], [30, 30], [0, 30]]})
        engine.run(1)
        with client.websocket_connect("/ws") as ws:
            defs = json.loads(ws.receive_text())
            assert defs["type"] == "tactic_defs"
            names = {d[0] for d in defs["definitions"]}
            assert "Overhead Scan" in names and "Negation" in names
            snap = json.loads(ws.receive_text())
            assert snap["type"] == "snapshot"
            assert len(snap["agents"]) == 2
            ws.send_text(encode_client_msg(
                {"type": "invoke", "name": "Overhead Scan", "position": [15, 15],
                 "params": {}}))
            # the op lands via the socket task; tick until it takes effect
            for _ in range(50):
                engine.run(1)
                snap = json.loads(ws.receive_text())
                if snap.get("tactics"):
                    break
            assert snap["tactics"][0]["definition"] == "Overhead Scan"

    def test_malformed_and_unknown_ops_get_errors(self):
        engine, client = self.make_client()
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()  # defs
            ws.send_text("{not json")
            ws.send_text(json.dumps({"type": "reboot"}))
            errors = 0
            for _ in range(30):
                msg = json.loads(ws.receive_text())
                if msg.get("type") == "error":
                    errors += 1
                    if errors == 2:
                        break
            assert errors == 2

    def test_health_endpoint(self):
        engine, client = self.make_client()
        body = client.get("/health").json()
        assert body == {"tick": 0, "agents": 2}

    def test_canonical_encoding_is_sorted_and_compact(self):
        msg = {"type": "invoke", "name": "Overhead Scan", "position": [1.5, 2.0],
               "params": {"Cell Size": 15.0, "Agent Count": 1, "Altitude": 10.0}}
        enc = encode_client_msg(msg)
        assert enc == ('{"name":"Overhead Scan","params":{"Agent Count":1,'
                       '"Altitude":10.0,"Cell Size":15.0},"position":[1.5,2.0],'
                       '"type":"invoke"}')


class TestBench:
    def test_bench_reports_rate_and_hash(self):
        r = eng.bench(10, 50)
        assert r["agents"] == 10 and r["ticks"] == 50
        assert r["ticks_per_s"] > 0 and len(r["hash"]) == 64


class TestDeterminism:
    def test_same_seed_same_hash_hazard(self):
        a = scenarios.hazard_vignette_engine()
        b = scenarios.hazard_vignette_engine()
        a.run(400)
        b.run(400)
        assert a.terminal_hash() == b.terminal_hash()

    def test_different_seed_different_behavior_allowed(self):
        # seeds feed the mesh RNG; with zero loss the run is loss-independent,
        # so equal hashes here are fine -- this only asserts no crash
        a = scenarios.hazard_vignette_engine(seed=5)
        a.run(50)

    def test_realtime_flag_does_not_change_hash(self):
        doc = scenarios.hazard_vignette_doc()
        a = eng.Engine(eng.parse_scenario(doc), realtime=False)
        b = eng.Engine(eng.parse_scenario(doc), realtime=True)
        for e in (a, b):
            for op in scenarios.HAZARD_OPS:
                e.submit(dict(op))
        a.run(30)
        b.run(30)
        assert a.terminal_hash() == b.terminal_hash()
