"""Canned scenario builders and scripted courses of action.

These back the headless experiment scripts and the acceptance suite: a
one-operator fan-out mission tasking a 174-agent swarm, a detection-sweep
mission over an artifact field, and a hazard interaction vignette.
"""

from __future__ import annotations

from .engine import Engine, Scenario, parse_scenario


def _polygon(kind: str, sid: str, ring: list, **props) -> dict:
    return {
        "type": "Feature",
        "properties": {"kind": kind, "id": sid, **props},
        "geometry": {"type": "Polygon", "coordinates": [ring + [ring[0]]]},
    }


def _line(kind: str, sid: str, coords: list, **props) -> dict:
    return {
        "type": "Feature",
        "properties": {"kind": kind, "id": sid, **props},
        "geometry": {"type": "LineString", "coordinates": coords},
    }


def _pt(kind: str, sid: str, xy: list, **props) -> dict:
    return {
        "type": "Feature",
        "properties": {"kind": kind, "id": sid, **props},
        "geometry": {"type": "Point", "coordinates": xy},
    }


def _rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def one_to_many_doc(seed: int = 7) -> dict:
    """174 agents (84 air, 90 ground), a handful of buildings, and the
    sketches a single operator would place for a site sweep."""
    features = [
        _polygon("building", "hq", _rect(140, 140, 170, 165), height=12.0),
        _polygon("building", "barn", _rect(-170, 140, -140, 160), height=6.0),
        # three air scan sectors, tall enough for 28 row-strips at 10 m cells
        _polygon("explore_area", "west", _rect(-400, 0, -150, 300)),
        _polygon("explore_area", "mid", _rect(-100, 0, 100, 300)),
        _polygon("explore_area", "east", _rect(150, 0, 400, 300)),
        # two ground deploy zones and a feeder route
        _polygon("deploy_zone", "dz1", _rect(-120, -120, -40, -60)),
        _polygon("deploy_zone", "dz2", _rect(40, -120, 120, -60)),
        _line("route", "approach", [[0, -200], [0, -150], [-60, -100]]),
        # a perimeter to picket and somewhere to land
        _polygon("sector", "picket", _rect(-60, -40, 60, 20)),
        _pt("recovery_point", "rp", [0, -220]),
    ]
    return {
        "type": "FeatureCollection",
        "features": features,
        "network": {"radio_range_m": 1200.0, "loss_prob": 0.0},
        "seed": seed,
        "roster": [
            {"platform": "UAV-quad", "count": 74, "origin": [-60, -180]},
            {"platform": "VTOL", "count": 10, "origin": [60, -180]},
            {"platform": "UGV", "count": 90, "origin": [-20, -250]},
        ],
    }


#: the scripted course of action: 6 tactic invocations, 10 sketches placed
ONE_TO_MANY_OPS = [
    {"type": "invoke", "name": "Overhead Scan", "position": [-270.0, 150.0],
     "params": {"Altitude": 30.0, "Cell Size": 10.0, "Agent Count": 28}},
    {"type": "invoke", "name": "Overhead Scan", "position": [0.0, 150.0],
     "params": {"Altitude": 30.0, "Cell Size": 10.0, "Agent Count": 28}},
    {"type": "invoke", "name": "Overhead Scan", "position": [270.0, 150.0],
     "params": {"Altitude": 30.0, "Cell Size": 10.0, "Agent Count": 28}},
    {"type": "invoke", "name": "Deploy", "position": [-80.0, -90.0],
     "params": {"Agent Count": 40}},
    {"type": "invoke", "name": "Deploy", "position": [80.0, -90.0],
     "params": {"Agent Count": 35}},
    {"type": "invoke", "name": "Hold Position", "position": [0.0, -10.0],
     "params": {"Agent Count": 15, "Duration": 120.0, "Altitude": 0.0}},
]


def one_to_many_engine(seed: int = 7, realtime: bool = False) -> Engine:
    eng = Engine(parse_scenario(one_to_many_doc(seed)), realtime=realtime)
    for op in ONE_TO_MANY_OPS:
        eng.submit(dict(op))
    return eng


def coverage_mission_doc(seed: int = 3, artifacts: int = 100) -> dict:
    """20 quads sweeping a 200x200 m field salted with artifacts."""
    features = [
        _polygon("explore_area", "field", _rect(0, 0, 200, 200)),
    ]
    # deterministic artifact lattice with a diagonal jitter
    for i in range(artifacts):
        x = 10.0 + (i % 10) * 20.0 + (i % 3)
        y = 10.0 + (i // 10) * 20.0 + (i % 5)
        role = ["benign", "hostile", "intel", "HVT"][i % 4]
        features.append(_pt("artifact", f"art{i}", [x, y], id=i,
                            outer_id=100 + i, inner_id=200 + i, role=role,
                            outer_class="object"))
    return {
        "type": "FeatureCollection",
        "features": features,
        "network": {"radio_range_m": 1200.0, "loss_prob": 0.0},
        "seed": seed,
        "roster": [{"platform": "UAV-quad", "count": 20, "origin": [60, -40]}],
    }


COVERAGE_OPS = [
    {"type": "invoke", "name": "Overhead Scan", "position": [100.0, 100.0],
     "params": {"Altitude": 10.0, "Cell Size": 10.0, "Agent Count": 20}},
]


def coverage_mission_engine(seed: int = 3) -> Engine:
    eng = Engine(parse_scenario(coverage_mission_doc(seed)))
    for op in COVERAGE_OPS:
        eng.submit(dict(op))
    return eng


def hazard_vignette_doc(seed: int = 5) -> dict:
    """Two rovers ordered through an IED field; one carries the counter."""
    features = [
        _pt("field_node", "ied1", [30.0, 0.0], effect_radius=5.0),
        _pt("field_node", "ied2", [30.0, 12.0], effect_radius=5.0),
        _line("route", "north", [[0.0, 12.0], [60.0, 12.0]]),
        _line("route", "south", [[0.0, 0.0], [60.0, 0.0]]),
    ]
    return {
        "type": "FeatureCollection",
        "features": features,
        "network": {"radio_range_m": 500.0},
        "seed": seed,
        "roster": [
            {"platform": "UGV", "count": 1, "origin": [0, 0]},
            {"platform": "UGV", "count": 1, "payload": "EW", "origin": [0, 12]},
        ],
    }


HAZARD_OPS = [
    {"type": "invoke", "name": "Follow Route", "position": [1.0, 0.0],
     "params": {"Altitude": 0.0}, "selection": ["a001"]},
    {"type": "invoke", "name": "Follow Route", "position": [1.0, 12.0],
     "params": {"Altitude": 0.0}, "selection": ["a002"]},
]


def hazard_vignette_engine(seed: int = 5) -> Engine:
    eng = Engine(parse_scenario(hazard_vignette_doc(seed)))
    for op in HAZARD_OPS:
        eng.submit(dict(op))
    return eng


def build(name: str, seed: int | None = None) -> Scenario:
    docs = {
        "one_to_many": one_to_many_doc,
        "coverage_mission": coverage_mission_doc,
        "hazard_vignette": hazard_vignette_doc,
    }
    if name not in docs:
        raise KeyError(f"unknown canned scenario {name!r}")
    doc = docs[name]() if seed is None else docs[name](seed)
    return parse_scenario(doc)
