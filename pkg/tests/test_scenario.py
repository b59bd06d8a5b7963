import copy
import json

import pytest

from teb.scenario import (
    ScenarioError, bundled_scenarios, load_scenario, run_scenario, validate_scenario, write_outputs,
)

BASE = {"name": "t", "domain": "/home", "protocol": "ssp",
        "entities": [{"id": "plug", "device_id": "plug1"}]}


def variant(**changes):
    spec = copy.deepcopy(BASE)
    spec.update(changes)
    return spec


@pytest.mark.parametrize("name", bundled_scenarios())
def test_bundled_scenarios_pass(name):
    res = run_scenario(load_scenario(name))
    failed = [a for a in res.report["assertions"] if not a["passed"]]
    assert res.passed, failed


def test_minimal_scenario():
    res = run_scenario(BASE)
    issued, = res.report["issued"]
    assert res.passed and issued.startswith("/home/plug1/KEY/") and issued.endswith("/controller/v=1")


@pytest.mark.parametrize("spec", [
    {"domain": "/x", "entities": []},
    variant(entities=[{"id": "a", "device_id": "1"}, {"id": "a", "device_id": "2"}]),
    variant(protocol="carrier-pigeon"),
    variant(entities=[{"id": "plug"}]),
    variant(schema={"builtin": "nope"}),
    variant(schema={"text": "#a: #b\n#b: #a\n"}),
    variant(actions=[{"op": "consume", "entity": "plug", "data": "missing"}]),
    variant(actions=[{"op": "teleport"}]),
    variant(protocol="pion", entities=[{"id": "b", "device_id": "b", "password": "p"}]),
    variant(protocol="dct", entities=[{"id": "b", "identities": ["/home/b"]}]),
])
def test_invalid_scenarios(spec):
    with pytest.raises(ScenarioError):
        validate_scenario(spec)


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario("no_such_scenario")
    f = tmp_path / "x.json"
    f.write_text("[1, 2]")
    with pytest.raises(ScenarioError):
        load_scenario(str(f))


def test_wrong_expectation_fails_run():
    spec = variant(actions=[{"op": "fetch_schema", "entity": "plug", "expect": {"mode": "explicit"}}])
    res = run_scenario(spec)
    assert not res.passed
    assert res.report["actions"][0]["error"]["type"] == "FetchTimeout"


def test_outputs(tmp_path):
    res = run_scenario(load_scenario("ndnviber_iot"))
    tpath, rpath = write_outputs(res, tmp_path)
    report = json.loads(rpath.read_text())
    assert report["report_version"] and report["entities"]["cam"]["session"]["completed"]
    events = [json.loads(line) for line in tpath.read_text().splitlines()]
    assert len(events) == report["transcript_events"]
    assert {"step", "channel", "event", "src", "dst", "summary", "size"} <= set(events[0])
    assert events[-1]["event"] == "cache-metrics" or report["cache"] == {}
