import json
import subprocess
import sys

import pytest

from teb.cli import main
from teb.scenario import bundled_scenarios, load_scenario
from teb.schema import VERSEC_EXAMPLE


def test_orderings(capsys):
    assert main(["orderings"]) == 0
    lines = capsys.readouterr().out.split()
    assert len(lines) == 6 and "CA,EA,ET,EN,EC" in lines
    assert main(["orderings", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 6


def test_schema_check(tmp_path, capsys):
    f = tmp_path / "versec.lvs"
    f.write_text(VERSEC_EXAMPLE)
    assert main(["schema", "check", str(f)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok: explicit schema, 6 rules, anchor #root")
    assert "#article (rule) <= #author" in out and "#KEY (fragment)" in out


def test_schema_expand(tmp_path, capsys):
    f = tmp_path / "versec.lvs"
    f.write_text(VERSEC_EXAMPLE)
    assert main(["schema", "expand", str(f)]) == 0
    out = capsys.readouterr().out
    assert '#author: "lvs-test"/"author"/author/"KEY"/_/admin/_ <= #admin' in out


def test_schema_template(capsys):
    assert main(["schema", "expand", "/ndnfit", "--template", "minimal-trust-zone"]) == 0
    assert "#root:" in capsys.readouterr().out
    assert main(["schema", "check", "/x", "--template", "nope"]) == 2


def test_schema_errors(tmp_path, capsys):
    bad = tmp_path / "cyclic.lvs"
    bad.write_text("#a: #b\n#b: #a\n")
    assert main(["schema", "check", str(bad)]) == 1
    assert "CyclicRuleRef" in capsys.readouterr().err
    assert main(["schema", "check", str(tmp_path / "missing.lvs")]) == 2


def test_run_bundled(tmp_path, capsys):
    assert main(["run", "ssp_smart_home", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["scenario"] == "ssp_smart_home"
    assert (tmp_path / "transcript.jsonl").read_text().count("\n") == report["transcript_events"]


def test_run_failed_assertion(tmp_path, capsys):
    spec = load_scenario("ndnviber_iot")
    spec["entities"][0]["expect"] = {"certificates": 2}
    f = tmp_path / "s.json"
    f.write_text(json.dumps(spec))
    assert main(["run", str(f), "--out", str(tmp_path / "o")]) == 1
    assert "FAIL cam: certificate count" in capsys.readouterr().out


@pytest.mark.parametrize("spec", [{}, {"name": "x", "domain": "/d", "entities": [{"id": "a"}]}])
def test_run_invalid_scenario(tmp_path, spec):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(spec))
    assert main(["run", str(f), "--out", str(tmp_path / "o")]) == 2


def test_run_not_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert main(["run", str(f)]) == 2


def test_seed_override_changes_keys(tmp_path):
    main(["run", "ssp_smart_home", "--out", str(tmp_path / "a")])
    main(["run", "ssp_smart_home", "--seed", "77", "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    assert b["seed"] == 77 and b["passed"] and a["issued"] != b["issued"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "teb", "orderings"], capture_output=True, text=True)
    assert proc.returncode == 0 and len(proc.stdout.split()) == 6


def test_bundled_list():
    assert len(bundled_scenarios()) == 6
