"""Command-line front end: ``teb run``, ``teb schema`` and ``teb orderings``.

Exit codes: 0 success, 1 assertion failure or schema error, 2 invalid
scenario (or bad command-line usage).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import valid_orderings
from .errors import SchemaError
from .schema import define_minimal_trust_zone, parse_schema
from .scenario import ScenarioError, bundled_scenarios, load_scenario, run_scenario, write_outputs

TEMPLATES = {"minimal-trust-zone": define_minimal_trust_zone}


def _expanded_text(schema, rid) -> str:
    rule = schema.expanded(rid)
    out = f"#{rid}: " + "/".join(e.to_text() for e in rule.elements)
    if rule.constraints:
        out += " & {" + ", ".join(c.to_text() for c in rule.constraints) + "}"
    if rule.signer:
        out += f" <= #{rule.signer}"
    return out


def cmd_run(args) -> int:
    try:
        spec = load_scenario(args.file)
        result = run_scenario(spec, args.seed)
    except ScenarioError as e:
        print(f"error: invalid scenario: {e}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path("out") / spec["name"]
    tpath, rpath = write_outputs(result, out)
    failed = [a for a in result.report["assertions"] if not a["passed"]]
    for a in failed:
        print(f"FAIL {a['what']}: expected {a['expected']!r}, got {a['actual']!r}")
    for eid, rec in result.report["entities"].items():
        if rec["error"]:
            print(f"{eid}: {rec['error']['type']} in {rec['error']['procedure']}: {rec['error']['message']}")
    verdict = "passed" if result.passed else "FAILED"
    print(f"{spec['name']} (seed {result.report['seed']}): {verdict}, "
          f"{len(result.report['assertions'])} assertions; wrote {tpath} and {rpath}")
    return 0 if result.passed else 1


def cmd_schema(args) -> int:
    try:
        if args.template:
            make = TEMPLATES.get(args.template)
            if make is None:
                print(f"error: unknown template {args.template!r}; known: {', '.join(TEMPLATES)}", file=sys.stderr)
                return 2
            schema = make(args.target)
        else:
            schema = parse_schema(Path(args.target).read_text(encoding="utf-8"))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SchemaError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if args.action == "check":
        print(f"ok: {schema.mode.value} schema, {len(schema)} rules, anchor #{schema.anchor_rule_id}")
        for rid, rule in schema.rules.items():
            kind = "fragment" if rid not in schema.signing_rule_ids else "rule"
            signer = f" <= #{rule.signer}" if rule.signer else ""
            print(f"  #{rid} ({kind}){signer}")
    elif args.template:
        print(schema.to_text(), end="")
    else:
        for rid in schema.signing_rule_ids:
            print(_expanded_text(schema, rid))
    return 0


def cmd_orderings(args) -> int:
    orders = sorted(valid_orderings(), key=lambda o: [p.value for p in o])
    if args.json:
        print(json.dumps([[p.value for p in o] for o in orders]))
        return 0
    for o in orders:
        print(",".join(p.value for p in o))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teb", description="Trust-domain entity bootstrapping simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file (or a bundled scenario by name)",
                         epilog="bundled: " + ", ".join(bundled_scenarios()))
    run.add_argument("file")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--out", default=None, help="output directory (default out/<scenario name>)")
    run.set_defaults(fn=cmd_run)

    sch = sub.add_parser("schema", help="lint or expand a trust schema")
    sch.add_argument("action", choices=("check", "expand"))
    sch.add_argument("target", help="schema file, or the zone name with --template")
    sch.add_argument("--template", default=None, help="generate from a template instead of reading a file")
    sch.set_defaults(fn=cmd_schema)

    orders = sub.add_parser("orderings", help="list the procedure orders the dataflow allows")
    orders.add_argument("--json", action="store_true")
    orders.set_defaults(fn=cmd_orderings)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
