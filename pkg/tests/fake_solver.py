"""Scripted stand-in for a CHC solver, used by engine and CLI tests.

Usage: python3 fake_solver.py PLAN SCRIPT

PLAN is a JSON file mapping the schema comment found in the script
(e.g. "{(1,0),(0,1)}") to either a status string ("sat", "unsat",
"unknown", "garbage", "silent") or an object {"status": ..., "sleep":
seconds, "model": text}.  A "*" key is the fallback.  "silent" exits
without output (classified as crash); "garbage" prints an unparseable
line.  On "sat" with a "model" entry, the model text is printed after
the status line, mimicking a solver answering get-model.
"""

import json
import sys
import time


def main():
    plan_path, script_path = sys.argv[1], sys.argv[2]
    with open(plan_path) as f:
        plan = json.load(f)
    schema = "*"
    with open(script_path) as f:
        for line in f:
            if line.startswith("; schema: "):
                schema = line[len("; schema: "):].strip()
                break
    entry = plan.get(schema, plan.get("*", "unknown"))
    if isinstance(entry, str):
        entry = {"status": entry}
    if entry.get("sleep"):
        time.sleep(entry["sleep"])
    status = entry.get("status", "unknown")
    if status == "silent":
        return 3
    if status == "garbage":
        print("flagrant solver error")
        return 0
    print(status)
    if status == "sat" and entry.get("model"):
        print(entry["model"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
