"""Generate a report for the bundled scene and validate it against the schema."""

import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema


def main() -> int:
    exe, scene, schema_path, work = sys.argv[1:5]
    work = pathlib.Path(work)
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    mpcs = work / "mpcs.csv"
    subprocess.run([exe, "simulate", "--scene", scene, "--out", str(mpcs)], check=True)
    subprocess.run([exe, "report", "--in", str(mpcs), "--format", "json", "--out", str(work / "report")], check=True)

    schema = json.loads(pathlib.Path(schema_path).read_text())
    report = json.loads((work / "report" / "report.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(report), key=lambda e: list(e.path))
    for e in errors:
        print(f"{'/'.join(map(str, e.path))}: {e.message}")

    n = len(report["bands_ghz"])
    for m in report["correlation"]:
        if len(m["entries"]) != n or any(len(row) != n for row in m["entries"]):
            print(f"{m['domain']}/{m['segment']}: matrix is not {n}x{n}")
            errors.append(m)
    if len(report["correlation"]) != 10 or not report["curves"] or not report["summary"]:
        print("report is missing matrices, curves or summary")
        errors.append(None)
    print("schema check:", "ok" if not errors else f"{len(errors)} problem(s)")
    return 0 if not errors else 1


if __name__ == "__main__":
    sys.exit(main())
