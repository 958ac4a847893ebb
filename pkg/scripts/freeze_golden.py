"""Freeze the measured constants and the `verify` fixture table under tests/golden/.

Run once; later runs of the test suite compare against the frozen values.
Pass --force to overwrite existing files.
"""
import argparse
import json
import shutil
import tempfile
from importlib import resources
from pathlib import Path

from cplab.cli import main as cli_main
from cplab.lab import measured_constants

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    constants = GOLDEN / "constants.json"
    if args.force or not constants.exists():
        constants.write_text(json.dumps(measured_constants(), indent=2, sort_keys=True) + "\n")
        print(f"wrote {constants}")
    table = GOLDEN / "verify" / "verify.csv"
    if args.force or not table.exists():
        cfg = resources.files("cplab") / "fixtures" / "asm_power.ini"
        with tempfile.TemporaryDirectory() as tmp, resources.as_file(cfg) as path:
            code = cli_main(["verify", "--config", str(path), "--out", tmp])
            if code:
                raise SystemExit(code)
            table.parent.mkdir(exist_ok=True)
            shutil.copy(Path(tmp) / "tables" / "verify.csv", table)
        print(f"wrote {table}")


if __name__ == "__main__":
    main()
