"""Fetch the published 118-bus / 20-node case data and convert what we can.

The data lives in a public git repository whose URL must be passed with
``--repo-url``. The script clones it, converts the first MATPOWER case
file it finds (``*.m`` with ``mpc.bus``) into ``system.json``, and, when a
wind CSV is given, writes ``scenarios.csv`` with labels matching the
system. Point ``SEDPCE_IEEE118_DIR`` at the output directory to enable the
optional acceptance check.

    python scripts/fetch_ieee118.py --repo-url <git url> --out data118 \
        --wind-buses 2 33 51 81 108 --periods 24 --wind-csv <wind file>

The gas network is not converted: its file layout in that repository has
not been checked. Add a ``gas`` block to ``system.json`` by hand (see the
bundled ``five_bus_gas.json`` for the schema).
"""
import argparse
import subprocess
import sys
from pathlib import Path

import numpy as np

from sedpce import io
from sedpce.matpower import system_from_case


def find_case(root: Path) -> Path | None:
    for path in sorted(root.rglob("*.m")):
        if "mpc.bus" in path.read_text(errors="ignore"):
            return path
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repo-url", required=True)
    ap.add_argument("--out", default="data118")
    ap.add_argument("--periods", type=int, default=24)
    ap.add_argument("--wind-buses", type=int, nargs="*", default=[])
    ap.add_argument("--load-profile", help="text file with one load multiplier per period")
    ap.add_argument("--wind-csv", help="numeric CSV, one scenario per row, farm-major columns")
    args = ap.parse_args()

    out = Path(args.out)
    src = out / "source"
    if not src.exists():
        out.mkdir(parents=True, exist_ok=True)
        subprocess.run(["git", "clone", "--depth", "1", args.repo_url, str(src)], check=True)
    case = find_case(src)
    if case is None:
        print(f"no MATPOWER case found under {src}; files:", file=sys.stderr)
        for p in sorted(src.rglob("*"))[:50]:
            print(f"  {p.relative_to(src)}", file=sys.stderr)
        return 1
    profile = np.loadtxt(args.load_profile) if args.load_profile else None
    system = system_from_case(case.read_text(), args.periods, args.wind_buses, profile, name=case.stem)
    io.save_system(system, out / "system.json")
    print(f"{case.name}: {len(system.buses)} buses, {len(system.lines)} lines, "
          f"{len(system.generators)} generators -> {out / 'system.json'}")
    if args.wind_csv:
        data = np.loadtxt(args.wind_csv, delimiter=",", ndmin=2)
        if data.shape[1] != system.n_wind:
            print(f"wind CSV has {data.shape[1]} columns, expected {system.n_wind}", file=sys.stderr)
            return 1
        io.save_scenarios(data, out / "scenarios.csv", system.wind_labels)
        print(f"{data.shape[0]} scenarios -> {out / 'scenarios.csv'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
