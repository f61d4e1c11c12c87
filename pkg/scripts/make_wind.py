"""Write a synthetic multimodal wind scenario CSV for a system file.

    python scripts/make_wind.py --system five_bus --n 10000 --seed 2024 --out wind.csv
"""
import argparse

from sedpce import io
from sedpce.synthetic import multimodal_wind


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--system", default="five_bus", help="bundled fixture name or a system JSON path")
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--capacity", type=float, default=100.0, help="MW per farm")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    path = io.bundled(f"{args.system}.json") if "/" not in args.system and not args.system.endswith(".json") \
        else args.system
    system = io.load_system(path)
    data = multimodal_wind(args.n, farms=len(system.wind_farms), periods=system.periods,
                           capacity=args.capacity, seed=args.seed)
    io.save_scenarios(data, args.out, system.wind_labels)
    print(f"wrote {data.shape[0]} x {data.shape[1]} scenarios to {args.out}")


if __name__ == "__main__":
    main()
