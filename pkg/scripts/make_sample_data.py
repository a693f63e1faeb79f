#!/usr/bin/env python3
"""Generate a synthetic survey file in the expected schema, for offline demos.

Choices follow a noisy lowest-total-cost rule with a pull toward Train for
regular users and pass holders, so both the mock backend and the supervised
baselines have signal to work with. Deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
from pathlib import Path

COLUMNS = [
    "ID",
    "TRAIN_TT",
    "TRAIN_CO",
    "CAR_TT",
    "CAR_CO",
    "SM_TT",
    "SM_CO",
    "SURVEY",
    "GA",
    "TRAIN_AV",
    "CAR_AV",
    "SM_AV",
    "CHOICE",
]

CHOICE_CODES = {"train": 1, "swissmetro": 2, "car": 3}


def generate_rows(n: int, seed: int) -> list[dict]:
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        times = {m: rng.randint(20, 200) for m in CHOICE_CODES}
        costs = {m: rng.randint(10, 150) for m in CHOICE_CODES}
        regular = rng.random() < 0.4
        annual = rng.random() < 0.15
        utility = {}
        for mode in CHOICE_CODES:
            utility[mode] = -(times[mode] + costs[mode]) + rng.gauss(0, 25)
            if mode == "train":
                utility[mode] += 60 * regular + 60 * annual
        chosen = max(CHOICE_CODES, key=lambda m: utility[m])
        rows.append(
            {
                "ID": i,
                "TRAIN_TT": times["train"],
                "TRAIN_CO": costs["train"],
                "CAR_TT": times["car"],
                "CAR_CO": costs["car"],
                "SM_TT": times["swissmetro"],
                "SM_CO": costs["swissmetro"],
                "SURVEY": int(regular),
                "GA": int(annual),
                "TRAIN_AV": 1,
                "CAR_AV": 1,
                "SM_AV": 1,
                "CHOICE": CHOICE_CODES[chosen],
            }
        )
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=600)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--dest",
        default=str(Path(__file__).resolve().parents[1] / "data" / "sample.dat"),
    )
    args = parser.parse_args()

    dest = Path(args.dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=COLUMNS, delimiter="\t")
        writer.writeheader()
        writer.writerows(generate_rows(args.rows, args.seed))
    print(f"wrote {args.rows} synthetic rows to {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
