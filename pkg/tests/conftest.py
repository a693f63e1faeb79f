import csv
import os
import random
from pathlib import Path

import pytest

from modechoice.dataset import ChoiceSituation, ModeLabel

RAW_COLUMNS = [
    "ID",
    "PURPOSE",
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

# ingestion-order choice codes in the default map: 1=Train, 2=Swissmetro, 3=Car
CODE_OF_MODE = {ModeLabel.TRAIN: 1, ModeLabel.SWISSMETRO: 2, ModeLabel.CAR: 3}


def make_situation(
    sid="s0",
    times=(106, 90, 34),
    costs=(72, 70, 78),
    regular=False,
    annual=False,
    chosen=ModeLabel.SWISSMETRO,
):
    order = (ModeLabel.TRAIN, ModeLabel.CAR, ModeLabel.SWISSMETRO)
    return ChoiceSituation(
        situation_id=sid,
        travel_time_min=dict(zip(order, times)),
        travel_cost=dict(zip(order, costs)),
        is_regular_train_user=regular,
        owns_annual_pass=annual,
        chosen=chosen,
    )


def random_situation(rng: random.Random, sid: str) -> ChoiceSituation:
    order = (ModeLabel.TRAIN, ModeLabel.CAR, ModeLabel.SWISSMETRO)
    return ChoiceSituation(
        situation_id=sid,
        travel_time_min={m: rng.randint(5, 400) for m in order},
        travel_cost={m: rng.randint(0, 300) for m in order},
        is_regular_train_user=rng.random() < 0.4,
        owns_annual_pass=rng.random() < 0.15,
        chosen=rng.choice(order),
    )


def synthetic_raw_rows(n: int, seed: int) -> list[dict]:
    """Survey-file rows whose choices follow a noisy generalized-cost rule with
    a pull toward Train for regular users and pass holders, so supervised
    models have signal to learn."""
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        times = {m: rng.randint(20, 200) for m in ModeLabel}
        costs = {m: rng.randint(10, 150) for m in ModeLabel}
        regular = rng.random() < 0.4
        annual = rng.random() < 0.15
        utilities = {}
        for m in ModeLabel:
            u = -(times[m] + costs[m]) + rng.gauss(0, 25)
            if m is ModeLabel.TRAIN:
                u += 60 * regular + 60 * annual
            utilities[m] = u
        chosen = max(ModeLabel, key=lambda m: utilities[m])
        rows.append(
            {
                "ID": i,
                "PURPOSE": rng.randint(1, 9),
                "TRAIN_TT": times[ModeLabel.TRAIN],
                "TRAIN_CO": costs[ModeLabel.TRAIN],
                "CAR_TT": times[ModeLabel.CAR],
                "CAR_CO": costs[ModeLabel.CAR],
                "SM_TT": times[ModeLabel.SWISSMETRO],
                "SM_CO": costs[ModeLabel.SWISSMETRO],
                "SURVEY": int(regular),
                "GA": int(annual),
                "TRAIN_AV": 1,
                "CAR_AV": 1,
                "SM_AV": 1,
                "CHOICE": CODE_OF_MODE[chosen],
            }
        )
    return rows


def write_survey_file(path: Path, rows: list[dict], delimiter="\t", columns=None) -> Path:
    columns = columns or RAW_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, delimiter=delimiter)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in columns})
    return path


@pytest.fixture
def survey_file(tmp_path):
    return write_survey_file(tmp_path / "survey.dat", synthetic_raw_rows(600, seed=7))


def real_data_path() -> Path | None:
    candidate = os.environ.get("SWISSMETRO_DAT")
    if candidate and Path(candidate).exists():
        return Path(candidate)
    for name in ("swissmetro.dat", "swissmetro.dat.gz"):
        bundled = Path(__file__).resolve().parents[1] / "data" / name
        if bundled.exists():
            return bundled
    return None


requires_real_data = pytest.mark.skipif(
    real_data_path() is None,
    reason="public Swissmetro survey file not available "
    "(set SWISSMETRO_DAT or place it under data/; see scripts/fetch_swissmetro.py)",
)
