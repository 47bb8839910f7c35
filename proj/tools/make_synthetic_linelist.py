#!/usr/bin/env python3
"""Writes data/synthetic_linelist.csv: 1000 synthetic cases over 120 days."""
import datetime
import pathlib

import numpy as np

EPOCH = datetime.date(2020, 3, 1)
N_CASES = 1000
DAYS = 120
P_DEATH = 0.08
MU, R = 10.79, 0.88


def main():
    rng = np.random.default_rng(20200303)
    # Rising then falling incidence.
    weights = np.exp(-0.5 * ((np.arange(DAYS) - 55) / 18.0) ** 2)
    confirm = np.sort(rng.choice(DAYS, size=N_CASES, p=weights / weights.sum()))
    died = rng.random(N_CASES) < P_DEATH
    lags = rng.negative_binomial(R, R / (R + MU), size=N_CASES)

    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic_linelist.csv"
    with open(out, "w", newline="\n") as f:
        f.write("confirm_date,death_date\n")
        for c, d, lag in zip(confirm, died, lags):
            confirm_date = EPOCH + datetime.timedelta(days=int(c))
            death = (confirm_date + datetime.timedelta(days=int(lag))).isoformat() if d else ""
            f.write(f"{confirm_date.isoformat()},{death}\n")


if __name__ == "__main__":
    main()
