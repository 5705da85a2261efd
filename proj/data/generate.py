#!/usr/bin/env python3
"""Regenerate the bundled synthetic market fixtures.

Writes prices.csv, indices.csv and riskfree.csv next to this script.
The universe is built so the default ingestion filters have something to
chew on: one asset with a clearly negative beta, one with beta far above
10, and one with a 30-day forward-filled (flat) stretch that breaks the
contiguous-trading requirement. The remaining 11 assets survive.
"""
import numpy as np
import os

OUT = os.path.dirname(os.path.abspath(__file__))
DAYS = 254  # price rows; 253 return observations downstream

TICKERS = [
    # (name, beta, idio daily vol, extra daily drift)
    ("ALZR", 0.45, 0.009, 0.00060),
    ("BRKV", 0.70, 0.011, 0.00035),
    ("CMGX", 1.60, 0.016, 0.00090),
    ("DLTN", 0.35, 0.006, 0.00020),
    ("ENRP", 1.10, 0.013, -0.00010),
    ("FSTL", 0.90, 0.010, 0.00050),
    ("GRDN", 1.30, 0.014, 0.00075),
    ("HYLC", 0.55, 0.018, 0.00120),
    ("INMR", 1.80, 0.015, 0.00040),
    ("JSPR", 0.25, 0.005, 0.00030),
    ("KRNL", 1.00, 0.012, 0.00055),
    ("LMNT", -0.80, 0.010, 0.00040),  # beta < 0 -> filtered (beta_low)
    ("MRCV", 11.50, 0.012, 0.00100),  # beta > 10 -> filtered (beta_high)
    ("NVSN", 0.85, 0.011, 0.00045),   # flat stretch -> filtered (discontinuous)
]


def business_days(n):
    dates = []
    d = np.datetime64("2023-01-02")
    while len(dates) < n:
        if np.is_busday(d):
            dates.append(str(d))
        d += 1
    return dates


def main():
    rng = np.random.default_rng(20230102)
    dates = business_days(DAYS)
    n_ret = DAYS - 1

    market = rng.normal(0.00045, 0.0085, n_ret)

    cols = {}
    for name, beta, vol, drift in TICKERS:
        r = beta * market + rng.normal(drift, vol, n_ret)
        p = 40.0 + 120.0 * rng.random()
        levels = p * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
        cols[name] = np.round(levels, 4)

    # Forward-fill a 30-day window for NVSN: no trades, price pinned.
    nv = cols["NVSN"].copy()
    nv[100:131] = nv[100]
    cols["NVSN"] = nv

    with open(os.path.join(OUT, "prices.csv"), "w") as f:
        f.write("date," + ",".join(n for n, *_ in TICKERS) + "\n")
        for t, d in enumerate(dates):
            f.write(d + "," + ",".join(f"{cols[n][t]:.4f}" for n, *_ in TICKERS) + "\n")

    # Three index level series riding the same market factor.
    with open(os.path.join(OUT, "indices.csv"), "w") as f:
        f.write("date,IDX_BROAD,IDX_TECH,IDX_BLUE\n")
        idx = []
        for loading, vol, base in ((1.0, 0.0015, 4100.0), (1.15, 0.0030, 12800.0),
                                    (0.85, 0.0020, 33500.0)):
            r = loading * market + rng.normal(0.0, vol, n_ret)
            idx.append(base * np.exp(np.concatenate([[0.0], np.cumsum(r)])))
        for t, d in enumerate(dates):
            f.write(d + "," + ",".join(f"{v[t]:.2f}" for v in idx) + "\n")

    rates = np.clip(rng.normal(0.00012, 0.00001, DAYS), 0.00008, 0.00016)
    with open(os.path.join(OUT, "riskfree.csv"), "w") as f:
        f.write("date,rate\n")
        for d, r in zip(dates, rates):
            f.write(f"{d},{r:.8f}\n")

    print(f"wrote {DAYS} rows x {len(TICKERS)} tickers")


if __name__ == "__main__":
    main()
