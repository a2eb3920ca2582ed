#!/usr/bin/env python3
"""Download annual export series from the World Bank API into the long-format
CSV the pipeline ingests.

Usage:
    python3 scripts/fetch_worldbank.py [-o data/worldbank_exports.csv]

Requires network access to api.worldbank.org.
"""

import argparse
import csv
import sys

import requests

COUNTRIES = ["USA", "CAN", "DEU", "FRA", "JPN", "TUR", "KOR", "PRT", "GRC", "IRN"]
INDICATOR = "NE.EXP.GNFS.CD"
START, END = 1970, 2019
API = "https://api.worldbank.org/v2/country/{country}/indicator/{indicator}"


def fetch(country: str) -> dict[int, float]:
    resp = requests.get(
        API.format(country=country, indicator=INDICATOR),
        params={"date": f"{START}:{END}", "format": "json", "per_page": 100},
        timeout=30,
    )
    resp.raise_for_status()
    payload = resp.json()
    if len(payload) < 2 or payload[1] is None:
        raise RuntimeError(f"{country}: empty response")
    out = {}
    for entry in payload[1]:
        if entry["value"] is not None:
            out[int(entry["date"])] = float(entry["value"])
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-o", "--output", default="data/worldbank_exports.csv")
    args = parser.parse_args()

    rows = []
    for country in COUNTRIES:
        values = fetch(country)
        missing = [y for y in range(START, END + 1) if y not in values]
        if missing:
            print(f"warning: {country} missing years {missing}", file=sys.stderr)
        for year in sorted(values):
            rows.append((country, year, values[year]))
        print(f"{country}: {len(values)} years")

    import os

    os.makedirs(os.path.dirname(args.output) or ".", exist_ok=True)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["country", "year", "value"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
