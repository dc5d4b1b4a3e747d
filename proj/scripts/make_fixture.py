#!/usr/bin/env python3
# Copyright 2026 The epicontrol Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes data/fixture-regioni-2020.csv, a stand-in for the regional feed.

National totals equal the published Italian counts on the sampled days
(1, 5, 10, ..., 30 Sept; 1, 5, ..., 29 Oct) and are log-linearly
interpolated in between. Each day is split over four regions with fixed
shares; the split keeps the national sums exact.
"""
import csv
import datetime as dt
import math
import pathlib

SAMPLES = {
    # date: (Q = totale_positivi, R = dimessi_guariti, D = deceduti)
    "2020-09-01": (26754, 207944, 35491),
    "2020-09-05": (31194, 209610, 35541),
    "2020-09-10": (35708, 211885, 35597),
    "2020-09-15": (39712, 214645, 35645),
    "2020-09-20": (44098, 218351, 35724),
    "2020-09-25": (47718, 222716, 35818),
    "2020-09-30": (51263, 227704, 35918),
    "2020-10-01": (52647, 222832, 35941),
    "2020-10-05": (58903, 232681, 36030),
    "2020-10-10": (74829, 238525, 36166),
    "2020-10-15": (99266, 245964, 36427),
    "2020-10-20": (142739, 255005, 36832),
    "2020-10-25": (222241, 266203, 37479),
    "2020-10-29": (299191, 279282, 38321),
}

REGIONS = [
    (3, "Lombardia", 45.46679409, 9.190347404, 0.31),
    (5, "Veneto", 45.43490485, 12.33845213, 0.17),
    (12, "Lazio", 41.89277044, 12.48366722, 0.22),
    (15, "Campania", 40.83956555, 14.25084984, 0.30),
]

HEADER = [
    "data", "stato", "codice_regione", "denominazione_regione", "lat", "long",
    "ricoverati_con_sintomi", "terapia_intensiva", "totale_ospedalizzati",
    "isolamento_domiciliare", "totale_positivi", "variazione_totale_positivi",
    "nuovi_positivi", "dimessi_guariti", "deceduti", "casi_da_sospetto_diagnostico",
    "casi_da_screening", "totale_casi", "tamponi", "casi_testati", "note",
]


def daily_totals():
    keys = sorted(SAMPLES)
    days = [dt.date.fromisoformat(k) for k in keys]
    out = {}
    for (d0, k0), (d1, k1) in zip(zip(days, keys), zip(days[1:], keys[1:])):
        span = (d1 - d0).days
        for step in range(span):
            s = step / span
            out[d0 + dt.timedelta(days=step)] = tuple(
                round(math.exp((1 - s) * math.log(a) + s * math.log(b)))
                for a, b in zip(SAMPLES[k0], SAMPLES[k1]))
    out[days[-1]] = SAMPLES[keys[-1]]
    return out


def split(total):
    parts = [math.floor(total * share) for *_, share in REGIONS]
    parts[-1] += total - sum(parts)
    return parts


def main():
    root = pathlib.Path(__file__).resolve().parent.parent
    path = root / "data" / "fixture-regioni-2020.csv"
    totals = daily_totals()
    previous_q = None
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for day in sorted(totals):
            q, r, d = totals[day]
            qs, rs, ds = split(q), split(r), split(d)
            prev = split(previous_q) if previous_q is not None else qs
            for i, (code, name, lat, lon, _) in enumerate(REGIONS):
                hosp = qs[i] // 12
                icu = qs[i] // 120
                cases = qs[i] + rs[i] + ds[i]
                w.writerow([
                    f"{day.isoformat()}T17:00:00", "ITA", code, name, lat, lon,
                    hosp, icu, hosp + icu, qs[i] - hosp - icu, qs[i], qs[i] - prev[i],
                    max(0, qs[i] - prev[i]), rs[i], ds[i], "", "", cases, cases * 20, cases * 12, "",
                ])
            previous_q = q
    print(f"wrote {path} ({len(totals)} days x {len(REGIONS)} regions)")


if __name__ == "__main__":
    main()
