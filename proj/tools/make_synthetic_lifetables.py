#!/usr/bin/env python3
"""Writes synthetic Gompertz-Makeham life tables to data/lifetables/.

Official interim life tables are not redistributed here. These stand-ins have
hazard mu(t) = A + B exp(c t), with B solved by bisection so that the discrete
life expectancy at 65, sum_{i>65} s_i / s_65 over ages up to 100, equals the
requested value for each year.
"""
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

MEN = {1994: 14.5, 1995: 14.7, 1996: 14.8, 1997: 15.0, 1998: 15.2, 1999: 15.4, 2000: 15.7, 2001: 15.9}
WOMEN = {1994: 18.1, 1995: 18.2, 1996: 18.3, 1997: 18.4, 1998: 18.5, 1999: 18.6, 2000: 18.8, 2001: 19.0}


def survival(b, makeham, slope):
    s, alive = [], 1.0
    for age in range(100):
        alive *= math.exp(-(makeham + b * math.exp(slope * age)))
        s.append(alive)  # survival to exact age + 1
    return s


def le65(s):
    by_age = [1.0] + s
    return sum(by_age[66:]) / by_age[65]


def calibrate(target, makeham, slope):
    lo, hi = 1e-7, 1e-2
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if le65(survival(mid, makeham, slope)) > target:
            lo = mid
        else:
            hi = mid
    return survival(math.sqrt(lo * hi), makeham, slope)


def write(path, label, years, makeham, slope):
    lines = [f"# Synthetic Gompertz-Makeham life tables ({label}); not official data.",
             "# Each year is calibrated so that discrete LE at 65 matches the year's target.",
             "year,age,survival"]
    for year, target in years.items():
        for age, value in enumerate(calibrate(target, makeham, slope), start=1):
            lines.append(f"{year},{age},{value!r}")
    path.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    out = ROOT / "data" / "lifetables"
    out.mkdir(parents=True, exist_ok=True)
    write(out / "synthetic_men_1994_2001.csv", "men", MEN, 5e-4, 0.095)
    write(out / "synthetic_women_1994_2001.csv", "women", WOMEN, 3e-4, 0.105)
