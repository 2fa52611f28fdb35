#!/usr/bin/env python3
"""Generate a Starlink-like TLE snapshot from the filed shell layout.

Each shell is a Walker-delta pattern (planes x satellites per plane) at the
listed altitude and inclination. Small seeded perturbations of phase,
eccentricity and epoch keep the file from being perfectly regular. The output
is deterministic and carries valid modulo-10 checksums.

    python3 gen_starlink_shells.py > starlink_shells.tle
"""

import math
import random

MU = 398600.4418
R_E = 6371.0

# (altitude km, inclination deg, planes, sats per plane)
SHELLS = [
    (550.0, 53.0, 72, 22),
    (540.0, 53.2, 72, 22),
    (570.0, 70.0, 36, 20),
    (560.0, 97.6, 6, 58),
    (560.0, 97.6, 4, 43),
    (530.0, 43.0, 38, 33),
]


def checksum(body):
    total = 0
    for ch in body:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return str(total % 10)


def mean_motion_rev_day(alt_km):
    a = R_E + alt_km
    n = math.sqrt(MU / a**3)
    return n * 86400.0 / (2.0 * math.pi)


def main():
    rng = random.Random(20240101)
    catalog = 44700
    serial = 0
    out = []
    for shell_no, (alt, incl, planes, per_plane) in enumerate(SHELLS, start=1):
        raan_offset = rng.uniform(0.0, 360.0)
        for p in range(planes):
            raan = (raan_offset + 360.0 * p / planes) % 360.0
            for s in range(per_plane):
                catalog += 1
                serial += 1
                phase = 360.0 * (s / per_plane + p / (planes * per_plane))
                ecc = rng.randint(800, 2200)
                argp = rng.uniform(0.0, 360.0)
                alt_jit = alt + rng.uniform(-1.5, 1.5)
                mm = mean_motion_rev_day(alt_jit)
                epoch_day = 1.0 + rng.random()
                # Argument of latitude matches the Walker slot at the reference
                # epoch (day 1.5); the mean anomaly absorbs perigee and epoch offsets.
                drift = 360.0 * mm * (epoch_day - 1.5)
                ma = (phase - argp + drift + rng.uniform(-0.5, 0.5)) % 360.0
                launch = 19 + (serial * 7) % 6
                piece = "ABCDEFGHJKLMNPQRSTUVWXYZ"[serial % 24]
                intl = f"{launch:02d}{(serial % 250) + 1:03d}{piece:<3}"
                name = f"STARLINK-SHELL{shell_no}-{serial:05d}"
                l1 = (
                    f"1 {catalog:05d}U {intl:<8} 24{epoch_day:012.8f}  .00001500  00000+0  10000-3 0  999"
                )
                l2 = (
                    f"2 {catalog:05d} {incl:8.4f} {raan:8.4f} {ecc:07d} {argp:8.4f} {ma:8.4f} {mm:11.8f}{(serial * 13) % 90000 + 1000:5d}"
                )
                assert len(l1) == 68 and len(l2) == 68, (l1, l2)
                out.append(name)
                out.append(l1 + checksum(l1))
                out.append(l2 + checksum(l2))
    print("\n".join(out))


if __name__ == "__main__":
    main()
