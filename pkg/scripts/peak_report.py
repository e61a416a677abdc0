"""Summarise the range-angle SINR maps: peak cell, 3 dB footprint, eavesdropper level.

    python scripts/peak_report.py            # 2-D azimuth x range map
    python scripts/peak_report.py spwt.mode=3d spwt.assignments=20
"""

import sys

from dmsecure.config import load_config, validate
from dmsecure.experiments import map_slices, sinr_maps
from dmsecure.spwt import peak_analysis


def main(overrides) -> None:
    cfg = load_config(None, "sinr-map", overrides)
    validate(cfg)
    _, desired, eve, _ = map_slices(cfg)
    print(f"desired {desired}\neavesdropper {eve}")
    for smap in sinr_maps(cfg):
        rep = peak_analysis(smap, desired, eve)
        names = " x ".join(ax.name for ax in smap.axes)
        print(f"[{names}] fixed {smap.fixed}")
        print(f"  peak at {rep.peak_location}: {rep.peak_db:.2f} dB"
              f" (desired cell is peak: {rep.desired_is_peak})")
        print(f"  cells within 3 dB of peak: {100 * rep.fraction_within_3db:.3f}%")
        print(f"  eavesdropper cell: {rep.eve_sinr_db:.2f} dB")


if __name__ == "__main__":
    main(sys.argv[1:])
