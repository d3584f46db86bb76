"""Estimated syndrome-extraction round times next to the published estimates."""

from apmqec.codes import load_fixture
from apmqec.motion import MotionConfig, move_time, se_round_time

PUBLISHED = {(96, 2): 13267, (96, 4): 8317, (192, 2): 16910, (192, 4): 9935}


def main():
    print(f"one 12 um hop: {move_time(12):.1f} us, ancilla lift: {move_time(2):.1f} us")
    for (P, pairs), ref in PUBLISHED.items():
        rep = se_round_time(load_fixture(P), config=MotionConfig(n_aod_pairs=pairs))
        w, h = rep.footprint
        print(f"P={P} with {pairs} AOD pairs: {rep.total:7.0f} us (published {ref}, "
              f"{rep.total / ref - 1:+.0%}), array {w:.0f} x {h:.0f} um")


if __name__ == "__main__":
    main()
