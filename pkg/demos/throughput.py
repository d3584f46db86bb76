"""Decoder throughput arithmetic for the two larger codes."""

import json
from importlib import resources

from apmqec.decoders.throughput import ThroughputModel, rate_metrics, throughput


def main():
    for name in ("t1152", "t2304"):
        obj = json.loads(resources.files("apmqec.fixtures").joinpath(f"{name}.json").read_text())
        res = throughput(ThroughputModel.from_json(obj))
        print(f"{name}: F = {res['F']:.3g}, work per round {res['t_bar'] * 1e9:.0f} ns, "
              f"tier-3 solve spans {res['backlog_rounds']} rounds, "
              f"overlap probability {res['backlog_probability']:.3g}")
    m = rate_metrics(7, 13_500_000, 32, 580)
    print(f"7 failures in 13.5M shots of 32 rounds: {m['per_round']['value']:.2g} per round, "
          f"{m['per_logical']['value']:.2g} per logical qubit per round")


if __name__ == "__main__":
    main()
