"""A short phenomenological memory run through the three decoder tiers."""

import sys

from apmqec.codes import build_check_matrices, load_fixture
from apmqec.decoders import BpConfig, MleBudget, RelayConfig, TierConfig, hierarchical_decode
from apmqec.decoders.throughput import rate_metrics
from apmqec.simulate import NoiseModel, build_memory_experiment, sample


def main(shots=200, rounds=8):
    code = build_check_matrices(load_fixture(96))
    config = TierConfig(bp=BpConfig(min_sum=True, ms_scaling=0.8),
                        relay=RelayConfig(legs=10, leg_iters=40, min_sum=True, ms_scaling=0.8),
                        mle=MleBudget(backend="milp", time_limit=2.0))
    for p in (3e-3, 1e-2):
        exp = build_memory_experiment(code, rounds, "Z", NoiseModel.phenomenological(p))
        batch = sample(exp, shots, seed=1)
        _, stats = hierarchical_decode(exp.problem, batch.syndromes, batch.observables, config)
        f = stats.failures
        rates = rate_metrics(f[3], shots, rounds, code.k)
        print(f"p={p:g}: {exp.n_detectors} detectors, {exp.n_mechanisms} mechanisms; "
              f"q2={stats.q2:.3f} q3={stats.q3:.3f}; failures T1={f[1]} T12={f[2]} T123={f[3]}; "
              f"per round <= {rates['per_round']['high']:.2g}")


if __name__ == "__main__":
    main(*map(int, sys.argv[1:]))
