import itertools

import numpy as np
import pytest

from apmqec.decoders.bp import BpConfig, bp_decode
from apmqec.decoders.hierarchy import TierConfig, hierarchical_decode
from apmqec.decoders.mle import MleBudget, mle_decode, mle_decode_milp
from apmqec.decoders.problem import DecodingProblem, logical_failure
from apmqec.decoders.relay import RelayConfig, relay_bp_decode
from apmqec.errors import DomainError, InfeasibleSyndrome
from apmqec.gf2 import SparseGf2Matrix
from apmqec.simulate import NoiseModel, build_memory_experiment, code_capacity_experiment, sample


def problem_from(h, priors, obs=None):
    h = np.atleast_2d(np.asarray(h, np.uint8))
    obs = np.zeros((1, h.shape[1]), np.uint8) if obs is None else np.atleast_2d(obs)
    return DecodingProblem(SparseGf2Matrix.from_dense(h), np.asarray(priors, float),
                           SparseGf2Matrix.from_dense(obs))


def brute_optimum(prob, s):
    """Minimum total weight over all error patterns with syndrome s."""
    n = prob.n_mechanisms
    H = prob.check.to_dense().astype(np.int64)
    w = prob.llr
    best = np.inf
    for start in range(0, 1 << n, 1 << 16):
        ids = np.arange(start, min(start + (1 << 16), 1 << n), dtype=np.int64)
        E = ((ids[:, None] >> np.arange(n)) & 1).astype(np.int64)
        ok = ((E @ H.T) % 2 == s).all(axis=1)
        if ok.any():
            best = min(best, float((E[ok] @ w).min()))
    return best


REP3 = [[1, 1, 0], [0, 1, 1]]


def test_bp_zero_syndrome(code96):
    prob = code_capacity_experiment(code96, 0.01).problem
    out = bp_decode(prob, np.zeros(prob.n_detectors, np.uint8))
    assert out.converged and not out.correction.any() and out.iterations <= 1


def test_bp_dimension_mismatch():
    prob = problem_from(REP3, [0.1] * 3)
    with pytest.raises(DomainError):
        bp_decode(prob, np.zeros(5, np.uint8))


@pytest.mark.parametrize("min_sum", [False, True])
def test_bp_repetition_all_cases(min_sum):
    prob = problem_from(REP3, [0.1] * 3, [[1, 1, 1]])
    for bits in itertools.product([0, 1], repeat=3):
        e = np.array(bits, np.uint8)
        out = bp_decode(prob, prob.syndrome(e), BpConfig(min_sum=min_sum))
        majority = e if e.sum() <= 1 else e ^ 1
        assert out.converged
        assert np.array_equal(out.correction, majority)


def test_bp_single_isolated_mechanism(code96):
    prob = code_capacity_experiment(code96, 0.001).problem
    e = np.zeros(prob.n_mechanisms, np.uint8)
    e[417] = 1
    out = bp_decode(prob, prob.syndrome(e))
    assert out.converged and np.array_equal(out.correction, e)


def test_relay_zero_legs_and_easy_case():
    prob = problem_from(REP3, [0.1] * 3)
    s = prob.syndrome(np.array([1, 0, 0], np.uint8))
    out = relay_bp_decode(prob, s, RelayConfig(legs=0))
    assert not out.converged and out.tier_used == 2
    easy = relay_bp_decode(prob, s)
    assert easy.converged
    assert np.array_equal(easy.correction, bp_decode(prob, s).correction)


def test_relay_beats_tier1(code96):
    exp = build_memory_experiment(code96, 8, "Z", NoiseModel.phenomenological(0.003))
    batch = sample(exp, 40, seed=11)
    prob = exp.problem
    weak = BpConfig(max_iters=4, min_sum=True, ms_scaling=0.8)
    t1 = t2 = 0
    for i, s in enumerate(batch.syndromes):
        out, marg = bp_decode(prob, s, weak, return_marginals=True)
        t1 += out.converged
        if out.converged:
            t2 += 1
        else:
            t2 += relay_bp_decode(prob, s, RelayConfig(legs=10, leg_iters=20, min_sum=True,
                                                       ms_scaling=0.8),
                                  init_marginals=marg, seed=i).converged
    assert t2 > t1


def test_mle_zero_syndrome(steane):
    prob = problem_from(steane.h_z.to_dense(), [0.01] * 7)
    out = mle_decode(prob, np.zeros(3, np.uint8))
    assert out.converged and not out.correction.any() and out.weight == 0


def test_mle_steane_weight_one(steane):
    H = steane.h_z.to_dense()
    prob = problem_from(H, [0.01] * 7)
    for j in range(7):
        e = np.zeros(7, np.uint8)
        e[j] = 1
        s = prob.syndrome(e)
        # brute force over errors of weight <= 3
        best = min(w for w in range(4) for supp in itertools.combinations(range(7), w)
                   if np.array_equal(H[:, list(supp)].sum(axis=1) % 2, s))
        out = mle_decode(prob, s)
        assert out.converged and out.correction.sum() == best == 1
        assert np.array_equal(out.correction, e)


def test_mle_infeasible():
    prob = problem_from([[1, 1], [1, 1]], [0.1, 0.1])
    with pytest.raises(InfeasibleSyndrome):
        mle_decode(prob, np.array([1, 0], np.uint8))


def test_mle_matches_enumeration():
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        n = int(rng.integers(3, 13))
        m = int(rng.integers(1, n + 1))
        H = (rng.random((m, n)) < 0.4).astype(np.uint8)
        priors = rng.uniform(0.01, 0.4, n)
        prob = problem_from(H, priors)
        e = (rng.random(n) < 0.3).astype(np.uint8)
        s = prob.syndrome(e)
        out = mle_decode(prob, s)
        assert out.converged
        assert np.array_equal(prob.syndrome(out.correction), s)
        assert float(out.correction @ prob.llr) == pytest.approx(brute_optimum(prob, s), abs=1e-9)


def test_mle_matches_enumeration_twenty_mechanisms():
    rng = np.random.default_rng(7)
    for _ in range(3):
        H = (rng.random((10, 20)) < 0.3).astype(np.uint8)
        prob = problem_from(H, rng.uniform(0.01, 0.3, 20))
        s = prob.syndrome((rng.random(20) < 0.25).astype(np.uint8))
        opt = brute_optimum(prob, s)
        for out in (mle_decode(prob, s), mle_decode_milp(prob, s, time_limit=30)):
            assert out.converged
            assert float(out.correction @ prob.llr) == pytest.approx(opt, abs=1e-6)


def test_mle_budget_exhaustion_is_not_converged(code96):
    prob = code_capacity_experiment(code96, 0.05).problem
    e = (np.random.default_rng(0).random(prob.n_mechanisms) < 0.05).astype(np.uint8)
    out = mle_decode(prob, prob.syndrome(e), MleBudget(max_nodes=50, time_limit=5))
    assert out.tier_used == 3
    if out.converged:
        assert np.array_equal(prob.syndrome(out.correction), prob.syndrome(e))


def test_logical_failure(steane):
    prob = code_capacity_experiment(steane, 0.01, "Z").problem
    e = np.zeros(7, np.uint8)
    e[2] = 1
    assert not logical_failure(e, e, prob).any()
    stab = steane.h_x.to_dense()[1]
    assert not logical_failure(e ^ stab, e, prob).any()
    lx = steane.logical_x[0]
    assert logical_failure(e ^ lx, e, prob).tolist() == [1]


def test_logical_failure_stabilizer_invariance_p96(code96):
    prob = code_capacity_experiment(code96, 0.01, "Z").problem
    rng = np.random.default_rng(3)
    hx = code96.h_x.to_dense()
    e = (rng.random(code96.n) < 0.02).astype(np.uint8)
    for _ in range(10):
        coeff = rng.integers(0, 2, hx.shape[0])
        stab = (coeff @ hx % 2).astype(np.uint8)
        assert not logical_failure(e ^ stab, e, prob).any()
    j = 17
    fail = logical_failure(e ^ code96.logical_x[j], e, prob)
    assert np.flatnonzero(fail).tolist() == [j]


def test_hierarchy_all_tier1(code96):
    exp = build_memory_experiment(code96, 2, "Z", NoiseModel.phenomenological(0.001))
    batch = sample(exp, 20, seed=1)
    outs, stats = hierarchical_decode(exp.problem, batch.syndromes, batch.observables)
    assert stats.reached[0] == 20
    assert all(o.tier_used == 1 for o in outs)
    assert stats.q2 == 0 and stats.q3 == 0


def test_forced_escalation(steane):
    prob = code_capacity_experiment(steane, 0.05).problem
    syn = np.array([prob.syndrome(np.eye(7, dtype=np.uint8)[j]) for j in range(7)])
    cfg = TierConfig(bp=BpConfig(max_iters=0), tiers=2)
    _, stats = hierarchical_decode(prob, syn, config=cfg)
    assert stats.reached[1] == 7 and stats.q2 == 1.0


def test_escalation_never_hurts(code96):
    exp = build_memory_experiment(code96, 4, "Z", NoiseModel.phenomenological(0.01))
    batch = sample(exp, 30, seed=5)
    cfg = TierConfig(bp=BpConfig(max_iters=8, min_sum=True, ms_scaling=0.8),
                     relay=RelayConfig(legs=4, leg_iters=20, min_sum=True, ms_scaling=0.8),
                     mle=MleBudget(backend="milp", time_limit=5))
    outs, stats = hierarchical_decode(exp.problem, batch.syndromes, batch.observables, cfg)
    f = stats.failures
    assert f[3] <= f[2] <= f[1]
    assert 1 >= stats.q[0] >= stats.q2 >= stats.q3
    for o, s in zip(outs, batch.syndromes):
        if o.converged:
            assert np.array_equal(exp.problem.syndrome(o.correction), s)
    merged = stats.merge(stats)
    assert merged.shots == 60 and merged.failures[1] == 2 * f[1]
