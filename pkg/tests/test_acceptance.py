"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Criterion 8 runs reduced shot counts by default; set APMQEC_FULL=1 for
10^5 shots per point (hours on one core).
"""

import math
import os

import numpy as np
import pytest

from apmqec.aod import (binary_shift_stages, compile_generic, default_layout, generic_move_bound,
                        realizes, transition_schedule)
from apmqec.apm import Apm, compose, inverse
from apmqec.codes import build_check_matrices, tanner_girth
from apmqec.decoders.bp import BpConfig
from apmqec.decoders.hierarchy import TierConfig, hierarchical_decode
from apmqec.decoders.mle import MleBudget, mle_decode
from apmqec.decoders.problem import DecodingProblem, logical_failure
from apmqec.decoders.relay import RelayConfig
from apmqec.decoders.throughput import (ThroughputModel, _cp_interval, backlog_probability,
                                        rate_metrics, scale_factor, throughput)
from apmqec.distance import distance_upper_bound, exact_distance_bruteforce
from apmqec.gf2 import SparseGf2Matrix, nullspace, solve
from apmqec.motion import MotionConfig, move_time, se_round_time
from apmqec.search import DEFAULT_ORDERING, column_structure
from apmqec.simulate import NoiseModel, build_memory_experiment, code_capacity_experiment, sample


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_criterion_1_code_parameters(specs, verdict):
    want = {96: (1152, 580), 192: (2304, 1156), 384: (4608, 2308)}
    got, ok = {}, True
    for P, nk in want.items():
        code = build_check_matrices(specs[P])
        girth = min(tanner_girth(code.h_x), tanner_girth(code.h_z))
        got[P] = (code.n, code.k, girth)
        ok &= (code.n, code.k) == nk and code.is_css() and girth >= 6
    verdict(1, ok, "(n, k, girth) = " + ", ".join(f"P={P}: {v}" for P, v in got.items()))


def test_criterion_2_group_structure(specs, verdict):
    s96, s192, s384 = (column_structure(specs[P]) for P in (96, 192, 384))
    ok = (len(s96["inside"]) == 12 and s96["invariant_factors"] == [32]
          and len(s192["inside"]) == 12 and s192["invariant_factors"] == [32, 2]
          and len(s384["inside"]) == 6
          and sorted(s384["outside"]) == ["F1", "G0", "G1", "G3", "G4", "G5"])
    verdict(2, ok, f"P=96 {len(s96['inside'])}/12 in Z_{s96['invariant_factors']}, "
                   f"P=192 {len(s192['inside'])}/12 in {s192['invariant_factors']}, "
                   f"P=384 {len(s384['inside'])}/12 inside, outside {s384['outside']}")


def test_criterion_3_p96_compilation(specs, verdict):
    spec = specs[96]
    scheds = transition_schedule(spec, DEFAULT_ORDERING, default_layout(spec))
    seq = DEFAULT_ORDERING
    ok, shapes = True, []
    for s, (i, j) in zip(scheds, zip(seq, seq[1:])):
        T = compose(spec.maps[j], inverse(spec.maps[i]))
        cols = s.kinds().count("GlobalColumnCyclicShift")
        rows = len(s.steps) - cols
        shapes.append((cols, rows))
        ok &= cols <= 1 and rows <= 1 and realizes(s, T)
    verdict(3, ok, f"{len(scheds)} transitions, (column, row) steps {shapes}, all realize pointwise")


def test_criterion_4_log_depth(verdict):
    rng = np.random.default_rng(4)
    worst, ok = 0.0, True
    for _ in range(1000):
        m, l = int(rng.integers(1, 17)), int(rng.integers(1, 65))
        P = m * l
        a = int(rng.integers(P)) if P > 1 else 0
        while math.gcd(a, P) != 1:
            a = int(rng.integers(P))
        f = Apm(a, int(rng.integers(P)), P)
        sched = compile_generic(f, m, l)
        bound = generic_move_bound(m, l)
        ok &= realizes(sched, f) and sched.moves <= bound
        if bound:
            worst = max(worst, sched.moves / bound)
    stages = binary_shift_stages([1, 7, 9, 5, 4, 2], 16)
    ok &= len(stages) == 4
    verdict(4, ok, f"1000 APMs realize, max moves/bound = {worst:.2f}; example uses "
                   f"{len(stages)} stages {[a for a, _ in stages]}")


def test_criterion_5_distance(steane, code96, verdict):
    st = distance_upper_bound(steane, trials=100, seed=0)
    exact = exact_distance_bruteforce(steane)
    rep = distance_upper_bound(code96, trials=100, seed=0)
    big = distance_upper_bound(code96, trials=1000, seed=0)
    ok = st.d_upper == exact.d_upper == 3 and rep.d_upper <= 14 and rep.verify(code96)
    verdict(5, ok, f"Steane {st.d_upper} (exact {exact.d_upper}); P=96 d <= {rep.d_upper} at 100 "
                   f"trials, d <= {big.d_upper} at 1000 trials (reported)")


def test_criterion_6_timing(specs, verdict):
    targets = {(96, 2): 13267, (96, 4): 8317, (192, 2): 16910, (192, 4): 9935}
    ok, parts = True, []
    fp = None
    for (P, pairs), target in targets.items():
        rep = se_round_time(specs[P], config=MotionConfig(n_aod_pairs=pairs))
        gap = rep.total / target - 1
        ok &= abs(gap) <= 0.3
        parts.append(f"P={P}/{pairs} AOD {rep.total:.0f} us ({gap:+.1%})")
        if P == 96:
            fp = rep.footprint
    closed = 2 * math.sqrt(12e-6 / 5500) * 1e6
    mt = move_time(12)
    ok &= fp == (374.0, 420.0) and abs(mt - closed) / closed < 5e-7 and round(mt, 1) == 93.4
    verdict(6, ok, "; ".join(parts) + f"; footprint {fp}; move_time(12) = {mt:.6g} us")


def _coset_optimum(H, priors, s):
    """Exhaustive minimum over every solution of H e = s."""
    e0 = solve(H, s)
    N = nullspace(H)
    w = np.log((1 - priors) / priors)
    best = float(e0 @ w)
    k = N.shape[0]
    for start in range(0, 1 << k, 1 << 14):
        ids = np.arange(start, min(start + (1 << 14), 1 << k), dtype=np.int64)
        C = ((ids[:, None] >> np.arange(k)) & 1).astype(np.int64)
        E = (e0.astype(np.int64) + C @ N.astype(np.int64)) % 2
        best = min(best, float((E @ w).min()))
    return best


def test_criterion_7_decoder_correctness(code96, verdict):
    rng = np.random.default_rng(7)
    exact = True
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        m = int(rng.integers(1, n + 1))
        H = (rng.random((m, n)) < 0.35).astype(np.uint8)
        priors = rng.uniform(0.01, 0.45, n)
        prob = DecodingProblem(SparseGf2Matrix.from_dense(H), priors,
                               SparseGf2Matrix.from_dense(np.zeros((1, n), np.uint8)))
        s = prob.syndrome((rng.random(n) < 0.3).astype(np.uint8))
        out = mle_decode(prob, s)
        exact &= out.converged and np.array_equal(prob.syndrome(out.correction), s)
        exact &= abs(float(out.correction @ prob.llr) - _coset_optimum(H, priors, s)) < 1e-9

    # every converged outcome across tiers matches its syndrome
    exp = build_memory_experiment(code96, 4, "Z", NoiseModel.phenomenological(0.01))
    batch = sample(exp, 40, seed=7)
    cfg = TierConfig(bp=BpConfig(max_iters=10, min_sum=True, ms_scaling=0.8),
                     relay=RelayConfig(legs=5, leg_iters=30, min_sum=True, ms_scaling=0.8),
                     mle=MleBudget(backend="milp", time_limit=5))
    outs, _ = hierarchical_decode(exp.problem, batch.syndromes, batch.observables, cfg)
    synd_ok = all(np.array_equal(exp.problem.syndrome(o.correction), s)
                  for o, s in zip(outs, batch.syndromes) if o.converged)

    prob = code_capacity_experiment(code96, 0.01, "Z").problem
    hx = code96.h_x.to_dense().astype(np.int64)
    inv = True
    for _ in range(1000):
        e = (rng.random(code96.n) < 0.02).astype(np.uint8)
        c = (rng.random(code96.n) < 0.02).astype(np.uint8)
        stab = (rng.integers(0, 2, hx.shape[0]) @ hx % 2).astype(np.uint8)
        inv &= np.array_equal(logical_failure(c ^ stab, e, prob), logical_failure(c, e, prob))
    verdict(7, exact and synd_ok and inv,
            f"MLE exact on 1000 instances: {exact}; converged outcomes satisfy syndromes: "
            f"{synd_ok}; stabilizer invariance on 1000 perturbations: {inv}")


FULL = os.environ.get("APMQEC_FULL") == "1"
SHOTS = {3e-3: 100_000, 1e-2: 100_000, 3e-2: 100_000} if FULL else {3e-3: 30_000, 1e-2: 3_000, 3e-2: 40}


# At reduced shots the p=3e-3 point usually has no T123 failures, and its 95%
# upper bound is too loose to certify the slope gate. The verdict line still
# prints FAIL in that case; only the full run is expected to pass.
@pytest.mark.xfail(not FULL, strict=False,
                   reason="reduced shots cannot resolve the waterfall slope at p=3e-3")
def test_criterion_8_decoder_behavior(code96, verdict):
    cfg = TierConfig(bp=BpConfig(max_iters=200, min_sum=True, ms_scaling=0.8),
                     relay=RelayConfig(legs=10, leg_iters=40, min_sum=True, ms_scaling=0.8),
                     mle=MleBudget(backend="milp", time_limit=1.0))
    rows = {}
    for p, shots in SHOTS.items():
        exp = build_memory_experiment(code96, 32, "Z", NoiseModel.phenomenological(p))
        batch = sample(exp, shots, seed=8)
        _, stats = hierarchical_decode(exp.problem, batch.syndromes, batch.observables, cfg, seed=8)
        rows[p] = (shots, stats.failures[1], stats.failures[2], stats.failures[3], stats.q)
    ps = sorted(rows)
    rate = {p: rows[p][3] / rows[p][0] for p in ps}
    monotone = all(rate[a] <= rate[b] for a, b in zip(ps, ps[1:])) and rate[ps[-1]] > rate[ps[0]]
    lo_p, hi_p = ps[0], ps[1]
    lo = rate[lo_p] if rows[lo_p][3] else _cp_interval(0, rows[lo_p][0])[1]
    slope = math.log(rate[hi_p] / lo) / math.log(hi_p / lo_p) if rate[hi_p] > 0 else 0.0
    tiers = all(r[3] <= r[2] <= r[1] for r in rows.values())
    ok = monotone and slope >= 2 and tiers
    table = "; ".join(f"p={p:g}: {r[0]} shots, failures T1={r[1]} T12={r[2]} T123={r[3]}, "
                      f"q2={r[4][1]:.3g} q3={r[4][2]:.3g}" for p, r in rows.items())
    verdict(8, ok, f"{'full' if FULL else 'reduced'} shots; {table}; waterfall slope "
                   f"{slope:.2f} (>= 2); monotone {monotone}; T123 <= T12 <= T1 {tiers}")


def within_quoted(value, quoted, digits):
    """True if ``quoted``, given to ``digits`` significant figures, is
    consistent with ``value`` (within half a unit of its last digit)."""
    unit = 10 ** (math.floor(math.log10(abs(quoted))) - digits + 1)
    return abs(value - quoted) <= unit / 2


def test_criterion_9_throughput(verdict):
    a = throughput(ThroughputModel((100e-9, 1.1e-6, 320e-6), (1, 0.008, 3e-5), 1152, 12))
    b = throughput(ThroughputModel((260e-9, 17e-6, 720e-6), (1, 0.013, 0.0007), 2304, 14))
    checks = [("F(1152)", scale_factor(1152, 12), 8.0, 2),
              ("F(2304)", scale_factor(2304, 14), 18.7, 3),
              ("t_bar(1152) ns", a["t_bar"] * 1e9, 120, 2),
              ("t_bar(2304) us", b["t_bar"] * 1e6, 1.0, 2),
              ("backlog", backlog_probability(3e-5, 350), 0.01, 1)]
    ok = all(within_quoted(v, q, d) for _, v, q, d in checks)
    verdict(9, ok, "; ".join(f"{name} = {v:.4g} (quoted {q:g})" for name, v, q, d in checks))


def test_criterion_10_metric_conversion(verdict):
    out = rate_metrics(7, 13_500_000, 32, 580)
    pr, pl = out["per_round"]["value"], out["per_logical"]["value"]
    ok = 1.5e-8 <= pr <= 1.8e-8 and 2.5e-11 <= pl <= 3.2e-11
    verdict(10, ok, f"per-round {pr:.3g} [{out['per_round']['low']:.2g}, "
                    f"{out['per_round']['high']:.2g}], per-logical {pl:.3g}")
