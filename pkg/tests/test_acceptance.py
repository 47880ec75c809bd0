"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; tolerances are pinned here, not configurable.
"""

import math
import time

import numpy as np

from qcommit import _kernels
from qcommit import adversary as adv
from qcommit import chaining as ch
from qcommit import cloning
from qcommit import robustness as rb
from qcommit.protocol import (
    SessionStatus,
    TransportMode,
    Verdict,
    bob_view_before_unveil,
    honest_strategy,
    ideal_1d_config,
    run_session,
)
from qcommit.qudit import TeleportResource, haar_random_state, teleport, weyl
from qcommit.spacetime import (
    CausalRelation,
    causal_order,
    events_to_array,
    generate_directions,
    point_on_ray,
)

PASSED = "PASS"


def _report(number, description):
    print(f"ACCEPTANCE {number:2d} {PASSED}: {description}")


def test_criterion_01_exact_two_clone_bound():
    """Explicit symmetric two-clone construction hits 1 + 2/(d+1) to 1e-9
    for d = 2..16, in under ten seconds."""
    start = time.perf_counter()
    for d in range(2, 17):
        out = cloning.symmetric_clone(haar_random_state(d, d), 2)
        assert abs(out.fidelity_sum - (1 + 2 / (d + 1))) < 1e-9, d
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    _report(1, f"two-clone sums match 1 + 2/(d+1) for d=2..16 in {elapsed:.2f}s")


def test_criterion_02_multi_branch_bound():
    """Constructive 1->m sums equal 1 + 2(m-1)/(d+1) to 1e-9 and stay inside
    the 1 + 2m/d envelope for d = 2..8, m = 2..3, in under a minute."""
    start = time.perf_counter()
    for d in range(2, 9):
        for m in (2, 3):
            rep = cloning.bound_sum_fidelity(d, m)
            assert abs(rep.achieved - (1 + 2 * (m - 1) / (d + 1))) < 1e-9, (d, m)
            assert rep.bound <= 1 + 2 * m / d + 1e-12, (d, m)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _report(2, f"1->m sums match the closed form on d=2..8, m=2..3 in {elapsed:.2f}s")


def test_criterion_03_lagrange_optimum():
    """A 10^4-point sweep of the asymmetry constraint curve peaks at equal
    weights with value 1 + 2/(d+1), to 1e-9, for d = 2, 3, 4."""
    for d in (2, 3, 4):
        best, a, b = cloning.lagrange_sweep(d, 10_000)
        assert abs(best - (1 + 2 / (d + 1))) < 1e-9, d
        assert abs(a - b) < 1e-9, d
    _report(3, "constraint-curve sweeps peak at a=b with 1 + 2/(d+1)")


def test_criterion_04_no_super_bound_search():
    """At least 10^3 random isometric dilations with local ascent never beat
    the closed-form bound by more than 1e-6 (d <= 3, two branches)."""
    margins = {}
    for d in (2, 3):
        res = cloning.randomized_attack_search(d, 2, 1000, np.random.default_rng(20_000 + d))
        assert res.best_sum <= res.bound + 1e-6, (d, res.best_sum)
        margins[d] = res.bound - res.best_sum
    _report(4, f"attack search stayed under the bound (margins {margins})")


def test_criterion_05_completeness():
    """Honest sessions over the ideal geometry pass 10^4 out of 10^4."""
    cfg = ideal_1d_config(d=2, seed=0)
    failures = 0
    for s in range(10_000):
        tr = run_session(cfg, honest_strategy(s % 2), seed=s)
        failures += tr.verdicts[s % 2] is not Verdict.PASS
    assert failures == 0
    _report(5, "honest ideal sessions passed 10000/10000")


def test_criterion_06_hiding():
    """Pre-unveil recipient views are byte-identical for committed 0 vs 1
    across 10^3 paired seeded runs, in both transport modes."""
    for transport in (TransportMode.SECURED_CHANNEL, TransportMode.TELEPORT):
        cfg = ideal_1d_config(d=2, seed=0, transport=transport)
        for s in range(1000):
            t0 = run_session(cfg, honest_strategy(0), seed=s)
            t1 = run_session(cfg, honest_strategy(1), seed=s)
            assert bob_view_before_unveil(t0) == bob_view_before_unveil(t1), (
                transport, s,
            )
    _report(6, "1000 paired views byte-identical in both transport modes")


def test_criterion_07_causality():
    """10^5 fuzzed event pairs classify consistently; ray points are exactly
    lightlike; distinct-ray points are spacelike; the deliberately acausal
    strategy aborts."""
    rng = np.random.default_rng(7)
    n = 100_000
    a = rng.integers(-100_000, 100_000, size=(n, 4)).astype(np.int64)
    b = rng.integers(-100_000, 100_000, size=(n, 4)).astype(np.int64)
    fwd = _kernels.causal_code_batch(a, b)
    rev = _kernels.causal_code_batch(b, a)
    assert np.array_equal(rev, np.where(np.abs(fwd) <= 2, -fwd, fwd))
    sym_fwd = _kernels.interval_squared_batch(a, b)
    sym_rev = _kernels.interval_squared_batch(b, a)
    assert np.array_equal(sym_fwd, sym_rev)

    # ray points: exactly lightlike from the origin, batch-checked
    dirs = generate_directions(12, "spherical")
    origins = np.zeros((n, 4), dtype=np.int64)
    pts = np.empty((n, 4), dtype=np.int64)
    ts = rng.integers(1, 1000, size=n)
    choice = rng.integers(0, 12, size=n)
    vecs = np.array([(d.norm,) + d.vector for d in dirs], dtype=np.int64)
    pts = ts[:, None] * vecs[choice]
    codes = _kernels.causal_code_batch(origins, pts)
    assert (codes == _kernels.LIGHTLIKE_FUTURE).all()

    # any two distinct directions give spacelike ray-point pairs
    for m in range(2, 13):
        ds = generate_directions(m, "planar")
        for i in range(m):
            for j in range(i + 1, m):
                pa = point_on_ray(ideal_1d_config(d=2, seed=0).commit_point, ds[i], 97)
                pb = point_on_ray(ideal_1d_config(d=2, seed=0).commit_point, ds[j], 13)
                assert causal_order(pa, pb) is CausalRelation.SPACELIKE

    tr = run_session(ideal_1d_config(d=2, seed=0), adv.acausal_probe_strategy(), seed=1)
    assert tr.status is SessionStatus.ABORTED_CAUSALITY
    _report(7, "causal classification consistent on 1e5 pairs; acausal strategy aborts")


def test_criterion_08_teleportation_security():
    """Classical outcomes are chi-square uniform at 3 sigma over 10^4 runs;
    the mask-averaged qudit is within 1e-9 trace distance of I/d."""
    d = 2
    rng = np.random.default_rng(8)
    res = TeleportResource(d, source="P", target="Q")
    counts = np.zeros(d * d)
    for _ in range(10_000):
        j, _ = teleport(haar_random_state(d, rng), res, rng)
        counts[j] += 1
    expected = 10_000 / (d * d)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    dof = d * d - 1
    assert chi2 <= dof + 3 * math.sqrt(2 * dof), chi2

    for dd in (2, 3, 4):
        psi = haar_random_state(dd, rng)
        rho = psi.density_matrix().matrix
        avg = np.zeros_like(rho)
        for j in range(dd * dd):
            w = weyl(dd, j).matrix()
            avg += w @ rho @ w.conj().T
        avg /= dd * dd
        evals = np.linalg.eigvalsh(avg - np.eye(dd) / dd)
        assert 0.5 * np.abs(evals).sum() < 1e-9, dd
    _report(8, "broadcast index uniform at 3 sigma; masked average is I/d to 1e-9")


def test_criterion_09_redundancy():
    """Honest acceptance matches the binomial closed form within 3 sigma on a
    (loss, threshold) grid; the single-copy cheat bound is exactly 2/(d+1);
    the bound is monotone in the threshold."""
    cfg = ideal_1d_config(d=2, seed=0)
    n = 800
    for loss in (0.0, 0.04, 0.08, 0.12, 0.16):
        for threshold in (10, 11, 12, 13, 14):
            params = rb.RedundancyParams(copies=20, threshold=threshold, d=2)
            noise = rb.NoiseModel(loss=loss)
            expected = rb.honest_accept_probability(params, noise)
            acc = 0
            for s in np.random.SeedSequence((int(loss * 100), threshold)).spawn(n):
                r = rb.run_redundant_session(
                    cfg, params, noise, honest_strategy(0), seed=s, keep_records=False
                )
                acc += r.accept[0]
            sigma = math.sqrt(max(expected * (1 - expected), 1e-9) / n)
            assert abs(acc / n - expected) <= max(3 * sigma, 3e-3), (loss, threshold)

    for d in range(2, 17):
        assert rb.cheat_epsilon(d, 1, 1) == 2.0 / (d + 1), d

    for d, copies in ((2, 12), (3, 15)):
        eps = [rb.cheat_epsilon(d, copies, m) for m in range(copies // 2, copies + 1)]
        assert all(x >= y - 1e-15 for x, y in zip(eps, eps[1:])), (d, copies)
    _report(9, "redundant acceptance matches the binomial form; cheat bound exact and monotone")


def test_criterion_10_appendix_protocols():
    """Chains up to three levels recover the bit 10^3/10^3; the dual-encoding
    temporary cheat is detected at the final stage with frequency 1 - 1/d
    within 3 sigma for d in {2, 4, 8}."""
    base = ideal_1d_config(d=2, seed=0)
    recovered = 0
    total = 0
    for depth in (1, 2):  # two and three total levels
        for s in range(500):
            bit = s % 2
            run = ch.chain_commit(bit, depth, base, seed=s)
            res = ch.unveil_chain(run)
            recovered += res.verdict is ch.ChainVerdict.OK and res.recovered_value == bit
            total += 1
    assert recovered == total == 1000

    for d in (2, 4, 8):
        cfg = ideal_1d_config(d=d, seed=0)
        n = 3000
        detected = 0
        for s in range(n):
            run = ch.dual_commit(0, cfg, seed=s, cheat="both-on-zero")
            detected += ch.dual_unveil(run, 0).detected
        expected = 1 - 1 / d
        sigma = math.sqrt(expected * (1 - expected) / n)
        assert abs(detected / n - expected) <= 3 * sigma, d
    _report(10, "chains recovered 1000/1000; temporary cheat detected at 1 - 1/d")
