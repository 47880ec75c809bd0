"""Cheating-committer strategies and their evaluation harness.

Each strategy is a commit-phase channel (input qudit -> routed subsystems
plus an ancilla kept at the commitment point) together with a per-point
unveil policy.  The harness forces unveiling at every point and tallies
per-point pass rates; the falsifiable security statement is that no shipped
strategy's pass-rate sum beats the cloning bound.
"""

import math
from collections import Counter
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import cloning
from .protocol import (
    AliceStrategy,
    CommitPlan,
    CommitView,
    SessionConfig,
    SessionStatus,
    UnveilAction,
    UnveilView,
    Verdict,
    run_session,
)
from .qudit import DimensionError, as_rng

MAX_JOINT_DIM = 65536  # pure-state session joints (vectors, not matrices)


# ---------------------------------------------------------------------------
# Score
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrategyScore:
    name: str
    d: int
    m: int
    trials: int
    p: tuple  # empirical per-point pass rates
    radius3: tuple  # binomial 3-sigma confidence radii
    joint_counts: dict  # pass-pattern tuple -> count (correlation record)
    aborted: bool = False

    @property
    def fidelity_sum(self) -> float:
        return float(sum(self.p))

    def to_csv_row(self) -> dict:
        bound = cloning.optimal_fidelity_sum(self.d, self.m)
        row = {"name": self.name, "d": self.d, "m": self.m}
        for i, (pi, ri) in enumerate(zip(self.p, self.radius3)):
            row[f"p{i}"] = pi
            row[f"p{i}_3sigma"] = ri
        row["sum"] = self.fidelity_sum
        row["bound"] = bound
        row["gap"] = bound - self.fidelity_sum
        return row


# ---------------------------------------------------------------------------
# Strategy library
# ---------------------------------------------------------------------------


def unveil_where_present(view: UnveilView) -> UnveilAction:
    return UnveilAction(unveil=view.has_payload)


@lru_cache(maxsize=None)
def _cloner_isometry(d: int, m: int) -> np.ndarray:
    """Stinespring dilation of the optimal universal 1->m cloner.

    Pads the input with (m-1) halves of maximally entangled pairs (whose
    other halves form the ancilla), projects the clone slots onto the
    symmetric subspace, and rescales; each column stays unit norm.
    Output index order: (slot_0, ..., slot_{m-1}, ancilla).
    """
    proj = cloning.symmetric_projector(d, m)
    n_anc = d ** (m - 1)
    big = d**m * n_anc
    if big > MAX_JOINT_DIM:
        raise DimensionError(f"cloner dilation dimension {big} exceeds cap {MAX_JOINT_DIM}")
    v = np.zeros((big, d), dtype=np.complex128)
    ent = np.zeros(d * d, dtype=np.complex128)
    ent[:: d + 1] = 1.0 / math.sqrt(d)
    pairs = ent
    for _ in range(m - 2):
        pairs = np.kron(pairs, ent)
    # pairs currently indexed (c_1, a_1, c_2, a_2, ...); regroup to clones-then-ancilla
    if m > 1:
        t = pairs.reshape((d, d) * (m - 1))
        order = list(range(0, 2 * (m - 1), 2)) + list(range(1, 2 * (m - 1), 2))
        pairs = np.transpose(t, order).ravel()
    for j in range(d):
        inp = np.zeros(d, dtype=np.complex128)
        inp[j] = 1.0
        w = np.kron(inp, pairs).reshape(d**m, n_anc)
        w = proj @ w
        v[:, j] = w.ravel()
    # universal: every column has the same norm; rescale to an isometry
    v /= np.linalg.norm(v[:, 0])
    return v


def strategy_clone_symmetric(d: int, m: int) -> AliceStrategy:
    """Apply the optimal symmetric 1->m cloner and route clone i along ray i."""
    iso = _cloner_isometry(d, m)
    n_anc = d ** (m - 1)

    def commit(view: CommitView) -> CommitPlan:
        if view.cfg.d != d or view.cfg.m != m:
            raise DimensionError(
                f"clone strategy built for (d={d}, m={m}) used on "
                f"(d={view.cfg.d}, m={view.cfg.m})"
            )
        return CommitPlan(
            present_slots=tuple(range(m)), joint=iso @ view.payload.vector, n_anc=n_anc
        )

    return AliceStrategy(
        name=f"clone-symmetric-{d}x{m}",
        commit=commit,
        unveil=unveil_where_present,
        isometry=lambda: iso,
    )


def strategy_superposed_commit(p0: float, p1: float) -> AliceStrategy:
    """Keep the committed value genuinely undetermined until unveiling.

    The committer stores a register correlated with the routing choice and
    measures it when unveiling; measuring earlier commutes with everything
    the recipient sees, so the routing draw is taken at commit time with the
    same statistics.  This is not cheating: the pass-rate sum stays 1.
    """
    if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1.0) > 1e-12:
        raise DimensionError(f"superposition weights ({p0}, {p1}) must be >= 0 and sum to 1")

    def commit(view: CommitView) -> CommitPlan:
        z = 0 if view.rng.random() < p0 else 1
        return CommitPlan(present_slots=(z,), joint=view.payload.vector.copy(), n_anc=1)

    return AliceStrategy(
        name=f"superposed-{p0:g}-{p1:g}", commit=commit, unveil=unveil_where_present
    )


def strategy_measure_resend(d: int, basis_policy: str = "computational") -> AliceStrategy:
    """Estimate the unknown state from a single copy, resend the estimate on
    every ray.  Measuring any orthonormal basis and resending the outcome
    state achieves the optimal single-copy estimation fidelity 2/(d+1) on
    uniformly random inputs."""
    if basis_policy not in ("computational", "haar"):
        raise DimensionError(f"unknown basis policy {basis_policy!r}")

    def commit(view: CommitView) -> CommitPlan:
        m = view.cfg.m
        if basis_policy == "haar":
            basis = cloning.haar_unitary(d, view.rng)
        else:
            basis = np.eye(d, dtype=np.complex128)
        amps = basis.conj().T @ view.payload.vector
        probs = np.abs(amps) ** 2
        probs /= probs.sum()
        k = int(view.rng.choice(d, p=probs))
        est = basis[:, k]
        joint = est
        for _ in range(m - 1):
            joint = np.kron(joint, est)
        return CommitPlan(present_slots=tuple(range(m)), joint=joint, n_anc=1)

    return AliceStrategy(
        name=f"measure-resend-{basis_policy}", commit=commit, unveil=unveil_where_present
    )


def acausal_probe_strategy() -> AliceStrategy:
    """Deliberately broken strategy: tries to unveil at point 1 with the
    subsystem it shipped to point 0, a spacelike move.  Exists to prove the
    causality hook trips; sessions running it must abort."""

    def commit(view: CommitView) -> CommitPlan:
        return CommitPlan(present_slots=(0,), joint=view.payload.vector.copy(), n_anc=1)

    def unveil(view: UnveilView) -> UnveilAction:
        if view.point_index == 0:
            return UnveilAction(unveil=True)
        return UnveilAction(unveil=True, source_event=view.cfg.unveil_points[0])

    return AliceStrategy(name="acausal-probe", commit=commit, unveil=unveil)


STRATEGY_BUILDERS = {
    "honest": lambda cfg, **kw: _honest(cfg, **kw),
    "clone-symmetric": lambda cfg, **kw: strategy_clone_symmetric(cfg.d, cfg.m),
    "superposed": lambda cfg, **kw: strategy_superposed_commit(
        kw.get("p0", 0.5), kw.get("p1", 0.5)
    ),
    "measure-resend": lambda cfg, **kw: strategy_measure_resend(
        cfg.d, kw.get("basis_policy", "computational")
    ),
    "acausal-probe": lambda cfg, **kw: acausal_probe_strategy(),
}


def _honest(cfg: SessionConfig, **kw):
    from .protocol import honest_strategy

    return honest_strategy(int(kw.get("bit", 0)))


def build_strategy(name: str, cfg: SessionConfig, **params) -> AliceStrategy:
    try:
        builder = STRATEGY_BUILDERS[name]
    except KeyError:
        raise DimensionError(
            f"unknown strategy {name!r}; available: {sorted(STRATEGY_BUILDERS)}"
        ) from None
    return builder(cfg, **params)


# ---------------------------------------------------------------------------
# Evaluation harness
# ---------------------------------------------------------------------------


def force_unveil_everywhere(strategy: AliceStrategy) -> AliceStrategy:
    """Wrap the unveil policy so an unveiling is attempted at every point
    (keeping any strategy-declared subsystem source, so causality probes
    still trip)."""
    inner = strategy.unveil

    def unveil(view: UnveilView) -> UnveilAction:
        action = inner(view)
        return replace(action, unveil=True)

    return replace(strategy, unveil=unveil)


def evaluate(strategy: AliceStrategy, cfg: SessionConfig, trials: int, rng) -> StrategyScore:
    """Run ``trials`` sessions with unveiling forced at every point and tally
    per-point pass rates.  Per-trial seeds are spawned independently, so the
    aggregation is order-free."""
    if trials < 1:
        raise DimensionError(f"need at least one trial, got {trials}")
    forced = force_unveil_everywhere(strategy)
    root = np.random.SeedSequence(as_rng(rng).integers(2**63))
    seeds = root.spawn(trials)
    m = cfg.m
    passes = np.zeros(m, dtype=np.int64)
    joint_counts = Counter()
    for t in range(trials):
        transcript = run_session(cfg, forced, seed=seeds[t])
        if transcript.status is SessionStatus.ABORTED_CAUSALITY:
            return StrategyScore(
                name=strategy.name,
                d=cfg.d,
                m=m,
                trials=trials,
                p=(),
                radius3=(),
                joint_counts={},
                aborted=True,
            )
        pattern = tuple(
            transcript.verdicts.get(i) is Verdict.PASS for i in range(m)
        )
        joint_counts[pattern] += 1
        passes += np.array(pattern, dtype=np.int64)
    p = passes / trials
    radius = 3.0 * np.sqrt(np.maximum(p * (1.0 - p), 1e-12) / trials)
    return StrategyScore(
        name=strategy.name,
        d=cfg.d,
        m=m,
        trials=trials,
        p=tuple(float(x) for x in p),
        radius3=tuple(float(x) for x in radius),
        joint_counts=dict(joint_counts),
    )
