"""Losses and errors: the N-copy labelled parallel protocol.

The recipient issues N independently random labelled qudits in one tick at
the commitment point; the committer routes them all to the same value's ray;
acceptance requires at least M labels to verify.  Loss is a per-leg Bernoulli
event, channel error a per-leg depolarizing channel sampled exactly as a
uniform shift/clock kick (the kick average is the maximally mixed state, so
pure-state Monte-Carlo stays exact).

The cheat bound here is the i.i.d.-attack model: each copy independently
capped at the single-copy optimum F* = 1/2 + 1/(d+1).  Collective
(cross-copy entangled) attacks are NOT bounded by this formula; a small
randomized collective-attack search is included as a falsification probe,
not a proof.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .protocol import (
    CommitView,
    RngStreams,
    SessionConfig,
    TranscriptBuilder,
    Verdict,
    ensure_valid,
    measure_slot,
    rng_streams,
    weyl_on_slot,
)
from .qudit import DimensionError, as_rng, haar_random_state

N_LEGS = 3  # recipient->P, P->Q_i, Q_i->Q'_i


@dataclass(frozen=True)
class NoiseModel:
    loss: float = 0.0  # per-leg loss probability
    depolarizing: float = 0.0  # per-leg depolarizing strength
    detector_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("loss", "depolarizing", "detector_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DimensionError(f"noise parameter {name}={v} outside [0, 1]")
        object.__setattr__(
            self, "_survival", (1.0 - self.loss) ** N_LEGS * self.detector_efficiency
        )
        object.__setattr__(self, "_eta_total", 1.0 - (1.0 - self.depolarizing) ** N_LEGS)

    @property
    def survival(self) -> float:
        return self._survival

    @property
    def eta_total(self) -> float:
        return self._eta_total

    def fidelity_factor(self, d: int) -> float:
        """Pass probability of an honest surviving copy after channel errors."""
        return (1.0 - self._eta_total) + self._eta_total / d

    def honest_copy_pass_probability(self, d: int) -> float:
        return self.survival * self.fidelity_factor(d)


@dataclass(frozen=True)
class RedundancyParams:
    copies: int  # N
    threshold: int  # M
    d: int

    def __post_init__(self):
        if not 1 <= self.threshold <= self.copies:
            raise DimensionError(
                f"threshold M={self.threshold} must satisfy 1 <= M <= N={self.copies}"
            )
        if self.d < 2:
            raise DimensionError(f"qudit dimension must be >= 2, got {self.d}")


@dataclass(frozen=True)
class CopyResult:
    label: int
    returned_label: int  # may differ under a label-tampering test hook
    verdicts: dict  # point index -> Verdict


@dataclass
class RedundantResult:
    params: RedundancyParams
    copies: list  # CopyResult per issued copy
    pass_counts: dict  # point index -> verified-label count
    accept: dict  # point index -> bool (>= M labels verified)
    records: list


def run_redundant_session(cfg: SessionConfig, params: RedundancyParams,
                          noise: NoiseModel, alice, rng=None, seed: int = None,
                          label_tamper=None, keep_records: bool = True) -> RedundantResult:
    """Run the N-copy protocol once.

    ``alice`` is a strategy applied independently per copy (the i.i.d. attack
    model; honest routing is the special case).  ``label_tamper`` is a test
    hook mapping copy index -> returned label; labels that were never issued
    count the copy as failed.
    """
    ensure_valid(cfg)
    if params.d != cfg.d:
        raise DimensionError(f"params d={params.d} != config d={cfg.d}")
    if isinstance(rng, RngStreams):
        streams = rng
    else:
        streams = rng_streams(cfg.seed if seed is None else seed)
    d, m = cfg.d, cfg.m
    builder = TranscriptBuilder(cfg) if keep_records else None
    issued = set(range(params.copies))
    copies = []
    pass_counts = {i: 0 for i in range(m)}

    for k in range(params.copies):
        psi = haar_random_state(d, streams.bob)
        if keep_records:
            builder.add("bob", cfg.commit_point, "issue", {"label": k}, visibility="bob")
        verdicts = {i: Verdict.NO_SHOW for i in range(m)}
        returned_label = label_tamper(k) if label_tamper else k

        # leg 1: recipient -> P
        if streams.channel.random() < noise.loss:
            copies.append(CopyResult(k, returned_label, verdicts))
            continue
        vec = psi.vector.copy()
        if streams.channel.random() < noise.depolarizing:
            vec = _uniform_kick(d, vec, streams.channel)

        plan = alice.commit(CommitView(payload=_as_state(d, vec), cfg=cfg, rng=streams.alice))
        dims = (d,) * len(plan.present_slots) + (plan.n_anc,)
        joint = np.asarray(plan.joint, dtype=np.complex128).ravel()

        for i in plan.present_slots:
            pos = plan.slot_position(i)
            # leg 2: P -> Q_i
            if streams.channel.random() < noise.loss:
                continue
            if streams.channel.random() < noise.depolarizing:
                joint = _slot_kick(joint, dims, pos, d, streams.channel)
            # leg 3: Q_i -> Q'_i, then the detector
            if streams.channel.random() < noise.loss:
                continue
            if streams.channel.random() < noise.depolarizing:
                joint = _slot_kick(joint, dims, pos, d, streams.channel)
            if streams.channel.random() >= noise.detector_efficiency:
                continue
            if keep_records:
                builder.add_transfer(
                    "alice", cfg.unveil_points[i], cfg.receipt_points[i], "return",
                    {"label": returned_label, "point": i}, visibility="public",
                )
            if returned_label not in issued:
                verdicts[i] = Verdict.FAIL
                continue
            passed, joint = measure_slot(joint, dims, pos, psi.vector, float(streams.bob.random()))
            verdicts[i] = Verdict.PASS if passed else Verdict.FAIL
            if passed:
                pass_counts[i] += 1
        copies.append(CopyResult(k, returned_label, verdicts))

    accept = {i: pass_counts[i] >= params.threshold for i in range(m)}
    if keep_records:
        for i, ok in accept.items():
            builder.add(
                "bob", cfg.receipt_points[i], "accept-decision",
                {"point": i, "verified": pass_counts[i], "accepted": ok}, visibility="bob",
            )
    return RedundantResult(
        params=params,
        copies=copies,
        pass_counts=pass_counts,
        accept=accept,
        records=builder.sorted_records() if keep_records else [],
    )


def _as_state(d, vec):
    from .qudit import PureState

    return PureState(d, vec / np.linalg.norm(vec))


def _uniform_kick(d: int, vec: np.ndarray, rng) -> np.ndarray:
    """One sample of the depolarizing channel: a uniform shift/clock unitary."""
    from .qudit import weyl_apply

    return weyl_apply(d, int(rng.integers(d * d)), vec)


def _slot_kick(joint: np.ndarray, dims, pos: int, d: int, rng) -> np.ndarray:
    return weyl_on_slot(joint, dims, pos, d, int(rng.integers(d * d)))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def binomial_tail(n: int, p: float, m_min: int) -> float:
    """P[Binomial(n, p) >= m_min], stable direct summation."""
    if m_min <= 0:
        return 1.0
    if m_min > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    terms = [
        math.comb(n, k) * p**k * (1.0 - p) ** (n - k) for k in range(m_min, n + 1)
    ]
    return min(1.0, math.fsum(terms))


def honest_accept_probability(params: RedundancyParams, noise: NoiseModel) -> float:
    """Closed-form acceptance probability for an honest committer."""
    q = noise.honest_copy_pass_probability(params.d)
    return binomial_tail(params.copies, q, params.threshold)


def single_copy_cheat_cap(d: int) -> float:
    """Best per-copy pass probability a cheater can give BOTH points at once:
    half the two-point optimum (1 + 2/(d+1)) / 2."""
    return 0.5 + 1.0 / (d + 1)


def cheat_epsilon(d: int, copies: int, threshold: int, attack_model: str = "iid") -> float:
    """Excess unveiling freedom in the redundant protocol under i.i.d. attacks.

    p'_i is the tail of Binomial(N, F*) at M with the per-copy cap
    F* = 1/2 + 1/(d+1); the bound is p'_0 + p'_1 <= 1 + epsilon.
    """
    if attack_model != "iid":
        raise DimensionError(
            f"only the iid attack model has a closed-form bound, got {attack_model!r}"
        )
    RedundancyParams(copies=copies, threshold=threshold, d=d)
    if copies == 1 and threshold == 1:
        return 2.0 / (d + 1)  # the single-copy wiggle room, exactly
    tail = binomial_tail(copies, single_copy_cheat_cap(d), threshold)
    return max(0.0, 2.0 * tail - 1.0)


# ---------------------------------------------------------------------------
# Collective-attack falsification probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    d: int
    copies: int
    threshold: int
    trials: int
    best_sum: float  # best p'_0 + p'_1 found over joint strategies
    iid_sum: float  # 1 + cheat_epsilon under the iid model
    input_stderr: float  # sampling error of the finite input set

    @property
    def exceeds_iid(self) -> bool:
        """Finding, not a proof: true if the best collective strategy beat
        the iid model beyond three standard errors of the input sampling."""
        return self.best_sum > self.iid_sum + 3.0 * self.input_stderr


def _block_tail(out: np.ndarray, dims: tuple, block_axes: tuple, psis, m_min: int) -> float:
    """P[>= m_min of the per-copy projective tests in one block pass].

    Uses inclusion-exclusion over contraction subsets: the tests are rank-1
    projectors on distinct tensor axes, so P(exactly S pass) follows from the
    squared norms of partial contractions.
    """
    n = len(block_axes)
    t = out.reshape(dims)
    q = {}
    for r in range(n + 1):
        for subset in combinations(range(n), r):
            c = t
            for k in sorted(subset, reverse=True):
                c = np.tensordot(np.conj(psis[k]), c, axes=([0], [block_axes[k]]))
            # axes below block_axes[k] are unaffected because we go high-to-low
            q[subset] = float(np.vdot(c, c).real)
    total = 0.0
    for r in range(m_min, n + 1):
        for s in combinations(range(n), r):
            s_set = set(s)
            rest = [k for k in range(n) if k not in s_set]
            prob = 0.0
            for extra in range(len(rest) + 1):
                for add in combinations(rest, extra):
                    prob += (-1.0) ** len(add) * q[tuple(sorted(s_set | set(add)))]
            total += prob
    return total


def _product_cloner_isometry(d: int, copies: int) -> np.ndarray:
    """The best iid strategy as one joint isometry: clone each copy
    independently.  Used to seed the collective search at the iid optimum."""
    from .adversary import _cloner_isometry

    t1 = _cloner_isometry(d, 2).reshape(d, d, d, d)  # (blk0, blk1, anc, in)
    t = t1
    for _ in range(copies - 1):
        t = np.tensordot(t, t1, axes=0)
    perm = []
    for offset in range(4):  # group blk0s, blk1s, ancillas, inputs
        perm.extend(4 * k + offset for k in range(copies))
    block = d**copies
    return t.transpose(perm).reshape(block * block * block, block)


def collective_attack_probe(d: int, copies: int, threshold: int, trials: int, rng,
                            n_anc: int = None, n_inputs: int = 16,
                            climb_steps: int = 40) -> ProbeReport:
    """Randomized search over joint (cross-copy entangled) strategies.

    The committer applies one isometry to all N received qudits at once,
    producing an N-qudit block for each of the two points plus an ancilla.
    The objective is the probability sum of clearing the >= M threshold at
    both points, averaged over a fixed set of product random inputs.  The
    first trial starts at the product-of-cloners strategy (the iid optimum),
    so the search reports whether local collective deformations beat it.
    This is a falsification probe for the iid model, not a bound of its own.
    """
    if d > 2 or copies > 3:
        raise DimensionError(
            f"collective probe capped at d <= 2, N <= 3, got d={d}, N={copies}"
        )
    RedundancyParams(copies=copies, threshold=threshold, d=d)
    rng = as_rng(rng)
    if n_anc is None:
        n_anc = d**copies
    block = d**copies
    big = block * block * n_anc
    dims = (d,) * copies + (d,) * copies + (n_anc,)
    axes0 = tuple(range(copies))
    axes1 = tuple(range(copies, 2 * copies))

    input_sets = []
    for _ in range(n_inputs):
        psis = [haar_random_state(d, rng).vector for _ in range(copies)]
        vec = psis[0]
        for p in psis[1:]:
            vec = np.kron(vec, p)
        input_sets.append((psis, vec))

    def per_input_values(v):
        vals = np.empty(n_inputs)
        for idx, (psis, vec) in enumerate(input_sets):
            out = v @ vec
            vals[idx] = _block_tail(out, dims, axes0, psis, threshold) + _block_tail(
                out, dims, axes1, psis, threshold
            )
        return vals

    def objective(v):
        return float(per_input_values(v).mean())

    best = 1.0  # honest: always accepted at the routed point, never opposite
    best_v = None
    for t in range(trials):
        if t == 0 and n_anc == block:
            v = _product_cloner_isometry(d, copies)
        else:
            g = rng.normal(size=(big, block)) + 1j * rng.normal(size=(big, block))
            v, _ = np.linalg.qr(g)
        obj = objective(v)
        sigma = 0.3
        for _ in range(climb_steps):
            cand, _ = np.linalg.qr(
                v + sigma * (rng.normal(size=v.shape) + 1j * rng.normal(size=v.shape))
            )
            c_obj = objective(cand)
            if c_obj > obj:
                v, obj = cand, c_obj
                sigma = min(sigma * 1.2, 1.0)
            else:
                sigma = max(sigma * 0.8, 1e-3)
        if obj > best:
            best, best_v = obj, v
    stderr = 0.0
    if best_v is not None and n_inputs > 1:
        vals = per_input_values(best_v)
        stderr = float(vals.std(ddof=1) / math.sqrt(n_inputs))
    return ProbeReport(
        d=d,
        copies=copies,
        threshold=threshold,
        trials=trials,
        best_sum=best,
        iid_sum=1.0 + cheat_epsilon(d, copies, threshold),
        input_stderr=stderr,
    )
