"""Chained commitments and redundant dual encoding.

Chaining trades the lightlike unveiling constraint for flexibility: at the
real unveiling point the committer returns the qudit under a fresh uniform
shift/clock mask and commits the mask index in a new higher-dimensional
session starting right there; at every counterfactual branch point the
recipient also starts a session and receives a random dummy qudit plus a
random committed value, so the branches are indistinguishable.  The final
level is returned unmasked, which lets the recipient decode the masks
backwards along the declared path.

Dual encoding runs two oppositely-labelled copies in parallel so the
committer can unveil on either ray regardless of the bit; a provisional
single-point acceptance admits temporary cheating, exposed when the opposite
ray's return is checked at the causal-future meet of the two points.

Level growth follows m_{k+1} = d_k^2 (the mask index range) and
d_{k+1} = 4 m_{k+1}, which keeps each level's excess unveiling freedom at
most 2/5 and grows dimensions fast enough that at most two masked levels fit
the desk-scale cap.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .protocol import RngStreams, SessionConfig, rng_streams
from .qudit import (
    DimensionError,
    PureState,
    haar_random_state,
    weyl_apply,
    weyl_apply_inverse,
)
from .spacetime import (
    Event,
    causal_future_apex,
    causal_order,
    generate_directions,
    point_on_ray,
)

MAX_CHAIN_DIM = 4096


class ChainVerdict(Enum):
    OK = "ok"
    CHEAT_SUSPECTED = "cheat-suspected"


class DualFinal(Enum):
    CONFIRMED = "confirmed"
    CHEAT_SUSPECTED = "cheat-suspected"
    INCOMPLETE = "incomplete"


# ---------------------------------------------------------------------------
# Chained commitments
# ---------------------------------------------------------------------------


def chain_level_params(d0: int, m0: int, depth: int) -> list:
    """(d, m) per level for ``depth`` masked levels plus the final one."""
    params = [(d0, m0)]
    for _ in range(depth):
        d_prev, _ = params[-1]
        m_next = d_prev * d_prev
        d_next = 4 * m_next
        if d_next > MAX_CHAIN_DIM or m_next > MAX_CHAIN_DIM:
            raise DimensionError(
                f"chain level dimension d={d_next} (m={m_next}) exceeds the "
                f"desk-scale cap {MAX_CHAIN_DIM}; at most two masked levels fit"
            )
        params.append((d_next, m_next))
    return params


@dataclass(frozen=True)
class ChainLink:
    """One level of the real chain path."""

    level: int
    commit_point: Event
    d: int
    m: int
    committed_value: int
    unveil_point: Event


@dataclass(frozen=True)
class SessionNode:
    """One scheduled session in the chain tree (real or counterfactual).

    ``path`` is the sequence of branch-point indices from the root; the
    issued state and any dummy returns are reproducible from the stored
    seeds, so the full tree stays cheap to hold.
    """

    path: tuple
    level: int
    commit_point: Event
    d: int
    m: int
    committed_value: int
    on_real_path: bool
    issue_seed: tuple
    ray_length: int

    def unveil_point(self, q: int) -> Event:
        return point_on_ray(self.commit_point, _chain_directions(self.m)[q], self.ray_length)


@lru_cache(maxsize=None)
def _chain_directions(m: int):
    return generate_directions(m, "planar")


@dataclass
class ChainRun:
    bit: int
    depth: int
    seed: int
    level_params: list
    sessions: dict  # path tuple -> SessionNode
    real_path: tuple  # branch indices (v_0, ..., v_depth)
    masks: dict  # real-path prefix -> mask index j applied to that level's return

    def node(self, path: tuple) -> SessionNode:
        return self.sessions[path]

    def issued_state(self, path: tuple) -> PureState:
        node = self.sessions[path]
        return haar_random_state(node.d, np.random.SeedSequence(node.issue_seed))

    def returned_state(self, path: tuple, point: int) -> np.ndarray:
        """What the recipient holds from the return at branch ``point`` of the
        session at ``path``: the masked (or, at the final level, unmasked)
        real qudit on the real path, a reproducible random dummy elsewhere."""
        node = self.sessions[path]
        real_here = node.on_real_path and point == node.committed_value
        if real_here:
            vec = self.issued_state(path).vector
            if node.level < self.depth:
                vec = weyl_apply(node.d, self.masks[path], vec)
            return vec
        dummy_seed = node.issue_seed + (10_000 + point,)
        return haar_random_state(node.d, np.random.SeedSequence(dummy_seed)).vector

    def links(self) -> list:
        out = []
        path = ()
        for level in range(self.depth + 1):
            node = self.sessions[path]
            out.append(
                ChainLink(
                    level=level,
                    commit_point=node.commit_point,
                    d=node.d,
                    m=node.m,
                    committed_value=node.committed_value,
                    unveil_point=node.unveil_point(node.committed_value),
                )
            )
            path = path + (node.committed_value,)
        return out

    def final_unveil_point(self) -> Event:
        return self.links()[-1].unveil_point

    def to_json(self) -> dict:
        return {
            "bit": self.bit,
            "depth": self.depth,
            "levels": [
                {
                    "level": link.level,
                    "d": link.d,
                    "m": link.m,
                    "commit_point": link.commit_point.to_json(),
                    "unveil_point": link.unveil_point.to_json(),
                    "committed_value": link.committed_value,
                }
                for link in self.links()
            ],
            "scheduled_sessions": len(self.sessions),
        }


def chain_commit(bit: int, depth: int, base_cfg: SessionConfig, rng=None,
                 seed: int = None) -> ChainRun:
    """Run the commit side of a depth-masked chain, scheduling sessions at
    every branch point.

    ``depth`` counts masked levels: depth 1 is the base protocol plus one
    mask and one follow-up commitment of the mask index.
    """
    if depth < 1:
        raise DimensionError(f"chain depth must be >= 1, got {depth}")
    params = chain_level_params(base_cfg.d, base_cfg.m, depth)
    if not 0 <= bit < base_cfg.m:
        raise DimensionError(f"bit {bit} out of range for m={base_cfg.m}")
    run_seed = base_cfg.seed if seed is None else seed
    streams = rng if isinstance(rng, RngStreams) else rng_streams(run_seed)
    ray_length = max(
        1, (base_cfg.unveil_points[0].t - base_cfg.commit_point.t) // max(
            1, base_cfg.directions[0].norm
        )
    )

    sessions = {}
    masks = {}
    real_path = []

    def schedule(path, level, commit_point, on_real_path, committed_value):
        d, m = params[level]
        node = SessionNode(
            path=path,
            level=level,
            commit_point=commit_point,
            d=d,
            m=m,
            committed_value=committed_value,
            on_real_path=on_real_path,
            issue_seed=(run_seed, level) + path,
            ray_length=ray_length,
        )
        sessions[path] = node
        if on_real_path:
            real_path.append(committed_value)
        if level < depth:
            if on_real_path:
                mask = int(streams.alice.integers(d * d))
                masks[path] = mask
            for q in range(m):
                child_real = on_real_path and q == committed_value
                if child_real:
                    child_value = masks[path]
                else:
                    child_value = int(streams.alice.integers(params[level + 1][1]))
                schedule(
                    path + (q,),
                    level + 1,
                    node.unveil_point(q),
                    child_real,
                    child_value,
                )

    schedule((), 0, base_cfg.commit_point, True, bit)

    run = ChainRun(
        bit=bit,
        depth=depth,
        seed=run_seed,
        level_params=params,
        sessions=sessions,
        real_path=tuple(real_path),
        masks=masks,
    )
    # structural causality: every child session starts in its parent's future
    for path, node in sessions.items():
        if path:
            parent = sessions[path[:-1]]
            rel = causal_order(parent.commit_point, node.commit_point)
            if not rel.is_future:
                raise DimensionError(
                    f"chain scheduling produced an acausal session at {path}"
                )
    return run


@dataclass(frozen=True)
class LevelOutcome:
    level: int
    passed: bool
    pass_probability: float


@dataclass(frozen=True)
class ChainUnveilResult:
    recovered_value: int
    verdict: ChainVerdict
    failing_level: int  # -1 when everything verified
    outcomes: tuple


def unveil_chain(run: ChainRun, declared_path: tuple = None, rng=None) -> ChainUnveilResult:
    """Verify a declared chain path and decode the committed value.

    The final level's return is tested unmasked; each earlier level's return
    is unmasked with the index revealed by the level above and tested against
    the issued state.  Any failure marks the chain cheat-suspected at that
    level.  ``declared_path`` defaults to the honest real path; tests decode
    counterfactual paths by overriding it.
    """
    path = tuple(declared_path) if declared_path is not None else run.real_path
    if len(path) != run.depth + 1:
        raise DimensionError(
            f"declared path length {len(path)} != levels {run.depth + 1}"
        )
    rng = np.random.default_rng(rng) if rng is not None else rng_streams(run.seed).harness
    outcomes = []
    failing = -1
    # walk top-down: the final level's declared point reveals each mask below
    for level in range(run.depth, -1, -1):
        prefix = path[:level]
        node = run.sessions[prefix]
        returned = run.returned_state(prefix, path[level])
        if level < run.depth:
            mask_index = path[level + 1]  # committed at the level above
            returned = weyl_apply_inverse(node.d, mask_index, returned)
        expected = run.issued_state(prefix).vector
        p = float(abs(np.vdot(expected, returned)) ** 2)
        passed = bool(rng.random() < p)
        outcomes.append(LevelOutcome(level=level, passed=passed, pass_probability=p))
        if not passed and failing == -1:
            failing = level
    outcomes = tuple(sorted(outcomes, key=lambda o: o.level))
    verdict = ChainVerdict.OK if failing == -1 else ChainVerdict.CHEAT_SUSPECTED
    return ChainUnveilResult(
        recovered_value=path[0],
        verdict=verdict,
        failing_level=failing,
        outcomes=outcomes,
    )


# ---------------------------------------------------------------------------
# Redundant (dual) encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualRun:
    cfg: SessionConfig
    bit: int
    cheat: str  # "none" | "both-on-zero" | "no-opposite"
    seed: int
    states: tuple  # the two issued states (recipient-private)
    line_contents: tuple  # per line: tuple of labels physically present


def dual_commit(bit: int, cfg: SessionConfig, rng=None, seed: int = None,
                cheat: str = "none") -> DualRun:
    """Issue two independent random states at P and route them with opposite
    conventions: label 0 travels the bit's ray, label 1 the other one.

    ``cheat="both-on-zero"`` models the temporary cheat (both labels down ray
    0, the committed value left open); ``cheat="no-opposite"`` unveils one
    point and withholds the required opposite-line return.
    """
    if cfg.m != 2:
        raise DimensionError(f"dual encoding needs the two-ray geometry, got m={cfg.m}")
    if cheat not in ("none", "both-on-zero", "no-opposite"):
        raise DimensionError(f"unknown cheat mode {cheat!r}")
    if not 0 <= bit < 2:
        raise DimensionError(f"bit must be 0 or 1, got {bit}")
    run_seed = cfg.seed if seed is None else seed
    streams = rng if isinstance(rng, RngStreams) else rng_streams(run_seed)
    rho0 = haar_random_state(cfg.d, streams.bob)
    rho1 = haar_random_state(cfg.d, streams.bob)
    if cheat == "both-on-zero":
        contents = ((0, 1), ())
    else:
        line_of = {0: bit, 1: 1 - bit}  # label -> line
        contents = tuple(
            tuple(sorted(lbl for lbl, ln in line_of.items() if ln == line))
            for line in (0, 1)
        )
    return DualRun(
        cfg=cfg, bit=bit, cheat=cheat, seed=run_seed, states=(rho0, rho1),
        line_contents=contents,
    )


@dataclass(frozen=True)
class DualResult:
    unveil_point: int
    declared_bit: int
    provisional_pass: bool
    opposite_provided: bool
    opposite_pass: bool
    final: DualFinal
    final_event: Event

    @property
    def detected(self) -> bool:
        return self.final is DualFinal.CHEAT_SUSPECTED


def dual_unveil(run: DualRun, point_choice: int, rng=None) -> DualResult:
    """Unveil at either point regardless of the committed bit; the recipient
    issues a provisional verdict there and a final one where the causal
    futures of both points meet."""
    if point_choice not in (0, 1):
        raise DimensionError(f"point choice must be 0 or 1, got {point_choice}")
    cfg = run.cfg
    rng = np.random.default_rng(rng) if rng is not None else rng_streams(run.seed).harness
    d = cfg.d
    line = point_choice
    opposite = 1 - point_choice

    if run.cheat == "both-on-zero":
        # everything sits on line 0; she returns the label that matches her
        # (late) choice and can only guess on the other line
        declared_bit = run.bit
        label = 0 if declared_bit == point_choice else 1
        have_here = line == 0
        returned_here = run.states[label].vector if have_here else _dummy(run, line, rng)
        opposite_label = 1 - label
        returned_opposite = (
            run.states[opposite_label].vector if opposite == 0 else _dummy(run, opposite, rng)
        )
        provide_opposite = True
    else:
        label = run.line_contents[line][0]
        declared_bit = line if label == 0 else 1 - line
        returned_here = run.states[label].vector
        opposite_label = run.line_contents[opposite][0]
        returned_opposite = run.states[opposite_label].vector
        provide_opposite = run.cheat != "no-opposite"

    expected_here = run.states[label].vector
    p_here = float(abs(np.vdot(expected_here, returned_here)) ** 2)
    provisional = bool(rng.random() < p_here)

    final_event = causal_future_apex(
        [cfg.unveil_points[0], cfg.unveil_points[1]],
        spatial_hint=(cfg.commit_point.x, cfg.commit_point.y, cfg.commit_point.z),
    )
    if not provide_opposite:
        return DualResult(
            unveil_point=point_choice,
            declared_bit=declared_bit,
            provisional_pass=provisional,
            opposite_provided=False,
            opposite_pass=False,
            final=DualFinal.INCOMPLETE,
            final_event=final_event,
        )
    expected_opposite = run.states[1 - label].vector
    p_opp = float(abs(np.vdot(expected_opposite, returned_opposite)) ** 2)
    opposite_pass = bool(rng.random() < p_opp)
    final = DualFinal.CONFIRMED if (provisional and opposite_pass) else DualFinal.CHEAT_SUSPECTED
    return DualResult(
        unveil_point=point_choice,
        declared_bit=declared_bit,
        provisional_pass=provisional,
        opposite_provided=True,
        opposite_pass=opposite_pass,
        final=final,
        final_event=final_event,
    )


def _dummy(run: DualRun, line: int, rng) -> np.ndarray:
    return haar_random_state(run.cfg.d, rng).vector
