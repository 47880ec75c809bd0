"""Commitment session state machine.

A session is a deterministic discrete-event run over a validated geometry:
the recipient (Bob) hands a private random qudit to the committer (Alice) at
the agreed point P, Alice's strategy routes subsystems along the light rays,
unveilings happen at the per-value points Q_i, and Bob verifies returned
states at his receipt points Q'_i.  Every transfer is causality-checked; a
strategy that attempts an acausal move aborts the session with a violation
verdict rather than silently succeeding.

Randomness is split into named sub-streams (bob, alice, channel, harness) so
hiding tests can fix Bob's draws while varying Alice's choice.
"""

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .qudit import PureState, haar_random_state
from .spacetime import (
    CausalRelation,
    ConfigError,
    DirectionSet,
    Event,
    causal_order,
    committed_region_excludes,
    point_on_ray,
)


class Verdict(Enum):
    PASS = "pass"
    FAIL = "fail"
    NO_SHOW = "no-show"


class SessionStatus(Enum):
    COMPLETED = "completed"
    ABORTED_CAUSALITY = "aborted-causality"


class TransportMode(Enum):
    SECURED_CHANNEL = "secured-channel"
    TELEPORT = "teleport"


ACTOR_ORDER = {"bob": 0, "alice": 1, "channel": 2, "harness": 3}


class CausalityViolation(RuntimeError):
    """A strategy tried to move information outside the light cone."""


# ---------------------------------------------------------------------------
# Session configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SessionConfig:
    d: int
    commit_point: Event
    directions: DirectionSet
    unveil_points: tuple  # Q_i, one per direction
    receipt_points: tuple  # Q'_i, causally after each Q_i
    mode: str = "ideal"  # ideal: Q_i exactly on the ray; non-ideal: timelike
    transport: TransportMode = TransportMode.SECURED_CHANNEL
    handoff_delay: int = 0
    seed: int = 0

    @property
    def m(self) -> int:
        return len(self.directions)


def _on_ray_parameter(p: Event, q: Event, direction):
    """Ray parameter t with q = p + t*(norm, vector), or None if off-ray."""
    dt = q.t - p.t
    if dt <= 0 or dt % direction.norm != 0:
        return None
    t = dt // direction.norm
    vx, vy, vz = direction.vector
    if (q.x - p.x, q.y - p.y, q.z - p.z) != (t * vx, t * vy, t * vz):
        return None
    return t


def _spatial_multiple(p: Event, q: Event, direction):
    """Integer k >= 0 with spatial(q - p) = k * vector, or None."""
    vx, vy, vz = direction.vector
    dx, dy, dz = q.x - p.x, q.y - p.y, q.z - p.z
    for comp, v in ((dx, vx), (dy, vy), (dz, vz)):
        if v == 0:
            if comp != 0:
                return None
        else:
            if comp % v != 0 or comp // v < 0:
                return None
    ks = {comp // v for comp, v in ((dx, vx), (dy, vy), (dz, vz)) if v != 0}
    if len(ks) != 1:
        return None
    return ks.pop()


def validate_config(cfg: SessionConfig) -> list:
    """All geometric violations found, not just the first."""
    errors = []
    m = cfg.m
    if cfg.d < 2:
        errors.append(f"qudit dimension must be >= 2, got {cfg.d}")
    if m < 2:
        errors.append(f"need at least 2 directions, got {m}")
    if len(cfg.unveil_points) != m:
        errors.append(f"{len(cfg.unveil_points)} unveil points for {m} directions")
    if len(cfg.receipt_points) != m:
        errors.append(f"{len(cfg.receipt_points)} receipt points for {m} directions")
    if cfg.handoff_delay < 0:
        errors.append(f"handoff delay must be >= 0, got {cfg.handoff_delay}")
    if cfg.mode not in ("ideal", "non-ideal"):
        errors.append(f"unknown mode {cfg.mode!r}")
    if cfg.mode == "ideal" and cfg.handoff_delay != 0:
        errors.append("ideal mode requires zero handoff delay")

    n = min(m, len(cfg.unveil_points), len(cfg.receipt_points))
    for i in range(n):
        q = cfg.unveil_points[i]
        direction = cfg.directions[i]
        if cfg.mode == "ideal":
            if _on_ray_parameter(cfg.commit_point, q, direction) is None:
                errors.append(
                    f"unveil point {i} at {q.coords} is not on the light ray of "
                    f"direction {direction.vector}"
                )
        else:
            rel = causal_order(cfg.commit_point, q)
            k = _spatial_multiple(cfg.commit_point, q, direction)
            if rel is not CausalRelation.TIMELIKE_FUTURE or k is None:
                errors.append(
                    f"non-ideal unveil point {i} at {q.coords} is not timelike-future "
                    f"of the commit point along direction {direction.vector}"
                )
            elif q.t - cfg.commit_point.t < k * direction.norm + cfg.handoff_delay:
                errors.append(
                    f"unveil point {i} at {q.coords} is unreachable with handoff "
                    f"delay {cfg.handoff_delay}"
                )
    for i in range(n):
        rel = causal_order(cfg.unveil_points[i], cfg.receipt_points[i])
        if not rel.is_future:
            errors.append(
                f"receipt point {i} at {cfg.receipt_points[i].coords} is not in the "
                f"causal future of its unveil point"
            )
    for i in range(n):
        for j in range(i + 1, n):
            rel = causal_order(cfg.unveil_points[i], cfg.unveil_points[j])
            if rel is not CausalRelation.SPACELIKE:
                errors.append(
                    f"unveil points {i} and {j} are {rel.name}, not SPACELIKE"
                )
    return errors


def ensure_valid(cfg: SessionConfig) -> SessionConfig:
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg


def ideal_1d_config(d: int, ray_length: int = 5, receipt_lag: int = 1, seed: int = 0,
                    transport: TransportMode = TransportMode.SECURED_CHANNEL,
                    m: int = 2, mode_dirs: str = "planar") -> SessionConfig:
    """The standard geometry: P at the origin, Q_i on the rays, Q'_i one
    (or receipt_lag) ticks further out along the same rays."""
    from .spacetime import generate_directions

    dirs = generate_directions(m, mode_dirs)
    p = Event(0, 0, 0, 0)
    unveil = tuple(point_on_ray(p, v, ray_length) for v in dirs)
    receipt = tuple(point_on_ray(p, v, ray_length + receipt_lag) for v in dirs)
    return ensure_valid(
        SessionConfig(
            d=d,
            commit_point=p,
            directions=dirs,
            unveil_points=unveil,
            receipt_points=receipt,
            transport=transport,
            seed=seed,
        )
    )


# ---------------------------------------------------------------------------
# Randomness streams
# ---------------------------------------------------------------------------

_STREAMS = ("bob", "alice", "channel", "harness")


@dataclass(frozen=True)
class RngStreams:
    bob: np.random.Generator
    alice: np.random.Generator
    channel: np.random.Generator
    harness: np.random.Generator


def rng_streams(seed) -> RngStreams:
    """Independent named generators derived from one session seed.

    Accepts an int or a pre-spawned SeedSequence (per-trial harnesses hand
    those out)."""
    if isinstance(seed, np.random.SeedSequence):
        children = seed.spawn(len(_STREAMS))
        gens = {name: np.random.default_rng(children[k]) for k, name in enumerate(_STREAMS)}
    else:
        gens = {
            name: np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
            for k, name in enumerate(_STREAMS)
        }
    return RngStreams(**gens)


# ---------------------------------------------------------------------------
# Transcript
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Record:
    actor: str
    event: Event
    action: str
    payload: dict
    visibility: str  # "public" | "bob" | "alice"
    seq: int

    def sort_key(self):
        return (self.event.t, ACTOR_ORDER.get(self.actor, 9), self.seq)

    def to_json(self) -> dict:
        return {
            "actor": self.actor,
            "event": self.event.to_json(),
            "action": self.action,
            "payload": self.payload,
            "visibility": self.visibility,
        }


@dataclass(frozen=True)
class RegionSummary:
    """Where the commitment is guaranteed: outside every receipt point's past cone."""

    receipt_points: tuple
    samples: tuple  # (Event, bool) pairs

    def includes(self, p: Event) -> bool:
        return committed_region_excludes(p, self.receipt_points)

    def to_json(self) -> dict:
        return {
            "receipt_points": [q.to_json() for q in self.receipt_points],
            "samples": [[e.to_json(), ok] for e, ok in self.samples],
        }


@dataclass
class Transcript:
    config: SessionConfig
    records: list
    verdicts: dict  # point index -> Verdict
    status: SessionStatus
    region: RegionSummary = None
    unveiled_at: tuple = ()

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "records": [r.to_json() for r in self.records],
            "verdicts": {str(i): v.value for i, v in sorted(self.verdicts.items())},
            "region": self.region.to_json() if self.region else None,
            "unveiled_at": list(self.unveiled_at),
        }


class TranscriptBuilder:
    """Accumulates causality-checked records; shared by all session engines."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self._records = []
        self._seq = 0

    def add(self, actor: str, event: Event, action: str, payload: dict = None,
            visibility: str = "public") -> Record:
        rec = Record(actor, event, action, dict(payload or {}), visibility, self._seq)
        self._seq += 1
        self._records.append(rec)
        return rec

    def add_transfer(self, actor: str, send: Event, recv: Event, action: str,
                     payload: dict = None, visibility: str = "public"):
        rel = causal_order(send, recv)
        if not (rel.is_future or rel is CausalRelation.COINCIDENT):
            raise CausalityViolation(
                f"{action}: receive event {recv.coords} is not in the causal future "
                f"of send event {send.coords} ({rel.name})"
            )
        self.add(actor, send, action + "-send", payload, visibility)
        return self.add(actor, recv, action + "-recv", payload, visibility)

    def sorted_records(self) -> list:
        return sorted(self._records, key=Record.sort_key)


# ---------------------------------------------------------------------------
# Strategy interface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BobRecord:
    """Bob's private preparation record; never handed to strategy code."""

    state: PureState
    issue_event: Event
    receipt_points: tuple


@dataclass(frozen=True)
class CommitView:
    """Everything a commit-phase channel may see: the quantum payload and the
    public geometry.  Deliberately excludes Bob's record."""

    payload: PureState
    cfg: SessionConfig
    rng: np.random.Generator


@dataclass(frozen=True)
class CommitPlan:
    """Output of the commit phase.

    ``present_slots`` lists the direction indices that physically carry a
    subsystem; ``joint`` is the pure state over those slots (each dimension d,
    in listed order) tensored with an ancilla of dimension ``n_anc`` that
    stays at the commitment point.
    """

    present_slots: tuple
    joint: np.ndarray
    n_anc: int = 1

    def slot_position(self, i: int) -> int:
        return self.present_slots.index(i)


@dataclass(frozen=True)
class UnveilView:
    point_index: int
    point: Event
    has_payload: bool
    visible_records: tuple  # records whose event is in the past cone of the point
    rng: np.random.Generator
    cfg: SessionConfig = None  # the pre-agreed public geometry


@dataclass(frozen=True)
class UnveilAction:
    unveil: bool
    source_event: Event = None  # where the returned subsystem comes from


@dataclass(frozen=True)
class AliceStrategy:
    """A named committer behavior: a commit-phase channel plus a per-point
    unveil policy.  ``isometry`` (when not None) exposes the commit channel's
    dilation for trace-preservation checks."""

    name: str
    commit: object  # CommitView -> CommitPlan
    unveil: object  # UnveilView -> UnveilAction
    isometry: object = None  # () -> np.ndarray, optional


def honest_strategy(bit: int) -> AliceStrategy:
    """Route the received qudit along the committed value's ray, unveil there."""

    def commit(view: CommitView) -> CommitPlan:
        if not 0 <= bit < view.cfg.m:
            raise ConfigError(f"committed value {bit} out of range for m={view.cfg.m}")
        return CommitPlan(present_slots=(bit,), joint=view.payload.vector.copy(), n_anc=1)

    def unveil(view: UnveilView) -> UnveilAction:
        return UnveilAction(unveil=view.has_payload)

    return AliceStrategy(name=f"honest-{bit}", commit=commit, unveil=unveil)


# ---------------------------------------------------------------------------
# Joint-state measurement helpers
# ---------------------------------------------------------------------------


def _slot_overlap(joint: np.ndarray, dims: tuple, pos: int, psi: np.ndarray):
    t = joint.reshape(dims)
    amp = np.tensordot(psi.conj(), t, axes=([0], [pos]))
    return amp  # shape dims without pos


def measure_slot(joint: np.ndarray, dims: tuple, pos: int, psi: np.ndarray, u: float):
    """Projective test of subsystem ``pos`` against |psi>, collapsing the rest.

    Returns (passed, collapsed_joint).  ``u`` is the uniform draw deciding the
    outcome, so the caller controls whose randomness is consumed.
    """
    t = joint.reshape(dims)
    amp = _slot_overlap(joint, dims, pos, psi)
    norm2 = float(np.vdot(joint, joint).real)
    p = float(np.vdot(amp, amp).real) / norm2
    hit = np.tensordot(psi, amp, axes=0)  # psi at axis 0, rest after
    hit = np.moveaxis(hit, 0, pos)
    if u < p:
        out = hit
    else:
        out = t - hit
    out = out.ravel()
    return u < p, out / np.linalg.norm(out)


def weyl_on_slot(joint: np.ndarray, dims: tuple, pos: int, d: int, j: int,
                 inverse: bool = False) -> np.ndarray:
    from .qudit import weyl_apply, weyl_apply_inverse

    t = np.moveaxis(joint.reshape(dims), pos, 0)
    flat = t.reshape(d, -1)
    fn = weyl_apply_inverse if inverse else weyl_apply
    out = np.empty_like(flat)
    for col in range(flat.shape[1]):
        out[:, col] = fn(d, j, flat[:, col])
    return np.moveaxis(out.reshape(t.shape), 0, pos).ravel()


# ---------------------------------------------------------------------------
# Session execution
# ---------------------------------------------------------------------------


def committed_region_summary(cfg: SessionConfig) -> RegionSummary:
    """Classify representative sample points against the receipt points."""
    p = cfg.commit_point
    samples = [p]
    samples.extend(cfg.unveil_points)
    samples.extend(cfg.receipt_points)
    # probes laterally displaced from P: spacelike from everything nearby
    span = max(q.t - p.t for q in cfg.receipt_points) + 1
    samples.append(p.translate(0, 0, 3 * span, 0))
    samples.append(p.translate(2 * span, 0, 0, 0))
    classified = tuple(
        (e, committed_region_excludes(e, cfg.receipt_points)) for e in samples
    )
    return RegionSummary(receipt_points=tuple(cfg.receipt_points), samples=classified)


def run_session(cfg: SessionConfig, alice: AliceStrategy, unveil_choice=None,
                rng=None, seed: int = None) -> Transcript:
    """Execute one commitment session.

    ``unveil_choice``: optional override, called with the point index; when
    given it replaces the strategy's per-point unveil policy (the evaluation
    harness uses it to force unveiling everywhere).  ``seed`` overrides the
    config seed; ``rng`` may be a pre-built RngStreams.
    """
    ensure_valid(cfg)
    streams = rng if isinstance(rng, RngStreams) else rng_streams(
        cfg.seed if seed is None else seed
    )
    builder = TranscriptBuilder(cfg)
    d, m = cfg.d, cfg.m
    p0 = cfg.commit_point

    # Bob prepares privately and hands the qudit over at P.
    psi = haar_random_state(d, streams.bob)
    bob_record = BobRecord(state=psi, issue_event=p0, receipt_points=cfg.receipt_points)
    builder.add("bob", p0, "prepare", {"state": psi.to_json()}, visibility="bob")
    builder.add("bob", p0, "handoff", {}, visibility="public")

    resources = {}
    if cfg.transport is TransportMode.TELEPORT:
        # Resources are predistributed to every unveiling point, so the setup
        # footprint is independent of the committed value.
        from .qudit import TeleportResource

        for i in range(m):
            resources[i] = TeleportResource(d, source=p0, target=cfg.unveil_points[i])
            builder.add(
                "alice",
                p0,
                "resource-predistribute",
                {"target": cfg.unveil_points[i].to_json()},
                visibility="alice",
            )

    try:
        plan = alice.commit(CommitView(payload=psi, cfg=cfg, rng=streams.alice))
        builder.add("alice", p0, "commit", {}, visibility="alice")

        dims = (d,) * len(plan.present_slots) + (plan.n_anc,)
        joint = np.asarray(plan.joint, dtype=np.complex128).ravel()
        if joint.shape != (int(np.prod(dims)),):
            raise ConfigError(
                f"strategy {alice.name}: joint state has dimension {joint.shape[0]}, "
                f"expected {int(np.prod(dims))}"
            )

        # Transport every present subsystem along its ray.
        depart = p0.translate(cfg.handoff_delay, 0)
        for i in plan.present_slots:
            q = cfg.unveil_points[i]
            if cfg.transport is TransportMode.SECURED_CHANNEL:
                builder.add_transfer(
                    "alice", depart, q, "transport", {"ray": i}, visibility="alice"
                )
            else:
                # Teleporting any subsystem through the maximally entangled
                # resource yields a uniform outcome j and applies W_j to the
                # slot; the agent at Q_i undoes it on receipt.  The broadcast
                # carries only j (no direction), so it leaks nothing.
                assert resources[i].d == d
                j = int(streams.alice.integers(d * d))
                pos = plan.slot_position(i)
                joint = weyl_on_slot(joint, dims, pos, d, j)
                builder.add("alice", p0, "teleport-broadcast", {"j": j}, visibility="public")
                joint = weyl_on_slot(joint, dims, pos, d, j, inverse=True)
                builder.add("alice", q, "teleport-correct", {}, visibility="alice")

        # Unveil decisions in deterministic point order, then verification.
        verdicts = {}
        unveiled = []
        order = sorted(range(m), key=lambda i: (cfg.unveil_points[i].t, i))
        for i in order:
            q = cfg.unveil_points[i]
            has_payload = i in plan.present_slots
            if unveil_choice is not None:
                decision = UnveilAction(unveil=bool(unveil_choice(i)))
            else:
                visible = tuple(
                    r
                    for r in builder.sorted_records()
                    if causal_order(r.event, q).is_future
                    or causal_order(r.event, q) is CausalRelation.COINCIDENT
                )
                decision = alice.unveil(
                    UnveilView(
                        point_index=i,
                        point=q,
                        has_payload=has_payload,
                        visible_records=visible,
                        rng=streams.alice,
                        cfg=cfg,
                    )
                )
            if not decision.unveil:
                verdicts[i] = Verdict.NO_SHOW
                continue
            source = decision.source_event or q
            rel = causal_order(source, q)
            if not (rel.is_future or rel is CausalRelation.COINCIDENT):
                raise CausalityViolation(
                    f"strategy {alice.name} unveils at {q.coords} using a subsystem "
                    f"from {source.coords}, which is {rel.name} of the unveiling point"
                )
            if not has_payload:
                verdicts[i] = Verdict.NO_SHOW
                continue
            unveiled.append(i)
            builder.add("alice", q, "unveil", {"point": i}, visibility="public")
            builder.add_transfer(
                "alice", q, cfg.receipt_points[i], "return", {"point": i},
                visibility="public",
            )
            u = float(streams.bob.random())
            passed, joint = measure_slot(
                joint, dims, plan.slot_position(i), bob_record.state.vector, u
            )
            verdicts[i] = Verdict.PASS if passed else Verdict.FAIL
            builder.add(
                "bob",
                cfg.receipt_points[i],
                "verify",
                {"point": i, "outcome": verdicts[i].value},
                visibility="bob",
            )
        status = SessionStatus.COMPLETED
    except CausalityViolation as exc:
        builder.add("harness", p0, "abort", {"reason": str(exc)}, visibility="public")
        return Transcript(
            config=cfg,
            records=builder.sorted_records(),
            verdicts={},
            status=SessionStatus.ABORTED_CAUSALITY,
            region=committed_region_summary(cfg),
        )

    return Transcript(
        config=cfg,
        records=builder.sorted_records(),
        verdicts=verdicts,
        status=status,
        region=committed_region_summary(cfg),
        unveiled_at=tuple(unveiled),
    )


def bob_view_before_unveil(transcript: Transcript) -> bytes:
    """Canonical bytes of everything Bob can see strictly before any unveiling.

    For a hiding commitment this projection must be independent of the
    committed value.
    """
    unveil_times = [r.event.t for r in transcript.records if r.action == "unveil"]
    cutoff = min(unveil_times) if unveil_times else None
    rows = []
    for r in transcript.records:
        if r.visibility not in ("public", "bob"):
            continue
        if r.action == "unveil" or (cutoff is not None and r.event.t >= cutoff):
            continue
        rows.append(r.to_json())
    return json.dumps(rows, sort_keys=True, separators=(",", ":")).encode()
