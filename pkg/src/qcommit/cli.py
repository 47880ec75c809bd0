"""Scenario runner and experiment harness.

Scenarios are declarative TOML files with typed blocks; every run is
deterministic given the scenario seed.  Subcommands: run, sweep,
verify-bounds, chain-demo.  Exit codes: 0 ok, 2 config error, 3 bound
violation, 4 causality violation.
"""

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - environment-dependent import
    import tomli as tomllib

from . import adversary, chaining, cloning, robustness
from . import protocol as proto
from .qudit import DimensionError
from .spacetime import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BOUND = 3
EXIT_CAUSALITY = 4


class ScenarioError(ValueError):
    """Malformed scenario file (unknown fields, bad values)."""


# ---------------------------------------------------------------------------
# Scenario schema
# ---------------------------------------------------------------------------

_BLOCK_FIELDS = {
    "quantum": {"d", "m"},
    "geometry": {
        "ray_length",
        "receipt_lag",
        "handoff_delay",
        "transport",
        "direction_mode",
        "timelike_slack",
    },
    "adversary": {"strategy", "bit", "p0", "p1", "basis_policy", "cheat"},
    "noise": {"loss", "depolarizing", "detector_efficiency"},
    "redundancy": {"copies", "threshold"},
    "chain": {"depth"},
}
_TOP_FIELDS = {"name", "mode", "trials", "seed", "sweep"} | set(_BLOCK_FIELDS)
_MODES = ("ideal", "non-ideal", "redundant", "chained", "dual")


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: str
    trials: int = 1000
    seed: int = 0
    quantum: dict = field(default_factory=lambda: {"d": 2, "m": 2})
    geometry: dict = field(default_factory=dict)
    adversary: dict = field(default_factory=lambda: {"strategy": "honest"})
    noise: dict = field(default_factory=dict)
    redundancy: dict = field(default_factory=dict)
    chain: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v not in ({}, None)}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        unknown = set(data) - _TOP_FIELDS
        if unknown:
            raise ScenarioError(f"unknown scenario field(s): {sorted(unknown)}")
        for block, allowed in _BLOCK_FIELDS.items():
            sub = data.get(block, {})
            if not isinstance(sub, dict):
                raise ScenarioError(f"field {block!r} must be a table")
            bad = set(sub) - allowed
            if bad:
                raise ScenarioError(
                    f"unknown field(s) in [{block}]: {sorted(f'{block}.{b}' for b in bad)}"
                )
        if "name" not in data or "mode" not in data:
            raise ScenarioError("scenario requires 'name' and 'mode'")
        if data["mode"] not in _MODES:
            raise ScenarioError(f"mode must be one of {_MODES}, got {data['mode']!r}")
        kwargs = {k: data[k] for k in data}
        return cls(**kwargs)

    def with_override(self, dotted: str, value) -> "Scenario":
        """Replace one (possibly nested) scalar field, e.g. 'quantum.d'."""
        if "." in dotted:
            block, key = dotted.split(".", 1)
            if block not in _BLOCK_FIELDS or key not in _BLOCK_FIELDS[block]:
                raise ScenarioError(f"cannot sweep unknown field {dotted!r}")
            sub = dict(getattr(self, block))
            sub[key] = value
            return replace(self, **{block: sub})
        if dotted not in ("trials", "seed"):
            raise ScenarioError(f"cannot sweep unknown field {dotted!r}")
        return replace(self, **{dotted: value})


def load_scenario(path: str) -> Scenario:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
    try:
        return Scenario.from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Result rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Metric:
    value: float
    sigma3: float = None  # 3-sigma radius for statistical metrics


@dataclass
class ResultRow:
    scenario: str
    params: dict
    metrics: dict  # name -> Metric
    runtime_s: float

    def flat(self, timing: bool = False) -> dict:
        # wall-clock timing is opt-in so default outputs stay byte-identical
        # across reruns with the same scenario and seed
        row = {"scenario": self.scenario}
        row.update(self.params)
        for name, m in self.metrics.items():
            row[name] = m.value
            if m.sigma3 is not None:
                row[f"{name}_3sigma"] = m.sigma3
        if timing:
            row["runtime_s"] = round(self.runtime_s, 3)
        return row


def rows_to_csv(rows, timing: bool = False) -> str:
    flats = [r.flat(timing) for r in rows]
    cols = []
    for f in flats:
        for k in f:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for f in flats:
        writer.writerow(f)
    return buf.getvalue()


def rows_to_json(rows, timing: bool = False) -> str:
    return json.dumps([r.flat(timing) for r in rows], indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Scenario execution
# ---------------------------------------------------------------------------


def _binomial_sigma3(p: float, n: int) -> float:
    return 3.0 * float(np.sqrt(max(p * (1.0 - p), 1e-12) / n))


def build_session_config(sc: Scenario) -> proto.SessionConfig:
    g = sc.geometry
    d = int(sc.quantum.get("d", 2))
    m = int(sc.quantum.get("m", 2))
    ray = int(g.get("ray_length", 5))
    lag = int(g.get("receipt_lag", 1))
    transport = proto.TransportMode(g.get("transport", "secured-channel"))
    dir_mode = g.get("direction_mode", "planar")
    delay = int(g.get("handoff_delay", 0))
    if sc.mode == "non-ideal":
        from .spacetime import Event, generate_directions, point_on_ray

        slack = int(g.get("timelike_slack", 1))
        dirs = generate_directions(m, dir_mode)
        p = Event(0, 0, 0, 0)
        unveil = tuple(
            point_on_ray(p, v, ray).translate(delay + slack, 0) for v in dirs
        )
        receipt = tuple(
            point_on_ray(p, v, ray + lag).translate(delay + slack, 0) for v in dirs
        )
        cfg = proto.SessionConfig(
            d=d,
            commit_point=p,
            directions=dirs,
            unveil_points=unveil,
            receipt_points=receipt,
            mode="non-ideal",
            transport=transport,
            handoff_delay=delay,
            seed=sc.seed,
        )
        return proto.ensure_valid(cfg)
    return proto.ideal_1d_config(
        d=d, ray_length=ray, receipt_lag=lag, seed=sc.seed, transport=transport,
        m=m, mode_dirs=dir_mode,
    )


def _run_point_protocol(sc: Scenario) -> ResultRow:
    cfg = build_session_config(sc)
    strategy_name = sc.adversary.get("strategy", "honest")
    params = {k: v for k, v in sc.adversary.items() if k != "strategy"}
    rng = np.random.default_rng(sc.seed)
    metrics = {}
    if strategy_name == "honest":
        bit = int(params.get("bit", 0))
        passes = 0
        aborted = 0
        root = np.random.SeedSequence(sc.seed).spawn(sc.trials)
        for s in root:
            tr = proto.run_session(cfg, proto.honest_strategy(bit), seed=s)
            if tr.status is proto.SessionStatus.ABORTED_CAUSALITY:
                aborted += 1
                continue
            passes += tr.verdicts.get(bit) is proto.Verdict.PASS
        rate = passes / sc.trials
        metrics["pass_rate"] = Metric(rate, _binomial_sigma3(rate, sc.trials))
        # hiding: paired committed-0/1 runs must give identical pre-unveil views
        n_pairs = min(sc.trials, 300)
        identical = 0
        for k in range(n_pairs):
            t0 = proto.run_session(cfg, proto.honest_strategy(0), seed=sc.seed + 10_000 + k)
            t1 = proto.run_session(cfg, proto.honest_strategy(1), seed=sc.seed + 10_000 + k)
            identical += proto.bob_view_before_unveil(t0) == proto.bob_view_before_unveil(t1)
        metrics["hiding_pairs_identical"] = Metric(identical / n_pairs)
        metrics["aborted"] = Metric(float(aborted))
        archive = proto.run_session(cfg, proto.honest_strategy(bit), seed=sc.seed)
    else:
        strat = adversary.build_strategy(strategy_name, cfg, **params)
        score = adversary.evaluate(strat, cfg, sc.trials, rng)
        if score.aborted:
            metrics["aborted"] = Metric(1.0)
            archive = proto.run_session(
                cfg, adversary.force_unveil_everywhere(strat), seed=sc.seed
            )
            return ResultRow(sc.name, _row_params(sc), metrics, 0.0)
        for i, (p, r) in enumerate(zip(score.p, score.radius3)):
            metrics[f"p{i}"] = Metric(p, r)
        bound = cloning.optimal_fidelity_sum(cfg.d, cfg.m)
        total_sigma = float(np.sqrt(np.sum(np.square(score.radius3))))
        metrics["sum"] = Metric(score.fidelity_sum, total_sigma)
        metrics["bound"] = Metric(bound)
        metrics["gap"] = Metric(bound - score.fidelity_sum)
        metrics["aborted"] = Metric(0.0)
        archive = proto.run_session(
            cfg, adversary.force_unveil_everywhere(strat), seed=sc.seed
        )
    row = ResultRow(sc.name, _row_params(sc), metrics, 0.0)
    row.archive_transcript = archive.to_json()
    return row


def _run_redundant(sc: Scenario) -> ResultRow:
    cfg = build_session_config(replace(sc, mode="ideal"))
    d = cfg.d
    params = robustness.RedundancyParams(
        copies=int(sc.redundancy.get("copies", 10)),
        threshold=int(sc.redundancy.get("threshold", 6)),
        d=d,
    )
    noise = robustness.NoiseModel(
        loss=float(sc.noise.get("loss", 0.0)),
        depolarizing=float(sc.noise.get("depolarizing", 0.0)),
        detector_efficiency=float(sc.noise.get("detector_efficiency", 1.0)),
    )
    bit = int(sc.adversary.get("bit", 0))
    strategy_name = sc.adversary.get("strategy", "honest")
    if strategy_name == "honest":
        strat = proto.honest_strategy(bit)
    else:
        strat = adversary.build_strategy(
            strategy_name, cfg, **{k: v for k, v in sc.adversary.items() if k != "strategy"}
        )
    accept = 0
    root = np.random.SeedSequence(sc.seed).spawn(sc.trials)
    for s in root:
        res = robustness.run_redundant_session(
            cfg, params, noise, strat, seed=s, keep_records=False
        )
        accept += res.accept[bit]
    rate = accept / sc.trials
    metrics = {
        "accept_rate": Metric(rate, _binomial_sigma3(rate, sc.trials)),
        "closed_form": Metric(robustness.honest_accept_probability(params, noise)),
        "cheat_epsilon": Metric(
            robustness.cheat_epsilon(d, params.copies, params.threshold)
        ),
        "copies": Metric(float(params.copies)),
        "threshold": Metric(float(params.threshold)),
    }
    return ResultRow(sc.name, _row_params(sc), metrics, 0.0)


def _run_chained(sc: Scenario) -> ResultRow:
    base = build_session_config(replace(sc, mode="ideal"))
    depth = int(sc.chain.get("depth", 1))
    bit_cfg = sc.adversary.get("bit")
    recovered = 0
    timelike = 0
    for k in range(sc.trials):
        bit = int(bit_cfg) if bit_cfg is not None else k % base.m
        run = chaining.chain_commit(bit, depth, base, seed=sc.seed + k)
        res = chaining.unveil_chain(run)
        recovered += res.verdict is chaining.ChainVerdict.OK and res.recovered_value == bit
        from .spacetime import CausalRelation, causal_order

        rel = causal_order(base.commit_point, run.final_unveil_point())
        timelike += rel is CausalRelation.TIMELIKE_FUTURE
    rate = recovered / sc.trials
    metrics = {
        "recovery_rate": Metric(rate, _binomial_sigma3(rate, sc.trials)),
        "depth": Metric(float(depth)),
        "final_timelike_fraction": Metric(timelike / sc.trials),
    }
    return ResultRow(sc.name, _row_params(sc), metrics, 0.0)


def _run_dual(sc: Scenario) -> ResultRow:
    cfg = build_session_config(replace(sc, mode="ideal"))
    cheat = sc.adversary.get("cheat", "none")
    bit = int(sc.adversary.get("bit", 0))
    provisional = 0
    confirmed = 0
    detected = 0
    incomplete = 0
    for k in range(sc.trials):
        run = chaining.dual_commit(bit, cfg, seed=sc.seed + k, cheat=cheat)
        res = chaining.dual_unveil(run, point_choice=k % 2 if cheat == "none" else 0)
        provisional += res.provisional_pass
        confirmed += res.final is chaining.DualFinal.CONFIRMED
        detected += res.final is chaining.DualFinal.CHEAT_SUSPECTED
        incomplete += res.final is chaining.DualFinal.INCOMPLETE
    det_rate = detected / sc.trials
    metrics = {
        "provisional_pass_rate": Metric(
            provisional / sc.trials, _binomial_sigma3(provisional / sc.trials, sc.trials)
        ),
        "confirm_rate": Metric(confirmed / sc.trials),
        "detection_rate": Metric(det_rate, _binomial_sigma3(det_rate, sc.trials)),
        "incomplete_rate": Metric(incomplete / sc.trials),
        "expected_detection": Metric(1.0 - 1.0 / cfg.d if cheat == "both-on-zero" else 0.0),
    }
    return ResultRow(sc.name, _row_params(sc), metrics, 0.0)


def _row_params(sc: Scenario) -> dict:
    out = {
        "mode": sc.mode,
        "d": sc.quantum.get("d", 2),
        "m": sc.quantum.get("m", 2),
        "trials": sc.trials,
        "seed": sc.seed,
        "strategy": sc.adversary.get("strategy", "honest"),
    }
    return out


def run_scenario(sc: Scenario) -> ResultRow:
    start = time.perf_counter()
    if sc.mode in ("ideal", "non-ideal"):
        row = _run_point_protocol(sc)
    elif sc.mode == "redundant":
        row = _run_redundant(sc)
    elif sc.mode == "chained":
        row = _run_chained(sc)
    elif sc.mode == "dual":
        row = _run_dual(sc)
    else:  # pragma: no cover - schema validation rejects earlier
        raise ScenarioError(f"unhandled mode {sc.mode}")
    row.runtime_s = time.perf_counter() - start
    return row


def _exit_code_for(rows) -> int:
    for row in rows:
        if row.metrics.get("aborted", Metric(0.0)).value > 0:
            return EXIT_CAUSALITY
    for row in rows:
        m = row.metrics
        if "sum" in m and "bound" in m:
            slack = max(m["sum"].sigma3 or 0.0, 1e-6)
            if m["sum"].value > m["bound"].value + slack:
                return EXIT_BOUND
    return EXIT_OK


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


def sweep_grid(sc: Scenario) -> list:
    """Expand the [sweep] block into per-point scenarios, ordered by grid index."""
    if not sc.sweep:
        raise ScenarioError("sweep requires a non-empty [sweep] block")
    fields = sorted(sc.sweep)
    for f in fields:
        if not isinstance(sc.sweep[f], list) or not sc.sweep[f]:
            raise ScenarioError(f"sweep field {f!r} must map to a non-empty list")
    points = [replace(sc, sweep={})]
    for f in fields:
        points = [p.with_override(f, v) for p in points for v in sc.sweep[f]]
    out = []
    for idx, p in enumerate(points):
        out.append(replace(p, name=f"{sc.name}[{idx}]"))
    return out


def _sweep_worker(sc: Scenario) -> ResultRow:
    return run_scenario(sc)


def run_sweep(sc: Scenario, jobs: int = 1) -> list:
    points = sweep_grid(sc)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, points))
    else:
        rows = [run_scenario(p) for p in points]
    return rows


# ---------------------------------------------------------------------------
# verify-bounds
# ---------------------------------------------------------------------------


def verify_bounds(d_max: int, m_max: int, search_trials: int = 100) -> tuple:
    """Constructive-vs-closed-form table; returns (rows, all_ok)."""
    if d_max < 2 or m_max < 2:
        raise ScenarioError(f"need d_max >= 2 and m_max >= 2, got {d_max}, {m_max}")
    rows = []
    ok = True
    for d in range(2, d_max + 1):
        for m in range(2, m_max + 1):
            if d**m > 4096:
                continue
            try:
                rep = cloning.bound_sum_fidelity(d, m)
                passed = abs(rep.gap) <= 1e-9
            except cloning.BoundViolation:
                passed = False
                rep = None
            ok = ok and passed
            rows.append(
                {
                    "check": "construction",
                    "d": d,
                    "m": m,
                    "bound": rep.bound if rep else float("nan"),
                    "achieved": rep.achieved if rep else float("nan"),
                    "gap": rep.gap if rep else float("nan"),
                    "pass": passed,
                }
            )
    for d in (2, 3, 4):
        if d > d_max:
            continue
        best, a, b = cloning.lagrange_sweep(d)
        passed = abs(best - cloning.optimal_fidelity_sum(d, 2)) <= 1e-9 and abs(a - b) < 1e-6
        ok = ok and passed
        rows.append(
            {
                "check": "lagrange",
                "d": d,
                "m": 2,
                "bound": cloning.optimal_fidelity_sum(d, 2),
                "achieved": best,
                "gap": cloning.optimal_fidelity_sum(d, 2) - best,
                "pass": passed,
            }
        )
    if search_trials > 0:
        for d in (2, 3):
            if d > d_max:
                continue
            res = cloning.randomized_attack_search(
                d, 2, search_trials, np.random.default_rng(0)
            )
            passed = res.best_sum <= res.bound + 1e-6
            ok = ok and passed
            rows.append(
                {
                    "check": "search",
                    "d": d,
                    "m": 2,
                    "bound": res.bound,
                    "achieved": res.best_sum,
                    "gap": res.margin,
                    "pass": passed,
                }
            )
    return rows, ok


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _write_output(text: str, out: str):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _apply_cli_overrides(sc: Scenario, args) -> Scenario:
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    if args.trials is not None:
        sc = replace(sc, trials=args.trials)
    return sc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcommit",
        description="relativistic quantum bit-commitment simulator and bound verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--archive", default=None, help="write the transcript JSON here")
    p_run.add_argument("--timing", action="store_true", help="include wall-clock runtimes")

    p_sweep = sub.add_parser("sweep", help="run the scenario's [sweep] grid")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--timing", action="store_true", help="include wall-clock runtimes")

    p_verify = sub.add_parser("verify-bounds", help="constructive vs closed-form bounds")
    p_verify.add_argument("--d-max", type=int, default=8)
    p_verify.add_argument("--m-max", type=int, default=3)
    p_verify.add_argument("--search-trials", type=int, default=100)
    p_verify.add_argument("--out", default=None)
    p_verify.add_argument("--format", choices=("csv", "json"), default="csv")

    p_chain = sub.add_parser("chain-demo", help="one chained commitment, verbose")
    p_chain.add_argument("--depth", type=int, default=2)
    p_chain.add_argument("--bit", type=int, default=0)
    p_chain.add_argument("--seed", type=int, default=0)
    p_chain.add_argument("--d", type=int, default=2)

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            sc = _apply_cli_overrides(load_scenario(args.scenario), args)
            rows = [run_scenario(sc)]
            text = (
                rows_to_csv(rows, args.timing)
                if args.format == "csv"
                else rows_to_json(rows, args.timing)
            )
            _write_output(text, args.out)
            if args.archive:
                archive = getattr(rows[0], "archive_transcript", None)
                with open(args.archive, "w") as fh:
                    json.dump(archive, fh, indent=2, sort_keys=True)
            return _exit_code_for(rows)

        if args.command == "sweep":
            sc = _apply_cli_overrides(load_scenario(args.scenario), args)
            rows = run_sweep(sc, jobs=args.jobs)
            text = (
                rows_to_csv(rows, args.timing)
                if args.format == "csv"
                else rows_to_json(rows, args.timing)
            )
            _write_output(text, args.out)
            return _exit_code_for(rows)

        if args.command == "verify-bounds":
            rows, ok = verify_bounds(args.d_max, args.m_max, args.search_trials)
            if args.format == "csv":
                buf = io.StringIO()
                writer = csv.DictWriter(
                    buf, fieldnames=list(rows[0]), lineterminator="\n"
                )
                writer.writeheader()
                writer.writerows(rows)
                text = buf.getvalue()
            else:
                text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
            _write_output(text, args.out)
            return EXIT_OK if ok else EXIT_BOUND

        if args.command == "chain-demo":
            base = proto.ideal_1d_config(d=args.d, seed=args.seed)
            run = chaining.chain_commit(args.bit, args.depth, base, seed=args.seed)
            res = chaining.unveil_chain(run)
            print(json.dumps(run.to_json(), indent=2, sort_keys=True))
            print(
                f"recovered value: {res.recovered_value}  verdict: {res.verdict.value}"
            )
            return EXIT_OK if res.verdict is chaining.ChainVerdict.OK else EXIT_CAUSALITY
    except (ScenarioError, ConfigError, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except cloning.BoundViolation as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
