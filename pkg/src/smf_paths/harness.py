"""Experiment drivers behind the command-line verbs.

Each ``cmd_*`` takes an ``ExperimentSpec`` and returns plain rows (for CSV)
or a dict (for JSON).  Work fans out over seeds; every result carries its
seed and is sorted before output, so serial and parallel runs agree byte
for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path as FsPath
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy import stats as sps

from smf_paths import __version__
from smf_paths.bridge import BridgeConfig, audit_bridge, partition_vertices, run_bridge
from smf_paths.core import generate_instance, split_seed
from smf_paths.errors import AuditFailure, InvalidArgument, ResourceLimit
from smf_paths.light import (
    INV_E,
    GoodSpec,
    LightSpec,
    block_event_reference,
    domination_trial,
    excursion_frequency,
)
from smf_paths.oracle import ORACLE_MAX_N, build_oracle, exhaustive_light_count, read_L
from smf_paths.overlap import extract_disjoint_good_paths
from smf_paths.probability import (
    TailBoundQuery,
    binomial_sigma,
    dirichlet_bridge_batch,
    exp_tail_lower,
    exp_tail_upper,
    expected_light_count,
)

WORKERS_ENV = "SMF_PATHS_WORKERS"
COMMANDS = ("oracle-sweep", "light-count", "verify-bounds", "bridge-pipeline", "downcross-study")


@dataclass
class ExperimentSpec:
    command: str
    n: int = 12
    eta: float | None = None
    lam: float | None = None
    lambdas: list[float] | None = None
    length: int = 3
    C: float = 1.0
    a_k_C: float = 1.0
    zeta1: float = 0.2
    zeta2: float = 2.0
    nu: int = 2
    delta: float = 0.1
    seeds: list[int] | None = None
    base_seed: int = 0
    seed_count: int = 10
    trials: int = 10_000
    budget: int = 10_000_000
    mode: str = "exhaustive"
    anchors: int | None = None
    per_anchor: int | None = None
    totals: list[int] | None = None  # path lengths L for the downcross study
    blocks: list[int] | None = None
    a_k_Cs: list[float] | None = None
    eta_primes: list[float] | None = None
    slack: float = 0.2
    oracle_max_n: int = 20
    output: str | None = None
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidArgument(f"unknown command {self.command!r}")
        if self.trials < 1:
            raise InvalidArgument("trials must be positive")
        if self.seeds is not None and len(set(self.seeds)) != len(self.seeds):
            raise InvalidArgument("seeds must be unique")
        if self.seed_count < 0 or self.n < 2 or self.budget < 1:
            raise InvalidArgument("seed_count >= 0, n >= 2 and budget >= 1 required")

    def seed_list(self) -> list[int]:
        if self.seeds is not None:
            return list(self.seeds)
        return [split_seed(self.base_seed, i) for i in range(self.seed_count)]

    def worker_count(self) -> int:
        if self.workers is not None:
            return max(1, int(self.workers))
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)


def build_id() -> str:
    here = FsPath(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fan_out(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _spec_record(spec: ExperimentSpec) -> dict:
    """The experiment spec minus fields that cannot change any result (output path, worker count)."""
    record = asdict(spec)
    for key in ("output", "workers"):
        record.pop(key)
    return record


def render_csv(header: Sequence[str], rows: Iterable[Sequence], spec: ExperimentSpec) -> str:
    buf = io.StringIO()
    buf.write(f"# build: {build_id()}\n")
    buf.write(f"# spec: {json.dumps(_spec_record(spec), sort_keys=True)}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def render_json(report: dict, spec: ExperimentSpec) -> str:
    doc = {"build": build_id(), "spec": _spec_record(spec), **report}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj)}")


# ---------------------------------------------------------------- oracle sweep

def _sweep_one(args) -> list[tuple]:
    n, seed, lambdas = args
    table = build_oracle(generate_instance(n, seed=seed))
    rows = []
    for lam in lambdas:
        L = read_L(table, lam)
        rows.append((lam, seed, L, L / n, L / math.log(n)))
    return rows


def default_lambda_grid() -> list[float]:
    return [0.2, INV_E - 0.15, INV_E, INV_E + 0.1, INV_E + 0.25, 0.6, 1.0]


def cmd_oracle_sweep(spec: ExperimentSpec) -> tuple[list[str], list[tuple]]:
    if spec.n > ORACLE_MAX_N:
        raise ResourceLimit(f"n={spec.n} exceeds the oracle guard {ORACLE_MAX_N}")
    lambdas = default_lambda_grid() if spec.lambdas is None else list(spec.lambdas)
    header = ["lambda", "seed", "L", "L_over_n", "L_over_log_n"]
    if not lambdas:
        return header, []
    seeds = spec.seed_list()
    chunks = _fan_out(_sweep_one, [(spec.n, s, lambdas) for s in seeds], spec.worker_count())
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r[1], r[0]))
    return header, rows


def sweep_medians(rows: Sequence[tuple]) -> dict[float, float]:
    by_lam: dict[float, list[int]] = {}
    for lam, _, L, _, _ in rows:
        by_lam.setdefault(lam, []).append(L)
    return {lam: float(np.median(v)) for lam, v in by_lam.items()}


def sweep_monotone_violations(rows: Sequence[tuple]) -> int:
    by_seed: dict[int, list[tuple[float, int]]] = {}
    for lam, seed, L, _, _ in rows:
        by_seed.setdefault(seed, []).append((lam, L))
    bad = 0
    for vals in by_seed.values():
        vals.sort()
        bad += sum(1 for a, b in zip(vals, vals[1:]) if b[1] < a[1])
    return bad


# ---------------------------------------------------------------- light counts

def _count_one(args) -> tuple[int, int]:
    n, length, lam, C, seed = args
    return seed, exhaustive_light_count(generate_instance(n, seed=seed), length, LightSpec(lam, C))


def cmd_light_count(spec: ExperimentSpec) -> tuple[list[str], list[tuple]]:
    lam = spec.lam if spec.lam is not None else 1.0
    expected = expected_light_count(spec.n, spec.length, lam, spec.C)
    seeds = spec.seed_list()
    results = _fan_out(_count_one, [(spec.n, spec.length, lam, spec.C, s) for s in seeds],
                       spec.worker_count())
    results.sort()
    header = ["kind", "seed", "count", "expected", "mean", "fraction_ge_2E"]
    rows: list[tuple] = [("trial", s, c, expected, "", "") for s, c in results]
    counts = np.array([c for _, c in results], dtype=float)
    if counts.size:
        frac = float(np.mean(counts >= 2 * expected)) if expected > 0 else float(np.mean(counts > 0))
        rows.append(("summary", "", int(counts.sum()), expected, float(counts.mean()), frac))
    return header, rows


# ---------------------------------------------------------------- bound suite

AZUMA_GRID_N = (50, 200, 800)


def _exp_sums(N: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(trials)
    rows = max(1, 4_000_000 // N)
    for start in range(0, trials, rows):
        stop = min(trials, start + rows)
        out[start:stop] = rng.exponential(1.0, size=(stop - start, N)).sum(axis=1)
    return out


def azuma_checks(trials: int, seed: int = 0, corrupt: float = 1.0) -> list[dict]:
    """Monte Carlo frequency vs both exponential-sum tail bounds on the fixed (N, alpha) grid."""
    rng = np.random.default_rng(seed)
    out = []
    for N in AZUMA_GRID_N:
        sums = _exp_sums(N, trials, rng)
        for mult in (1, 2, 4):
            alpha = mult * math.sqrt(N)
            q = TailBoundQuery(N, alpha)
            for side, bound_fn, freq in (
                ("upper", exp_tail_upper, float(np.mean(sums >= N + alpha))),
                ("lower", exp_tail_lower, float(np.mean(sums <= N - alpha))),
            ):
                if side == "upper" and alpha > (2 - math.sqrt(2)) * N:
                    continue
                bound = bound_fn(q) * corrupt
                slack = 3 * binomial_sigma(min(bound, 1.0), trials)
                out.append({"check": f"tail_{side}", "N": N, "alpha": alpha, "empirical": freq,
                            "bound": bound, "slack": slack, "pass": freq <= bound + slack})
    return out


def scale_free_check(samples: int, seed: int = 0) -> dict:
    """S_3/S_10 from mean-1 and mean-1000 exponentials: two-sample KS must stay under 0.01."""
    rng = np.random.default_rng(seed)
    a = rng.exponential(1.0, size=(samples, 10)).cumsum(axis=1)
    b = rng.exponential(1000.0, size=(samples, 10)).cumsum(axis=1)
    ks = sps.ks_2samp(a[:, 2] / a[:, 9], b[:, 2] / b[:, 9]).statistic
    return {"check": "dirichlet_scale_free", "samples": samples, "ks": float(ks), "bound": 0.01,
            "pass": bool(ks < 0.01)}


def cap_event_check(samples: int, seed: int = 0, length: int = 25, eta: float = 0.1,
                    zeta2: float = 2.0, totals: tuple[float, float] = (3.0, 300.0)) -> dict:
    """The deviation-cap event has the same probability whatever the path total w is.

    Both totals are sampled through the Dirichlet bridge; frequencies must
    agree within 3 combined binomial sigma and the scaled deviations M/w
    must pass a two-sample KS at 0.01 (or the 0.1% critical value when
    ``samples`` is too small for 0.01 to be meaningful).
    """
    rng = np.random.default_rng(seed)
    spec = GoodSpec(eta, zeta2, length)
    freqs, scaled = [], []
    for w in totals:
        rows = dirichlet_bridge_batch(length, w, samples, rng)
        m = np.abs(np.cumsum(rows, axis=1) - np.arange(1, length + 1) / length * w).max(axis=1)
        freqs.append(float(np.mean(m <= spec.deviation_cap(w))))
        scaled.append(m / w)
    sigma = math.hypot(binomial_sigma(freqs[0], samples), binomial_sigma(freqs[1], samples))
    ks = float(sps.ks_2samp(scaled[0], scaled[1]).statistic)
    ks_limit = max(0.01, 1.95 * math.sqrt(2 / samples))  # 0.1% two-sample critical value
    ok = abs(freqs[0] - freqs[1]) <= 3 * sigma + 1e-12 and ks < ks_limit
    return {"check": "cap_event_constant", "frequencies": freqs, "ks": ks, "pass": bool(ok)}


def cmd_verify_bounds(spec: ExperimentSpec, corrupt: float = 1.0) -> dict:
    seed = spec.seeds[0] if spec.seeds else spec.base_seed
    checks = azuma_checks(spec.trials, seed, corrupt)
    # the 0.01 KS limit is only meaningful at 1e5 samples or more
    checks.append(scale_free_check(max(spec.trials // 10, 100_000), seed))
    checks.append(cap_event_check(max(spec.trials // 10, 1000), seed))
    return {"checks": checks, "pass": all(c["pass"] for c in checks)}


# ---------------------------------------------------------------- bridge pipeline

def pipeline_one(spec: ExperimentSpec, seed: int) -> dict:
    if spec.eta is None:
        raise InvalidArgument("bridge-pipeline needs eta")
    inst = generate_instance(spec.n, seed=seed)
    good = GoodSpec(spec.eta, spec.zeta2, spec.length)
    search_kw = {}
    if spec.mode == "sampled":
        search_kw = {"anchors": spec.anchors, "per_anchor": spec.per_anchor, "seed": seed}
    family = extract_disjoint_good_paths(inst, good, spec.zeta1, spec.budget, spec.mode, **search_kw)
    config = BridgeConfig(spec.nu, spec.length, spec.delta, spec.zeta1)
    _, v2 = partition_vertices(spec.n, spec.zeta1, spec.eta)
    result = run_bridge(inst, family, config)
    record: dict[str, Any] = {
        "seed": seed,
        "family_size": len(family.paths),
        "good_paths_found": family.source_count,
        "intersection_edges": family.edge_count,
        "search_complete": family.complete,
        "v2_size": len(v2),
        "feasible": result.feasibility.feasible,
        "violations": result.feasibility.violations,
        "result": result.to_dict(),
    }
    if not result.gamma:
        record["status"] = "infeasible: " + "; ".join(result.feasibility.violations)
        return record
    try:
        record["audit"] = audit_bridge(result, inst, family, config, spec.eta).to_dict()
        record["status"] = "ok"
    except AuditFailure as exc:
        record["status"] = f"audit failed: {exc}"
        record["violation"] = True
        return record
    if spec.n <= spec.oracle_max_n:
        L = read_L(build_oracle(inst), result.average)
        record["oracle_L_at_average"] = L
        record["oracle_witness_ok"] = L >= result.length
        if L < result.length:
            record["violation"] = True
    return record


def _pipeline_star(args):
    return pipeline_one(*args)


def cmd_bridge_pipeline(spec: ExperimentSpec) -> dict:
    seeds = spec.seed_list()
    runs = _fan_out(_pipeline_star, [(spec, s) for s in seeds], spec.worker_count())
    runs.sort(key=lambda r: r["seed"])
    return {"runs": runs, "pass": not any(r.get("violation") for r in runs)}


# ---------------------------------------------------------------- downcross study

def dominated(trial, slack: float) -> bool:
    """Empirical CDF of the A_k count at or below the Bin(half, c_hat (1 - slack)) CDF everywhere.

    Each point gets 3 binomial sigma of sampling tolerance: the empirical
    CDF is exactly 1 past the largest observed count, where any binomial CDF
    is still a hair below 1.
    """
    half = trial.half_blocks
    ks = np.arange(half + 1)
    ref = sps.binom.cdf(ks, half, trial.c_hat * (1 - slack))
    tol = 3 * np.sqrt(ref * (1 - ref) / trial.trials)
    return bool(np.all(trial.empirical_cdf() <= ref + tol + 1e-12))


def _domination_cell(args) -> tuple:
    block, total, lam, C, trials, slack, seed = args
    trial = domination_trial(block, total, lam, C, trials, seed)
    ref = block_event_reference(block, total, C, trials, split_seed(seed, 1))
    sigma = math.hypot(binomial_sigma(trial.c_hat, trials * trial.half_blocks),
                       binomial_sigma(ref, max(1, trials // trial.half_blocks) * trial.half_blocks))
    warn = "unobservable regime" if trial.c_hat < 1e-3 else ""
    return ("domination", block, total, C, "", trials, trial.c_hat, ref,
            abs(trial.c_hat - ref) <= 3 * sigma, dominated(trial, slack), "", "", warn)


def _excursion_cell(args) -> tuple:
    block, total, lam, eta_p, trials, seed = args
    res = excursion_frequency(block, total, lam, eta_p, trials, seed)
    trivial = "bound >= 1" if res.theory_bound >= 1 else ""
    return ("excursion", block, total, "", eta_p, trials, res.frequency, "", "", "",
            res.theory_bound, res.within_bound, trivial)


def cmd_downcross_study(spec: ExperimentSpec) -> tuple[list[str], list[tuple]]:
    lam = spec.lam if spec.lam is not None else INV_E + (spec.eta if spec.eta is not None else 0.05)
    blocks = spec.blocks or [25]
    totals = spec.totals or [2500]
    a_k_Cs = spec.a_k_Cs if spec.a_k_Cs is not None else [spec.a_k_C]
    eta_primes = spec.eta_primes if spec.eta_primes is not None else [0.01, 0.05, 0.16]
    if not (blocks and totals and (a_k_Cs or eta_primes)):
        raise InvalidArgument("the study grid is empty")
    seed = spec.base_seed if spec.seeds is None else spec.seeds[0]
    cells_d, cells_e = [], []
    idx = 0
    for b in blocks:
        for L in totals:
            for C in a_k_Cs:
                cells_d.append((b, L, lam, C, spec.trials, spec.slack, split_seed(seed, idx)))
                idx += 1
            for e in eta_primes:
                cells_e.append((b, L, lam, e, spec.trials, split_seed(seed, idx)))
                idx += 1
    workers = spec.worker_count()
    rows = _fan_out(_domination_cell, cells_d, workers) + _fan_out(_excursion_cell, cells_e, workers)
    rows.sort(key=lambda r: tuple(str(x) for x in r[:5]))
    header = ["kind", "block", "total_length", "a_k_C", "eta_prime", "trials", "frequency",
              "reference", "reference_agrees", "dominated", "theory_bound", "within_bound", "note"]
    return header, rows
