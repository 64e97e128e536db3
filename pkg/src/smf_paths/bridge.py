"""BRIDGE(nu, ell, delta): stitch vertex-disjoint good paths into one long light path.

Good paths live on the vertices ``V1 = {0, ..., n_* - 1}``; the remaining
ids ``V2`` form the reservoir that supplies the middle vertex of every
2-edge bridge.  Each iteration grows ``nu`` predecessor edges from the open
end of the current path into the reservoir, takes the lightest edge from
those predecessors to an unused end segment, and splices the target path
in, dropping whatever lies beyond the two attachment points.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from smf_paths.core import Instance, Path, PathStats, edge_set, path_stats, path_weights
from smf_paths.errors import AlgorithmInvariantViolation, AuditFailure, InvalidArgument
from smf_paths.light import INV_E
from smf_paths.overlap import DisjointFamily, reservoir_split


@dataclass(frozen=True)
class BridgeConfig:
    nu: int
    length: int
    delta: float
    zeta1: float = 0.2

    def __post_init__(self) -> None:
        if int(self.nu) != self.nu or self.nu < 1:
            raise InvalidArgument(f"nu must be a positive integer, got {self.nu!r}")
        if int(self.length) != self.length or self.length < 8:
            raise InvalidArgument(f"length must be an integer >= 8 so end segments stay disjoint, got {self.length!r}")
        if not 0 < self.delta < 1:
            raise InvalidArgument(f"delta must lie in (0, 1), got {self.delta!r}")
        if not 0 < self.zeta1 < 1:
            raise InvalidArgument(f"zeta1 must lie in (0, 1), got {self.zeta1!r}")

    @property
    def end_segment(self) -> int:
        return self.length // 4

    def rounds(self, n: int) -> int:
        """floor(delta * n / length): the number of good paths the output strings together."""
        return int(math.floor(self.delta * n / self.length + 1e-9))


def partition_vertices(n: int, zeta1: float, eta: float) -> tuple[range, range]:
    n_star = reservoir_split(n, zeta1, eta)
    if n_star < 2 or n_star > n:
        raise InvalidArgument(f"degenerate split: n_* = {n_star} for n = {n}")
    return range(n_star), range(n_star, n)


@dataclass
class Feasibility:
    feasible: bool
    rounds: int
    violations: list[str] = field(default_factory=list)


def feasibility(config: BridgeConfig, family_size: int, v2_size: int, n: int) -> Feasibility:
    """1 <= delta n / ell <= |family| and nu * floor(delta n / ell) <= |V2|."""
    k = config.rounds(n)
    problems = []
    if k < 1:
        problems.append(f"delta*n/ell = {config.delta * n / config.length:.4g} < 1")
    elif k > family_size:
        problems.append(f"family too small: need {k} disjoint good paths, have {family_size}")
    if config.nu * k > v2_size:
        problems.append(f"reservoir too small: nu*rounds = {config.nu * k} > |V2| = {v2_size}")
    return Feasibility(not problems, k, problems)


@dataclass
class IterationLog:
    predecessors: list[tuple[int, int, float]]  # (open-end vertex, reservoir vertex, weight)
    connector: tuple[int, int, float]  # (reservoir vertex, end-segment vertex, weight)
    bridge: tuple[int, int, int]
    bridge_weight: float
    target: int  # index into the family
    landing_position: int  # position of the end-segment vertex within the target path
    dropped_edges: int  # edges cut from the previous open end
    t_before: int
    t_after: int
    m_before: int
    m_after: int


@dataclass
class BridgeResult:
    gamma: Path
    iterations: int
    bridge_weights: list[float]
    segment_lengths: list[int]
    stats: PathStats | None
    feasibility: Feasibility
    log: list[IterationLog] = field(default_factory=list)
    segment_spans: list[tuple[int, int]] = field(default_factory=list)  # gamma index ranges
    segment_sources: list[int] = field(default_factory=list)

    @property
    def length(self) -> int:
        return max(len(self.gamma) - 1, 0)

    @property
    def average(self) -> float:
        return self.stats.average if self.stats is not None else math.inf

    def to_dict(self) -> dict:
        return {
            "gamma": list(self.gamma),
            "length": self.length,
            "average": self.average if self.stats is not None else None,
            "iterations": self.iterations,
            "bridge_weights": self.bridge_weights,
            "segment_lengths": self.segment_lengths,
            "feasibility": asdict(self.feasibility),
            "log": [asdict(entry) for entry in self.log],
        }


def _empty(report: Feasibility) -> BridgeResult:
    return BridgeResult((), 0, [], [], None, report)


def _edge_key(w: float, a: int, b: int) -> tuple[float, int, int]:
    return (w, min(a, b), max(a, b))


def run_bridge(instance: Instance, family: DisjointFamily, config: BridgeConfig) -> BridgeResult:
    n = instance.n
    ell, s, nu = config.length, config.end_segment, config.nu
    v1, v2 = partition_vertices(n, config.zeta1, family.spec.eta)
    if len(v1) != family.n_star:
        raise InvalidArgument(f"config splits at n_* = {len(v1)} but the family was built with {family.n_star}")
    paths = [tuple(p) for p in family.paths]
    for p in paths:
        if len(p) - 1 != ell:
            raise InvalidArgument(f"family path {p} does not have length {ell}")
        if max(p) >= family.n_star:
            raise InvalidArgument(f"family path {p} leaves V1")
    report = feasibility(config, len(paths), len(v2), n)
    if not report.feasible:
        return _empty(report)

    w = instance.matrix
    gamma = list(paths[0])
    spans = [[0, ell]]
    sources = [0]
    reservoir = set(v2)
    # end-segment vertex -> (path index, position in that path)
    ends: dict[int, tuple[int, int]] = {}
    for idx, p in enumerate(paths[1:], start=1):
        for pos in list(range(s)) + list(range(ell + 1 - s, ell + 1)):
            ends[p[pos]] = (idx, pos)
    log: list[IterationLog] = []

    for _ in range(report.rounds - 1):
        open_end = gamma[-s:]
        if len(reservoir) < nu or not ends:
            raise AlgorithmInvariantViolation("ran out of reservoir or end-segment vertices")
        m_before, t_before = len(reservoir), len(ends)

        # Step 1: nu times the lightest open-end/reservoir edge; removing the
        # reservoir vertex kills all its edges, so this is the nu reservoir
        # vertices with the lightest best edge.
        res = np.fromiter(sorted(reservoir), dtype=np.int64)
        sub = w[np.ix_(open_end, res)]
        best = []
        for col, m in enumerate(res.tolist()):
            keys = [_edge_key(sub[r, col], x, m) for r, x in enumerate(open_end)]
            r = min(range(len(open_end)), key=keys.__getitem__)
            best.append((keys[r], open_end[r], m))
        best.sort()
        preds = best[:nu]
        pred_of = {m: (x, key[0]) for key, x, m in preds}
        for _, _, m in preds:
            reservoir.discard(m)

        # Step 2: lightest predecessor/end-segment edge
        t_vertices = sorted(ends)
        sub = w[np.ix_(list(pred_of), t_vertices)]
        choice = min(
            (_edge_key(sub[i, j], p, t), p, t)
            for i, p in enumerate(pred_of)
            for j, t in enumerate(t_vertices)
        )
        (cw, _, _), p_mid, t_land = choice
        target, pos = ends[t_land]
        pi = paths[target]

        # Step 3: keep gamma up to the predecessor's anchor, then the bridge, then pi towards its far end
        x, xw = pred_of[p_mid]
        cut = gamma.index(x)
        dropped = len(gamma) - 1 - cut
        spans[-1][1] -= dropped
        piece = list(pi[pos:]) if pos < s else list(pi[pos::-1])
        start = cut + 2
        gamma = gamma[:cut + 1] + [p_mid] + piece
        spans.append([start, len(piece) - 1])
        sources.append(target)

        # Step 4
        for pos_end in list(range(s)) + list(range(ell + 1 - s, ell + 1)):
            del ends[pi[pos_end]]
        log.append(IterationLog(
            predecessors=[(x_, m_, key[0]) for key, x_, m_ in preds],
            connector=(p_mid, t_land, cw),
            bridge=(x, p_mid, t_land),
            bridge_weight=xw + cw,
            target=target,
            landing_position=pos,
            dropped_edges=dropped,
            t_before=t_before,
            t_after=len(ends),
            m_before=m_before,
            m_after=len(reservoir),
        ))

    gamma_t = tuple(int(v) for v in gamma)
    return BridgeResult(
        gamma=gamma_t,
        iterations=len(log),
        bridge_weights=[entry.bridge_weight for entry in log],
        segment_lengths=[length for _, length in spans],
        stats=path_stats(instance, gamma_t),
        feasibility=report,
        log=log,
        segment_spans=[(a, a + length) for a, length in spans],
        segment_sources=sources,
    )


@dataclass
class AuditReport:
    length: int
    average: float
    rounds: int
    bridge_total: float
    bridge_budget: float  # 3 * ell * eta * rounds
    bridge_event: bool
    average_target: float  # 1/e + 12 eta
    average_within_target: bool
    checks: dict[str, bool]

    def to_dict(self) -> dict:
        return asdict(self)


def audit_bridge(result: BridgeResult, instance: Instance, family: DisjointFamily,
                 config: BridgeConfig, eta: float, zeta2: float | None = None) -> AuditReport:
    """Recompute everything about a BRIDGE output from raw weights.

    Structural invariants raise ``AuditFailure``.  The bridge-weight event and
    the 1/e + 12 eta average target are probabilistic statements about the
    theoretical schedule, so they are only reported.
    """
    if not result.gamma:
        raise InvalidArgument("cannot audit an empty result")
    if zeta2 is None:
        zeta2 = family.spec.zeta2
    gamma = result.gamma
    ell, s = config.length, config.end_segment
    k = result.feasibility.rounds
    n_star = family.n_star
    lam = INV_E + eta
    checks: dict[str, bool] = {}

    checks["simple_path"] = len(set(gamma)) == len(gamma) and all(0 <= v < instance.n for v in gamma)
    weights = path_weights(instance, gamma)
    stats = path_stats(instance, gamma)
    checks["average_recomputed"] = (result.stats is not None
                                    and abs(stats.average - result.stats.average) <= 1e-12 * max(1.0, stats.average))
    checks["iterations"] = result.iterations == k - 1

    bridge_edges = set()
    middles_ok = True
    for entry in result.log:
        x, p, t = entry.bridge
        i = gamma.index(p) if p in gamma else -1
        middles_ok &= p >= n_star and 0 < i < len(gamma) - 1 and {gamma[i - 1], gamma[i + 1]} == {x, t}
        bridge_edges |= {(min(x, p), max(x, p)), (min(p, t), max(p, t))}
    checks["bridge_middles_in_V2"] = bool(middles_ok)
    family_edges = set().union(*(edge_set(p) for p in family.paths))
    checks["non_bridge_edges_from_family"] = (edge_set(gamma) - bridge_edges) <= family_edges
    checks["reservoir_used_once"] = len({e.bridge[1] for e in result.log}) == len(result.log)
    checks["T_M_accounting"] = all(
        e.t_before - e.t_after == 2 * s and e.m_before - e.m_after == config.nu for e in result.log
    )
    half = -(-ell // 2)
    checks["segments_keep_half"] = all(length >= half for length in result.segment_lengths)
    checks["length_identity"] = len(gamma) - 1 == sum(result.segment_lengths) + 2 * result.iterations
    checks["length_lower_bound"] = len(gamma) - 1 >= k * half

    partial = np.concatenate([[0.0], np.cumsum(weights)])
    seg_ok = True
    for (a, b), length in zip(result.segment_spans, result.segment_lengths):
        seg_w = partial[b] - partial[a]
        seg_ok &= b - a == length and seg_w <= lam * length + 2 * zeta2 / math.sqrt(eta) + 1e-9
    checks["segment_weight_bound"] = bool(seg_ok)

    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise AuditFailure(f"BRIDGE audit failed: {', '.join(failed)}")
    total = float(sum(result.bridge_weights))
    budget = 3 * ell * eta * k
    target = INV_E + 12 * eta
    return AuditReport(len(gamma) - 1, stats.average, k, total, budget, total <= budget,
                       target, stats.average <= target, checks)


@dataclass
class Schedule:
    """Natural logs of the theoretical (ell, nu, delta) and f(ell, eta), plus which constraints hold.

    The constant C6 is not numeric; it is taken as 1.
    """

    ln_ell: float
    ln_nu: float
    ln_delta: float
    ln_f: float
    constraints: dict[str, bool]

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def log_f(ln_ell: float, eta: float, zeta2: float) -> float:
    """log of exp(-1000 zeta2 / sqrt(eta)) * sqrt(eta^3 / ell^7)."""
    return -1000 * zeta2 / math.sqrt(eta) + (3 * math.log(eta) - 7 * ln_ell) / 2


def _log_ceil_exp(x: float) -> float:
    return x if x > 40 else math.log(math.ceil(math.exp(x)))


def _log_floor_exp(x: float) -> float:
    if x > 40:
        return x
    v = math.floor(math.exp(x))
    return math.log(v) if v > 0 else -math.inf


def paper_schedule(eta: float, zeta1: float = 0.2, zeta2: float = 2.0, c6: float = 1.0) -> Schedule:
    """ell = ceil(e^(2001 zeta2/sqrt eta)), nu = floor(zeta1 (ell eta)^2 / 11), delta = e^(-7000 zeta2/sqrt eta)."""
    if not 0 < eta < 1:
        raise InvalidArgument(f"eta must lie in (0, 1), got {eta!r}")
    root = math.sqrt(eta)
    ln_ell = _log_ceil_exp(2001 * zeta2 / root)
    ln_nu_cap = math.log(zeta1) + 2 * (ln_ell + math.log(eta)) - math.log(11)
    ln_nu = _log_floor_exp(ln_nu_cap)
    ln_delta = -7000 * zeta2 / root
    ln_f = log_f(ln_ell, eta, zeta2)
    ln_c6 = math.log(c6)
    constraints = {
        # zeta1 (ell eta)^2 / 11 >= nu >= 5 / (C6 ell^2 f)
        "nu_upper": ln_nu <= ln_nu_cap,
        "nu_lower": ln_nu >= math.log(5) - ln_c6 - 2 * ln_ell - ln_f,
        # the same lower bound with the eta factor from the bridge-mean requirement
        "nu_lower_with_eta": ln_nu >= math.log(5) - ln_c6 - 2 * ln_ell - math.log(eta) - ln_f,
        # delta <= C6 f ell / 2 and nu delta / ell <= zeta1 eta / 2
        "delta_vs_family": ln_delta <= ln_c6 + ln_f + ln_ell - math.log(2),
        "delta_vs_reservoir": ln_nu + ln_delta - ln_ell <= math.log(zeta1 * eta / 2),
        "ell_large": ln_ell >= max(math.log(zeta2) - 1.5 * math.log(eta), 2 * math.log(zeta2) - math.log(eta)),
    }
    return Schedule(ln_ell, ln_nu, ln_delta, ln_f, constraints)
