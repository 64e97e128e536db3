"""Light and good paths, downcrossings, and the bridge-conditioned block statistics.

Anything sampled "given A(pi) <= lambda" is drawn with the total pinned to
exactly lambda * L through the Dirichlet bridge; results produced that way
are labelled ``bridge-conditioned``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from smf_paths.core import Instance, Path, PathStats, path_weights
from smf_paths.errors import InvalidArgument
from smf_paths.probability import binomial_sigma, dirichlet_bridge_batch

INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class LightSpec:
    lam: float
    C: float = 0.0

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise InvalidArgument(f"lambda must be positive, got {self.lam!r}")
        if not self.C >= 0:
            raise InvalidArgument(f"C must be nonnegative, got {self.C!r}")

    def threshold(self, length: int) -> float:
        return self.lam * length - self.C * math.sqrt(length)


@dataclass(frozen=True)
class GoodSpec:
    eta: float
    zeta2: float
    length: int

    def __post_init__(self) -> None:
        if not 0 < self.eta < 1:
            raise InvalidArgument(f"eta must lie in (0, 1), got {self.eta!r}")
        if not self.zeta2 > 0:
            raise InvalidArgument(f"zeta2 must be positive, got {self.zeta2!r}")
        if int(self.length) != self.length or self.length < 1:
            raise InvalidArgument(f"length must be a positive integer, got {self.length!r}")

    @property
    def lam(self) -> float:
        return INV_E + self.eta

    @property
    def window(self) -> tuple[float, float]:
        top = self.lam * self.length
        return top - 1.0, top

    def deviation_cap(self, total_weight: float) -> float:
        return self.zeta2 / math.sqrt(self.eta) * total_weight / (self.lam * self.length)


def is_light(stats: PathStats, spec: LightSpec) -> bool:
    """W <= lam*m - C*sqrt(m); with C = 0 this is A <= lam."""
    if stats.length < 1:
        raise InvalidArgument("lightness needs a path with at least one edge")
    if spec.C == 0:
        return stats.average <= spec.lam
    return stats.total_weight <= spec.threshold(stats.length)


def is_good(stats: PathStats, spec: GoodSpec) -> bool:
    if stats.length != spec.length:
        raise InvalidArgument(f"path length {stats.length} != good-path length {spec.length}")
    lo, hi = spec.window
    if not lo <= stats.total_weight <= hi:
        return False
    return stats.max_deviation <= spec.deviation_cap(stats.total_weight)


@dataclass
class SearchResult:
    paths: list[Path]
    complete: bool
    expansions: int


class _Budget:
    __slots__ = ("left", "used")

    def __init__(self, left: int) -> None:
        self.left = left
        self.used = 0


def _light_adjacency(instance: Instance, cap: float, vertex_limit: int) -> list[list[tuple[float, int]]]:
    """Per vertex, neighbours below ``vertex_limit`` joined by an edge of weight <= cap, ascending."""
    mat = instance.matrix[:vertex_limit, :vertex_limit]
    adj = []
    for u in range(vertex_limit):
        row = mat[u]
        nbrs = np.nonzero(row <= cap)[0]
        order = np.lexsort((nbrs, row[nbrs]))
        adj.append([(float(row[v]), int(v)) for v in nbrs[order]])
    return adj


def _dfs(adj, start: int, length: int, lo: float, hi: float, budget: _Budget,
         out: list[Path], max_found: int | None) -> bool:
    """Append every path from ``start`` with ``length`` edges and weight in [lo, hi].

    Returns False once the budget or ``max_found`` stops the search early.
    """
    path = [start]
    on_path = {start}
    # explicit stack of (neighbour iterator position, weight so far)
    stack: list[list] = [[0, 0.0]]
    found = 0
    while stack:
        frame = stack[-1]
        u = path[-1]
        depth = len(path) - 1
        nbrs = adj[u]
        pushed = False
        while frame[0] < len(nbrs):
            w, v = nbrs[frame[0]]
            frame[0] += 1
            total = frame[1] + w
            if total > hi:
                break  # neighbours are sorted; everything after is heavier
            if v in on_path:
                continue
            if budget.left <= 0:
                return False
            budget.left -= 1
            budget.used += 1
            if depth + 1 == length:
                if total >= lo:
                    out.append(tuple(path) + (v,))
                    found += 1
                    if max_found is not None and found >= max_found:
                        return True
                continue
            path.append(v)
            on_path.add(v)
            stack.append([0, total])
            pushed = True
            break
        if not pushed:
            stack.pop()
            on_path.discard(path.pop())
    return True


def search_light_paths(instance: Instance, length: int, spec: LightSpec, budget: int,
                       mode: str = "exhaustive", *, lower: float = -math.inf,
                       upper: float | None = None, vertex_limit: int | None = None,
                       anchors: int | None = None, per_anchor: int | None = None,
                       seed=None) -> SearchResult:
    """Depth-first branch and bound over ordered vertex tuples.

    A prefix is cut as soon as its weight passes the light threshold
    ``lam*length - C*sqrt(length)`` (or ``upper`` when given); weights are
    positive so no completion can come back under.  ``lower`` filters
    complete paths only.  ``vertex_limit`` restricts the search to ids below it.

    ``mode="sampled"`` restarts from uniformly random anchors (``anchors`` of
    them, default every vertex in shuffled order), keeping at most
    ``per_anchor`` paths from each.
    """
    if int(length) != length or length < 1:
        raise InvalidArgument(f"length must be a positive integer, got {length!r}")
    if budget <= 0:
        raise InvalidArgument("budget must be positive")
    if mode not in ("exhaustive", "sampled"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    limit = instance.n if vertex_limit is None else int(vertex_limit)
    if not 1 <= limit <= instance.n:
        raise InvalidArgument(f"vertex_limit must lie in [1, {instance.n}]")
    hi = spec.threshold(length) if upper is None else min(upper, spec.threshold(length))
    if hi <= 0 or limit < length + 1:
        return SearchResult([], True, 0)
    adj = _light_adjacency(instance, hi, limit)
    left = _Budget(int(budget))
    out: list[Path] = []
    complete = True
    if mode == "exhaustive":
        for start in range(limit):
            if not _dfs(adj, start, length, lower, hi, left, out, None):
                complete = False
                break
    else:
        rng = np.random.default_rng(seed)
        starts = rng.permutation(limit)
        if anchors is not None:
            starts = rng.integers(0, limit, size=anchors) if anchors > limit else starts[:anchors]
        for start in starts:
            if not _dfs(adj, int(start), length, lower, hi, left, out, per_anchor):
                if left.left <= 0:
                    complete = False
                    break
        # sampled output is never a certificate of completeness
        complete = complete and anchors is None and per_anchor is None
    return SearchResult(sorted(set(out)), complete, left.used)


@dataclass
class DowncrossReport:
    block_length: int
    block_count: int
    downcross_indices: list[int]
    lambda_k_values: list[float]
    a_k_flags: list[bool]


def _block_statistics(weights: np.ndarray, block: int, blocks: int, C_down: float | None,
                      lam: float | None, C_ak: float):
    """Vectorised over rows: block weights, suffix averages Lambda_k and the A_k flags."""
    partial = np.concatenate([np.zeros((weights.shape[0], 1)), np.cumsum(weights, axis=1)], axis=1)
    m = weights.shape[1]
    starts = np.arange(blocks) * block
    block_w = partial[:, starts + block] - partial[:, starts]
    suffix = (partial[:, [m]] - partial[:, starts]) / (m - starts)
    a_k = block_w <= suffix * (block - C_ak * math.sqrt(block))
    down = None
    if lam is not None:
        down = block_w <= lam * block - C_down * math.sqrt(block)
    return block_w, suffix, a_k, down


def downcross_report(instance: Instance, path: Sequence[int], block: int, spec: LightSpec,
                     a_k_C: float = 6.0) -> DowncrossReport:
    """Cut ``path`` into consecutive blocks of ``block`` edges (remainder dropped) and classify them."""
    if int(block) != block or block < 1:
        raise InvalidArgument("block length must be a positive integer")
    if len(path) - 1 < block:
        raise InvalidArgument(f"path of length {len(path) - 1} is shorter than one block of {block}")
    w = path_weights(instance, path)
    return downcross_report_from_weights(w, block, spec, a_k_C)


def downcross_report_from_weights(weights: Sequence[float], block: int, spec: LightSpec,
                                  a_k_C: float = 6.0) -> DowncrossReport:
    w = np.asarray(weights, dtype=float)[None, :]
    blocks = w.shape[1] // block
    if blocks < 1:
        raise InvalidArgument("fewer edges than one block")
    _, suffix, a_k, down = _block_statistics(w, block, blocks, spec.C, spec.lam, a_k_C)
    return DowncrossReport(
        block_length=block,
        block_count=blocks,
        downcross_indices=[int(k) for k in np.nonzero(down[0])[0]],
        lambda_k_values=suffix[0].tolist(),
        a_k_flags=a_k[0].tolist(),
    )


@dataclass
class DominationTrial:
    """Bridge-conditioned counts of A_k events over the first half of a path."""

    block: int
    total_length: int
    lam: float
    a_k_C: float
    trials: int
    counts: np.ndarray = field(repr=False)  # per-trial N^pi
    c_hat: float = 0.0
    per_block_frequency: np.ndarray = field(default=None, repr=False)
    label: str = "bridge-conditioned"

    @property
    def half_blocks(self) -> int:
        return self.total_length // (2 * self.block)

    def histogram(self) -> np.ndarray:
        return np.bincount(self.counts, minlength=self.half_blocks + 1)

    def empirical_cdf(self) -> np.ndarray:
        return np.cumsum(self.histogram()) / self.trials


def _chunks(total: int, row_len: int, target: int = 4_000_000):
    rows = max(1, target // max(row_len, 1))
    done = 0
    while done < total:
        step = min(rows, total - done)
        yield step
        done += step


def domination_trial(block: int, total_length: int, lam: float, a_k_C: float, trials: int,
                     seed=None) -> DominationTrial:
    if block < 1 or total_length < 2 * block:
        raise InvalidArgument("need total_length >= 2 * block >= 2")
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    half = total_length // (2 * block)
    rng = np.random.default_rng(seed)
    counts = np.empty(trials, dtype=np.int64)
    hits = np.zeros(half)
    pos = 0
    for step in _chunks(trials, total_length):
        w = dirichlet_bridge_batch(total_length, lam * total_length, step, rng)
        _, _, a_k, _ = _block_statistics(w, block, half, None, None, a_k_C)
        counts[pos:pos + step] = a_k.sum(axis=1)
        hits += a_k.sum(axis=0)
        pos += step
    freq = hits / trials
    return DominationTrial(block, total_length, lam, a_k_C, trials, counts,
                           float(freq.mean()), freq)


def ratio_event_probability(block: int, remaining: int, C: float, trials: int, seed=None) -> float:
    """Monte Carlo P(S_block / S_remaining <= (block - C sqrt(block)) / remaining).

    Draws the two independent pieces S_block and S_remaining - S_block as
    sums of unit exponentials, without any bridge conditioning.
    """
    if remaining <= block:
        raise InvalidArgument("remaining must exceed block")
    rng = np.random.default_rng(seed)
    cut = (block - C * math.sqrt(block)) / remaining
    if cut <= 0:
        return 0.0
    hit = 0
    for step in _chunks(trials, remaining):
        head = rng.exponential(1.0, size=(step, block)).sum(axis=1)
        tail = rng.exponential(1.0, size=(step, remaining - block)).sum(axis=1)
        hit += int(np.count_nonzero(head / (head + tail) <= cut))
    return hit / trials


def block_event_reference(block: int, total_length: int, C: float, trials: int, seed=None) -> float:
    """Average over the half-path blocks k of the unconditioned ratio-event probability.

    Block k sees the suffix of length total_length - (k-1)*block, so each
    block gets its own ``ratio_event_probability``.
    """
    half = total_length // (2 * block)
    seeds = np.random.SeedSequence(seed).spawn(half)
    per = max(1, trials // half)
    vals = [ratio_event_probability(block, total_length - k * block, C, per, s) for k, s in enumerate(seeds)]
    return float(np.mean(vals))


@dataclass
class ExcursionResult:
    frequency: float
    trials: int
    ci_low: float
    ci_high: float
    theory_bound: float
    sigma: float
    label: str = "bridge-conditioned"

    @property
    def within_bound(self) -> bool:
        cap = min(1.0, self.theory_bound)
        return self.frequency <= cap + 3 * binomial_sigma(cap, self.trials)


def excursion_frequency(block: int, total_length: int, lam: float, eta_prime: float, trials: int,
                        seed=None) -> ExcursionResult:
    """How often some half-path suffix average Lambda_k exceeds lam + sqrt(eta')."""
    if block < 1 or total_length < 2 * block:
        raise InvalidArgument("need total_length >= 2 * block >= 2")
    if not 0 < eta_prime < 0.25:
        raise InvalidArgument("eta' must lie in (0, 1/4)")
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    half = total_length // (2 * block)
    rng = np.random.default_rng(seed)
    level = lam + math.sqrt(eta_prime)
    hit = 0
    for step in _chunks(trials, total_length):
        w = dirichlet_bridge_batch(total_length, lam * total_length, step, rng)
        _, suffix, _, _ = _block_statistics(w, block, half, None, None, 0.0)
        hit += int(np.count_nonzero(suffix.max(axis=1) > level))
    freq = hit / trials
    sigma = binomial_sigma(freq, trials)
    bound = 2 * total_length * math.exp(-total_length * eta_prime / 16)
    return ExcursionResult(freq, trials, max(0.0, freq - 3 * sigma), min(1.0, freq + 3 * sigma),
                           bound, sigma)
