"""How pairs of paths overlap, and extraction of many vertex-disjoint good paths.

Two self-avoiding paths share a set of edges S that is a union of vertex
disjoint segments; theta counts those segments.  A linear forest with
|S| edges and theta components spans |S| + theta vertices, which is the
identity ``vs_identity_holds`` re-derives from scratch.
"""

from __future__ import annotations

import enum
import heapq
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from smf_paths.core import Instance, Path, canonical, edge_set, path_stats
from smf_paths.errors import InvalidArgument
from smf_paths.light import GoodSpec, LightSpec, is_good, search_light_paths


@dataclass(frozen=True)
class OverlapProfile:
    theta: int
    shared_edges: int
    shared_vertices: int  # |V(S)| for S the common edge set
    components: tuple[Path, ...] = field(default=())
    common_vertices: int = 0  # |V(pi) & V(pi')|, isolated meeting points included


def overlap_profile(p: Sequence[int], q: Sequence[int]) -> OverlapProfile:
    shared = edge_set(p) & edge_set(q)
    components = []
    run: list[int] = []
    for a, b in zip(p, p[1:]):
        if (min(a, b), max(a, b)) in shared:
            if not run:
                run = [a]
            run.append(b)
        elif run:
            components.append(tuple(run))
            run = []
    if run:
        components.append(tuple(run))
    v_s = {v for e in shared for v in e}
    return OverlapProfile(
        theta=len(components),
        shared_edges=len(shared),
        shared_vertices=len(v_s),
        components=tuple(components),
        common_vertices=len(set(p) & set(q)),
    )


def _component_count(edges: set[tuple[int, int]]) -> int:
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(v) for v in parent})


def vs_identity_holds(p: Sequence[int], q: Sequence[int]) -> bool:
    """|V(S)| == |S| + theta(p, q), recomputing every term independently."""
    shared = edge_set(p) & edge_set(q)
    if not shared:
        raise InvalidArgument("the two paths share no edge")
    vertices = {v for e in shared for v in e}
    prof = overlap_profile(p, q)
    if prof.theta != _component_count(shared):
        return False
    return len(vertices) == prof.shared_edges + prof.theta


class Verdict(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    NOT_APPLICABLE = "not-applicable"


def count_vertices_check(p1: Sequence[int], p2: Sequence[int], p3: Sequence[int],
                         p4: Sequence[int]) -> Verdict:
    """Evaluate |V(p3)&V(p4)| + |V(p3 u p4) & V(p1 u p2)| >= j + j' + 2.

    j = 2*length - |E(p3 u p4)| and j' = |E(p1 u p2) & E(p3 u p4)|.  Only
    quadruples of equal length with p3, p4 meeting and j' >= 1 qualify.
    """
    lengths = {len(p) - 1 for p in (p1, p2, p3, p4)}
    if len(lengths) != 1:
        return Verdict.NOT_APPLICABLE
    length = lengths.pop()
    e34 = edge_set(p3) | edge_set(p4)
    e12 = edge_set(p1) | edge_set(p2)
    meet = set(p3) & set(p4)
    j = 2 * length - len(e34)
    j_prime = len(e12 & e34)
    if not meet or j_prime < 1:
        return Verdict.NOT_APPLICABLE
    lhs = len(meet) + len((set(p3) | set(p4)) & (set(p1) | set(p2)))
    return Verdict.HOLDS if lhs >= j + j_prime + 2 else Verdict.FAILS


def cut_edges_between_components(p3: Sequence[int], p4: Sequence[int]) -> list[tuple[int, int]]:
    """First edge of each stretch of p4 running between consecutive components of p3 & p4.

    Components of the intersection graph (shared vertices plus shared edges)
    sit along p4 in order; the stretches between them use only edges outside
    p3, and there are exactly (#components - 1) of them.
    """
    meet = set(p3) & set(p4)
    shared = edge_set(p3) & edge_set(p4)
    cuts = []
    last_meet = None
    for i, v in enumerate(p4):
        if v in meet:
            if last_meet is not None and i - last_meet > 1:
                cuts.append(tuple(sorted((p4[last_meet], p4[last_meet + 1]))))
            elif last_meet is not None and i - last_meet == 1:
                e = (min(p4[i - 1], v), max(p4[i - 1], v))
                if e not in shared:
                    cuts.append(e)
            last_meet = i
    return cuts


def union_acyclic_after_cuts(p3: Sequence[int], p4: Sequence[int]) -> bool:
    """Removing ``cut_edges_between_components`` from p3 u p4 leaves a forest."""
    edges = (edge_set(p3) | edge_set(p4)) - set(cut_edges_between_components(p3, p4))
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def aij_bound(length: int, n_star: int, i: int, j: int) -> float:
    return float(length) ** (3 * i) * float(n_star) ** (length + 1 - i - j)


def aij_bound_binomial(length: int, n_star: int, i: int, j: int) -> int:
    if length + 1 - i - j < 0:
        return 0
    return (math.comb(length + 1, 2 * i) * math.comb(n_star - i - j, length + 1 - i - j)
            * 2**i * math.factorial(length + 1 - j))


def classify_aij(p: Sequence[int], candidates: Sequence[Sequence[int]]) -> dict[tuple[int, int], int]:
    """Bucket same-length candidates by (theta, shared edge count) relative to ``p``."""
    length = len(p) - 1
    buckets: dict[tuple[int, int], int] = defaultdict(int)
    for q in candidates:
        if len(q) - 1 != length:
            raise InvalidArgument(f"candidate {tuple(q)} has length {len(q) - 1}, expected {length}")
        prof = overlap_profile(p, q)
        buckets[(prof.theta, prof.shared_edges)] += 1
    return dict(buckets)


def turan_independent_set(vertex_count: int, edges: Sequence[tuple[int, int]]) -> list[int]:
    """Greedy minimum-degree independent set; lowest id wins ties.

    Always at least ceil(|V|^2 / (2|E| + |V|)) vertices.
    """
    adj: list[set[int]] = [set() for _ in range(vertex_count)]
    for a, b in edges:
        if a == b:
            raise InvalidArgument(f"self-loop at {a}")
        if not (0 <= a < vertex_count and 0 <= b < vertex_count):
            raise InvalidArgument(f"edge {(a, b)} out of range")
        if b in adj[a]:
            raise InvalidArgument(f"duplicate edge {(a, b)}")
        adj[a].add(b)
        adj[b].add(a)
    alive = [True] * vertex_count
    degree = [len(s) for s in adj]
    heap = [(degree[v], v) for v in range(vertex_count)]
    heapq.heapify(heap)
    chosen = []
    while heap:
        d, v = heapq.heappop(heap)
        if not alive[v] or d != degree[v]:
            continue
        chosen.append(v)
        gone = [v] + [u for u in adj[v] if alive[u]]
        for u in gone:
            alive[u] = False
        for u in gone:
            for x in adj[u]:
                if alive[x]:
                    degree[x] -= 1
                    heapq.heappush(heap, (degree[x], x))
    chosen.sort()
    return chosen


def is_independent(chosen: Sequence[int], edges: Sequence[tuple[int, int]]) -> bool:
    picked = set(chosen)
    return not any(a in picked and b in picked for a, b in edges)


def turan_guarantee(vertex_count: int, edge_count: int) -> int:
    if vertex_count == 0:
        return 0
    return -(-vertex_count**2 // (2 * edge_count + vertex_count))


@dataclass
class DisjointFamily:
    paths: list[Path]
    source_count: int  # good paths found, one orientation each
    edge_count: int  # edges of the intersection graph
    n_star: int
    spec: GoodSpec
    complete: bool = True
    instance_seed: int | None = None

    @property
    def pair_total(self) -> int:
        """2|E| + |V| of the intersection graph: ordered intersecting pairs, self-pairs included."""
        return 2 * self.edge_count + self.source_count

    def to_json(self) -> str:
        return json.dumps({"seed": self.instance_seed, "n_star": self.n_star,
                           "paths": [list(p) for p in self.paths]})


def reservoir_split(n: int, zeta1: float, eta: float) -> int:
    """n_* = floor((1 - zeta1 * eta) n), guarded against representation error."""
    return int(math.floor((1.0 - zeta1 * eta) * n + 1e-9))


def find_good_paths(instance: Instance, spec: GoodSpec, n_star: int, budget: int,
                    mode: str = "exhaustive", **search_kw) -> tuple[list[Path], bool]:
    lo, hi = spec.window
    res = search_light_paths(instance, spec.length, LightSpec(spec.lam, 0.0), budget, mode,
                             lower=lo, upper=hi, vertex_limit=n_star, **search_kw)
    good = {canonical(p) for p in res.paths if is_good(path_stats(instance, p), spec)}
    return sorted(good), res.complete


def intersection_edges(paths: Sequence[Path]) -> list[tuple[int, int]]:
    """Pairs (a, b), a < b, of path indices whose vertex sets meet."""
    by_vertex: dict[int, list[int]] = defaultdict(list)
    for idx, p in enumerate(paths):
        for v in p:
            by_vertex[v].append(idx)
    pairs = set()
    for members in by_vertex.values():
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                pairs.add((members[x], members[y]))
    return sorted(pairs)


def extract_disjoint_good_paths(instance: Instance, spec: GoodSpec, zeta1: float = 0.2,
                                budget: int = 10**7, mode: str = "exhaustive",
                                **search_kw) -> DisjointFamily:
    """Good paths inside the first n_* vertices, thinned to a vertex-disjoint family."""
    n_star = reservoir_split(instance.n, zeta1, spec.eta)
    if n_star < spec.length + 1:
        raise InvalidArgument(f"n_* = {n_star} cannot hold a path of length {spec.length}")
    good, complete = find_good_paths(instance, spec, n_star, budget, mode, **search_kw)
    edges = intersection_edges(good)
    chosen = turan_independent_set(len(good), edges)
    family = [good[i] for i in chosen]
    used: set[int] = set()
    for p in family:
        if used & set(p):
            raise AssertionError("extracted family is not vertex-disjoint")
        used |= set(p)
    return DisjointFamily(family, len(good), len(edges), n_star, spec, complete, instance.seed)
