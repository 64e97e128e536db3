"""Exact ground truth on small instances.

``build_oracle`` runs a subset dynamic program: ``best[S, v]`` is the
lightest simple path that visits exactly the vertex set ``S`` and ends at
``v``.  The lightest path with ``m`` edges is then the minimum over all
states with ``|S| = m + 1``, and L(n, lambda) is the largest ``m`` whose
minimum fits under ``lambda * m``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from smf_paths.core import Instance, Path
from smf_paths.errors import InvalidArgument, ResourceLimit
from smf_paths.light import LightSpec

ORACLE_MAX_N = 22
ENUMERATION_GUARD = 10**9


@dataclass
class OracleTable:
    n: int
    min_weight: np.ndarray  # index m = path length; entry 0 unused
    argmin: dict[int, Path] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["m", "min_weight"])
        for m in range(1, self.n):
            out.writerow([m, repr(float(self.min_weight[m]))])
        return buf.getvalue()


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        counts += (masks >> b) & 1
    return counts


def build_oracle(instance: Instance, *, with_paths: bool = False, allow_large: bool = False) -> OracleTable:
    """Minimal total weight of a simple path of every length 1..n-1.

    Layers of equal popcount are processed in increasing mask order, and each
    state's weight is the sum along its path in traversal order, so the table
    is reproducible bit for bit.
    """
    n = instance.n
    if n > ORACLE_MAX_N and not allow_large:
        raise ResourceLimit(f"n={n} exceeds the oracle guard of {ORACLE_MAX_N} (2^n * n^2 work)")
    w = instance.matrix
    full = 1 << n
    best = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int8 if n < 127 else np.int16) if with_paths else None
    for v in range(n):
        best[1 << v, v] = 0.0
    pop = _popcounts(n)
    layers = [np.nonzero(pop == k)[0] for k in range(n + 1)]
    for size in range(2, n + 1):
        layer = layers[size]
        for u in range(n):
            bit = 1 << u
            masks = layer[(layer & bit) != 0]
            prev = masks ^ bit
            # v == u is never set in prev, so best[prev, u] is inf and drops out of the min
            cand = best[prev] + w[:, u]
            if with_paths:
                arg = np.argmin(cand, axis=1)
                best[masks, u] = cand[np.arange(masks.size), arg]
                parent[masks, u] = arg
            else:
                best[masks, u] = cand.min(axis=1)
    min_weight = np.full(n, np.inf)
    argmin: dict[int, Path] = {}
    for m in range(1, n):
        layer = layers[m + 1]
        block = best[layer]
        flat = int(np.argmin(block))
        min_weight[m] = block.flat[flat]
        if with_paths and np.isfinite(min_weight[m]):
            mask, end = int(layer[flat // n]), flat % n
            path = [end]
            while mask & (mask - 1):
                prev_v = int(parent[mask, end])
                mask ^= 1 << end
                end = prev_v
                path.append(end)
            argmin[m] = tuple(reversed(path))
    return OracleTable(n, min_weight, argmin)


def read_L(table: OracleTable, lam: float) -> int:
    """Largest m with a simple path of m edges and average weight <= lam (0 if none)."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    best = 0
    for m in range(1, table.n):
        if table.min_weight[m] <= lam * m:
            best = m
    return best


def brute_force_min_weights(instance: Instance) -> np.ndarray:
    """Same table as ``build_oracle`` by walking every simple path; for cross-checks at n <= 9."""
    n = instance.n
    if n > 10:
        raise ResourceLimit("brute-force enumeration is limited to n <= 10")
    w = instance.matrix
    out = np.full(n, np.inf)

    def walk(path: list[int], used: int, total: float) -> None:
        m = len(path) - 1
        if m and total < out[m]:
            out[m] = total
        last = path[-1]
        for v in range(n):
            if not used >> v & 1:
                path.append(v)
                walk(path, used | 1 << v, total + w[last, v])
                path.pop()

    for s in range(n):
        walk([s], 1 << s, 0.0)
    return out


def enumerate_light_paths(instance: Instance, length: int, spec: LightSpec,
                          lower: float = -math.inf) -> list[Path]:
    """Every ordered light path of the given length via itertools.permutations; tiny n only."""
    n = instance.n
    if n ** (length + 1) > 10**7:
        raise ResourceLimit("permutation enumeration guard exceeded")
    w = instance.matrix
    hi = spec.threshold(length)
    out = []
    for p in itertools.permutations(range(n), length + 1):
        total = 0.0
        for a, b in zip(p, p[1:]):
            total += w[a, b]
        if lower <= total <= hi:
            out.append(p)
    return out


def exhaustive_light_count(instance: Instance, length: int, spec: LightSpec) -> int:
    """Exact number of ordered (lam, C)-light paths with ``length`` edges."""
    n = instance.n
    if n ** (length + 1) > ENUMERATION_GUARD:
        raise ResourceLimit(f"n^(length+1) = {n ** (length + 1)} exceeds {ENUMERATION_GUARD}")
    hi = spec.threshold(length)
    if hi <= 0 or length > n - 1:
        return 0
    w = instance.matrix
    cheap = [np.nonzero(w[u] <= hi)[0].tolist() for u in range(n)]

    def count(u: int, depth: int, used: set[int], total: float) -> int:
        if depth == length:
            return 1
        acc = 0
        row = w[u]
        for v in cheap[u]:
            t = total + row[v]
            if t <= hi and v not in used:
                used.add(v)
                acc += count(v, depth + 1, used, t)
                used.discard(v)
        return acc

    return sum(count(s, 0, {s}, 0.0) for s in range(n))
