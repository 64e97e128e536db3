"""Random instances of the stochastic mean-field model and path statistics.

An instance is the complete graph on ``n`` vertices with i.i.d. exponential
edge weights.  Weights live in a flat upper-triangular array ordered
lexicographically over pairs ``(i, j)`` with ``i < j``; the ``r``-th pair
consumes the ``r``-th double of a Philox stream keyed by the seed, so the
weight of an edge never depends on how many other edges were drawn.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from smf_paths.errors import InvalidArgument, InvalidPath

Path = tuple[int, ...]

_SEED_MAX = 2**64 - 1


def pair_rank(n: int, i: int, j: int) -> int:
    """Index of the unordered pair {i, j} in lexicographic order over i < j."""
    if i > j:
        i, j = j, i
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _uniform_stream(seed: int, count: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed))
    # random() is [0, 1); the exponential transform wants (0, 1]
    return 1.0 - gen.random(count)


def _check_params(n: int, mean_param: float, seed: int) -> None:
    if int(n) != n or n < 2:
        raise InvalidArgument(f"n must be an integer >= 2, got {n!r}")
    if not (mean_param > 0 and np.isfinite(mean_param)):
        raise InvalidArgument(f"mean_param must be positive and finite, got {mean_param!r}")
    if int(seed) != seed or not 0 <= seed <= _SEED_MAX:
        raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {seed!r}")


def exponential_weights(n: int, mean_param: float, seed: int, count: int | None = None) -> np.ndarray:
    """The first ``count`` edge weights (by pair rank) of instance ``(n, mean_param, seed)``.

    ``count=None`` draws all ``n(n-1)/2``.  A prefix is bit-identical to the
    corresponding slice of the full instance, which lets Monte Carlo code
    that only touches low-rank edges skip the rest.
    """
    _check_params(n, mean_param, seed)
    total = n * (n - 1) // 2
    if count is None:
        count = total
    if not 0 <= count <= total:
        raise InvalidArgument(f"count must lie in [0, {total}], got {count}")
    return -float(mean_param) * np.log(_uniform_stream(int(seed), count))


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    mean_param: float
    seed: int | None
    weights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        expected = self.n * (self.n - 1) // 2
        if self.weights.shape != (expected,):
            raise InvalidArgument(f"expected {expected} weights, got shape {self.weights.shape}")
        if not (np.all(np.isfinite(self.weights)) and np.all(self.weights > 0)):
            raise InvalidArgument("edge weights must be positive and finite")
        self.weights.setflags(write=False)

    def weight(self, u: int, v: int) -> float:
        if u == v:
            raise InvalidArgument("no self-loops")
        return float(self.weights[pair_rank(self.n, u, v)])

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix with ``inf`` on the diagonal."""
        mat = np.full((self.n, self.n), np.inf)
        iu = np.triu_indices(self.n, k=1)
        mat[iu] = self.weights
        mat[iu[1], iu[0]] = self.weights
        mat.setflags(write=False)
        return mat

    def to_json(self) -> str:
        if self.seed is None:
            raise InvalidArgument("hand-built instances have no seed and cannot be serialized")
        return json.dumps({"n": self.n, "mean_param": self.mean_param, "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        header = json.loads(text)
        return generate_instance(header["n"], header["mean_param"], header["seed"])


def generate_instance(n: int, mean_param: float | None = None, seed: int = 0) -> Instance:
    """Complete graph on ``n`` vertices with Exp(mean ``mean_param``) weights; mean defaults to n."""
    if mean_param is None:
        mean_param = float(n)
    weights = exponential_weights(n, mean_param, seed)
    return Instance(int(n), float(mean_param), int(seed), weights)


def instance_from_weights(n: int, weights: dict[tuple[int, int], float] | np.ndarray,
                          mean_param: float | None = None) -> Instance:
    """Hand-built instance for fixtures: a dict over all pairs or an ``n x n`` symmetric matrix."""
    if int(n) != n or n < 2:
        raise InvalidArgument(f"n must be an integer >= 2, got {n!r}")
    flat = np.empty(n * (n - 1) // 2)
    if isinstance(weights, dict):
        seen = set()
        for (u, v), w in weights.items():
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise InvalidArgument(f"bad pair {(u, v)}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InvalidArgument(f"pair {key} given twice")
            seen.add(key)
            flat[pair_rank(n, u, v)] = w
        if len(seen) != flat.size:
            raise InvalidArgument(f"need all {flat.size} pairs, got {len(seen)}")
    else:
        mat = np.asarray(weights, dtype=float)
        if mat.shape != (n, n) or not np.allclose(mat, mat.T, equal_nan=True):
            raise InvalidArgument("weight matrix must be n x n and symmetric")
        flat[:] = mat[np.triu_indices(n, k=1)]
    return Instance(int(n), float(n if mean_param is None else mean_param), None, flat)


@dataclass(frozen=True)
class PathStats:
    length: int
    total_weight: float
    average: float
    max_deviation: float


def validate_path(instance: Instance, path: Sequence[int]) -> list[str]:
    """Violations of vertex distinctness and range; empty list means the path is valid."""
    problems = []
    seen: set[int] = set()
    for pos, v in enumerate(path):
        if int(v) != v or not 0 <= v < instance.n:
            problems.append(f"out-of-range vertex {v!r} at position {pos}")
        elif v in seen:
            problems.append(f"duplicate vertex {v} at position {pos}")
        seen.add(v)
    if not path:
        problems.append("empty path")
    return problems


def _require_valid(instance: Instance, path: Sequence[int]) -> None:
    problems = validate_path(instance, path)
    if problems:
        raise InvalidPath("; ".join(problems))


def path_weights(instance: Instance, path: Sequence[int]) -> np.ndarray:
    """Edge weights along ``path`` in traversal order."""
    _require_valid(instance, path)
    if len(path) < 2:
        raise InvalidArgument("path has no edges")
    a = np.asarray(path[:-1], dtype=np.int64)
    b = np.asarray(path[1:], dtype=np.int64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    ranks = lo * instance.n - lo * (lo + 1) // 2 + (hi - lo - 1)
    return instance.weights[ranks]


def max_deviation(weights: Iterable[float]) -> float:
    """Largest gap between the partial sums and the straight line from 0 to the total."""
    w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=float)
    if w.size == 0:
        raise InvalidArgument("need at least one weight")
    partial = np.cumsum(w)
    m = w.size
    line = np.arange(1, m + 1) / m * partial[-1]
    return float(np.max(np.abs(partial - line)))


def stats_from_weights(weights: Iterable[float]) -> PathStats:
    w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=float)
    if w.size == 0:
        raise InvalidArgument("average weight is undefined for a path of length 0")
    total = float(np.cumsum(w)[-1])
    return PathStats(int(w.size), total, total / w.size, max_deviation(w))


def path_stats(instance: Instance, path: Sequence[int]) -> PathStats:
    _require_valid(instance, path)
    if len(path) < 2:
        raise InvalidArgument("average weight is undefined for a path of length 0")
    return stats_from_weights(path_weights(instance, path))


def canonical(path: Sequence[int]) -> Path:
    """Orientation of ``path`` that is lexicographically smaller."""
    fwd = tuple(int(v) for v in path)
    rev = fwd[::-1]
    return min(fwd, rev)


def edge_set(path: Sequence[int]) -> set[tuple[int, int]]:
    return {(min(a, b), max(a, b)) for a, b in zip(path, path[1:])}


def split_seed(base: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index`` derived from ``base``."""
    ss = np.random.SeedSequence([int(base), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
