"""Gamma densities, exponential-sum tail bounds and bridge-conditioned samplers.

Every Gamma quantity has integer shape and is evaluated in log space, since
path lengths of a few hundred overflow the factorials otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from smf_paths.errors import InvalidArgument, RangeError


@dataclass(frozen=True)
class GammaSpec:
    shape: int
    rate: float

    def __post_init__(self) -> None:
        if int(self.shape) != self.shape or self.shape < 1:
            raise InvalidArgument(f"shape must be a positive integer, got {self.shape!r}")
        if not self.rate > 0:
            raise InvalidArgument(f"rate must be positive, got {self.rate!r}")


@dataclass(frozen=True)
class TailBoundQuery:
    N: int
    alpha: float

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise InvalidArgument(f"N must be a positive integer, got {self.N!r}")
        if not self.alpha > 0:
            raise InvalidArgument(f"alpha must be positive, got {self.alpha!r}")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gamma_logpdf(spec: GammaSpec, z: float) -> float:
    if z < 0:
        raise InvalidArgument(f"z must be nonnegative, got {z}")
    k, theta = spec.shape, spec.rate
    if z == 0:
        return math.log(theta) if k == 1 else -math.inf
    return k * math.log(theta) + (k - 1) * math.log(z) - theta * z - math.lgamma(k)


def gamma_pdf(spec: GammaSpec, z: float) -> float:
    """Density theta^k z^(k-1) e^(-theta z) / (k-1)!."""
    return math.exp(gamma_logpdf(spec, z))


def _log_poisson_terms(x: float, lo: int, hi: int) -> np.ndarray:
    i = np.arange(lo, hi, dtype=float)
    return i * math.log(x) - x - np.array([math.lgamma(v + 1.0) for v in i])


def _logsumexp(a: np.ndarray) -> float:
    top = float(np.max(a))
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(np.exp(a - top)))


def gamma_log_cdf(spec: GammaSpec, z: float) -> float:
    """log P(Gamma(k, theta) <= z), stable in both tails."""
    if z < 0:
        raise InvalidArgument(f"z must be nonnegative, got {z}")
    k = spec.shape
    x = spec.rate * z
    if x == 0:
        return -math.inf
    if x < k:
        # P = e^-x sum_{i>=k} x^i/i!; terms shrink geometrically once i > x
        hi = k + 64
        while True:
            terms = _log_poisson_terms(x, k, hi)
            if terms[-1] < terms[0] - 40 or hi > k + 10 * (k + 50):
                return _logsumexp(terms)
            hi = k + 2 * (hi - k)
    upper = _logsumexp(_log_poisson_terms(x, 0, k))
    return math.log1p(-math.exp(upper)) if upper < 0 else -math.inf


def gamma_cdf(spec: GammaSpec, z: float) -> float:
    """P(Gamma(k, theta) <= z) through the Poisson-sum identity for integer shape."""
    return math.exp(gamma_log_cdf(spec, z))


def gamma_cdf_array(spec: GammaSpec, z: np.ndarray) -> np.ndarray:
    return np.array([gamma_cdf(spec, float(v)) for v in np.ravel(z)]).reshape(np.shape(z))


def exp_tail_upper(q: TailBoundQuery) -> float:
    """Bound on P(S_N >= N + alpha) for a sum of N unit-mean exponentials."""
    if q.alpha > (2 - math.sqrt(2)) * q.N:
        raise RangeError(f"alpha={q.alpha} exceeds (2 - sqrt 2) N = {(2 - math.sqrt(2)) * q.N}")
    return math.exp(-q.alpha**2 / (4 * q.N))


def exp_tail_lower(q: TailBoundQuery) -> float:
    """Bound on P(S_N <= N - alpha) for a sum of N unit-mean exponentials."""
    return math.exp(-q.alpha**2 / (2 * q.N))


def binomial_lower_tail_bound(trials: int, p: float, threshold: float) -> float:
    """Chernoff bound on P(Bin(trials, p) <= threshold) for threshold at most the mean."""
    if int(trials) != trials or trials < 1:
        raise InvalidArgument(f"trials must be a positive integer, got {trials!r}")
    if not 0 <= p <= 1:
        raise InvalidArgument(f"p must be a probability, got {p!r}")
    if threshold < 0:
        raise InvalidArgument("threshold must be nonnegative")
    mean = trials * p
    if threshold > mean:
        raise RangeError(f"threshold {threshold} exceeds the mean {mean}")
    if mean == 0:
        return 1.0
    return math.exp(-((mean - threshold) ** 2) / (2 * mean))


def dirichlet_bridge_batch(m: int, total: float, size: int, seed=None, mean: float = 1.0) -> np.ndarray:
    """``size`` rows of m positive increments with each row summing to ``total``.

    Rows are i.i.d. exponentials of the given mean rescaled by total over
    their sum, i.e. total times a Dirichlet(1, ..., 1) vector: the exact law
    of the increments conditioned on their sum.
    """
    if int(m) != m or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m!r}")
    if not total > 0:
        raise InvalidArgument(f"total must be positive, got {total!r}")
    rng = _as_rng(seed)
    raw = rng.exponential(mean, size=(size, m))
    scaled = raw * (total / raw.sum(axis=1, keepdims=True))
    if m > 1:
        closing = total - scaled[:, :-1].sum(axis=1)
        ok = closing > 0
        scaled[ok, -1] = closing[ok]
    else:
        scaled[:, 0] = total
    return scaled


def dirichlet_bridge_sample(m: int, total: float, seed=None, mean: float = 1.0) -> list[float]:
    return dirichlet_bridge_batch(m, total, 1, seed, mean)[0].tolist()


def falling_factorial_log(n: int, terms: int) -> float:
    """log of n (n-1) ... (n-terms+1); -inf when it is zero."""
    if terms > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(n - terms + 1)


def expected_light_count(n: int, length: int, lam: float, C: float = 1.0) -> float:
    """Expected number of ordered (lam, C)-light paths of the given length in SMF_n.

    Exact at finite n: the ordered-path count times P(Gamma(length, 1/n) <= lam*length - C*sqrt(length)).
    """
    if length < 1:
        raise InvalidArgument("length must be >= 1")
    threshold = lam * length - C * math.sqrt(length)
    if threshold <= 0:
        return 0.0
    log_count = falling_factorial_log(n, length + 1)
    if log_count == -math.inf:
        return 0.0
    return math.exp(log_count + gamma_log_cdf(GammaSpec(length, 1.0 / n), threshold))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p, 0.0) * max(1.0 - p, 0.0) / trials)
