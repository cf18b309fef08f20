from dataclasses import dataclass
from egk.errors import DomainError
from egk.params import ChannelParams, OmegaSplit, log_beta
from egk.stoppable_worker import run_concurrently
import logging
import math
import numpy as np
from numpy.random import Generator, SeedSequence, default_rng
from scipy.special import gammaincc
from threading import Lock
from typing import List, Optional, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

# samples per substream; fixed so that estimates do not depend on the worker count
CHUNK_SIZE = 1 << 18
# spawn key of the pilot stream, far outside the chunk indices
_PILOT_KEY = 1 << 40

Size = Optional[Union[int, Tuple[int, ...]]]


@dataclass(frozen=True)
class SimConfig:
    """
    @param n_samples Number of envelope draws
    @param seed Root of all random substreams
    @param omega_split Average powers of S and X, defaults to (Ω, 1)
    """

    n_samples: int = 1_000_000
    seed: int = 42
    omega_split: Optional[OmegaSplit] = None

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be a positive integer, got {self.n_samples}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def split(self, params: ChannelParams) -> OmegaSplit:
        split = self.omega_split or OmegaSplit.default(params)
        split.check(params)
        return split


@dataclass(frozen=True)
class EstimateResult:
    value: float
    std_error: float
    n: int

    def z_score(self, expected: float) -> float:
        """Distance to `expected` in standard errors"""
        diff = self.value - expected
        if self.std_error > 0:
            return diff / self.std_error
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)


## Variates


def gamma_variate(shape: float, rng: Generator, size: Size = None):
    """Unit-scale gamma variates"""
    if not shape > 0 or not math.isfinite(shape):
        raise DomainError(f"gamma shape must be positive, got {shape}")
    return rng.standard_gamma(shape, size)


def sample_gnm(m: float, xi: float, omega: float, rng: Generator, size: Size = None):
    """
    Generalized Nakagami-m variates R = √(Ω/β) G^(1/(2ξ)) with G ~ gamma(m).
    """
    if m < 0.5 or not xi > 0 or not omega > 0:
        raise DomainError(f"invalid generalized Nakagami-m parameters m={m}, xi={xi}, omega={omega}")
    g = gamma_variate(m, rng, size)
    return np.sqrt(omega / math.exp(log_beta(m, xi))) * np.power(g, 0.5 / xi)


def sample_egk(
    params: ChannelParams, cfg: SimConfig, rng: Generator, size: Size = None
):
    """
    Envelope draws R = S·X. Without shadowing S is the constant √Ω_S.
    """
    split = cfg.split(params)
    if params.shadowing is None:
        s = math.sqrt(split.omega_s)
    else:
        s = sample_gnm(params.m_s, params.xi_s, split.omega_s, rng, size)
    x = sample_gnm(params.m, params.xi, split.omega_x, rng, size)
    return s * x


def pilot_stream(seed: int) -> Generator:
    """A stream independent of every estimation substream of the same seed"""
    return default_rng(SeedSequence(seed, spawn_key=(_PILOT_KEY,)))


## Statistics
##
## A statistic maps envelope draws to per-sample feature vectors; its value is
## a smooth function of the feature means. Standard errors use the delta method.


class Statistic:
    dim = 1

    def features(self, r: np.ndarray, params: ChannelParams) -> np.ndarray:
        raise NotImplementedError

    def value(self, mean: np.ndarray) -> float:
        return float(mean[0])

    def gradient(self, mean: np.ndarray) -> np.ndarray:
        return np.ones(1)


def _snr(r: np.ndarray, params: ChannelParams, gamma_bar: float) -> np.ndarray:
    return gamma_bar * r * r / params.omega


@dataclass(frozen=True)
class Moment(Statistic):
    k: float

    def features(self, r, params):
        return np.power(r, self.k)[:, None]


@dataclass(frozen=True)
class CdfAt(Statistic):
    x: float

    def features(self, r, params):
        return (r <= self.x).astype(float)[:, None]


@dataclass(frozen=True)
class Abep(Statistic):
    a: float
    b: float
    gamma_bar: float

    def features(self, r, params):
        gamma = _snr(r, params, self.gamma_bar)
        return (0.5 * gammaincc(self.b, self.a * gamma))[:, None]


@dataclass(frozen=True)
class Capacity(Statistic):
    gamma_bar: float
    bandwidth_w: float = 1.0

    def features(self, r, params):
        gamma = _snr(r, params, self.gamma_bar)
        return (self.bandwidth_w * np.log1p(gamma) / math.log(2.0))[:, None]


@dataclass(frozen=True)
class Outage(Statistic):
    gamma_bar: float
    gamma_th: float

    def features(self, r, params):
        return (_snr(r, params, self.gamma_bar) < self.gamma_th).astype(float)[:, None]


@dataclass(frozen=True)
class AmountOfFading(Statistic):
    """var(γ) / E[γ]² from the sample means of γ and γ²"""

    gamma_bar: float = 1.0
    dim = 2

    def features(self, r, params):
        gamma = _snr(r, params, self.gamma_bar)
        return np.column_stack((gamma, gamma * gamma))

    def value(self, mean):
        return float(mean[1] / mean[0] ** 2 - 1.0)

    def gradient(self, mean):
        return np.array([-2.0 * mean[1] / mean[0] ** 3, 1.0 / mean[0] ** 2])


class Summary:
    """
    A thread-safe running summary of feature vectors: count, mean and the
    centred sum of outer products. Partial summaries merge exactly.
    """

    def __init__(self, name: str, dim: int = 1):
        self.name = name
        self.dim = dim
        self.is_set = False
        self._lock = Lock()
        self._count = 0
        self._mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    def observe(self, features: np.ndarray):
        """Store a batch of observations, one row per sample"""
        features = np.asarray(features, dtype=float).reshape(-1, self.dim)
        if len(features) == 0:
            return
        batch = Summary(self.name, self.dim)
        batch._count = len(features)
        batch._mean = features.mean(axis=0)
        centred = features - batch._mean
        batch._m2 = centred.T @ centred
        self.merge(batch)

    def merge(self, other: "Summary"):
        if other.dim != self.dim:
            raise DomainError(f"cannot merge summaries of dimension {other.dim} and {self.dim}")
        if other._count == 0:
            return
        with self._lock:
            n = self._count + other._count
            delta = other._mean - self._mean
            self._mean = self._mean + delta * (other._count / n)
            self._m2 = (
                self._m2 + other._m2 + np.outer(delta, delta) * (self._count * other._count / n)
            )
            self._count = n
            self.is_set = True

    def reset(self):
        with self._lock:
            self.is_set = False
            self._count = 0
            self._mean = np.zeros(self.dim)
            self._m2 = np.zeros((self.dim, self.dim))

    @property
    def count(self) -> int:
        return self._count

    @property
    def mean(self) -> np.ndarray:
        return self._mean.copy()

    @property
    def covariance(self) -> np.ndarray:
        if self._count < 2:
            return np.zeros((self.dim, self.dim))
        return self._m2 / (self._count - 1)


def _chunks(n_samples: int) -> List[int]:
    full, rest = divmod(n_samples, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def estimate_all(
    statistics: Sequence[Statistic],
    params: ChannelParams,
    cfg: SimConfig = SimConfig(),
    threads: int = 1,
) -> List[EstimateResult]:
    """
    Estimates several statistics from one shared set of envelope draws.
    Substream i of SeedSequence(cfg.seed) draws chunk i, so the result is
    bit-identical for any thread count.
    """
    cfg.split(params)
    sizes = _chunks(cfg.n_samples)
    streams = SeedSequence(cfg.seed).spawn(len(sizes))

    def run_chunk(job):
        stream, size = job
        r = sample_egk(params, cfg, default_rng(stream), size)
        partials = []
        for statistic in statistics:
            summary = Summary(type(statistic).__name__, statistic.dim)
            summary.observe(statistic.features(r, params))
            partials.append(summary)
        return partials

    logger.debug(
        f"Drawing {cfg.n_samples} samples in {len(sizes)} chunks (seed {cfg.seed}) for {params}"
    )
    chunk_results = run_concurrently(run_chunk, list(zip(streams, sizes)), threads)
    totals = [Summary(type(s).__name__, s.dim) for s in statistics]
    for partials in chunk_results:
        if isinstance(partials, Exception):
            raise partials
        for total, partial in zip(totals, partials):
            total.merge(partial)

    results = []
    for statistic, total in zip(statistics, totals):
        mean = total.mean
        grad = statistic.gradient(mean)
        variance = float(grad @ total.covariance @ grad) / total.count
        results.append(
            EstimateResult(statistic.value(mean), math.sqrt(max(variance, 0.0)), total.count)
        )
    return results


def estimate(
    statistic: Statistic,
    params: ChannelParams,
    cfg: SimConfig = SimConfig(),
    threads: int = 1,
) -> EstimateResult:
    return estimate_all([statistic], params, cfg, threads)[0]
