from dataclasses import dataclass
from egk.data import Method, MetricResult
from egk.egk import MethodLike, _method, envelope_cdf_result, envelope_pdf, log_k
from egk.errors import AccuracyError, DivergenceError, DomainError, SeriesTermError
from egk.params import ChannelParams, OmegaSplit, log_beta
from egk.specfun import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    integrate,
    log_ext_lower_gamma,
    log_ext_upper_gamma,
)
import logging
import math
import numpy as np
from numpy.random import default_rng
from scipy.special import binom, gammaln
from typing import Optional

logger = logging.getLogger(__name__)

DEFAULT_SERIES_TERMS = 8
VARIANTS = ("derived", "printed")
FORMS = ("printed", "product")
# below this crossing rate the fade duration is reported as unbounded
_LCR_FLOOR = 1e-300
# time samples generated per block by the sum-of-sinusoids simulator
_BLOCK = 4096


@dataclass(frozen=True)
class DopplerSpec:
    """
    Maximum Doppler shifts (Hz) of the shadowing (f_s) and multipath (f_x)
    components. The derivative scales are σ = √2·π·f.
    """

    f_s: float
    f_x: float

    def __post_init__(self):
        if not self.f_s >= 0 or not math.isfinite(self.f_s):
            raise DomainError(f"f_s must be finite and >= 0, got {self.f_s}")
        if not self.f_x > 0 or not math.isfinite(self.f_x):
            raise DomainError(f"f_x must be finite and > 0, got {self.f_x}")

    @property
    def sigma_s(self) -> float:
        return math.sqrt(2.0) * math.pi * self.f_s

    @property
    def sigma_x(self) -> float:
        return math.sqrt(2.0) * math.pi * self.f_x

    def scaled(self, c: float) -> "DopplerSpec":
        return DopplerSpec(c * self.f_s, c * self.f_x)


@dataclass(frozen=True)
class ProcessConfig:
    """
    Sampling of the simulated envelope process.
    @param duration Length of the time series in seconds
    @param dt Sampling interval in seconds
    @param n_sinusoids Sinusoids per Gaussian component
    @param seed Seed of the simulator's random stream
    """

    duration: float = 500.0
    dt: float = 1e-3
    n_sinusoids: int = 64
    seed: int = 42

    def __post_init__(self):
        if not self.dt > 0 or not self.duration > 0:
            raise DomainError(f"duration and dt must be positive, got {self.duration}, {self.dt}")
        if self.duration / self.dt < 1e4:
            raise DomainError(
                f"duration/dt must be at least 1e4 samples, got {self.duration / self.dt:.0f}"
            )
        if int(self.n_sinusoids) != self.n_sinusoids or self.n_sinusoids < 1:
            raise DomainError(f"n_sinusoids must be a positive integer, got {self.n_sinusoids}")

    def check(self, dop: DopplerSpec):
        f_max = max(dop.f_s, dop.f_x)
        if self.dt > 1.0 / (20.0 * f_max):
            raise DomainError(
                f"dt={self.dt} too coarse for a Doppler shift of {f_max} Hz, need dt <= {1.0 / (20.0 * f_max):.3g}"
            )


@dataclass(frozen=True, eq=False)
class TimeSeries:
    time: np.ndarray
    envelope: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.time[1] - self.time[0])

    @property
    def duration(self) -> float:
        return len(self.time) * self.dt


@dataclass(frozen=True)
class SecondOrderEstimate:
    lcr: float
    afd: float
    cdf: float
    crossings: int


def _split(params: ChannelParams, split: Optional[OmegaSplit]) -> OmegaSplit:
    split = split or OmegaSplit.default(params)
    split.check(params)
    return split


def _check_level(r: float):
    if not r > 0 or not math.isfinite(r):
        raise DomainError(f"level r must be finite and > 0, got {r}")


## Conditional variance


def _variance_weights(params: ChannelParams, split: OmegaSplit, dop: DopplerSpec):
    """
    Weights (A, B) of the shadowing and multipath derivative variances,
    A = σ_S²/(2ξ_s²)(Ω_S/β_s)^ξ_s and B = σ_X²/(2ξ²)(Ω_X/β)^ξ. A is zero
    without shadowing.
    """
    b = dop.sigma_x ** 2 / (2.0 * params.xi ** 2) * math.exp(
        params.xi * (math.log(split.omega_x) - log_beta(params.m, params.xi))
    )
    if params.shadowing is None:
        return 0.0, b
    a = dop.sigma_s ** 2 / (2.0 * params.xi_s ** 2) * math.exp(
        params.xi_s * (math.log(split.omega_s) - log_beta(params.m_s, params.xi_s))
    )
    return a, b


def cond_variance(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    u: float,
    form: str = "printed",
) -> float:
    """
    Variance of the envelope derivative given R = r and S = u.
    form="printed" is the per-component sum A u^(2-2ξ_s) + B (r/u)^(2-2ξ),
    which does not depend on r and u when ξ = ξ_s = 1.
    form="product" is the variance of Ṙ = ṠX + SẊ,
        A r² u^(-2ξ_s) + B r^(2-2ξ) u^(2ξ),
    the weight the LCR integral uses.
    """
    if form not in FORMS:
        raise DomainError(f"unknown form '{form}', use one of: {', '.join(FORMS)}")
    if not r > 0 or not u > 0:
        raise DomainError(f"cond_variance requires r > 0 and u > 0, got r={r}, u={u}")
    a, b = _variance_weights(params, _split(params, split), dop)
    xi_s = params.xi_s if params.shadowing is not None else 1.0
    if form == "product":
        return a * r * r * u ** (-2.0 * xi_s) + b * r ** (2.0 - 2.0 * params.xi) * u ** (
            2.0 * params.xi
        )
    return a * u ** (2.0 - 2.0 * xi_s) + b * (r / u) ** (2.0 - 2.0 * params.xi)


## Level crossing rate


def _log_gnm_pdf(x: float, m: float, xi: float, omega: float) -> float:
    lbo = log_beta(m, xi) - math.log(omega)
    lx = math.log(x)
    t = xi * (lbo + 2.0 * lx)
    if t > 700.0:
        return -math.inf
    return (
        math.log(2.0 * xi)
        + m * xi * lbo
        + (2.0 * m * xi - 1.0) * lx
        - float(gammaln(m))
        - math.exp(t)
    )


def _lcr_without_shadowing(
    params: ChannelParams, split: OmegaSplit, dop: DopplerSpec, r: float
) -> float:
    """R = √Ω_S·X, so L = p_R(r) √(Ω_S σ²_{Ẋ|X=r/√Ω_S}) / √(2π)"""
    _, b = _variance_weights(params, split, dop)
    x = r / math.sqrt(split.omega_s)
    variance = split.omega_s * b * x ** (2.0 - 2.0 * params.xi)
    return envelope_pdf(params, r) * math.sqrt(variance / (2.0 * math.pi))


def lcr_integral_result(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """
    Level crossing rate as the single integral over the shadowing value u,
        L = 1/√(2π) ∫ σ_{Ṙ|r,u} p_X(r/u)/u p_S(u) du,
    computed in θ with u = tan θ. σ_X is factored out of the root so the
    result scales exactly with the Doppler shifts.
    """
    _check_level(r)
    split = _split(params, split)
    if params.shadowing is None:
        return MetricResult(_lcr_without_shadowing(params, split, dop, r), Method.CLOSED_FORM, 0.0)

    a, b = _variance_weights(params, split, dop)
    sigma_x2 = dop.sigma_x ** 2
    log_a = math.log(a / sigma_x2) if a > 0 else -math.inf
    log_b = math.log(b / sigma_x2)
    lr = math.log(r)
    m, xi, m_s, xi_s = params.m, params.xi, params.m_s, params.xi_s

    def log_g(theta: float) -> float:
        u = math.tan(theta)
        if not 0.0 < u < math.inf:
            return -math.inf
        lu = math.log(u)
        value = (
            _log_gnm_pdf(u, m_s, xi_s, split.omega_s)
            + _log_gnm_pdf(r / u, m, xi, split.omega_x)
            - lu
            - 2.0 * math.log(math.cos(theta))
        )
        if value == -math.inf:
            return value
        multipath = log_b + (2.0 - 2.0 * xi) * lr + 2.0 * xi * lu
        if log_a > -math.inf:
            shadowing = log_a + 2.0 * lr - 2.0 * xi_s * lu
            return value + 0.5 * float(np.logaddexp(shadowing, multipath))
        return value + 0.5 * multipath

    # locate the bump of the integrand and integrate relative to its peak
    candidates = [math.atan(math.sqrt(split.omega_s)), math.atan(r / math.sqrt(split.omega_x))]
    candidates += list(np.linspace(0.0, 0.5 * math.pi, 129)[1:-1])
    logs = [log_g(t) for t in candidates]
    peak = int(np.argmax(logs))
    shift = logs[peak]
    if shift == -math.inf:
        return MetricResult(0.0, Method.QUADRATURE, 0.0)
    points = sorted({candidates[0], candidates[1], candidates[peak]})
    f = lambda t: math.exp(log_g(t) - shift)
    value, err = integrate(f, 0.0, 0.5 * math.pi, quad, points=points)
    scale = dop.sigma_x / math.sqrt(2.0 * math.pi) * math.exp(shift)
    return MetricResult(scale * value, Method.QUADRATURE, scale * err)


def lcr_integral(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return lcr_integral_result(params, split, dop, r, quad).value


class _SeriesTerms:
    """
    Terms of the incomplete-gamma expansion of the crossing-rate integral.
    With k = β_sβ/Ω, w = (k r²)^ξ, ρ = σ_S²ξ²/(σ_X²ξ_s²), Q_n = (ρw)^n,
    T = Q_1^(ξ_s/(ξ_s+ξ)) and P_n = (m_s-n) - (ξ/ξ_s)(m+n), the term n is
        C(1/2,n) K {Q_1^(1/2-n) γ(P_-n - 1/2, T, w, ξ/ξ_s)
                    + Q_1^n Γ(P_n + ξ/(2ξ_s), T, w, ξ/ξ_s)}
    with K = σ_X (k r²)^(mξ) w^(-1/2) / (√π Γ(m)Γ(m_s)). The printed variant
    uses the prefactor √(Ω_S ξ² σ_S²/(π β_s ξ_s²)) r^(2mξ) k^(mξ)/(Γ(m)Γ(m_s))
    and the terms Q_-n γ(P_-n - (ξ_s-1)/(2ξ_s), ...) + Q_(n-1/2) Γ(P_n - (ξ+1)/(2ξ_s), ...).
    """

    def __init__(
        self,
        params: ChannelParams,
        split: OmegaSplit,
        dop: DopplerSpec,
        r: float,
        variant: str,
        quad: QuadratureSpec,
    ):
        if variant not in VARIANTS:
            raise DomainError(f"unknown series variant '{variant}', use one of: {', '.join(VARIANTS)}")
        self.params = params
        self.variant = variant
        self.quad = quad
        m, xi, m_s, xi_s = params.m, params.xi, params.m_s, params.xi_s
        lk = log_k(params)
        lr = math.log(r)
        self.log_w = xi * (lk + 2.0 * lr)
        self.underflow = self.log_w > 700.0
        self.w = math.exp(min(self.log_w, 700.0))
        self.beta = xi / xi_s
        rho = (dop.sigma_s * xi) ** 2 / (dop.sigma_x * xi_s) ** 2
        self.log_q1 = math.log(rho) + self.log_w if rho > 0 else -math.inf
        self.T = math.exp(xi_s / (xi_s + xi) * self.log_q1) if rho > 0 else 0.0
        log_norm = float(gammaln(m)) + float(gammaln(m_s))
        if variant == "derived":
            self.log_prefactor = (
                math.log(dop.sigma_x)
                - 0.5 * math.log(math.pi)
                - log_norm
                + m * xi * (lk + 2.0 * lr)
                - 0.5 * self.log_w
            )
        else:
            if rho == 0:
                raise DomainError("the printed series needs a shadowing Doppler shift f_s > 0")
            self.log_prefactor = (
                0.5
                * (
                    math.log(split.omega_s)
                    + 2.0 * math.log(xi * dop.sigma_s / xi_s)
                    - math.log(math.pi)
                    - log_beta(m_s, xi_s)
                )
                + 2.0 * m * xi * lr
                + m * xi * lk
                - log_norm
            )

    def P(self, n: float) -> float:
        p = self.params
        return (p.m_s - n) - self.beta * (p.m + n)

    def _value(self, n: int, log_q: float, log_gamma) -> float:
        try:
            lg = log_gamma()
        except (AccuracyError, DivergenceError) as e:
            raise SeriesTermError(str(e), n)
        total = self.log_prefactor + log_q + lg
        return math.exp(total) if total < 709.0 else math.inf

    def lower(self, n: int) -> float:
        """Contribution of the region t < T"""
        if self.underflow or self.log_q1 == -math.inf:
            return 0.0
        if self.variant == "derived":
            alpha = self.P(-n) - 0.5
            log_q = (0.5 - n) * self.log_q1
        else:
            xi_s = self.params.xi_s
            alpha = self.P(-n) - (xi_s - 1.0) / (2.0 * xi_s)
            log_q = -n * self.log_q1
        return self._value(
            n, log_q, lambda: log_ext_lower_gamma(alpha, self.T, self.w, self.beta, self.quad)
        )

    def upper(self, n: int) -> float:
        """Contribution of the region t > T"""
        if self.underflow:
            return 0.0
        if self.variant == "derived":
            if n > 0 and self.log_q1 == -math.inf:
                return 0.0
            alpha = self.P(n) + self.beta / 2.0
            log_q = n * self.log_q1 if n > 0 else 0.0
        else:
            alpha = self.P(n) - (self.params.xi + 1.0) / (2.0 * self.params.xi_s)
            log_q = (n - 0.5) * self.log_q1
        return self._value(
            n, log_q, lambda: log_ext_upper_gamma(alpha, self.T, self.w, self.beta, self.quad)
        )

    def term(self, n: int) -> float:
        return float(binom(0.5, n)) * (self.lower(n) + self.upper(n))


def lcr_series_result(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    n_terms: int = DEFAULT_SERIES_TERMS,
    variant: str = "derived",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """
    Level crossing rate from the series truncated after n = n_terms; the
    error estimate is the magnitude of the last term.
    """
    _check_level(r)
    if int(n_terms) != n_terms or n_terms < 0:
        raise DomainError(f"n_terms must be a nonnegative integer, got {n_terms}")
    split = _split(params, split)
    if params.shadowing is None:
        return MetricResult(_lcr_without_shadowing(params, split, dop, r), Method.CLOSED_FORM, 0.0)
    terms = _SeriesTerms(params, split, dop, r, variant, quad)
    total, last = 0.0, 0.0
    for n in range(int(n_terms) + 1):
        last = terms.term(n)
        total += last
    note = "" if variant == "derived" else "printed series variant"
    return MetricResult(total, Method.SERIES, abs(last), note)


def lcr_series(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    n_terms: int = DEFAULT_SERIES_TERMS,
    variant: str = "derived",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return lcr_series_result(params, split, dop, r, n_terms, variant, quad).value


def lcr_approx(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    variant: str = "derived",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """The first two series orders written out: four incomplete-gamma terms"""
    _check_level(r)
    split = _split(params, split)
    if params.shadowing is None:
        return _lcr_without_shadowing(params, split, dop, r)
    terms = _SeriesTerms(params, split, dop, r, variant, quad)
    return (terms.lower(0) + terms.upper(0)) + 0.5 * (terms.lower(1) + terms.upper(1))


def lcr_result(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    method: MethodLike = Method.QUADRATURE,
    n_terms: int = DEFAULT_SERIES_TERMS,
    variant: str = "derived",
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    method = _method(method, (Method.QUADRATURE, Method.SERIES))
    if method is Method.SERIES:
        return lcr_series_result(params, split, dop, r, n_terms, variant, quad)
    return lcr_integral_result(params, split, dop, r, quad)


## Average fade duration


def afd_result(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    method: MethodLike = Method.QUADRATURE,
    n_terms: int = DEFAULT_SERIES_TERMS,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """Mean time spent below r per downward crossing, P(R <= r) / L(r)"""
    lcr = lcr_result(params, split, dop, r, method, n_terms, quad=quad)
    cdf = envelope_cdf_result(params, r, quad=quad)
    if lcr.value < _LCR_FLOOR:
        return MetricResult(
            math.inf,
            lcr.method,
            None,
            f"level crossing rate {lcr.value:.3g} below {_LCR_FLOOR:g}",
        )
    value = cdf.value / lcr.value
    rel = (cdf.err_est or 0.0) / max(cdf.value, _LCR_FLOOR) + (lcr.err_est or 0.0) / lcr.value
    return MetricResult(value, lcr.method, value * rel, lcr.note)


def afd(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    r: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return afd_result(params, split, dop, r, method, quad=quad).value


## Time-series validator


def _integer(value: float, name: str) -> int:
    if not float(value).is_integer():
        raise DomainError(f"the simulator needs an integer {name}, got {value}")
    return int(value)


class _SumOfSinusoids:
    """
    Independent unit-variance Gaussian processes with the isotropic
    scattering spectrum, g(t) = √(2/N) Σ cos(2π f cos(α_n) t + φ_n) with
    α_n = (2πn - π + θ)/N and random θ, φ_n.
    """

    def __init__(self, count: int, f: float, n_sinusoids: int, rng):
        n = np.arange(1, n_sinusoids + 1)
        theta = rng.uniform(-math.pi, math.pi, size=(count, 1))
        alpha = (2.0 * math.pi * n - math.pi + theta) / n_sinusoids
        self.omega = 2.0 * math.pi * f * np.cos(alpha)
        self.phase = rng.uniform(-math.pi, math.pi, size=(count, n_sinusoids))
        self.scale = math.sqrt(2.0 / n_sinusoids)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        arg = self.omega[:, :, None] * t[None, None, :] + self.phase[:, :, None]
        return self.scale * np.cos(arg).sum(axis=1)


def _gnm_process(
    sos: _SumOfSinusoids, t: np.ndarray, m: float, xi: float, omega: float
) -> np.ndarray:
    g = sos(t)
    power = 0.5 * (g * g).sum(axis=0)
    return np.sqrt(omega / math.exp(log_beta(m, xi))) * np.power(power, 0.5 / xi)


def simulate_process(
    params: ChannelParams,
    split: Optional[OmegaSplit],
    dop: DopplerSpec,
    cfg: ProcessConfig = ProcessConfig(),
) -> TimeSeries:
    """
    Envelope time series R(t) = S(t)·X(t). Each factor is built from 2m (or
    2m_s) Gaussian processes: their halved power sum is gamma(m) distributed
    and is mapped to the generalized Nakagami-m law.
    """
    split = _split(params, split)
    cfg.check(dop)
    m = _integer(params.m, "m")
    rng = default_rng(cfg.seed)
    shadowing = None
    if params.shadowing is not None:
        m_s = _integer(params.m_s, "m_s")
        shadowing = _SumOfSinusoids(2 * m_s, dop.f_s, cfg.n_sinusoids, rng)
    multipath = _SumOfSinusoids(2 * m, dop.f_x, cfg.n_sinusoids, rng)

    count = int(round(cfg.duration / cfg.dt))
    time = np.arange(count) * cfg.dt
    envelope = np.empty(count)
    logger.debug(f"Simulating {count} samples of {params} with {dop}")
    for start in range(0, count, _BLOCK):
        t = time[start : start + _BLOCK]
        x = _gnm_process(multipath, t, params.m, params.xi, split.omega_x)
        if shadowing is None:
            s = math.sqrt(split.omega_s)
        else:
            s = _gnm_process(shadowing, t, params.m_s, params.xi_s, split.omega_s)
        envelope[start : start + _BLOCK] = s * x
    return TimeSeries(time, envelope)


def empirical_second_order(series: TimeSeries, r: float) -> SecondOrderEstimate:
    """Crossing rate, fade duration and CDF of a sampled envelope at level r"""
    _check_level(r)
    below = series.envelope <= r
    crossings = int(np.count_nonzero(~below[:-1] & below[1:]))
    duration = series.duration
    cdf = float(np.count_nonzero(below)) / len(below)
    lcr = crossings / duration
    afd = cdf * duration / crossings if crossings else math.inf
    return SecondOrderEstimate(lcr, afd, cdf, crossings)


def export_time_series(series: TimeSeries, path: str):
    np.savetxt(
        path,
        np.column_stack((series.time, series.envelope)),
        delimiter=",",
        header="time,envelope",
        comments="",
        fmt="%.9g",
    )
