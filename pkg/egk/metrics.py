from dataclasses import dataclass
from egk import foxh
from egk.data import Method, MetricResult
from egk.egk import (
    MethodLike,
    _fallback,
    _log_gamma_norm,
    _method,
    log_k,
    snr_cdf_result,
    snr_pdf,
)
from egk.errors import ConvergenceError, DomainError, SpecError
from egk.params import ChannelParams
from egk.specfun import DEFAULT_QUADRATURE, QuadratureSpec, integrate
import logging
import math
from scipy.special import gammaincc, gammaln

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModulationSpec:
    """
    Binary modulation with conditional error probability Γ(b, aγ) / (2Γ(b)).
    a = 1/2 or 1 selects orthogonal or antipodal signalling, b = 1/2 or 1
    coherent or non-coherent detection.
    """

    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            if getattr(self, name) not in (0.5, 1.0):
                raise DomainError(f"{name} must be 0.5 or 1, got {getattr(self, name)}")


DPSK = ModulationSpec(1.0, 1.0)
BPSK = ModulationSpec(1.0, 0.5)


@dataclass(frozen=True)
class CapacitySpec:
    bandwidth_w: float
    gamma_bar: float

    def __post_init__(self):
        if not self.bandwidth_w > 0 or not math.isfinite(self.bandwidth_w):
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth_w}")
        if not self.gamma_bar > 0 or not math.isfinite(self.gamma_bar):
            raise DomainError(f"gamma_bar must be positive, got {self.gamma_bar}")


def _check_gamma_bar(gamma_bar: float):
    if not gamma_bar > 0 or not math.isfinite(gamma_bar):
        raise DomainError(f"gamma_bar must be positive, got {gamma_bar}")


def _log_aof_factor(m: float, xi: float) -> float:
    return float(
        gammaln(m) + gammaln(m + 2.0 / xi) - 2.0 * gammaln(m + 1.0 / xi)
    )


def aof(params: ChannelParams) -> float:
    """Amount of fading var(G) / E[G]², independent of Ω"""
    value = _log_aof_factor(params.m, params.xi)
    if params.shadowing is not None:
        value += _log_aof_factor(params.m_s, params.xi_s)
    return math.exp(value) - 1.0


def aof_result(params: ChannelParams) -> MetricResult:
    return MetricResult(aof(params), Method.CLOSED_FORM, 0.0)


def abep_result(
    params: ChannelParams,
    gamma_bar: float,
    mod: ModulationSpec = DPSK,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """
    Average bit error probability. The quadrature path averages
    Γ(b, aγ)/(2Γ(b)) over the SNR density in y = γ/γ̄; the Fox-H path uses
    H^{2,2}_{2,3}[β_sβ/(aγ̄)] / (2Γ(b)Γ(m_s)Γ(m)).
    """
    method = _method(method, (Method.QUADRATURE, Method.FOXH))
    _check_gamma_bar(gamma_bar)
    unit = params.with_omega(1.0)

    def by_quadrature():
        f = lambda y: 0.5 * float(gammaincc(mod.b, mod.a * gamma_bar * y)) * snr_pdf(
            unit, 1.0, y, quad=quad
        )
        value, err = integrate(f, 0.0, math.inf, quad, points=[1.0])
        return MetricResult(value, Method.QUADRATURE, err)

    if method is Method.QUADRATURE:
        return by_quadrature()
    try:
        h, err = foxh.foxh_eval_with_error(
            foxh.foxh_abep_spec(params, mod.b),
            math.exp(log_k(unit)) / (mod.a * gamma_bar),
            rel_tol=quad.rel_tol,
        )
    except (ConvergenceError, SpecError) as e:
        return _fallback(params, e, Method.QUADRATURE, by_quadrature)
    norm = 2.0 * math.exp(float(gammaln(mod.b)) + _log_gamma_norm(params))
    return MetricResult(h / norm, Method.FOXH, err / norm)


def abep(
    params: ChannelParams,
    gamma_bar: float,
    mod: ModulationSpec = DPSK,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return abep_result(params, gamma_bar, mod, method, quad).value


def outage_probability_result(
    params: ChannelParams,
    gamma_bar: float,
    gamma_th: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    _check_gamma_bar(gamma_bar)
    if gamma_th < 0 or math.isnan(gamma_th):
        raise DomainError(f"outage threshold must be >= 0, got {gamma_th}")
    return snr_cdf_result(params, gamma_bar, gamma_th, method, quad)


def outage_probability(
    params: ChannelParams,
    gamma_bar: float,
    gamma_th: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return outage_probability_result(params, gamma_bar, gamma_th, method, quad).value


def outage_capacity_result(
    params: ChannelParams,
    cap: CapacitySpec,
    c_th: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """Probability that the instantaneous capacity falls below c_th bits/s"""
    if c_th < 0 or math.isnan(c_th):
        raise DomainError(f"capacity threshold must be >= 0, got {c_th}")
    gamma_th = math.expm1(c_th / cap.bandwidth_w * math.log(2.0))
    return snr_cdf_result(params, cap.gamma_bar, gamma_th, method, quad)


def outage_capacity(
    params: ChannelParams,
    cap: CapacitySpec,
    c_th: float,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return outage_capacity_result(params, cap, c_th, method, quad).value


def avg_capacity_result(
    params: ChannelParams,
    cap: CapacitySpec,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> MetricResult:
    """
    Ergodic capacity W·E[log2(1 + γ)] in bits/s.
    """
    method = _method(method, (Method.QUADRATURE, Method.FOXH))
    unit = params.with_omega(1.0)
    w_per_ln2 = cap.bandwidth_w / math.log(2.0)

    def by_quadrature():
        f = lambda y: math.log1p(cap.gamma_bar * y) * snr_pdf(unit, 1.0, y, quad=quad)
        value, err = integrate(f, 0.0, math.inf, quad, points=[1.0])
        return MetricResult(w_per_ln2 * value, Method.QUADRATURE, w_per_ln2 * err)

    if method is Method.QUADRATURE:
        return by_quadrature()
    try:
        h, err = foxh.foxh_eval_with_error(
            foxh.foxh_capacity_spec(params),
            math.exp(log_k(unit)) / cap.gamma_bar,
            rel_tol=quad.rel_tol,
        )
    except (ConvergenceError, SpecError) as e:
        return _fallback(params, e, Method.QUADRATURE, by_quadrature)
    scale = w_per_ln2 / math.exp(_log_gamma_norm(params))
    return MetricResult(scale * h, Method.FOXH, scale * err)


def avg_capacity(
    params: ChannelParams,
    cap: CapacitySpec,
    method: MethodLike = Method.QUADRATURE,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    return avg_capacity_result(params, cap, method, quad).value
